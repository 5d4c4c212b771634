import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    FIXTURE_NAMES,
    LN2,
    LN3,
    LN4,
    SHIFT_FIXTURES,
    graph_from_matrix,
    load,
    random_strongly_connected,
    small_matrices,
)
from kmsgraph.graph import GraphError, enumerate_paths, parse_graph, vertex_matrix
from kmsgraph.kms import (
    KmsStateDescriptor,
    PhaseDiagram,
    cylinder_measure,
    evaluate_state,
    evaluate_word,
    kms_condition_check,
    kms_identity_scan,
    kms_residual,
    make_state,
    phase_diagram,
    quotient_recursion,
    round_sig,
    simplex_at,
)
from kmsgraph.oprep import build_rep, nf_image
from kmsgraph.spectral import graph_spectrum, perron_vector, resolvent
from kmsgraph.subinvariance import enumerate_subinvariant
from kmsgraph.words import NormalForm, multiply

TOL = 1e-9


def masses(sx):
    return sorted(tuple(round(float(x), 9) for x in d.m) for d in sx.extreme_states)


def factoring(sx):
    return sorted(tuple(round(float(x), 9) for x in d.m) for d in sx.graph_algebra_states)


# Example 1 has vertex order (w, v); Example 2 has (v, w)

def test_example1_critical(ex1):
    sx = simplex_at(ex1, LN3)
    assert masses(sx) == [(1.0, 0.0)]
    assert factoring(sx) == [(1.0, 0.0)]
    assert sx.dimension == 0


def test_example1_diagram(ex1):
    pd = phase_diagram(ex1)
    assert pd.breakpoints == pytest.approx((LN2, LN3))
    assert pd.factoring_betas() == pytest.approx([LN3])
    assert pd.existence_floor == pytest.approx(LN3)
    assert pd.segment_at(pd.breakpoints[0]).simplex.empty


def test_example2_supercritical(ex2):
    sx = simplex_at(ex2, LN4)
    assert sx.dimension == 1 and sx.method == "closed-form"
    assert not sx.graph_algebra_states


def test_example2_at_ln3(ex2):
    sx = simplex_at(ex2, LN3)
    assert masses(sx) == [(0.5, 0.5), (1.0, 0.0)]
    assert factoring(sx) == [(0.5, 0.5)]
    assert sx.method == "polytope"


def test_example2_between_breakpoints(ex2):
    sx = simplex_at(ex2, math.log(2.5))
    assert masses(sx) == [(1.0, 0.0)]
    assert not sx.graph_algebra_states
    at2 = simplex_at(ex2, LN2)
    assert masses(at2) == [(1.0, 0.0)] and factoring(at2) == [(1.0, 0.0)]
    assert simplex_at(ex2, 0.5).empty


def test_example2_diagram(ex2):
    pd = phase_diagram(ex2)
    assert pd.breakpoints == pytest.approx((LN2, LN3))
    assert pd.existence_floor == pytest.approx(LN2)
    summary = [(s.is_point, s.simplex.dimension, len(s.simplex.graph_algebra_states)) for s in pd.segments]
    assert summary == [(False, -1, 0), (True, 0, 1), (False, 0, 0), (True, 1, 1), (False, 1, 0)]
    assert pd.segments[-1].lo == pytest.approx(LN3) and pd.segments[-1].hi is None
    assert pd.segments[0].lo is None


def test_quotient_recursion_examples(ex2, three):
    q = quotient_recursion(ex2, math.log(2.5))
    assert q.method == "quotient" and masses(q) == [(1.0, 0.0)]
    assert quotient_recursion(ex2, 0.4).empty
    beta = math.log(2.5)
    q3 = quotient_recursion(three, beta)
    direct = enumerate_subinvariant(vertex_matrix(three).A, beta).extreme_points
    assert masses(q3) == sorted(tuple(round(float(x), 9) for x in m) for m in direct)
    assert all(d.mass("w") == 0 for d in q3.extreme_states)


def test_three_vertex_factoring_states(three):
    pd = phase_diagram(three)
    assert pd.factoring_betas() == pytest.approx([LN2, LN3, LN4])
    expected = {LN2: (1.0, 0.0, 0.0), LN3: (0.5, 0.5, 0.0), LN4: (0.2, 0.4, 0.4)}
    for b, m in expected.items():
        (d,) = pd.segment_at(pd.breakpoints[[round(x, 12) for x in pd.breakpoints].index(round(b, 12))]
                             ).simplex.graph_algebra_states
        assert np.allclose(d.m, m, atol=1e-9)


def test_single_vertex_diagram():
    g = load("single_loop3")
    pd = phase_diagram(g)
    assert pd.breakpoints == pytest.approx((LN3,))
    crit = pd.segments[1]
    assert crit.is_point and masses(crit.simplex) == [(1.0,)] and crit.simplex.graph_algebra_states
    assert pd.segments[2].simplex.dimension == 0
    assert pd.segments[0].simplex.empty


def test_paper_unconfirmed_marks():
    nil = parse_graph("vertex a\nvertex b\nedge a b\n")
    pd = phase_diagram(nil)
    assert pd.breakpoints == () and pd.existence_floor is None
    assert pd.segments[0].paper_unconfirmed
    # a trivial vertex outside every hereditary closure keeps states below the breakpoints
    side = parse_graph("vertex x\nvertex t\nedge x x\nedge x x\nedge x t\n")
    pd2 = phase_diagram(side)
    assert pd2.segments[0].paper_unconfirmed and not pd2.segments[0].simplex.empty
    assert pd2.existence_floor is None
    assert not any(s.paper_unconfirmed for s in phase_diagram(load("trivial_tail")).segments)


def test_make_state_validation(ex2):
    with pytest.raises(ValueError):
        make_state(ex2, LN3, [0.0, 1.0])
    with pytest.raises(ValueError):
        make_state(ex2, LN3, [0.5])
    with pytest.raises(ValueError):
        make_state(ex2, LN3, [0.6, 0.6])
    d = make_state(ex2, LN3, [0.5, 0.5])
    assert d.factors and np.allclose(d.epsilon, 0)


def test_evaluate_state_examples(ex2):
    d = make_state(ex2, LN3, [0.5, 0.5])
    assert evaluate_state(d, ex2.vertex_path("v"), ex2.vertex_path("v")) == 0.5
    e5 = ex2.path(["e5"])
    assert evaluate_state(d, e5, e5) == pytest.approx(1 / 6, abs=1e-15)
    assert evaluate_state(d, ex2.path(["e0"]), ex2.path(["e1"])) == 0.0
    assert evaluate_state(d, ex2.path(["e0", "e1"]), ex2.path(["e0"])) == 0.0
    with pytest.raises(GraphError):
        evaluate_state(d, ex2.path(["e0"]).__class__(("e0",), "w", "w"), e5)


def test_evaluate_word_examples(ex2):
    d = simplex_at(ex2, LN4).extreme_states[0]
    for e in ex2.edges:
        assert evaluate_word(d, f"s*:{e.id} s:{e.id}") == pytest.approx(d.mass(e.source), abs=1e-15)
    assert evaluate_word(d, "s:e0 s*:e1") == 0.0
    assert evaluate_word(d, "s:e2 s*:e3") == 0.0
    combo = [(2.0, "p:v"), (-1.0, "s:e0 s*:e0")]
    assert evaluate_word(d, combo) == pytest.approx(2 * d.mass("v") - math.exp(-LN4) * d.mass("v"))
    assert evaluate_word(d, None) == 0.0


def test_evaluate_word_product_case_one(ex2):
    # (s_mu s_nu^*)(s_alpha s_gamma^*) with nu a prefix of alpha
    d = simplex_at(ex2, LN4).extreme_states[1]
    x = NormalForm(ex2.path(["e5", "e2"]), ex2.path(["e3"]))
    y = NormalForm(ex2.path(["e3", "e4"]), ex2.path(["e2", "e4"]))
    prod = multiply(x, y)
    assert prod == NormalForm(ex2.path(["e5", "e2", "e4"]), ex2.path(["e2", "e4"]))
    rep = build_rep(ex2, 6)
    keep = rep.table.ids_up_to(3)
    assert abs(nf_image(rep, prod)[:, keep] - (nf_image(rep, x) @ nf_image(rep, y))[:, keep]).max() == 0
    assert evaluate_word(d, "s:e5 s:e2 s*:e3 s:e3 s:e4 s*:e4 s*:e2") == evaluate_state(d, prod.mu, prod.nu) == 0.0
    assert evaluate_word(d, x) == 0.0
    diag = multiply(x, NormalForm(ex2.path(["e3", "e4"]), ex2.path(["e5", "e2", "e4"])))
    assert diag.is_diagonal
    assert evaluate_word(d, diag) == pytest.approx(math.exp(-3 * LN4) * d.mass("w"))


def test_kms_condition_examples(ex2):
    for d in simplex_at(ex2, LN3).extreme_states:
        v = ex2.vertex_path("v")
        assert kms_condition_check(d, v, v, v, v)
        for e in ex2.edges:
            p = ex2.path([e.id])
            s = ex2.vertex_path(e.source)
            lhs = evaluate_word(d, f"s:{e.id} s*:{e.id}")
            assert lhs == pytest.approx(math.exp(-LN3) * d.mass(e.source))
            assert kms_residual(d, p, s, s, p) <= 1e-15


def _all_paths(g, k):
    return [p for n in range(k + 1) for p in enumerate_paths(g, n)]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_kms_identity_python_path(name):
    g = load(name)
    pd = phase_diagram(g)
    paths = _all_paths(g, 1)
    for seg in pd.segments:
        for d in seg.simplex.extreme_states:
            for mu in paths:
                for nu in paths:
                    for al in paths:
                        for ga in paths:
                            assert kms_residual(d, mu, nu, al, ga) <= 1e-12


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_kernel_scan_agrees_with_python(name):
    g = load(name)
    states = [d for s in phase_diagram(g).segments for d in s.simplex.extreme_states]
    rng = np.random.default_rng(3)
    paths = _all_paths(g, 2)
    for d in states:
        worst = 0.0
        for _ in range(400):
            mu, nu, al, ga = (paths[i] for i in rng.integers(len(paths), size=4))
            worst = max(worst, kms_residual(d, mu, nu, al, ga))
        assert worst <= 1e-12
    report = kms_identity_scan(states, 2)
    assert report.ok(1e-12) and report.nonzero_pairs > 0


@pytest.mark.parametrize("name", ["two_cycle", "trivial_tail", "single_loop3"])
def test_support_scan_matches_all_pairs(name):
    g = load(name)
    states = [d for s in phase_diagram(g).segments for d in s.simplex.extreme_states]
    sup = kms_identity_scan(states, 2, mode="support")
    full = kms_identity_scan(states, 2, mode="all")
    assert full.pairs == full.normal_forms ** 2
    assert sup.nonzero_pairs == full.nonzero_pairs
    assert np.allclose(sup.worst, full.worst, atol=1e-15)


def test_identity_is_not_vacuous(ex2):
    # the identity pins the exponent: pairing the formula at beta with the
    # twist at another inverse temperature fails on s_e, s_e^*
    d = make_state(ex2, LN3, [0.5, 0.5])
    for e in ex2.edges:
        lhs = evaluate_word(d, f"s:{e.id} s*:{e.id}")
        rhs = evaluate_word(d, f"s*:{e.id} s:{e.id}")
        assert abs(lhs - math.exp(-LN3) * rhs) <= 1e-15
        assert abs(lhs - math.exp(-(LN3 + 0.3)) * rhs) > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2).filter(lambda m: sum(m) > 0.1),
       st.floats(-1.0, 3.0))
def test_formula_satisfies_identity_for_any_masses(m, beta):
    # positivity is what subinvariance buys; the identity itself holds for
    # every mass vector once the state has the diagonal form
    ex2 = load("example2")
    m = np.array(m) / sum(m)
    d = KmsStateDescriptor(beta, m, m - math.exp(-beta) * (vertex_matrix(ex2).A @ m), False, ex2)
    assert kms_identity_scan([d], 1, mode="all").ok(1e-12)


def test_scan_errors(ex2):
    with pytest.raises(ValueError):
        kms_identity_scan([], 2)
    with pytest.raises(ValueError):
        kms_identity_scan([make_state(ex2, LN3, [0.5, 0.5])], 1, mode="some")


def test_cylinders_single_vertex():
    g = load("single_loop3")
    (d,) = simplex_at(g, LN3).extreme_states
    c = cylinder_measure(d, 4)
    for n in range(5):
        for lam in enumerate_paths(g, n):
            assert c.value(lam) == pytest.approx(3.0 ** -n, rel=1e-14)
    assert c.additive(1e-12) and c.total_mass == pytest.approx(1.0)


def test_cylinders_example2(ex2):
    (d,) = simplex_at(ex2, LN3).graph_algebra_states
    c = cylinder_measure(d, 6)
    assert c.value(ex2.vertex_path("v")) == pytest.approx(0.5)
    assert c.value(ex2.vertex_path("w")) == pytest.approx(0.5)
    assert c.max_defect <= 1e-12
    (d2,) = simplex_at(ex2, LN2).graph_algebra_states
    c2 = cylinder_measure(d2, 6)
    # oracle: add up the children of every internal node directly
    for n in range(6):
        for lam in enumerate_paths(ex2, n):
            kids = sum(c2.value(ex2.extend(lam, e)) for e in ex2.edges_into(lam.source))
            assert abs(c2.value(lam) - kids) <= 1e-12


def test_cylinder_errors(ex2):
    d = simplex_at(ex2, LN4).extreme_states[0]
    with pytest.raises(ValueError):
        cylinder_measure(d, 3)
    c = cylinder_measure(d, 3, require_factoring=False)
    assert c.max_defect > 1e-9
    tail = load("trivial_tail")
    with pytest.raises(GraphError):
        cylinder_measure(simplex_at(tail, 2.0).extreme_states[0], 3)


@pytest.mark.parametrize("name", SHIFT_FIXTURES)
def test_cylinder_additivity_iff_factoring(name):
    g = load(name)
    for seg in phase_diagram(g).segments:
        for d in seg.simplex.extreme_states:
            c = cylinder_measure(d, 5, require_factoring=False)
            assert c.additive(1e-10) == d.factors
            if not d.factors:
                assert c.max_defect > TOL


def test_supercritical_agreement_random():
    rng = np.random.default_rng(20)
    for _ in range(20):
        A = rng.integers(0, 3, size=(int(rng.integers(1, 5)),) * 2)
        g = graph_from_matrix(A)
        rho = graph_spectrum(g).rho
        beta = (math.log(rho) if rho > 0 else 0.0) + float(rng.uniform(0.05, 2.0))
        sx = simplex_at(g, beta)
        poly = enumerate_subinvariant(A, beta).extreme_points
        assert len(sx.extreme_states) == g.n == len(poly)
        D = np.max(np.abs(sx.masses()[:, None, :] - poly[None, :, :]), axis=2)
        assert D.min(axis=1).max() <= 10 * TOL
        y = resolvent(A, beta).y
        for d in sx.extreme_states:
            assert abs(d.epsilon @ y - 1) <= TOL


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_subcritical_agreement(name):
    g = load(name)
    A = vertex_matrix(g).A
    for seg in phase_diagram(g).segments:
        if seg.probe > math.log(max(graph_spectrum(g).rho, 1e-300)):
            continue
        rec = quotient_recursion(g, seg.probe)
        direct = enumerate_subinvariant(A, seg.probe).extreme_points
        assert len(rec.extreme_states) == len(direct)
        if len(direct):
            D = np.max(np.abs(rec.masses()[:, None, :] - direct[None, :, :]), axis=2)
            assert D.min(axis=1).max() <= 10 * TOL


@settings(max_examples=30, deadline=None)
@given(small_matrices(max_n=4, max_mult=2), st.floats(-0.5, 1.5))
def test_factoring_flag_is_gap_vanishing(A, beta):
    g = graph_from_matrix(A)
    for d in simplex_at(g, beta).extreme_states:
        gap = d.m - math.exp(-beta) * (A @ d.m)
        assert d.factors == bool(np.all(np.abs(gap) <= 10 * TOL))
        assert np.all(d.m >= 0) and abs(d.m.sum() - 1) <= TOL


def test_efw_uniqueness():
    rng = np.random.default_rng(5)
    graphs = [load("single_loop3"), load("two_cycle")]
    graphs += [graph_from_matrix(random_strongly_connected(rng, max_n=5)) for _ in range(6)]
    for g in graphs:
        pd = phase_diagram(g)
        fb = pd.factoring_betas()
        rho, x = perron_vector(vertex_matrix(g).A)
        assert fb == pytest.approx([math.log(rho)])
        (d,) = pd.segment_at(pd.breakpoints[-1]).simplex.graph_algebra_states
        assert np.max(np.abs(d.m - x)) <= 1e-8


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_diagram_json_round_trip(name):
    g = load(name)
    pd = phase_diagram(g)
    data = json.loads(json.dumps(pd.to_dict()))
    again = PhaseDiagram.from_dict(g, data)
    assert again.to_dict() == data
    for seg in data["segments"]:
        assert ("beta_point" in seg) != ("beta_range" in seg)
        assert seg["toeplitz_dimension"] == len(seg["extreme_states"]) - 1


def test_diagram_from_dict_checks_vertices(ex1, ex2):
    with pytest.raises(ValueError):
        PhaseDiagram.from_dict(ex1, phase_diagram(ex2).to_dict())


def test_round_sig():
    assert round_sig(1 / 3) == 0.333333333333
    assert round_sig(math.inf) is None and round_sig(None) is None
    assert round_sig(123456789.123456789) == 123456789.123
