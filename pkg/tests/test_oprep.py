import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, graph_from_matrix, load, small_matrices
from kmsgraph import kernels
from kmsgraph.graph import count_paths, parse_graph, vertex_matrix
from kmsgraph.oprep import (
    MAX_BASIS,
    build_rep,
    check_homomorphism,
    grouped_weighted_trace,
    nf_image,
    tail_bound,
    verify_tck,
    weighted_trace,
)
from kmsgraph.pathtable import PathTableTooLarge
from kmsgraph.spectral import NotSupercritical, graph_spectrum, resolvent
from kmsgraph.words import NormalForm, multiply, reduce_word


def one_loop():
    return parse_graph("vertex x\nedge x x\n")


def vertex_nf(g, v):
    p = g.vertex_path(v)
    return NormalForm(p, p)


def test_one_loop_is_truncated_shift():
    rep = build_rep(one_loop(), 3)
    assert rep.size == 4
    T = rep.T["e0"].toarray()
    assert T.tolist() == np.diag([1.0, 1.0, 1.0], -1).tolist()
    assert rep.Q["x"].toarray().tolist() == np.eye(4).tolist()


def test_example2_basis_size(ex2):
    rep = build_rep(ex2, 2)
    oracle = sum(count_paths(ex2, n, v, w) for n in range(3) for v in ex2.vertices for w in ex2.vertices)
    # A^2 = [[4, 5], [0, 9]], so 2 + 6 + 18
    assert rep.size == oracle == 26


def test_basis_order(ex2):
    rep = build_rep(ex2, 3)
    basis = rep.basis()
    assert [str(p) for p in basis[:2]] == ["v", "w"]
    lengths = [len(p) for p in basis]
    assert lengths == sorted(lengths)
    idx = ex2.edge_index
    for a, b in zip(basis, basis[1:]):
        if len(a) == len(b) and len(a):
            assert [idx[e] for e in a.edges] < [idx[e] for e in b.edges]


def test_depth_one_truncation(ex2):
    rep = build_rep(ex2, 1)
    t = rep.table
    for e in ex2.edges:
        T = rep.T[e.id]
        for p in np.flatnonzero(t.length == 1):
            assert T[:, p].nnz == 0
    report = verify_tck(rep)
    assert report.ok and report.checked == ex2.n


def test_build_rep_errors(ex2):
    with pytest.raises(ValueError):
        build_rep(ex2, 0)
    with pytest.raises(PathTableTooLarge):
        build_rep(load("three_vertex"), 9)
    assert MAX_BASIS == 100_000


def test_generator_action(fixture_graph):
    g = fixture_graph
    rep = build_rep(g, 3)
    t = rep.table
    total = sum(rep.Q.values())
    assert abs(total - sp.identity(rep.size)).max() == 0
    for p in range(rep.size):
        mu = t.path(p)
        for v in g.vertices:
            col = rep.Q[v][:, p].toarray().ravel()
            assert col[p] == (1.0 if mu.range == v else 0.0) and col.sum() == col[p]
        for e in g.edges:
            col = rep.T[e.id][:, p].toarray().ravel()
            if e.source == mu.range and len(mu) < 3:
                target = t.id_of(g.path([e.id] + list(mu.edges)))
                assert col[target] == 1.0 and col.sum() == 1.0
            else:
                assert col.sum() == 0.0


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_tck_relations_depth5(name):
    g = load(name)
    report = verify_tck(build_rep(g, 5))
    assert report.ok, report.violations
    assert all(r >= 1 for r in report.gap_ranks.values())
    assert report.to_dict()["ok"] is True


def test_tck_detects_broken_family(ex2):
    rep = build_rep(ex2, 3)
    rep.T["e0"] = rep.T["e0"] * 2.0
    assert not verify_tck(rep).ok


def test_gap_projection(ex2):
    rep = build_rep(ex2, 4)
    t = rep.table
    for v in ex2.vertices:
        gap = rep.Q[v].copy()
        for e in ex2.edges:
            if e.range == v:
                gap = gap - rep.T[e.id] @ rep.T[e.id].T
        for p in t.ids_up_to(3):
            h = np.zeros(rep.size)
            h[p] = 1.0
            out = gap @ h
            if t.path(p) == ex2.vertex_path(v):
                assert np.array_equal(out, h)
            else:
                assert not out.any()


def test_range_projections_orthogonal_single_vertex():
    g = load("single_loop3")
    rep = build_rep(g, 4)
    keep = rep.table.ids_up_to(3)
    R = [rep.T[e.id] @ rep.T[e.id].T for e in g.edges]
    assert len(R) == 3
    for i in range(3):
        assert abs((R[i] @ R[i] - R[i])[keep][:, keep]).max() == 0
        for j in range(i + 1, 3):
            assert (R[i] @ R[j])[keep][:, keep].nnz == 0


def test_nf_image_matches_generators(ex2):
    rep = build_rep(ex2, 4)
    x = reduce_word(ex2, "s:e5 s:e2 s*:e3")
    M = (rep.T["e5"] @ rep.T["e2"] @ rep.T["e3"].T).toarray()
    assert np.array_equal(nf_image(rep, x).toarray(), M)
    assert nf_image(rep, None).nnz == 0
    assert np.array_equal(nf_image(rep, vertex_nf(ex2, "v")).toarray(), rep.Q["v"].toarray())


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_homomorphism_small(name):
    report = check_homomorphism(build_rep(load(name), 4), 2, sample=60)
    assert report.ok
    assert report.action_checked > 0 and report.checked > 0 and report.sampled_matrix_products == 60


def test_homomorphism_requires_depth(ex2):
    with pytest.raises(ValueError):
        check_homomorphism(build_rep(ex2, 3), 2)


def test_full_basis_is_not_truncation_exact(ex2):
    # without restricting the domain the truncation shows up
    rep = build_rep(ex2, 4)
    mus, nus = rep.table.normal_forms(2)
    _, bad_full, _ = kernels.homomorphism_scan(rep.table, mus, nus, 4)
    _, bad_exact, _ = kernels.homomorphism_scan(rep.table, mus, nus, 2)
    assert bad_full > 0 and bad_exact == 0


def test_sampled_products_by_hand(three):
    rep = build_rep(three, 4)
    keep = rep.table.ids_up_to(2)
    x = reduce_word(three, "s:e9 s*:e2")
    y = reduce_word(three, "s:e3 s:e10")
    lhs = nf_image(rep, multiply(x, y))[:, keep]
    rhs = (nf_image(rep, x) @ nf_image(rep, y))[:, keep]
    assert abs(lhs - rhs).max() == 0


def test_weighted_trace_vertex_is_partial_neumann_sum(ex2):
    beta = math.log(5)
    eps = np.array([0.3, 0.7])
    A = vertex_matrix(ex2).A.astype(float)
    for L in range(1, 6):
        rep = build_rep(ex2, L)
        partial = sum(np.linalg.matrix_power(A / 5, n) @ eps for n in range(L + 1))
        for i, v in enumerate(ex2.vertices):
            got = weighted_trace(rep, beta, eps, vertex_nf(ex2, v))
            assert got == pytest.approx(partial[i], abs=1e-13)
            assert grouped_weighted_trace(ex2, beta, eps, vertex_nf(ex2, v), L) == pytest.approx(got, abs=1e-13)


def test_weighted_trace_single_vertex_edge_projection():
    N = 3
    g = load("single_loop3")
    beta = math.log(2 * N)
    # m = 1 needs eps = 1 - N e^{-beta} = 1/2
    eps = np.array([0.5])
    x = reduce_word(g, "s:e0 s*:e0")
    rep = build_rep(g, 8)
    got = weighted_trace(rep, beta, eps, x)
    assert abs(got - math.exp(-beta)) <= tail_bound(g, beta, [1.0], x, 8) + 1e-15
    assert abs(got - math.exp(-beta)) < 1e-3


def test_weighted_trace_off_diagonal(ex2):
    rep = build_rep(ex2, 4)
    x = NormalForm(ex2.path(["e0"]), ex2.path(["e1"]))
    assert weighted_trace(rep, 2.0, [0.5, 0.5], x) == 0.0
    assert grouped_weighted_trace(ex2, 2.0, [0.5, 0.5], x, 4) == 0.0
    assert weighted_trace(rep, 2.0, [0.5, 0.5], None) == 0.0


def test_weighted_trace_errors(ex2):
    rep = build_rep(ex2, 3)
    with pytest.raises(NotSupercritical):
        weighted_trace(rep, math.log(3), [0.5, 0.5], vertex_nf(ex2, "v"))
    with pytest.raises(ValueError):
        weighted_trace(rep, 2.0, [-0.5, 0.5], vertex_nf(ex2, "v"))
    with pytest.raises(ValueError):
        grouped_weighted_trace(ex2, 2.0, [0.5], vertex_nf(ex2, "v"), 3)


def _diagonal_forms(g, k):
    rep = build_rep(g, k)
    return [NormalForm(p, p) for p in rep.basis()]


@pytest.mark.parametrize("name", ["example1", "example2", "three_vertex", "single_loop3", "two_cycle"])
def test_weighted_trace_convergence(name):
    g = load(name)
    rho = graph_spectrum(g).rho
    beta = math.log(rho) + 0.7
    res = resolvent(vertex_matrix(g).A, beta)
    eps = np.full(g.n, 1.0)
    eps /= eps @ res.y
    m = res.solve(eps)
    for x in _diagonal_forms(g, 2):
        target = math.exp(-beta * len(x.mu)) * m[g.index[x.mu.source]]
        errs = [abs(grouped_weighted_trace(g, beta, eps, x, L) - target) for L in range(4, 11)]
        assert all(b <= a for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= tail_bound(g, beta, m, x, 10) * (1 + 1e-9) + 1e-15


@pytest.mark.parametrize("name", ["example2", "single_loop3", "two_cycle", "trivial_tail"])
def test_grouped_matches_matrix_trace(name):
    g = load(name)
    beta = math.log(max(graph_spectrum(g).rho, 1e-6)) + 0.5
    eps = np.linspace(0.2, 1.0, g.n)
    rep = build_rep(g, 5)
    for x in _diagonal_forms(g, 2):
        assert grouped_weighted_trace(g, beta, eps, x, 5) == pytest.approx(
            weighted_trace(rep, beta, eps, x), rel=1e-12, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(small_matrices(max_n=3, max_mult=2), st.floats(0.1, 1.5))
def test_grouped_trace_random(A, gap):
    g = graph_from_matrix(A)
    rho = graph_spectrum(g).rho
    beta = (math.log(rho) if rho > 0 else 0.0) + gap
    eps = np.ones(g.n)
    rep = build_rep(g, 4)
    for v in g.vertices:
        x = vertex_nf(g, v)
        assert grouped_weighted_trace(g, beta, eps, x, 4) == pytest.approx(
            weighted_trace(rep, beta, eps, x), rel=1e-12, abs=1e-15)
