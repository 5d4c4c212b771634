"""KMS states of the gauge dynamics on the Toeplitz algebra of a graph.

A KMS_beta state ``phi`` is determined by its vertex masses ``m_v = phi(p_v)``
through ``phi(s_mu s_nu^*) = [mu == nu] e^{-beta |mu|} m_{s(mu)}``.  The
admissible ``m`` are the unit subinvariant vectors; ``phi`` factors through
the Cuntz-Krieger quotient exactly when ``A m = e^beta m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import (
    DirectedGraph,
    GraphError,
    Path,
    decompose,
    hereditary_closure,
    quotient_graph,
    vertex_matrix,
)
from .pathtable import PathTable
from .spectral import DEFAULT_TOL, graph_spectrum, resolvent
from .subinvariance import dedupe_points, enumerate_subinvariant
from .words import NormalForm, Token, reduce_word, word_of

__all__ = [
    "ConsistencyError",
    "KmsStateDescriptor",
    "KmsSimplex",
    "Segment",
    "PhaseDiagram",
    "CylinderMeasure",
    "make_state",
    "simplex_at",
    "quotient_recursion",
    "phase_diagram",
    "evaluate_state",
    "evaluate_word",
    "kms_condition_check",
    "kms_residual",
    "cylinder_measure",
    "round_sig",
    "KmsScanReport",
    "kms_identity_scan",
]

SIG_DIGITS = 12
# Supercritical extreme points from the closed form and from vertex
# enumeration must agree to this many multiples of tol.
CROSS_CHECK_FACTOR = 100.0


class ConsistencyError(AssertionError):
    """Two independent computations of the same object disagree."""


def round_sig(x: float | None, digits: int = SIG_DIGITS):
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.{digits}g}")


@dataclass(frozen=True)
class KmsStateDescriptor:
    beta: float
    m: np.ndarray = field(compare=False)
    epsilon: np.ndarray = field(compare=False)
    factors: bool
    graph: DirectedGraph = field(repr=False)

    def mass(self, v: str) -> float:
        return float(self.m[self.graph.index[v]])

    def to_dict(self) -> dict:
        vs = self.graph.vertices
        return {
            "m": {v: round_sig(float(x)) for v, x in zip(vs, self.m)},
            "epsilon": {v: round_sig(float(x)) for v, x in zip(vs, self.epsilon)},
            "factors": bool(self.factors),
        }

    @classmethod
    def from_dict(cls, g: DirectedGraph, beta: float, data: dict) -> "KmsStateDescriptor":
        m = np.array([data["m"][v] for v in g.vertices], dtype=np.float64)
        eps = np.array([data["epsilon"][v] for v in g.vertices], dtype=np.float64)
        return cls(beta, m, eps, bool(data["factors"]), g)


def _factor_tol(tol: float) -> float:
    return 10.0 * tol


def make_state(g: DirectedGraph, beta: float, m, tol: float = DEFAULT_TOL, A=None) -> KmsStateDescriptor:
    """Descriptor for vertex masses ``m``; validates subinvariance and normalisation."""
    if A is None:
        A = vertex_matrix(g).A
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (g.n,):
        raise ValueError(f"mass vector must have length {g.n}")
    eps = m - math.exp(-beta) * (A @ m)
    slack = _factor_tol(tol)
    if np.any(m < -slack) or np.any(eps < -slack) or abs(m.sum() - 1.0) > slack:
        raise ValueError("not a unit subinvariant vector at this beta")
    factors = float(np.abs(eps).sum()) <= slack
    return KmsStateDescriptor(float(beta), m, eps, factors, g)


@dataclass(frozen=True)
class KmsSimplex:
    beta: float
    extreme_states: tuple[KmsStateDescriptor, ...]
    method: str
    # indices of critical extreme states not matching Perron data of any component
    unexplained: tuple[int, ...] = ()

    @property
    def dimension(self) -> int:
        return len(self.extreme_states) - 1

    @property
    def empty(self) -> bool:
        return not self.extreme_states

    @property
    def graph_algebra_states(self) -> tuple[KmsStateDescriptor, ...]:
        return tuple(d for d in self.extreme_states if d.factors)

    def masses(self) -> np.ndarray:
        if not self.extreme_states:
            return np.zeros((0, 0))
        return np.array([d.m for d in self.extreme_states])

    def to_dict(self) -> dict:
        return {
            "beta": round_sig(self.beta),
            "toeplitz_dimension": self.dimension,
            "method": self.method,
            "extreme_states": [d.to_dict() for d in self.extreme_states],
            "graph_algebra_states": [d.to_dict() for d in self.graph_algebra_states],
        }


def _hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    if len(P) == 0 and len(Q) == 0:
        return 0.0
    if len(P) == 0 or len(Q) == 0:
        return math.inf
    D = np.max(np.abs(P[:, None, :] - Q[None, :, :]), axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def _regime(rho: float, beta: float, tol: float) -> int:
    """-1 subcritical, 0 critical (within the tolerance band), 1 supercritical."""
    eb = math.exp(beta)
    if abs(eb - rho) <= tol * max(1.0, rho):
        return 0
    return 1 if eb > rho else -1


def _closed_form(A: np.ndarray, beta: float, rho: float, tol: float) -> np.ndarray:
    return resolvent(A, beta, tol, rho=rho).extreme_masses()


def simplex_at(g: DirectedGraph, beta: float, tol: float = DEFAULT_TOL, *, cross_check: bool = True) -> KmsSimplex:
    """Extreme KMS_beta states, sorted lexicographically by mass vector.

    Supercritical ``beta`` uses the closed form ``m^v = (1 - e^{-beta}A)^{-1} delta_v / y_v``;
    otherwise the subinvariance polytope is enumerated.  With ``cross_check``
    the other route (vertex enumeration, resp. the hereditary-quotient
    recursion) is run as well and the two must agree.
    """
    A = vertex_matrix(g).A
    spec = graph_spectrum(g, tol)
    regime = _regime(spec.rho, beta, tol)
    if regime > 0:
        pts = dedupe_points(_closed_form(A, beta, spec.rho, tol), 10 * tol)
        method = "closed-form"
        if cross_check and g.n <= 16:
            poly = enumerate_subinvariant(A, beta, tol).extreme_points
            gap = _hausdorff(pts, poly)
            if gap > CROSS_CHECK_FACTOR * tol * max(1.0, float(np.abs(pts).max())):
                raise ConsistencyError(f"closed form and vertex enumeration differ by {gap:g}")
    else:
        pts = enumerate_subinvariant(A, beta, tol).extreme_points
        method = "polytope"
        if cross_check:
            rec = quotient_recursion(g, beta, tol).masses()
            gap = _hausdorff(pts, rec.reshape(-1, g.n) if len(rec) else rec)
            if gap > CROSS_CHECK_FACTOR * tol:
                raise ConsistencyError(f"quotient recursion and vertex enumeration differ by {gap:g}")
    states = tuple(make_state(g, beta, m, tol, A) for m in pts)
    unexplained = _unexplained(g, beta, states, tol) if regime <= 0 else ()
    return KmsSimplex(float(beta), states, method, unexplained)


def _unexplained(g: DirectedGraph, beta: float, states, tol: float) -> tuple[int, ...]:
    """States whose restriction to some critical component is not a multiple of its Perron vector."""
    cd = decompose(g)
    spec = graph_spectrum(g, tol)
    eb = math.exp(beta)
    crit = [i for i, r in enumerate(spec.per_component_rho)
            if not cd.trivial[i] and abs(r - eb) <= tol * max(1.0, r)]
    bad = []
    for k, d in enumerate(states):
        for i in crit:
            idx = [g.index[v] for v in cd.components[i]]
            part = d.m[idx]
            total = part.sum()
            if total <= 10 * tol:
                continue
            x = spec.perron_vectors[i]
            if np.max(np.abs(part / total - x)) > 1e-6:
                bad.append(k)
                break
    return tuple(bad)


def quotient_recursion(g: DirectedGraph, beta: float, tol: float = DEFAULT_TOL) -> KmsSimplex:
    """Remove the hereditary closure ``H`` of the components with ``ln rho(A_C) > beta``
    and solve on ``E \\ H``; masses are zero-extended over ``H``."""
    cd = decompose(g)
    spec = graph_spectrum(g, tol)
    eb = math.exp(beta)
    hot = [v for i, comp in enumerate(cd.components)
           if spec.per_component_rho[i] > eb + tol * max(1.0, eb) for v in comp]
    if not hot:
        pts = enumerate_subinvariant(vertex_matrix(g).A, beta, tol).extreme_points
        states = tuple(make_state(g, beta, m, tol) for m in pts)
        return KmsSimplex(float(beta), states, "direct")
    H = hereditary_closure(g, hot)
    if len(H) == g.n:
        return KmsSimplex(float(beta), (), "quotient")
    sub = quotient_graph(g, H)
    inner = quotient_recursion(sub, beta, tol)
    A = vertex_matrix(g).A
    states = []
    for d in inner.extreme_states:
        m = np.zeros(g.n)
        for v, x in zip(sub.vertices, d.m):
            m[g.index[v]] = x
        states.append(make_state(g, beta, m, tol, A))
    states.sort(key=lambda d: tuple(d.m))
    return KmsSimplex(float(beta), tuple(states), "quotient")


@dataclass(frozen=True)
class Segment:
    """A breakpoint (``lo == hi``) or an open interval; ``None`` bounds are infinite."""

    lo: float | None
    hi: float | None
    probe: float
    simplex: KmsSimplex
    paper_unconfirmed: bool = False

    @property
    def is_point(self) -> bool:
        return self.lo is not None and self.lo == self.hi

    def to_dict(self) -> dict:
        out: dict = {}
        if self.is_point:
            out["beta_point"] = round_sig(self.lo)
        else:
            out["beta_range"] = [round_sig(self.lo), round_sig(self.hi)]
        out["probe_beta"] = round_sig(self.probe)
        out["toeplitz_dimension"] = self.simplex.dimension
        out["extreme_states"] = [d.to_dict() for d in self.simplex.extreme_states]
        out["graph_algebra_states"] = [d.to_dict() for d in self.simplex.graph_algebra_states]
        out["paper_unconfirmed"] = self.paper_unconfirmed
        return out


@dataclass(frozen=True)
class PhaseDiagram:
    graph: DirectedGraph = field(repr=False)
    rho: float
    breakpoints: tuple[float, ...]
    segments: tuple[Segment, ...]
    existence_floor: float | None  # None means -infinity

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.graph.vertices),
            "rho": round_sig(self.rho),
            "breakpoints": [round_sig(b) for b in self.breakpoints],
            "existence_floor": round_sig(self.existence_floor),
            "segments": [s.to_dict() for s in self.segments],
        }

    @classmethod
    def from_dict(cls, g: DirectedGraph, data: dict) -> "PhaseDiagram":
        if list(g.vertices) != data["vertices"]:
            raise ValueError("diagram was computed for a different vertex set")
        segs = []
        for s in data["segments"]:
            if "beta_point" in s:
                lo = hi = s["beta_point"]
            else:
                lo, hi = s["beta_range"]
            probe = s["probe_beta"]
            states = tuple(KmsStateDescriptor.from_dict(g, probe, d) for d in s["extreme_states"])
            segs.append(Segment(lo, hi, probe, KmsSimplex(probe, states, "loaded"),
                                bool(s.get("paper_unconfirmed", False))))
        return cls(g, data["rho"], tuple(data["breakpoints"]), tuple(segs), data["existence_floor"])

    def factoring_betas(self) -> list[float]:
        return [s.probe for s in self.segments if s.simplex.graph_algebra_states]

    def segment_at(self, beta: float) -> Segment | None:
        for s in self.segments:
            if s.is_point and s.lo == beta:
                return s
        return None


def phase_diagram(g: DirectedGraph, tol: float = DEFAULT_TOL) -> PhaseDiagram:
    """Probe every breakpoint ``ln rho(A_C)``, the midpoint of each gap between
    them, one point below the first and one point above ``ln rho(A)``."""
    spec = graph_spectrum(g, tol)
    logs = sorted(math.log(r) for r in spec.per_component_rho if r > 0)
    bps: list[float] = []
    for b in logs:
        if not bps or b - bps[-1] > tol:
            bps.append(b)
    probes: list[tuple[float | None, float | None, float]] = []
    if not bps:
        probes.append((None, None, 0.0))
    else:
        probes.append((None, bps[0], bps[0] - 1.0))
        for i, b in enumerate(bps):
            probes.append((b, b, b))
            if i + 1 < len(bps):
                probes.append((b, bps[i + 1], 0.5 * (b + bps[i + 1])))
        probes.append((bps[-1], None, bps[-1] + 1.0))
    segs = []
    for lo, hi, beta in probes:
        sx = simplex_at(g, beta, tol)
        below = not bps or beta < bps[0]
        segs.append(Segment(lo, hi, beta, sx, below and not sx.empty))
    if any(s.paper_unconfirmed for s in segs):
        floor = None
    else:
        floor = min((s.lo for s in segs if s.is_point and not s.simplex.empty), default=math.inf)
    return PhaseDiagram(g, spec.rho, tuple(bps), tuple(segs), floor)


def _check_path(g: DirectedGraph, p: Path) -> None:
    if p.is_vertex:
        g.check_vertex(p.range)
    else:
        q = g.path(p.edges)
        if q != p:
            raise GraphError(f"path {p} has wrong endpoints")


def evaluate_state(d: KmsStateDescriptor, mu: Path, nu: Path) -> float:
    """``phi(s_mu s_nu^*)``."""
    _check_path(d.graph, mu)
    _check_path(d.graph, nu)
    if mu != nu:
        return 0.0
    return math.exp(-d.beta * len(mu)) * d.mass(mu.source)


def _value_of_nf(d: KmsStateDescriptor, x: NormalForm | None) -> float:
    if x is None:
        return 0.0
    return evaluate_state(d, x.mu, x.nu)


def evaluate_word(d: KmsStateDescriptor, word) -> float:
    """Value on a word (string or tokens), a ``NormalForm``, or a linear
    combination given as ``[(coefficient, word), ...]``."""
    if isinstance(word, NormalForm) or word is None:
        return _value_of_nf(d, word)
    if isinstance(word, str):
        return _value_of_nf(d, reduce_word(d.graph, word))
    word = list(word)
    if word and isinstance(word[0], tuple) and len(word[0]) == 2 and isinstance(word[0][0], (int, float)):
        return sum(float(c) * evaluate_word(d, w) for c, w in word)
    return _value_of_nf(d, reduce_word(d.graph, word))


def _nf_or_zero(mu: Path, nu: Path) -> NormalForm | None:
    return NormalForm(mu, nu) if mu.source == nu.source else None


def kms_residual(d: KmsStateDescriptor, mu: Path, nu: Path, alpha: Path, gamma: Path) -> float:
    """``|phi(ab) - e^{-beta(|mu| - |nu|)} phi(ba)|`` for ``a = s_mu s_nu^*``, ``b = s_alpha s_gamma^*``.

    Both products are formed as generator words and reduced, so the check
    exercises the rewriting as well as the state formula.
    """
    for p in (mu, nu, alpha, gamma):
        _check_path(d.graph, p)
    a = _nf_or_zero(mu, nu)
    b = _nf_or_zero(alpha, gamma)
    if a is None or b is None:
        return 0.0
    wa: list[Token] = word_of(a)
    wb: list[Token] = word_of(b)
    lhs = evaluate_word(d, wa + wb)
    rhs = math.exp(-d.beta * (len(mu) - len(nu))) * evaluate_word(d, wb + wa)
    return abs(lhs - rhs)


def kms_condition_check(d: KmsStateDescriptor, mu: Path, nu: Path, alpha: Path, gamma: Path,
                        tol: float = DEFAULT_TOL) -> bool:
    return kms_residual(d, mu, nu, alpha, gamma) <= tol


@dataclass(frozen=True)
class CylinderMeasure:
    """``Z(lam) -> e^{-beta |lam|} m_{s(lam)}`` on all paths of length ``<= depth``.

    ``defect[p]`` is ``value(Z(lam)) - sum_e value(Z(lam e))`` at internal nodes.
    """

    beta: float
    m: np.ndarray = field(compare=False)
    table: PathTable = field(repr=False, compare=False)
    values: np.ndarray = field(repr=False, compare=False)
    defect: np.ndarray = field(repr=False, compare=False)

    @property
    def depth(self) -> int:
        return self.table.depth

    def value(self, lam: Path) -> float:
        return float(self.values[self.table.id_of(lam)])

    @property
    def total_mass(self) -> float:
        return float(self.values[: self.table.graph.n].sum())

    @property
    def max_defect(self) -> float:
        return float(np.abs(self.defect).max()) if len(self.defect) else 0.0

    def additive(self, tol: float) -> bool:
        return self.max_defect <= tol


def cylinder_measure(d: KmsStateDescriptor, depth: int, *, require_factoring: bool = True) -> CylinderMeasure:
    g = d.graph
    if g.has_sinks or g.has_sources:
        raise GraphError("cylinder sets need a graph without sinks or sources")
    if require_factoring and not d.factors:
        raise ValueError("state does not factor through the graph algebra; the assignment is not additive")
    t = PathTable(g, depth)
    values = np.exp(-d.beta * t.length) * d.m[t.src]
    internal = np.flatnonzero(t.length < depth)
    kids = t.child[internal]
    sums = np.where(kids >= 0, values[np.maximum(kids, 0)], 0.0).sum(axis=1)
    defect = values[internal] - sums
    return CylinderMeasure(d.beta, d.m, t, values, defect)


@dataclass(frozen=True)
class KmsScanReport:
    """Worst ``|phi(ab) - e^{-beta(|mu|-|nu|)} phi(ba)|`` per state over a family of pairs."""

    max_length: int
    mode: str
    normal_forms: int
    pairs: int
    nonzero_pairs: int
    worst: tuple[float, ...]

    def ok(self, tol: float) -> bool:
        return all(w <= tol for w in self.worst)


def kms_identity_scan(states: Sequence[KmsStateDescriptor], max_length: int, *, mode: str = "support",
                      table: PathTable | None = None) -> KmsScanReport:
    """Check the KMS identity for every pair ``a = s_mu s_nu^*``, ``b = s_al s_ga^*``
    with all four paths of length ``<= max_length``.

    ``mode="all"`` visits every ordered pair.  ``mode="support"`` visits, for
    each ``a``, only the ``b`` for which ``ab`` or ``ba`` can be a nonzero
    diagonal element; for every other pair both sides vanish.
    """
    from . import kernels

    if not states:
        raise ValueError("no states to check")
    g = states[0].graph
    if any(d.graph != g for d in states):
        raise ValueError("states belong to different graphs")
    if table is None or table.depth < 2 * max_length:
        table = PathTable(g, 2 * max_length)
    mus, nus = table.normal_forms(max_length)
    masses = np.array([d.m for d in states])
    betas = np.array([d.beta for d in states])
    if mode == "all":
        worst, pairs, nonzero = kernels.kms_scan_all(table, mus, nus, masses, betas)
    elif mode == "support":
        worst, pairs, nonzero = kernels.kms_scan_support(table, mus, nus, masses, betas, max_length)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return KmsScanReport(max_length, mode, len(mus), int(pairs), int(nonzero),
                         tuple(float(w) for w in worst))
