"""Truncated finite-path representation on ``span{h_mu : |mu| <= L}``.

``Q_v h_mu = [r(mu) == v] h_mu`` and ``T_e h_mu = h_{e mu}`` when
``s(e) == r(mu)`` and ``|mu| < L``; vectors of length ``L`` are sent to zero,
so relations are only exact on the sub-basis of length ``<= L - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .graph import DirectedGraph, vertex_matrix
from .pathtable import PathTable
from .spectral import DEFAULT_TOL, NotSupercritical, graph_spectrum
from .words import NormalForm, multiply

__all__ = [
    "MAX_BASIS",
    "TruncatedRep",
    "TckReport",
    "HomomorphismReport",
    "build_rep",
    "verify_tck",
    "nf_image",
    "check_homomorphism",
    "weighted_trace",
    "grouped_weighted_trace",
    "tail_bound",
]

MAX_BASIS = 100_000


@dataclass(frozen=True)
class TruncatedRep:
    graph: DirectedGraph = field(repr=False)
    depth: int
    table: PathTable = field(repr=False)
    Q: dict = field(repr=False)
    T: dict = field(repr=False)

    @property
    def size(self) -> int:
        return self.table.size

    @property
    def exact_depth(self) -> int:
        return self.depth - 1

    def basis(self):
        return [self.table.path(p) for p in range(self.size)]


def build_rep(g: DirectedGraph, L: int) -> TruncatedRep:
    if L < 1:
        raise ValueError("depth must be at least 1")
    table = PathTable(g, L, max_paths=MAX_BASIS)
    P = table.size
    Q = {}
    for i, v in enumerate(g.vertices):
        Q[v] = sp.diags((table.rng == i).astype(np.float64), format="csr")
    # T_e prepends e: h_mu -> h_{e mu}
    ids = table._ids
    seqs = table._seqs
    cols: dict[int, list[int]] = {k: [] for k in range(len(g.edges))}
    rows: dict[int, list[int]] = {k: [] for k in range(len(g.edges))}
    e_src = [g.index[e.source] for e in g.edges]
    e_rng = [g.index[e.range] for e in g.edges]
    by_src: dict[int, list[int]] = {}
    for k, s in enumerate(e_src):
        by_src.setdefault(s, []).append(k)
    for p in range(P):
        if table.length[p] >= L:
            continue
        for k in by_src.get(int(table.rng[p]), ()):
            cols[k].append(p)
            rows[k].append(ids[((k,) + seqs[p], e_rng[k])])
    T = {}
    for k, e in enumerate(g.edges):
        data = np.ones(len(rows[k]))
        T[e.id] = sp.csr_matrix((data, (rows[k], cols[k])), shape=(P, P))
    return TruncatedRep(g, L, table, Q, T)


@dataclass
class TckReport:
    depth: int
    checked: int
    violations: list[str]
    gap_ranks: dict[str, int]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "checked_basis_vectors": self.checked,
            "violations": list(self.violations),
            "gap_ranks": dict(self.gap_ranks),
            "ok": self.ok,
        }


def _restricted(M: sp.spmatrix, keep: np.ndarray) -> sp.csr_matrix:
    return sp.csr_matrix(M)[keep][:, keep]


def _max_abs(M) -> float:
    M = sp.csr_matrix(M)
    return float(np.abs(M.data).max()) if M.nnz else 0.0


def verify_tck(rep: TruncatedRep, tol: float = DEFAULT_TOL) -> TckReport:
    """Check the Toeplitz-Cuntz-Krieger relations on vectors of length ``<= L - 1``.

    (i) ``T_e^* T_e = Q_{s(e)}``; (ii) the gap ``Q_v - sum_{r(e)=v} T_e T_e^*``
    is the projection onto ``h_v``; (iii) the range projections ``T_e T_e^*``
    are mutually orthogonal; and ``sum_v Q_v = 1``.
    """
    g = rep.graph
    t = rep.table
    keep = np.flatnonzero(t.length <= rep.exact_depth)
    bad: list[str] = []
    P = rep.size
    total = sum(rep.Q.values())
    if _max_abs(total - sp.identity(P)) > tol:
        bad.append("sum of vertex projections is not the identity")
    ranges = {}
    for e in g.edges:
        Te = rep.T[e.id]
        d = _restricted(Te.T @ Te - rep.Q[e.source], keep)
        if _max_abs(d) > tol:
            bad.append(f"T_{e.id}^* T_{e.id} != Q_{e.source}")
        ranges[e.id] = Te @ Te.T
    gap_ranks = {}
    for i, v in enumerate(g.vertices):
        gap = rep.Q[v].copy()
        for e in g.edges:
            if e.range == v:
                gap = gap - ranges[e.id]
        gap = _restricted(gap, keep)
        expected = sp.csr_matrix(([1.0], ([i], [i])), shape=gap.shape)
        if _max_abs(gap - expected) > tol:
            bad.append(f"gap projection at {v} is not the projection onto h_{v}")
        # the gap equals a diagonal 0/1 matrix here, so its rank is its trace
        dense_diag = gap.diagonal()
        gap_ranks[v] = int(np.sum(np.abs(dense_diag - 1.0) <= tol))
        if gap_ranks[v] < 1:
            bad.append(f"gap projection at {v} vanishes")
    ids = [e.id for e in g.edges]
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            if _max_abs(_restricted(ranges[ids[a]] @ ranges[ids[b]], keep)) > tol:
                bad.append(f"range projections of {ids[a]} and {ids[b]} are not orthogonal")
    return TckReport(rep.depth, len(keep), bad, gap_ranks)


def nf_image(rep: TruncatedRep, x: NormalForm | None) -> sp.csr_matrix:
    """Matrix of ``T_mu T_nu^*`` (or ``Q_v`` for a vertex pair)."""
    P = rep.size
    if x is None:
        return sp.csr_matrix((P, P))
    M = rep.Q[x.mu.source]
    for e in reversed(x.mu.edges):
        M = rep.T[e] @ M
    for e in reversed(x.nu.edges):
        M = M @ rep.T[e].T
    return sp.csr_matrix(M)


@dataclass
class HomomorphismReport:
    nf_length: int
    normal_forms: int
    action_checked: int
    action_mismatches: int
    pairs: int
    checked: int
    violations: int
    sampled_matrix_products: int
    sampled_mismatches: int

    @property
    def ok(self) -> bool:
        return self.action_mismatches == 0 and self.violations == 0 and self.sampled_mismatches == 0


def _partial_map(M) -> np.ndarray:
    """``f[j] = i`` for the single entry ``M[i, j] == 1`` of column ``j``, or -1.

    Raises if ``M`` is not a 0/1 matrix with at most one entry per row and
    column; for such matrices composing the maps is matrix multiplication.
    """
    M = sp.csc_matrix(M)
    M.eliminate_zeros()
    counts = np.diff(M.indptr)
    if np.any(counts > 1) or np.any(M.data != 1.0):
        raise ValueError("not a partial permutation matrix")
    rows = M.indices
    if len(np.unique(rows)) != len(rows):
        raise ValueError("not a partial permutation matrix")
    f = np.full(M.shape[1], -1, dtype=np.int64)
    cols = np.flatnonzero(counts)
    f[cols] = rows[M.indptr[cols]]
    return f


def _compose(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Map of ``F @ G`` from the maps of ``F`` and ``G``."""
    out = np.full(len(g), -1, dtype=np.int64)
    ok = g >= 0
    out[ok] = f[g[ok]]
    return out


def _path_operators(rep: TruncatedRep, max_length: int) -> dict[int, sp.csr_matrix]:
    """Sparse ``T_mu`` for every path id with ``|mu| <= max_length`` (``Q_v`` for vertices)."""
    t = rep.table
    g = rep.graph
    ops: dict[int, sp.csr_matrix] = {}
    for p in t.ids_up_to(max_length).tolist():
        if t.length[p] == 0:
            ops[p] = sp.csr_matrix(rep.Q[g.vertices[t.rng[p]]])
        else:
            e = g.edges[t.edges[p, t.length[p] - 1]].id
            ops[p] = sp.csr_matrix(ops[int(t.parent[p])] @ rep.T[e])
    return ops


def check_homomorphism(rep: TruncatedRep, nf_length: int, *, sample: int = 300, seed: int = 0) -> HomomorphismReport:
    """``pi(x y) == pi(x) pi(y)`` for all normal forms with ``|mu|, |nu| <= nf_length``,
    on basis vectors of length ``<= L - nf_length``.  There ``pi(y) h`` has length
    at most ``L``, so truncation affects both sides alike.

    The kernel's action of every ``pi(x)`` on the whole basis is first
    compared with ``T_mu T_nu^*`` formed from the sparse generator matrices.
    The all-pairs comparison then runs in the kernel, and a random sample of
    pairs is also multiplied out as sparse matrices.
    """
    t = rep.table
    dom = rep.depth - nf_length
    if 2 * nf_length > rep.depth:
        raise ValueError("representation too shallow for these normal forms")
    mus, nus = t.normal_forms(nf_length)
    P = t.size
    basis = np.arange(P, dtype=np.int32)
    ops = _path_operators(rep, nf_length)
    fwd = {p: _partial_map(M) for p, M in ops.items()}
    adj = {p: _partial_map(M.T) for p, M in ops.items()}
    act_bad = 0
    for a, b in zip(mus.tolist(), nus.tolist()):
        expected = _compose(fwd[a], adj[b])
        got = kernels.nf_apply(t, np.full(P, a, np.int32), np.full(P, b, np.int32), basis)
        act_bad += int(np.sum(expected != got))
    act_checked = P * len(mus)
    checked, violations, _ = kernels.homomorphism_scan(t, mus, nus, dom)
    rng = np.random.default_rng(seed)
    k = len(mus)
    n_pairs = min(sample, k * k)
    keep = t.ids_up_to(dom)
    s_bad = 0
    for _ in range(n_pairs):
        i, j = rng.integers(k, size=2)
        x = NormalForm(t.path(int(mus[i])), t.path(int(nus[i])))
        y = NormalForm(t.path(int(mus[j])), t.path(int(nus[j])))
        lhs = nf_image(rep, multiply(x, y))[:, keep]
        rhs = (nf_image(rep, x) @ nf_image(rep, y))[:, keep]
        if _max_abs(lhs - rhs) > 0.5:
            s_bad += 1
    return HomomorphismReport(nf_length, k, act_checked, act_bad, k * k, checked, violations, n_pairs, s_bad)


def _supercritical(g: DirectedGraph, beta: float, tol: float) -> float:
    rho = graph_spectrum(g, tol).rho
    if math.exp(beta) <= rho * (1.0 + 1e-12):
        raise NotSupercritical(f"beta={beta} is not above ln rho(A)")
    return rho


def weighted_trace(rep: TruncatedRep, beta: float, epsilon, x: NormalForm | None, tol: float = DEFAULT_TOL) -> float:
    """``omega_L(x) = sum_{|mu| <= L} e^{-beta |mu|} eps_{s(mu)} <x h_mu, h_mu>``."""
    _supercritical(rep.graph, beta, tol)
    eps = np.asarray(epsilon, dtype=np.float64)
    if eps.shape != (rep.graph.n,) or np.any(eps < -tol):
        raise ValueError("epsilon must be a nonnegative vector over the vertices")
    t = rep.table
    weights = np.exp(-beta * t.length) * eps[t.src]
    diag = nf_image(rep, x).diagonal()
    return float(weights @ diag)


def grouped_weighted_trace(g: DirectedGraph, beta: float, epsilon, x: NormalForm | None, L: int,
                           tol: float = DEFAULT_TOL) -> float:
    """``weighted_trace`` on ``build_rep(g, L)`` without materialising the basis.

    ``<x h_mu, h_mu>`` is 1 exactly when ``x = s_k s_k^*`` with ``k`` a prefix
    of ``mu`` and 0 otherwise, so the diagonal sum only depends on how many
    basis vectors ``h_{k mu'}`` there are for each length and source; those
    counts are entries of ``A^j``.  Usable where the basis exceeds ``MAX_BASIS``.
    """
    _supercritical(g, beta, tol)
    eps = np.asarray(epsilon, dtype=np.float64)
    if eps.shape != (g.n,) or np.any(eps < -tol):
        raise ValueError("epsilon must be a nonnegative vector over the vertices")
    if L < 0:
        raise ValueError("depth must be nonnegative")
    if x is None or x.mu != x.nu or len(x.mu) > L:
        return 0.0
    k = len(x.mu)
    A = vertex_matrix(g).A.astype(np.float64)
    row = np.zeros(g.n)
    row[g.index[x.mu.source]] = 1.0
    total = 0.0
    for j in range(L - k + 1):
        # row[w] = number of paths mu' of length j with range s(k) and source w
        total += math.exp(-beta * (k + j)) * float(row @ eps)
        row = row @ A
    return total


def tail_bound(g: DirectedGraph, beta: float, m, x: NormalForm | None, L: int) -> float:
    """Upper bound for ``|omega_L(x) - phi(x)|`` when ``m = (1 - e^{-beta}A)^{-1} eps``.

    The error on ``s_k s_k^*`` is exactly ``e^{-beta|k|} ((e^{-beta}A)^{K+1} m)_{s(k)}``
    with ``K = L - |k|``; this returns ``e^{-beta|k|} ||(e^{-beta}A)^{K+1}||_inf ||m||_inf``,
    which decays like ``(rho(A) e^{-beta})^K``.
    """
    if x is None or x.mu != x.nu:
        return 0.0
    k = len(x.mu)
    K = L - k
    if K < 0:
        return math.inf
    B = math.exp(-beta) * vertex_matrix(g).A.astype(np.float64)
    P = np.linalg.matrix_power(B, K + 1)
    return math.exp(-beta * k) * float(np.abs(P).sum(axis=1).max()) * float(np.max(np.abs(m)))
