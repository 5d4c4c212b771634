"""Preimage growth of the backward shift on infinite paths, and its growth rates.

For an infinite path ``x`` the shift ``sigma`` deletes the first edge, so
``|sigma^{-n}(x)|`` is the number of length-``n`` paths with source ``r(x)``:
``c_n(v) = sum_u A^n(u, v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import DirectedGraph, GraphError, decompose, enumerate_paths, int_matrix_power, vertex_matrix
from .spectral import DEFAULT_TOL, graph_spectrum

__all__ = [
    "MAX_DEPTH",
    "BRUTE_FORCE_DEPTH",
    "PathSpaceError",
    "PreimageGrowth",
    "ThomsenBounds",
    "preimage_counts",
    "thomsen_bounds",
    "beta_l_exact",
]

MAX_DEPTH = 64
BRUTE_FORCE_DEPTH = 10
# brute-force enumeration is skipped when it would list more paths than this
BRUTE_FORCE_BUDGET = 200_000
BETA_L_AGREEMENT = 0.1


class PathSpaceError(GraphError):
    pass


def _require_shift(g: DirectedGraph) -> None:
    if g.has_sinks or g.has_sources:
        raise PathSpaceError(
            f"the shift needs a graph without sinks or sources (sources: {g.sources}, sinks: {g.sinks})")


@dataclass(frozen=True)
class PreimageGrowth:
    vertices: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # counts[n][i] = c_n(vertices[i])

    @property
    def depth(self) -> int:
        return len(self.counts) - 1

    def count(self, n: int, v: str) -> int:
        return self.counts[n][self.vertices.index(v)]


def preimage_counts(g: DirectedGraph, N: int, *, cross_check: bool = True) -> PreimageGrowth:
    """Exact ``c_n(v)`` for ``n <= N`` from ``c_{n+1}(v) = sum_{s(e)=v} c_n(r(e))``.

    With ``cross_check`` every row is compared with the column sums of
    ``A^n``, and rows with ``n <= 10`` with an explicit enumeration of paths.
    """
    _require_shift(g)
    if not 0 <= N <= MAX_DEPTH:
        raise PathSpaceError(f"depth must be between 0 and {MAX_DEPTH}")
    idx = g.index
    out_edges = [[idx[e.range] for e in g.edges_out_of(v)] for v in g.vertices]
    rows = [tuple(1 for _ in g.vertices)]
    for _ in range(N):
        prev = rows[-1]
        rows.append(tuple(sum(prev[u] for u in out_edges[v]) for v in range(g.n)))
    if cross_check:
        A = vertex_matrix(g).A
        for n, row in enumerate(rows):
            P = int_matrix_power(A, n)
            cols = tuple(sum(P[u][v] for u in range(g.n)) for v in range(g.n))
            if cols != row:
                raise AssertionError(f"recursion and matrix power disagree at n={n}")
            if n <= BRUTE_FORCE_DEPTH and sum(row) <= BRUTE_FORCE_BUDGET:
                brute = tuple(sum(1 for _ in enumerate_paths(g, n, source=v)) for v in g.vertices)
                if brute != row:
                    raise AssertionError(f"recursion and enumeration disagree at n={n}")
    return PreimageGrowth(g.vertices, tuple(rows))


@dataclass(frozen=True)
class ThomsenBounds:
    """``a_n = ln(max_v c_n(v)) / n`` and ``b_n = ln(min_v c_n(v)) / n`` for ``n = 1 .. N``."""

    depth: int
    upper_sequence: tuple[float, ...]
    lower_sequence: tuple[float, ...]
    beta_c_exact: float
    beta_l_exact: float

    @property
    def beta_c_numeric(self) -> float:
        return self.upper_sequence[-1]

    @property
    def beta_l_numeric(self) -> float:
        return self.lower_sequence[-1]

    def table(self) -> list[tuple[int, float, float]]:
        return [(n + 1, a, b) for n, (a, b) in enumerate(zip(self.upper_sequence, self.lower_sequence))]

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "beta_c_exact": self.beta_c_exact,
            "beta_l_exact": self.beta_l_exact,
            "beta_c_numeric": self.beta_c_numeric,
            "beta_l_numeric": self.beta_l_numeric,
            "rows": [{"n": n, "a_n": a, "b_n": b} for n, a, b in self.table()],
        }


def _iroot(k: int, n: int) -> int | None:
    """Integer ``r`` with ``r**n == k``, or None."""
    if k < 2 or n == 1:
        return k
    r = 1 << -(-k.bit_length() // n)
    # Newton from above on r**n - k
    while True:
        s = ((n - 1) * r + k // r ** (n - 1)) // n
        if s >= r:
            break
        r = s
    return r if r**n == k else None


def _log_rate(k: int, n: int) -> float:
    """``ln(k) / n``, exact whenever ``k`` is a perfect n-th power.

    Dividing ``math.log(2**n)`` by ``n`` lands one ulp off ``ln 2`` for some
    n, so perfect powers are reduced to ``ln`` of the root first.
    """
    r = _iroot(k, n)
    if r is not None:
        return math.log(r)
    return math.log(k) / n


def beta_l_exact(g: DirectedGraph, tol: float = DEFAULT_TOL) -> float:
    """``min_v ln max{rho(A_D) : D a component with some u in D, u <= v}``.

    ``c_n(v)`` counts paths with source ``v``; their ranges ``u`` satisfy
    ``u <= v``, and the growth rate of those counts is the largest Perron
    root among the components such a path can reach.
    """
    cd = decompose(g)
    spec = graph_spectrum(g, tol)
    best = math.inf
    for v in g.vertices:
        j = g.index[v]
        rate = 0.0
        for i, comp in enumerate(cd.components):
            if any(cd.vertex_leq[g.index[u], j] for u in comp):
                rate = max(rate, spec.per_component_rho[i])
        best = min(best, rate)
    if best <= 0:
        raise PathSpaceError("some vertex reaches no cycle")
    return math.log(best)


def thomsen_bounds(g: DirectedGraph, N: int = 32, tol: float = DEFAULT_TOL) -> ThomsenBounds:
    if N < 1:
        raise PathSpaceError("depth must be at least 1")
    growth = preimage_counts(g, N)
    spec = graph_spectrum(g, tol)
    if spec.rho <= 0:
        raise PathSpaceError("the graph has no cycle")
    upper = tuple(_log_rate(max(r), n) for n, r in enumerate(growth.counts) if n > 0)
    lower = tuple(_log_rate(min(r), n) for n, r in enumerate(growth.counts) if n > 0)
    bl = beta_l_exact(g, tol)
    if N >= MAX_DEPTH and abs(bl - lower[-1]) > BETA_L_AGREEMENT:
        raise AssertionError(f"derived beta_l {bl} disagrees with the numeric value {lower[-1]}")
    return ThomsenBounds(N, upper, lower, math.log(spec.rho), bl)
