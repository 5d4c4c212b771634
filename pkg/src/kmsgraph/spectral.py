"""Spectral radii, Perron vectors and the resolvent ``(1 - e^{-beta} A)^{-1}``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .graph import ComponentDecomposition, DirectedGraph, decompose, vertex_matrix

__all__ = [
    "DEFAULT_TOL",
    "SpectralError",
    "NotIrreducible",
    "NotSupercritical",
    "SpectralData",
    "ResolventVector",
    "spectral_radius",
    "graph_spectrum",
    "perron_vector",
    "is_irreducible",
    "resolvent",
    "matrix_spectral_radius",
]

DEFAULT_TOL = 1e-9
MAX_ITER = 1_000_000
SUPERCRITICAL_MARGIN = 1e-12
NEUMANN_MAX_TERMS = 200_000


class SpectralError(ArithmeticError):
    pass


class NotIrreducible(SpectralError):
    pass


class NotSupercritical(SpectralError):
    pass


@dataclass(frozen=True)
class SpectralData:
    rho: float
    per_component_rho: tuple[float, ...]
    perron_vectors: dict[int, np.ndarray] = field(compare=False, repr=False)


def is_irreducible(A: np.ndarray) -> bool:
    A = np.asarray(A)
    n = A.shape[0]
    if n == 1:
        return bool(A[0, 0] > 0)
    reach = (A > 0) | np.eye(n, dtype=bool)
    # (I + A)^(n-1) > 0, by repeated squaring of the boolean pattern
    steps = 1
    while steps < n - 1:
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
        steps *= 2
    return bool(reach.all())


def _power_iteration(A: np.ndarray, tol: float, x0: np.ndarray | None = None):
    """Power iteration on ``A + I``, stopped by the Collatz-Wielandt bracket.

    For positive ``x``, ``min (Bx)_i / x_i <= rho(B) <= max (Bx)_i / x_i``, so
    the stopping rule certifies the eigenvalue.  The shift by ``I`` makes
    every irreducible block primitive.
    """
    n = A.shape[0]
    B = A.astype(np.float64) + np.eye(n)
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    x /= x.sum()
    target = min(tol, 1e-12) * 1e-2
    lo, hi = -math.inf, math.inf
    best_gap = math.inf
    stalled = 0
    for _ in range(MAX_ITER):
        y = B @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / y.sum()
        gap = hi - lo
        if gap <= target * hi:
            break
        # Rounding floor: stop once the bracket has not improved for a while.
        if gap < best_gap * 0.999:
            best_gap = gap
            stalled = 0
        else:
            stalled += 1
            if stalled > 200 and gap <= tol:
                break
    else:
        if hi - lo > tol:
            raise SpectralError("power iteration did not converge; tolerance too tight")
    return 0.5 * (lo + hi) - 1.0, x


def perron_vector(A_C, tol: float = DEFAULT_TOL, *, start=None) -> tuple[float, np.ndarray]:
    """Spectral radius and positive eigenvector with unit l1 norm of an irreducible matrix."""
    A_C = np.asarray(A_C)
    if not is_irreducible(A_C):
        raise NotIrreducible("matrix is not irreducible")
    if start is not None and np.any(np.asarray(start) <= 0):
        raise ValueError("start vector must be positive")
    rho, x = _power_iteration(A_C, tol, start)
    return rho, x


def spectral_radius(A, cd: ComponentDecomposition, tol: float = DEFAULT_TOL) -> SpectralData:
    """Per-component radii and ``rho(A) = max_C rho(A_C)``.

    ``A`` must be indexed in the graph's declaration order (as
    ``vertex_matrix(g).A``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.asarray(getattr(A, "A", A))
    g = cd.graph
    rhos = []
    vectors = {}
    for i, comp in enumerate(cd.components):
        if cd.trivial[i]:
            rhos.append(0.0)
            continue
        idx = [g.index[v] for v in comp]
        rho, x = perron_vector(A[np.ix_(idx, idx)], tol)
        rhos.append(rho)
        vectors[i] = x
    return SpectralData(max(rhos), tuple(rhos), vectors)


def graph_spectrum(g: DirectedGraph, tol: float = DEFAULT_TOL) -> SpectralData:
    return spectral_radius(vertex_matrix(g).A, decompose(g), tol)


@dataclass(frozen=True)
class ResolventVector:
    """``y`` solves ``(1 - e^{-beta} A^T) y = 1``; ``solve`` applies ``(1 - e^{-beta} A)^{-1}``."""

    beta: float
    y: np.ndarray = field(compare=False)
    neumann_terms: int | None
    neumann_error: float | None
    _lu: tuple = field(compare=False, repr=False)

    def solve(self, epsilon) -> np.ndarray:
        """``m = (1 - e^{-beta} A)^{-1} epsilon``."""
        return scipy.linalg.lu_solve(self._lu, np.asarray(epsilon, dtype=np.float64))

    def extreme_masses(self) -> np.ndarray:
        """Rows ``m^v = (1 - e^{-beta} A)^{-1} delta_v / y_v``, one per vertex."""
        n = len(self.y)
        cols = self.solve(np.eye(n))
        return (cols / self.y).T


def neumann_terms_needed(rho: float, beta: float, n: int, scale: float, tol: float) -> int:
    """Smallest ``N`` with ``(rho e^-beta)^(N+1) n scale / (1 - rho e^-beta) < tol``, plus ``n``
    extra terms to absorb polynomial factors from non-diagonal Jordan structure."""
    r = rho * math.exp(-beta)
    if r == 0.0:
        return n + 1
    bound0 = n * scale / (1.0 - r)
    N = max(0, math.ceil(math.log(tol / bound0) / math.log(r)) - 1)
    return N + n


def resolvent(A, beta: float, tol: float = DEFAULT_TOL, *, rho: float | None = None,
              check: bool = True) -> ResolventVector:
    """The normalising vector ``y^beta`` and a factored solver for ``(1 - e^{-beta} A)``.

    ``y`` is computed by a direct solve and, when the geometric tail bound
    allows a manageable number of terms, by the truncated Neumann series; the
    two must agree.
    """
    A = np.asarray(getattr(A, "A", A), dtype=np.float64)
    n = A.shape[0]
    if rho is None:
        rho = matrix_spectral_radius(A, tol)
    if math.exp(beta) <= rho * (1.0 + SUPERCRITICAL_MARGIN):
        raise NotSupercritical(f"beta={beta} is not above ln rho(A)={math.log(rho) if rho > 0 else -math.inf}")
    q = math.exp(-beta)
    lu = scipy.linalg.lu_factor(np.eye(n) - q * A)
    y = scipy.linalg.lu_solve(lu, np.ones(n), trans=1)
    N = None
    err = None
    if check:
        N = neumann_terms_needed(rho, beta, n, float(np.max(y)), tol)
        if N <= NEUMANN_MAX_TERMS:
            term = np.ones(n)
            total = term.copy()
            QT = q * A.T
            for _ in range(N):
                term = QT @ term
                total += term
            err = float(np.max(np.abs(total - y)))
            if err > tol * max(1.0, float(np.max(y))):
                raise SpectralError(f"Neumann series and direct solve disagree by {err:g}")
        else:
            N = None
    return ResolventVector(beta, y, N, err, lu)


def matrix_spectral_radius(A, tol: float = DEFAULT_TOL) -> float:
    """``rho(A)`` of a nonnegative matrix, as the largest Perron root of its strong components."""
    A = np.asarray(getattr(A, "A", A), dtype=np.float64)
    if A.size == 0:
        return 0.0
    k, labels = connected_components(A > 0, directed=True, connection="strong")
    rho = 0.0
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        block = A[np.ix_(idx, idx)]
        if len(idx) == 1 and block[0, 0] == 0:
            continue
        rho = max(rho, perron_vector(block, tol)[0])
    return rho
