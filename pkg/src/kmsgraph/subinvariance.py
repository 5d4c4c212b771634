"""Vertices of the subinvariant-vector polytope ``{m >= 0, A m <= e^beta m, sum(m) = 1}``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "MAX_VERTICES",
    "DimensionCapExceeded",
    "SubinvariancePolytope",
    "enumerate_subinvariant",
    "invariant_feasible",
    "dedupe_points",
]

MAX_VERTICES = 16


class DimensionCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SubinvariancePolytope:
    beta: float
    extreme_points: np.ndarray = field(compare=False)

    @property
    def empty(self) -> bool:
        return len(self.extreme_points) == 0

    def __len__(self) -> int:
        return len(self.extreme_points)


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(getattr(A, "A", A), dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("vertex matrix must be square")
    if A.shape[0] > MAX_VERTICES:
        raise DimensionCapExceeded(f"{A.shape[0]} vertices; enumeration is capped at {MAX_VERTICES}")
    return A


def dedupe_points(points: np.ndarray, radius: float) -> np.ndarray:
    """Drop points within ``radius`` (l-infinity) of an earlier one; sort lexicographically."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return points.reshape(0, points.shape[-1] if points.ndim == 2 else 0)
    # clean rounding noise so that sorting is stable across backends
    points = np.where(np.abs(points) < radius, 0.0, points)
    order = np.lexsort(points.T[::-1])
    kept: list[np.ndarray] = []
    for p in points[order]:
        if not any(np.max(np.abs(p - q)) <= radius for q in kept):
            kept.append(p)
    out = np.array(kept)
    return out[np.lexsort(out.T[::-1])]


def enumerate_subinvariant(A, beta: float, tol: float = 1e-9) -> SubinvariancePolytope:
    """All extreme points, by solving every active-constraint system."""
    A = _as_matrix(A)
    n = A.shape[0]
    M = math.exp(beta) * np.eye(n) - A
    raw = kernels.vertex_candidates(M, tol)
    pts = dedupe_points(raw, 10 * tol)
    if len(pts):
        pts = np.clip(pts, 0.0, None)
        pts /= pts.sum(axis=1, keepdims=True)
    return SubinvariancePolytope(beta, pts.reshape(-1, n))


def invariant_feasible(A, beta: float, tol: float = 1e-9) -> np.ndarray:
    """Vertices of ``{m >= 0, A m = e^beta m, sum(m) = 1}``; shape ``(k, n)``, possibly ``k = 0``.

    That set is a face of the subinvariance polytope (the face where every
    inequality ``(e^beta m - A m)_v >= 0`` is tight), so its vertices are the
    polytope vertices lying on it.
    """
    A = _as_matrix(A)
    poly = enumerate_subinvariant(A, beta, tol)
    if poly.empty:
        return poly.extreme_points
    M = math.exp(beta) * np.eye(A.shape[0]) - A
    scale = max(1.0, math.exp(beta))
    keep = np.max(np.abs(poly.extreme_points @ M.T), axis=1) <= tol * scale * 10
    return poly.extreme_points[keep]
