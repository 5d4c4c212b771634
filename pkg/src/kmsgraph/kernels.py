"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
kernels are.  ``use_backend`` switches explicitly (tests and benchmarks).
"""

from __future__ import annotations

from . import _purepy

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = [
    "BACKEND",
    "available_backends",
    "use_backend",
    "vertex_candidates",
    "nf_multiply",
    "nf_apply",
    "homomorphism_scan",
    "kms_scan_all",
    "kms_scan_support",
]

_NAMES = ("vertex_candidates", "nf_multiply", "nf_apply", "homomorphism_scan",
          "kms_scan_all", "kms_scan_support")

BACKEND = "cython" if _compiled is not None else "python"

# rebound by use_backend
vertex_candidates = nf_multiply = nf_apply = None
homomorphism_scan = kms_scan_all = kms_scan_support = None


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name: str):
    if name == "python":
        return _purepy
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def use_backend(name: str) -> None:
    global BACKEND
    impl = get_backend(name)
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(impl, fn)
    BACKEND = name


use_backend(BACKEND)
