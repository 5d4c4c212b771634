import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from kmsgraph.graph import DirectedGraph, load_graph

FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_NAMES = ["example1", "example2", "three_vertex", "single_loop3", "two_cycle", "trivial_tail"]
# fixtures without sinks or sources
SHIFT_FIXTURES = ["example1", "example2", "three_vertex", "single_loop3", "two_cycle"]

LN2, LN3, LN4 = math.log(2), math.log(3), math.log(4)


def load(name: str) -> DirectedGraph:
    return load_graph(FIXTURES / f"{name}.graph")


@pytest.fixture(params=FIXTURE_NAMES)
def fixture_graph(request):
    return load(request.param)


@pytest.fixture
def ex1():
    return load("example1")


@pytest.fixture
def ex2():
    return load("example2")


@pytest.fixture
def three():
    return load("three_vertex")


def graph_from_matrix(A) -> DirectedGraph:
    """Vertices ``0..n-1``; ``A[i][j]`` parallel edges with range ``i`` and source ``j``."""
    A = np.asarray(A)
    n = A.shape[0]
    pairs = [(str(j), str(i)) for i in range(n) for j in range(n) for _ in range(int(A[i, j]))]
    return DirectedGraph.from_pairs([str(i) for i in range(n)], pairs)


def is_strongly_connected(A) -> bool:
    A = np.asarray(A) > 0
    n = len(A)
    reach = A | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return bool(reach.all()) and (n > 1 or A[0, 0])


def random_strongly_connected(rng: np.random.Generator, max_n: int = 6, max_mult: int = 3) -> np.ndarray:
    while True:
        n = int(rng.integers(1, max_n + 1))
        density = rng.uniform(0.2, 0.7)
        A = (rng.random((n, n)) < density) * rng.integers(1, max_mult + 1, size=(n, n))
        if is_strongly_connected(A):
            return A


@st.composite
def small_matrices(draw, max_n=4, max_mult=2, min_n=1):
    n = draw(st.integers(min_n, max_n))
    flat = draw(st.lists(st.integers(0, max_mult), min_size=n * n, max_size=n * n))
    return np.array(flat, dtype=np.int64).reshape(n, n)


@st.composite
def strongly_connected_matrices(draw, max_n=4, max_mult=2):
    A = draw(small_matrices(max_n=max_n, max_mult=max_mult))
    n = len(A)
    # adding a Hamiltonian cycle makes any matrix irreducible
    for i in range(n):
        A[(i + 1) % n, i] = max(A[(i + 1) % n, i], 1)
    return A
