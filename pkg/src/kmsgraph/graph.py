"""Finite directed graphs, their vertex matrices and component structure.

An edge ``e`` has a source ``s(e)`` and a range ``r(e)``.  A path
``mu = mu_1 mu_2 ... mu_n`` is composable when ``s(mu_i) == r(mu_{i+1})``,
so paths are read right to left along the drawn arrows: ``r(mu)`` is where
the path ends up and ``s(mu)`` is where it starts.

The vertex matrix has ``A[v, w]`` equal to the number of edges with range
``v`` and source ``w``.  In the text format the line ``edge a b`` declares an
edge with source ``a`` and range ``b``, which therefore contributes to
``A[b, a]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "GraphParseError",
    "Edge",
    "DirectedGraph",
    "Path",
    "VertexMatrix",
    "ComponentDecomposition",
    "HereditarySet",
    "parse_graph",
    "load_graph",
    "vertex_matrix",
    "decompose",
    "hereditary_closure",
    "quotient_graph",
    "count_paths",
    "enumerate_paths",
]

# Brute-force path enumeration is only run below these sizes.
BRUTE_FORCE_MAX_LENGTH = 12
BRUTE_FORCE_MAX_EDGES = 8


class GraphError(ValueError):
    """Invalid graph, vertex or path."""


class GraphParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    range: str


@dataclass(frozen=True)
class Path:
    """A finite path; a length-0 path is a vertex.

    ``edges`` lists edge ids left to right, ``range`` is ``r(mu_1)`` and
    ``source`` is ``s(mu_n)``.
    """

    edges: tuple[str, ...]
    range: str
    source: str

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def is_vertex(self) -> bool:
        return not self.edges

    def is_prefix_of(self, other: "Path") -> bool:
        if len(self.edges) > len(other.edges):
            return False
        if not self.edges:
            return self.range == other.range
        return other.edges[: len(self.edges)] == self.edges

    def __add__(self, other: "Path") -> "Path":
        if self.source != other.range:
            raise GraphError(f"cannot concatenate {self} and {other}")
        return Path(self.edges + other.edges, self.range, other.source)

    def strip_prefix(self, prefix: "Path") -> "Path":
        """Return ``rest`` with ``prefix + rest == self``."""
        if not prefix.is_prefix_of(self):
            raise GraphError(f"{prefix} is not a prefix of {self}")
        k = len(prefix.edges)
        return Path(self.edges[k:], prefix.source, self.source)

    def __str__(self) -> str:
        if not self.edges:
            return self.range
        return ".".join(self.edges)


@dataclass(frozen=True)
class DirectedGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if not self.vertices:
            raise GraphError("a graph needs at least one vertex")
        seen = set()
        for v in self.vertices:
            if v in seen:
                raise GraphError(f"duplicate vertex {v!r}")
            seen.add(v)
        ids = set()
        for e in self.edges:
            if e.source not in seen or e.range not in seen:
                raise GraphError(f"edge {e.id!r} uses an undeclared vertex")
            if e.id in ids:
                raise GraphError(f"duplicate edge id {e.id!r}")
            ids.add(e.id)

    @classmethod
    def from_pairs(cls, vertices: Iterable[str], pairs: Iterable[Sequence[str]]) -> "DirectedGraph":
        """Build from ``(source, range)`` pairs; edges are named ``e0, e1, ...``
        unless a pair carries a third element."""
        edges = []
        for i, pair in enumerate(pairs):
            if len(pair) == 3:
                src, dst, name = pair
            else:
                src, dst = pair
                name = f"e{i}"
            edges.append(Edge(str(name), str(src), str(dst)))
        return cls(tuple(str(v) for v in vertices), tuple(edges))

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_by_id(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges_into(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.range == v]

    def edges_out_of(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.source == v]

    # A source receives no edges (r^{-1}(v) empty); a sink emits none.
    @property
    def sources(self) -> list[str]:
        hit = {e.range for e in self.edges}
        return [v for v in self.vertices if v not in hit]

    @property
    def sinks(self) -> list[str]:
        hit = {e.source for e in self.edges}
        return [v for v in self.vertices if v not in hit]

    @property
    def has_sources(self) -> bool:
        return bool(self.sources)

    @property
    def has_sinks(self) -> bool:
        return bool(self.sinks)

    def check_vertex(self, v: str) -> None:
        if v not in self.index:
            raise GraphError(f"unknown vertex {v!r}")

    def vertex_path(self, v: str) -> Path:
        self.check_vertex(v)
        return Path((), v, v)

    def path(self, edges: Sequence[str] | str) -> Path:
        """Validated path from a sequence of edge ids (or a single vertex name)."""
        if isinstance(edges, str):
            if edges in self.index:
                return self.vertex_path(edges)
            edges = [edges]
        edges = tuple(edges)
        if not edges:
            raise GraphError("use vertex_path for length-0 paths")
        try:
            es = [self.edge_by_id[e] for e in edges]
        except KeyError as exc:
            raise GraphError(f"unknown edge {exc.args[0]!r}") from None
        for left, right in zip(es, es[1:]):
            if left.source != right.range:
                raise GraphError(f"edges {left.id!r} and {right.id!r} do not compose")
        return Path(edges, es[0].range, es[-1].source)

    def extend(self, mu: Path, e: Edge) -> Path:
        if mu.source != e.range:
            raise GraphError(f"cannot extend {mu} by {e.id}")
        return Path(mu.edges + (e.id,), mu.range, e.source)

    def to_text(self) -> str:
        lines = [f"vertex {v}" for v in self.vertices]
        for i, e in enumerate(self.edges):
            if e.id == f"e{i}":
                lines.append(f"edge {e.source} {e.range}")
            else:
                lines.append(f"edge {e.source} {e.range} {e.id}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [[e.source, e.range, e.id] for e in self.edges],
        }


def parse_graph(text: str) -> DirectedGraph:
    """Parse the line-based format, or the JSON form when ``text`` starts with ``{``.

    ``vertex <name>`` declares a vertex and ``edge <src> <dst> [id]`` declares
    one edge (repeat the line for parallel edges).  ``#`` starts a comment.
    """
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    vertices: list[str] = []
    declared: set[str] = set()
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "vertex":
            if len(tokens) != 2:
                raise GraphParseError("expected 'vertex <name>'", lineno)
            name = tokens[1]
            if name in declared:
                raise GraphParseError(f"duplicate vertex {name!r}", lineno)
            declared.add(name)
            vertices.append(name)
        elif kind == "edge":
            if len(tokens) not in (3, 4):
                raise GraphParseError("expected 'edge <src> <dst> [id]'", lineno)
            src, dst = tokens[1], tokens[2]
            for v in (src, dst):
                if v not in declared:
                    raise GraphParseError(f"undeclared vertex {v!r}", lineno)
            eid = tokens[3] if len(tokens) == 4 else f"e{len(edges)}"
            if any(e.id == eid for e in edges):
                raise GraphParseError(f"duplicate edge id {eid!r}", lineno)
            edges.append(Edge(eid, src, dst))
        else:
            raise GraphParseError(f"unknown directive {kind!r}", lineno)
    if not vertices:
        raise GraphParseError("no vertices declared")
    return DirectedGraph(tuple(vertices), tuple(edges))


def _parse_json(text: str) -> DirectedGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, dict) or "vertices" not in data:
        raise GraphParseError("JSON graph needs a 'vertices' list")
    vertices = [str(v) for v in data["vertices"]]
    if len(set(vertices)) != len(vertices):
        raise GraphParseError("duplicate vertex in JSON graph")
    pairs = data.get("edges", [])
    for p in pairs:
        if not isinstance(p, list) or len(p) not in (2, 3):
            raise GraphParseError(f"bad edge entry {p!r}")
        for v in p[:2]:
            if str(v) not in vertices:
                raise GraphParseError(f"undeclared vertex {v!r}")
    try:
        return DirectedGraph.from_pairs(vertices, pairs)
    except GraphError as exc:
        raise GraphParseError(str(exc)) from None


def load_graph(path) -> DirectedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


@dataclass(frozen=True)
class VertexMatrix:
    order: tuple[str, ...]
    A: np.ndarray = field(compare=False)

    def __post_init__(self):
        self.A.setflags(write=False)

    def __getitem__(self, key):
        v, w = key
        i = self.order.index(v)
        j = self.order.index(w)
        return int(self.A[i, j])

    def tolist(self) -> list[list[int]]:
        return self.A.tolist()


def vertex_matrix(g: DirectedGraph, order: Sequence[str] | None = None) -> VertexMatrix:
    if order is None:
        order = g.vertices
    order = tuple(order)
    if sorted(order) != sorted(g.vertices):
        raise GraphError("order must be a permutation of the vertex set")
    pos = {v: i for i, v in enumerate(order)}
    A = np.zeros((len(order), len(order)), dtype=np.int64)
    for e in g.edges:
        A[pos[e.range], pos[e.source]] += 1
    return VertexMatrix(order, A)


def _leq_matrix(g: DirectedGraph) -> np.ndarray:
    """``leq[i, j]`` is True when some path has range ``i`` and source ``j``."""
    n = g.n
    reach = np.eye(n, dtype=bool)
    for e in g.edges:
        reach[g.index[e.range], g.index[e.source]] = True
    # Warshall closure.
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return reach


@dataclass(frozen=True)
class HereditarySet:
    members: frozenset[str]

    def __contains__(self, v: str) -> bool:
        return v in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ComponentDecomposition:
    """Strongly connected classes, sorted by smallest member index.

    ``leq[C][D]`` means ``c <= d`` for members, i.e. there is a path from
    ``D`` to ``C``.  ``block_order`` lists vertices so that the vertex matrix
    is block upper-triangular with diagonal blocks ``A_C``.
    """

    graph: DirectedGraph
    components: tuple[tuple[str, ...], ...]
    leq: tuple[tuple[bool, ...], ...]
    trivial: tuple[bool, ...]
    block_order: tuple[str, ...]
    vertex_leq: np.ndarray = field(compare=False, repr=False)

    def component_of(self, v: str) -> int:
        for i, comp in enumerate(self.components):
            if v in comp:
                return i
        raise GraphError(f"unknown vertex {v!r}")

    def matrix(self, i: int) -> np.ndarray:
        """``A_C`` for component ``i``, rows and columns in member order."""
        idx = [self.graph.index[v] for v in self.components[i]]
        A = vertex_matrix(self.graph).A
        return A[np.ix_(idx, idx)]

    def vertex_leq_named(self, v: str, w: str) -> bool:
        return bool(self.vertex_leq[self.graph.index[v], self.graph.index[w]])


def decompose(g: DirectedGraph) -> ComponentDecomposition:
    leq = _leq_matrix(g)
    sim = leq & leq.T
    n = g.n
    assigned = [-1] * n
    comps: list[list[int]] = []
    for i in range(n):
        if assigned[i] >= 0:
            continue
        members = [j for j in range(n) if sim[i, j]]
        for j in members:
            assigned[j] = len(comps)
        comps.append(members)
    k = len(comps)
    cleq = tuple(tuple(bool(leq[comps[a][0], comps[b][0]]) for b in range(k)) for a in range(k))
    A = vertex_matrix(g).A
    trivial = tuple(len(c) == 1 and A[c[0], c[0]] == 0 for c in comps)

    # Kahn's algorithm: a class goes after every class strictly below it.
    placed: list[int] = []
    remaining = set(range(k))
    while remaining:
        ready = [c for c in sorted(remaining)
                 if not any(cleq[d][c] and d != c and d in remaining for d in range(k))]
        placed.append(ready[0])
        remaining.remove(ready[0])
    block_order = tuple(g.vertices[i] for c in placed for i in comps[c])
    return ComponentDecomposition(
        graph=g,
        components=tuple(tuple(g.vertices[i] for i in c) for c in comps),
        leq=cleq,
        trivial=trivial,
        block_order=block_order,
        vertex_leq=leq,
    )


def hereditary_closure(g: DirectedGraph, seed: Iterable[str]) -> HereditarySet:
    """Smallest ``H`` containing ``seed`` with ``v in H, v <= w  =>  w in H``."""
    seed = list(seed)
    for v in seed:
        g.check_vertex(v)
    leq = _leq_matrix(g)
    members = set()
    for v in seed:
        row = leq[g.index[v]]
        members.update(g.vertices[j] for j in np.flatnonzero(row))
    return HereditarySet(frozenset(members))


def is_hereditary(g: DirectedGraph, h: Iterable[str]) -> bool:
    h = set(h)
    return all(e.source in h for e in g.edges if e.range in h)


def quotient_graph(g: DirectedGraph, h: HereditarySet | Iterable[str]) -> DirectedGraph:
    """``E \\ H``: vertices outside ``H`` and the edges whose source lies outside ``H``."""
    members = set(h.members if isinstance(h, HereditarySet) else h)
    for v in members:
        g.check_vertex(v)
    if not is_hereditary(g, members):
        raise GraphError("set is not hereditary")
    if len(members) == g.n:
        raise GraphError("cannot remove every vertex")
    keep = tuple(v for v in g.vertices if v not in members)
    edges = tuple(e for e in g.edges if e.source not in members)
    assert all(e.range not in members for e in edges)
    return DirectedGraph(keep, edges)


def _int_matmul(X: list[list[int]], Y: list[list[int]]) -> list[list[int]]:
    cols = list(zip(*Y))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in X]


def int_matrix_power(A: np.ndarray, n: int) -> list[list[int]]:
    """Exact ``A**n`` with Python integers."""
    size = A.shape[0]
    result = [[int(i == j) for j in range(size)] for i in range(size)]
    base = [[int(x) for x in row] for row in A.tolist()]
    while n:
        if n & 1:
            result = _int_matmul(result, base)
        base = _int_matmul(base, base)
        n >>= 1
    return result


def enumerate_paths(g: DirectedGraph, n: int, *, source: str | None = None) -> Iterator[Path]:
    """All paths of length exactly ``n``, optionally with a fixed source."""
    if n < 0:
        raise GraphError("path length must be nonnegative")
    starts = [source] if source is not None else list(g.vertices)
    out = {v: g.edges_out_of(v) for v in g.vertices}
    # Paths are grown at the range end: the new first edge e needs s(e) == r(mu).
    stack = [(g.vertex_path(v), 0) for v in reversed(starts)]
    while stack:
        mu, k = stack.pop()
        if k == n:
            yield mu
            continue
        for e in reversed(out[mu.range]):
            stack.append((Path((e.id,) + mu.edges, e.range, mu.source), k + 1))


def count_paths(g: DirectedGraph, n: int, v: str, w: str, *, cross_check: bool = True) -> int:
    """Number of paths of length ``n`` with range ``v`` and source ``w``.

    Computed from ``A**n``; small cases are re-counted by enumeration and the
    two answers must agree.
    """
    g.check_vertex(v)
    g.check_vertex(w)
    if n < 0:
        raise GraphError("path length must be nonnegative")
    A = vertex_matrix(g).A
    count = int_matrix_power(A, n)[g.index[v]][g.index[w]]
    if cross_check and n <= BRUTE_FORCE_MAX_LENGTH and len(g.edges) <= BRUTE_FORCE_MAX_EDGES:
        brute = sum(1 for mu in enumerate_paths(g, n, source=w) if mu.range == v)
        if brute != count:
            raise AssertionError(f"path count mismatch: matrix {count}, enumeration {brute}")
    return count
