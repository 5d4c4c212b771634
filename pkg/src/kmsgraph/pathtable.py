"""Integer-indexed table of all paths up to a fixed length.

Path ids follow the order (length, then lexicographic order of edge indices),
so ids ``0 .. n-1`` are the vertices in declaration order.  The table stores
prefix and one-edge-extension links, which lets the compiled kernels do
prefix tests and concatenations with array lookups only.
"""

from __future__ import annotations

import numpy as np

from .graph import DirectedGraph, GraphError, Path

__all__ = ["PathTable", "PathTableTooLarge"]


class PathTableTooLarge(GraphError):
    pass


class PathTable:
    """All paths of length ``<= depth`` in ``graph``.

    Arrays (``P`` paths, ``E`` edges, ``L = depth``):

    ``length[P]``, ``rng[P]``, ``src[P]``
        path length and vertex indices of ``r(mu)`` and ``s(mu)``
    ``edges[P, L]``
        edge indices, padded with -1
    ``prefix[P, L + 1]``
        id of the length-``k`` prefix (``prefix[p, 0]`` is the range vertex)
    ``child[P, E]``
        id of ``mu e`` or -1 when not composable or longer than ``L``
    ``dfs_order``, ``dfs_start``, ``subtree``
        preorder of the prefix tree; the extensions of ``p`` occupy
        ``dfs_order[dfs_start[p] : dfs_start[p] + subtree[p]]``
    """

    def __init__(self, graph: DirectedGraph, depth: int, max_paths: int = 2_000_000):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        self.graph = graph
        self.depth = depth
        n, E = graph.n, len(graph.edges)
        vidx = graph.index
        e_range = np.array([vidx[e.range] for e in graph.edges], dtype=np.int32)
        e_source = np.array([vidx[e.source] for e in graph.edges], dtype=np.int32)
        # edges whose range is vertex x, in index order
        into = [np.flatnonzero(e_range == x).astype(np.int32) for x in range(n)]

        seqs: list[tuple[int, ...]] = [() for _ in range(n)]
        rng = list(range(n))
        src = list(range(n))
        parent = [-1] * n
        last_edge = [-1] * n
        level = list(range(n))
        for k in range(1, depth + 1):
            nxt = []
            if k == 1:
                for e in range(E):
                    nxt.append((e_range[e], (e,), int(e_source[e]), int(e_range[e])))
            else:
                for p in level:
                    for e in into[src[p]]:
                        nxt.append((p, seqs[p] + (int(e),), int(e_source[e]), int(e)))
            if len(seqs) + len(nxt) > max_paths:
                raise PathTableTooLarge(f"more than {max_paths} paths of length <= {depth}")
            level = []
            for item in nxt:
                par, seq, s, _ = item
                pid = len(seqs)
                seqs.append(seq)
                rng.append(rng[par])
                src.append(s)
                parent.append(int(par))
                last_edge.append(seq[-1])
                level.append(pid)
            if not level:
                break

        P = len(seqs)
        self.size = P
        self.length = np.array([len(s) for s in seqs], dtype=np.int32)
        self.rng = np.array(rng, dtype=np.int32)
        self.src = np.array(src, dtype=np.int32)
        self.edges = np.full((P, max(depth, 1)), -1, dtype=np.int32)
        for p, s in enumerate(seqs):
            if s:
                self.edges[p, : len(s)] = s
        self.parent = np.array(parent, dtype=np.int32)
        self.prefix = np.full((P, depth + 1), -1, dtype=np.int32)
        self.child = np.full((P, max(E, 1)), -1, dtype=np.int32)
        for p in range(P):
            k = len(seqs[p])
            self.prefix[p, k] = p
            if k:
                par = parent[p]
                self.prefix[p, :k] = self.prefix[par, :k]
                self.child[par, last_edge[p]] = p
        self._ids = {(seqs[p], rng[p]): p for p in range(P)}
        self._seqs = seqs
        self._build_dfs()

    def _build_dfs(self) -> None:
        P = self.size
        children: list[list[int]] = [[] for _ in range(P)]
        for p in range(self.graph.n, P):
            children[self.parent[p]].append(p)
        order = []
        start = np.zeros(P, dtype=np.int32)
        subtree = np.ones(P, dtype=np.int32)
        stack = [(v, False) for v in reversed(range(self.graph.n))]
        while stack:
            p, done = stack.pop()
            if done:
                subtree[p] = len(order) - start[p]
                continue
            start[p] = len(order)
            order.append(p)
            stack.append((p, True))
            for c in reversed(children[p]):
                stack.append((c, False))
        self.dfs_order = np.array(order, dtype=np.int32)
        self.dfs_start = start
        self.subtree = subtree

    def __len__(self) -> int:
        return self.size

    def id_of(self, mu: Path) -> int:
        g = self.graph
        key = (tuple(g.edge_index[e] for e in mu.edges), g.index[mu.range])
        try:
            return self._ids[key]
        except KeyError:
            raise GraphError(f"path {mu} is longer than the table depth {self.depth}") from None

    def path(self, pid: int) -> Path:
        g = self.graph
        seq = self._seqs[pid]
        return Path(
            tuple(g.edges[e].id for e in seq),
            g.vertices[self.rng[pid]],
            g.vertices[self.src[pid]],
        )

    def ids_up_to(self, length: int) -> np.ndarray:
        return np.flatnonzero(self.length <= length).astype(np.int32)

    def extensions(self, pid: int, max_length: int | None = None) -> np.ndarray:
        """Ids of all paths having ``pid`` as a prefix (including itself)."""
        s = self.dfs_start[pid]
        ids = self.dfs_order[s : s + self.subtree[pid]]
        if max_length is not None:
            ids = ids[self.length[ids] <= max_length]
        return ids

    def normal_forms(self, max_length: int) -> tuple[np.ndarray, np.ndarray]:
        """All pairs ``(mu, nu)`` with ``s(mu) == s(nu)`` and both lengths ``<= max_length``."""
        ids = self.ids_up_to(max_length)
        mus, nus = [], []
        for v in range(self.graph.n):
            group = ids[self.src[ids] == v]
            mus.append(np.repeat(group, len(group)))
            nus.append(np.tile(group, len(group)))
        return np.concatenate(mus).astype(np.int32), np.concatenate(nus).astype(np.int32)
