"""Stallings core graphs of finitely generated subgroups of free groups.

For a subgroup H of F_m acting on the Cayley tree by left multiplication,
the quotient H\\T is the folded graph of H with infinite trees attached.
The minimal H-invariant subtree (the union of the axes of elements of H)
is the preimage of the cyclic core of the folded graph, so membership of a
tree edge in the minimal subtree is decided by reading its base word in the
folded graph.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable

from .words import letter_key, letters, reduce


class StallingsGraph:
    """Folded graph of ⟨generators⟩ ≤ F_m, based at vertex 0.

    Attributes
    ----------
    out:
        ``out[v][x]`` is the endpoint of the edge labelled by letter ``x``
        (lowercase or inverse) leaving ``v``.
    core_vertices, core_edges:
        The cyclic core (the folded graph with all hanging trees, including
        the hair at the base vertex, pruned).  Edges are ``(v, x)`` pairs
        with ``x`` lowercase.
    """

    def __init__(self, generators: Iterable[str], m: int):
        self.m = m
        self.generators = tuple(w for w in (reduce(g) for g in generators) if w)
        raw = _fold(self.generators)
        self.out = _canonical(raw, m)
        self.core_vertices, self.core_edges = _cyclic_core(self.out)
        self._hair = self._hair_word()

    @property
    def n_vertices(self) -> int:
        return len(self.out)

    def is_trivial(self) -> bool:
        return not self.core_edges

    def rank(self) -> int:
        """Rank of the subgroup (Euler characteristic of the folded graph)."""
        edges = sum(len(d) for d in self.out) // 2
        return edges - len(self.out) + 1

    def read(self, w: str) -> tuple[int, int]:
        """Follow ``w`` from the base; return (vertex reached, letters consumed)."""
        v = 0
        for i, c in enumerate(w):
            nxt = self.out[v].get(c)
            if nxt is None:
                return v, i
            v = nxt
        return v, len(w)

    def contains(self, w: str) -> bool:
        """Membership of a reduced word in the subgroup."""
        w = reduce(w)
        v, k = self.read(w)
        return k == len(w) and v == 0

    def vertex_in_subtree(self, w: str) -> bool:
        """Whether the tree vertex ``w`` lies in the minimal invariant subtree."""
        v, k = self.read(w)
        return k == len(w) and v in self.core_vertices

    def edge_in_subtree(self, w: str, x: str) -> bool:
        """Whether the tree edge from ``w`` to ``w·x`` lies in the minimal subtree."""
        if w and w[-1] == x.swapcase():
            w, x = w[:-1], x.swapcase()
        v, k = self.read(w)
        if k < len(w):
            return False
        u = self.out[v].get(x)
        if u is None:
            return False
        key = (v, x) if x.islower() else (u, x.swapcase())
        return key in self.core_edges

    def hair(self) -> str:
        """Label of the shortest path from the base into the cyclic core."""
        return self._hair

    def _hair_word(self) -> str:
        if self.is_trivial():
            return ""
        prev = {0: None}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            if v in self.core_vertices:
                path = []
                while prev[v] is not None:
                    v, c = prev[v]
                    path.append(c)
                return "".join(reversed(path))
            for c in letters(self.m):
                u = self.out[v].get(c)
                if u is not None and u not in prev:
                    prev[u] = (v, c)
                    queue.append(u)
        raise AssertionError("nontrivial folded graph without a core")

    def project(self, y: str) -> tuple[str, int]:
        """Nearest point of the minimal subtree to the tree vertex ``y`` and its distance."""
        if self.is_trivial():
            raise ValueError("the trivial subgroup has no minimal subtree")
        target = self._hair
        for i, p in enumerate(geodesic(y, target)):
            if self.vertex_in_subtree(p):
                return p, i
        raise AssertionError("geodesic to the core never met it")

    def edge_orbit_key(self, w: str, x: str) -> tuple:
        """Canonical label of the H-orbit of the unoriented edge {w, w·x}."""
        if x.isupper():
            w, x = reduce(w + x), x.lower()
        v, k = self.read(w)
        if k == len(w) and x in self.out[v]:
            return ("in", v, x)
        return ("out", v, w[k:], x)

    def __repr__(self) -> str:
        return f"StallingsGraph(gens={list(self.generators)}, vertices={self.n_vertices})"


def geodesic(u: str, v: str) -> list[str]:
    """Vertices on the tree geodesic from ``u`` to ``v``, inclusive."""
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    down = [u[:i] for i in range(len(u), k - 1, -1)]
    up = [v[:i] for i in range(k + 1, len(v) + 1)]
    return down + up


def _fold(gens: tuple[str, ...]) -> list[dict[str, int]]:
    """Build the bouquet of petals and fold until the labelling is deterministic."""
    adj: list[dict[str, set[int]]] = [{}]

    def add(u: int, c: str, v: int) -> None:
        adj[u].setdefault(c, set()).add(v)
        adj[v].setdefault(c.swapcase(), set()).add(u)

    for w in gens:
        prev = 0
        for i, c in enumerate(w):
            if i == len(w) - 1:
                nxt = 0
            else:
                adj.append({})
                nxt = len(adj) - 1
            add(prev, c, nxt)
            prev = nxt

    parent = list(range(len(adj)))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    changed = True
    while changed:
        changed = False
        for u in range(len(adj)):
            if find(u) != u:
                continue
            for c in list(adj[u]):
                if find(u) != u:
                    break
                targets = {find(t) for t in adj[u][c]}
                if len(targets) > 1:
                    keep = min(targets)
                    for r in targets - {keep}:
                        parent[r] = keep
                        for c2, ts in adj[r].items():
                            adj[keep].setdefault(c2, set()).update(ts)
                        adj[r] = {}
                    changed = True
                if find(u) == u:
                    adj[u][c] = {find(t) for t in adj[u][c]}

    graph = {}
    for v in range(len(adj)):
        if find(v) == v:
            graph[v] = {c: find(next(iter(ts))) for c, ts in adj[v].items() if ts}
    ids = {v: i for i, v in enumerate(sorted(graph))}
    return [{c: ids[t] for c, t in graph[v].items()} for v in sorted(graph)]


def _canonical(raw: list[dict[str, int]], m: int) -> list[dict[str, int]]:
    """Renumber vertices in breadth-first order from the base, letters in output order."""
    order = {0: 0}
    queue = deque([0])
    alphabet = sorted(letters(m), key=letter_key)
    while queue:
        v = queue.popleft()
        for c in alphabet:
            u = raw[v].get(c)
            if u is not None and u not in order:
                order[u] = len(order)
                queue.append(u)
    out: list[dict[str, int]] = [{} for _ in order]
    for v, i in order.items():
        out[i] = {c: order[u] for c, u in raw[v].items()}
    return out


def _cyclic_core(out: list[dict[str, int]]) -> tuple[frozenset, frozenset]:
    alive = set(range(len(out)))
    degree = {v: len(out[v]) for v in alive}
    stack = [v for v in alive if degree[v] <= 1]
    while stack:
        v = stack.pop()
        if v not in alive or degree[v] > 1:
            continue
        alive.discard(v)
        for u in out[v].values():
            if u in alive:
                degree[u] -= 1
                if degree[u] <= 1:
                    stack.append(u)
    edges = frozenset((v, c) for v in alive for c, u in out[v].items() if c.islower() and u in alive)
    return frozenset(alive), edges


def subgroup_contains(gens: Iterable[str], w: str, m: int) -> bool:
    return StallingsGraph(gens, m).contains(w)


__all__ = ["StallingsGraph", "geodesic", "subgroup_contains"]
