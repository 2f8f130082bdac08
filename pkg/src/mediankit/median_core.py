"""Finite median graphs.

A :class:`MedianGraph` stores its vertices in sorted order and works with
vertex indices internally.  Vertex sets are represented as Python integers
used as bitsets (bit ``i`` is the vertex ``vertices[i]``), which keeps the
wall and convexity computations short.  Public functions accept and return
vertex labels.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from . import kernels
from .errors import ClosureBudgetExceeded, InstanceTooLarge, NotMedian

RANK_WALL_CAP = 40
CLOSURE_CAP = 100_000
AXIOM3_FULL_LIMIT = 12
AXIOM3_SAMPLES = 4000
MEDIAN_TABLE_LIMIT = 400


def _bits(mask: int) -> Iterable[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


@dataclass(frozen=True, eq=False)
class Wall:
    """A wall {sideA, sideB}; ``side_a`` contains the smallest vertex."""

    id: int
    side_a: frozenset
    side_b: frozenset
    mask_a: int
    mask_b: int

    def side_of(self, graph: "MedianGraph", v: Hashable) -> str:
        return "a" if self.mask_a >> graph.index[v] & 1 else "b"


@dataclass(frozen=True)
class ConvexSet:
    """A convex vertex set together with its gate (nearest-point) map."""

    members: frozenset
    gate_table: Mapping[Hashable, Hashable]


class MedianGraph:
    """A finite connected median graph with exact medians and walls.

    Parameters
    ----------
    vertices, edges:
        Vertex labels (totally ordered) and undirected edges between them.
    validate:
        Run :func:`verify_median_graph` and raise :class:`NotMedian` on the
        first violation.  Generated graphs that are median by construction
        may skip this.
    """

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Sequence[Hashable]],
                 validate: bool = True):
        self.vertices: tuple = tuple(sorted(set(vertices)))
        self.index: dict = {v: i for i, v in enumerate(self.vertices)}
        n = self.n = len(self.vertices)
        if n == 0:
            raise NotMedian("a median graph needs at least one vertex")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            i, j = self.index[u], self.index[v]
            if i != j:
                nbrs[i].add(j)
                nbrs[j].add(i)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in nbrs)
        self.edges: tuple[tuple[int, int], ...] = tuple(
            (i, j) for i in range(n) for j in self.neighbors[i] if i < j)
        indptr = np.zeros(n + 1, dtype=np.int32)
        indptr[1:] = np.cumsum([len(s) for s in self.neighbors])
        indices = np.array([j for s in self.neighbors for j in s], dtype=np.int32)
        self.dist: np.ndarray = kernels.distance_matrix(n, indptr, indices)
        self._dist_rows = self.dist.tolist()
        self._median: np.ndarray | None = None
        self._walls: list[Wall] | None = None
        self._interval_masks = None
        if validate:
            problems = verify_median_graph(self)
            if problems:
                raise NotMedian(problems[0])

    def __repr__(self) -> str:
        return f"MedianGraph(n={self.n}, edges={len(self.edges)})"

    # -- index level -------------------------------------------------------
    def median_table(self) -> np.ndarray:
        if self._median is None:
            if self.n > MEDIAN_TABLE_LIMIT:
                raise InstanceTooLarge(f"median table for {self.n} vertices")
            self._median = kernels.median_table(self.dist)
        return self._median

    def median_index(self, i: int, j: int, k: int) -> int:
        if self.n <= MEDIAN_TABLE_LIMIT:
            m = int(self.median_table()[i, j, k])
        else:
            m = self._median_scan(i, j, k)
        if m < 0:
            raise NotMedian(
                f"{'no' if m == -1 else 'several'} medians for "
                f"({self.vertices[i]!r}, {self.vertices[j]!r}, {self.vertices[k]!r})")
        return m

    def _median_scan(self, i: int, j: int, k: int) -> int:
        d = self._dist_rows
        found = -1
        for m in range(self.n):
            if (d[i][m] + d[m][j] == d[i][j] and d[i][m] + d[m][k] == d[i][k]
                    and d[j][m] + d[m][k] == d[j][k]):
                if found >= 0:
                    return -2
                found = m
        return found

    def interval_mask(self, i: int, j: int) -> int:
        d = self._dist_rows
        dij = d[i][j]
        mask = 0
        for z in range(self.n):
            if d[i][z] + d[z][j] == dij:
                mask |= 1 << z
        return mask

    def mask_of(self, labels: Iterable[Hashable]) -> int:
        mask = 0
        for v in labels:
            mask |= 1 << self.index[v]
        return mask

    def labels_of(self, mask: int) -> frozenset:
        return frozenset(self.vertices[i] for i in _bits(mask))

    # -- label level -------------------------------------------------------
    def median(self, x: Hashable, y: Hashable, z: Hashable) -> Hashable:
        return self.vertices[self.median_index(self.index[x], self.index[y], self.index[z])]

    def distance(self, x: Hashable, y: Hashable) -> int:
        return self._dist_rows[self.index[x]][self.index[y]]

    def adjacent(self, x: Hashable, y: Hashable) -> bool:
        return self.index[y] in self.neighbors[self.index[x]]

    def edge_labels(self) -> list[tuple]:
        return [(self.vertices[i], self.vertices[j]) for i, j in self.edges]

    def walls(self) -> list[Wall]:
        return walls(self)

    def to_json(self) -> dict:
        return {"kind": "finite", "vertices": list(self.vertices),
                "edges": [list(e) for e in self.edge_labels()]}


def median(g: MedianGraph, x: Hashable, y: Hashable, z: Hashable) -> Hashable:
    """The unique vertex lying on all three pairwise intervals of x, y, z."""
    return g.median(x, y, z)


def verify_median_graph(g: MedianGraph, samples: int = AXIOM3_SAMPLES, seed: int = 0) -> list[str]:
    """Return violations of connectivity, unique medians and median axiom (3)."""
    if (g.dist < 0).any():
        return ["graph is disconnected"]
    if g.n > MEDIAN_TABLE_LIMIT:
        return _verify_large(g)
    table = g.median_table()
    out = []
    bad = np.argwhere(table < 0)
    for i, j, k in bad:
        if i <= j <= k:
            what = "no median" if table[i, j, k] == -1 else "several medians"
            out.append(f"{what} for ({g.vertices[i]!r}, {g.vertices[j]!r}, {g.vertices[k]!r})")
    if out:
        return out
    n = g.n
    if n <= AXIOM3_FULL_LIMIT:
        x, y, z, w = (a.ravel() for a in np.meshgrid(*[np.arange(n)] * 4, indexing="ij"))
    else:
        rng = np.random.default_rng(seed)
        x, y, z, w = rng.integers(0, n, size=(4, samples))
    lhs = table[table[x, y, z], y, w]
    rhs = table[x, y, table[z, y, w]]
    for k in np.flatnonzero(lhs != rhs)[:100]:
        out.append("axiom (3) fails for "
                   f"({g.vertices[x[k]]!r}, {g.vertices[y[k]]!r}, "
                   f"{g.vertices[z[k]]!r}, {g.vertices[w[k]]!r})")
    return out


def _verify_large(g: MedianGraph) -> list[str]:
    rng = random.Random(0)
    for _ in range(AXIOM3_SAMPLES):
        i, j, k = (rng.randrange(g.n) for _ in range(3))
        if g._median_scan(i, j, k) < 0:
            return [f"no unique median for ({g.vertices[i]!r}, {g.vertices[j]!r}, {g.vertices[k]!r})"]
    return []


def walls(g: MedianGraph) -> list[Wall]:
    """One wall per Djoković–Winkler class of edges, in a canonical order."""
    if g._walls is not None:
        return g._walls
    full = (1 << g.n) - 1
    weights = [1 << i for i in range(g.n)]
    seen: dict[int, None] = {}
    d = g.dist
    for u, v in g.edges:
        closer = d[:, u] < d[:, v]
        mask = sum(w for w, c in zip(weights, closer.tolist()) if c)
        if not mask & 1:
            mask = full ^ mask
        seen.setdefault(mask, None)
    ordered = sorted(seen, key=lambda a: ((full ^ a) & -(full ^ a), full ^ a))
    out = [Wall(i, g.labels_of(a), g.labels_of(full ^ a), a, full ^ a) for i, a in enumerate(ordered)]
    g._walls = out
    return out


def halfspace_pocset(g: MedianGraph):
    """The pocset of halfspaces of ``g``; wall ``i`` gives elements ``wia`` and ``wib``."""
    from .pocset import Pocset

    ws = walls(g)
    sides = {}
    for w in ws:
        sides[f"w{w.id}a"] = w.mask_a
        sides[f"w{w.id}b"] = w.mask_b
    order = [(a, b) for a, ma in sides.items() for b, mb in sides.items()
             if a != b and ma & mb == ma]
    return Pocset.from_pairs([(f"w{w.id}a", f"w{w.id}b") for w in ws], order, close=False)


def interval(g: MedianGraph, x: Hashable, y: Hashable) -> frozenset:
    """I(x, y) = {z : m(x, y, z) = z}."""
    return g.labels_of(g.interval_mask(g.index[x], g.index[y]))


def separators(g: MedianGraph, x: Hashable, y: Hashable) -> list[Wall]:
    """Walls separating x from y."""
    i, j = g.index[x], g.index[y]
    return [w for w in walls(g) if (w.mask_a >> i & 1) != (w.mask_a >> j & 1)]


def transverse(w1: Wall, w2: Wall) -> bool:
    return all((a & b) != 0 for a in (w1.mask_a, w1.mask_b) for b in (w2.mask_a, w2.mask_b))


def _interval_masks(g: MedianGraph):
    if g._interval_masks is None:
        if g.n <= 64:
            g._interval_masks = kernels.interval_masks(g.dist)
        else:
            g._interval_masks = [[g.interval_mask(i, j) for j in range(g.n)] for i in range(g.n)]
    return g._interval_masks


def hull_mask(g: MedianGraph, seed: int) -> int:
    """Close a vertex bitmask under intervals."""
    masks = _interval_masks(g)
    if g.n <= 64:
        return int(kernels.hull_closure(masks, np.uint64(seed)))
    current, done = seed, 0
    while current & ~done:
        pending = current & ~done
        members = list(_bits(current))
        for a in _bits(pending):
            for b in members:
                current |= masks[a][b]
            done |= 1 << a
    return current


def convex_set(g: MedianGraph, mask: int) -> ConvexSet:
    """Wrap a convex bitmask with its gate table."""
    members = list(_bits(mask))
    d = g.dist[:, members]
    nearest = np.asarray(members)[d.argmin(axis=1)]
    table = {g.vertices[i]: g.vertices[int(nearest[i])] for i in range(g.n)}
    return ConvexSet(g.labels_of(mask), table)


def convex_hull(g: MedianGraph, s: Iterable[Hashable]) -> ConvexSet:
    """The smallest convex set containing ``s`` (interval closure to a fixpoint)."""
    seed = g.mask_of(s)
    if not seed:
        raise ValueError("convex_hull needs a nonempty set")
    return convex_set(g, hull_mask(g, seed))


def gate(g: MedianGraph, c: ConvexSet, x: Hashable) -> Hashable:
    """The gate (nearest point) of ``x`` in the convex set ``c``."""
    return c.gate_table[x]


def is_convex(g: MedianGraph, s: Iterable[Hashable]) -> bool:
    mask = g.mask_of(s)
    return mask != 0 and hull_mask(g, mask) == mask


def rank(g: MedianGraph) -> int:
    """Maximum number of pairwise-transverse walls (exact clique search)."""
    ws = walls(g)
    if len(ws) > RANK_WALL_CAP:
        raise InstanceTooLarge(f"{len(ws)} walls exceeds the rank cap of {RANK_WALL_CAP}")
    if not ws:
        return 0
    tg = nx.Graph()
    tg.add_nodes_from(range(len(ws)))
    tg.add_edges_from((a.id, b.id) for a, b in itertools.combinations(ws, 2) if transverse(a, b))
    clique, _ = nx.max_weight_clique(tg, weight=None)
    return len(clique)


def wall_classes(g: MedianGraph) -> list[list[Wall]]:
    """Connected components of the non-transversality graph on walls."""
    ws = walls(g)
    ng = nx.Graph()
    ng.add_nodes_from(range(len(ws)))
    ng.add_edges_from((a.id, b.id) for a, b in itertools.combinations(ws, 2) if not transverse(a, b))
    comps = sorted(sorted(c) for c in nx.connected_components(ng))
    return [[ws[i] for i in c] for c in comps]


def restriction_quotient(g: MedianGraph, u: Iterable[Wall | int]) -> tuple[MedianGraph, dict]:
    """Collapse every wall outside ``u``.

    Each class of x ~ y (no wall of ``u`` separates them) is labelled by its
    smallest vertex.  Returns the quotient graph and the projection map.
    """
    ws = walls(g)
    chosen = sorted({w if isinstance(w, int) else w.id for w in u})
    key_of = {}
    for i, v in enumerate(g.vertices):
        key_of[v] = tuple(ws[k].mask_a >> i & 1 for k in chosen)
    label: dict[tuple, Hashable] = {}
    for v in g.vertices:
        label.setdefault(key_of[v], v)
    keys = list(label)
    edges = [(label[a], label[b]) for a, b in itertools.combinations(keys, 2)
             if sum(x != y for x, y in zip(a, b)) == 1]
    q = MedianGraph(label.values(), edges, validate=False)
    return q, {v: label[key_of[v]] for v in g.vertices}


def factorization(g: MedianGraph) -> list[tuple[MedianGraph, dict]]:
    """Irreducible factors with their projection maps from ``g``."""
    classes = wall_classes(g)
    if not classes:
        return [(g, {v: v for v in g.vertices})]
    return [restriction_quotient(g, c) for c in classes]


def decompose_product(g: MedianGraph) -> list[MedianGraph]:
    """Irreducible factors: one restriction quotient per non-transversality class."""
    return [f for f, _ in factorization(g)]


def product_graph(factors: Sequence[MedianGraph]) -> MedianGraph:
    """Cartesian product; vertices are tuples of factor labels."""
    verts = list(itertools.product(*(f.vertices for f in factors)))
    edges = []
    for v in verts:
        for k, f in enumerate(factors):
            for j in f.neighbors[f.index[v[k]]]:
                w = f.vertices[j]
                if v[k] < w:
                    edges.append((v, v[:k] + (w,) + v[k + 1:]))
    return MedianGraph(verts, edges, validate=False)


def is_isomorphism(mapping: Mapping[Hashable, Hashable], g1: MedianGraph, g2: MedianGraph) -> bool:
    """True when ``mapping`` is a bijection g1 → g2 carrying edges exactly onto edges."""
    if g1.n != g2.n or len(g1.edges) != len(g2.edges):
        return False
    if set(mapping) != set(g1.vertices) or set(mapping.values()) != set(g2.vertices):
        return False
    return all(g2.adjacent(mapping[a], mapping[b]) for a, b in g1.edge_labels())


def product_isomorphism(g: MedianGraph) -> tuple[list[MedianGraph], dict] | None:
    """Factor ``g`` and return the factors with the coordinate map onto their product.

    Returns None if the coordinate map fails to be an isomorphism.
    """
    parts = factorization(g)
    factors = [f for f, _ in parts]
    mapping = {v: tuple(p[v] for _, p in parts) for v in g.vertices}
    return (factors, mapping) if is_isomorphism(mapping, g, product_graph(factors)) else None


def subalgebra_closure(space, s: Iterable[Hashable], budget: int = CLOSURE_CAP) -> list:
    """Smallest median-closed set containing ``s``.

    ``space`` is anything with a ``median(x, y, z)`` method (a MedianGraph or
    a product instance).  Raises :class:`ClosureBudgetExceeded` beyond
    ``budget`` points.
    """
    members: list = []
    seen: set = set()
    queue: list = []
    for p in s:
        if p not in seen:
            seen.add(p)
            queue.append(p)
    if not queue:
        raise ValueError("subalgebra_closure needs a nonempty set")
    med: Callable = space.median
    while queue:
        a = queue.pop()
        members.append(a)
        current = list(members)
        for i, b in enumerate(current):
            for c in current[i:]:
                m = med(a, b, c)
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
                    if len(seen) > budget:
                        raise ClosureBudgetExceeded(f"closure exceeds {budget} points")
    return sorted(members)


def is_automorphism(g: MedianGraph, perm: Mapping[Hashable, Hashable]) -> bool:
    """A graph automorphism of a median graph; these are exactly its median automorphisms."""
    return is_isomorphism(perm, g, g)
