"""Finite pocsets, their ultrafilters, Dilworth chain partitions and duality.

A pocset is a finite poset of halfspace ids with an order-reversing,
fixed-point-free involution ``star``.  Its ultrafilters are the vertices of a
median graph (the dual cube complex), and for the halfspace pocset of a median
graph this recovers the graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .errors import InstanceTooLarge

ULTRAFILTER_PAIR_CAP = 20


@dataclass(frozen=True, eq=False)
class Pocset:
    """Elements, strict containment ``order`` (pairs (a, b) meaning a ⊊ b) and ``star``."""

    elements: tuple[str, ...]
    order: frozenset[tuple[str, str]]
    star: Mapping[str, str]

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[Sequence[str]],
        order: Iterable[Sequence[str]] = (),
        close: bool = True,
    ) -> "Pocset":
        """Build a pocset from star-pairs and generating relations.

        With ``close=True`` the relation is closed under star-reversal and
        transitivity, so the stored order is the full containment relation.
        """
        elements: list[str] = []
        star: dict[str, str] = {}
        for a, b in pairs:
            elements.extend([a, b] if a != b else [a])
            star[a] = b
            star[b] = a
        rel = {(a, b) for a, b in order}
        if close:
            rel = _close(rel, star)
        return cls(tuple(elements), frozenset(rel), MappingProxyType(dict(star)))

    def less(self, a: str, b: str) -> bool:
        """True when a ⊊ b."""
        return (a, b) in self.order

    def leq(self, a: str, b: str) -> bool:
        return a == b or (a, b) in self.order

    def disjoint(self, a: str, b: str) -> bool:
        """True when a ⊆ b*, i.e. the two halfspaces do not intersect."""
        return self.leq(a, self.star[b])

    def pairs(self) -> list[tuple[str, str]]:
        """One (representative, complement) tuple per star-pair, in element order."""
        seen: set[str] = set()
        out = []
        for e in self.elements:
            if e not in seen:
                seen.add(e)
                seen.add(self.star[e])
                out.append((e, self.star[e]))
        return out

    def to_json(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs()],
            "order": sorted([a, b] for a, b in self.order),
        }


def _close(rel: set[tuple[str, str]], star: Mapping[str, str]) -> set[tuple[str, str]]:
    rel = set(rel) | {(star[b], star[a]) for a, b in rel if a in star and b in star}
    succ: dict[str, set[str]] = {}
    for a, b in rel:
        succ.setdefault(a, set()).add(b)
    closed = set()
    for a in list(succ):
        stack = list(succ[a])
        seen: set[str] = set()
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(succ.get(b, ()))
        closed.update((a, b) for b in seen)
    return closed


def verify_pocset(p: Pocset) -> list[str]:
    """Return a description of each violated pocset axiom (empty when valid)."""
    out: list[str] = []
    elems = set(p.elements)
    for e in p.elements:
        s = p.star.get(e)
        if s is None or s not in elems:
            out.append(f"star undefined on {e}")
        elif s == e:
            out.append(f"fixed point of star: {e}")
        elif p.star.get(s) != e:
            out.append(f"star is not an involution on ({e}, {s})")
    for a, b in sorted(p.order):
        if a == b:
            out.append(f"order is not irreflexive at {a}")
        elif (b, a) in p.order and a < b:
            out.append(f"order is not antisymmetric on ({a}, {b})")
        sa, sb = p.star.get(a), p.star.get(b)
        if sa is not None and sb is not None and (sb, sa) not in p.order:
            out.append(f"star is not order-reversing on ({a}, {b})")
    for e in p.elements:
        s = p.star.get(e)
        if s is not None and s != e and (e, s) in p.order:
            out.append(f"{e} <= star({e})")
    return out


@dataclass(frozen=True)
class Ultrafilter:
    """A consistent choice of one element from each star-pair."""

    chosen: frozenset[str]


def enumerate_ultrafilters(p: Pocset, cap: int = ULTRAFILTER_PAIR_CAP) -> list[Ultrafilter]:
    """All ultrafilters of ``p``, by backtracking over star-pairs."""
    return [Ultrafilter(frozenset(c)) for c in _ultrafilter_tuples(p, cap)]


def _ultrafilter_tuples(p: Pocset, cap: int) -> list[tuple[str, ...]]:
    pairs = p.pairs()
    if len(pairs) > cap:
        raise InstanceTooLarge(f"{len(pairs)} star-pairs exceeds the cap of {cap}")
    bad = {(a, b) for a in p.elements for b in p.elements if a != b and p.disjoint(a, b)}
    out: list[tuple[str, ...]] = []
    chosen: list[str] = []

    def extend(i: int) -> None:
        if i == len(pairs):
            out.append(tuple(chosen))
            return
        for x in pairs[i]:
            if all((x, y) not in bad for y in chosen):
                chosen.append(x)
                extend(i + 1)
                chosen.pop()

    extend(0)
    return out


def realize_median_graph(p: Pocset, cap: int = ULTRAFILTER_PAIR_CAP):
    """The median graph dual to ``p``.

    Vertices are ultrafilters, written as tuples listing the chosen element of
    each star-pair in pair order; edges join ultrafilters that differ in
    exactly one pair.
    """
    from .median_core import MedianGraph

    verts = _ultrafilter_tuples(p, cap)
    edges = []
    for i, u in enumerate(verts):
        for v in verts[i + 1:]:
            if sum(a != b for a, b in zip(u, v)) == 1:
                edges.append((u, v))
    return MedianGraph(verts, edges)


@dataclass(frozen=True)
class WidthExceeded:
    """Returned by :func:`chain_partition` when more chains than allowed are needed."""

    width: int
    max_width: int


def chain_partition(
    elems: Sequence[Hashable],
    order: Pocset | Callable[[Hashable, Hashable], bool],
    max_width: int,
) -> list[list[Hashable]] | WidthExceeded:
    """Partition ``elems`` into the minimum number of chains (Dilworth).

    ``order`` is a pocset or a strict-containment predicate ``less(a, b)``.
    Chains are listed from smallest to largest element.  The minimum chain
    cover is ``n - |maximum matching|`` in the comparability bipartite graph.
    """
    less = order.less if isinstance(order, Pocset) else order
    elems = list(elems)
    n = len(elems)
    g = nx.Graph()
    left = [("L", i) for i in range(n)]
    g.add_nodes_from(left)
    g.add_nodes_from(("R", i) for i in range(n))
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            if i != j and less(a, b):
                g.add_edge(("L", i), ("R", j))
    matching = nx.bipartite.hopcroft_karp_matching(g, top_nodes=left)
    nxt = {i: matching[("L", i)][1] for i in range(n) if ("L", i) in matching}
    width = n - len(nxt)
    if width > max_width:
        return WidthExceeded(width, max_width)
    has_pred = set(nxt.values())
    chains = []
    for i in range(n):
        if i in has_pred:
            continue
        chain = [i]
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
        chains.append([elems[k] for k in chain])
    return chains
