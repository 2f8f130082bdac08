"""Brute-force oracles that re-derive results by exhaustive search.

Each oracle recomputes something the library decides structurally, using
only the definitions and bounded enumeration, and returns a
:class:`Verdict`.  They are slow and only meant for desk-scale inputs.

* ``finite``: medians from the distance equation, hulls as intersections
  of halfspaces, gates by distance minimisation, on a finite median graph.
* ``window-core``: halfspace classes from orbit closure and a bounded word
  search, and the two cores as intersections over the window walls.
* ``stallings``: the minimal subtree as the union of axes of short elements.
* ``min``: Min-set membership by checking disjointness of the orbit wall
  sets over a long range.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import words as W
from .actions import GroupAction, HalfspaceClassification, classify_halfspace, core_window, minimal_subtree
from .errors import OracleBudgetExceeded
from .instances import Automorphism, FreeTree, ProductInstance, RelPos, SymHalfspace
from .median_core import MedianGraph, convex_hull, walls as graph_walls
from .minsets import MinWitness, distance, minset_membership, translation_length

ORACLE_BUDGET = 5_000_000
ORBIT_CAP = 200


@dataclass(frozen=True)
class Verdict:
    oracle: str
    match: bool
    checked: int
    difference: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "MATCH" if self.match else "MISMATCH"

    def to_json(self) -> dict:
        out = {"oracle": self.oracle, "status": self.status, "checked": self.checked}
        if self.difference is not None:
            out["difference"] = self.difference
        if self.details:
            out["details"] = self.details
        return out


def _spend(work: int, budget: int) -> None:
    if work > budget:
        raise OracleBudgetExceeded(f"oracle needs {work} steps, budget is {budget}")


# ---------------------------------------------------------------------------
# finite graphs


def finite_oracle(g: MedianGraph, budget: int = ORACLE_BUDGET) -> Verdict:
    """Check medians, hulls of pairs and triples, and gates against brute force."""
    n = g.n
    _spend(n ** 3, budget)
    d = g.dist
    checked = 0
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        on_all = [m for m in range(n)
                  if d[i, m] + d[m, j] == d[i, j] and d[j, m] + d[m, k] == d[j, k]
                  and d[i, m] + d[m, k] == d[i, k]]
        got = g.index[g.median(g.vertices[i], g.vertices[j], g.vertices[k])]
        checked += 1
        if on_all != [got]:
            return Verdict("finite", False, checked, {
                "kind": "median", "triple": [g.vertices[i], g.vertices[j], g.vertices[k]],
                "expected": [g.vertices[m] for m in on_all], "got": g.vertices[got]})
    ws = graph_walls(g)
    sides = [w.mask_a for w in ws] + [w.mask_b for w in ws]
    full = (1 << n) - 1
    subsets = list(itertools.combinations(range(n), 2))[:200] + list(itertools.combinations(range(n), 3))[:200]
    for s in subsets:
        smask = sum(1 << i for i in s)
        expect = full
        for m in sides:
            if m & smask == smask:
                expect &= m
        hull = convex_hull(g, [g.vertices[i] for i in s])
        checked += 1
        if g.mask_of(hull.members) != expect:
            return Verdict("finite", False, checked, {"kind": "hull", "set": [g.vertices[i] for i in s]})
        members = [g.index[v] for v in hull.members]
        for x in range(n):
            best = min(members, key=lambda m: (d[x, m], m))
            gate = g.index[hull.gate_table[g.vertices[x]]]
            checked += 1
            if d[x, gate] != d[x, best] or any(
                    g.median_index(x, gate, y) != gate for y in members):
                return Verdict("finite", False, checked, {
                    "kind": "gate", "set": [g.vertices[i] for i in s], "vertex": g.vertices[x]})
    return Verdict("finite", True, checked)


# ---------------------------------------------------------------------------
# halfspace classes by simulation


@dataclass(frozen=True)
class SimulatedClass:
    """Classes read off a breadth-first part of the orbit.

    ``complete`` is False when the orbit did not close up under the cap and
    no nested translate was seen.  ``cls`` and ``barred`` are then only
    the reading of the translates that were seen, and ``cls_options`` and
    ``barred_options`` hold every class consistent with them.
    """

    halfspace: SymHalfspace
    cls: str | None
    barred: str | None
    complete: bool = True

    @property
    def cls_options(self) -> frozenset:
        if self.complete:
            return frozenset([self.cls])
        if self.cls is None:
            return frozenset(["H0", "H1", "Hhalf", "Hhalf*"])
        # a larger orbit may still contain a nested translate
        return frozenset([self.cls, "H1"])

    @property
    def barred_options(self) -> frozenset:
        if self.complete:
            return frozenset([self.barred])
        if self.barred == "H0bar":
            return frozenset(["H1", "H0bar", "HhalfBar", "HhalfBar*"])
        return frozenset([self.barred, "H1"])


def _orbit(a: GroupAction, h: SymHalfspace, cap: int) -> tuple[set, bool]:
    """Breadth-first part of the orbit of h under the generators.

    Returns the translates found and whether the orbit closed up (is finite)
    before ``cap`` translates were seen.
    """
    gens = list(a.generators) + [g.inverse() for g in a.generators]
    seen = {h}
    queue = deque([h])
    while queue:
        k = queue.popleft()
        for g in gens:
            k2 = g.apply_h(k)
            if k2 not in seen:
                seen.add(k2)
                if len(seen) > cap:
                    return seen, False
                queue.append(k2)
    return seen, True


def simulate_class(a: GroupAction, h: SymHalfspace, orbit_cap: int = ORBIT_CAP) -> SimulatedClass:
    """Classes of ``h`` read off the definitions from a breadth-first part of its orbit."""
    inst = a.instance
    translates, finite = _orbit(a, h, orbit_cap)
    pos = {inst.relative_position(k, h) for k in translates}
    if RelPos.NESTED_IN in pos or RelPos.NESTED_OVER in pos:
        return SimulatedClass(h, "H1", "H1")
    facing, cofacing = RelPos.FACING in pos, RelPos.COFACING in pos
    if facing and cofacing:
        # the barred classes partition the halfspaces, so this is left undecided
        return SimulatedClass(h, "H0" if finite else None, None, finite)
    barred = "HhalfBar" if facing else "HhalfBar*" if cofacing else "H0bar"
    if finite:
        return SimulatedClass(h, "H0", barred)
    if facing:
        return SimulatedClass(h, "Hhalf", barred, False)
    if cofacing:
        return SimulatedClass(h, "Hhalf*", barred, False)
    return SimulatedClass(h, None, barred, False)


def window_core_oracle(a: GroupAction, radius: int = 4, orbit_cap: int = ORBIT_CAP, margin: int = 2,
                       classifier: Callable[[SymHalfspace], HalfspaceClassification] | None = None,
                       budget: int = ORACLE_BUDGET) -> Verdict:
    """Compare classes and both cores on a window with a simulation of the definitions.

    Walls are taken from a window of radius ``radius + margin`` around the
    origin so that halfspaces cutting window points off the cores are seen.
    A class is a mismatch when it is not among the options left open by
    the simulated orbit; for open orbits the expected cores use the
    classifier's (consistent) answer.  ``classifier`` replaces :func:`classify_halfspace` (used by the negative
    control).
    """
    inst = a.instance
    classify = classifier or (lambda h: classify_halfspace(a, h))
    win = inst.window(None, radius)
    outer = inst.window(None, radius + margin, win.shape)
    hs = []
    for h in inst.walls_meeting(outer):
        hs.extend([h, inst.complement(h)])
    _spend(len(hs) * orbit_cap, budget)
    checked = open_orbits = 0
    sim: dict[SymHalfspace, SimulatedClass] = {}
    for h in hs:
        s = simulate_class(a, h, orbit_cap)
        got = classify(h)
        open_orbits += not s.complete
        sim[h] = s
        checked += 1
        if got.cls not in s.cls_options or got.barred not in s.barred_options:
            return Verdict("window-core", False, checked, {
                "kind": "class", "wall": inst.h_str(h), "expected": [sorted(s.cls_options), sorted(s.barred_options)],
                "got": [got.cls, got.barred]})
        if not s.complete:
            sim[h] = SimulatedClass(h, got.cls, got.barred)
    cut = [h for h, s in sim.items() if s.cls == "Hhalf"]
    cut_bar = [h for h, s in sim.items() if s.barred == "HhalfBar"]
    exp_c = [p for p in win.points if all(inst.membership(p, h) for h in cut)]
    exp_cbar = [p for p in win.points if all(inst.membership(p, h) for h in cut_bar)]
    if classifier is None:
        got_c, got_cbar = core_window(a, win)
    else:
        got_c = [p for p in win.points if all(inst.membership(p, h) for h in hs if classify(h).cls == "Hhalf")]
        got_cbar = [p for p in win.points
                    if all(inst.membership(p, h) for h in hs if classify(h).barred == "HhalfBar")]
    for name, exp, got in (("core", exp_c, got_c), ("reduced_core", exp_cbar, got_cbar)):
        checked += len(win.points)
        if exp != got:
            diff = sorted(set(exp) ^ set(got), key=inst.point_key)[0]
            return Verdict("window-core", False, checked, {
                "kind": name, "point": inst.point_to_json(diff), "expected": diff in set(exp)})
    return Verdict("window-core", True, checked, details={
        "open_orbits": open_orbits,
        "core": [inst.point_to_json(p) for p in exp_c],
        "reduced_core": [inst.point_to_json(p) for p in exp_cbar]})


# ---------------------------------------------------------------------------
# minimal subtrees


def _axis_points(u: str, radius: int) -> list[str]:
    """Vertices of the axis of the left multiplication by u within ``radius`` of e.

    Writing u = c v c⁻¹ with v cyclically reduced, the axis is c·⟨v⟩ and the
    words c·vᵏ..., c·v⁻ᵏ... are reduced, so their lengths are |c| plus the
    number of letters read along the period.
    """
    c, v = W.cyclic_reduce(u)
    steps = radius - len(c)
    if steps < 0:
        return []
    reps = steps // len(v) + 1
    out = []
    for ray in (v * reps, W.inverse(v) * reps):
        out.extend(c + ray[:k] for k in range(steps + 1))
    return out


def _tree_edges(points: set[str]) -> set[tuple[str, str]]:
    """Edges with both endpoints in ``points``, as (shorter, longer) pairs."""
    return {(p[:-1], p) for p in points if p and p[:-1] in points}


def axes_edges(m: int, generators: Sequence[str], radius: int, product_length: int = 6,
               element_length: int = 14) -> set[tuple[str, str]]:
    """Window edges lying on the axis of some element of ⟨generators⟩.

    Elements are products of at most ``product_length`` generators whose
    reduced length is at most ``element_length``.
    """
    gens = [W.reduce(g) for g in generators if W.reduce(g)]
    letters = gens + [W.inverse(g) for g in gens]
    elements = {""}
    layer = {""}
    for _ in range(product_length):
        layer = {W.mul(x, g) for x in layer for g in letters}
        layer = {x for x in layer if len(x) <= element_length}
        layer -= elements
        elements |= layer
    edges: set = set()
    for u in elements:
        if u:
            edges |= _tree_edges(set(_axis_points(u, radius)))
    return edges


def stallings_oracle(m: int, generators: Sequence[str], radius: int = 6, **kw) -> Verdict:
    """Minimal-subtree edges in the ball of ``radius``: Stallings graph versus union of axes."""
    st = minimal_subtree(FreeTree(m), list(generators))
    ball = list(W.words_up_to(m, radius))
    got = set()
    for p in ball:
        if p and st.edge_in_subtree(p[:-1], p[-1]):
            got.add((p[:-1], p))
    expected = axes_edges(m, generators, radius, **kw)
    if got != expected:
        diff = sorted(got ^ expected, key=lambda e: W.word_key(e[1]))[0]
        return Verdict("stallings", False, len(ball), {"edge": list(diff), "in_stallings": diff in got})
    return Verdict("stallings", True, len(ball), details={"edges": len(got)})


def reduced_core_edges(a: GroupAction, radius: int) -> set[tuple[str, str]]:
    """Edges of the reduced core inside the ball, for a single-tree-factor instance."""
    win = a.instance.window(None, radius)
    _, cbar = core_window(a, win)
    return _tree_edges({p[0] for p in cbar})


# ---------------------------------------------------------------------------
# Min-sets


def in_min_brute(inst: ProductInstance, g: Automorphism, x: tuple, n: int) -> bool:
    """Whether the sets W(gᵏx | gᵏ⁺¹x), -n <= k < n, are pairwise disjoint."""
    pts = [x]
    for _ in range(n):
        pts.append(g.apply(pts[-1]))
    ginv = g.inverse()
    back = [x]
    for _ in range(n):
        back.append(ginv.apply(back[-1]))
    orbit = list(reversed(back[1:])) + pts
    seen: set = set()
    for p, q in zip(orbit, orbit[1:]):
        ws = {inst.canonical(h) for h in inst.separating_walls(p, q)}
        if seen & ws:
            return False
        seen |= ws
    return True


def min_oracle(inst: ProductInstance, g: Automorphism, radius: int = 3, n: int = 12,
               weighting=None) -> Verdict:
    """Min-set membership on a window: structure versus long range checks versus ℓ(g)."""
    win = inst.window(None, radius)
    ell = translation_length(inst, g, weighting).value
    checked = 0
    for y in win.points:
        brute = in_min_brute(inst, g, y, n)
        got = isinstance(minset_membership(inst, g, y), MinWitness)
        by_length = distance(inst, y, g.apply(y), weighting) == ell
        checked += 1
        if not brute == got == by_length:
            return Verdict("min", False, checked, {
                "point": inst.point_to_json(y), "range_check": brute, "structure": got,
                "attains_length": by_length})
    return Verdict("min", True, checked, details={"translation_length": str(ell)})


def corrupted_classifier(a: GroupAction, target: SymHalfspace) -> Callable[[SymHalfspace], HalfspaceClassification]:
    """A classifier that reports the wrong class for ``target`` (negative control)."""
    def classify(h: SymHalfspace) -> HalfspaceClassification:
        c = classify_halfspace(a, h)
        if h != target:
            return c
        cls, barred = ("H0", "H0bar") if c.cls == "H1" else ("H1", "H1")
        return HalfspaceClassification(h, cls, barred, None)
    return classify


__all__ = [
    "Verdict", "axes_edges", "corrupted_classifier", "finite_oracle", "in_min_brute", "min_oracle",
    "reduced_core_edges", "simulate_class", "stallings_oracle", "window_core_oracle",
]
