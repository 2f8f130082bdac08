"""Weighted wall metrics, translation lengths and Min-sets.

A :class:`WallWeighting` assigns a positive rational to each G-orbit of
walls; the distance between two points is the total weight of the walls
separating them.  All arithmetic uses :class:`fractions.Fraction`.

For an automorphism ``g`` that preserves every factor, walls, Min-sets and
translation lengths split factor by factor, and each factor is handled by
its structure theory: a line map is a translation or a reflection, a tree
map has a power that is a left multiplication, and a finite factor is
searched exhaustively.  Automorphisms permuting factors fall back to
range checks, and results obtained that way are labelled as such.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from . import words as W
from .actions import (GroupAction, classify_halfspace, core_window, essential_core, has_inversions,
                      wall_orbit_key)
from .errors import PreconditionFailed, WindowBudgetExceeded
from .instances import (Automorphism, BoundaryPoint, Finite, FiniteMap, FreeTree, Line, LineMap,
                        ProductInstance, SymHalfspace, TreeMap, Window)
from .median_core import (MedianGraph, convex_set, product_isomorphism, transverse, wall_classes,
                          walls as graph_walls)
from .stallings import geodesic


def cyclic_action(inst: ProductInstance, g: Automorphism) -> GroupAction:
    return GroupAction(inst, [g], names=["g"])


class WallWeighting:
    """Positive weights constant on the G-orbits of walls.

    ``orbits`` maps orbit keys (see :func:`~mediankit.actions.wall_orbit_key`)
    to weights; walls in other orbits get ``default``, or a weight drawn
    from a per-orbit seeded generator when ``seed`` is set.  Zero weights
    are only accepted with ``pseudo=True``.
    """

    def __init__(self, action: GroupAction, default: Fraction | int | str = 1,
                 orbits: Mapping | None = None, seed: int | None = None, pseudo: bool = False):
        self.action = action
        self.default = Fraction(default)
        self.orbits = {k: Fraction(v) for k, v in (orbits or {}).items()}
        self.seed = seed
        self.pseudo = pseudo
        self._cache: dict = {}
        for v in [self.default, *self.orbits.values()]:
            if v < 0 or (v == 0 and not pseudo):
                raise ValueError(f"weight {v} is not allowed")

    @classmethod
    def unit(cls, action: GroupAction) -> "WallWeighting":
        return cls(action)

    @classmethod
    def random(cls, action: GroupAction, seed: int) -> "WallWeighting":
        return cls(action, seed=seed)

    @classmethod
    def from_json(cls, action: GroupAction, data: dict) -> "WallWeighting":
        """``{"default": "1", "orbits": [{"key": "x0>=1", "weight": "3/2"}]}``.

        Each key is a halfspace in text form; the weight applies to its wall orbit.
        """
        inst = action.instance
        orbits = {}
        for entry in data.get("orbits", []):
            h = inst.parse_halfspace(entry["key"])
            orbits[wall_orbit_key(action, h)] = Fraction(entry["weight"])
        return cls(action, data.get("default", "1"), orbits, data.get("seed"), data.get("pseudo", False))

    @property
    def is_unit(self) -> bool:
        return self.seed is None and not self.orbits and self.default == 1

    def weight(self, h: SymHalfspace) -> Fraction:
        if self.is_unit:
            return self.default
        key = wall_orbit_key(self.action, h)
        w = self._cache.get(key)
        if w is None:
            if key in self.orbits:
                w = self.orbits[key]
            elif self.seed is not None:
                rng = random.Random(f"{self.seed}|{key!r}")
                w = Fraction(rng.randint(1, 9), rng.randint(1, 4))
            else:
                w = self.default
            self._cache[key] = w
        return w

    def total(self, hs) -> Fraction:
        return sum((self.weight(h) for h in hs), Fraction(0))


def distance(inst: ProductInstance, x: tuple, y: tuple, w: WallWeighting | None = None) -> Fraction:
    """Total weight of the walls separating ``x`` and ``y``."""
    seps = inst.separating_walls(x, y)
    if w is None:
        return Fraction(len(seps))
    return w.total(seps)


def _factor_distance(inst: ProductInstance, i: int, a, b, w: WallWeighting | None) -> Fraction:
    seps = [SymHalfspace(i, d) for d in inst.factors[i].separating(a, b)]
    return Fraction(len(seps)) if w is None else w.total(seps)


# ---------------------------------------------------------------------------
# per-factor structure of a single map


def _order_of_substitution(s: W.Substitution) -> int:
    k, cur = 1, s
    while not cur.is_identity():
        cur = cur.compose(s)
        k += 1
    return k


@dataclass(frozen=True)
class TreeDynamics:
    """Dynamics of a tree map: hyperbolic with an axis, elliptic, or an inversion."""

    kind: str  # "hyperbolic" | "elliptic" | "inversion"
    conj: str = ""      # the axis passes through conj and is conj·⟨period⟩
    period: str = ""    # cyclically reduced word of the power that is a left multiplication
    power: int = 1      # exponent n with g^n a left multiplication
    edge: tuple | None = None  # inverted edge (u, v) for inversions


def tree_dynamics(f: TreeMap) -> TreeDynamics:
    n = _order_of_substitution(f.subst)
    u = f.power(n).left
    if u:
        c, v = W.cyclic_reduce(u)
        return TreeDynamics("hyperbolic", c, v, n)
    y = f.apply("")
    if len(y) % 2 == 0:
        return TreeDynamics("elliptic", power=n)
    path = geodesic("", y)
    mid = len(y) // 2
    return TreeDynamics("inversion", power=n, edge=(path[mid], path[mid + 1]))


def _tree_axis_projection(dyn: TreeDynamics, y: str) -> str:
    q = W.mul(W.inverse(dyn.conj), y)
    reps = len(q) // len(dyn.period) + 2
    fwd, back = dyn.period * reps, W.inverse(dyn.period) * reps
    k = max(W.lcp_len(q, fwd), W.lcp_len(q, back))
    return W.mul(dyn.conj, q[:k])


def _on_axis(dyn: TreeDynamics, y: str) -> bool:
    return _tree_axis_projection(dyn, y) == y


def _factor_fixed_gate(inst: ProductInstance, i: int, f, y):
    """Nearest fixed point of a finite-order factor map without inversions."""
    factor = inst.factors[i]
    if isinstance(factor, Line):
        return f.b // 2 if f.eps == -1 else y
    if isinstance(factor, FreeTree):
        gy = f.apply(y)
        path = geodesic(y, gy)
        return path[(len(path) - 1) // 2]
    g = factor.graph
    mask = sum(1 << k for k, v in enumerate(g.vertices) if f.apply(v) == v)
    return convex_set(g, mask).gate_table[y]


# ---------------------------------------------------------------------------
# translation length


@dataclass(frozen=True)
class TranslationLength:
    value: Fraction
    method: str  # "exact" | "power" | "window"
    radius: int | None = None


def _factor_translation_length(inst: ProductInstance, i: int, f, w: WallWeighting | None) -> Fraction:
    factor = inst.factors[i]
    if isinstance(factor, Line):
        if f.eps == 1:
            return _factor_distance(inst, i, 0, f.b, w)
        if f.b % 2 == 0:
            return Fraction(0)
        k = (f.b + 1) // 2
        return _factor_distance(inst, i, k - 1, k, w)
    if isinstance(factor, FreeTree):
        dyn = tree_dynamics(f)
        if dyn.kind == "hyperbolic":
            return _factor_distance(inst, i, dyn.conj, f.apply(dyn.conj), w)
        if dyn.kind == "elliptic":
            return Fraction(0)
        return _factor_distance(inst, i, *dyn.edge, w)
    return min(_factor_distance(inst, i, v, f.apply(v), w) for v in factor.graph.vertices)


def translation_length(inst: ProductInstance, g: Automorphism, w: WallWeighting | None = None,
                       radius: int = 4) -> TranslationLength:
    """ℓ(g) = inf over points x of the weighted distance from x to gx."""
    if g.preserves_factors():
        total = sum((_factor_translation_length(inst, i, f, w) for i, f in enumerate(g.maps)), Fraction(0))
        return TranslationLength(total, "exact")
    k = g.perm_order()
    if not has_inversions(cyclic_action(inst, g)).present:
        gk = g.power(k)
        inner = translation_length(inst, gk, w)
        return TranslationLength(inner.value / k, "power")
    win = inst.window(None, radius, "box")
    best = min(distance(inst, p, g.apply(p), w) for p in win.points)
    return TranslationLength(best, "window", radius)


# ---------------------------------------------------------------------------
# Min-sets


@dataclass(frozen=True)
class MinWitness:
    """A point of Min(g); ``certified`` when decided by structure rather than a range check."""

    point: tuple
    checked_range: int
    certified: bool


@dataclass(frozen=True)
class Refutation:
    """A wall lying in two of the sets W(gⁿx | gⁿ⁺¹x), or None if only structure refuted."""

    point: tuple
    wall: SymHalfspace | None
    steps: tuple[int, int] | None
    certified: bool


def orbit_wall_sets(inst: ProductInstance, g: Automorphism, x: tuple, n: int) -> dict[int, set]:
    """W(gᵏx | gᵏ⁺¹x) for -n <= k < n, as sets of canonical halfspaces."""
    pts = {0: x}
    ginv = g.inverse()
    for k in range(1, n + 1):
        pts[k] = g.apply(pts[k - 1])
        pts[-k] = ginv.apply(pts[-k + 1])
    return {k: {inst.canonical(h) for h in inst.separating_walls(pts[k], pts[k + 1])} for k in range(-n, n)}


def range_check(inst: ProductInstance, g: Automorphism, x: tuple, n: int):
    """First repeated wall among the orbit wall sets for k in [-n, n), or None."""
    sets = orbit_wall_sets(inst, g, x, n)
    seen: dict = {}
    for k in sorted(sets):
        for h in sorted(sets[k], key=inst.h_key):
            if h in seen:
                return h, (seen[h], k)
            seen[h] = k
    return None


def _factor_in_min(inst: ProductInstance, i: int, f, y) -> bool:
    factor = inst.factors[i]
    if isinstance(factor, Line):
        return f.eps == 1 or f.apply(y) == y
    if isinstance(factor, FreeTree):
        dyn = tree_dynamics(f)
        if dyn.kind == "hyperbolic":
            return _on_axis(dyn, y)
        return f.apply(y) == y
    return f.apply(y) == y


def minset_membership(inst: ProductInstance, g: Automorphism, x: tuple, n: int | None = None) -> MinWitness | Refutation:
    """Decide whether ``x`` lies in Min(g)."""
    inst.check_point(x)
    if n is None:
        n = max(inst.rank, 4)
    if g.preserves_factors():
        member = all(_factor_in_min(inst, i, f, y) for i, (f, y) in enumerate(zip(g.maps, x)))
        if member:
            return MinWitness(x, n, True)
        bad = range_check(inst, g, x, max(n, _finite_period(g)))
        return Refutation(x, bad[0] if bad else None, bad[1] if bad else None, True)
    bad = range_check(inst, g, x, n)
    if bad is None:
        return MinWitness(x, n, False)
    return Refutation(x, bad[0], bad[1], False)


def _finite_period(g: Automorphism) -> int:
    """A bound on the steps needed to see a repeated wall for finite-order parts."""
    out = 1
    for f in g.maps:
        if isinstance(f, LineMap) and f.eps == -1:
            out = max(out, 2)
        elif isinstance(f, TreeMap):
            out = max(out, 2 * _order_of_substitution(f.subst))
        elif isinstance(f, FiniteMap):
            k, cur = 1, f
            while not cur.is_identity():
                cur = cur.compose(f)
                k += 1
            out = max(out, k)
    return out


def min_window(inst: ProductInstance, g: Automorphism, w: Window, n: int | None = None) -> list[tuple]:
    return [p for p in w.points if isinstance(minset_membership(inst, g, p, n), MinWitness)]


# ---------------------------------------------------------------------------
# semisimplicity


@dataclass(frozen=True)
class InversionCertificate:
    """An inverted wall obstructing semisimplicity, and the first power that is semisimple."""

    wall: SymHalfspace
    word: str | None
    power: int | None
    power_witness: MinWitness | None


@dataclass(frozen=True)
class NotFoundAtRadius:
    radius: int


def _min_point(inst: ProductInstance, g: Automorphism) -> tuple:
    """A point of Min(g) for a factor-preserving g acting stably without inversions."""
    out = []
    for i, f in enumerate(g.maps):
        factor = inst.factors[i]
        if isinstance(factor, Line):
            out.append(0 if f.eps == 1 else f.b // 2)
        elif isinstance(factor, FreeTree):
            dyn = tree_dynamics(f)
            out.append(dyn.conj if dyn.kind == "hyperbolic" else _factor_fixed_gate(inst, i, f, ""))
        else:
            out.append(next(v for v in factor.graph.vertices if f.apply(v) == v))
    return tuple(out)


def is_semisimple(inst: ProductInstance, g: Automorphism, radius: int = 4,
                  n: int | None = None) -> MinWitness | InversionCertificate | NotFoundAtRadius:
    """A Min point of g, an inversion certificate, or a failed window search."""
    n = max(inst.rank, 4) if n is None else n
    report = has_inversions(cyclic_action(inst, g))
    if report.present:
        power = witness = None
        for i in range(2, 2 ** inst.rank + 1):
            gi = g.power(i)
            if not has_inversions(cyclic_action(inst, gi)).present:
                res = is_semisimple(inst, gi, radius, n)
                if isinstance(res, MinWitness):
                    power, witness = i, res
                    break
        return InversionCertificate(report.wall, report.word, power, witness)
    if g.preserves_factors():
        return MinWitness(_min_point(inst, g), n, True)
    win = inst.window(None, radius, "box")
    base = win.basepoint
    for p in sorted(win.points, key=lambda p: (inst.distance(base, p), inst.point_key(p))):
        if range_check(inst, g, p, n) is None:
            return MinWitness(p, n, False)
    return NotFoundAtRadius(radius)


# ---------------------------------------------------------------------------
# non-transversality and the reduced core of g


def _first_wall(factor) -> tuple:
    if isinstance(factor, Line):
        return ("ge", 1)
    if isinstance(factor, FreeTree):
        return ("", "a")
    return (0, "b")


def is_non_transverse(inst: ProductInstance, g: Automorphism) -> tuple[bool, tuple | None]:
    """Whether no wall is transverse to its image; otherwise a witness pair of halfspaces."""
    for i, j in enumerate(g.perm):
        if i != j:
            h = SymHalfspace(i, _first_wall(inst.factors[i]))
            return False, (h, g.apply_h(h))
    for i, (factor, f) in enumerate(zip(inst.factors, g.maps)):
        if isinstance(factor, Finite):
            ws = graph_walls(factor.graph)
            for wall in ws:
                img = f.apply_h((wall.id, "b"))
                if transverse(wall, ws[img[0]]):
                    h = SymHalfspace(i, (wall.id, "b"))
                    return False, (h, SymHalfspace(i, img))
    return True, None


@dataclass(frozen=True)
class GateResult:
    gate: tuple
    distance: Fraction
    translation_length: Fraction
    displacement: Fraction

    @property
    def identity_holds(self) -> bool:
        return self.displacement == self.translation_length + 2 * self.distance


def reduced_core_gate(inst: ProductInstance, g: Automorphism, y: tuple,
                      w: WallWeighting | None = None) -> GateResult:
    """Gate of ``y`` on the reduced core of ⟨g⟩ (which equals Min(g)) and the distance to it."""
    inst.check_point(y)
    ok, pair = is_non_transverse(inst, g)
    if not ok:
        raise PreconditionFailed("g acts transversely", pair)
    report = has_inversions(cyclic_action(inst, g))
    if report.present:
        raise PreconditionFailed("g inverts a wall", report.wall)
    gate = []
    for i, (f, c) in enumerate(zip(g.maps, y)):
        factor = inst.factors[i]
        if isinstance(factor, FreeTree):
            dyn = tree_dynamics(f)
            if dyn.kind == "hyperbolic":
                gate.append(_tree_axis_projection(dyn, c))
                continue
        if isinstance(factor, Line) and f.eps == 1:
            gate.append(c)
            continue
        gate.append(_factor_fixed_gate(inst, i, f, c))
    gate = tuple(gate)
    return GateResult(gate, distance(inst, y, gate, w), translation_length(inst, g, w).value,
                      distance(inst, y, g.apply(y), w))


# ---------------------------------------------------------------------------
# endpoints


@dataclass(frozen=True)
class Endpoints:
    """The fixed boundary points ξ⁻, ξ⁺ of g and the orientation of walls toward ξ⁺."""

    minus: BoundaryPoint
    plus: BoundaryPoint
    orient: Callable[[SymHalfspace], SymHalfspace] = field(repr=False)

    def to_json(self) -> dict:
        return {"xi_minus": self.minus.to_json(), "xi_plus": self.plus.to_json()}


def endpoints(inst: ProductInstance, g: Automorphism, parts: tuple | None = None) -> Endpoints:
    """Endpoints of g on an essential cyclic sub-instance.

    ``parts`` describes the sub-instance as in
    :class:`~mediankit.actions.EssentialCore`; by default the essential core
    of ⟨g⟩ is used.  Each moving coordinate is a line on which g translates
    or a tree axis of g.
    """
    a = cyclic_action(inst, g)
    if parts is None:
        parts = essential_core(a).parts
    minus, plus = [], []
    dyns: dict[int, object] = {}
    for i, part in enumerate(parts):
        f = g.maps[i]
        if not g.preserves_factors():
            raise PreconditionFailed("g permutes factors", g.perm)
        if part[0] == "point":
            kind = "int" if isinstance(inst.factors[i], Line) else "vertex"
            minus.append((kind, part[1]))
            plus.append((kind, part[1]))
        elif part[0] == "line":
            if f.eps != 1 or f.b == 0:
                raise PreconditionFailed(f"walls of factor {i} are not all H1", i)
            dyns[i] = f.b
            minus.append(("-inf",) if f.b > 0 else ("+inf",))
            plus.append(("+inf",) if f.b > 0 else ("-inf",))
        else:
            dyn = tree_dynamics(f)
            if dyn.kind != "hyperbolic":
                raise PreconditionFailed(f"walls of factor {i} are not all H1", i)
            dyns[i] = dyn
            plus.append(("ray", dyn.conj, dyn.period))
            minus.append(("ray", dyn.conj, W.inverse(dyn.period)))

    def orient(h: SymHalfspace) -> SymHalfspace:
        d = dyns.get(h.factor)
        if d is None:
            raise PreconditionFailed(f"factor {h.factor} is fixed by g", h)
        if isinstance(d, int):
            want = "ge" if d > 0 else "le"
            return h if h.desc[0] == want else inst.complement(h)
        # the side containing the attracting end contains far points along the axis
        far = W.mul(d.conj, d.period * (len(h.desc[0]) + len(d.conj) + 2))
        return h if inst.factors[h.factor].contains(h.desc, far) else inst.complement(h)

    return Endpoints(BoundaryPoint(tuple(minus)), BoundaryPoint(tuple(plus)), orient)


# ---------------------------------------------------------------------------
# H0 walls versus H1 walls and the splitting of the core


def h0_h1_transverse(a: GroupAction, w: Window) -> tuple[SymHalfspace, SymHalfspace] | None:
    """A pair (H0 wall, H1 wall) meeting the window that is not transverse, or None."""
    inst = a.instance
    h0, h1 = [], []
    for h in inst.walls_meeting(w):
        c = classify_halfspace(a, h)
        if c.h0:
            h0.append(h)
        elif c.h1:
            h1.append(h)
    for x in h0:
        for y in h1:
            if x.factor != y.factor:
                continue
            factor = inst.factors[x.factor]
            if not isinstance(factor, Finite):
                return x, y
            ws = graph_walls(factor.graph)
            if not transverse(ws[x.desc[0]], ws[y.desc[0]]):
                return x, y
    return None


@dataclass(frozen=True)
class CoreSplitting:
    """Irreducible factors of the core restricted to a box, grouped by wall class.

    ``factors`` lists (number of vertices, class) per factor, where the class
    is "H0" or "H1" when all walls of the factor share it and "mixed"
    otherwise.
    """

    points: int
    factors: tuple[tuple[int, str], ...]
    reconstructs: bool

    @property
    def splits(self) -> bool:
        return self.reconstructs and all(c != "mixed" for _, c in self.factors)

    @property
    def dimensions(self) -> tuple[int, int]:
        return (sum(1 for _, c in self.factors if c == "H0"), sum(1 for _, c in self.factors if c == "H1"))


CORE_GRAPH_CAP = 5000


def core_splitting(a: GroupAction, radius: int = 3, base: tuple | None = None) -> CoreSplitting:
    """Decompose the core restricted to a box window and check it splits as C0 × C1."""
    inst = a.instance
    box = inst.window(base, radius, "box")
    core, _ = core_window(a, box)
    if len(core) > CORE_GRAPH_CAP:
        raise WindowBudgetExceeded(f"core window has {len(core)} points")
    edges = [(p, q) for i, p in enumerate(core) for q in core[i + 1:] if inst.distance(p, q) == 1]
    graph = MedianGraph(core, edges, validate=False)
    parts = product_isomorphism(graph)
    classes = []
    for wall_list in wall_classes(graph):
        kinds = set()
        for wall in wall_list:
            i, j = next((i, j) for i, j in graph.edges if (wall.mask_a >> i & 1) != (wall.mask_a >> j & 1))
            (h,) = inst.separating_walls(graph.vertices[i], graph.vertices[j])
            kinds.add(classify_halfspace(a, h).cls)
        kind = kinds.pop() if len(kinds) == 1 else "mixed"
        size = len({tuple(1 if w.mask_a >> k & 1 else 0 for w in wall_list) for k in range(graph.n)})
        classes.append((size, kind if kind in ("H0", "H1") else "mixed"))
    return CoreSplitting(len(core), tuple(classes), parts is not None)


__all__ = [
    "Endpoints", "GateResult", "InversionCertificate", "MinWitness", "NotFoundAtRadius", "Refutation",
    "CoreSplitting", "TranslationLength", "WallWeighting", "core_splitting", "h0_h1_transverse", "cyclic_action", "distance", "endpoints", "is_non_transverse",
    "is_semisimple", "min_window", "minset_membership", "orbit_wall_sets", "range_check",
    "reduced_core_gate", "translation_length", "tree_dynamics",
]
