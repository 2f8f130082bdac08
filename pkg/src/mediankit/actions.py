"""Finitely generated group actions on product instances.

Everything about a halfspace on factor ``i`` is governed by the group
``G_i`` that the stabiliser of factor ``i`` (under the factor permutation)
induces on that factor: elements outside the stabiliser move the halfspace
to another factor, where it is transverse to the original.  We compute
Schreier generators for the stabiliser and then split ``G_i`` as

    finite quotient Q_i  <--  G_i  -->  kernel L_i,

where the quotient forgets translation parts (the sign of a line map, the
letter substitution of a tree map) and the kernel consists of translations
(line) or left multiplications (tree).  ``L_i`` is normal and of finite
index, so orbit finiteness, strict nesting and the minimal subtree are read
off ``L_i`` exactly; when ``G_i`` is finite it is enumerated outright.
Bounded word searches are only used to exhibit witness words.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from . import words as W
from .errors import InversionPresent, UndecidedAtBound
from .instances import (Automorphism, Finite, FreeTree, Line, ProductInstance,
                        RelPos, SymHalfspace, TreeMap, Window, identity_map)
from .median_core import MedianGraph, product_graph, subalgebra_closure, walls as graph_walls
from .stallings import StallingsGraph, geodesic

GROUP_CAP = 100_000

Word = tuple[int, ...]


def reduce_word(w: Iterable[int]) -> Word:
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def invert_word(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


class GroupAction:
    """An action of the group generated by ``generators`` on ``instance``.

    Words are tuples of nonzero integers: ``k`` stands for generator
    ``k - 1`` and ``-k`` for its inverse; the word ``(x1, ..., xn)`` is the
    product ``x1 ∘ ... ∘ xn`` (so ``xn`` acts first).
    """

    def __init__(self, instance: ProductInstance, generators: Sequence[Automorphism],
                 names: Sequence[str] | None = None, validate: bool = True):
        self.instance = instance
        self.generators = tuple(generators)
        self.names = tuple(names) if names is not None else tuple(f"g{i}" for i in range(len(generators)))
        if len(self.names) != len(self.generators):
            raise ValueError("one name per generator is required")
        if validate:
            for g in self.generators:
                instance.check_automorphism(g)
        self._inverses = tuple(g.inverse() for g in self.generators)
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"GroupAction({self.instance!r}, generators={list(self.names)})"

    # -- memo ------------------------------------------------------------
    def _cached(self, key: Hashable, compute: Callable):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()
        with self._lock:
            return self._memo.setdefault(key, value)

    # -- words -----------------------------------------------------------
    def letter(self, x: int) -> Automorphism:
        return self.generators[x - 1] if x > 0 else self._inverses[-x - 1]

    def element(self, word: Word) -> Automorphism:
        g = self.instance.identity()
        for x in word:
            g = g.compose(self.letter(x))
        return g

    def word_str(self, word: Word | None) -> str | None:
        if word is None:
            return None
        if not word:
            return "1"
        return "*".join(self.names[x - 1] if x > 0 else f"{self.names[-x - 1]}^-1" for x in word)

    def ball(self, radius: int) -> list[tuple[Word, Automorphism]]:
        """Distinct elements of word length at most ``radius``, shortest words first."""
        return self._cached(("ball", radius), lambda: self._ball(radius))

    def _ball(self, radius: int) -> list[tuple[Word, Automorphism]]:
        ident = self.instance.identity()
        seen = {ident: ()}
        layer = [((), ident)]
        out = [((), ident)]
        letters = [k for i in range(len(self.generators)) for k in (i + 1, -(i + 1))]
        for _ in range(radius):
            nxt = []
            for w, g in layer:
                for x in letters:
                    if w and w[-1] == -x:
                        continue
                    h = g.compose(self.letter(x))
                    if h not in seen:
                        seen[h] = w + (x,)
                        nxt.append((w + (x,), h))
            out.extend(nxt)
            layer = nxt
            if len(out) > GROUP_CAP:
                raise UndecidedAtBound(f"word ball of radius {radius} exceeds {GROUP_CAP} elements", radius)
        return out

    def default_bound(self) -> int:
        return max(2 * self.instance.rank, 2)

    # -- factor permutation ----------------------------------------------
    def perm_orbit(self, i: int) -> dict[int, tuple[Word, Automorphism]]:
        """Factors in the orbit of ``i`` with transversal elements carrying ``i`` to them."""
        return self._cached(("orbit", i), lambda: self._perm_orbit(i))

    def _perm_orbit(self, i: int) -> dict[int, tuple[Word, Automorphism]]:
        trans = {i: ((), self.instance.identity())}
        queue = deque([i])
        while queue:
            j = queue.popleft()
            w, t = trans[j]
            for k, s in enumerate(self.generators):
                j2 = s.perm[j]
                if j2 not in trans:
                    trans[j2] = (reduce_word((k + 1,) + w), s.compose(t))
                    queue.append(j2)
        return dict(sorted(trans.items()))

    def stabilizer_generators(self, i: int) -> list[tuple[Word, Automorphism]]:
        """Schreier generators of the stabiliser of factor ``i``."""
        orbit = self.perm_orbit(i)
        out = []
        seen = set()
        for j, (wj, tj) in orbit.items():
            for k, s in enumerate(self.generators):
                wk, tk = orbit[s.perm[j]]
                g = tk.inverse().compose(s.compose(tj))
                if g.is_identity() or g in seen:
                    continue
                seen.add(g)
                out.append((reduce_word(invert_word(wk) + (k + 1,) + wj), g))
        return out

    def factor_group(self, i: int) -> "FactorGroup":
        return self._cached(("factor", i), lambda: FactorGroup.build(self, i))

    def orbit_representative(self, i: int) -> int:
        return min(self.perm_orbit(i))

    def is_factor_preserving(self) -> bool:
        return all(g.preserves_factors() for g in self.generators)


# ---------------------------------------------------------------------------
# the group induced on one factor


@dataclass
class FactorGroup:
    """The group ``G_i`` induced on factor ``i`` by the stabiliser of ``i``.

    ``reps`` maps each element of the finite quotient to a coset
    representative ``(word, map)``; ``kernel`` lists generators of the kernel
    (translation amounts for lines, words for trees).
    """

    index: int
    factor: object
    gens: list
    reps: dict
    kernel: list
    t: int = 0
    reflection: int | None = None
    stallings: StallingsGraph | None = None

    @classmethod
    def build(cls, action: GroupAction, i: int) -> "FactorGroup":
        factor = action.instance.factors[i]
        gens = [(w, g.maps[i]) for w, g in action.stabilizer_generators(i)]
        ident = identity_map(factor)
        reps = {ident.pure(): ((), ident)}
        queue = deque([ident.pure()])
        kernel_maps = []
        while queue:
            q = queue.popleft()
            wq, rq = reps[q]
            for ws, s in gens:
                e = s.compose(rq)
                p = e.pure()
                we = reduce_word(ws + wq)
                if p not in reps:
                    reps[p] = (we, e)
                    queue.append(p)
                    if len(reps) > GROUP_CAP:
                        raise UndecidedAtBound(f"finite quotient on factor {i} exceeds {GROUP_CAP}")
                else:
                    k = reps[p][1].inverse().compose(e)
                    if not k.is_identity():
                        kernel_maps.append(k)
        fg = cls(i, factor, gens, reps, [])
        if isinstance(factor, Line):
            fg.kernel = sorted({abs(k.b) for k in kernel_maps})
            fg.t = math.gcd(*fg.kernel) if fg.kernel else 0
            for q, (_, r) in reps.items():
                if r.eps == -1:
                    fg.reflection = r.b % fg.t if fg.t else r.b
        elif isinstance(factor, FreeTree):
            fg.kernel = sorted({k.left for k in kernel_maps}, key=W.word_key)
            fg.stallings = StallingsGraph(fg.kernel, factor.m)
        return fg

    @property
    def is_finite(self) -> bool:
        if isinstance(self.factor, Line):
            return self.t == 0
        if isinstance(self.factor, FreeTree):
            return self.stallings.is_trivial()
        return True

    def elements(self) -> list[tuple[Word, object]]:
        """All elements with words (only for finite groups)."""
        if not self.is_finite:
            raise ValueError("the induced group is infinite")
        return list(self.reps.values())

    def reflections(self) -> str:
        return "none" if self.reflection is None else f"x -> {self.reflection} - x (mod {self.t})"


# ---------------------------------------------------------------------------
# classification


CLASSES = ("H1", "H0", "Hhalf", "Hhalf*")
BARRED = ("H1", "H0bar", "HhalfBar", "HhalfBar*")


@dataclass(frozen=True)
class HalfspaceClassification:
    """Membership of one halfspace in the dynamical classes.

    ``cls`` is one of H1, H0, Hhalf, Hhalf* (the first partition) and
    ``barred`` one of H1, H0bar, HhalfBar, HhalfBar* (the second).
    ``witness`` is a group word: the element nesting the halfspace strictly
    into itself (H1) or a facing, resp. co-facing, translate (barred
    half classes).  The classes are always decided exactly; ``confidence``
    is ``"bounded"`` only when a witness search ran to ``bound`` without
    success.
    """

    halfspace: SymHalfspace
    cls: str
    barred: str
    witness: str | None = None
    confidence: str = "exact"
    bound: int | None = None

    @property
    def h1(self) -> bool:
        return self.cls == "H1"

    @property
    def h0(self) -> bool:
        return self.cls == "H0"

    @property
    def hhalf(self) -> bool:
        return self.cls == "Hhalf"

    @property
    def hhalf_star(self) -> bool:
        return self.cls == "Hhalf*"

    @property
    def h0bar(self) -> bool:
        return self.barred == "H0bar"

    @property
    def hhalfbar(self) -> bool:
        return self.barred == "HhalfBar"

    @property
    def hhalfbar_star(self) -> bool:
        return self.barred == "HhalfBar*"

    def to_json(self, inst: ProductInstance) -> dict:
        out = {"wall": inst.h_str(self.halfspace), "class": self.cls, "barred": self.barred,
               "witness": self.witness, "confidence": self.confidence}
        if self.confidence == "bounded":
            out["bound"] = self.bound
        return out


def _rel(inst: ProductInstance, i: int, d1: tuple, d2: tuple) -> RelPos:
    return inst.relative_position(SymHalfspace(i, d1), SymHalfspace(i, d2))


def _search_word(a: GroupAction, h: SymHalfspace, want: Callable[[SymHalfspace], bool],
                 bound: int) -> str | None:
    for w, g in a.ball(bound):
        if g.perm[h.factor] == h.factor and want(g.apply_h(h)):
            return a.word_str(w)
    return None


def _finite_barred(a: GroupAction, fg: FactorGroup, h: SymHalfspace) -> tuple[str, str | None]:
    inst = a.instance
    facing = cofacing = None
    for w, f in fg.elements():
        pos = _rel(inst, h.factor, f.apply_h(h.desc), h.desc)
        if pos is RelPos.FACING and facing is None:
            facing = w
        elif pos is RelPos.COFACING and cofacing is None:
            cofacing = w
    if facing is not None and cofacing is not None:
        raise AssertionError(f"{inst.h_str(h)} has both facing and co-facing translates")
    if facing is not None:
        return "HhalfBar", a.word_str(facing)
    if cofacing is not None:
        return "HhalfBar*", a.word_str(cofacing)
    return "H0bar", None


def classify_halfspace(a: GroupAction, h: SymHalfspace, bound: int | None = None) -> HalfspaceClassification:
    """Decide the dynamical classes of ``h`` under ``a``."""
    key = ("classify", h, bound)
    return a._cached(key, lambda: _classify(a, h, bound))


def _classify(a: GroupAction, h: SymHalfspace, bound: int | None) -> HalfspaceClassification:
    inst = a.instance
    bound = a.default_bound() if bound is None else bound
    fg = a.factor_group(h.factor)
    factor = inst.factors[h.factor]
    if fg.is_finite:
        barred, witness = _finite_barred(a, fg, h)
        return HalfspaceClassification(h, "H0", barred, witness)
    in_core = True
    if isinstance(factor, FreeTree):
        in_core = fg.stallings.edge_in_subtree(*h.desc)
    if in_core:
        witness = _search_word(a, h, lambda k: inst.relative_position(k, h) is RelPos.NESTED_IN, bound)
        conf = "exact" if witness is not None else "bounded"
        return HalfspaceClassification(h, "H1", "H1", witness, conf, bound if witness is None else None)
    # an edge off the minimal subtree: the side containing the subtree is in Hhalf
    inward = factor.contains(h.desc, fg.stallings.hair())
    if inward:
        witness = _search_word(a, h, lambda k: inst.relative_position(k, h) is RelPos.FACING, bound)
        cls, barred = "Hhalf", "HhalfBar"
    else:
        witness = _search_word(a, h, lambda k: inst.relative_position(k, h) is RelPos.COFACING, bound)
        cls, barred = "Hhalf*", "HhalfBar*"
    conf = "exact" if witness is not None else "bounded"
    return HalfspaceClassification(h, cls, barred, witness, conf, bound if witness is None else None)


def classify_window(a: GroupAction, w: Window, bound: int | None = None) -> list[HalfspaceClassification]:
    """Classify both sides of every wall meeting the window."""
    out = []
    for h in a.instance.walls_meeting(w):
        out.append(classify_halfspace(a, h, bound))
        out.append(classify_halfspace(a, a.instance.complement(h), bound))
    return out


# ---------------------------------------------------------------------------
# inversions


def wall_inverted(a: GroupAction, h: SymHalfspace, bound: int | None = None) -> tuple[bool, str | None]:
    """Whether some group element swaps the two sides of ``h``; with a witness word if found."""
    inst = a.instance
    fg = a.factor_group(h.factor)
    factor = inst.factors[h.factor]
    hc = inst.complement(h)
    found = False
    if fg.is_finite:
        for w, f in fg.elements():
            if f.apply_h(h.desc) == hc.desc:
                return True, a.word_str(w)
        return False, None
    if isinstance(factor, Line):
        k = inst.canonical(h).desc[1]
        found = fg.reflection is not None and (2 * k - 1 - fg.reflection) % fg.t == 0
    elif isinstance(factor, FreeTree):
        wx = W.mul(*h.desc)
        for _, r in fg.reps.values():
            w2, x2 = r.apply_h(h.desc)
            if x2 == hc.desc[1] and fg.stallings.contains(W.mul(wx, W.inverse(w2))):
                found = True
                break
    if not found:
        return False, None
    bound = a.default_bound() if bound is None else bound
    return True, _search_word(a, h, lambda k: k == hc, bound)


def check_wall_inversions(a: GroupAction, w: Window, bound: int | None = None) -> list[tuple[SymHalfspace, str | None]]:
    """Walls meeting the window that some element inverts, with witness words."""
    out = []
    for h in a.instance.walls_meeting(w):
        inv, word = wall_inverted(a, h, bound)
        if inv:
            out.append((a.instance.canonical(h), word))
    return out


@dataclass(frozen=True)
class InversionReport:
    present: bool
    wall: SymHalfspace | None = None
    word: str | None = None


def _tree_vertex_paths(st: StallingsGraph) -> dict[int, str]:
    paths = {0: ""}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for c in W.letters(st.m):
            u = st.out[v].get(c)
            if u is not None and u not in paths:
                paths[u] = paths[v] + c
                queue.append(u)
    return paths


def _inversion_candidates(a: GroupAction, i: int) -> Iterable[SymHalfspace]:
    """Walls of factor ``i`` such that every inverted wall is a translate of one of them."""
    inst = a.instance
    factor = inst.factors[i]
    fg = a.factor_group(i)
    if isinstance(factor, Line):
        if fg.reflection is None:
            return
        if fg.t == 0:
            if fg.reflection % 2:
                yield SymHalfspace(i, ("ge", (fg.reflection + 1) // 2))
            return
        for k in range(fg.t + 1):
            yield SymHalfspace(i, ("ge", k))
    elif isinstance(factor, FreeTree):
        if fg.is_finite:
            # a finite-order element without fixed vertex inverts the middle
            # edge of [v, gv] for every vertex v; take v = e
            for _, f in fg.elements():
                u = f.apply("")
                if len(u) % 2:
                    path = geodesic("", u)
                    mid = len(u) // 2
                    yield SymHalfspace(i, (path[mid], W.mul(W.inverse(path[mid]), path[mid + 1])))
            return
        # inverted edges lie in the minimal subtree, whose edges are translates
        # of the lifts of the core edges
        st = fg.stallings
        paths = _tree_vertex_paths(st)
        for v, x in sorted(st.core_edges):
            yield SymHalfspace(i, (paths[v], x))
    else:
        for wall in graph_walls(factor.graph):
            yield SymHalfspace(i, (wall.id, "b"))


def has_inversions(a: GroupAction, bound: int | None = None) -> InversionReport:
    """Decide whether any element of the group inverts some wall."""
    def compute() -> InversionReport:
        for i in range(len(a.instance.factors)):
            if a.orbit_representative(i) != i:
                continue
            for h in _inversion_candidates(a, i):
                inv, word = wall_inverted(a, h, bound)
                if inv:
                    return InversionReport(True, a.instance.canonical(h), word)
        return InversionReport(False)
    return a._cached(("inversions", bound), compute)


# ---------------------------------------------------------------------------
# cores


@dataclass(frozen=True)
class CoreMembership:
    in_core: bool
    in_reduced_core: bool
    blocking: SymHalfspace | None = None
    blocking_reduced: SymHalfspace | None = None


def _tree_blocking(factor: FreeTree, st: StallingsGraph, i: int, y: str) -> SymHalfspace | None:
    gate, d = st.project(y)
    if d == 0:
        return None
    nxt = geodesic(gate, y)[1]
    # the side of the edge {gate, nxt} containing the gate
    return SymHalfspace(i, (nxt, W.mul(W.inverse(nxt), gate)))


def factor_core_blocking(a: GroupAction, i: int, y) -> tuple[SymHalfspace | None, SymHalfspace | None]:
    """Blocking halfspaces for the coordinate ``y`` on factor ``i`` (None when not blocked)."""
    inst = a.instance
    factor = inst.factors[i]
    fg = a.factor_group(i)
    if isinstance(factor, FreeTree) and not fg.is_finite:
        b = _tree_blocking(factor, fg.stallings, i, y)
        return b, b
    if not fg.is_finite:
        return None, None
    if isinstance(factor, Line):
        if fg.reflection is None:
            return None, None
        lo, hi = fg.reflection // 2, (fg.reflection + 1) // 2
        if y < lo:
            return None, SymHalfspace(i, ("ge", lo))
        if y > hi:
            return None, SymHalfspace(i, ("le", hi))
        return None, None
    # finite induced group: a blocking halfspace separates y from one of its translates
    for _, f in fg.elements():
        for d in factor.separating(y, f.apply(y)):
            h = SymHalfspace(i, d)
            if classify_halfspace(a, h).hhalfbar:
                return None, h
    return None, None


def core_membership(a: GroupAction, p: tuple) -> CoreMembership:
    """Membership of ``p`` in the core and the reduced core, with blocking halfspaces."""
    a.instance.check_point(p)
    block = block_r = None
    for i, y in enumerate(p):
        b, br = factor_core_blocking(a, i, y)
        block = block or b
        block_r = block_r or br
    return CoreMembership(block is None, block_r is None, block, block_r)


def core_window(a: GroupAction, w: Window) -> tuple[list[tuple], list[tuple]]:
    """Window points in the core and in the reduced core."""
    c, cbar = [], []
    cache: dict = {}
    for p in w.points:
        ok = ok_r = True
        for i, y in enumerate(p):
            if (i, y) not in cache:
                cache[i, y] = factor_core_blocking(a, i, y)
            b, br = cache[i, y]
            ok = ok and b is None
            ok_r = ok_r and br is None
        if ok:
            c.append(p)
        if ok_r:
            cbar.append(p)
    return c, cbar


# ---------------------------------------------------------------------------
# essentiality, invariant convex sets and the essential core


def is_essential(a: GroupAction, w: Window) -> tuple[bool, HalfspaceClassification | None]:
    """True when every wall meeting the window is H1; otherwise a non-H1 classification."""
    for h in a.instance.walls_meeting(w):
        c = classify_halfspace(a, h)
        if not c.h1:
            return False, c
    return True, None


@dataclass(frozen=True)
class InvariantConvex:
    """A G-invariant convex subset, given by a membership test and its window points."""

    kind: str
    contains: Callable[[tuple], bool] = field(repr=False)
    points: tuple


def find_invariant_convex(a: GroupAction, w: Window) -> InvariantConvex | None:
    """Look for a proper invariant convex subset visible in the window.

    Candidates are the core, the reduced core (without inversions) and the
    essential core.  Returns None when every candidate is the whole space.
    """
    window = set(w.points)
    c, cbar = core_window(a, w)
    if len(c) < len(window):
        return InvariantConvex("core", lambda p: core_membership(a, p).in_core, tuple(c))
    inversions = has_inversions(a).present
    if not inversions and len(cbar) < len(window):
        return InvariantConvex("reduced_core", lambda p: core_membership(a, p).in_reduced_core, tuple(cbar))
    if not inversions:
        ec = essential_core(a, w.basepoint)
        if ec.fixed:
            pts = tuple(p for p in w.points if ec.contains(p))
            return InvariantConvex("essential_core", ec.contains, pts)
    return None


@dataclass(frozen=True)
class EssentialCore:
    """A G-invariant convex sub-product all of whose walls are H1.

    ``parts[i]`` is ``("line",)`` for a whole line factor, ``("subtree", S)``
    for the minimal subtree of the Stallings graph ``S`` and ``("point", c)``
    for a fixed coordinate.
    """

    instance: ProductInstance
    parts: tuple

    @property
    def fixed(self) -> dict[int, object]:
        return {i: p[1] for i, p in enumerate(self.parts) if p[0] == "point"}

    @property
    def dimension(self) -> int:
        return sum(1 for p in self.parts if p[0] != "point")

    def contains(self, p: tuple) -> bool:
        for part, y in zip(self.parts, p):
            if part[0] == "point" and y != part[1]:
                return False
            if part[0] == "subtree" and not part[1].vertex_in_subtree(y):
                return False
        return True

    def window_points(self, w: Window) -> list[tuple]:
        return [p for p in w.points if self.contains(p)]

    def flat_coordinates(self, p: tuple) -> tuple[int, ...]:
        """Coordinates in ℤ^n (with the ℓ¹ metric) for points of a flat core.

        Line factors contribute their coordinate and cyclic subtree factors
        (an axis) the signed position along the axis.
        """
        out = []
        for part, y in zip(self.parts, p):
            if part[0] == "line":
                out.append(y)
            elif part[0] == "subtree":
                out.append(_axis_position(part[1], y))
        return tuple(out)

    def to_json(self) -> dict:
        parts = []
        for part in self.parts:
            if part[0] == "line":
                parts.append({"line": "all"})
            elif part[0] == "subtree":
                parts.append({"subtree": {"generators": list(part[1].generators), "hair": part[1].hair()}})
            else:
                parts.append({"point": part[1]})
        return {"dimension": self.dimension, "parts": parts}


def _axis_position(st: StallingsGraph, y: str) -> int:
    if st.rank() != 1:
        raise ValueError("the minimal subtree is not a line")
    c, v = _cyclic_generator(st)
    q = W.mul(W.inverse(c), y)
    n = len(q) // len(v) + 2
    if (v * n).startswith(q):
        return len(q)
    if (W.inverse(v) * n).startswith(q):
        return -len(q)
    raise ValueError(f"{y} is not on the axis")


def _cyclic_generator(st: StallingsGraph) -> tuple[str, str]:
    # the core of a rank-one subgroup is a single cycle; read it from the hair end
    hair = st.hair()
    v, _ = st.read(hair)
    word, cur, prev = "", v, None
    while True:
        for c in W.letters(st.m):
            u = st.out[cur].get(c)
            if u is not None and u in st.core_vertices and (prev is None or c != prev.swapcase()):
                word += c
                prev, cur = c, u
                break
        if cur == v:
            break
    return hair, word


def _tree_center(points: list[str]) -> tuple[str, str | None]:
    """Centre of a finite vertex set in a tree: a vertex, or an edge (u, v) when odd."""
    a = max(points, key=lambda p: (len(p), W.word_key(p)))
    def dist(x, y):
        return len(x) + len(y) - 2 * W.lcp_len(x, y)
    b = max(points, key=lambda p: (dist(a, p), W.word_key(p)))
    c = max(points, key=lambda p: (dist(b, p), W.word_key(p)))
    path = geodesic(b, c)
    d = len(path) - 1
    if d % 2 == 0:
        return path[d // 2], None
    return path[d // 2], path[d // 2 + 1]


def _fixed_coordinate(a: GroupAction, i: int, base) -> object:
    fg = a.factor_group(i)
    factor = a.instance.factors[i]
    if isinstance(factor, Line):
        if fg.reflection is None:
            return base
        if fg.reflection % 2:
            raise InversionPresent("a reflection inverts a wall", None, None)
        return fg.reflection // 2
    if isinstance(factor, FreeTree):
        orbit = sorted({f.apply(base) for _, f in fg.elements()}, key=W.word_key)
        u, v = _tree_center(orbit)
        if v is None:
            return u
        return min(u, v, key=W.word_key)
    elements = fg.elements()
    for x in factor.graph.vertices:
        if all(f.apply(x) == x for _, f in elements):
            return x
    raise AssertionError("inversion-free finite action without a fixed vertex")


def essential_core(a: GroupAction, base: tuple | None = None) -> EssentialCore:
    """An invariant convex sub-product on which every wall is H1.

    Infinite induced groups keep their core (a whole line or the minimal
    subtree); factors with finite induced group are pinned to a coordinate
    fixed by that group, transported along the factor orbit so that the
    resulting point is fixed by the whole group.
    """
    report = has_inversions(a)
    if report.present:
        raise InversionPresent("the action inverts a wall", report.wall, report.word)
    inst = a.instance
    base = inst.origin() if base is None else base
    parts: list = [None] * len(inst.factors)
    for i in range(len(inst.factors)):
        if a.orbit_representative(i) != i:
            continue
        fg = a.factor_group(i)
        orbit = a.perm_orbit(i)
        if fg.is_finite:
            x = _fixed_coordinate(a, i, base[i])
            for j, (_, tau) in orbit.items():
                parts[j] = ("point", tau.maps[i].apply(x))
        else:
            for j in orbit:
                fj = a.factor_group(j)
                parts[j] = ("line",) if isinstance(inst.factors[j], Line) else ("subtree", fj.stallings)
    return EssentialCore(inst, tuple(parts))


# ---------------------------------------------------------------------------
# finite instances: fixed points and invariant cubes


@dataclass(frozen=True)
class FixedVertex:
    point: tuple


@dataclass(frozen=True)
class InvariantCube:
    points: tuple
    dimension: int


def _finite_graph(inst: ProductInstance) -> MedianGraph:
    if not all(isinstance(f, Finite) for f in inst.factors):
        raise ValueError("fixed_point_or_cube needs an instance made of finite factors")
    return product_graph([f.graph for f in inst.factors])


def finite_inversions(a: GroupAction) -> bool:
    """Whether some element inverts a wall of a finite-only instance (orbit search on halfspaces)."""
    g = _finite_graph(a.instance)
    perms = [[g.index[s.apply(v)] for v in g.vertices] for s in a.generators]
    def image(mask: int, perm: list[int]) -> int:
        out = 0
        i = 0
        while mask:
            if mask & 1:
                out |= 1 << perm[i]
            mask >>= 1
            i += 1
        return out
    for w in graph_walls(g):
        seen = {w.mask_a}
        queue = [w.mask_a]
        while queue:
            m = queue.pop()
            for perm in perms:
                m2 = image(m, perm)
                if m2 not in seen:
                    seen.add(m2)
                    queue.append(m2)
        if w.mask_b in seen:
            return True
    return False


def fixed_point_or_cube(a: GroupAction) -> FixedVertex | InvariantCube:
    """A fixed vertex when no wall is inverted, else an invariant cube subalgebra."""
    inst = a.instance
    g = _finite_graph(inst)
    if not finite_inversions(a):
        for v in sorted(g.vertices, key=inst.point_key):
            if all(s.apply(v) == v for s in a.generators):
                return FixedVertex(v)
        raise AssertionError("inversion-free finite action without a fixed vertex")
    start = min(g.vertices, key=inst.point_key)
    orbit = {start}
    queue = [start]
    while queue:
        v = queue.pop()
        for s in a.generators:
            u = s.apply(v)
            if u not in orbit:
                orbit.add(u)
                queue.append(u)
    closure = subalgebra_closure(g, orbit)
    cubes = _cubes_of_subalgebra(g, closure)
    for cube in sorted(cubes, key=lambda c: (len(c), sorted(inst.point_key(p) for p in c))):
        if all(frozenset(s.apply(p) for p in cube) == cube for s in a.generators):
            pts = tuple(sorted(cube, key=inst.point_key))
            return InvariantCube(pts, len(pts).bit_length() - 1)
    raise AssertionError("no invariant cube in the orbit closure")


def _cubes_of_subalgebra(g: MedianGraph, members: list) -> list[frozenset]:
    """Vertex sets of the cubes of the cube complex whose vertex set is the subalgebra ``members``.

    Two members are adjacent when no third member lies between them.  An interval
    [x, z] of a finite median algebra is a distributive lattice of rank d(x, z), so
    it is a cube exactly when it has 2^d(x, z) elements.
    """
    nset = set(members)
    def between(x, y, z) -> bool:
        return g.median(x, y, z) == z
    nbrs = {x: [y for y in members if y != x and not any(z != x and z != y and between(x, y, z) for z in nset)]
            for x in members}
    cubes = set()
    for x in members:
        dist = {x: 0}
        queue = [x]
        for v in queue:
            for u in nbrs[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        for z, d in dist.items():
            box = frozenset(w for w in members if between(x, z, w))
            if len(box) == 2 ** d:
                cubes.add(box)
    return sorted(cubes, key=len)


# ---------------------------------------------------------------------------
# minimal subtrees and orbit keys


def minimal_subtree(factor: FreeTree, generators: Sequence[str | TreeMap]) -> StallingsGraph:
    """Stallings graph of the left-multiplication part of the generated group.

    Word generators act by left multiplication.  Tree maps with letter
    substitutions are reduced to their finite-index kernel of left
    multiplications, which has the same minimal subtree.
    """
    maps = [TreeMap(W.reduce(g), W.Substitution.identity(factor.m)) if isinstance(g, str) else g
            for g in generators]
    inst = ProductInstance([factor])
    autos = [Automorphism((0,), (m,)) for m in maps]
    return GroupAction(inst, autos).factor_group(0).stallings


def wall_orbit_key(a: GroupAction, h: SymHalfspace) -> tuple:
    """A canonical label of the G-orbit of the wall of ``h``."""
    i0 = a.orbit_representative(h.factor)
    orbit = a.perm_orbit(i0)
    tau = orbit[h.factor][1]
    h0 = tau.inverse().apply_h(h)
    return (i0,) + _factor_wall_key(a, h0)


def _factor_wall_key(a: GroupAction, h: SymHalfspace) -> tuple:
    inst = a.instance
    factor = inst.factors[h.factor]
    fg = a.factor_group(h.factor)
    canon = inst.canonical(h)
    if fg.is_finite:
        images = [inst.canonical(SymHalfspace(h.factor, f.apply_h(canon.desc))) for _, f in fg.elements()]
        best = min(images, key=inst.h_key)
        return ("wall", inst.h_str(best))
    if isinstance(factor, Line):
        k = canon.desc[1]
        keys = [k % fg.t]
        if fg.reflection is not None:
            keys.append((fg.reflection + 1 - k) % fg.t)
        return ("mod", fg.t, min(keys))
    st = fg.stallings
    keys = []
    for _, r in fg.reps.values():
        w, x = r.apply_h(canon.desc)
        keys.append(st.edge_orbit_key(w, x))
    return ("edge", min(keys, key=repr))


__all__ = [
    "CoreMembership", "EssentialCore", "FactorGroup", "FixedVertex", "GroupAction",
    "HalfspaceClassification", "InvariantConvex", "InvariantCube", "InversionReport",
    "check_wall_inversions", "classify_halfspace", "classify_window", "core_membership",
    "core_window", "essential_core", "find_invariant_convex", "fixed_point_or_cube",
    "has_inversions", "is_essential", "minimal_subtree", "wall_inverted", "wall_orbit_key",
]
