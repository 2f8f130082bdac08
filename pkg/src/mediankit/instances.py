"""Symbolic infinite median algebras.

A :class:`ProductInstance` is a product of factors, each one of

* :class:`Line` -- the integers with the middle-value median;
* :class:`FreeTree` -- the Cayley tree of the free group F_m;
* :class:`Finite` -- a finite :class:`~mediankit.median_core.MedianGraph`.

Points are tuples with one coordinate per factor (an integer, a reduced
word, or a vertex label).  Every halfspace of a product is the pullback of a
halfspace of one factor, so a :class:`SymHalfspace` is a factor index plus a
factor-specific descriptor:

* Line: ``("ge", k)`` for {x >= k} or ``("le", k)`` for {x <= k};
* FreeTree: ``(w, x)`` for the side containing ``w·x`` of the edge from
  ``w`` to ``w·x``;
* Finite: ``(wall_id, "a" | "b")``.

Descriptors are canonical, so two halfspaces are equal iff their
descriptors are.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from . import words as W
from .errors import KindMismatch, WindowBudgetExceeded
from .median_core import MedianGraph, convex_hull, rank as graph_rank, walls as graph_walls

WINDOW_POINT_CAP = 1_000_000
TREE_RADIUS_CAP = 12


class RelPos(enum.Enum):
    """The seven relative positions of two halfspaces."""

    EQUAL = "Equal"
    COMPLEMENT = "Complement"
    NESTED_IN = "NestedIn"
    NESTED_OVER = "NestedOver"
    FACING = "Facing"
    COFACING = "CoFacing"
    TRANSVERSE = "Transverse"


# ---------------------------------------------------------------------------
# factors


@dataclass(frozen=True)
class Line:
    """The median algebra ℤ."""

    kind = "line"
    rank = 1

    def check_point(self, p) -> None:
        if not isinstance(p, int) or isinstance(p, bool):
            raise ValueError(f"{p!r} is not an integer")

    def origin(self) -> int:
        return 0

    def median(self, a: int, b: int, c: int) -> int:
        return sorted((a, b, c))[1]

    def distance(self, a: int, b: int) -> int:
        return abs(a - b)

    def sphere(self, c: int, r: int) -> list[int]:
        return [c] if r == 0 else [c - r, c + r]

    def point_key(self, p: int):
        return p

    def interval(self, a: int, b: int) -> list[int]:
        return list(range(min(a, b), max(a, b) + 1))

    def contains(self, h: tuple, p: int) -> bool:
        return p >= h[1] if h[0] == "ge" else p <= h[1]

    def complement(self, h: tuple) -> tuple:
        return ("le", h[1] - 1) if h[0] == "ge" else ("ge", h[1] + 1)

    def subset(self, h: tuple, k: tuple) -> bool:
        if h[0] != k[0]:
            return False
        return h[1] >= k[1] if h[0] == "ge" else h[1] <= k[1]

    def separating(self, x: int, y: int) -> list[tuple]:
        if y >= x:
            return [("ge", k) for k in range(x + 1, y + 1)]
        return [("le", k) for k in range(x - 1, y - 1, -1)]

    def canonical(self, h: tuple) -> tuple:
        return h if h[0] == "ge" else self.complement(h)

    def h_key(self, h: tuple):
        return (h[1], h[0])

    def h_str(self, i: int, h: tuple) -> str:
        return f"x{i}{'>=' if h[0] == 'ge' else '<='}{h[1]}"

    def to_json(self) -> dict:
        return {"kind": "line"}


@dataclass(frozen=True)
class FreeTree:
    """The Cayley tree of the free group on ``m`` letters."""

    m: int
    kind = "free_tree"
    rank = 1

    def check_point(self, p) -> None:
        W.check_word(p, self.m)

    def origin(self) -> str:
        return ""

    def median(self, a: str, b: str, c: str) -> str:
        ab, ac, bc = W.lcp_len(a, b), W.lcp_len(a, c), W.lcp_len(b, c)
        if ab >= ac and ab >= bc:
            return a[:ab]
        if ac >= bc:
            return a[:ac]
        return b[:bc]

    def distance(self, a: str, b: str) -> int:
        return len(a) + len(b) - 2 * W.lcp_len(a, b)

    def sphere(self, c: str, r: int) -> list[str]:
        out = []
        for v in W.words_up_to(self.m, r):
            if len(v) == r:
                out.append(W.mul(c, v))
        return out

    def point_key(self, p: str):
        return W.word_key(p)

    def interval(self, a: str, b: str) -> list[str]:
        k = W.lcp_len(a, b)
        return [a[:i] for i in range(len(a), k - 1, -1)] + [b[:i] for i in range(k + 1, len(b) + 1)]

    @staticmethod
    def cone(h: tuple) -> tuple[str, bool]:
        """``(r, True)`` for the cone of words with prefix r, ``(r, False)`` for its complement."""
        w, x = h
        if w and w[-1] == x.swapcase():
            return w, False
        return w + x, True

    def contains(self, h: tuple, p: str) -> bool:
        r, pos = self.cone(h)
        return p.startswith(r) == pos

    def complement(self, h: tuple) -> tuple:
        w, x = h
        return (W.mul(w, x), x.swapcase())

    def subset(self, h: tuple, k: tuple) -> bool:
        a, pa = self.cone(h)
        b, pb = self.cone(k)
        if pa and pb:
            return a.startswith(b)
        if pa:
            return not a.startswith(b) and not b.startswith(a)
        if pb:
            return False
        return b.startswith(a)

    def separating(self, x: str, y: str) -> list[tuple]:
        k = W.lcp_len(x, y)
        out = []
        for i in range(len(x), k, -1):
            out.append((x[:i], x[i - 1].swapcase()))
        for i in range(k, len(y)):
            out.append((y[:i], y[i]))
        return out

    def canonical(self, h: tuple) -> tuple:
        w, x = h
        return h if len(W.mul(w, x)) > len(w) else self.complement(h)

    def h_key(self, h: tuple):
        w, x = h
        return (W.word_key(w), W.letter_key(x))

    def h_str(self, i: int, h: tuple) -> str:
        w, x = h
        head = W.mul(w, x)
        if len(head) > len(w):
            return f"t{i}:cone({head})"
        return f"t{i}:~cone({w})"

    def to_json(self) -> dict:
        return {"kind": "free_tree", "rank": self.m}


@dataclass(frozen=True, eq=False)
class Finite:
    """A finite median graph used as a factor."""

    graph: MedianGraph
    kind = "finite"

    @property
    def rank(self) -> int:
        return graph_rank(self.graph)

    def check_point(self, p) -> None:
        if p not in self.graph.index:
            raise ValueError(f"{p!r} is not a vertex")

    def origin(self):
        return self.graph.vertices[0]

    def median(self, a, b, c):
        return self.graph.median(a, b, c)

    def distance(self, a, b) -> int:
        return self.graph.distance(a, b)

    def sphere(self, c, r: int) -> list:
        i = self.graph.index[c]
        return [v for j, v in enumerate(self.graph.vertices) if self.graph.dist[i, j] == r]

    def point_key(self, p):
        return self.graph.index[p]

    def interval(self, a, b) -> list:
        mask = self.graph.interval_mask(self.graph.index[a], self.graph.index[b])
        return [v for i, v in enumerate(self.graph.vertices) if mask >> i & 1]

    def _mask(self, h: tuple) -> int:
        w = graph_walls(self.graph)[h[0]]
        return w.mask_a if h[1] == "a" else w.mask_b

    def contains(self, h: tuple, p) -> bool:
        return bool(self._mask(h) >> self.graph.index[p] & 1)

    def complement(self, h: tuple) -> tuple:
        return (h[0], "b" if h[1] == "a" else "a")

    def subset(self, h: tuple, k: tuple) -> bool:
        mh = self._mask(h)
        return mh & self._mask(k) == mh

    def separating(self, x, y) -> list[tuple]:
        i, j = self.graph.index[x], self.graph.index[y]
        out = []
        for w in graph_walls(self.graph):
            if (w.mask_a >> i & 1) != (w.mask_a >> j & 1):
                out.append((w.id, "a" if w.mask_a >> j & 1 else "b"))
        return out

    def canonical(self, h: tuple) -> tuple:
        return (h[0], "b")

    def h_key(self, h: tuple):
        return h

    def h_str(self, i: int, h: tuple) -> str:
        return f"f{i}:w{h[0]}{h[1]}"

    def halfspace_of_mask(self, mask: int) -> tuple:
        for w in graph_walls(self.graph):
            if w.mask_a == mask:
                return (w.id, "a")
            if w.mask_b == mask:
                return (w.id, "b")
        raise ValueError("mask is not a halfspace")

    def to_json(self) -> dict:
        return self.graph.to_json()


Factor = Line | FreeTree | Finite


# ---------------------------------------------------------------------------
# halfspaces


@dataclass(frozen=True, order=False)
class SymHalfspace:
    """A halfspace of a product: pullback of ``desc`` on factor ``factor``."""

    factor: int
    desc: tuple


# ---------------------------------------------------------------------------
# factor maps


@dataclass(frozen=True)
class LineMap:
    """x ↦ eps·x + b."""

    eps: int
    b: int

    def apply(self, p: int) -> int:
        return self.eps * p + self.b

    def apply_h(self, h: tuple) -> tuple:
        kind, k = h
        if self.eps == 1:
            return (kind, k + self.b)
        return ("le" if kind == "ge" else "ge", self.b - k)

    def compose(self, other: "LineMap") -> "LineMap":
        return LineMap(self.eps * other.eps, self.eps * other.b + self.b)

    def inverse(self) -> "LineMap":
        return LineMap(self.eps, -self.eps * self.b)

    def pure(self) -> "LineMap":
        return LineMap(self.eps, 0)

    def is_identity(self) -> bool:
        return self.eps == 1 and self.b == 0

    def to_json(self) -> dict:
        return {"line": {"eps": self.eps, "b": self.b}}


@dataclass(frozen=True)
class TreeMap:
    """v ↦ left · subst(v), reduced."""

    left: str
    subst: W.Substitution

    def apply(self, v: str) -> str:
        return W.mul(self.left, self.subst(v))

    def apply_h(self, h: tuple) -> tuple:
        w, x = h
        return (self.apply(w), self.subst.letter(x))

    def compose(self, other: "TreeMap") -> "TreeMap":
        return TreeMap(W.mul(self.left, self.subst(other.left)), self.subst.compose(other.subst))

    def inverse(self) -> "TreeMap":
        sinv = self.subst.inverse()
        return TreeMap(sinv(W.inverse(self.left)), sinv)

    def pure(self) -> "TreeMap":
        return TreeMap("", self.subst)

    def is_identity(self) -> bool:
        return self.left == "" and self.subst.is_identity()

    def power(self, n: int) -> "TreeMap":
        return _power(self, n, TreeMap("", W.Substitution.identity(self.subst.rank)))

    def to_json(self) -> dict:
        return {"tree": {"left": self.left, "subst": str(self.subst)}}


@dataclass(frozen=True)
class FiniteMap:
    """A graph isomorphism between finite factors, stored as image labels."""

    images: tuple
    src: MedianGraph = field(compare=False, hash=False, repr=False)
    dst: MedianGraph = field(compare=False, hash=False, repr=False)

    @classmethod
    def from_dict(cls, mapping: dict, src: MedianGraph, dst: MedianGraph) -> "FiniteMap":
        return cls(tuple(mapping[v] for v in src.vertices), src, dst)

    def apply(self, v):
        return self.images[self.src.index[v]]

    def apply_h(self, h: tuple) -> tuple:
        w = graph_walls(self.src)[h[0]]
        mask = w.mask_a if h[1] == "a" else w.mask_b
        image = 0
        for i, v in enumerate(self.src.vertices):
            if mask >> i & 1:
                image |= 1 << self.dst.index[self.images[i]]
        return Finite(self.dst).halfspace_of_mask(image)

    def compose(self, other: "FiniteMap") -> "FiniteMap":
        return FiniteMap(tuple(self.apply(other.apply(v)) for v in other.src.vertices), other.src, self.dst)

    def inverse(self) -> "FiniteMap":
        back = {img: v for v, img in zip(self.src.vertices, self.images)}
        return FiniteMap(tuple(back[v] for v in self.dst.vertices), self.dst, self.src)

    def pure(self) -> "FiniteMap":
        return self

    def is_identity(self) -> bool:
        return self.src is self.dst and self.images == self.src.vertices

    def is_valid(self) -> bool:
        if sorted(self.images, key=self.dst.index.get) != list(self.dst.vertices):
            return False
        return all(self.dst.adjacent(self.images[i], self.images[j]) for i, j in self.src.edges)

    def to_json(self) -> dict:
        return {"finite": {"perm": [self.dst.index[v] for v in self.images]}}


FactorMap = LineMap | TreeMap | FiniteMap


def _power(f, n: int, identity):
    if n < 0:
        return _power(f.inverse(), -n, identity)
    result, base = identity, f
    while n:
        if n & 1:
            result = result.compose(base)
        base = base.compose(base)
        n >>= 1
    return result


def identity_map(factor: Factor) -> FactorMap:
    if isinstance(factor, Line):
        return LineMap(1, 0)
    if isinstance(factor, FreeTree):
        return TreeMap("", W.Substitution.identity(factor.m))
    return FiniteMap(factor.graph.vertices, factor.graph, factor.graph)


# ---------------------------------------------------------------------------
# automorphisms


@dataclass(frozen=True)
class Automorphism:
    """Factor permutation plus per-factor maps.

    Factor ``i`` is carried to factor ``perm[i]`` by ``maps[i]``, so
    ``apply(p)[perm[i]] = maps[i].apply(p[i])``.
    """

    perm: tuple[int, ...]
    maps: tuple

    def apply(self, p: tuple) -> tuple:
        out = [None] * len(p)
        for i, (j, f) in enumerate(zip(self.perm, self.maps)):
            out[j] = f.apply(p[i])
        return tuple(out)

    def apply_h(self, h: SymHalfspace) -> SymHalfspace:
        return SymHalfspace(self.perm[h.factor], self.maps[h.factor].apply_h(h.desc))

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self ∘ other."""
        perm = tuple(self.perm[other.perm[i]] for i in range(len(self.perm)))
        maps = tuple(self.maps[other.perm[i]].compose(other.maps[i]) for i in range(len(self.perm)))
        return Automorphism(perm, maps)

    def inverse(self) -> "Automorphism":
        n = len(self.perm)
        perm = [0] * n
        maps = [None] * n
        for i, (j, f) in enumerate(zip(self.perm, self.maps)):
            perm[j] = i
            maps[j] = f.inverse()
        return Automorphism(tuple(perm), tuple(maps))

    def power(self, n: int) -> "Automorphism":
        ident = Automorphism(tuple(range(len(self.perm))),
                             tuple(_identity_like(f) for f in self.maps_by_target()))
        return _power(self, n, ident)

    def maps_by_target(self) -> list:
        out = [None] * len(self.perm)
        for i, j in enumerate(self.perm):
            out[j] = self.maps[i]
        return out

    def pure(self) -> "Automorphism":
        """The image in the finite quotient: translation parts dropped."""
        return Automorphism(self.perm, tuple(f.pure() for f in self.maps))

    def is_identity(self) -> bool:
        return all(j == i for i, j in enumerate(self.perm)) and all(f.is_identity() for f in self.maps)

    def preserves_factors(self) -> bool:
        return all(j == i for i, j in enumerate(self.perm))

    def perm_order(self) -> int:
        k, cur = 1, list(self.perm)
        while any(c != i for i, c in enumerate(cur)):
            cur = [self.perm[c] for c in cur]
            k += 1
        return k

    def to_json(self) -> dict:
        return {"perm": list(self.perm), "maps": [f.to_json() for f in self.maps]}


def _identity_like(f):
    if isinstance(f, LineMap):
        return LineMap(1, 0)
    if isinstance(f, TreeMap):
        return TreeMap("", W.Substitution.identity(f.subst.rank))
    return FiniteMap(f.dst.vertices, f.dst, f.dst)


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class Window:
    """A finite set of points around ``basepoint``.

    ``shape`` is ``"ball"`` (wall-distance ball of radius R) or ``"box"``
    (product of the factor balls, i.e. the convex hull of the ball).
    """

    basepoint: tuple
    radius: int
    shape: str
    points: tuple

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return p in self._set

    @property
    def _set(self) -> frozenset:
        s = self.__dict__.get("_cached_set")
        if s is None:
            s = frozenset(self.points)
            object.__setattr__(self, "_cached_set", s)
        return s


@dataclass(frozen=True)
class BoundaryPoint:
    """Per-factor endpoint: ``("+inf",)``, ``("-inf",)``, ``("int", k)``,
    ``("ray", initial, period)`` or ``("vertex", v)``."""

    coords: tuple

    def to_json(self) -> list:
        out = []
        for c in self.coords:
            if c[0] in ("+inf", "-inf"):
                out.append(c[0])
            elif c[0] == "ray":
                out.append({"ray": {"initial": c[1], "period": c[2]}})
            else:
                out.append({c[0]: c[1]})
        return out


# ---------------------------------------------------------------------------
# the product


class ProductInstance:
    """A product of Line, FreeTree and Finite factors."""

    def __init__(self, factors: Sequence[Factor]):
        self.factors: tuple = tuple(factors)
        if not self.factors:
            raise ValueError("an instance needs at least one factor")

    def __repr__(self) -> str:
        return f"ProductInstance({[f.kind for f in self.factors]})"

    @property
    def rank(self) -> int:
        return sum(f.rank for f in self.factors)

    def origin(self) -> tuple:
        return tuple(f.origin() for f in self.factors)

    def check_point(self, p: tuple) -> None:
        if not isinstance(p, tuple) or len(p) != len(self.factors):
            raise ValueError(f"{p!r} does not have {len(self.factors)} coordinates")
        for f, c in zip(self.factors, p):
            f.check_point(c)

    def point_key(self, p: tuple):
        return tuple(f.point_key(c) for f, c in zip(self.factors, p))

    def sort_points(self, pts: Iterable[tuple]) -> list[tuple]:
        return sorted(pts, key=self.point_key)

    def median(self, x: tuple, y: tuple, z: tuple) -> tuple:
        return tuple(f.median(a, b, c) for f, a, b, c in zip(self.factors, x, y, z))

    def distance(self, x: tuple, y: tuple) -> int:
        return sum(f.distance(a, b) for f, a, b in zip(self.factors, x, y))

    # halfspaces
    def complement(self, h: SymHalfspace) -> SymHalfspace:
        return SymHalfspace(h.factor, self.factors[h.factor].complement(h.desc))

    def canonical(self, h: SymHalfspace) -> SymHalfspace:
        """The representative halfspace of h's wall."""
        return SymHalfspace(h.factor, self.factors[h.factor].canonical(h.desc))

    def membership(self, p: tuple, h: SymHalfspace) -> bool:
        return self.factors[h.factor].contains(h.desc, p[h.factor])

    def subset(self, h: SymHalfspace, k: SymHalfspace) -> bool:
        return h.factor == k.factor and self.factors[h.factor].subset(h.desc, k.desc)

    def relative_position(self, h: SymHalfspace, k: SymHalfspace) -> RelPos:
        if h.factor != k.factor:
            return RelPos.TRANSVERSE
        f = self.factors[h.factor]
        hs, ks = h.desc, k.desc
        hc, kc = f.complement(hs), f.complement(ks)
        if hs == ks:
            return RelPos.EQUAL
        if hs == kc:
            return RelPos.COMPLEMENT
        if f.subset(hs, ks):
            return RelPos.NESTED_IN
        if f.subset(ks, hs):
            return RelPos.NESTED_OVER
        if f.subset(hc, ks):
            return RelPos.FACING
        if f.subset(hs, kc):
            return RelPos.COFACING
        return RelPos.TRANSVERSE

    def separating_walls(self, x: tuple, y: tuple) -> list[SymHalfspace]:
        """Halfspaces containing ``y`` but not ``x``, one per separating wall."""
        out = []
        for i, (f, a, b) in enumerate(zip(self.factors, x, y)):
            out.extend(SymHalfspace(i, d) for d in f.separating(a, b))
        return out

    def h_key(self, h: SymHalfspace):
        return (h.factor, self.factors[h.factor].h_key(h.desc))

    def h_str(self, h: SymHalfspace) -> str:
        return self.factors[h.factor].h_str(h.factor, h.desc)

    def parse_halfspace(self, text: str) -> SymHalfspace:
        """Inverse of :meth:`h_str`."""
        text = text.strip()
        if text.startswith("x"):
            for op, kind in ((">=", "ge"), ("<=", "le")):
                if op in text:
                    i, k = text[1:].split(op)
                    return self._checked(SymHalfspace(int(i), (kind, int(k))), Line)
        if text.startswith("t"):
            i, rest = text[1:].split(":", 1)
            i = int(i)
            if rest.startswith("cone(") and rest.endswith(")"):
                head = rest[5:-1]
                return self._checked(SymHalfspace(i, (head[:-1], head[-1])), FreeTree)
            if rest.startswith("~cone(") and rest.endswith(")"):
                w = rest[6:-1]
                return self._checked(SymHalfspace(i, (w, w[-1].swapcase())), FreeTree)
        if text.startswith("f"):
            i, rest = text[1:].split(":", 1)
            if rest.startswith("w") and rest[-1] in "ab":
                return self._checked(SymHalfspace(int(i), (int(rest[1:-1]), rest[-1])), Finite)
        raise ValueError(f"cannot parse halfspace {text!r}")

    def _checked(self, h: SymHalfspace, kind) -> SymHalfspace:
        if not 0 <= h.factor < len(self.factors) or not isinstance(self.factors[h.factor], kind):
            raise ValueError(f"halfspace {h} does not match the factor kind")
        return h

    # automorphisms
    def check_automorphism(self, g: Automorphism) -> None:
        n = len(self.factors)
        if len(g.perm) != n or sorted(g.perm) != list(range(n)) or len(g.maps) != n:
            raise ValueError("automorphism does not match the number of factors")
        for i, (j, f) in enumerate(zip(g.perm, g.maps)):
            src, dst = self.factors[i], self.factors[j]
            if type(src) is not type(dst):
                raise KindMismatch(f"factor {i} ({src.kind}) sent to factor {j} ({dst.kind})")
            if isinstance(src, Line):
                if not isinstance(f, LineMap) or f.eps not in (1, -1):
                    raise KindMismatch(f"factor {i} needs a line map")
            elif isinstance(src, FreeTree):
                if src.m != dst.m:
                    raise KindMismatch(f"factor {i} and factor {j} have different ranks")
                if not isinstance(f, TreeMap) or f.subst.rank != src.m:
                    raise KindMismatch(f"factor {i} needs a tree map over {src.m} letters")
                W.check_word(f.left, src.m)
            else:
                if not isinstance(f, FiniteMap) or f.src is not src.graph or f.dst is not dst.graph:
                    raise KindMismatch(f"factor {i} needs a map between its finite graphs")
                if not f.is_valid():
                    raise ValueError(f"map on factor {i} is not a graph isomorphism")

    def identity(self) -> Automorphism:
        return Automorphism(tuple(range(len(self.factors))), tuple(identity_map(f) for f in self.factors))

    # windows
    def _factor_balls(self, base: tuple, r: int) -> list[list[list]]:
        spheres = []
        for f, c in zip(self.factors, base):
            if isinstance(f, FreeTree) and r > TREE_RADIUS_CAP:
                raise WindowBudgetExceeded(f"tree radius {r} exceeds {TREE_RADIUS_CAP}")
            layers = []
            for d in range(r + 1):
                s = f.sphere(c, d)
                if not s:
                    break
                layers.append(s)
            spheres.append(layers)
        return spheres

    def ball_is_median_closed(self, base: tuple, r: int) -> bool:
        """Whether the wall-distance ball is closed under medians.

        In a rank-1 factor the median of three points is no farther from the
        centre than the middle of their three distances; hence with at most
        two factors that are trees or lines every ball is closed.  Otherwise
        we decide by direct search.
        """
        moving = [f for f in self.factors if not (isinstance(f, Finite) and f.graph.n == 1)]
        if len(moving) <= 2 and all(f.rank == 1 for f in moving):
            return True
        if r <= 1:
            return True
        pts = self._ball_points(base, r)
        return _closed_by_search(self, pts, base, r)

    def _ball_points(self, base: tuple, r: int) -> list[tuple]:
        spheres = self._factor_balls(base, r)
        count = _ball_count([[len(s) for s in layers] for layers in spheres], r)
        if count > WINDOW_POINT_CAP:
            raise WindowBudgetExceeded(f"window would contain {count} points")
        out: list[tuple] = []

        def rec(i: int, left: int, acc: list) -> None:
            if i == len(spheres):
                out.append(tuple(acc))
                return
            for d, layer in enumerate(spheres[i]):
                if d > left:
                    break
                for c in layer:
                    acc.append(c)
                    rec(i + 1, left - d, acc)
                    acc.pop()

        rec(0, r, [])
        return out

    def _box_points(self, base: tuple, r: int) -> list[tuple]:
        spheres = self._factor_balls(base, r)
        per = []
        for f, layers in zip(self.factors, spheres):
            pts = [c for layer in layers for c in layer]
            if isinstance(f, Finite):
                pts = sorted(convex_hull(f.graph, pts).members, key=f.point_key)
            per.append(pts)
        total = 1
        for p in per:
            total *= len(p)
        if total > WINDOW_POINT_CAP:
            raise WindowBudgetExceeded(f"window would contain {total} points")
        return [tuple(t) for t in itertools.product(*per)]

    def window(self, base: tuple | None = None, r: int = 6, shape: str = "auto") -> Window:
        """Points around ``base``.

        ``shape="auto"`` gives the ball when it is median-closed and the box
        (the convex hull of the ball) otherwise.
        """
        base = self.origin() if base is None else base
        self.check_point(base)
        if r < 0:
            raise ValueError("radius must be nonnegative")
        if shape == "auto":
            shape = "ball" if self.ball_is_median_closed(base, r) else "box"
        if shape == "ball":
            pts = self._ball_points(base, r)
        elif shape == "box":
            pts = self._box_points(base, r)
        else:
            raise ValueError(f"unknown window shape {shape!r}")
        return Window(base, r, shape, tuple(self.sort_points(pts)))

    def walls_meeting(self, w: Window) -> list[SymHalfspace]:
        """Walls with both sides meeting the window, as the side away from the basepoint."""
        seen: dict[SymHalfspace, None] = {}
        base = w.basepoint
        for i, f in enumerate(self.factors):
            coords = {p[i] for p in w.points}
            for c in sorted(coords, key=f.point_key):
                for d in f.separating(base[i], c):
                    seen.setdefault(SymHalfspace(i, d), None)
        return sorted(seen, key=lambda h: (h.factor, self.factors[h.factor].distance(
            base[h.factor], _near_point(self.factors[h.factor], h.desc)), self.h_key(h)))

    def wall_census(self, w: Window) -> list[SymHalfspace]:
        """Walls of edges with at least one endpoint in the window (a superset of walls_meeting)."""
        seen: dict[SymHalfspace, None] = {}
        for i, f in enumerate(self.factors):
            coords = sorted({p[i] for p in w.points}, key=f.point_key)
            for c in coords:
                for nb in f.sphere(c, 1):
                    (d,) = f.separating(c, nb)
                    seen.setdefault(SymHalfspace(i, f.canonical(d)), None)
        return sorted(seen, key=self.h_key)

    # serialisation
    def point_to_json(self, p: tuple) -> list:
        return list(p)

    def point_from_json(self, data) -> tuple:
        p = tuple(data)
        self.check_point(p)
        return p

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}


def _near_point(f: Factor, desc: tuple):
    """A point of the factor adjacent to the wall of ``desc`` (for sorting)."""
    if isinstance(f, Line):
        return desc[1]
    if isinstance(f, FreeTree):
        return desc[0]
    w = graph_walls(f.graph)[desc[0]]
    mask = w.mask_a if desc[1] == "a" else w.mask_b
    return f.graph.vertices[(mask & -mask).bit_length() - 1]


def _ball_count(sphere_sizes: list[list[int]], r: int) -> int:
    counts = [1] + [0] * r
    for sizes in sphere_sizes:
        nxt = [0] * (r + 1)
        for total, c in enumerate(counts):
            if not c:
                continue
            for d, s in enumerate(sizes):
                if total + d > r:
                    break
                nxt[total + d] += c * s
        counts = nxt
    return sum(counts)


def _closed_by_search(inst: ProductInstance, pts: list[tuple], base: tuple, r: int) -> bool:
    # A ball fails to be closed iff some median of three ball points leaves it.
    # For products, medians are coordinatewise, so it suffices to look at the
    # per-factor distance profiles of the points.
    profiles = sorted({tuple(f.distance(b, c) for f, b, c in zip(inst.factors, base, p)) for p in pts})
    finite_closed = all(
        not isinstance(f, Finite) or _finite_ball_closed(f, b, r) for f, b in zip(inst.factors, base))
    if not finite_closed:
        return False
    for a, b, c in itertools.combinations_with_replacement(profiles, 3):
        mid = [sorted(t)[1] for t in zip(a, b, c)]
        if sum(mid) > r:
            return False
    return True


def _finite_ball_closed(f: Finite, base, r: int) -> bool:
    g = f.graph
    i = g.index[base]
    ball = [j for j in range(g.n) if g.dist[i, j] <= r]
    table = g.median_table()
    inside = set(ball)
    return all(int(table[x, y, z]) in inside for x, y, z in itertools.combinations(ball, 3))


def relative_position(inst: ProductInstance, h: SymHalfspace, k: SymHalfspace) -> RelPos:
    return inst.relative_position(h, k)


def eval_median(inst: ProductInstance, x: tuple, y: tuple, z: tuple) -> tuple:
    return inst.median(x, y, z)


def apply(g: Automorphism, p: tuple) -> tuple:
    return g.apply(p)


def apply_h(g: Automorphism, h: SymHalfspace) -> SymHalfspace:
    return g.apply_h(h)


def membership(inst: ProductInstance, p: tuple, h: SymHalfspace) -> bool:
    return inst.membership(p, h)


def separating_walls(inst: ProductInstance, x: tuple, y: tuple) -> list[SymHalfspace]:
    return inst.separating_walls(x, y)


def window(inst: ProductInstance, base: tuple | None = None, r: int = 6, shape: str = "auto") -> Window:
    return inst.window(base, r, shape)


def walls_meeting(inst: ProductInstance, w: Window) -> list[SymHalfspace]:
    return inst.walls_meeting(w)


def line_map(eps: int, b: int) -> LineMap:
    return LineMap(eps, b)


def tree_map(left: str, m: int, subst: str = "") -> TreeMap:
    return TreeMap(W.reduce(left), W.Substitution.parse(subst, m))


def finite_map(src: MedianGraph, dst: MedianGraph, mapping: dict | Sequence) -> FiniteMap:
    if not isinstance(mapping, dict):
        mapping = {v: dst.vertices[k] for v, k in zip(src.vertices, mapping)}
    return FiniteMap.from_dict(mapping, src, dst)


def automorphism(inst: ProductInstance, maps: Sequence[FactorMap | None],
                 perm: Sequence[int] | None = None) -> Automorphism:
    """Build and validate an automorphism; ``None`` entries are identity maps."""
    perm = tuple(range(len(inst.factors))) if perm is None else tuple(perm)
    full = tuple(identity_map(inst.factors[i]) if f is None else f for i, f in enumerate(maps))
    g = Automorphism(perm, full)
    inst.check_automorphism(g)
    return g


__all__ = [
    "Automorphism", "BoundaryPoint", "Finite", "FiniteMap", "FreeTree", "Line", "LineMap",
    "ProductInstance", "RelPos", "SymHalfspace", "TreeMap", "Window", "apply", "apply_h",
    "automorphism", "eval_median", "finite_map", "identity_map", "line_map", "membership",
    "relative_position", "separating_walls", "tree_map", "walls_meeting", "window",
]
