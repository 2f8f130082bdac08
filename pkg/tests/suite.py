"""Shared fixtures: the curated action suite and the random finite corpus."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache

import networkx as nx

from mediankit.actions import GroupAction
from mediankit.instances import Finite, FreeTree, Line, ProductInstance, automorphism, finite_map, line_map, tree_map
from mediankit.median_core import MedianGraph
from mediankit.pocset import Pocset, realize_median_graph, verify_pocset


# ---------------------------------------------------------------------------
# small graphs


def path_graph(n: int) -> MedianGraph:
    return MedianGraph(list(range(n)), [(i, i + 1) for i in range(n - 1)])


def hypercube(d: int) -> MedianGraph:
    verts = ["".join(bits) for bits in itertools.product("01", repeat=d)]
    edges = [(v, v[:i] + "1" + v[i + 1:]) for v in verts for i in range(d) if v[i] == "0"]
    return MedianGraph(verts, edges)


def grid(a: int, b: int) -> MedianGraph:
    verts = list(itertools.product(range(a), range(b)))
    edges = [((i, j), (i + 1, j)) for i in range(a - 1) for j in range(b)]
    edges += [((i, j), (i, j + 1)) for i in range(a) for j in range(b - 1)]
    return MedianGraph(verts, edges)


def tree_graph(g: nx.Graph) -> MedianGraph:
    return MedianGraph(sorted(g.nodes), sorted(tuple(sorted(e)) for e in g.edges))


# ---------------------------------------------------------------------------
# random corpus of finite median graphs


def lattice_pocset(rng: random.Random, dim: int, side: int, npoints: int) -> Pocset:
    """Halfspaces {x_i >= k} of ℤ^dim restricted to a random finite point set."""
    pts = {tuple(rng.randrange(side) for _ in range(dim)) for _ in range(npoints)}
    sides = {}
    for i in range(dim):
        for k in range(1, side):
            up = frozenset(p for p in pts if p[i] >= k)
            if up and len(up) < len(pts):
                sides.setdefault((up, frozenset(pts) - up), f"x{i}k{k}")
    pairs, ids = [], {}
    for (up, down), name in sides.items():
        if (down, up) in ids:
            continue
        ids[(up, down)] = name + "a"
        ids[(down, up)] = name + "b"
        pairs.append((name + "a", name + "b"))
    order = [(ids[a], ids[b]) for a in ids for b in ids if a != b and a[0] < b[0]]
    return Pocset.from_pairs(pairs, order)


def relation_pocset(rng: random.Random, npairs: int, density: float) -> Pocset:
    """Random star-pairs with random containments, closed under the pocset rules."""
    pairs = [(f"h{i}", f"h{i}*") for i in range(npairs)]
    order = []
    for i, j in itertools.combinations(range(npairs), 2):
        if rng.random() < density:
            a = pairs[i][rng.randrange(2)]
            b = pairs[j][rng.randrange(2)]
            order.append((a, b) if rng.random() < 0.5 else (b, a))
    return Pocset.from_pairs(pairs, order)


def _count_ultrafilters(p: Pocset, cap: int) -> int:
    count = 0
    pairs = p.pairs()
    chosen: list[str] = []

    def rec(i: int) -> bool:
        nonlocal count
        if i == len(pairs):
            count += 1
            return count <= cap
        for x in pairs[i]:
            if all(not p.disjoint(x, y) for y in chosen):
                chosen.append(x)
                ok = rec(i + 1)
                chosen.pop()
                if not ok:
                    return False
        return True

    rec(0)
    return count


@lru_cache(maxsize=None)
def corpus(n: int = 200, seed: int = 2024, max_pairs: int = 16, max_vertices: int = 64) -> tuple:
    """``n`` pairs (pocset, median graph) with at most ``max_pairs`` walls and ``max_vertices`` vertices."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        if rng.random() < 0.5:
            p = lattice_pocset(rng, rng.choice([1, 2, 2, 3]), rng.randint(2, 5), rng.randint(2, 9))
        else:
            p = relation_pocset(rng, rng.randint(1, 10), rng.choice([0.3, 0.6, 0.9]))
        if verify_pocset(p) or len(p.pairs()) > max_pairs:
            continue
        if _count_ultrafilters(p, max_vertices) > max_vertices:
            continue
        out.append((p, realize_median_graph(p)))
    return tuple(out)


def graph_automorphisms(g: MedianGraph, limit: int = 2000) -> list[dict]:
    """Up to ``limit`` automorphisms of ``g`` as vertex dictionaries."""
    nxg = nx.Graph()
    nxg.add_nodes_from(g.vertices)
    nxg.add_edges_from(g.edge_labels())
    matcher = nx.algorithms.isomorphism.GraphMatcher(nxg, nxg)
    return list(itertools.islice(matcher.isomorphisms_iter(), limit))


# ---------------------------------------------------------------------------
# curated inversion-free actions on product instances


@dataclass(frozen=True)
class Case:
    name: str
    action: GroupAction

    @property
    def instance(self) -> ProductInstance:
        return self.action.instance


def _case(name: str, factors, gens) -> Case:
    inst = ProductInstance(factors)
    autos = [automorphism(inst, maps, perm) for maps, perm in gens]
    return Case(name, GroupAction(inst, autos))


def L(b: int, eps: int = 1):
    return line_map(eps, b)


@lru_cache(maxsize=None)
def curated() -> tuple[Case, ...]:
    T2, T3 = FreeTree(2), FreeTree(3)
    p3 = Finite(path_graph(3))
    flip3 = finite_map(p3.graph, p3.graph, [2, 1, 0])
    return (
        _case("Z shift", [Line()], [([L(1)], None)]),
        _case("Z shift by 2", [Line()], [([L(2)], None)]),
        _case("Z reflection in 0", [Line()], [([L(0, -1)], None)]),
        _case("Z even dihedral", [Line()], [([L(2)], None), ([L(0, -1)], None)]),
        _case("Z2 translations", [Line(), Line()], [([L(1), None], None), ([None, L(1)], None)]),
        _case("Z2 horizontal", [Line(), Line()], [([L(1), None], None)]),
        _case("Z2 translate (1,-2)", [Line(), Line()], [([L(1), L(-2)], None)]),
        _case("Z2 swap and diagonal", [Line(), Line()], [([None, None], (1, 0)), ([L(1), L(1)], None)]),
        _case("Z2 glide", [Line(), Line()], [([None, L(1)], (1, 0))]),
        _case("F2 <a>", [T2], [([tree_map("a", 2)], None)]),
        _case("F2 <a2,b2>", [T2], [([tree_map("aa", 2)], None), ([tree_map("bb", 2)], None)]),
        _case("F2 <ab,ba>", [T2], [([tree_map("ab", 2)], None), ([tree_map("ba", 2)], None)]),
        _case("F2 <commutator>", [T2], [([tree_map("abAB", 2)], None)]),
        _case("F2 <a,bab^-1>", [T2], [([tree_map("a", 2)], None), ([tree_map("baB", 2)], None)]),
        _case("F2 letter swap", [T2], [([tree_map("", 2, "a->b,b->a")], None)]),
        _case("F3 whole group", [T3], [([tree_map(x, 3)], None) for x in "abc"]),
        _case("F3 <ab,c2>", [T3], [([tree_map("ab", 3)], None), ([tree_map("cc", 3)], None)]),
        _case("Z x F2 diagonal", [Line(), T2], [([L(1), tree_map("a", 2)], None)]),
        _case("Z x F2 split", [Line(), T2], [([L(1), None], None), ([None, tree_map("b", 2)], None)]),
        _case("Z x F3 mixed", [Line(), T3], [([None, tree_map("ab", 3)], None), ([L(2), tree_map("c", 3)], None)]),
        _case("Z x P3 shift-flip", [Line(), p3], [([L(1), flip3], None)]),
        _case("Z2 x F2 flat", [Line(), Line(), T2], [([L(1), None, None], None), ([None, L(1), None], None)]),
    )


def curated_elements() -> list[tuple[str, ProductInstance, object]]:
    """Every generator of the suite and a few products, labelled."""
    out = []
    for case in curated():
        a = case.action
        for k, g in enumerate(a.generators):
            out.append((f"{case.name} / {a.names[k]}", case.instance, g))
        if len(a.generators) > 1:
            out.append((f"{case.name} / product", case.instance, a.element((1, 2))))
    return out


def line_reflection() -> GroupAction:
    inst = ProductInstance([Line()])
    return GroupAction(inst, [automorphism(inst, [L(1, -1)])])


# ---------------------------------------------------------------------------
# acceptance summary lines, printed at the end of the pytest run

ACCEPTANCE: dict[int, str] = {}


def record(n: int, title: str, failures: list, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if not failures else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[n] = line
    print(line)
    assert not failures, failures[:5]
