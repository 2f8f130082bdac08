import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from mediankit import words as W
from mediankit.actions import (FixedVertex, GroupAction, InvariantCube, check_wall_inversions, classify_halfspace,
                               classify_window, core_membership, core_window, essential_core, find_invariant_convex,
                               fixed_point_or_cube, has_inversions, is_essential, minimal_subtree, wall_inverted)
from mediankit.errors import InversionPresent
from mediankit.instances import Finite, FreeTree, Line, ProductInstance, automorphism, finite_map, line_map, tree_map
from mediankit.median_core import MedianGraph, is_automorphism, subalgebra_closure, walls
from mediankit.oracles import simulate_class, window_core_oracle

from suite import corpus, curated, graph_automorphisms, grid, hypercube, line_reflection

Z = ProductInstance([Line()])
Z2 = ProductInstance([Line(), Line()])
F2 = ProductInstance([FreeTree(2)])


def act(inst, *gens):
    return GroupAction(inst, [automorphism(inst, maps) for maps in gens])


def brute_inverted_walls(a: GroupAction, radius: int) -> set[str]:
    """Walls h of the window whose image under some generator is h*."""
    inst = a.instance
    out = set()
    for h in inst.walls_meeting(inst.window(None, radius)):
        for g in a.generators:
            if g.apply_h(h) == inst.complement(h):
                out.add(inst.h_str(inst.canonical(h)))
    return out


class TestInversions:
    def test_translations(self):
        a = act(Z2, [line_map(1, 1), None], [None, line_map(1, 1)])
        assert check_wall_inversions(a, Z2.window(None, 3)) == []
        assert not has_inversions(a).present

    def test_odd_reflection(self):
        a = line_reflection()
        assert brute_inverted_walls(a, 4) == {"x0>=1"}
        rep = has_inversions(a)
        assert rep.present and Z.h_str(Z.canonical(rep.wall)) == "x0>=1"
        assert wall_inverted(a, Z.parse_halfspace("x0>=1"))[0]

    def test_even_reflection(self):
        a = act(Z, [line_map(-1, 0)])
        assert brute_inverted_walls(a, 6) == set()
        assert not has_inversions(a).present

    def test_tree_inversion(self):
        # v -> a * swap(v) with a <-> A swaps the endpoints of the edge {e, a}
        a = act(F2, [tree_map("a", 2, "a->A")])
        assert brute_inverted_walls(a, 3) == {"t0:cone(a)"}
        assert has_inversions(a).present


class TestClassify:
    def test_translation_nests(self):
        a = act(Z, [line_map(1, 1)])
        c = classify_halfspace(a, Z.parse_halfspace("x0>=0"))
        assert c.cls == "H1" and c.witness is not None

    def test_reflection_in_zero(self):
        a = act(Z, [line_map(-1, 0)])
        h = Z.parse_halfspace("x0>=1")
        # brute force: the orbit is {x>=1, x<=-1}, and these two are disjoint
        orbit = {Z.h_str(h), Z.h_str(a.generators[0].apply_h(h))}
        assert orbit == {"x0>=1", "x0<=-1"}
        c = classify_halfspace(a, h)
        assert (c.cls, c.barred) == ("H0", "HhalfBar*")
        assert classify_halfspace(a, Z.complement(h)).barred == "HhalfBar"

    def test_axis_complement_of_cone(self):
        a = act(F2, [tree_map("a", 2)])
        h = F2.parse_halfspace("t0:~cone(b)")
        c = classify_halfspace(a, h)
        assert c.cls == "Hhalf"
        sim = simulate_class(a, h)
        assert sim.cls == "Hhalf"

    @pytest.mark.parametrize("case", [c for c in curated() if not any(isinstance(f, Finite) for f in c.instance.factors)],
                             ids=lambda c: c.name)
    def test_matches_orbit_simulation(self, case):
        a = case.action
        radius = 2 if any(isinstance(f, FreeTree) for f in case.instance.factors) else 3
        for rec in classify_window(a, case.instance.window(None, radius)):
            sim = simulate_class(a, rec.halfspace)
            assert rec.cls in sim.cls_options, case.instance.h_str(rec.halfspace)
            assert rec.barred in sim.barred_options, case.instance.h_str(rec.halfspace)


class TestCores:
    def test_trivial_group(self):
        a = GroupAction(F2, [])
        w = F2.window(None, 2)
        c, cbar = core_window(a, w)
        assert len(c) == len(cbar) == len(w.points)

    def test_axis(self):
        a = act(F2, [tree_map("a", 2)])
        c, cbar = core_window(a, F2.window(None, 4))
        assert sorted(p[0] for p in c) == sorted(["", "a", "aa", "aaa", "aaaa", "A", "AA", "AAA", "AAAA"])
        assert c == cbar

    def test_odd_reflection_by_oracle(self):
        a = line_reflection()
        v = window_core_oracle(a, 5)
        assert v.match
        c, cbar = core_window(a, Z.window(None, 5))
        assert [p[0] for p in c] == list(range(-5, 6))
        assert [p[0] for p in cbar] == [0, 1]
        assert v.details["reduced_core"] == [[0], [1]]

    def test_blocking_halfspace(self):
        a = line_reflection()
        m = core_membership(a, (4,))
        assert m.in_core and not m.in_reduced_core
        assert not Z.membership((4,), m.blocking_reduced)


class TestEssential:
    def test_plane_translations(self):
        a = act(Z2, [line_map(1, 1), None], [None, line_map(1, 1)])
        ess, witness = is_essential(a, Z2.window(None, 4))
        assert ess and witness is None
        assert find_invariant_convex(a, Z2.window(None, 4)) is None

    def test_trivial_line(self):
        a = GroupAction(Z, [])
        ess, _ = is_essential(a, Z.window(None, 3))
        assert not ess
        conv = find_invariant_convex(a, Z.window(None, 3))
        assert conv.points == ((0,),)

    def test_axis_is_invariant(self):
        a = act(F2, [tree_map("a", 2)])
        w = F2.window(None, 3)
        ess, witness = is_essential(a, w)
        assert not ess and witness.cls in ("Hhalf", "Hhalf*")
        conv = find_invariant_convex(a, w)
        assert sorted(p[0] for p in conv.points) == sorted(["", "a", "aa", "aaa", "A", "AA", "AAA"])

    def test_horizontal_fiber(self):
        a = act(Z2, [line_map(1, 1), None])
        ec = essential_core(a)
        assert ec.dimension == 1
        pts = ec.window_points(Z2.window(None, 3))
        assert pts and all(p[1] == 0 for p in pts)
        assert sorted(p[0] for p in pts) == list(range(-3, 4))

    def test_trivial_action_is_a_point(self):
        ec = essential_core(GroupAction(Z2, []))
        assert ec.dimension == 0 and ec.window_points(Z2.window(None, 2)) == [(0, 0)]

    def test_tree_axis(self):
        ec = essential_core(act(F2, [tree_map("a", 2)]))
        assert ec.to_json()["parts"] == [{"subtree": {"generators": ["a"], "hair": ""}}]

    def test_inversions_are_refused(self):
        with pytest.raises(InversionPresent):
            essential_core(line_reflection())


def finite_action(g: MedianGraph, perms: list[dict]) -> GroupAction:
    inst = ProductInstance([Finite(g)])
    return GroupAction(inst, [automorphism(inst, [finite_map(g, g, p)]) for p in perms])


def check_fixed_point_or_cube(a: GroupAction, g: MedianGraph) -> None:
    res = fixed_point_or_cube(a)
    gens = [s.maps[0] for s in a.generators]
    fixed = [v for v in g.vertices if all(f.apply(v) == v for f in gens)]
    if isinstance(res, FixedVertex):
        assert res.point[0] in fixed
        return
    # an inverted wall rules out fixed vertices
    assert fixed == []
    cube = {p[0] for p in res.points}
    assert len(cube) == 2 ** res.dimension
    assert all({f.apply(v) for v in cube} == cube for f in gens)
    assert sorted(subalgebra_closure(g, cube)) == sorted(cube)
    traces = set()
    for w in walls(g):
        side = frozenset(v for v in cube if v in w.side_a)
        if side and side != cube:
            traces.add(frozenset([side, frozenset(cube) - side]))
    # a k-cube has exactly k walls, and they are pairwise transverse
    assert len(traces) == res.dimension
    for s, t in itertools.combinations(traces, 2):
        assert all(x & y for x in s for y in t)


class TestFinite:
    def test_identity_on_cube(self):
        q = hypercube(3)
        res = fixed_point_or_cube(finite_action(q, [{v: v for v in q.vertices}]))
        assert res == FixedVertex(("000",))

    def test_swap_on_square(self):
        sq = grid(2, 2)
        swap = {(i, j): (j, i) for i, j in sq.vertices}
        assert is_automorphism(sq, swap)
        brute = [v for v in sq.vertices if swap[v] == v]
        assert brute == [(0, 0), (1, 1)]
        assert fixed_point_or_cube(finite_action(sq, [swap])) == FixedVertex(((0, 0),))

    def test_edge_flip(self):
        k2 = MedianGraph([0, 1], [(0, 1)])
        res = fixed_point_or_cube(finite_action(k2, [{0: 1, 1: 0}]))
        assert isinstance(res, InvariantCube) and res.dimension == 1 and res.points == ((0,), (1,))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 199), st.integers(1, 3), st.integers(0, 10**6))
    def test_random_groups(self, idx, k, seed):
        g = corpus()[idx][1]
        autos = graph_automorphisms(g, 500)
        rng = random.Random(seed)
        a = finite_action(g, [rng.choice(autos) for _ in range(k)])
        for rec in classify_window(a, a.instance.window(None, g.n)):
            assert rec.cls == "H0"
        check_fixed_point_or_cube(a, g)


class TestMinimalSubtree:
    def test_examples(self):
        assert minimal_subtree(FreeTree(2), ["a"]).edge_in_subtree("", "a")
        st_ = minimal_subtree(FreeTree(2), ["aa", "bb"])
        assert st_.edge_in_subtree("a", "a") and not st_.edge_in_subtree("a", "b")
        assert minimal_subtree(FreeTree(2), []).is_trivial()

    def test_substitution_maps(self):
        # ⟨v -> b·swap(v)⟩ has square v -> ba·v, whose axis is the minimal subtree
        st_ = minimal_subtree(FreeTree(2), [tree_map("b", 2, "a->b,b->a")])
        axis = {W.mul(*(["ba"] * n)) for n in range(3)} | {W.mul(*(["AB"] * n)) for n in range(3)}
        for p in axis:
            assert st_.vertex_in_subtree(p)
