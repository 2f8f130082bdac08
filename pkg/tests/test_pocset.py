import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from mediankit.errors import InstanceTooLarge
from mediankit.median_core import MedianGraph, halfspace_pocset, is_isomorphism, verify_median_graph, walls
from mediankit.pocset import (Pocset, WidthExceeded, chain_partition, enumerate_ultrafilters,
                              realize_median_graph, verify_pocset)

from suite import hypercube, path_graph, relation_pocset


def brute_ultrafilters(p: Pocset) -> set[frozenset]:
    """Every choice of one side per pair with no two chosen sides disjoint."""
    out = set()
    for choice in itertools.product(*p.pairs()):
        if all(not p.disjoint(x, y) for x, y in itertools.combinations(choice, 2)):
            out.add(frozenset(choice))
    return out


def brute_min_chain_cover(elems, less) -> int:
    n = len(elems)
    for k in range(1, n + 1):
        for labels in itertools.product(range(k), repeat=n):
            groups = [[e for e, lab in zip(elems, labels) if lab == c] for c in range(k)]
            if all(less(a, b) or less(b, a) for g in groups for a, b in itertools.combinations(g, 2)):
                return k
    return 0


pocsets = st.builds(lambda seed, n, d: relation_pocset(random.Random(seed), n, d),
                    st.integers(0, 10**6), st.integers(1, 7), st.sampled_from([0.2, 0.5, 0.8]))


class TestVerify:
    def test_single_wall_is_valid(self):
        assert verify_pocset(Pocset.from_pairs([("a", "a*")])) == []

    def test_fixed_point_of_star(self):
        p = Pocset.from_pairs([("a", "a")])
        problems = verify_pocset(p)
        assert len(problems) == 1 and "fixed point of star" in problems[0]

    def test_element_below_its_complement(self):
        # halfspaces of the path 0-1-2: a = {0}, b = {0, 1}; then inject a <= a*
        order = [("a", "b"), ("b*", "a*"), ("a", "a*")]
        p = Pocset.from_pairs([("a", "a*"), ("b", "b*")], order, close=False)
        brute = [e for e in p.elements if p.leq(e, p.star[e])]
        assert brute == ["a"]
        problems = verify_pocset(p)
        assert len(problems) == 1 and "a <= star(a)" in problems[0]

    def test_order_must_reverse_under_star(self):
        p = Pocset.from_pairs([("a", "a*"), ("b", "b*")], [("a", "b")], close=False)
        assert any("order-reversing" in s for s in verify_pocset(p))

    @given(pocsets)
    def test_closure_is_a_partial_order(self, p):
        if verify_pocset(p):
            return
        for a, b in p.order:
            assert (b, a) not in p.order
            for c in p.elements:
                if (b, c) in p.order:
                    assert (a, c) in p.order


class TestUltrafilters:
    def test_one_wall(self):
        assert len(enumerate_ultrafilters(Pocset.from_pairs([("a", "a*")]))) == 2

    def test_three_transverse_walls(self):
        p = Pocset.from_pairs([("a", "a*"), ("b", "b*"), ("c", "c*")])
        assert len(enumerate_ultrafilters(p)) == 8

    def test_four_cycle(self):
        square = MedianGraph(["00", "01", "10", "11"], [("00", "01"), ("00", "10"), ("01", "11"), ("10", "11")])
        p = halfspace_pocset(square)
        assert len(brute_ultrafilters(p)) == 4
        ufs = enumerate_ultrafilters(p)
        assert {u.chosen for u in ufs} == brute_ultrafilters(p)
        # each ultrafilter is the set of halfspaces containing one vertex
        ws = walls(square)
        principal = {frozenset(f"w{w.id}{w.side_of(square, v)}" for w in ws) for v in square.vertices}
        assert principal == brute_ultrafilters(p)

    def test_pair_cap(self):
        p = Pocset.from_pairs([(f"a{i}", f"a{i}*") for i in range(21)])
        with pytest.raises(InstanceTooLarge):
            enumerate_ultrafilters(p)

    @settings(max_examples=60)
    @given(pocsets)
    def test_matches_brute_force(self, p):
        if verify_pocset(p):
            return
        assert {u.chosen for u in enumerate_ultrafilters(p)} == brute_ultrafilters(p)


class TestRealize:
    def test_one_wall_is_an_edge(self):
        g = realize_median_graph(Pocset.from_pairs([("a", "a*")]))
        assert g.n == 2 and len(g.edges) == 1

    def test_three_walls_give_the_cube(self):
        g = realize_median_graph(Pocset.from_pairs([("a", "a*"), ("b", "b*"), ("c", "c*")]))
        assert g.n == 8 and len(g.edges) == 12 and all(len(nb) == 3 for nb in g.neighbors)

    def test_chain_gives_a_path(self):
        p = Pocset.from_pairs([("a", "a*"), ("b", "b*")], [("a", "b")])
        brute = brute_ultrafilters(p)
        assert brute == {frozenset({"a", "b"}), frozenset({"a*", "b"}), frozenset({"a*", "b*"})}
        g = realize_median_graph(p)
        assert g.n == 3 and len(g.edges) == 2
        assert sorted(len(nb) for nb in g.neighbors) == [1, 1, 2]

    @settings(max_examples=60)
    @given(pocsets)
    def test_dual_is_median_and_roundtrips(self, p):
        if verify_pocset(p):
            return
        g = realize_median_graph(p)
        assert verify_median_graph(g) == []
        back = realize_median_graph(halfspace_pocset(g))
        ws = walls(g)
        mapping = {v: tuple(f"w{w.id}{w.side_of(g, v)}" for w in ws) for v in g.vertices}
        assert is_isomorphism(mapping, g, back)

    def test_roundtrip_on_the_cube(self):
        g = hypercube(3)
        back = realize_median_graph(halfspace_pocset(g))
        assert back.n == 8 and len(back.edges) == 12


class TestChains:
    def test_single_chain(self):
        elems = [f"h{i}" for i in range(5)]
        order = [(elems[i], elems[j]) for i in range(5) for j in range(i + 1, 5)]
        p = Pocset.from_pairs([(e, e + "*") for e in elems], order)
        assert chain_partition(elems, p, 1) == [elems]

    def test_antichain_exceeds_width(self):
        p = Pocset.from_pairs([("a", "a*"), ("b", "b*"), ("c", "c*")])
        out = chain_partition(["a", "b", "c"], p, 2)
        assert out == WidthExceeded(3, 2)

    def test_grid_halfspaces(self):
        names = ["x>=0", "x>=1", "y>=0", "y>=1"]
        less = {("x>=1", "x>=0"), ("y>=1", "y>=0")}
        lt = lambda a, b: (a, b) in less  # noqa: E731
        assert brute_min_chain_cover(names, lt) == 2
        chains = chain_partition(names, lt, 2)
        assert sorted(chains) == [["x>=1", "x>=0"], ["y>=1", "y>=0"]]

    @settings(max_examples=60)
    @given(pocsets)
    def test_minimum_cover(self, p):
        if verify_pocset(p) or len(p.elements) > 7:
            return
        elems = list(p.elements)
        chains = chain_partition(elems, p, len(elems))
        assert sorted(e for c in chains for e in c) == sorted(elems)
        for c in chains:
            assert all(p.less(a, b) for a, b in zip(c, c[1:]))
        assert len(chains) == brute_min_chain_cover(elems, p.less)


def test_path_pocset_has_one_wall_per_edge():
    p = halfspace_pocset(path_graph(4))
    assert len(p.pairs()) == 3
    assert verify_pocset(p) == []
