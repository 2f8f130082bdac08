"""The fourteen acceptance criteria, one test each.

Every test prints a single ``criterion N PASS|FAIL`` line; the lines are
repeated in the terminal summary of the pytest run.
"""
import itertools
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import networkx as nx

from mediankit import words as W
from mediankit.actions import (FixedVertex, GroupAction, InvariantCube, classify_window, core_membership, core_window,
                               essential_core, find_invariant_convex, fixed_point_or_cube, has_inversions,
                               is_essential, minimal_subtree)
from mediankit.instances import Finite, FreeTree, Line, ProductInstance, automorphism, finite_map, line_map, tree_map
from mediankit.median_core import (MedianGraph, convex_hull, decompose_product, halfspace_pocset, interval,
                                   is_isomorphism, product_isomorphism, rank, subalgebra_closure, verify_median_graph,
                                   walls)
from mediankit.minsets import (InversionCertificate, MinWitness, WallWeighting, core_splitting, cyclic_action,
                               distance, h0_h1_transverse, is_non_transverse, is_semisimple, minset_membership,
                               reduced_core_gate, translation_length)
from mediankit.oracles import in_min_brute, reduced_core_edges, stallings_oracle, window_core_oracle
from mediankit.pocset import realize_median_graph
from mediankit.stallings import geodesic

import suite
from suite import curated, curated_elements, graph_automorphisms, grid, hypercube, line_reflection, record

ROOT = Path(__file__).resolve().parent.parent


def stable_elements():
    return [(n, inst, g) for n, inst, g in curated_elements()
            if not has_inversions(cyclic_action(inst, g)).present]


def small_radius(inst: ProductInstance) -> int:
    return 2 if any(isinstance(f, FreeTree) for f in inst.factors) else 3


def interval_points(inst: ProductInstance, y: tuple, z: tuple) -> list[tuple]:
    """I(y, z) in a product, as the product of the factor intervals."""
    per = []
    for f, a, b in zip(inst.factors, y, z):
        if isinstance(f, Line):
            per.append(range(min(a, b), max(a, b) + 1))
        elif isinstance(f, FreeTree):
            per.append(geodesic(a, b))
        else:
            per.append(sorted(interval(f.graph, a, b), key=f.graph.index.__getitem__))
    return list(itertools.product(*per))


# ---------------------------------------------------------------------------


def test_criterion_01_axiom_suite():
    start = time.perf_counter()
    fresh = suite.corpus.__wrapped__()
    failures = []
    for k, (p, g) in enumerate(fresh):
        if verify_median_graph(g):
            failures.append((k, "not median"))
        back = realize_median_graph(halfspace_pocset(g))
        ws = walls(g)
        mapping = {v: tuple(f"w{w.id}{w.side_of(g, v)}" for w in ws) for v in g.vertices}
        if not is_isomorphism(mapping, g, back):
            failures.append((k, "roundtrip"))
    elapsed = time.perf_counter() - start
    if elapsed >= 30:
        failures.append(("time", elapsed))
    assert len(fresh) == 200
    assert all(len(p.pairs()) <= 16 and g.n <= 64 for p, g in fresh)
    record(1, "axiom suite and duality roundtrip", failures, f"200 graphs in {elapsed:.1f}s")


def _all_subsets(n: int, rng: random.Random):
    if n <= 16:
        for mask in range(1, 1 << n):
            yield mask
        return
    for size in (1, 2, 3):
        for s in itertools.combinations(range(n), size):
            yield sum(1 << i for i in s)
    for _ in range(2000):
        s = rng.sample(range(n), rng.randint(4, min(n, 10)))
        yield sum(1 << i for i in s)


def test_criterion_02_helly_and_hull():
    rng = random.Random(2)
    failures = []
    triples = hulls = 0
    for k, (_, g) in enumerate(suite.corpus()):
        ws = walls(g)
        sides = [w.mask_a for w in ws] + [w.mask_b for w in ws]
        for a, b, c in itertools.combinations(sides, 3):
            if a & b and b & c and a & c:
                triples += 1
                if not a & b & c:
                    failures.append((k, "helly"))
        full = (1 << g.n) - 1
        for smask in _all_subsets(g.n, rng):
            expect = full
            for m in sides:
                if m & smask == smask:
                    expect &= m
            pts = [g.vertices[i] for i in range(g.n) if smask >> i & 1]
            hulls += 1
            if g.mask_of(convex_hull(g, pts).members) != expect:
                failures.append((k, "hull", pts))
    record(2, "Helly triples and hull as intersection of halfspaces", failures,
           f"{triples} intersecting triples, {hulls} hulls")


def test_criterion_03_rank_and_products():
    failures = []
    for k in range(1, 6):
        if rank(hypercube(k)) != k:
            failures.append(("cube", k))
    trees = [nx.random_labeled_tree(n, seed=n) if hasattr(nx, "random_labeled_tree") else nx.random_tree(n, seed=n)
             for n in range(2, 30, 3)]
    trees = [suite.tree_graph(t) for t in trees]
    trees += [g for _, g in suite.corpus() if g.n >= 2 and len(g.edges) == g.n - 1]
    for t in trees:
        if rank(t) != 1:
            failures.append(("tree", t.n))
    for k, (_, g) in enumerate(suite.corpus()):
        if product_isomorphism(g) is None:
            failures.append(("product", k))
    parts = decompose_product(grid(2, 3))
    if sorted((p.n, len(p.edges)) for p in parts) != [(2, 1), (3, 2)]:
        failures.append(("grid", [p.n for p in parts]))
    record(3, "rank and product decomposition", failures, f"{len(trees)} trees, 200 graphs")


def _group_elements(perms: list[dict], vertices) -> list[dict]:
    ident = {v: v for v in vertices}
    seen = {tuple(ident[v] for v in vertices): ident}
    queue = [ident]
    while queue:
        f = queue.pop()
        for p in perms:
            h = {v: p[f[v]] for v in vertices}
            key = tuple(h[v] for v in vertices)
            if key not in seen:
                seen[key] = h
                queue.append(h)
    return list(seen.values())


def test_criterion_04_finite_actions():
    rng = random.Random(4)
    pool = [(k, g) for k, (_, g) in enumerate(suite.corpus()) if g.n >= 2]
    failures = []
    counts = {"fixed": 0, "cube": 0}
    for trial in range(50):
        k, g = rng.choice(pool)
        autos = graph_automorphisms(g, 500)
        perms = [rng.choice(autos) for _ in range(rng.randint(1, 3))]
        inst = ProductInstance([Finite(g)])
        a = GroupAction(inst, [automorphism(inst, [finite_map(g, g, p)]) for p in perms])
        win = inst.window(None, g.n)
        if any(rec.cls != "H0" for rec in classify_window(a, win)):
            failures.append((trial, "class"))
        if core_window(a, win)[0] != list(win.points):
            failures.append((trial, "core"))
        group = _group_elements(perms, g.vertices)
        ws = walls(g)
        inverted = any({f[v] for v in w.side_a} == set(w.side_b) for w in ws for f in group)
        fixed = [v for v in g.vertices if all(p[v] == v for p in perms)]
        res = fixed_point_or_cube(a)
        if not inverted:
            counts["fixed"] += 1
            if not isinstance(res, FixedVertex) or res.point[0] not in fixed:
                failures.append((trial, "fixed", res))
            continue
        counts["cube"] += 1
        if not isinstance(res, InvariantCube) or res.dimension > rank(g):
            failures.append((trial, "cube", res))
            continue
        cube = {p[0] for p in res.points}
        traces = set()
        for w in ws:
            side = frozenset(cube & w.side_a)
            if side and side != cube:
                traces.add(frozenset([side, frozenset(cube) - side]))
        ok = (len(cube) == 2 ** res.dimension and len(traces) == res.dimension
              and all({p[v] for v in cube} == cube for p in perms)
              and sorted(subalgebra_closure(g, cube)) == sorted(cube)
              and all(x & y for s, t in itertools.combinations(traces, 2) for x in s for y in t))
        if not ok:
            failures.append((trial, "cube check", res))
    record(4, "finite actions: H0 walls, fixed vertex or invariant cube", failures,
           f"{counts['fixed']} fixed vertices, {counts['cube']} invariant cubes")


def test_criterion_05_core_nonempty():
    failures = []
    for case in curated():
        c, cbar = core_window(case.action, case.instance.window(None, 6))
        if not c or not cbar:
            failures.append(case.name)
    a = line_reflection()
    Z = a.instance
    c, cbar = core_window(a, Z.window(None, 6))
    if [p[0] for p in c] != list(range(-6, 7)) or [p[0] for p in cbar] != [0, 1]:
        failures.append("reflection cores")
    v = window_core_oracle(a, 6)
    if not v.match or v.details["reduced_core"] != [[0], [1]] or len(v.details["core"]) != 13:
        failures.append(("reflection oracle", v.to_json()))
    record(5, "cores nonempty at R=6, reflection cores match the oracle", failures,
           f"{len(curated())} suite actions")


SUBGROUPS = [["a"], ["aa", "bb"], ["ab", "ba"], ["abAB"], ["a", "baB"], ["aab", "bA"]]


def test_criterion_06_stallings():
    F2 = ProductInstance([FreeTree(2)])
    failures = []
    worst = 0.0
    for gens in SUBGROUPS:
        start = time.perf_counter()
        a = GroupAction(F2, [automorphism(F2, [tree_map(u, 2)]) for u in gens])
        core_edges = reduced_core_edges(a, 6)
        st = minimal_subtree(FreeTree(2), gens)
        stallings = {(p[:-1], p) for p in W.words_up_to(2, 6) if p and st.edge_in_subtree(p[:-1], p[-1])}
        axes = stallings_oracle(2, gens, 6)
        elapsed = time.perf_counter() - start
        worst = max(worst, elapsed)
        if core_edges != stallings or not axes.match or elapsed >= 5:
            failures.append((gens, len(core_edges), len(stallings), axes.status, elapsed))
    record(6, "reduced core equals the Stallings subtree at R=6", failures,
           f"{len(SUBGROUPS)} subgroups, slowest {worst:.2f}s")


def _random_word(rng: random.Random, m: int, n: int) -> str:
    letters = W.letters(m)
    w = ""
    while len(w) < n:
        w = W.reduce(w + rng.choice(letters))
    return w


def test_criterion_07_translation_length_formula():
    rng = random.Random(7)
    failures = []
    for trial in range(500):
        m = rng.choice([2, 3])
        inst = ProductInstance([FreeTree(m)])
        g = automorphism(inst, [tree_map(_random_word(rng, m, rng.randint(1, 6)), m)])
        a = cyclic_action(inst, g)
        y = (_random_word(rng, m, rng.randint(0, 4)),)
        for w in (None, WallWeighting.random(a, trial)):
            ell = translation_length(inst, g, w).value
            d = distance(inst, y, g.apply(y), w)
            # distance to the reduced core, minimised over its points between y and gy
            on_core = [c for c in interval_points(inst, y, g.apply(y)) if core_membership(a, c).in_reduced_core]
            dist = min(distance(inst, y, c, w) for c in on_core) if on_core else None
            r = reduced_core_gate(inst, g, y, w)
            if dist is None or d != ell + 2 * dist or r.distance != dist or not r.identity_holds:
                failures.append((trial, y, w is not None))
            if w is None and (d.denominator != 1 or ell.denominator != 1):
                failures.append((trial, "not an integer"))
    record(7, "d(y,gy) = l(g) + 2 d(y, reduced core)", failures, "500 pairs, unit and rational weights")


def test_criterion_08_min_characterisation():
    failures = []
    elements = stable_elements()
    points = 0
    for name, inst, g in elements:
        a = cyclic_action(inst, g)
        for w in (None, WallWeighting.random(a, 8)):
            ell = translation_length(inst, g, w).value
            for y in inst.window(None, small_radius(inst)).points:
                points += 1
                by_length = distance(inst, y, g.apply(y), w) == ell
                member = isinstance(minset_membership(inst, g, y), MinWitness)
                if not by_length == member == in_min_brute(inst, g, y, 8):
                    failures.append((name, y))
            for n in range(-4, 5):
                if translation_length(inst, g.power(n), w).value != abs(n) * ell:
                    failures.append((name, "power", n))
    record(8, "Min(g) is where l(g) is attained, l(g^n) = |n| l(g)", failures,
           f"{len(elements)} elements, {points} point checks")


def test_criterion_09_semisimple():
    failures = []
    elements = stable_elements()
    for name, inst, g in elements:
        res = is_semisimple(inst, g)
        if not isinstance(res, MinWitness) or not in_min_brute(inst, g, res.point, 8):
            failures.append(name)
    Z = ProductInstance([Line()])
    res = is_semisimple(Z, automorphism(Z, [line_map(-1, 1)]))
    if not (isinstance(res, InversionCertificate) and Z.h_str(res.wall) == "x0>=1"
            and res.power == 2 <= 2 ** Z.rank and isinstance(res.power_witness, MinWitness)):
        failures.append(("reflection", res))
    record(9, "semisimplicity witnesses and the reflection certificate", failures,
           f"{len(elements)} elements")


def test_criterion_10_non_transverse():
    failures = []
    elements = [e for e in stable_elements() if e[2].preserves_factors()]
    for name, inst, g in elements:
        if not is_non_transverse(inst, g)[0]:
            failures.append((name, "transverse"))
            continue
        a = cyclic_action(inst, g)
        win = inst.window(None, small_radius(inst))
        _, cbar = core_window(a, win)
        cbar = set(cbar)
        for y in win.points:
            if isinstance(minset_membership(inst, g, y), MinWitness) != (y in cbar):
                failures.append((name, "min", y))
            if not any(core_membership(a, c).in_reduced_core for c in interval_points(inst, y, g.apply(y))):
                failures.append((name, "interval", y))
    Z2 = ProductInstance([Line(), Line()])
    glide = automorphism(Z2, [None, line_map(1, 1)], (1, 0))
    ok, pair = is_non_transverse(Z2, glide)
    if ok or pair is None or glide.apply_h(pair[0]) != pair[1] or Z2.relative_position(*pair).name != "TRANSVERSE":
        failures.append(("glide", ok, pair))
    record(10, "Min(g) equals the reduced core for non-transverse g", failures,
           f"{len(elements)} elements and the transverse glide")


def test_criterion_11_core_splitting():
    failures = []
    dims = []
    for case in curated():
        a = case.action
        if h0_h1_transverse(a, case.instance.window(None, 3)) is not None:
            failures.append((case.name, "H0 vs H1"))
        cs = core_splitting(a, 3)
        dims.append(cs.dimensions)
        if not cs.splits:
            failures.append((case.name, "split", cs))
    record(11, "H0 walls cross H1 walls and the core splits as C0 x C1", failures,
           f"{len(dims)} suite actions")


def test_criterion_12_essential_vs_minimal():
    failures = []
    Z2 = ProductInstance([Line(), Line()])
    full = GroupAction(Z2, [automorphism(Z2, [line_map(1, 1), None]), automorphism(Z2, [None, line_map(1, 1)])])
    for r in (4, 6, 8):
        ess, _ = is_essential(full, Z2.window(None, r))
        if not ess or find_invariant_convex(full, Z2.window(None, r)) is not None:
            failures.append(("plane", r))
    F2 = ProductInstance([FreeTree(2)])
    axis = GroupAction(F2, [automorphism(F2, [tree_map("a", 2)])])
    w = F2.window(None, 4)
    ess, _ = is_essential(axis, w)
    conv = find_invariant_convex(axis, w)
    want = sorted(["", "a", "aa", "aaa", "aaaa", "A", "AA", "AAA", "AAAA"])
    if ess or conv is None or sorted(p[0] for p in conv.points) != want:
        failures.append(("axis", ess, conv))
    horizontal = GroupAction(Z2, [automorphism(Z2, [line_map(1, 1), None])])
    ec = essential_core(horizontal)
    pts = ec.window_points(Z2.window(None, 4))
    if ec.dimension != 1 or sorted(pts) != [(x, 0) for x in range(-4, 5)]:
        failures.append(("fiber", ec.to_json()))
    record(12, "essential iff no proper invariant convex subset", failures, "plane, axis, horizontal fiber")


def test_criterion_13_flat_torus():
    failures = []
    k2 = MedianGraph([0, 1], [(0, 1)])
    for extra in (FreeTree(2), Finite(k2)):
        inst = ProductInstance([Line(), Line(), extra])
        a = GroupAction(inst, [automorphism(inst, [line_map(1, 1), None, None]),
                               automorphism(inst, [None, line_map(1, 1), None])])
        ec = essential_core(a)
        pts = ec.window_points(inst.window(None, 3, "box"))
        coords = {p: ec.flat_coordinates(p) for p in pts}
        if ec.dimension != 2 or ec.dimension > inst.rank or len(set(coords.values())) != len(pts):
            failures.append((extra.kind, "dimension"))
        for p, q in itertools.combinations(pts, 2):
            l1 = sum(abs(x - y) for x, y in zip(coords[p], coords[q]))
            if l1 != inst.distance(p, q):
                failures.append((extra.kind, p, q))
                break
    record(13, "flat torus: essential core embeds in (R^2, l1)", failures, "Z^2 x F2 tree and Z^2 x K2")


def test_criterion_14_determinism():
    files = sorted(p for p in (ROOT / "instances").glob("*.json") if p.name not in ("bad.json", "schema_error.json"))
    failures = []
    outputs = []
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        run = []
        for f in files:
            proc = subprocess.run([sys.executable, "-m", "mediankit.cli", "run", str(f), "--no-timings"],
                                  capture_output=True, env=env, check=False)
            run.append((f.name, proc.returncode, proc.stdout))
        outputs.append(run)
    for (name, c1, o1), (_, c2, o2) in zip(*outputs):
        if c1 != c2 or o1 != o2 or not o1:
            failures.append(name)
    record(14, "byte-identical reports across runs", failures, f"{len(files)} instance files, two hash seeds")
