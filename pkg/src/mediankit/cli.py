"""Command line interface.

``mediankit run FILE`` executes the requests of an instance file and writes
a JSON report; ``mediankit validate FILE`` only parses and checks it;
``mediankit oracle FILE --name NAME`` runs the oracle comparisons named
NAME.  Exit codes: 0 on success, 1 on input errors, 2 when some request was
left undecided (a search or size budget ran out), 3 when ``oracle`` found a
mismatch.
"""
from __future__ import annotations

import argparse
import sys
import time
from typing import Any, Callable

from . import __version__
from .actions import (GroupAction, InvariantCube, check_wall_inversions, classify_window, core_membership,
                      core_window, essential_core, find_invariant_convex, fixed_point_or_cube, has_inversions,
                      is_essential)
from .errors import (ClosureBudgetExceeded, InstanceTooLarge, InversionPresent, MedianKitError,
                     OracleBudgetExceeded, PreconditionFailed, SchemaError, UndecidedAtBound,
                     WindowBudgetExceeded)
from . import words as W
from .instances import TREE_RADIUS_CAP, Finite, FreeTree, ProductInstance, SymHalfspace
from .io import InstanceFile, dumps, load_file
from .median_core import decompose_product, rank as graph_rank, restriction_quotient, verify_median_graph, walls
from .minsets import (InversionCertificate, MinWitness, NotFoundAtRadius, core_splitting, endpoints,
                      is_non_transverse, is_semisimple, min_window, reduced_core_gate, translation_length)
from .oracles import (axes_edges, corrupted_classifier, finite_oracle, min_oracle, reduced_core_edges,
                      stallings_oracle, window_core_oracle, Verdict)

DEFAULT_WINDOW = 6
UNDECIDED = (UndecidedAtBound, WindowBudgetExceeded, ClosureBudgetExceeded, OracleBudgetExceeded, InstanceTooLarge)


class Context:
    def __init__(self, f: InstanceFile, window: int | None, bound: int | None):
        self.file = f
        self.window = window
        self.bound = bound

    @property
    def inst(self) -> ProductInstance:
        return self.file.instance

    def radius(self, req: dict) -> int:
        r = req.get("window", self.window if self.window is not None else DEFAULT_WINDOW)
        if any(isinstance(f, FreeTree) for f in self.inst.factors):
            r = min(r, TREE_RADIUS_CAP)
        return r

    def win(self, req: dict, shape: str = "auto"):
        return self.inst.window(self._base(req), self.radius(req), req.get("shape", shape))

    def _base(self, req: dict):
        return self.inst.point_from_json(req["base"]) if "base" in req else None

    def pt(self, p: tuple) -> list:
        return self.inst.point_to_json(p)

    def pts(self, ps) -> list:
        return [self.pt(p) for p in ps]

    def h(self, h: SymHalfspace | None) -> str | None:
        return None if h is None else self.inst.h_str(h)


def _req(req: dict, key: str, where: str):
    if key not in req:
        raise SchemaError(f"{where}: missing field {key!r}")
    return req[key]


def _finite_factor(ctx: Context, req: dict, where: str) -> Finite:
    i = _req(req, "factor", where)
    if not 0 <= i < len(ctx.inst.factors) or not isinstance(ctx.inst.factors[i], Finite):
        raise SchemaError(f"{where}: factor {i} is not a finite factor")
    return ctx.inst.factors[i]


# ---------------------------------------------------------------------------
# request handlers


def do_validate(ctx: Context, req: dict, where: str) -> dict:
    inst = ctx.inst
    factors = []
    for f in inst.factors:
        entry = {"kind": f.kind, "rank": f.rank}
        if isinstance(f, Finite):
            entry["vertices"] = f.graph.n
            entry["violations"] = verify_median_graph(f.graph)
        if isinstance(f, FreeTree):
            entry["letters"] = f.m
        factors.append(entry)
    actions = {}
    for name, a in sorted(ctx.file.actions.items()):
        rep = has_inversions(a)
        actions[name] = {"generators": list(a.names), "factor_preserving": a.is_factor_preserving(),
                         "inversions": rep.present, "inverted_wall": ctx.h(rep.wall), "inverting_word": rep.word}
    r = ctx.radius(req)
    return {"factors": factors, "rank": inst.rank, "actions": actions,
            "window": {"radius": r, "ball_median_closed": inst.ball_is_median_closed(inst.origin(), r)}}


def do_walls(ctx: Context, req: dict, where: str) -> dict:
    if "factor" in req:
        f = _finite_factor(ctx, req, where)
        return {"walls": [{"id": w.id, "side_a": sorted(w.side_a, key=f.graph.index.__getitem__),
                           "side_b": sorted(w.side_b, key=f.graph.index.__getitem__)} for w in walls(f.graph)]}
    w = ctx.win(req)
    return {"window": {"radius": w.radius, "shape": w.shape, "points": len(w.points)},
            "walls": [ctx.h(h) for h in ctx.inst.walls_meeting(w)]}


def do_rank(ctx: Context, req: dict, where: str) -> dict:
    return {"rank": ctx.inst.rank, "factors": [f.rank for f in ctx.inst.factors]}


def do_decompose(ctx: Context, req: dict, where: str) -> dict:
    if "action" in req:
        a = ctx.file.action(req["action"], where)
        s = core_splitting(a, ctx.radius(req))
        return {"core_points": s.points, "factors": [{"vertices": n, "class": c} for n, c in s.factors],
                "reconstructs": s.reconstructs, "splits": s.splits, "dimensions": list(s.dimensions)}
    f = _finite_factor(ctx, req, where)
    parts = decompose_product(f.graph)
    return {"factors": [{"vertices": p.n, "edges": len(p.edges), "rank": graph_rank(p)} for p in parts]}


def do_quotient(ctx: Context, req: dict, where: str) -> dict:
    f = _finite_factor(ctx, req, where)
    q, proj = restriction_quotient(f.graph, _req(req, "walls", where))
    return {"quotient": q.to_json(), "projection": [[v, proj[v]] for v in f.graph.vertices]}


def do_classify(ctx: Context, req: dict, where: str) -> dict:
    a = ctx.file.action(_req(req, "action", where), where)
    w = ctx.win(req)
    bound = req.get("bound", ctx.bound)
    records = [c.to_json(ctx.inst) for c in classify_window(a, w, bound)]
    inversions = [{"wall": ctx.h(h), "word": word} for h, word in check_wall_inversions(a, w, bound)]
    return {"window": {"radius": w.radius, "shape": w.shape}, "records": records, "inversions": inversions}


def do_core(ctx: Context, req: dict, where: str) -> dict:
    a = ctx.file.action(_req(req, "action", where), where)
    w = ctx.win(req)
    c, cbar = core_window(a, w)
    out = {"window": {"radius": w.radius, "shape": w.shape, "points": len(w.points)},
           "core": ctx.pts(c), "reduced_core": ctx.pts(cbar), "inversions": has_inversions(a).present}
    if "points" in req:
        out["membership"] = []
        for p in req["points"]:
            m = core_membership(a, ctx.inst.point_from_json(p))
            out["membership"].append({"point": p, "in_core": m.in_core, "in_reduced_core": m.in_reduced_core,
                                      "blocking": ctx.h(m.blocking), "blocking_reduced": ctx.h(m.blocking_reduced)})
    return out


def do_essential_core(ctx: Context, req: dict, where: str) -> dict:
    a = ctx.file.action(_req(req, "action", where), where)
    w = ctx.win(req)
    ess, witness = is_essential(a, w)
    out: dict[str, Any] = {"essential": ess, "witness": witness.to_json(ctx.inst) if witness else None}
    conv = find_invariant_convex(a, w)
    out["invariant_convex"] = None if conv is None else {"kind": conv.kind, "points": ctx.pts(conv.points)}
    try:
        ec = essential_core(a)
    except InversionPresent as e:
        out["essential_core"] = {"inversion": ctx.h(e.wall), "word": e.word}
        return out
    out["essential_core"] = ec.to_json()
    if all(p[0] != "subtree" or p[1].rank() == 1 for p in ec.parts):
        pts = ec.window_points(w)
        out["flat"] = {"dimension": ec.dimension,
                       "coordinates": [[ctx.pt(p), list(ec.flat_coordinates(p))] for p in pts]}
    return out


def do_fixed_point(ctx: Context, req: dict, where: str) -> dict:
    a = ctx.file.action(_req(req, "action", where), where)
    if not all(isinstance(f, Finite) for f in ctx.inst.factors):
        raise SchemaError(f"{where}: fixed-point needs an instance of finite factors")
    res = fixed_point_or_cube(a)
    if isinstance(res, InvariantCube):
        return {"cube": {"dimension": res.dimension, "points": [list(p) for p in res.points]}}
    return {"fixed_vertex": list(res.point)}


def _semisimple_json(ctx: Context, res) -> dict:
    if isinstance(res, MinWitness):
        return {"min_point": ctx.pt(res.point), "certified": res.certified, "checked_range": res.checked_range}
    if isinstance(res, InversionCertificate):
        out = {"inversion": ctx.h(res.wall), "word": res.word, "semisimple_power": res.power}
        if res.power_witness is not None:
            out["power_min_point"] = ctx.pt(res.power_witness.point)
        return out
    return {"not_found_at_radius": res.radius}


def do_minset(ctx: Context, req: dict, where: str) -> dict:
    g = ctx.file.element(_req(req, "element", where), where)
    w = ctx.win(req)
    res = is_semisimple(ctx.inst, g, ctx.radius(req))
    n = req.get("range")
    mins = min_window(ctx.inst, g, w, n)
    return {"semisimple": _semisimple_json(ctx, res), "min_window": ctx.pts(mins),
            "certified": g.preserves_factors(), "undecided": isinstance(res, NotFoundAtRadius)}


def do_translation_length(ctx: Context, req: dict, where: str) -> dict:
    g = ctx.file.element(_req(req, "element", where), where)
    wt = ctx.file.weighting(req.get("weighting"), where)
    ell = translation_length(ctx.inst, g, wt)
    out: dict[str, Any] = {"value": str(ell.value), "method": ell.method}
    if "powers" in req:
        out["powers"] = {str(n): str(translation_length(ctx.inst, g.power(n), wt).value) for n in req["powers"]}
    if "points" in req:
        gates = []
        for p in req["points"]:
            r = reduced_core_gate(ctx.inst, g, ctx.inst.point_from_json(p), wt)
            gates.append({"point": p, "gate": ctx.pt(r.gate), "distance": str(r.distance),
                          "displacement": str(r.displacement), "identity_holds": r.identity_holds})
        out["gates"] = gates
    return out


def do_non_transverse(ctx: Context, req: dict, where: str) -> dict:
    g = ctx.file.element(_req(req, "element", where), where)
    ok, pair = is_non_transverse(ctx.inst, g)
    return {"non_transverse": ok, "witness": None if pair is None else [ctx.h(pair[0]), ctx.h(pair[1])]}


def do_endpoints(ctx: Context, req: dict, where: str) -> dict:
    g = ctx.file.element(_req(req, "element", where), where)
    e = endpoints(ctx.inst, g)
    out = e.to_json()
    w = ctx.win(req)
    orient = []
    for h in ctx.inst.walls_meeting(w):
        try:
            orient.append(ctx.h(e.orient(h)))
        except PreconditionFailed:
            continue
    out["toward_plus"] = orient
    return out


def do_oracle(ctx: Context, req: dict, where: str) -> dict:
    name = _req(req, "oracle", where)
    inst = ctx.inst
    if name == "finite":
        verdicts = [finite_oracle(f.graph) for f in inst.factors if isinstance(f, Finite)]
        if not verdicts:
            raise SchemaError(f"{where}: no finite factor to check")
        bad = [v for v in verdicts if not v.match]
        v = bad[0] if bad else Verdict("finite", True, sum(x.checked for x in verdicts))
    elif name == "window-core":
        a = ctx.file.action(_req(req, "action", where), where)
        classifier = None
        if "inject_fault" in req:
            classifier = corrupted_classifier(a, inst.parse_halfspace(req["inject_fault"]))
        v = window_core_oracle(a, req.get("window", 3), margin=req.get("margin", 2), classifier=classifier)
    elif name == "stallings":
        a = ctx.file.action(_req(req, "action", where), where)
        v = _stallings_compare(ctx, a, ctx.radius(req), where)
    elif name == "min":
        g = ctx.file.element(_req(req, "element", where), where)
        wt = ctx.file.weighting(req.get("weighting"), where)
        v = min_oracle(inst, g, req.get("window", 3), req.get("range", 12), wt)
    else:
        raise SchemaError(f"{where}: unknown oracle {name!r}")
    return v.to_json()


def _stallings_compare(ctx: Context, a: GroupAction, radius: int, where: str) -> Verdict:
    inst = ctx.inst
    if len(inst.factors) != 1 or not isinstance(inst.factors[0], FreeTree):
        raise SchemaError(f"{where}: the stallings oracle needs a single free-tree factor")
    if any(g.maps[0].subst != W.Substitution.identity(inst.factors[0].m) for g in a.generators):
        raise SchemaError(f"{where}: the stallings oracle needs left multiplications")
    m = inst.factors[0].m
    words = [g.maps[0].left for g in a.generators]
    st = stallings_oracle(m, words, radius)
    if not st.match:
        return st
    core = reduced_core_edges(a, radius)
    axes = axes_edges(m, words, radius)
    if core != axes:
        diff = sorted(core ^ axes)[0]
        return Verdict("stallings", False, st.checked, {"edge": list(diff), "in_reduced_core": diff in core})
    return Verdict("stallings", True, st.checked, details={"edges": len(core)})


HANDLERS: dict[str, Callable[[Context, dict, str], dict]] = {
    "validate": do_validate, "walls": do_walls, "rank": do_rank, "decompose": do_decompose,
    "quotient": do_quotient, "classify": do_classify, "core": do_core, "essential-core": do_essential_core,
    "fixed-point": do_fixed_point, "minset": do_minset, "translation-length": do_translation_length,
    "non-transverse": do_non_transverse, "endpoints": do_endpoints, "oracle-compare": do_oracle,
}


# ---------------------------------------------------------------------------
# running


def run_requests(f: InstanceFile, window: int | None = None, bound: int | None = None,
                 only: Callable[[dict], bool] | None = None, timings: bool = True) -> tuple[dict, int]:
    """Execute the requests of ``f`` in order; return the report and the exit code."""
    ctx = Context(f, window, bound)
    results = []
    times = {}
    code = 0
    for k, req in enumerate(f.requests):
        if only is not None and not only(req):
            continue
        where = f"requests/{k}"
        start = time.perf_counter()
        record: dict[str, Any] = {"index": k, "kind": req["kind"]}
        if "label" in req:
            record["label"] = req["label"]
        try:
            record["result"] = HANDLERS[req["kind"]](ctx, req, where)
            record["status"] = "ok"
            if record["result"].get("undecided"):
                record["status"] = "undecided"
                code = max(code, 2)
        except UNDECIDED as e:
            record["status"] = "undecided"
            record["reason"] = str(e)
            code = max(code, 2)
        except (InversionPresent, PreconditionFailed) as e:
            record["status"] = "precondition"
            record["reason"] = str(e)
            wit = getattr(e, "wall", None) or getattr(e, "witness", None)
            if isinstance(wit, SymHalfspace):
                record["witness"] = ctx.h(wit)
            elif isinstance(wit, tuple) and all(isinstance(x, SymHalfspace) for x in wit):
                record["witness"] = [ctx.h(x) for x in wit]
        except SchemaError:
            raise
        times[str(k)] = round(time.perf_counter() - start, 6)
        results.append(record)
    report: dict[str, Any] = {"mediankit": __version__, "results": results}
    if timings:
        report["timings"] = times
    return report, code


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="instance file (JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mediankit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mediankit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute the requests of an instance file")
    _common(run)
    run.add_argument("--window", type=int, default=None, help=f"window radius (default {DEFAULT_WINDOW})")
    run.add_argument("--bound", type=int, default=None, help="word length bound for witness searches")
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    run.add_argument("--no-timings", action="store_true", help="omit the timing section")
    val = sub.add_parser("validate", help="parse and validate an instance file")
    _common(val)
    orc = sub.add_parser("oracle", help="run the oracle comparisons with the given name")
    _common(orc)
    orc.add_argument("--name", required=True, choices=["finite", "window-core", "stallings", "min"])
    orc.add_argument("--out", default=None)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        f = load_file(args.file)
        if args.command == "validate":
            _emit(dumps({"valid": True, "factors": len(f.instance.factors), "actions": sorted(f.actions),
                         "requests": len(f.requests)}), None)
            return 0
        if args.command == "run":
            report, code = run_requests(f, args.window, args.bound, timings=not args.no_timings)
            _emit(dumps(report), args.out)
            return code
        report, code = run_requests(
            f, only=lambda r: r["kind"] == "oracle-compare" and r.get("oracle") == args.name, timings=False)
        _emit(dumps(report), args.out)
        if any(r.get("result", {}).get("status") == "MISMATCH" for r in report["results"]):
            return 3
        return code
    except (MedianKitError, OSError) as e:
        sys.stderr.write(f"mediankit: {type(e).__name__}: {e}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
