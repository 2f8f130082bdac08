"""Reading instance files.

An instance file is a JSON object::

    {
      "version": "mediankit/1",
      "instance": {"factors": [{"kind": "line"}, {"kind": "free_tree", "rank": 2},
                               {"kind": "finite", "vertices": [...], "edges": [[u, v], ...]}]},
      "actions": {"G": {"generators": [<automorphism>, ...], "names": ["s", "t"]}},
      "elements": {"g": <automorphism> | {"action": "G", "word": "s*t^-1"}},
      "weightings": {"w": {"action": "G", "default": "1", "orbits": [{"key": "x0>=1", "weight": "3/2"}]}},
      "requests": [{"kind": "classify", "action": "G"}, ...]
    }

A finite factor may instead be given as ``{"kind": "finite", "pocset":
{"pairs": [...], "order": [...]}}``, realised as the dual median graph.
Automorphisms are ``{"perm": [...], "maps": [...]}`` with one map per
factor (``null`` for the identity): ``{"line": {"eps": 1, "b": 3}}``,
``{"tree": {"left": "ab", "subst": "a->a,b->B"}}`` or ``{"finite": {"perm":
[...]}}``, the last listing, for each vertex in sorted order, the index of
its image in sorted order.  ``maps[i]`` carries factor ``i`` to factor
``perm[i]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from . import words as W
from .actions import GroupAction
from .errors import KindMismatch, MedianKitError, NotMedian, ParseError, SchemaError, UnknownRequest
from .instances import Automorphism, Finite, FiniteMap, FreeTree, Line, LineMap, ProductInstance, TreeMap
from .median_core import MedianGraph
from .minsets import WallWeighting
from .pocset import Pocset, realize_median_graph, verify_pocset

VERSION = "mediankit/1"

REQUEST_KINDS = (
    "validate", "walls", "rank", "decompose", "quotient", "classify", "core", "essential-core",
    "fixed-point", "minset", "translation-length", "non-transverse", "endpoints", "oracle-compare",
)

_MAP = {
    "oneOf": [
        {"type": "null"},
        {"type": "object", "required": ["line"], "additionalProperties": False,
         "properties": {"line": {"type": "object", "required": ["eps", "b"], "additionalProperties": False,
                                 "properties": {"eps": {"enum": [1, -1]}, "b": {"type": "integer"}}}}},
        {"type": "object", "required": ["tree"], "additionalProperties": False,
         "properties": {"tree": {"type": "object", "additionalProperties": False,
                                 "properties": {"left": {"type": "string"}, "subst": {"type": "string"}}}}},
        {"type": "object", "required": ["finite"], "additionalProperties": False,
         "properties": {"finite": {"type": "object", "required": ["perm"], "additionalProperties": False,
                                   "properties": {"perm": {"type": "array", "items": {"type": "integer"}}}}}},
    ]
}

_AUTOMORPHISM = {
    "type": "object", "required": ["maps"], "additionalProperties": False,
    "properties": {"perm": {"type": "array", "items": {"type": "integer"}},
                   "maps": {"type": "array", "items": _MAP}},
}

_FACTOR = {
    "type": "object", "required": ["kind"],
    "properties": {"kind": {"enum": ["line", "free_tree", "finite"]}},
    "allOf": [
        {"if": {"properties": {"kind": {"const": "free_tree"}}},
         "then": {"required": ["rank"], "properties": {"rank": {"type": "integer", "minimum": 1, "maximum": 26}}}},
        {"if": {"properties": {"kind": {"const": "finite"}}},
         "then": {"oneOf": [{"required": ["vertices", "edges"]}, {"required": ["pocset"]}],
                  "properties": {"vertices": {"type": "array", "minItems": 1},
                                 "edges": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                                 "pocset": {"type": "object", "required": ["pairs"],
                                            "properties": {"pairs": {"type": "array"}, "order": {"type": "array"}}}}}},
    ],
}

SCHEMA = {
    "type": "object",
    "required": ["instance"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": VERSION},
        "description": {"type": "string"},
        "instance": {"type": "object", "required": ["factors"], "additionalProperties": False,
                     "properties": {"factors": {"type": "array", "minItems": 1, "items": _FACTOR}}},
        "actions": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["generators"], "additionalProperties": False,
            "properties": {"generators": {"type": "array", "items": _AUTOMORPHISM},
                           "names": {"type": "array", "items": {"type": "string"}}}}},
        "elements": {"type": "object", "additionalProperties": {
            "oneOf": [_AUTOMORPHISM,
                      {"type": "object", "required": ["action", "word"], "additionalProperties": False,
                       "properties": {"action": {"type": "string"}, "word": {"type": "string"}}}]}},
        "weightings": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["action"], "additionalProperties": False,
            "properties": {"action": {"type": "string"}, "default": {"type": "string"},
                           "seed": {"type": "integer"}, "pseudo": {"type": "boolean"},
                           "orbits": {"type": "array", "items": {
                               "type": "object", "required": ["key", "weight"], "additionalProperties": False,
                               "properties": {"key": {"type": "string"}, "weight": {"type": "string"}}}}}}},
        "requests": {"type": "array", "items": {
            "type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}},
    },
}


@dataclass
class InstanceFile:
    """A parsed instance file with its named actions, elements and weightings."""

    instance: ProductInstance
    actions: dict[str, GroupAction] = field(default_factory=dict)
    elements: dict[str, Automorphism] = field(default_factory=dict)
    weightings: dict[str, WallWeighting] = field(default_factory=dict)
    requests: list[dict] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def action(self, name: str, where: str) -> GroupAction:
        if name not in self.actions:
            raise SchemaError(f"{where}: unknown action {name!r}")
        return self.actions[name]

    def element(self, ref: Any, where: str) -> Automorphism:
        if isinstance(ref, str):
            if ref not in self.elements:
                raise SchemaError(f"{where}: unknown element {ref!r}")
            return self.elements[ref]
        return parse_element(self, ref, where)

    def weighting(self, name: str | None, where: str) -> WallWeighting | None:
        if name is None:
            return None
        if name not in self.weightings:
            raise SchemaError(f"{where}: unknown weighting {name!r}")
        return self.weightings[name]


def load_json(path: str | Path) -> dict:
    """Read a JSON file; syntax errors become :class:`ParseError` with a location."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None


def validate_schema(data: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {e.message}")


def parse_factor(data: dict, where: str):
    kind = data["kind"]
    if kind == "line":
        return Line()
    if kind == "free_tree":
        return FreeTree(data["rank"])
    if "pocset" in data:
        p = Pocset.from_pairs([tuple(x) for x in data["pocset"]["pairs"]],
                              [tuple(x) for x in data["pocset"].get("order", [])])
        problems = verify_pocset(p)
        if problems:
            raise SchemaError(f"{where}: {problems[0]}")
        return Finite(realize_median_graph(p))
    verts = [_label(v) for v in data["vertices"]]
    if len(set(verts)) != len(verts):
        raise SchemaError(f"{where}: repeated vertex")
    edges = [(_label(u), _label(v)) for u, v in data["edges"]]
    for u, v in edges:
        if u not in verts or v not in verts:
            raise SchemaError(f"{where}: edge ({u}, {v}) uses an unknown vertex")
    try:
        return Finite(MedianGraph(verts, edges))
    except (NotMedian, TypeError) as e:
        raise SchemaError(f"{where}: {e}") from None


def _label(v):
    return tuple(_label(x) for x in v) if isinstance(v, list) else v


def parse_instance(data: dict) -> ProductInstance:
    return ProductInstance([parse_factor(f, f"instance/factors/{i}") for i, f in enumerate(data["factors"])])


def parse_automorphism(inst: ProductInstance, data: dict, where: str) -> Automorphism:
    n = len(inst.factors)
    perm = tuple(data.get("perm", range(n)))
    maps = data["maps"]
    if len(perm) != n or sorted(perm) != list(range(n)) or len(maps) != n:
        raise SchemaError(f"{where}: perm and maps must have one entry per factor")
    out = []
    for i, m in enumerate(maps):
        src = inst.factors[i]
        dst = inst.factors[perm[i]]
        loc = f"{where}/maps/{i}"
        if m is None:
            if type(src) is not type(dst) or (isinstance(src, Finite) and src is not dst):
                raise SchemaError(f"{loc}: null map between different factors")
            m = {"line": {"eps": 1, "b": 0}} if isinstance(src, Line) else (
                {"tree": {}} if isinstance(src, FreeTree) else {"finite": {"perm": list(range(src.graph.n))}})
        if "line" in m:
            out.append(LineMap(m["line"]["eps"], m["line"]["b"]))
        elif "tree" in m:
            if not isinstance(src, FreeTree):
                raise SchemaError(f"{loc}: tree map on a {src.kind} factor")
            left = m["tree"].get("left", "")
            try:
                W.check_word(left, src.m)
                subst = W.Substitution.parse(m["tree"].get("subst", ""), src.m)
            except ValueError as e:
                raise SchemaError(f"{loc}: {e}") from None
            out.append(TreeMap(left, subst))
        else:
            if not isinstance(src, Finite) or not isinstance(dst, Finite):
                raise SchemaError(f"{loc}: finite map on a {src.kind} factor")
            idx = m["finite"]["perm"]
            if len(idx) != src.graph.n or any(not 0 <= k < dst.graph.n for k in idx):
                raise SchemaError(f"{loc}: finite perm has the wrong length or range")
            out.append(FiniteMap(tuple(dst.graph.vertices[k] for k in idx), src.graph, dst.graph))
    g = Automorphism(perm, tuple(out))
    try:
        inst.check_automorphism(g)
    except (KindMismatch, ValueError) as e:
        raise SchemaError(f"{where}: {e}") from None
    return g


def parse_word(a: GroupAction, text: str, where: str) -> tuple[int, ...]:
    """Parse ``"s*t^-1"`` (``"1"`` is the identity) into a word for ``a``."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    word = []
    for part in text.split("*"):
        part = part.strip()
        inv = part.endswith("^-1")
        name = part[:-3] if inv else part
        if name not in a.names:
            raise SchemaError(f"{where}: unknown generator {name!r}")
        k = a.names.index(name) + 1
        word.append(-k if inv else k)
    return tuple(word)


def parse_element(f: InstanceFile, data: dict, where: str) -> Automorphism:
    if "word" in data:
        a = f.action(data["action"], where)
        return a.element(parse_word(a, data["word"], where))
    return parse_automorphism(f.instance, data, where)


def parse_file(data: Any) -> InstanceFile:
    """Validate and build an :class:`InstanceFile` from decoded JSON."""
    validate_schema(data)
    inst = parse_instance(data["instance"])
    f = InstanceFile(inst, requests=list(data.get("requests", [])), raw=data)
    for name, spec in sorted(data.get("actions", {}).items()):
        where = f"actions/{name}"
        gens = [parse_automorphism(inst, g, f"{where}/generators/{k}") for k, g in enumerate(spec["generators"])]
        names = spec.get("names")
        if names is not None and len(names) != len(gens):
            raise SchemaError(f"{where}: names and generators differ in length")
        f.actions[name] = GroupAction(inst, gens, names=names)
    for name, spec in sorted(data.get("elements", {}).items()):
        f.elements[name] = parse_element(f, spec, f"elements/{name}")
    for name, spec in sorted(data.get("weightings", {}).items()):
        where = f"weightings/{name}"
        a = f.action(spec["action"], where)
        try:
            f.weightings[name] = WallWeighting.from_json(a, spec)
        except (ValueError, ZeroDivisionError) as e:
            raise SchemaError(f"{where}: {e}") from None
    for k, req in enumerate(f.requests):
        if req["kind"] not in REQUEST_KINDS:
            raise UnknownRequest(f"requests/{k}: unknown request kind {req['kind']!r}")
    return f


def load_file(path: str | Path) -> InstanceFile:
    try:
        return parse_file(load_json(path))
    except MedianKitError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{path}: {e}") from None


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


__all__ = ["InstanceFile", "REQUEST_KINDS", "SCHEMA", "VERSION", "dumps", "load_file", "load_json",
           "parse_automorphism", "parse_file", "parse_instance", "parse_word", "validate_schema"]
