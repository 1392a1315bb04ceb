"""Instance and result files.

Instances are UTF-8 JSON objects with a ``kind`` field.  Arrays are given
flat in row-major order and reshaped from ``r`` (and ``q``, ``masses`` or
``grids`` where relevant).  See ``docs/formats.md`` for the full schema.

Results are written in a canonical form: keys sorted, two-space indent,
floats formatted with ``%.17g`` so that every double round-trips exactly and
reruns produce byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .arrays import InteractionArray, LayeredInteraction, LayeredRArray, RArray, StateDistribution
from .csp import Constraint, Formula
from .errors import DimensionError, MalformedInputError
from .graphon import FullStepGraphon, StepKernel
from .homdensity import DecoratedTemplate, Decoration
from .qap import TriangularKernel

KINDS = ("rarray", "step_kernel", "full_graphon", "formula", "layered")


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise MalformedInputError(f"{path}: cannot read ({exc.strerror})") from None
    if not isinstance(data, dict):
        raise MalformedInputError(f"{path}: top level must be a JSON object")
    return data


def _require(data: dict, key: str, where: str = "instance"):
    if key not in data:
        raise MalformedInputError(f"{where} is missing required field {key!r}")
    return data[key]


def _flat(values, where: str) -> np.ndarray:
    try:
        a = np.asarray(values, dtype=float)
    except (TypeError, ValueError):
        raise MalformedInputError(f"{where}: values must be a flat list of numbers") from None
    if a.ndim != 1:
        raise MalformedInputError(f"{where}: values must be a flat list")
    return a


def _cube(values, r: int, where: str) -> np.ndarray:
    a = _flat(values, where)
    n = round(len(a) ** (1.0 / r)) if len(a) else 0
    if n < 1 or n**r != len(a):
        raise DimensionError(f"{where}: {len(a)} values do not form an n^{r} array")
    return a.reshape((n,) * r)


def _key(k) -> Any:
    return tuple(k) if isinstance(k, list) else k


def parse_interaction(spec: dict, r: int):
    """``{"values": [...]}`` (real, ``q**r`` entries), ``{"colors": [...], "values": [...]}``
    (table, ``q**r * |K|`` entries), or ``{"layers": [{"key", ...}, ...]}``.

    A table interaction may take its colors from the instance-level ``color_set``.
    """
    if "layers" in spec:
        return LayeredInteraction([(_key(_require(l, "key", "interaction layer")), parse_interaction(l, r))
                                   for l in spec["layers"]])
    vals = _flat(_require(spec, "values", "interaction"), "interaction")
    if "colors" in spec:
        colors = tuple(spec["colors"])
        per = len(vals) // max(1, len(colors))
        q = round(per ** (1.0 / r)) if per else 0
        if q < 1 or q**r * len(colors) != len(vals):
            raise DimensionError(f"interaction: {len(vals)} values do not fit q^{r} x {len(colors)} colors")
        return InteractionArray(vals.reshape((q,) * r + (len(colors),)), colors)
    return InteractionArray(_cube(vals, r, "interaction"))


def parse_template(spec: dict) -> DecoratedTemplate:
    """``{"k", "r", "edges": [{"edge": [...], "table": {color: value}} | {"edge", "poly": [...]}]}``."""
    decs = {}
    for item in spec.get("edges", []):
        e = tuple(_require(item, "edge", "template edge"))
        if "table" in item:
            table = {_color(c): float(v) for c, v in item["table"].items()}
            dec = Decoration.from_table(table)
        elif "poly" in item:
            dec = Decoration.poly(item["poly"])
        else:
            raise MalformedInputError("template edge needs a 'table' or 'poly' decoration")
        decs[e] = decs[e] * dec if e in decs else dec
    return DecoratedTemplate(int(_require(spec, "k", "template")), int(_require(spec, "r", "template")), decs)


def _color(c: str):
    # JSON object keys are strings; numeric colors are restored
    try:
        f = float(c)
    except ValueError:
        return c
    return int(f) if f.is_integer() else f


def parse_instance(data: dict) -> dict:
    """Decode an instance object into library types.

    Returns a dict with ``"kind"`` and ``"object"`` plus any of
    ``"interaction"``, ``"micro"``, ``"template"``, ``"cost"`` and
    ``"points"`` present in the file.
    """
    kind = _require(data, "kind")
    if kind not in KINDS:
        raise MalformedInputError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
    r = int(data.get("r", 2))
    if kind == "rarray":
        obj = RArray(_cube(_require(data, "values"), r, "values"))
    elif kind == "step_kernel":
        obj = _step_kernel(data, r, "step kernel")
    elif kind == "full_graphon":
        grids = tuple(int(g) for g in _require(data, "grids"))
        vals = _flat(_require(data, "values"), "values")
        if len(vals) != int(np.prod(grids)):
            raise DimensionError(f"full graphon: {len(vals)} values for grids {grids}")
        obj = FullStepGraphon(r, grids, vals.reshape(grids), bool(data.get("include_empty", False)))
    elif kind == "formula":
        q = int(_require(data, "q"))
        cons = tuple(
            Constraint(_flat(_require(c, "table", "constraint"), "constraint table").reshape((q,) * r),
                       tuple(_require(c, "edge", "constraint")))
            for c in data.get("constraints", [])
        )
        obj = Formula(int(_require(data, "n")), q, r, cons, data.get("d", 1))
    else:
        obj = LayeredRArray([(_key(_require(l, "key", "layer")), RArray(_cube(_require(l, "values", "layer"), r, "layer")))
                             for l in _require(data, "layers")])
    out = {"kind": kind, "object": obj}
    if "interaction" in data:
        spec = data["interaction"]
        if "color_set" in data and isinstance(spec, dict) and "colors" not in spec and "layers" not in spec:
            spec = dict(spec, colors=data["color_set"])
        out["interaction"] = parse_interaction(spec, r)
    if "micro" in data:
        out["micro"] = StateDistribution(_flat(_require(data["micro"], "masses", "micro"), "micro"))
    if "template" in data:
        out["template"] = parse_template(data["template"])
    if "cost" in data:
        out["cost"] = parse_cost(data["cost"], r)
    if "points" in data:
        out["points"] = np.asarray(data["points"], dtype=float)
    return out


def _step_kernel(spec: dict, r: int, where: str) -> StepKernel:
    masses = _flat(_require(spec, "masses", where), f"{where} masses")
    vals = _flat(_require(spec, "values", where), f"{where} values")
    if len(vals) != len(masses) ** r:
        raise DimensionError(f"{where}: {len(vals)} values for {len(masses)} steps and r={r}")
    return StepKernel(masses, vals.reshape((len(masses),) * r))


def parse_cost(spec: dict, r: int):
    """Cost kernel: ``{"kind": "triangular"}``, a step kernel or an r-array."""
    kind = spec.get("kind", "rarray")
    if kind == "triangular":
        return TriangularKernel()
    if kind == "step_kernel":
        return _step_kernel(spec, r, "cost")
    return RArray(_cube(_require(spec, "values", "cost"), r, "cost"))


def load_instance(path) -> dict:
    return parse_instance(load_json(path))


# ---------------------------------------------------------------------------
# canonical output

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        obj = obj + 0.0  # drop the sign of negative zero
        text = "%.17g" % obj
        # keep a float marker so integral floats read back as floats
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj, ensure_ascii=False)


def canonical_dumps(obj) -> str:
    return _encode(_plain(obj), 0) + "\n"


def write_result(path, obj) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def write_csv(path, header: list[str], rows: list[list]) -> None:
    """Comma-separated rows with a header; floats use ``%.17g``."""
    def cell(v):
        v = _plain(v)
        if isinstance(v, float):
            return "%.17g" % v
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
