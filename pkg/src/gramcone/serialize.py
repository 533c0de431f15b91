"""JSON reading and writing for instances and reports.

Instance schema::

    {"operator": {"matrix": [[...]]} | {"truncation": {"family": ..., "level": N}},
     "cone": {"kind": ..., "dim": n, "matrix": [[...]]},
     "dual_generators": [[...]],           # optional, generators as columns
     "policy": {"rank_rel_tol": ..., "membership_tol": ..., "identity_tol": ...}}

An instance-spec document (``{"kind": ..., "seed": ..., "level_or_dims": ...}``)
is accepted wherever an instance is expected.

Floats are written with 17 significant digits so that reading back a
written document reproduces every value bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .cone import ConvexCone
from .numlin import TolerancePolicy
from .operators import MatrixOperator, TruncationSpec, build_truncation
from .theorem import GramInstance


class InputError(ValueError):
    """Malformed instance document; the message names the line or field."""


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def _encode(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), indent, level, out)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            parts = []
            for v in obj:
                sub = []
                _encode(v, indent, level + 1, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad)
                _encode(v, indent, level + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(end + "]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def instance_to_dict(inst: GramInstance) -> dict:
    out = {"operator": {"matrix": inst.T.tolist()}, "cone": inst.cone.to_dict()}
    if inst.dual_generators is not None:
        out["dual_generators"] = inst.dual_generators.tolist()
    out["policy"] = inst.policy.to_dict()
    return out


def _field(data, key, where):
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected an object")
    if key not in data:
        raise InputError(f"{where}: missing field {key!r}")
    return data[key]


def instance_from_dict(data: dict, policy: TolerancePolicy = None) -> GramInstance:
    """Build an instance; an explicit ``policy`` overrides the document's."""
    from .instances import InstanceSpec, make

    if isinstance(data, dict) and "kind" in data and "operator" not in data:
        try:
            spec = InstanceSpec.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"instance spec: {exc}") from exc
        return make(spec, policy or TolerancePolicy())

    try:
        pol = TolerancePolicy.from_dict(data.get("policy", {})) if isinstance(data, dict) else None
    except (TypeError, ValueError) as exc:
        raise InputError(f"field 'policy': {exc}") from exc
    if policy is not None:
        pol = policy
    op = _field(data, "operator", "document")
    try:
        if isinstance(op, dict) and "truncation" in op:
            t = op["truncation"]
            spec = TruncationSpec(_field(t, "family", "operator.truncation"), _field(t, "level", "operator.truncation"))
            T, _ = build_truncation(spec, pol)
        else:
            T = MatrixOperator(_field(op, "matrix", "operator"), pol)
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise InputError(f"field 'operator': {exc}") from exc
    try:
        cone = ConvexCone.from_dict(_field(data, "cone", "document"))
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise InputError(f"field 'cone': {exc}") from exc
    dual_gens = data.get("dual_generators")
    try:
        if dual_gens is not None:
            dual_gens = np.asarray(dual_gens, dtype=float)
        return GramInstance(T, cone, dual_gens, pol)
    except (TypeError, ValueError) as exc:
        raise InputError(f"field 'dual_generators': {exc}") from exc


def loads_instance(text: str, policy: TolerancePolicy = None) -> GramInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data, policy)


def load_instance(path, policy: TolerancePolicy = None) -> GramInstance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return loads_instance(text, policy)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def dump_instance(inst: GramInstance) -> str:
    return dumps(instance_to_dict(inst))
