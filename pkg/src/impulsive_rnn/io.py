"""Model documents (JSON), trajectory CSV export and atomic file writes."""

from __future__ import annotations

import copy
import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError
from .model import (ActivationSpec, ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure,
                    Trajectory, as_box)

__all__ = ["SCHEMA", "ModelDocument", "DocumentError", "load_document", "parse_document",
           "bundled_names", "trajectory_csv", "rows_csv", "atomic_write", "dumps"]

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}

_ACT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(ActivationSpec.KINDS)},
        "gain": _NUM,
        "slope": _NUM,
        "breakpoints": {"type": "array", "items": {"type": "array", "items": _NUM,
                                                   "minItems": 2, "maxItems": 2}},
        "lipschitz": _NUM,
    },
}

_MAP = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(ImpulseMap.KINDS)},
        "slope": _NUM,
        "offset": _NUM,
        "center": _NUM,
        "scale": _NUM,
    },
}

_SEQ = {
    "type": "object",
    "additionalProperties": False,
    "required": ["prefix"],
    "properties": {
        "prefix": {"type": "array", "items": _NUM},
        "period": {"type": ["integer", "null"], "minimum": 1},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["network", "time", "impulses"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m", "a", "B", "C", "d", "f", "g"],
            "properties": {
                "m": {"type": "integer", "minimum": 1},
                "a": _VEC, "B": _MAT, "C": _MAT, "d": _VEC,
                "f": {"type": "array", "items": _ACT, "minItems": 1},
                "g": {"type": "array", "items": _ACT, "minItems": 1},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "required": ["theta"],
            "properties": {
                "theta": _SEQ,
                "tau": _SEQ,
                "omega": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "theta_bar": {"type": ["number", "null"]},
                "tau_under": {"type": ["number", "null"]},
            },
        },
        "impulses": {
            "type": "object",
            "additionalProperties": False,
            "required": ["ell", "maps"],
            "properties": {
                "ell": {"type": "number", "minimum": 0},
                "maps": {"type": "array", "minItems": 1,
                         "items": {"type": "array", "items": _MAP, "minItems": 1}},
                "box": {"type": ["array", "null"],
                        "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t0": _NUM,
                "x0": _VEC,
                "t_end": _NUM,
                "step": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["rk4-fixed", "rk4-halving"]},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "slack": {"type": "number", "minimum": 0},
                "reference": {"enum": ["equilibrium", "periodic"]},
            },
        },
    },
}

RUN_DEFAULTS = {
    "t0": 0.0, "t_end": 10.0, "step": 1e-3, "method": "rk4-fixed", "tol": 1e-9,
    "grid": None, "slack": 0.05, "reference": "equilibrium",
}


class DocumentError(ValidationError):
    """A document failed schema validation; ``location`` is a JSON-pointer-like path."""

    def __init__(self, message, location="/"):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True, eq=False)
class ModelDocument:
    spec: NetworkSpec
    ts: TimeStructure
    imp: ImpulseFamily
    box: tuple | None
    run: dict
    raw: dict

    def to_dict(self) -> dict:
        """Canonical data form; re-parsing it reproduces the same model."""
        return document_dict(self.spec, self.ts, self.imp, self.box, self.run,
                             name=self.raw.get("name"), description=self.raw.get("description"))

    def dumps(self) -> str:
        return dumps(self.to_dict())


def dumps(data) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _act_dict(act: ActivationSpec):
    out = {"kind": act.kind, "lipschitz": act.lipschitz}
    if act.kind == "scaled-tanh":
        out.update(gain=act.gain, slope=act.slope)
    else:
        out["breakpoints"] = [list(p) for p in act.breakpoints]
    return out


def _map_dict(mp: ImpulseMap):
    if mp.kind == "affine":
        return {"kind": "affine", "slope": mp.slope, "offset": mp.offset}
    if mp.kind == "centered-quadratic":
        return {"kind": "centered-quadratic", "center": mp.center, "scale": mp.scale}
    return {"kind": "zero"}


def document_dict(spec, ts, imp, box=None, run=None, name=None, description=None) -> dict:
    out = {
        "network": {
            "m": spec.m, "a": spec.a.tolist(), "B": spec.B.tolist(), "C": spec.C.tolist(),
            "d": spec.d.tolist(), "f": [_act_dict(x) for x in spec.f], "g": [_act_dict(x) for x in spec.g],
        },
        "time": {
            "theta": {"prefix": list(ts.theta_prefix), "period": ts.theta_period},
            "tau": {"prefix": list(ts.tau_prefix), "period": ts.tau_period},
            "omega": ts.omega, "theta_bar": ts.theta_bar_given, "tau_under": ts.tau_under_given,
        },
        "impulses": {
            "ell": imp.ell,
            "maps": [[_map_dict(mp) for mp in row] for row in imp.maps],
            "box": [list(b) for b in box] if box is not None else None,
        },
    }
    if run:
        out["run"] = {k: (list(v) if isinstance(v, (tuple, np.ndarray)) else v) for k, v in run.items()}
    if name is not None:
        out["name"] = name
    if description is not None:
        out["description"] = description
    return out


def _location(err) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return "/" + path


def parse_document(data: dict) -> ModelDocument:
    """Validate ``data`` against :data:`SCHEMA` and build the model objects."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        first = errors[0]
        raise DocumentError(first.message, _location(first))
    net, tm, im = data["network"], data["time"], data["impulses"]
    try:
        spec = NetworkSpec(net["a"], net["B"], net["C"], net["d"],
                           [ActivationSpec(**a) for a in net["f"]],
                           [ActivationSpec(**g) for g in net["g"]])
        if spec.m != net["m"]:
            raise DocumentError(f"m={net['m']} but a has {spec.m} entries", "/network/m")
        tau = tm.get("tau", {"prefix": []})
        ts = TimeStructure(tm["theta"]["prefix"], tau["prefix"], tm["theta"].get("period"),
                           tau.get("period"), tm.get("omega"), tm.get("theta_bar"), tm.get("tau_under"))
        imp = ImpulseFamily([[ImpulseMap(**mp) for mp in row] for row in im["maps"]], im["ell"])
    except DocumentError:
        raise
    except (ValueError, TypeError) as exc:
        raise DocumentError(str(exc), "/") from exc
    run = dict(RUN_DEFAULTS)
    run.update(data.get("run", {}))
    return ModelDocument(spec, ts, imp, as_box(im.get("box")), run, copy.deepcopy(data))


def bundled_names() -> list[str]:
    root = resources.files("impulsive_rnn") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_document(source) -> ModelDocument:
    """Parse a bundled example by name or a JSON file by path."""
    text = None
    src = str(source)
    if src in bundled_names():
        text = (resources.files("impulsive_rnn") / "data" / f"{src}.json").read_text()
    else:
        path = Path(src)
        if not path.is_file():
            raise DocumentError(f"no such document or bundled example: {src!r}")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return parse_document(data)


# ---------------------------------------------------------------------------
# CSV and files
# ---------------------------------------------------------------------------

def rows_csv(rows, m: int) -> str:
    """CSV text for ``(t, x, tag)`` rows with header ``t,x1,...,xm,tag``."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *[f"x{i + 1}" for i in range(m)], "tag"])
    for t, x, tag in rows:
        w.writerow([repr(float(t)), *[repr(float(v)) for v in x], tag])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    return rows_csv(zip(traj.times, traj.states, traj.tags), traj.m)


def read_csv(text: str):
    """Inverse of :func:`rows_csv`: ``(times, states, tags)``."""
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    m = len(header) - 2
    times, states, tags = [], [], []
    for row in reader:
        times.append(float(row[0]))
        states.append([float(v) for v in row[1:1 + m]])
        tags.append(row[-1])
    return np.array(times), np.array(states).reshape(-1, m), tags


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
