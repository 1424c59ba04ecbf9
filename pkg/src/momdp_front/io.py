"""JSON model/front files and CSV plot tables.

Floats are written with Python's shortest round-trip ``repr`` so a write/read
cycle reproduces every numeric payload bit for bit. Non-finite values become
``null``.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import lp
from .front import EdgeHop, FrontEdge, FrontVertex, ParetoFront, recurrent_states
from .model import DeterministicPolicy, MomdpModel, SimpleMixingPolicy, StationaryPolicy
from .occupancy import polytope_spec

SCHEMA_VERSION = 1
MODEL_KIND = "momdp_model"
FRONT_KIND = "pareto_front"


class FormatError(ValueError):
    """File content does not follow the expected schema."""


def _plain(obj):
    """Convert numpy containers and scalars to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=1, allow_nan=False) + "\n"


def _loads(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("top-level JSON value must be an object")
    return data


def _require(d: dict, key: str):
    if key not in d:
        raise FormatError(f"missing field {key!r}")
    return d[key]


def _check_header(d: dict, kind: str):
    version = _require(d, "schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {version!r}")
    if d.get("kind", kind) != kind:
        raise FormatError(f"expected a {kind} file, found {d.get('kind')!r}")


def model_to_dict(model: MomdpModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": MODEL_KIND,
        "states": {"count": model.num_states, "labels": list(model.state_labels) if model.state_labels else None},
        "actions": {"count": model.num_actions, "labels": list(model.action_labels) if model.action_labels else None},
        "kernel": model.kernel,
        "costs": model.costs,
        "beta": model.beta,
        "metadata": dict(model.metadata),
    }


def model_from_dict(d: dict) -> MomdpModel:
    _check_header(d, MODEL_KIND)
    states, actions = _require(d, "states"), _require(d, "actions")
    try:
        kernel = np.array(_require(d, "kernel"), dtype=float)
        costs = np.array(_require(d, "costs"), dtype=float)
        beta = np.array(_require(d, "beta"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"numeric arrays are malformed: {exc}") from exc
    n, m = int(_require(states, "count")), int(_require(actions, "count"))
    if kernel.shape[:2] != (n, m):
        raise FormatError(f"kernel shape {kernel.shape} does not match {n} states and {m} actions")
    try:
        return MomdpModel(
            kernel,
            costs,
            beta,
            state_labels=states.get("labels"),
            action_labels=actions.get("labels"),
            metadata=dict(d.get("metadata") or {}),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def _arr(x) -> Optional[np.ndarray]:
    return None if x is None else np.array(x, dtype=float)


def _num(x) -> Optional[float]:
    return None if x is None else float(x)


def front_to_dict(front: ParetoFront) -> dict:
    vertices = [
        {
            "policy": list(v.policy.actions),
            "phi": v.phi,
            "objective": v.objective,
            "supporting_weight": v.supporting_weight,
        }
        for v in front.vertices
    ]
    edges = []
    for e in front.edges:
        edges.append(
            {
                "start": e.start,
                "end": e.end,
                "slope": e.slope,
                "switch_state": e.switch_state,
                "nu1_i0": e.nu1_i0,
                "nu2_i0": e.nu2_i0,
                "hops": [
                    {
                        "pi1": list(h.pi1.actions),
                        "pi2": list(h.pi2.actions),
                        "phi1": h.phi1,
                        "phi2": h.phi2,
                        "switch_state": h.switch_state,
                    }
                    for h in e.hops
                ],
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": FRONT_KIND,
        "method": front.method,
        "exact": front.exact,
        "model": model_to_dict(front.model),
        "vertices": vertices,
        "edges": edges,
    }


def front_from_dict(d: dict, verify: bool = True) -> ParetoFront:
    """Rebuild a front; with ``verify`` every vertex must pass the Pareto test again."""
    _check_header(d, FRONT_KIND)
    model = model_from_dict(_require(d, "model"))
    try:
        vertices = [
            FrontVertex(
                DeterministicPolicy(tuple(v["policy"])),
                np.array(v["phi"], dtype=float),
                np.array(v["objective"], dtype=float),
                _arr(v.get("supporting_weight")),
            )
            for v in _require(d, "vertices")
        ]
        edges = []
        for e in _require(d, "edges"):
            hops = [
                EdgeHop(
                    DeterministicPolicy(tuple(h["pi1"])),
                    DeterministicPolicy(tuple(h["pi2"])),
                    np.array(h["phi1"], dtype=float),
                    np.array(h["phi2"], dtype=float),
                    int(h["switch_state"]),
                )
                for h in e.get("hops", [])
            ]
            slope = e.get("slope")
            edges.append(FrontEdge(int(e["start"]), int(e["end"]), hops, None if slope is None else float(slope)))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed front entry: {exc}") from exc
    front = ParetoFront(model, vertices, edges, method=str(d.get("method", "unknown")), exact=bool(d.get("exact", True)))
    if verify:
        verify_front(front)
    return front


def verify_front(front: ParetoFront):
    """Raise ``ValueError`` unless every vertex is a Pareto-optimal member of the occupancy polytope."""
    model = front.model
    spec = polytope_spec(model)
    n = len(front.vertices)
    for k, v in enumerate(front.vertices):
        if v.phi.shape != (model.num_states, model.num_actions):
            raise ValueError(f"vertex {k}: occupancy has shape {v.phi.shape}")
        try:
            check = lp.is_pareto_optimal(model, v.phi, spec)
        except RuntimeError as exc:
            raise ValueError(f"vertex {k}: {exc}") from exc
        if not check.optimal:
            raise ValueError(f"vertex {k} is dominated (gap {check.gap:.3g})")
    for e in front.edges:
        if not (0 <= e.start < n and 0 <= e.end < n):
            raise ValueError(f"edge ({e.start}, {e.end}) refers to a missing vertex")


PathLike = Union[str, Path]


def save_model(model: MomdpModel, path: PathLike):
    Path(path).write_text(_dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: PathLike) -> MomdpModel:
    return model_from_dict(_loads(Path(path).read_text(encoding="utf-8")))


def save_front(front: ParetoFront, path: PathLike):
    Path(path).write_text(_dumps(front_to_dict(front)), encoding="utf-8")


def load_front(path: PathLike, verify: bool = True) -> ParetoFront:
    return front_from_dict(_loads(Path(path).read_text(encoding="utf-8")), verify=verify)


def write_json(obj, path: PathLike):
    Path(path).write_text(_dumps(obj), encoding="utf-8")


def policy_to_dict(policy) -> dict:
    if isinstance(policy, DeterministicPolicy):
        return {"type": "deterministic", "actions": list(policy.actions)}
    if isinstance(policy, SimpleMixingPolicy):
        return {
            "type": "mixing",
            "pi1": list(policy.pi1.actions),
            "pi2": list(policy.pi2.actions),
            "switch_state": policy.switch_state,
            "alpha": policy.alpha,
        }
    if isinstance(policy, StationaryPolicy):
        return {"type": "stationary", "probs": policy.probs}
    raise TypeError(f"unsupported policy type {type(policy).__name__}")


def policy_from_dict(d: dict):
    kind = d.get("type")
    try:
        if kind == "deterministic":
            return DeterministicPolicy(tuple(d["actions"]))
        if kind == "mixing":
            return SimpleMixingPolicy(
                DeterministicPolicy(tuple(d["pi1"])),
                DeterministicPolicy(tuple(d["pi2"])),
                int(d["switch_state"]),
                float(d["alpha"]),
            )
        if kind == "stationary":
            return StationaryPolicy(np.array(d["probs"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed policy: {exc}") from exc
    raise FormatError(f"unknown policy type {kind!r}")


def _threshold(model: MomdpModel, policy: DeterministicPolicy) -> Optional[int]:
    from .estimation import threshold_of

    rec = np.zeros(model.num_states, dtype=bool)
    rec[list(recurrent_states(model, policy))] = True
    return threshold_of(policy, rec)


def front_csv_columns(num_objectives: int) -> list:
    return (
        ["kind"]
        + [f"J{k + 1}" for k in range(num_objectives)]
        + ["policy", "slope", "switch_state", "nu1_i0", "nu2_i0", "index", "start", "end", "threshold"]
    )


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ""
    return str(x)


def front_csv(front: ParetoFront) -> str:
    """Plot table: one row per vertex, then one row per edge."""
    model = front.model
    K = model.num_objectives
    thresholds = model.metadata.get("kind") == "remote_estimation"
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(front_csv_columns(K))
    for i, v in enumerate(front.vertices):
        th = _threshold(model, v.policy) if thresholds else None
        w.writerow(["vertex"] + [_cell(float(j)) for j in v.objective] + [v.policy.label(), "", "", "", "", i, "", "", _cell(th)])
    for i, e in enumerate(front.edges):
        w.writerow(
            ["edge"]
            + [""] * K
            + ["", _cell(e.slope), _cell(e.switch_state), _cell(e.nu1_i0), _cell(e.nu2_i0), i, e.start, e.end, ""]
        )
    return buf.getvalue()


def read_csv(text: str) -> list:
    """Rows of a CLI-emitted CSV as dictionaries (empty cells become None)."""
    rows = list(csv.DictReader(_io.StringIO(text)))
    return [{k: (v if v != "" else None) for k, v in r.items()} for r in rows]
