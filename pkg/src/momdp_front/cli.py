"""``momdp-front`` command line.

Exit codes: 0 success, 1 domain failure (invalid model, off-front target,
simulation outside its band, ...), 2 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import estimation, io, lp
from .front import (
    OffFrontError,
    front_bruteforce,
    front_dichotomy_2d,
    front_from_policy_family,
    realize_point,
)
from .model import (
    DEFAULT_ENUM_BOUND,
    DeterministicPolicy,
    SimpleMixingPolicy,
    all_deterministic_policies,
    is_unichain,
    parse_policy,
    policies_adjacent,
    validate_model,
)
from .nonlinear import ScalarizationSpec, evaluate, minimize_over_front_2d, minimize_over_front_general, parse_scalarization
from .occupancy import MultichainError
from .simulation import RolloutConfig, analytic_policy_objective, rollout

BOUND_ENV = "MOMDP_ENUM_BOUND"
CURVE_POINTS = 101
BAND_SIGMAS = 3.0


class ParseFailure(Exception):
    """Input could not be read or parsed (exit code 2)."""


class DomainFailure(Exception):
    """Input is well formed but the requested computation is not possible (exit code 1)."""


def enum_bound() -> int:
    raw = os.environ.get(BOUND_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ENUM_BOUND
    try:
        value = int(raw)
    except ValueError as exc:
        raise ParseFailure(f"{BOUND_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ParseFailure(f"{BOUND_ENV} must be positive")
    return value


def _floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()], dtype=float)
    except ValueError as exc:
        raise ParseFailure(f"cannot parse {what} {text!r}") from exc


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseFailure(f"cannot read {path}: {exc}") from exc
    try:
        return io._loads(text)
    except io.FormatError as exc:
        raise ParseFailure(f"{path}: {exc}") from exc


def _load_model(path):
    data = _read_json(path)
    try:
        model = io.model_from_dict(data)
    except io.FormatError as exc:
        raise ParseFailure(f"{path}: {exc}") from exc
    problems = validate_model(model)
    if problems:
        raise DomainFailure("invalid model:\n  " + "\n  ".join(problems))
    return model


def _write(path, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ParseFailure(f"cannot write {path}: {exc}") from exc


def _fmt(v) -> str:
    return "[" + ", ".join(f"{x:.10g}" for x in np.ravel(v)) + "]"


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    check = is_unichain(model, bound=enum_bound())
    if check.verified is None:
        raise DomainFailure(f"valid transition structure, but {check.detail}")
    if not check.verified:
        raise DomainFailure(f"model is not unichain: policy {check.witness.label()} has {check.detail}")
    print(
        f"ok: {model.num_states} states, {model.num_actions} actions, {model.num_objectives} objectives; "
        f"unichain ({check.method}: {check.detail})"
    )
    return 0


def _family(model, path):
    if path is not None:
        data = _read_json(path)
        try:
            return [DeterministicPolicy(tuple(p)) for p in data["policies"]], False
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseFailure(f"{path}: expected {{'policies': [[...], ...]}}") from exc
    if model.metadata.get("kind") == "remote_estimation":
        return estimation.threshold_family(model.num_states - 1), True
    bound = enum_bound()
    if model.num_actions**model.num_states > bound:
        raise DomainFailure("no policy family given and the full family exceeds the enumeration bound")
    return list(all_deterministic_policies(model)), True


def compute_front(model, method: str, family_path=None, expand: bool = True):
    if method == "dichotomy":
        if model.num_objectives != 2:
            raise DomainFailure(f"dichotomy needs 2 objectives, model has {model.num_objectives}")
        return front_dichotomy_2d(model, expand=expand, bound=enum_bound())
    if method == "bruteforce":
        return front_bruteforce(model, bound=enum_bound(), expand=expand)
    if method == "family":
        if model.num_objectives != 2:
            raise DomainFailure(f"family fronts need 2 objectives, model has {model.num_objectives}")
        fam, complete = _family(model, family_path)
        return front_from_policy_family(model, fam, complete=complete, expand=expand)
    raise DomainFailure(f"unknown method {method!r}")


def cmd_front(args) -> int:
    model = _load_model(args.model)
    front = compute_front(model, args.method, args.family, expand=not args.no_expand)
    print(f"{args.method} front: {len(front.vertices)} vertices, {len(front.edges)} edges, exact={front.exact}")
    for i, v in enumerate(front.vertices):
        print(f"  v{i}: J={_fmt(v.objective)} policy={v.policy.label()}")
    for i, e in enumerate(front.edges):
        sw = "" if e.switch_state is None else f" switch_state={e.switch_state}"
        slope = "" if e.slope is None else f" slope={e.slope:.10g}"
        print(f"  e{i}: v{e.start}->v{e.end}{slope} hops={len(e.hops)}{sw}")
    if model.metadata.get("kind") == "remote_estimation":
        report = estimation.verify_threshold_front(model, front)
        print(f"threshold structure: {'ok' if report.ok else 'VIOLATED'}; vertex thresholds {report.vertex_thresholds}")
        for msg in report.violations:
            print(f"  {msg}")
    if args.out:
        _write(args.out, io._dumps(io.front_to_dict(front)))
    if args.csv:
        _write(args.csv, io.front_csv(front))
    return 0


def _scalarization(args) -> ScalarizationSpec:
    try:
        if args.scalarization:
            return parse_scalarization(args.scalarization)
        cfg = _read_json(args.config).get("scalarization")
        if isinstance(cfg, str):
            return parse_scalarization(cfg)
        if isinstance(cfg, dict):
            return ScalarizationSpec.from_dict(cfg)
    except (ValueError, TypeError, KeyError) as exc:
        raise ParseFailure(f"bad scalarization: {exc}") from exc
    raise ParseFailure("config file has no 'scalarization' entry")


def _solution_dict(model, front, spec, sol) -> dict:
    out = {
        "scalarization": spec.describe(),
        "objective_point": sol.objective_point,
        "value": sol.value,
        "location": sol.location,
        "vertex": sol.vertex,
        "edge": sol.edge,
        "b": sol.b,
        "ties": sol.ties,
        "parts": [{"policy": list(v.policy.actions), "objective": v.objective, "weight": w} for v, w in sol.parts],
        "pareto_optimal": bool(lp.is_pareto_optimal(model, sum(w * v.phi for v, w in sol.parts))),
    }
    real = sol.realization
    if isinstance(real, (DeterministicPolicy, SimpleMixingPolicy)):
        out["realization"] = io.policy_to_dict(real)
    if isinstance(real, SimpleMixingPolicy):
        out["alpha"] = real.alpha
        out["switch_state"] = real.switch_state
    return out


def front_curve_csv(front, spec) -> str:
    """``f`` along a two-objective front: vertex rows, then a grid along every edge."""
    lines = ["kind,edge,b,J1,J2,f"]
    for i, v in enumerate(front.vertices):
        lines.append(f"vertex,,,{v.objective[0]!r},{v.objective[1]!r},{evaluate(spec, v.objective)!r}")
    for k, e in enumerate(front.edges):
        js, je = front.vertices[e.start].objective, front.vertices[e.end].objective
        for b in np.linspace(0.0, 1.0, CURVE_POINTS):
            J = b * js + (1 - b) * je
            lines.append(f"edge,{k},{float(b)!r},{J[0]!r},{J[1]!r},{evaluate(spec, J)!r}")
    return "\n".join(lines) + "\n"


def cmd_nlopt(args) -> int:
    model = _load_model(args.model)
    spec = _scalarization(args)
    try:
        spec.check(model.num_objectives)
    except ValueError as exc:
        raise DomainFailure(f"scalarization rejected: {exc}") from exc
    method = args.method or ("dichotomy" if model.num_objectives == 2 else "bruteforce")
    front = compute_front(model, method, args.family)
    if model.num_objectives == 2:
        sol = minimize_over_front_2d(model, front, spec)
    else:
        sol = minimize_over_front_general(model, front, spec)
    data = _solution_dict(model, front, spec, sol)
    print(f"f = {spec.describe()}")
    print(f"optimum at {sol.location}: J={_fmt(sol.objective_point)} f={sol.value:.12g}")
    if sol.location == "edge":
        print(f"  edge e{sol.edge}, b={sol.b:.12g}")
        if "alpha" in data:
            print(f"  mixing alpha={data['alpha']:.12g} at switch state {data['switch_state']}")
    for p in data["parts"]:
        print(f"  policy {DeterministicPolicy(tuple(p['policy'])).label()} weight {p['weight']:.12g}")
    if args.out:
        _write(args.out, io._dumps(data))
    if args.curve:
        if model.num_objectives != 2:
            raise DomainFailure("curve data is produced for two objectives only")
        _write(args.curve, front_curve_csv(front, spec))
    return 0


def _system(args) -> estimation.EstimationSystem:
    try:
        if args.system:
            data = _read_json(args.system)
            if args.p_s is not None:
                data["p_s"] = args.p_s
            if args.x_max is not None:
                data["x_max"] = args.x_max
            return estimation.EstimationSystem.from_dict(data)
        p_s = 0.3 if args.p_s is None else args.p_s
        if args.preset == "pendubot":
            return estimation.pendubot_system(p_s, args.x_max or estimation.DEFAULT_X_MAX)
        return estimation.scalar_system(args.a, args.c, args.q, args.r, p_s, args.x_max or 3)
    except KeyError as exc:
        raise ParseFailure(f"system file is missing {exc}") from exc
    except ValueError as exc:
        raise DomainFailure(str(exc)) from exc


def cmd_casegen(args) -> int:
    sys_ = _system(args)
    filt = estimation.steady_state_covariance(sys_)
    table = estimation.eta_table(sys_, filt)
    model = estimation.build_momdp(sys_, table)
    stable, value = estimation.stability_condition(sys_)
    meta = dict(model.metadata)
    meta.update(
        {
            "preset": None if args.system else args.preset,
            "system": sys_.to_dict(),
            "riccati_iterations": filt.iterations,
            "riccati_residual": filt.residual,
            "K_bar": filt.K_bar,
            "eta": table.eta,
            "eta_monotone": table.monotone,
            "stability_value": value,
            "stability_condition_holds": stable,
            "x_max_source": "user" if args.x_max is not None else "default",
        }
    )
    model = type(model)(model.kernel, model.costs, model.beta, model.state_labels, model.action_labels, meta)
    print(
        f"{model.num_states} states; K_bar residual {filt.residual:.3g} after {filt.iterations} iterations; "
        f"||A||^2(1-p_s) = {value:.6g} ({'holds' if stable else 'fails'}); eta monotone: {table.monotone}"
    )
    if args.out:
        _write(args.out, io._dumps(io.model_to_dict(model)))
    else:
        sys.stdout.write(io._dumps(io.model_to_dict(model)))
    return 0


def _policy(args, model):
    try:
        if args.policy:
            return io.policy_from_dict(_read_json(args.policy))
        if args.threshold is not None:
            return estimation.threshold_policy(args.threshold, model.num_states - 1)
        if args.actions:
            return parse_policy(args.actions, model)
        if args.mix:
            parts = args.mix.split(":")
            if len(parts) != 3:
                raise ParseFailure("--mix expects PI1:PI2:ALPHA")
            p1, p2 = parse_policy(parts[0], model), parse_policy(parts[1], model)
            i0 = policies_adjacent(p1, p2)
            if i0 is None:
                raise DomainFailure("mixing policies must differ in exactly one state")
            return SimpleMixingPolicy(p1, p2, i0, float(parts[2]))
    except io.FormatError as exc:
        raise ParseFailure(str(exc)) from exc
    except ValueError as exc:
        raise DomainFailure(f"policy does not fit the model: {exc}") from exc
    raise ParseFailure("give one of --policy, --threshold, --actions, --mix")


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    policy = _policy(args, model)
    try:
        _, J = analytic_policy_objective(model, policy)
        res = rollout(model, policy, RolloutConfig(args.steps, args.seed, args.start))
    except ValueError as exc:
        raise DomainFailure(str(exc)) from exc
    ok = res.within(J, BAND_SIGMAS)
    print(f"T={args.steps} seed={args.seed}")
    for k in range(model.num_objectives):
        print(
            f"  J{k + 1}: empirical {res.objective[k]:.10g}  analytic {J[k]:.10g}  "
            f"stderr {res.objective_stderr[k]:.3g}  {'within' if ok[k] else 'OUTSIDE'} {BAND_SIGMAS:g} sigma"
        )
    if args.out:
        _write(
            args.out,
            io._dumps(
                {
                    "steps": args.steps,
                    "seed": args.seed,
                    "policy": io.policy_to_dict(policy),
                    "empirical": res.objective,
                    "analytic": J,
                    "stderr": res.objective_stderr,
                    "within": ok,
                }
            ),
        )
    return 0 if bool(np.all(ok)) else 1


def cmd_decompose(args) -> int:
    data = _read_json(args.front)
    try:
        front = io.front_from_dict(data, verify=True)
    except io.FormatError as exc:
        raise ParseFailure(f"{args.front}: {exc}") from exc
    target = _floats(args.target, "target")
    try:
        real = realize_point(front, target)
    except OffFrontError as exc:
        hint = "" if exc.nearest is None else f"; nearest front point {_fmt(exc.nearest)}"
        raise DomainFailure(f"{exc}{hint}") from exc
    index = {id(v): i for i, v in enumerate(front.vertices)}
    out = {
        "target": target,
        "parts": [
            {"vertex": index[id(v)], "policy": list(v.policy.actions), "objective": v.objective, "weight": w}
            for v, w in real["parts"]
        ],
    }
    for p in out["parts"]:
        print(f"  v{p['vertex']} policy {DeterministicPolicy(tuple(p['policy'])).label()} weight {p['weight']:.12g}")
    ep = real["edge_point"]
    if ep is not None:
        out["b"] = ep.b
        out["realization"] = io.policy_to_dict(ep.realization) if ep.simple else None
        if ep.simple:
            print(f"  mixing alpha={ep.realization.alpha:.12g} at switch state {ep.realization.switch_state}")
    if args.out:
        _write(args.out, io._dumps(out))
    return 0


def cmd_solve(args) -> int:
    model = _load_model(args.model)
    w = _floats(args.weights, "weights")
    try:
        sol = lp.solve_scalarized(model, w)
    except ValueError as exc:
        raise DomainFailure(str(exc)) from exc
    print(f"policy {sol.policy.label()}  J={_fmt(sol.objective)}  <w,J>={float(w @ sol.objective):.12g}")
    if args.out:
        _write(
            args.out,
            io._dumps({"weights": w, "policy": list(sol.policy.actions), "objective": sol.objective, "phi": sol.phi}),
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momdp-front", description="Exact Pareto fronts of average-cost multi-objective MDPs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a model file")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("front", help="compute the Pareto front")
    s.add_argument("model")
    s.add_argument("--method", choices=("dichotomy", "bruteforce", "family"), default="dichotomy")
    s.add_argument("--family", help="JSON file {'policies': [...]} for --method family")
    s.add_argument("--no-expand", action="store_true", help="skip the search for single-state hops on edges")
    s.add_argument("--out", help="front JSON file")
    s.add_argument("--csv", help="plot table")
    s.set_defaults(func=cmd_front)

    s = sub.add_parser("nlopt", help="minimize a strictly increasing scalarization over the front")
    s.add_argument("model")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--scalarization", help='e.g. "linear(1)+sigmoid(200,17,0.6)"')
    g.add_argument("--config", help="JSON file with a 'scalarization' entry")
    s.add_argument("--method", choices=("dichotomy", "bruteforce", "family"))
    s.add_argument("--family")
    s.add_argument("--out", help="solution JSON file")
    s.add_argument("--curve", help="CSV of f along the front")
    s.set_defaults(func=cmd_nlopt)

    s = sub.add_parser("casegen", help="build the remote-estimation model")
    s.add_argument("--preset", choices=("pendubot", "scalar"), default="pendubot")
    s.add_argument("--system", help="JSON file with A, C, Q, R, p_s, x_max")
    s.add_argument("--p-s", dest="p_s", type=float)
    s.add_argument("--x-max", dest="x_max", type=int)
    for name, default in (("a", 0.0), ("c", 1.0), ("q", 1.0), ("r", 1.0)):
        s.add_argument(f"--{name}", type=float, default=default, help="scalar preset parameter")
    s.add_argument("--out", help="model JSON file (stdout if omitted)")
    s.set_defaults(func=cmd_casegen)

    s = sub.add_parser("simulate", help="roll out a policy and compare with its analytic objective")
    s.add_argument("model")
    s.add_argument("--policy", help="policy JSON file")
    s.add_argument("--threshold", type=int)
    s.add_argument("--actions", help="deterministic policy, e.g. 'ab' or '0,1'")
    s.add_argument("--mix", help="PI1:PI2:ALPHA")
    s.add_argument("--steps", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--start", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("decompose", help="realize a front point")
    s.add_argument("front")
    s.add_argument("--target", required=True, help="comma-separated objective vector")
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("solve", help="minimize a weighted sum of the objectives")
    s.add_argument("model")
    s.add_argument("--weights", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainFailure, MultichainError, estimation.RiccatiError, OverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
