"""Linear programs over the occupancy polytope: scalarized MDPs and Pareto tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import DeterministicPolicy, MomdpModel, policy_kernel
from .occupancy import (
    PolytopeSpec,
    deterministic_policy_of_vertex,
    objective_vector,
    occupancy_of_stationary,
    polytope_spec,
)
from .simplex import LpStatus, solve_standard_form

WEIGHT_EPS = 1e-9
PARETO_TOL = 1e-8
FACE_TOL = 1e-9
IMPROVE_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    phi: Optional[np.ndarray]
    value: float
    basis: tuple
    reduced_costs: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class ScalarizedSolution:
    policy: DeterministicPolicy
    phi: np.ndarray
    objective: np.ndarray

    def __iter__(self):
        return iter((self.policy, self.phi, self.objective))


@dataclass(frozen=True, eq=False)
class ParetoCheck:
    optimal: bool
    gap: float
    witness: Optional[np.ndarray] = None
    witness_objective: Optional[np.ndarray] = None

    def __bool__(self) -> bool:
        return self.optimal


def check_weights(w, num_objectives: int, strict: bool = False, eps: float = WEIGHT_EPS) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.size != num_objectives:
        raise ValueError(f"expected {num_objectives} weights, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative and not all zero")
    if strict and np.any(w < eps):
        raise ValueError(f"strict weights must be >= {eps}")
    return w


def _scale(values) -> float:
    return max(1.0, float(np.max(np.abs(values)))) if np.size(values) else 1.0


def solve_lp(spec: PolytopeSpec, objective, exclude: Sequence[int] = ()) -> LpSolution:
    """Basic optimal solution of ``min <objective, phi>`` over the polytope."""
    objective = np.asarray(objective, dtype=float).ravel()
    if objective.size != spec.num_vars:
        raise ValueError(f"objective has {objective.size} entries, expected {spec.num_vars}")
    rows = spec.lp_rows
    res = solve_standard_form(objective, spec.A_eq[rows], spec.b_eq[rows], exclude=exclude)
    phi = None if res.x is None else res.x.reshape(spec.num_states, spec.num_actions)
    return LpSolution(res.status, phi, res.value, res.basis, res.reduced_costs)


def _require_optimal(sol: LpSolution) -> LpSolution:
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"LP over the occupancy polytope returned {sol.status.value}")
    return sol


def policy_of_basis(model: MomdpModel, sol: LpSolution) -> DeterministicPolicy:
    """Deterministic policy read off an optimal basis.

    A state whose occupancy underflows (e.g. 1e-20 deep in a rarely visited
    tail) still carries a basic variable naming its action; plain rounding of
    ``phi`` would treat it as transient and could reroute the chain.
    States without a basic variable are transient and get action 0.
    """
    U = model.num_actions
    acts = list(deterministic_policy_of_vertex(model, sol.phi).actions)
    best = np.full(model.num_states, -1.0)
    for j in sol.basis:
        if j >= model.num_states * U:
            continue
        x, u = divmod(int(j), U)
        if sol.phi[x, u] > best[x]:
            best[x] = sol.phi[x, u]
            acts[x] = u
    return DeterministicPolicy(tuple(acts))


def _finish(model: MomdpModel, policy: DeterministicPolicy) -> ScalarizedSolution:
    # recompute exactly from the chain rather than trusting simplex round-off
    exact = occupancy_of_stationary(model, policy)
    return ScalarizedSolution(policy, exact, objective_vector(model, exact))


def scalarized_cost(model: MomdpModel, w) -> np.ndarray:
    return np.einsum("k,kxu->xu", np.asarray(w, dtype=float), model.costs)


def evaluate_policy(model: MomdpModel, cost: np.ndarray, policy: DeterministicPolicy, ref: int = 0) -> tuple:
    """Gain ``g`` and relative values ``h`` (``h[ref] = 0``) of a unichain policy under ``cost``."""
    n = model.num_states
    P = policy_kernel(model, policy)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = np.eye(n) - P
    M[:n, n] = 1.0
    M[n, ref] = 1.0
    rhs = np.zeros(n + 1)
    rhs[:n] = cost[np.arange(n), list(policy.actions)]
    sol = np.linalg.solve(M, rhs)
    return float(sol[n]), sol[:n]


def relative_costs(model: MomdpModel, cost: np.ndarray, g: float, h: np.ndarray) -> tuple:
    """``d(x,u) = c(x,u) + sum_y P(x,u,y) h(y) - h(x) - g`` and the magnitude each entry is computed from."""
    future = model.kernel @ h
    d = cost + future - h[:, None] - g
    mag = np.maximum(np.maximum(1.0, np.abs(cost)), np.maximum(np.abs(future), np.abs(h)[:, None] + abs(g)))
    return d, mag


def policy_iteration(
    model: MomdpModel,
    cost: np.ndarray,
    policy: DeterministicPolicy,
    allowed: Optional[np.ndarray] = None,
    ref: int = 0,
    max_iter: int = 10_000,
) -> tuple:
    """Average-cost policy iteration from ``policy`` over the ``allowed`` (X, U) actions.

    Switches an action only when it improves by more than a relative
    ``IMPROVE_TOL`` of the magnitudes involved, so the comparison stays
    meaningful when costs span many orders of magnitude.
    Returns ``(policy, g, h, d, mag)``.
    """
    if allowed is None:
        allowed = np.ones(cost.shape, dtype=bool)
    acts = list(policy.actions)
    for _ in range(max_iter):
        pi = DeterministicPolicy(tuple(acts))
        g, h = evaluate_policy(model, cost, pi, ref)
        d, mag = relative_costs(model, cost, g, h)
        score = np.where(allowed, d / mag, np.inf)
        changed = False
        for x in range(model.num_states):
            u = int(np.argmin(score[x]))
            if u != acts[x] and (score[x, u] < -IMPROVE_TOL or not allowed[x, acts[x]]):
                acts[x] = u
                changed = True
        if not changed:
            return pi, g, h, d, mag
    raise RuntimeError("policy iteration did not converge")


def solve_scalarized(model: MomdpModel, w, spec: PolytopeSpec = None) -> ScalarizedSolution:
    """Deterministic optimal policy of the linear scalarization ``<w, J>``.

    The simplex vertex is polished by policy iteration, which certifies
    optimality with relative-value comparisons instead of one global
    tolerance. Transient states keep the action read from the basis
    (action 0 where none is basic); they do not affect any average cost.
    """
    w = check_weights(w, model.num_objectives)
    spec = spec or polytope_spec(model)
    cost = scalarized_cost(model, w)
    sol = _require_optimal(solve_lp(spec, cost))
    policy = policy_iteration(model, cost, policy_of_basis(model, sol), ref=spec.reference_state)[0]
    return _finish(model, policy)


def lexicographic_min(model: MomdpModel, order: Sequence[int], spec: PolytopeSpec = None) -> ScalarizedSolution:
    """Minimize objectives in ``order`` (0-based), each over the optimal face of the previous ones.

    The optimal face is kept exactly: after each stage the actions with a
    positive relative cost ``d(x,u)`` are removed (complementary slackness),
    so the result stays a vertex of the full polytope.
    """
    order = [int(k) for k in order]
    if sorted(order) != sorted(set(order)) or any(not 0 <= k < model.num_objectives for k in order):
        raise ValueError(f"invalid objective order {order}")
    spec = spec or polytope_spec(model)
    allowed = np.ones((model.num_states, model.num_actions), dtype=bool)
    policy = None
    for k in order:
        cost = model.costs[k]
        sol = _require_optimal(solve_lp(spec, cost, exclude=np.flatnonzero(~allowed.ravel())))
        start = policy_of_basis(model, sol)
        policy, _, _, d, mag = policy_iteration(model, cost, start, allowed, ref=spec.reference_state)
        allowed &= d <= FACE_TOL * mag
    return _finish(model, policy)


def is_pareto_optimal(model: MomdpModel, phi, spec: PolytopeSpec = None, tol: float = PARETO_TOL) -> ParetoCheck:
    """Maximize total slack ``s`` with ``J(phi') + s = J(phi)``; optimal iff the maximum is ~0.

    Slacks are measured relative to ``max(1, |J_k(phi)|)`` per objective and
    compared with ``tol``.
    """
    spec = spec or polytope_spec(model)
    K, nv = model.num_objectives, spec.num_vars
    target = objective_vector(model, phi)
    # each objective row in units of its own target magnitude
    sigma = np.maximum(1.0, np.abs(target))
    C = model.costs.reshape(K, nv) / sigma[:, None]
    rows = spec.lp_rows
    A = np.block([[spec.A_eq[rows], np.zeros((rows.size, K))], [C, np.eye(K)]])
    b = np.concatenate([spec.b_eq[rows], target / sigma])
    c = np.concatenate([np.zeros(nv), -np.ones(K)])
    res = solve_standard_form(c, A, b)
    if res.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"dominance LP returned {res.status.value}; phi is probably not a member")
    gap = float(res.x[nv:].sum())
    if gap <= tol:
        return ParetoCheck(True, gap)
    w_phi = res.x[:nv].reshape(spec.num_states, spec.num_actions)
    return ParetoCheck(False, gap, w_phi, objective_vector(model, w_phi))


def supporting_weight(
    model: MomdpModel, phi, spec: PolytopeSpec = None, eps: float = WEIGHT_EPS
) -> Optional[np.ndarray]:
    """A weight ``w >= eps`` with ``sum(w) = 1`` for which ``phi`` minimizes ``<w, J>``, or None.

    Uses the optimality conditions of the scalarized LP at ``phi``: a dual vector
    ``y`` with zero reduced cost on the support of ``phi`` and nonnegative reduced
    cost elsewhere. The margin on the off-support reduced costs is maximized
    (capped) to keep the weight away from the boundary of its normal cone.
    The answer is then confirmed by re-solving the scalarized problem.
    """
    spec = spec or polytope_spec(model)
    phi = np.asarray(phi, dtype=float)
    K, nv = model.num_objectives, spec.num_vars
    if K * eps > 1:
        raise ValueError("eps too large for the number of objectives")
    C = model.costs.reshape(K, nv)
    scale = _scale(C)
    Cs = C / scale
    support = phi.ravel() > 1e-9
    keep = spec.lp_rows
    m = keep.size
    # variables: w' (K, w = eps + w'), y+ (m), y- (m), delta (1), t (off-support slacks), u (cap slack)
    off = np.flatnonzero(~support)
    on = np.flatnonzero(support)
    n_t = off.size
    nvars = K + 2 * m + 1 + n_t + 1
    rows, rhs = [], []
    At = spec.A_eq[keep].T
    for j in on:
        r = np.zeros(nvars)
        r[:K] = Cs[:, j]
        r[K : K + m] = -At[j]
        r[K + m : K + 2 * m] = At[j]
        rows.append(r)
        rhs.append(-eps * Cs[:, j].sum())
    for i, j in enumerate(off):
        r = np.zeros(nvars)
        r[:K] = Cs[:, j]
        r[K : K + m] = -At[j]
        r[K + m : K + 2 * m] = At[j]
        r[K + 2 * m] = -1.0
        r[K + 2 * m + 1 + i] = -1.0
        rows.append(r)
        rhs.append(-eps * Cs[:, j].sum())
    r = np.zeros(nvars)
    r[:K] = 1.0
    rows.append(r)
    rhs.append(1.0 - K * eps)
    r = np.zeros(nvars)
    r[K + 2 * m] = 1.0
    r[-1] = 1.0
    rows.append(r)
    rhs.append(1.0)
    c = np.zeros(nvars)
    c[K + 2 * m] = -1.0
    res = solve_standard_form(c, np.array(rows), np.array(rhs))
    if res.status is not LpStatus.OPTIMAL:
        return None
    w = eps + res.x[:K]
    w = w / w.sum()
    best = solve_scalarized(model, w, spec)
    J = objective_vector(model, phi)
    if w @ J > w @ best.objective + PARETO_TOL * _scale(J):
        return None
    return w


def max_margin_weight(points: np.ndarray, index: int, eps: float = WEIGHT_EPS) -> tuple:
    """Weight maximizing ``min_j <w, J_j - J_index>`` over the other points.

    Returns ``(w, margin)``; a positive margin means point ``index`` is the unique
    minimizer of ``<w, .>`` with ``w >= eps`` componentwise.
    """
    points = np.asarray(points, dtype=float)
    K = points.shape[1]
    others = np.delete(points, index, axis=0)
    if others.shape[0] == 0:
        return np.full(K, 1.0 / K), np.inf
    scale = _scale(points - points[index])
    D = (others - points[index]) / scale
    n_o = D.shape[0]
    # variables: w' (K), delta+ , delta-, t (n_o)
    nvars = K + 2 + n_o
    A = np.zeros((n_o + 1, nvars))
    b = np.zeros(n_o + 1)
    A[:n_o, :K] = D
    A[:n_o, K] = -1.0
    A[:n_o, K + 1] = 1.0
    A[:n_o, K + 2 :] = -np.eye(n_o)
    b[:n_o] = -eps * D.sum(axis=1)
    A[n_o, :K] = 1.0
    b[n_o] = 1.0 - K * eps
    c = np.zeros(nvars)
    c[K] = -1.0
    c[K + 1] = 1.0
    res = solve_standard_form(c, A, b)
    w = eps + res.x[:K]
    return w / w.sum(), float(res.x[K] - res.x[K + 1]) * scale
