"""Occupancy measures and the polytope of balance-feasible state-action frequencies.

Occupancy measures are plain ``(X, U)`` float arrays; variable ``(x, u)`` maps to
flat index ``x * U + u`` in the equality system.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (
    AnyPolicy,
    ChainAnalysis,
    DeterministicPolicy,
    MomdpModel,
    StationaryPolicy,
    analyze_chain,
    policy_matrix,
)

MEMBER_TOL = 1e-9
ZERO_TOL = 1e-9
MARGINAL_TOL = 1e-12
RANK_TOL = 1e-10


class MultichainError(ValueError):
    """The policy induces more than one recurrent class."""

    def __init__(self, analysis: ChainAnalysis):
        super().__init__(f"policy is multichain: recurrent classes {analysis.recurrent_classes}")
        self.analysis = analysis


@dataclass(frozen=True, eq=False)
class PolytopeSpec:
    """Equality system ``A phi = b`` (balance rows then normalization), with ``phi >= 0``."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    rank: int
    num_states: int
    num_actions: int
    reference_state: int = 0

    @property
    def num_vars(self) -> int:
        return self.A_eq.shape[1]

    @property
    def lp_rows(self) -> np.ndarray:
        """Rows handed to the simplex: everything except the reference state's balance row.

        The balance rows sum to zero, so one of them is redundant. Dropping the row
        of a frequently visited state makes it the anchor of the dual values
        (relative costs), which keeps them small; anchoring at a rarely visited
        state makes them scale with its return time and wrecks the reduced costs.
        """
        keep = np.ones(self.A_eq.shape[0], dtype=bool)
        keep[self.reference_state] = False
        return np.flatnonzero(keep)


@dataclass(frozen=True)
class MembershipReport:
    balance_residual: float
    normalization_error: float
    min_entry: float

    @property
    def is_member(self) -> bool:
        return (
            self.balance_residual <= MEMBER_TOL
            and self.normalization_error <= MEMBER_TOL
            and self.min_entry >= -MEMBER_TOL
        )

    def __bool__(self) -> bool:
        return self.is_member


def occupancy_of_stationary(model: MomdpModel, policy: AnyPolicy) -> np.ndarray:
    """Long-run state-action frequencies ``nu(x) pi(u|x)``; independent of ``beta``."""
    analysis = analyze_chain(model, policy)
    if not analysis.unichain:
        raise MultichainError(analysis)
    return analysis.stationary[:, None] * policy_matrix(model, policy)


def stationary_of(model: MomdpModel, policy: AnyPolicy) -> np.ndarray:
    analysis = analyze_chain(model, policy)
    if not analysis.unichain:
        raise MultichainError(analysis)
    return analysis.stationary


def marginal(phi: np.ndarray) -> np.ndarray:
    return np.asarray(phi).sum(axis=1)


def objective_vector(model: MomdpModel, phi: np.ndarray) -> np.ndarray:
    """``J_k = <phi, c_k>`` for every cost layer."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.num_states, model.num_actions):
        raise ValueError(f"occupancy shape {phi.shape} does not match the model")
    return np.einsum("kxu,xu->k", model.costs, phi)


def polytope_spec(model: MomdpModel) -> PolytopeSpec:
    n, m = model.num_states, model.num_actions
    # balance row x': sum_u phi(x', u) - sum_{x,u} phi(x, u) P(x, u, x') = 0
    balance = -model.kernel.reshape(n * m, n).T.copy()
    for x in range(n):
        balance[x, x * m : (x + 1) * m] += 1.0
    A = np.vstack([balance, np.ones((1, n * m))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    rank = int(np.linalg.matrix_rank(A, tol=RANK_TOL))
    return PolytopeSpec(A_eq=A, b_eq=b, rank=rank, num_states=n, num_actions=m, reference_state=_reference_state(model))


def _reference_state(model: MomdpModel) -> int:
    # most visited state under the uniform randomized policy
    uniform = StationaryPolicy(np.full((model.num_states, model.num_actions), 1.0 / model.num_actions))
    analysis = analyze_chain(model, uniform)
    if analysis.stationary is None:
        return 0
    return int(np.argmax(analysis.stationary))


def membership(model: MomdpModel, phi) -> MembershipReport:
    phi = np.asarray(phi, dtype=float)
    inflow = np.einsum("xu,xuy->y", phi, model.kernel)
    return MembershipReport(
        balance_residual=float(np.max(np.abs(phi.sum(axis=1) - inflow))),
        normalization_error=float(abs(phi.sum() - 1.0)),
        min_entry=float(phi.min()),
    )


def check_member(model: MomdpModel, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.num_states, model.num_actions):
        raise ValueError(f"occupancy shape {phi.shape} does not match the model")
    report = membership(model, phi)
    if not report:
        raise ValueError(f"not an occupancy measure of this model: {report}")
    return np.clip(phi, 0.0, None)


def policy_of_occupancy(model: MomdpModel, phi) -> StationaryPolicy:
    """``pi(u|x) = phi(x, u) / phi(x)``; uniform over actions where ``phi(x) = 0``."""
    phi = check_member(model, phi)
    marg = phi.sum(axis=1)
    probs = np.full(phi.shape, 1.0 / model.num_actions)
    pos = marg > MARGINAL_TOL
    probs[pos] = phi[pos] / marg[pos, None]
    return StationaryPolicy(probs)


def deterministic_policy_of_vertex(model: MomdpModel, phi, fill: int = 0) -> DeterministicPolicy:
    """Round a vertex to a deterministic policy: argmax action on occupied states, ``fill`` elsewhere."""
    phi = np.asarray(phi, dtype=float)
    marg = phi.sum(axis=1)
    acts = np.where(marg > MARGINAL_TOL, phi.argmax(axis=1), fill)
    return DeterministicPolicy(tuple(int(a) for a in acts))


def _active_rank(spec: PolytopeSpec, zero_mask: np.ndarray) -> int:
    # rank([A; I_Z]) = |Z| + rank(A restricted to the free columns)
    free = ~zero_mask
    sub = spec.A_eq[:, free]
    r = int(np.linalg.matrix_rank(sub, tol=RANK_TOL)) if sub.size else 0
    return int(zero_mask.sum()) + r


def is_vertex(model: MomdpModel, phi, spec: PolytopeSpec = None) -> bool:
    """True iff the active constraints at ``phi`` have full rank ``|X||U|``."""
    spec = spec or polytope_spec(model)
    zero = np.asarray(phi, dtype=float).ravel() <= ZERO_TOL
    return _active_rank(spec, zero) == spec.num_vars


def vertices_adjacent(model: MomdpModel, phi1, phi2, spec: PolytopeSpec = None) -> bool:
    """Distinct vertices sharing ``|X||U| - 1`` independent active constraints."""
    spec = spec or polytope_spec(model)
    a = np.asarray(phi1, dtype=float).ravel()
    b = np.asarray(phi2, dtype=float).ravel()
    if np.max(np.abs(a - b)) <= MEMBER_TOL:
        return False
    common = (a <= ZERO_TOL) & (b <= ZERO_TOL)
    return _active_rank(spec, common) >= spec.num_vars - 1


def basic_feasible_solutions(spec: PolytopeSpec, tol: float = MEMBER_TOL) -> list:
    """All vertices of the polytope by exhaustive enumeration of bases; deduplicated.

    Exponential in the number of variables; meant as an oracle on small models.
    """
    from .simplex import independent_rows

    rows = independent_rows(spec.A_eq)
    A, b = spec.A_eq[rows], spec.b_eq[rows]
    r = A.shape[0]
    found = []
    for cols in itertools.combinations(range(spec.num_vars), r):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            if np.linalg.matrix_rank(B, tol=RANK_TOL) < r:
                continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -tol):
            continue
        x = np.zeros(spec.num_vars)
        x[list(cols)] = np.clip(xb, 0.0, None)
        if not any(np.max(np.abs(x - y)) <= tol for y in found):
            found.append(x)
    return [x.reshape(spec.num_states, spec.num_actions) for x in found]


def dedupe_occupancies(phis, tol: float = MEMBER_TOL) -> list:
    """Indices of the first occurrence of each distinct occupancy (infinity norm ``tol``)."""
    keep = []
    for i, phi in enumerate(phis):
        if not any(np.max(np.abs(phi - phis[j])) <= tol for j in keep):
            keep.append(i)
    return keep
