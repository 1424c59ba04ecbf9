"""Monte-Carlo rollouts, batch-means error bars and regeneration-cycle statistics.

Randomness comes from numpy's PCG64. ``SeedSequence(seed)`` is split into three
independent streams: the initial state, state transitions, and policy draws
(including the re-draws of a mixing policy at its switch state), so changing
the policy randomization never perturbs the transition noise.
"""

from __future__ import annotations

import warnings
from bisect import bisect_right
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import DeterministicPolicy, MomdpModel, SimpleMixingPolicy, policy_matrix

NUM_BATCHES = 20
MIN_CYCLES = 100


@dataclass(frozen=True)
class RolloutConfig:
    horizon: int
    seed: int = 0
    start: Union[int, np.ndarray, None] = None

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class RolloutResult:
    occupancy: np.ndarray
    objective: np.ndarray
    objective_stderr: np.ndarray
    occupancy_stderr: np.ndarray
    states: np.ndarray
    actions: np.ndarray

    def within(self, analytic, sigmas: float = 3.0) -> np.ndarray:
        """Per objective: is the analytic value inside ``sigmas`` batch-means standard errors?"""
        diff = np.abs(self.objective - np.asarray(analytic, dtype=float))
        # a zero error bar (deterministic path) still allows round-off
        band = sigmas * self.objective_stderr + 1e-12 * np.maximum(1.0, np.abs(self.objective))
        return diff <= band


@dataclass(eq=False)
class RegenStats:
    mean_cycle_length: float
    cycle_length_stderr: float
    mean_visits: np.ndarray
    cycles: int
    branch_cycles: tuple
    branch_mean_length: tuple

    @property
    def occupancy(self) -> np.ndarray:
        """Renewal-reward estimate ``E[N_c(x,u)] / E[T_c]``."""
        return self.mean_visits / self.mean_cycle_length

    @property
    def switch_frequency(self) -> float:
        """Estimate of the stationary probability of the switch state, ``1 / E[T_c]``."""
        return 1.0 / self.mean_cycle_length


def _streams(seed: int):
    ss = np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3)]


def _initial_state(model: MomdpModel, start, rng) -> int:
    if start is None:
        start = model.beta
    if np.ndim(start) == 0:
        x = int(start)
        if not 0 <= x < model.num_states:
            raise ValueError(f"start state {x} out of range")
        return x
    dist = np.asarray(start, dtype=float)
    if dist.shape != (model.num_states,) or np.any(dist < 0) or abs(dist.sum() - 1) > 1e-9:
        raise ValueError("start distribution must be a probability vector over states")
    return int(rng.choice(model.num_states, p=dist))


def simulate_path(model: MomdpModel, policy, cfg: RolloutConfig) -> tuple:
    """States and actions of one trajectory of length ``cfg.horizon``."""
    rng_start, rng_trans, rng_pol = _streams(cfg.seed)
    T = int(cfg.horizon)
    n, m = model.num_states, model.num_actions
    probs = policy_matrix(model, policy)
    cum = np.cumsum(model.kernel, axis=2)
    cum[:, :, -1] = 1.0
    cum_rows = [[list(cum[x, u]) for u in range(m)] for x in range(n)]
    if isinstance(policy, DeterministicPolicy):
        fixed = list(policy.actions)
        pol_rows = None
    else:
        fixed = None
        pc = np.cumsum(probs, axis=1)
        pc[:, -1] = 1.0
        # states with a single possible action do not consume policy draws
        pol_rows = [None if probs[x].max() == 1.0 else list(pc[x]) for x in range(n)]
        fixed = [int(np.argmax(probs[x])) for x in range(n)]
    x = _initial_state(model, cfg.start, rng_start)
    u_trans = rng_trans.random(T).tolist()
    u_pol = rng_pol.random(T).tolist() if pol_rows is not None else None
    xs = [0] * T
    us = [0] * T
    for t in range(T):
        if pol_rows is not None and pol_rows[x] is not None:
            a = bisect_right(pol_rows[x], u_pol[t])
            if a >= m:
                a = m - 1
        else:
            a = fixed[x]
        xs[t] = x
        us[t] = a
        x = bisect_right(cum_rows[x][a], u_trans[t])
        if x >= n:
            x = n - 1
    return np.array(xs, dtype=np.int64), np.array(us, dtype=np.int64)


def _counts(model: MomdpModel, xs: np.ndarray, us: np.ndarray) -> np.ndarray:
    m = model.num_actions
    return np.bincount(xs * m + us, minlength=model.num_states * m).reshape(model.num_states, m).astype(float)


def rollout(model: MomdpModel, policy, cfg: RolloutConfig) -> RolloutResult:
    """Empirical occupancy ``mu^T`` and objective ``<mu^T, c_k>`` with batch-means standard errors."""
    xs, us = simulate_path(model, policy, cfg)
    T = xs.size
    mu = _counts(model, xs, us) / T
    J = np.einsum("kxu,xu->k", model.costs, mu)
    L = T // NUM_BATCHES
    if L >= 1:
        batches = np.array([_counts(model, xs[i * L : (i + 1) * L], us[i * L : (i + 1) * L]) / L for i in range(NUM_BATCHES)])
        bj = np.einsum("kxu,bxu->bk", model.costs, batches)
        j_err = bj.std(axis=0, ddof=1) / np.sqrt(NUM_BATCHES)
        mu_err = batches.std(axis=0, ddof=1) / np.sqrt(NUM_BATCHES)
    else:
        j_err = np.full(model.num_objectives, np.nan)
        mu_err = np.full(mu.shape, np.nan)
    return RolloutResult(mu, J, j_err, mu_err, xs, us)


def regeneration_stats(model: MomdpModel, mixing: SimpleMixingPolicy, cfg: RolloutConfig) -> RegenStats:
    """Statistics of the cycles between successive visits to the switch state.

    Only complete cycles count. Each cycle starts with the draw between the two
    sub-policies, so cycles are also split by branch (``pi1`` first).
    """
    i0 = mixing.switch_state
    xs, us = simulate_path(model, mixing, cfg)
    visits = np.flatnonzero(xs == i0)
    if visits.size < 2:
        raise ValueError(f"switch state {i0} was visited {visits.size} times; it must be recurrent")
    starts, ends = visits[:-1], visits[1:]
    lengths = (ends - starts).astype(float)
    ncyc = lengths.size
    if ncyc < MIN_CYCLES:
        warnings.warn(f"only {ncyc} regeneration cycles; uncertainty is wide", stacklevel=2)
    seg_x, seg_u = xs[visits[0] : visits[-1]], us[visits[0] : visits[-1]]
    visits_total = _counts(model, seg_x, seg_u)
    a1 = mixing.pi1[i0]
    branch1 = us[starts] == a1
    n1, n2 = int(branch1.sum()), int((~branch1).sum())
    mean1 = float(lengths[branch1].mean()) if n1 else float("nan")
    mean2 = float(lengths[~branch1].mean()) if n2 else float("nan")
    err = float(lengths.std(ddof=1) / np.sqrt(ncyc)) if ncyc > 1 else float("nan")
    return RegenStats(
        mean_cycle_length=float(lengths.mean()),
        cycle_length_stderr=err,
        mean_visits=visits_total / ncyc,
        cycles=ncyc,
        branch_cycles=(n1, n2),
        branch_mean_length=(mean1, mean2),
    )


def blend_coefficient(mu: np.ndarray, phi1: np.ndarray, phi2: np.ndarray) -> float:
    """Least-squares ``b`` with ``mu ~ b phi1 + (1 - b) phi2``."""
    d = np.asarray(phi1, dtype=float) - np.asarray(phi2, dtype=float)
    dd = float(np.sum(d * d))
    if dd == 0:
        raise ValueError("phi1 and phi2 coincide; b is not identifiable")
    return float(np.sum((np.asarray(mu) - phi2) * d) / dd)


def analytic_policy_objective(model: MomdpModel, policy) -> tuple:
    """Exact occupancy and objective of any stationary policy form, for comparisons with rollouts."""
    from .occupancy import occupancy_of_stationary, objective_vector

    if isinstance(policy, SimpleMixingPolicy):
        policy = policy.as_stationary(model.num_actions)
    phi = occupancy_of_stationary(model, policy)
    return phi, objective_vector(model, phi)

