"""Finite average-cost multi-objective MDPs, policy classes and chain structure."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

ROW_SUM_TOL = 1e-12
DEFAULT_ENUM_BOUND = 10**6


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MomdpModel:
    """Tabular MOMDP with kernel ``P[x, u, x']``, costs ``c[k, x, u]`` and initial law ``beta``.

    Only shapes are checked on construction; use :func:`validate_model` for the
    probabilistic invariants so that broken models can still be inspected.
    """

    kernel: np.ndarray
    costs: np.ndarray
    beta: np.ndarray
    state_labels: Optional[tuple] = None
    action_labels: Optional[tuple] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        kernel = _frozen(self.kernel)
        costs = _frozen(self.costs)
        beta = _frozen(self.beta)
        if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
            raise ValueError(f"kernel must have shape (X, U, X), got {kernel.shape}")
        n, m = kernel.shape[:2]
        if costs.ndim == 2:
            costs = _frozen(costs[None])
        if costs.ndim != 3 or costs.shape[1:] != (n, m) or costs.shape[0] < 1:
            raise ValueError(f"costs must have shape (K, {n}, {m}), got {costs.shape}")
        if beta.shape != (n,):
            raise ValueError(f"beta must have length {n}, got shape {beta.shape}")
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "beta", beta)
        if self.state_labels is not None:
            object.__setattr__(self, "state_labels", tuple(self.state_labels))
        if self.action_labels is not None:
            object.__setattr__(self, "action_labels", tuple(self.action_labels))

    @property
    def num_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def num_actions(self) -> int:
        return self.kernel.shape[1]

    @property
    def num_objectives(self) -> int:
        return self.costs.shape[0]

    def state_name(self, x: int) -> str:
        return str(self.state_labels[x]) if self.state_labels else str(x)

    def action_name(self, u: int) -> str:
        return str(self.action_labels[u]) if self.action_labels else str(u)


@dataclass(frozen=True)
class DeterministicPolicy:
    """Markov stationary deterministic policy: ``actions[x]`` is the action taken in state x."""

    actions: tuple

    def __post_init__(self):
        acts = tuple(int(a) for a in self.actions)
        if any(a < 0 for a in acts):
            raise ValueError("actions must be nonnegative indices")
        object.__setattr__(self, "actions", acts)

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, x: int) -> int:
        return self.actions[x]

    def probs(self, num_actions: int) -> np.ndarray:
        if max(self.actions, default=0) >= num_actions:
            raise ValueError(f"policy uses an action index >= {num_actions}")
        out = np.zeros((len(self.actions), num_actions))
        out[np.arange(len(self.actions)), self.actions] = 1.0
        return out

    def with_action(self, x: int, u: int) -> "DeterministicPolicy":
        acts = list(self.actions)
        acts[x] = u
        return DeterministicPolicy(tuple(acts))

    def label(self) -> str:
        sep = "" if max(self.actions, default=0) < 10 else "."
        return sep.join(str(a) for a in self.actions)


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """Randomized stationary policy given by a row-stochastic matrix ``probs[x, u]``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise ValueError("probs must be a 2-D array")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("probs must be row-stochastic")
        object.__setattr__(self, "probs", p)

    def is_deterministic(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.probs.max(axis=1) >= 1.0 - tol))


@dataclass(frozen=True)
class SimpleMixingPolicy:
    """Randomizes between two adjacent deterministic policies at every visit to ``switch_state``.

    With probability ``alpha`` the action of ``pi1`` is taken there, otherwise that of ``pi2``.
    """

    pi1: DeterministicPolicy
    pi2: DeterministicPolicy
    switch_state: int
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if policies_adjacent(self.pi1, self.pi2) != self.switch_state:
            raise ValueError("pi1 and pi2 must differ exactly at switch_state")

    def probs(self, num_actions: int) -> np.ndarray:
        return self.alpha * self.pi1.probs(num_actions) + (1 - self.alpha) * self.pi2.probs(num_actions)

    def as_stationary(self, num_actions: int) -> StationaryPolicy:
        return StationaryPolicy(self.probs(num_actions))


AnyPolicy = Union[DeterministicPolicy, StationaryPolicy, SimpleMixingPolicy]


def policy_matrix(model: MomdpModel, policy: AnyPolicy) -> np.ndarray:
    """Return ``pi(u|x)`` as an ``(X, U)`` array, checking dimensions against the model."""
    if isinstance(policy, StationaryPolicy):
        probs = policy.probs
    else:
        probs = policy.probs(model.num_actions)
    if probs.shape != (model.num_states, model.num_actions):
        raise ValueError(
            f"policy shape {probs.shape} does not match model ({model.num_states}, {model.num_actions})"
        )
    return probs


@dataclass(frozen=True, eq=False)
class ChainAnalysis:
    stationary: Optional[np.ndarray]
    recurrent_classes: list
    transient: frozenset

    @property
    def unichain(self) -> bool:
        return len(self.recurrent_classes) == 1


@dataclass(frozen=True)
class UnichainCheck:
    """Outcome of :func:`is_unichain`; ``verified`` is None when the check was refused."""

    verified: Optional[bool]
    method: str
    witness: Optional[DeterministicPolicy] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return bool(self.verified)


def validate_model(model: MomdpModel) -> list:
    """List every violated model invariant; an empty list means the model is valid."""
    problems = []
    n, m = model.num_states, model.num_actions
    for x in range(n):
        for u in range(m):
            row = model.kernel[x, u]
            where = f"({model.state_name(x)},{model.action_name(u)})"
            if not np.all(np.isfinite(row)):
                problems.append(f"non-finite kernel entry at {where}")
                continue
            if np.any(row < 0):
                problems.append(f"negative kernel entry {row.min():g} at {where}")
            s = row.sum()
            if abs(s - 1.0) > ROW_SUM_TOL:
                problems.append(f"row sum {s:g} at {where}")
    beta = model.beta
    if not np.all(np.isfinite(beta)) or np.any(beta < 0):
        problems.append("beta has negative or non-finite entries")
    elif abs(beta.sum() - 1.0) > ROW_SUM_TOL:
        problems.append(f"beta sums to {beta.sum():g}")
    bad = np.argwhere(~np.isfinite(model.costs))
    for k, x, u in bad:
        problems.append(f"non-finite cost c{k + 1} at ({model.state_name(x)},{model.action_name(u)})")
    return problems


def policy_kernel(model: MomdpModel, policy: AnyPolicy) -> np.ndarray:
    """State transition matrix ``P_pi(x, x') = sum_u pi(u|x) P(x, u, x')``."""
    if isinstance(policy, DeterministicPolicy):
        if len(policy) != model.num_states or max(policy.actions) >= model.num_actions:
            raise ValueError("policy does not match the model dimensions")
        return model.kernel[np.arange(model.num_states), list(policy.actions)].copy()
    probs = policy_matrix(model, policy)
    return np.einsum("xu,xuy->xy", probs, model.kernel)


def _stationary_on(P: np.ndarray, states: np.ndarray) -> np.ndarray:
    # (P^T - I) nu = 0 with one balance row replaced by normalization
    sub = P[np.ix_(states, states)]
    k = len(states)
    lhs = sub.T - np.eye(k)
    lhs[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    return np.linalg.solve(lhs, rhs)


def analyze_chain(model: MomdpModel, policy: AnyPolicy) -> ChainAnalysis:
    """Recurrent classes, transient states and (if unichain) the stationary distribution."""
    P = policy_kernel(model, policy)
    n = model.num_states
    graph = (P > 0).astype(np.int8)
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    closed = np.ones(ncomp, dtype=bool)
    src, dst = np.nonzero(graph)
    leaving = labels[src] != labels[dst]
    closed[labels[src[leaving]]] = False
    classes = [frozenset(np.flatnonzero(labels == c).tolist()) for c in range(ncomp) if closed[c]]
    classes.sort(key=min)
    recurrent = set().union(*classes)
    transient = frozenset(set(range(n)) - recurrent)
    stationary = None
    if len(classes) == 1:
        states = np.array(sorted(classes[0]))
        nu = np.zeros(n)
        nu[states] = np.clip(_stationary_on(P, states), 0.0, None)
        stationary = nu / nu.sum()
    return ChainAnalysis(stationary=stationary, recurrent_classes=classes, transient=transient)


def all_deterministic_policies(model: MomdpModel):
    for acts in itertools.product(range(model.num_actions), repeat=model.num_states):
        yield DeterministicPolicy(acts)


def _reachability_certificate(model: MomdpModel) -> Optional[int]:
    """A state reachable from every state under every policy, if one exists.

    Such a state belongs to every closed class, so its existence proves the
    unichain property without enumerating policies.
    """
    support = model.kernel > 0
    for target in range(model.num_states):
        # states from which some policy can avoid `target` forever
        avoid = np.ones(model.num_states, dtype=bool)
        avoid[target] = False
        while True:
            outside = ~avoid
            can_stay = ~(support & outside[None, None, :]).any(axis=2)
            nxt = avoid & can_stay.any(axis=1)
            if np.array_equal(nxt, avoid):
                break
            avoid = nxt
        if not avoid.any():
            return target
    return None


def is_unichain(model: MomdpModel, bound: int = DEFAULT_ENUM_BOUND, method: str = "auto") -> UnichainCheck:
    """Check that every deterministic policy induces a single recurrent class.

    ``method="auto"`` first looks for a universally reachable state and falls
    back to enumerating all ``|U|**|X|`` policies; ``"enumerate"`` skips the
    shortcut. Enumeration above ``bound`` is refused (``verified=None``).
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        target = _reachability_certificate(model)
        if target is not None:
            return UnichainCheck(True, "reachability", detail=f"state {target} reachable under every policy")
    count = model.num_actions**model.num_states
    if count > bound:
        return UnichainCheck(None, "enumerate", detail=f"unverifiable at this size: {count} policies > bound {bound}")
    for pi in all_deterministic_policies(model):
        if not analyze_chain(model, pi).unichain:
            return UnichainCheck(False, "enumerate", witness=pi, detail="multiple recurrent classes")
    return UnichainCheck(True, "enumerate", detail=f"{count} policies checked")


def policies_adjacent(p1: DeterministicPolicy, p2: DeterministicPolicy) -> Optional[int]:
    """The unique state where two deterministic policies differ, or None."""
    if len(p1) != len(p2):
        raise ValueError("policies have different lengths")
    diff = [x for x, (a, b) in enumerate(zip(p1.actions, p2.actions)) if a != b]
    return diff[0] if len(diff) == 1 else None


def random_model(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    num_objectives: int = 2,
    sparsity: float = 0.0,
) -> MomdpModel:
    """Random model with Dirichlet kernel rows; a fraction ``sparsity`` of transitions is cut."""
    n, m = num_states, num_actions
    kernel = rng.dirichlet(np.ones(n), size=(n, m))
    if sparsity > 0:
        mask = rng.random((n, m, n)) >= sparsity
        # keep at least one successor per row
        keep = rng.integers(n, size=(n, m))
        mask[np.arange(n)[:, None], np.arange(m)[None, :], keep] = True
        kernel = kernel * mask
        kernel /= kernel.sum(axis=2, keepdims=True)
    costs = rng.random((num_objectives, n, m))
    beta = np.zeros(n)
    beta[0] = 1.0
    return MomdpModel(kernel, costs, beta)


def random_unichain_model(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    num_objectives: int = 2,
    sparsity: float = 0.0,
    max_tries: int = 1000,
) -> MomdpModel:
    for _ in range(max_tries):
        model = random_model(rng, num_states, num_actions, num_objectives, sparsity)
        if is_unichain(model):
            return model
    raise RuntimeError("could not draw a unichain model; lower the sparsity")


def toy_model() -> MomdpModel:
    """Two-state, two-action reference model with a nontrivial front and a dominated policy."""
    kernel = np.array(
        [
            [[0.0, 1.0], [0.5, 0.5]],
            [[1.0, 0.0], [0.5, 0.5]],
        ]
    )
    c1 = np.array([[0.0, 0.0], [1.0, 1.0]])
    c2 = np.array([[0.0, 1.0], [0.0, 1.0]])
    return MomdpModel(kernel, np.stack([c1, c2]), np.array([1.0, 0.0]), action_labels=("a", "b"))


def parse_policy(spec: Union[str, Sequence[int]], model: MomdpModel) -> DeterministicPolicy:
    """Build a deterministic policy from indices or a string of action labels/digits."""
    if isinstance(spec, str):
        labels = [str(a) for a in model.action_labels] if model.action_labels else None
        tokens = spec.split(",") if "," in spec else list(spec)
        acts = []
        for tok in tokens:
            tok = tok.strip()
            if labels and tok in labels:
                acts.append(labels.index(tok))
            else:
                acts.append(int(tok))
        spec = acts
    pi = DeterministicPolicy(tuple(spec))
    if len(pi) != model.num_states or max(pi.actions) >= model.num_actions:
        raise ValueError("policy does not match the model dimensions")
    return pi
