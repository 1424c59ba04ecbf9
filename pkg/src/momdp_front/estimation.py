"""Remote estimation over a lossy link: Kalman covariance, age-indexed error and the induced MOMDP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .front import recurrent_states
from .model import DeterministicPolicy, MomdpModel

RICCATI_TOL = 1e-12
RICCATI_MAX_ITER = 100_000
PSD_TOL = 1e-10
DEFAULT_X_MAX = 50

IDLE, TRANSMIT = 0, 1

PENDUBOT_A = np.array(
    [
        [1.0058, 0.0150, -0.0016, 0.0000],
        [0.7808, 1.0058, -0.2105, -0.0016],
        [-0.0060, 0.0000, 1.0077, 0.0150],
        [-0.7962, -0.0060, 1.0294, 1.0077],
    ]
)
PENDUBOT_C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
PENDUBOT_Q_VECTOR = np.array([0.003, 1.0, -0.005, -2.150])
PENDUBOT_R_SCALE = 0.001


class RiccatiError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _matrix(a, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    return arr


@dataclass(frozen=True, eq=False)
class EstimationSystem:
    """Linear Gaussian plant ``Z+ = A Z + W``, sensor ``Y = C Z + V`` and a link with success rate ``p_s``."""

    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    p_s: float
    x_max: int = DEFAULT_X_MAX

    def __post_init__(self):
        A, C, Q, R = (_matrix(getattr(self, k), k) for k in "ACQR")
        n, m = A.shape[0], C.shape[0]
        if A.shape != (n, n) or C.shape != (m, n) or Q.shape != (n, n) or R.shape != (m, m):
            raise ValueError(f"inconsistent shapes A{A.shape} C{C.shape} Q{Q.shape} R{R.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12) or np.linalg.eigvalsh(Q).min() < -PSD_TOL:
            raise ValueError("Q must be symmetric positive semidefinite")
        if not np.allclose(R, R.T, atol=1e-12) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")
        if not 0.0 < float(self.p_s) <= 1.0:
            raise ValueError(f"p_s must lie in (0, 1], got {self.p_s}")
        if int(self.x_max) != self.x_max or self.x_max < 1:
            raise ValueError(f"x_max must be a positive integer, got {self.x_max}")
        for k, v in zip("ACQR", (A, C, Q, R)):
            object.__setattr__(self, k, v)
        object.__setattr__(self, "p_s", float(self.p_s))
        object.__setattr__(self, "x_max", int(self.x_max))

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "C": self.C.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "p_s": self.p_s,
            "x_max": self.x_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationSystem":
        return cls(d["A"], d["C"], d["Q"], d["R"], d["p_s"], d.get("x_max", DEFAULT_X_MAX))


def pendubot_system(p_s: float, x_max: int = DEFAULT_X_MAX) -> EstimationSystem:
    q = PENDUBOT_Q_VECTOR
    return EstimationSystem(PENDUBOT_A, PENDUBOT_C, np.outer(q, q), PENDUBOT_R_SCALE * np.eye(2), p_s, x_max)


def scalar_system(a=0.0, c=1.0, q=1.0, r=1.0, p_s: float = 0.8, x_max: int = 3) -> EstimationSystem:
    return EstimationSystem([[a]], [[c]], [[q]], [[r]], p_s, x_max)


@dataclass(frozen=True, eq=False)
class SteadyStateFilter:
    K_bar: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class EtaTable:
    eta: np.ndarray
    covariances: np.ndarray

    @property
    def decreases(self) -> list:
        """Ages ``x`` with ``eta(x+1) < eta(x) - 1e-10``."""
        return [int(x) for x in np.flatnonzero(np.diff(self.eta) < -1e-10)]

    @property
    def monotone(self) -> bool:
        return not self.decreases


def steady_state_covariance(
    sys: EstimationSystem, tol: float = RICCATI_TOL, max_iter: int = RICCATI_MAX_ITER
) -> SteadyStateFilter:
    """Posterior error covariance of the steady-state Kalman filter by fixed-point iteration from ``Q``.

    Prediction ``P+ = A P A' + Q``, update ``P+ - P+ C' (C P+ C' + R)^-1 C P+``
    (evaluated in Joseph form), stopping at Frobenius change ``<= tol``.
    """
    A, C, Q, R = sys.A, sys.C, sys.Q, sys.R
    P = Q.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        prior = A @ P @ A.T + Q
        S = C @ prior @ C.T + R
        gain = np.linalg.solve(S, C @ prior).T
        # Joseph form: stays PSD and avoids cancellation when the prior is huge
        I_GC = np.eye(A.shape[0]) - gain @ C
        post = I_GC @ prior @ I_GC.T + gain @ R @ gain.T
        post = 0.5 * (post + post.T)
        if not np.all(np.isfinite(post)):
            raise RiccatiError("Riccati iteration diverged", np.inf)
        residual = float(np.linalg.norm(post - P, "fro"))
        P = post
        if residual <= tol:
            return SteadyStateFilter(P, it, residual)
    raise RiccatiError(f"Riccati iteration did not converge in {max_iter} steps (residual {residual:.3g})", residual)


def eta_table(sys: EstimationSystem, filt: SteadyStateFilter) -> EtaTable:
    """``eta(x) = Tr(K_x)`` with ``K_0 = K_bar`` and ``K_{x+1} = A K_x A' + Q`` for ``x = 0..x_max``."""
    K = np.empty((sys.x_max + 1,) + filt.K_bar.shape)
    K[0] = filt.K_bar
    with np.errstate(over="ignore", invalid="ignore"):
        for x in range(sys.x_max):
            K[x + 1] = sys.A @ K[x] @ sys.A.T + sys.Q
    if not np.all(np.isfinite(K)):
        bad = int(np.argmax(~np.all(np.isfinite(K.reshape(len(K), -1)), axis=1)))
        raise OverflowError(f"error covariance overflows at age {bad}; lower x_max")
    return EtaTable(np.trace(K, axis1=1, axis2=2).copy(), K)


def build_momdp(sys: EstimationSystem, table: EtaTable) -> MomdpModel:
    """Age MDP: state = age of the last successful delivery, action idle/transmit.

    Costs are ``(eta(x), u)``; the action chosen in state x moves the age for the next slot.
    """
    n = sys.x_max + 1
    if table.eta.shape != (n,):
        raise ValueError(f"eta table must cover ages 0..{sys.x_max}")
    kernel = np.zeros((n, 2, n))
    for x in range(n):
        up = min(x + 1, sys.x_max)
        kernel[x, IDLE, up] = 1.0
        kernel[x, TRANSMIT, 0] += sys.p_s
        kernel[x, TRANSMIT, up] += 1.0 - sys.p_s
    costs = np.zeros((2, n, 2))
    costs[0] = table.eta[:, None]
    costs[1, :, TRANSMIT] = 1.0
    beta = np.zeros(n)
    beta[0] = 1.0
    meta = {
        "kind": "remote_estimation",
        "timing": "cost eta(x) charged on the current age; the action drives the next age",
        "p_s": sys.p_s,
        "x_max": sys.x_max,
    }
    return MomdpModel(kernel, costs, beta, action_labels=("idle", "transmit"), metadata=meta)


def threshold_policy(x_th: int, x_max: int) -> DeterministicPolicy:
    """Transmit iff the age is at least ``x_th``; ``x_th = x_max + 1`` never transmits."""
    if not 0 <= x_th <= x_max + 1:
        raise ValueError(f"threshold must lie in 0..{x_max + 1}, got {x_th}")
    return DeterministicPolicy(tuple(TRANSMIT if x >= x_th else IDLE for x in range(x_max + 1)))


def threshold_family(x_max: int) -> list:
    return [threshold_policy(k, x_max) for k in range(x_max + 2)]


def stability_condition(sys: EstimationSystem) -> tuple:
    """``(||A||^2 (1 - p_s) < 1, ||A||^2 (1 - p_s))`` with the spectral norm."""
    value = float(np.linalg.norm(sys.A, 2) ** 2 * (1.0 - sys.p_s))
    return value < 1.0, value


def threshold_of(policy: DeterministicPolicy, recurrent: np.ndarray) -> Optional[int]:
    """Threshold matching ``policy`` on the ``recurrent`` mask, or None if it is not of threshold form."""
    x_max = len(policy) - 1
    states = np.flatnonzero(recurrent)
    transmits = [x for x in states if policy[x] == TRANSMIT]
    x_th = min(transmits) if transmits else x_max + 1
    for x in states:
        if (policy[x] == TRANSMIT) != (x >= x_th):
            return None
    return int(x_th)


@dataclass
class ThresholdReport:
    thresholds: list
    vertex_thresholds: list
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def verify_threshold_front(model: MomdpModel, front) -> ThresholdReport:
    """Check that every policy on the front skeleton is a threshold policy and thresholds step by one.

    Thresholds are read on recurrent states only: actions elsewhere never matter.
    The check runs along the skeleton (vertices plus collinear intermediate
    policies), ordered from little to frequent communication.
    """
    skeleton = front.skeleton()
    thresholds, vertex_thresholds, violations = [], [], []
    for k, node in enumerate(skeleton):
        rec = np.zeros(model.num_states, dtype=bool)
        rec[list(recurrent_states(model, node.policy))] = True
        th = threshold_of(node.policy, rec)
        if th is None:
            violations.append(f"skeleton point {k} (policy {node.policy.label()}) is not a threshold policy")
        thresholds.append(th)
        if any(np.array_equal(node.phi, v.phi) for v in front.vertices):
            vertex_thresholds.append(th)
    for k in range(len(thresholds) - 1):
        a, b = thresholds[k], thresholds[k + 1]
        if a is not None and b is not None and abs(a - b) != 1:
            violations.append(f"thresholds {b} and {a} at skeleton points {k} and {k + 1} are not consecutive")
    return ThresholdReport(thresholds, vertex_thresholds, violations)
