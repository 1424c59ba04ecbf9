"""Strictly increasing nonlinear scalarizations minimized over the Pareto front."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import lp
from .front import (
    EdgePoint,
    ParetoFront,
    decompose_point,
    find_edge,
    realize_edge_point,
)
from .occupancy import policy_of_occupancy

GRID_POINTS = 1001
GOLDEN_TOL = 1e-10
LATTICE_RESOLUTION = 50
REFINE_MIN_STEP = 1e-8
SUBSET_BOUND = 100_000
TIE_TOL = 1e-12

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Linear:
    a: float = 1.0

    def __call__(self, x: float) -> float:
        return self.a * x

    def check(self):
        if not self.a > 0:
            raise ValueError(f"linear term needs a > 0, got {self.a}")

    def describe(self) -> str:
        return f"linear({self.a!r})"


@dataclass(frozen=True)
class Sigmoid:
    amp: float
    steep: float
    mid: float

    def __call__(self, x: float) -> float:
        z = -self.steep * (x - self.mid)
        # stable for large |z|
        if z > 0:
            e = math.exp(-z)
            return self.amp * e / (1.0 + e)
        return self.amp / (1.0 + math.exp(z))

    def check(self):
        if not (self.amp > 0 and self.steep > 0):
            raise ValueError(f"sigmoid term needs amp > 0 and steep > 0, got {self.amp}, {self.steep}")

    def describe(self) -> str:
        return f"sigmoid({self.amp!r},{self.steep!r},{self.mid!r})"


@dataclass(frozen=True)
class Power:
    """``a * sign(x) |x|^p``; equals ``a x^p`` on nonnegative objectives and stays increasing below zero."""

    a: float
    p: float

    def __call__(self, x: float) -> float:
        return self.a * math.copysign(abs(x) ** self.p, x)

    def check(self):
        if not (self.a > 0 and self.p >= 1):
            raise ValueError(f"power term needs a > 0 and p >= 1, got {self.a}, {self.p}")

    def describe(self) -> str:
        return f"power({self.a!r},{self.p!r})"


TERM_TYPES = {"linear": Linear, "sigmoid": Sigmoid, "power": Power}


@dataclass(frozen=True)
class ScalarizationSpec:
    """``f(J) = sum_k terms[k](J_k)``; ``custom`` replaces the sum with an opaque evaluator.

    A custom evaluator is trusted to be strictly increasing; it is not checked.
    """

    terms: tuple = ()
    custom: Optional[Callable] = None

    def check(self, num_objectives: int):
        if self.custom is not None:
            return
        if len(self.terms) != num_objectives:
            raise ValueError(f"scalarization has {len(self.terms)} terms for {num_objectives} objectives")
        for t in self.terms:
            t.check()

    def __call__(self, J) -> float:
        return evaluate(self, J)

    def describe(self) -> str:
        if self.custom is not None:
            return "custom"
        return " + ".join(t.describe() for t in self.terms)

    def to_dict(self) -> dict:
        if self.custom is not None:
            raise ValueError("custom scalarizations are not serializable")
        return {"terms": [{"type": type(t).__name__.lower(), **t.__dict__} for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalarizationSpec":
        terms = []
        for item in d["terms"]:
            item = dict(item)
            kind = item.pop("type")
            if kind not in TERM_TYPES:
                raise ValueError(f"unknown term type {kind!r}")
            terms.append(TERM_TYPES[kind](**{k: float(v) for k, v in item.items()}))
        return cls(tuple(terms))


_TERM_RE = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def parse_scalarization(text: str) -> ScalarizationSpec:
    """Parse ``"linear(1) + sigmoid(200,17,0.6)"``: one term per objective, in order."""
    terms = []
    for part in text.split("+"):
        m = _TERM_RE.match(part)
        if not m or m.group(1) not in TERM_TYPES:
            raise ValueError(f"cannot parse scalarization term {part.strip()!r}")
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
        terms.append(TERM_TYPES[m.group(1)](*args))
    return ScalarizationSpec(tuple(terms))


def evaluate(spec: ScalarizationSpec, J) -> float:
    J = np.asarray(J, dtype=float).ravel()
    if spec.custom is not None:
        return float(spec.custom(J))
    if J.size != len(spec.terms):
        raise ValueError(f"objective has {J.size} entries, scalarization has {len(spec.terms)} terms")
    return float(sum(t(float(j)) for t, j in zip(spec.terms, J)))


@dataclass(eq=False)
class NonlinearSolution:
    objective_point: np.ndarray
    value: float
    location: str
    realization: object
    parts: list = field(default_factory=list)
    vertex: Optional[int] = None
    edge: Optional[int] = None
    b: Optional[float] = None
    edge_point: Optional[EdgePoint] = None
    ties: int = 0

    @property
    def support(self) -> int:
        return len(self.parts)


def golden_section(fun: Callable, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple:
    """Local minimum of ``fun`` on ``[lo, hi]``; returns ``(x, fun(x))``, comparing with the endpoints."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    best = min([(fun(lo), lo), (fc, c), (fd, d), (fun(hi), hi)], key=lambda p: (p[0], p[1]))
    return best[1], best[0]


def _edge_minimum(spec: ScalarizationSpec, js: np.ndarray, je: np.ndarray) -> tuple:
    def f(b):
        return evaluate(spec, b * js + (1.0 - b) * je)

    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    vals = np.array([f(b) for b in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    b, v = golden_section(f, lo, hi)
    if vals[i] < v:
        b, v = float(grid[i]), float(vals[i])
    return float(b), float(v)


def _better(v: float, best: float) -> bool:
    return v < best - TIE_TOL * max(1.0, abs(best))


def _tie(v: float, best: float) -> bool:
    return abs(v - best) <= TIE_TOL * max(1.0, abs(best))


def minimize_over_front_2d(model, front: ParetoFront, spec: ScalarizationSpec) -> NonlinearSolution:
    """Minimize ``f`` over a two-objective front: every vertex, then each edge by grid and golden section.

    Ties keep the first candidate found: vertices by index, then edges by index and smallest ``b``.
    """
    if model.num_objectives != 2:
        raise ValueError("minimize_over_front_2d needs two objectives")
    spec.check(2)
    best = None
    ties = 0
    for i, v in enumerate(front.vertices):
        val = evaluate(spec, v.objective)
        if best is None or _better(val, best[0]):
            best, ties = (val, "vertex", i, None), 0
        elif _tie(val, best[0]):
            ties += 1
    for k, e in enumerate(front.edges):
        js, je = front.vertices[e.start].objective, front.vertices[e.end].objective
        b, val = _edge_minimum(spec, js, je)
        if GOLDEN_TOL < b < 1.0 - GOLDEN_TOL:
            if _better(val, best[0]):
                best, ties = (val, "edge", k, b), 0
            elif _tie(val, best[0]):
                ties += 1
    _, location, idx, b = best
    if location == "vertex":
        v = front.vertices[idx]
        point = v.objective.copy()
        return NonlinearSolution(point, evaluate(spec, point), "vertex", v.policy, [(v, 1.0)], vertex=idx, ties=ties)
    e = front.edges[idx]
    ep = realize_edge_point(model, front, e, b)
    vs, ve = front.vertices[e.start], front.vertices[e.end]
    point = b * vs.objective + (1.0 - b) * ve.objective
    return NonlinearSolution(
        point,
        evaluate(spec, point),
        "edge",
        ep.realization,
        [(vs, b), (ve, 1.0 - b)],
        edge=idx,
        b=b,
        edge_point=ep,
        ties=ties,
    )


def _lattice(size: int, resolution: int):
    """Weight vectors on the simplex with entries in multiples of ``1/resolution``."""
    for cuts in itertools.combinations(range(resolution + size - 1), size - 1):
        parts, prev = [], -1
        for c in cuts + (resolution + size - 1,):
            parts.append(c - prev - 1)
            prev = c
        yield np.array(parts, dtype=float) / resolution


def _refine(f: Callable, lam: np.ndarray, step: float) -> tuple:
    """Coordinate descent moving mass between pairs of weights, halving the step down to 1e-8."""
    lam = lam.copy()
    val = f(lam)
    n = lam.size
    while step >= REFINE_MIN_STEP and n > 1:
        improved = False
        for i, j in itertools.permutations(range(n), 2):
            if lam[j] < step:
                continue
            trial = lam.copy()
            trial[i] += step
            trial[j] -= step
            tv = f(trial)
            if tv < val:
                lam, val, improved = trial, tv, True
        if not improved:
            step /= 2.0
    return lam, val


def minimize_over_front_general(
    model,
    front: ParetoFront,
    spec: ScalarizationSpec,
    resolution: int = LATTICE_RESOLUTION,
    subset_bound: int = SUBSET_BOUND,
) -> NonlinearSolution:
    """Heuristic global search of ``f`` over the front for any number of objectives.

    Candidate faces are subsets of at most K front vertices whose whole hull is
    Pareto optimal; that holds exactly when the centroid is (a Pareto point has
    a strictly positive supporting weight, which then supports the smallest face
    containing it). Each face is sampled on a simplex lattice and the best
    sample is refined by coordinate descent. The answer is Pareto optimal but
    only locally optimal for non-convex ``f``.
    """
    K = model.num_objectives
    spec.check(K)
    n = len(front.vertices)
    count = sum(math.comb(n, s) for s in range(1, min(K, n) + 1))
    if count > subset_bound:
        raise ValueError(f"{count} candidate faces exceed the bound {subset_bound}")
    P = front.objectives()
    faces = []
    for size in range(1, min(K, n) + 1):
        for S in itertools.combinations(range(n), size):
            if size > 1:
                centroid = sum(front.vertices[i].phi for i in S) / size
                if not lp.is_pareto_optimal(model, centroid):
                    continue
            faces.append(S)
    best = None
    for S in faces:
        pts = P[list(S)]
        for lam in _lattice(len(S), resolution if len(S) > 1 else 1):
            val = evaluate(spec, lam @ pts)
            if best is None or _better(val, best[0]):
                best = (val, S, lam)
    _, S, lam = best
    pts = P[list(S)]
    lam, _ = _refine(lambda l: evaluate(spec, l @ pts), lam, 1.0 / resolution)
    point = lam @ pts
    parts = decompose_point(front, point)
    return _solution_from_parts(model, front, spec, point, parts)


def _solution_from_parts(model, front: ParetoFront, spec, point, parts) -> NonlinearSolution:
    value = evaluate(spec, point)
    index = {id(v): i for i, v in enumerate(front.vertices)}
    if len(parts) == 1:
        v = parts[0][0]
        return NonlinearSolution(v.objective.copy(), evaluate(spec, v.objective), "vertex", v.policy, parts, vertex=index[id(v)])
    if len(parts) == 2:
        i, j = index[id(parts[0][0])], index[id(parts[1][0])]
        e = find_edge(front, i, j)
        if e is not None:
            weight = {index[id(v)]: w for v, w in parts}
            b = weight[e.start]
            ep = realize_edge_point(model, front, e, b)
            return NonlinearSolution(
                point, value, "edge", ep.realization, parts, edge=front.edges.index(e), b=b, edge_point=ep
            )
    phi = sum(w * v.phi for v, w in parts)
    return NonlinearSolution(point, value, "face", policy_of_occupancy(model, phi), parts)
