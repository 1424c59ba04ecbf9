"""Exact Pareto fronts: vertices, edges, edge realization and point decomposition."""

from __future__ import annotations

import itertools
import warnings
import weakref
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import lp
from .model import (
    DEFAULT_ENUM_BOUND,
    DeterministicPolicy,
    MomdpModel,
    SimpleMixingPolicy,
    all_deterministic_policies,
    analyze_chain,
    is_unichain,
)
from .occupancy import (
    MEMBER_TOL,
    MultichainError,
    PolytopeSpec,
    marginal,
    objective_vector,
    occupancy_of_stationary,
    policy_of_occupancy,
    polytope_spec,
)
from .simplex import LpStatus, solve_standard_form

OBJ_TOL = 1e-9
DICHOTOMY_TOL = 1e-8
SEGMENT_TOL = 1e-9
DECOMPOSE_TOL = 1e-8
WALK_NODE_LIMIT = 20000


class OffFrontError(ValueError):
    """Target objective vector is not on the Pareto front."""

    def __init__(self, message: str, nearest: Optional[np.ndarray] = None):
        super().__init__(message)
        self.nearest = nearest


@dataclass(eq=False)
class FrontVertex:
    policy: DeterministicPolicy
    phi: np.ndarray
    objective: np.ndarray
    supporting_weight: Optional[np.ndarray] = None


@dataclass(eq=False)
class EdgeHop:
    """Segment between two deterministic policies that differ in one state."""

    pi1: DeterministicPolicy
    pi2: DeterministicPolicy
    phi1: np.ndarray
    phi2: np.ndarray
    switch_state: int

    @property
    def nu1(self) -> float:
        return float(marginal(self.phi1)[self.switch_state])

    @property
    def nu2(self) -> float:
        return float(marginal(self.phi2)[self.switch_state])


@dataclass(eq=False)
class FrontEdge:
    """Segment between front vertices ``start`` and ``end`` (indices).

    Points on the edge are ``b * J(start) + (1 - b) * J(end)``. ``hops`` is a chain
    of single-state policy changes from start to end; it has one element when
    the endpoint policies are adjacent and is empty when no chain was found.
    """

    start: int
    end: int
    hops: list = field(default_factory=list)
    slope: Optional[float] = None

    @property
    def simple(self) -> bool:
        return bool(self.hops)

    @property
    def switch_state(self) -> Optional[int]:
        return self.hops[0].switch_state if len(self.hops) == 1 else None

    @property
    def nu1_i0(self) -> Optional[float]:
        return self.hops[0].nu1 if len(self.hops) == 1 else None

    @property
    def nu2_i0(self) -> Optional[float]:
        return self.hops[0].nu2 if len(self.hops) == 1 else None


@dataclass(eq=False)
class ParetoFront:
    model: MomdpModel
    vertices: list
    edges: list
    method: str
    exact: bool = True

    @property
    def num_objectives(self) -> int:
        return self.model.num_objectives

    def objectives(self) -> np.ndarray:
        return np.array([v.objective for v in self.vertices]).reshape(len(self.vertices), self.num_objectives)

    def slopes(self) -> list:
        return [e.slope for e in self.edges]

    def lambda_interval(self, k: int) -> tuple:
        """K=2: the open range of ``lam`` for which vertex ``k`` uniquely minimizes ``J1 + lam * J2``."""
        if self.num_objectives != 2:
            raise ValueError("lambda intervals are defined for two objectives")
        pts = self.objectives()
        lo, hi = 0.0, np.inf
        if k > 0:
            d = pts[k] - pts[k - 1]
            lo = -d[0] / d[1]
        if k < len(pts) - 1:
            d = pts[k + 1] - pts[k]
            hi = -d[0] / d[1]
        return float(lo), float(hi)

    def skeleton(self) -> list:
        """K=2 only: deterministic policies along the front, by increasing ``J1``.

        Includes the intermediate policies of multi-hop edges (collinear points).
        """
        if self.num_objectives != 2:
            raise ValueError("skeleton ordering is defined for two objectives")
        if not self.vertices:
            return []
        out = [(self.vertices[0].policy, self.vertices[0].phi)]
        for e in self.edges:
            # edges run from vertices[k+1] to vertices[k]; walk them backwards
            if e.hops:
                for hop in reversed(e.hops):
                    out.append((hop.pi1, hop.phi1))
            else:
                v = self.vertices[e.start]
                out.append((v.policy, v.phi))
        return [
            FrontVertex(pi, phi, objective_vector(self.model, phi)) for pi, phi in out
        ]


@dataclass(eq=False)
class EdgePoint:
    edge: FrontEdge
    b: float
    phi: np.ndarray
    objective: np.ndarray
    realization: object
    simple: bool
    hop: Optional[int] = None


def _scale(*vectors) -> float:
    return max([1.0] + [float(np.max(np.abs(v))) for v in vectors])


def _same_point(a, b, tol: float = OBJ_TOL) -> bool:
    """Equal objective vectors, coordinate by coordinate relative to each magnitude."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))))


def _gap_below(ja, jb, jc) -> float:
    """How far ``jc`` lies below the chord ``ja -> jb`` (K=2, ``ja`` left of ``jb``).

    Measured in coordinates where each objective is rescaled by the chord's
    extent, so the test does not depend on the units of either objective:
    the chord becomes ``u + v = 1`` and the gap is ``1 - u - v``.
    """
    ja, jb, jc = (np.asarray(v, dtype=float) for v in (ja, jb, jc))
    d1, d2 = jb[0] - ja[0], ja[1] - jb[1]
    if d1 <= 0 or d2 <= 0:
        return 0.0
    u = (jc[0] - ja[0]) / d1
    v = (jc[1] - jb[1]) / d2
    return float(1.0 - u - v)


def _check_unichain(model: MomdpModel, bound: int):
    check = is_unichain(model, bound=bound)
    if check.verified is False:
        raise MultichainError(analyze_chain(model, check.witness))
    if check.verified is None:
        warnings.warn(f"unichain property not verified: {check.detail}", stacklevel=3)


def _vertex_from_policy(model: MomdpModel, policy: DeterministicPolicy) -> FrontVertex:
    phi = occupancy_of_stationary(model, policy)
    return FrontVertex(policy, phi, objective_vector(model, phi))


_RECURRENT_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def recurrent_states(model: MomdpModel, policy: DeterministicPolicy) -> frozenset:
    """Recurrent class of a deterministic policy, read from the transition graph.

    Occupancies deep in a rarely visited tail can underflow any numeric
    threshold while still carrying weight through large costs, so supports are
    decided structurally.
    """
    cache = _RECURRENT_CACHE.setdefault(model, {})
    if policy.actions not in cache:
        analysis = analyze_chain(model, policy)
        cache[policy.actions] = analysis.recurrent_classes[0] if analysis.unichain else analysis
    rec = cache[policy.actions]
    if not isinstance(rec, frozenset):
        raise MultichainError(rec)
    return rec


def occupancy_key(model: MomdpModel, policy: DeterministicPolicy) -> tuple:
    """Identifies the occupancy of a unichain policy: its recurrent class and the actions on it."""
    rec = recurrent_states(model, policy)
    return tuple(policy[x] if x in rec else -1 for x in range(model.num_states))


def align_policies(model: MomdpModel, va: FrontVertex, vb: FrontVertex) -> tuple:
    """Representatives of two vertices that differ only on states recurrent under both.

    Actions on transient states do not change the occupancy of a unichain
    model, so each policy copies the other there.
    Returns ``(pa, pb, differing_states)``.
    """
    sa = recurrent_states(model, va.policy)
    sb = recurrent_states(model, vb.policy)
    a = list(va.policy.actions)
    b = list(vb.policy.actions)
    for x in range(model.num_states):
        if x in sa and x not in sb:
            b[x] = a[x]
        elif x in sb and x not in sa:
            a[x] = b[x]
        elif x not in sa and x not in sb:
            b[x] = a[x]
    diff = [x for x in range(model.num_states) if a[x] != b[x]]
    return DeterministicPolicy(tuple(a)), DeterministicPolicy(tuple(b)), diff


def _direct_hop(model: MomdpModel, va: FrontVertex, vb: FrontVertex) -> Optional[EdgeHop]:
    pa, pb, diff = align_policies(model, va, vb)
    if len(diff) != 1:
        return None
    return EdgeHop(pa, pb, va.phi, vb.phi, diff[0])


def _project(ja, jb, j) -> float:
    """Least-squares position of ``j`` along ``ja -> jb`` in segment-normalized coordinates."""
    ja, jb, j = (np.asarray(v, dtype=float) for v in (ja, jb, j))
    d = jb - ja
    moving = d != 0
    if not moving.any():
        return 0.0
    return float(np.mean((j - ja)[moving] / d[moving]))


def _segment_position(ja, jb, j, tol: float = SEGMENT_TOL) -> Optional[float]:
    """Position ``t`` with ``j = ja + t (jb - ja)`` if ``j`` is on that line, else None.

    Each coordinate is compared in units of the segment's own extent along it.
    """
    ja, jb, j = (np.asarray(v, dtype=float) for v in (ja, jb, j))
    d = jb - ja
    mag = np.maximum(1.0, np.maximum(np.abs(ja), np.abs(jb)))
    moving = np.abs(d) > OBJ_TOL * mag
    if not moving.any():
        return None
    if np.any(np.abs(j - ja)[~moving] > tol * mag[~moving]):
        return None
    ts = (j - ja)[moving] / d[moving]
    if ts.max() - ts.min() > tol:
        return None
    return float(ts.mean())


def walk_segment(
    model: MomdpModel,
    va: FrontVertex,
    vb: FrontVertex,
    tol: float = SEGMENT_TOL,
    node_limit: int = WALK_NODE_LIMIT,
) -> Optional[list]:
    """Finest chain of single-state policy changes from ``va`` to ``vb`` along their segment.

    Floods the deterministic policies reachable from ``va`` by single-state
    changes whose objective stays on the segment (within ``tol`` in segment
    units), then returns the chain with the most hops from ``va`` to ``vb``
    in which consecutive policies are adjacent. Collinear Pareto points
    between the two vertices thereby show up as intermediate hops.
    Returns None if ``vb`` cannot be reached.
    """
    ja, jb = va.objective, vb.objective
    if _same_point(ja, jb):
        return None
    nodes = [va]
    pos = [0.0]
    keys = {occupancy_key(model, va.policy): 0}
    goal_key = occupancy_key(model, vb.policy)
    links: dict = {}
    rejected: set = set()
    k = 0
    while k < len(nodes) and len(nodes) < node_limit:
        cur = nodes[k]
        for x in range(model.num_states):
            for u in range(model.num_actions):
                if u == cur.policy[x]:
                    continue
                pi = cur.policy.with_action(x, u)
                try:
                    key = occupancy_key(model, pi)
                except MultichainError:
                    continue
                if key in keys:
                    if keys[key] != k:
                        links.setdefault(k, {}).setdefault(keys[key], EdgeHop(cur.policy, pi, cur.phi, nodes[keys[key]].phi, x))
                    continue
                if key in rejected:
                    continue
                phi = occupancy_of_stationary(model, pi)
                j = objective_vector(model, phi)
                t = _segment_position(ja, jb, j, tol)
                if t is None or t < -tol or t > 1 + tol:
                    rejected.add(key)
                    continue
                # structurally new but numerically the same point (e.g. a change deep in
                # an underflowing tail): not a new skeleton point
                if any(_same_point(j, q.objective) for q in nodes):
                    rejected.add(key)
                    continue
                keys[key] = len(nodes)
                links.setdefault(k, {})[len(nodes)] = EdgeHop(cur.policy, pi, cur.phi, phi, x)
                nodes.append(FrontVertex(pi, phi, j))
                pos.append(t)
        k += 1
    if goal_key not in keys:
        nodes.append(vb)
        pos.append(1.0)
        keys[goal_key] = len(nodes) - 1
    goal = keys[goal_key]
    # hops may also join nodes whose stored representatives are not adjacent as given
    n = len(nodes)
    order = sorted(range(n), key=lambda i: pos[i])
    best = {0: (0, None)}
    for i in order:
        if i not in best:
            continue
        for j in order:
            if pos[j] <= pos[i] + tol:
                continue
            hop = links.get(i, {}).get(j) or _direct_hop(model, nodes[i], nodes[j])
            if hop is None:
                continue
            cand = (best[i][0] + 1, (i, hop))
            if j not in best or cand[0] > best[j][0]:
                best[j] = cand
    if goal not in best or goal == 0:
        return None
    hops = []
    j = goal
    while best[j][1] is not None:
        i, hop = best[j][1]
        hops.append(hop)
        j = i
    return hops[::-1]


def _make_edge(model: MomdpModel, vertices: list, i: int, j: int, expand: bool) -> FrontEdge:
    va, vb = vertices[i], vertices[j]
    hops = walk_segment(model, va, vb) if expand else None
    if hops is None:
        direct = _direct_hop(model, va, vb)
        hops = [direct] if direct is not None else []
    slope = None
    if model.num_objectives == 2:
        d = vb.objective - va.objective
        slope = float(d[1] / d[0]) if d[0] != 0 else float("inf")
    return FrontEdge(start=i, end=j, hops=hops, slope=slope)


def _attach_weights(front: "ParetoFront") -> "ParetoFront":
    """Give every vertex a strictly positive weight under which it is the unique minimizer."""
    pts = front.objectives()
    if front.num_objectives == 2 and len(pts) > 1 and np.all(np.diff(pts[:, 0]) > 0):
        # vertices sorted by J1: the normal cone of vertex k spans the normals of its two edges
        theta = np.arctan2(np.diff(pts[:, 0]), -np.diff(pts[:, 1]))
        lo = np.concatenate([[0.0], theta])
        hi = np.concatenate([theta, [0.5 * np.pi]])
        mid = 0.5 * (lo + hi)
        for v, t in zip(front.vertices, mid):
            w = np.array([np.cos(t), np.sin(t)])
            v.supporting_weight = w / w.sum()
        return front
    for k, v in enumerate(front.vertices):
        w, margin = lp.max_margin_weight(pts, k)
        if margin > 0:
            v.supporting_weight = w
    return front


def _chain_edges(model: MomdpModel, vertices: list, expand: bool) -> list:
    # K=2 convention: edge k runs from vertices[k+1] to vertices[k]
    return [_make_edge(model, vertices, k + 1, k, expand) for k in range(len(vertices) - 1)]


def front_dichotomy_2d(
    model: MomdpModel,
    spec: PolytopeSpec = None,
    expand: bool = True,
    bound: int = DEFAULT_ENUM_BOUND,
) -> ParetoFront:
    """Bi-objective front by recursive weighted-sum dichotomy between lexicographic endpoints."""
    if model.num_objectives != 2:
        raise ValueError("dichotomy requires exactly two objectives")
    _check_unichain(model, bound)
    spec = spec or polytope_spec(model)
    a = lp.lexicographic_min(model, (0, 1), spec)
    b = lp.lexicographic_min(model, (1, 0), spec)
    va = FrontVertex(a.policy, a.phi, a.objective)
    vb = FrontVertex(b.policy, b.phi, b.objective)
    found = [va]
    if not _same_point(va.objective, vb.objective):
        found.append(vb)
        stack = [(va, vb)]
        while stack:
            left, right = stack.pop()
            w = np.array([left.objective[1] - right.objective[1], right.objective[0] - left.objective[0]])
            sol = lp.solve_scalarized(model, w, spec)
            gap = _gap_below(left.objective, right.objective, sol.objective)
            if gap > DICHOTOMY_TOL and not any(
                _same_point(sol.objective, v.objective) for v in found
            ):
                vc = FrontVertex(sol.policy, sol.phi, sol.objective)
                found.append(vc)
                stack.append((vc, right))
                stack.append((left, vc))
    found.sort(key=lambda v: (v.objective[0], -v.objective[1]))
    return _attach_weights(ParetoFront(model, found, _chain_edges(model, found, expand), method="dichotomy", exact=True))


def _nondominated(points: np.ndarray, tol: float = OBJ_TOL) -> np.ndarray:
    """Indices of points not weakly dominated (with a strict improvement) by another point."""
    keep = []
    for i, p in enumerate(points):
        slack = tol * np.maximum(1.0, np.abs(p))
        dominated = np.all(points <= p + slack, axis=1) & np.any(points < p - slack, axis=1)
        if not dominated.any():
            keep.append(i)
    return np.array(keep, dtype=int)


def _distinct_points(points: np.ndarray) -> list:
    groups: list = []
    for i, p in enumerate(points):
        for g in groups:
            if _same_point(points[g[0]], p):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def front_bruteforce(
    model: MomdpModel,
    bound: int = DEFAULT_ENUM_BOUND,
    spec: PolytopeSpec = None,
    expand: bool = True,
) -> ParetoFront:
    """Front by enumerating every deterministic policy; any number of objectives."""
    count = model.num_actions**model.num_states
    if count > bound:
        raise ValueError(f"{count} deterministic policies exceed the enumeration bound {bound}")
    spec = spec or polytope_spec(model)
    policies, phis = [], []
    for pi in all_deterministic_policies(model):
        phi = occupancy_of_stationary(model, pi)
        if any(np.max(np.abs(phi - q)) <= MEMBER_TOL for q in phis):
            continue
        policies.append(pi)
        phis.append(phi)
    J = np.array([objective_vector(model, phi) for phi in phis])
    groups = _distinct_points(J)
    reps = np.array([J[g[0]] for g in groups])
    nd = _nondominated(reps)
    pareto = [i for i in nd if lp.is_pareto_optimal(model, phis[groups[i][0]], spec)]
    cand = reps[nd]
    vertex_groups = []
    for i in pareto:
        _, margin = lp.max_margin_weight(cand, int(np.flatnonzero(nd == i)[0]))
        if margin > OBJ_TOL * _scale(cand):
            vertex_groups.append(groups[i])
    vertex_groups.sort(key=lambda g: tuple(J[g[0]]))
    vertices = [FrontVertex(policies[g[0]], phis[g[0]], J[g[0]]) for g in vertex_groups]
    alternates = [[FrontVertex(policies[k], phis[k], J[k]) for k in g] for g in vertex_groups]
    if model.num_objectives == 2:
        edges = _chain_edges(model, vertices, expand)
        for e in edges:
            _prefer_adjacent_reps(model, e, alternates, expand)
    else:
        edges = []
        for i, j in itertools.combinations(range(len(vertices)), 2):
            mid = 0.5 * (vertices[i].phi + vertices[j].phi)
            if lp.is_pareto_optimal(model, mid, spec):
                e = _make_edge(model, vertices, j, i, expand=False)
                _prefer_adjacent_reps(model, e, alternates, expand=False)
                edges.append(e)
    return _attach_weights(ParetoFront(model, vertices, edges, method="bruteforce", exact=True))


def _prefer_adjacent_reps(model, edge: FrontEdge, alternates: list, expand: bool):
    # distinct occupancies can share an objective; look for an adjacent pair among them
    if len(edge.hops) == 1:
        return
    for va in alternates[edge.start]:
        for vb in alternates[edge.end]:
            hop = _direct_hop(model, va, vb)
            if hop is not None:
                edge.hops = [hop]
                return


def lower_left_hull(points: np.ndarray) -> list:
    """Indices of the Pareto part of the lower convex hull of 2-D points, by increasing J1."""
    pts = np.asarray(points, dtype=float)
    # the Pareto part only involves nondominated points; along them every chord
    # decreases, which is what the gap test assumes
    order = sorted(_nondominated(pts), key=lambda i: (pts[i, 0], pts[i, 1]))
    hull: list = []
    for i in order:
        if hull and _same_point(pts[hull[-1]], pts[i]):
            continue
        while len(hull) >= 2:
            a, b = pts[hull[-2]], pts[hull[-1]]
            # pop b unless it lies strictly below the chord a -> i
            if _gap_below(a, pts[i], b) > DICHOTOMY_TOL:
                break
            hull.pop()
        hull.append(i)
    out = [hull[0]]
    for i in hull[1:]:
        prev = pts[out[-1]]
        if pts[i, 1] < prev[1] and not _same_point(prev[1:], pts[i, 1:]):
            out.append(i)
        else:
            break
    return out


def front_from_policy_family(
    model: MomdpModel,
    family: Sequence[DeterministicPolicy],
    complete: bool = False,
    expand: bool = False,
) -> ParetoFront:
    """Front spanned by a finite policy family, using only chain solves (no LP/MDP solve).

    The result is exact when ``complete`` is asserted by the caller (the family
    is known to contain every front vertex) or when the family is all of the
    deterministic policies; otherwise it is flagged as an inner approximation.
    """
    if model.num_objectives != 2:
        raise ValueError("policy-family fronts are built for two objectives")
    family = list(family)
    if not family:
        raise ValueError("empty policy family")
    members = [_vertex_from_policy(model, pi) for pi in family]
    J = np.array([v.objective for v in members])
    idx = lower_left_hull(J)
    vertices = [members[i] for i in idx]
    edges = []
    for k in range(len(vertices) - 1):
        e = _make_edge(model, vertices, k + 1, k, expand)
        chain = _family_chain(model, members, vertices[k + 1], vertices[k])
        if chain is not None and (not e.hops or len(chain) > len(e.hops)):
            e.hops = chain
        edges.append(e)
    everything = len({p.actions for p in family}) == model.num_actions**model.num_states
    return _attach_weights(ParetoFront(model, vertices, edges, method="family", exact=bool(complete or everything)))


def _family_chain(model, members: list, va: FrontVertex, vb: FrontVertex) -> Optional[list]:
    """Collinear family members between ``va`` and ``vb`` linked by adjacent hops, if they chain."""
    ja, jb = va.objective, vb.objective
    on = []
    for m in members:
        t = _segment_position(ja, jb, m.objective)
        if t is not None and SEGMENT_TOL < t < 1 - SEGMENT_TOL:
            on.append((t, m))
    if not on:
        return None
    on.sort(key=lambda p: p[0])
    path = [va] + [m for _, m in on] + [vb]
    hops = []
    for p, q in zip(path, path[1:]):
        if _same_point(p.objective, q.objective):
            continue
        hop = _direct_hop(model, p, q)
        if hop is None:
            return None
        hops.append(hop)
    return hops


def mixing_coefficient(nu1_i0: float, nu2_i0: float, b: float) -> float:
    """Probability of following the first policy at the switch state so the occupancy is ``b phi1 + (1-b) phi2``."""
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must lie in [0, 1], got {b}")
    if nu1_i0 < 0 or nu2_i0 < 0:
        raise ValueError("stationary probabilities must be nonnegative")
    den = b * nu1_i0 + (1.0 - b) * nu2_i0
    if den <= 0:
        raise ValueError("switch state has zero probability under both policies; coefficient undefined")
    return b * nu1_i0 / den


def blend_of_mixing(nu1_i0: float, nu2_i0: float, alpha: float) -> float:
    """Inverse of :func:`mixing_coefficient`: occupancy weight ``b`` produced by mixing weight ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    den = alpha * nu2_i0 + (1.0 - alpha) * nu1_i0
    if den <= 0:
        raise ValueError("switch state has zero probability under both policies; blend undefined")
    return alpha * nu2_i0 / den


def realize_edge_point(model: MomdpModel, front: ParetoFront, edge: FrontEdge, b: float) -> EdgePoint:
    """Policy attaining ``b * J(start) + (1 - b) * J(end)`` on ``edge``."""
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must lie in [0, 1], got {b}")
    vs, ve = front.vertices[edge.start], front.vertices[edge.end]
    target = b * vs.objective + (1 - b) * ve.objective
    if not edge.hops:
        phi = b * vs.phi + (1 - b) * ve.phi
        return EdgePoint(edge, b, phi, objective_vector(model, phi), policy_of_occupancy(model, phi), simple=False)
    # position along start -> end
    s = 1.0 - b
    for h, hop in enumerate(edge.hops):
        j1, j2 = objective_vector(model, hop.phi1), objective_vector(model, hop.phi2)
        s1 = _project(vs.objective, ve.objective, j1)
        s2 = _project(vs.objective, ve.objective, j2)
        lo, hi = min(s1, s2), max(s1, s2)
        if lo - 1e-12 <= s <= hi + 1e-12 or h == len(edge.hops) - 1:
            bh = 1.0 if hi == lo else float(np.clip((s2 - s) / (s2 - s1), 0.0, 1.0))
            alpha = mixing_coefficient(hop.nu1, hop.nu2, bh)
            mix = SimpleMixingPolicy(hop.pi1, hop.pi2, hop.switch_state, alpha)
            phi = bh * hop.phi1 + (1 - bh) * hop.phi2
            obj = objective_vector(model, phi)
            if len(edge.hops) == 1:
                obj = target
            return EdgePoint(edge, b, phi, obj, mix, simple=True, hop=h)
    raise AssertionError("unreachable")


def _nearest_on_front(front: ParetoFront, target: np.ndarray) -> np.ndarray:
    best, best_d = None, np.inf
    pts = front.objectives()
    for p in pts:
        d = np.linalg.norm(p - target)
        if d < best_d:
            best, best_d = p, d
    for e in front.edges:
        a, b = pts[e.start], pts[e.end]
        d = b - a
        t = float(np.clip((target - a) @ d / (d @ d), 0.0, 1.0)) if d @ d > 0 else 0.0
        p = a + t * d
        dist = np.linalg.norm(p - target)
        if dist < best_d:
            best, best_d = p, dist
    return best


def caratheodory_reduce(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Reduce a convex combination to affinely independent support (at most dim+1 points)."""
    w = np.asarray(weights, dtype=float).copy()
    pts = np.asarray(points, dtype=float)
    while True:
        idx = np.flatnonzero(w > 1e-15)
        M = np.vstack([pts[idx].T, np.ones(idx.size)])
        if idx.size <= np.linalg.matrix_rank(M, tol=1e-10):
            w[w <= 1e-15] = 0.0
            return w / w.sum()
        # move along a null direction of the support until a weight hits zero
        _, _, vt = np.linalg.svd(M)
        z = vt[-1]
        if not np.any(z > 1e-15):
            z = -z
        pos = z > 1e-15
        ratios = w[idx][pos] / z[pos]
        hit = idx[pos][np.argmin(ratios)]
        w[idx] -= ratios.min() * z
        w[hit] = 0.0
        w = np.clip(w, 0.0, None)


def decompose_point(front: ParetoFront, target, tol: float = DECOMPOSE_TOL) -> list:
    """Front vertices and convex weights (support at most K) reproducing ``target``.

    Raises :class:`OffFrontError` (with the nearest front point) when the target
    is not attainable or not Pareto optimal.
    """
    model = front.model
    target = np.asarray(target, dtype=float).ravel()
    K = model.num_objectives
    if target.size != K:
        raise ValueError(f"target must have {K} entries")
    P = front.objectives()
    n = len(front.vertices)
    # per-objective scale: one huge objective must not hide a miss in another
    scale = np.maximum(1.0, np.abs(target))
    # min ||r||_1 subject to sum lam J(v) + r+ - r- = target, sum lam = 1
    A = np.zeros((K + 1, n + 2 * K))
    A[:K, :n] = P.T / scale[:, None]
    A[:K, n : n + K] = np.eye(K)
    A[:K, n + K :] = -np.eye(K)
    A[K, :n] = 1.0
    b = np.concatenate([target / scale, [1.0]])
    c = np.concatenate([np.zeros(n), np.ones(2 * K)])
    res = solve_standard_form(c, A, b)
    if res.status is not LpStatus.OPTIMAL or res.value > tol:
        raise OffFrontError(
            f"target {target.tolist()} is not a convex combination of front vertices",
            _nearest_on_front(front, target),
        )
    lam = res.x[:n]
    lam[lam < 1e-14] = 0.0
    # a basis may carry one vertex too many with a round-off weight; drop it if the fit survives
    excluded = []
    while np.count_nonzero(lam) > K:
        support = np.flatnonzero(lam)
        drop = int(support[np.argmin(lam[support])])
        trial = solve_standard_form(c, A, b, exclude=excluded + [drop])
        if trial.status is not LpStatus.OPTIMAL or trial.value > tol:
            break
        excluded.append(drop)
        lam = trial.x[:n]
        lam[lam < 1e-14] = 0.0
    lam /= lam.sum()
    if np.count_nonzero(lam) > K:
        lam = caratheodory_reduce(P, lam)
    phi = sum(l * v.phi for l, v in zip(lam, front.vertices))
    if not lp.is_pareto_optimal(model, phi):
        raise OffFrontError(f"target {target.tolist()} is dominated", _nearest_on_front(front, target))
    return [(front.vertices[i], float(lam[i])) for i in np.flatnonzero(lam)]


def find_edge(front: ParetoFront, i: int, j: int) -> Optional[FrontEdge]:
    for e in front.edges:
        if {e.start, e.end} == {i, j}:
            return e
    return None


def realize_point(front: ParetoFront, target) -> dict:
    """Decompose ``target`` and, when it sits on an edge, give the simple mixing realization."""
    parts = decompose_point(front, target)
    out = {"parts": parts, "edge_point": None}
    if len(parts) == 2:
        i = next(k for k, v in enumerate(front.vertices) if v is parts[0][0])
        j = next(k for k, v in enumerate(front.vertices) if v is parts[1][0])
        edge = find_edge(front, i, j)
        if edge is not None:
            weight = dict(((id(v), w) for v, w in parts))
            b = weight[id(front.vertices[edge.start])]
            out["edge_point"] = realize_edge_point(front.model, front, edge, b)
    return out
