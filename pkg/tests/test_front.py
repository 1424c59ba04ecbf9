import numpy as np
import pytest
from oracles import all_policy_objectives, lower_hull_2d

from momdp_front import lp
from momdp_front.front import (
    OffFrontError,
    blend_of_mixing,
    caratheodory_reduce,
    decompose_point,
    front_bruteforce,
    front_dichotomy_2d,
    front_from_policy_family,
    lower_left_hull,
    mixing_coefficient,
    realize_edge_point,
    realize_point,
)
from momdp_front.model import (
    DeterministicPolicy,
    MomdpModel,
    SimpleMixingPolicy,
    all_deterministic_policies,
    random_unichain_model,
)
from momdp_front.occupancy import MultichainError, objective_vector, occupancy_of_stationary


def test_t2_front(t2_front):
    J = t2_front.objectives()
    np.testing.assert_allclose(J, [[1 / 3, 2 / 3], [0.5, 0.0]], atol=1e-14)
    assert [v.policy.actions for v in t2_front.vertices] == [(1, 0), (0, 0)]
    (e,) = t2_front.edges
    assert e.slope == pytest.approx(-4.0, abs=1e-12)
    assert (e.start, e.end) == (1, 0)
    assert e.simple and e.switch_state == 0
    assert (e.nu1_i0, e.nu2_i0) == pytest.approx((0.5, 2 / 3), abs=1e-15)


def test_supporting_weights_select_their_vertex(t2_front):
    for v in t2_front.vertices:
        w = v.supporting_weight
        assert np.all(w > 0) and w.sum() == pytest.approx(1.0)
        sol = lp.solve_scalarized(t2_front.model, w)
        np.testing.assert_allclose(sol.objective, v.objective, atol=1e-12)


def test_lambda_interval(t2_front):
    assert t2_front.lambda_interval(0) == pytest.approx((0.0, 0.25))
    lo, hi = t2_front.lambda_interval(1)
    assert lo == pytest.approx(0.25) and hi == np.inf


def test_dichotomy_matches_enumeration_hull(rng):
    for i in range(30):
        model = random_unichain_model(rng, 3, 3, 2, sparsity=0.5 * (i % 2))
        J = np.array([j for _, _, j in all_policy_objectives(model.kernel, model.costs)])
        ref = lower_hull_2d(J)
        got = front_dichotomy_2d(model).objectives()
        assert got.shape == ref.shape, (i, got, ref)
        np.testing.assert_allclose(got, ref, atol=1e-9)


def test_dichotomy_equals_bruteforce(rng):
    for i in range(20):
        model = random_unichain_model(rng, 1 + i % 4, 2 + i % 3, 2, sparsity=0.5 * (i % 2))
        a, b = front_dichotomy_2d(model), front_bruteforce(model)
        np.testing.assert_allclose(a.objectives(), b.objectives(), atol=1e-9)
        assert np.allclose(a.slopes(), b.slopes(), atol=1e-7)


def test_slopes_increase(rng):
    for _ in range(10):
        front = front_dichotomy_2d(random_unichain_model(rng, 4, 3, 2))
        s = np.array(front.slopes())
        assert np.all(np.diff(s) > 0)
        assert np.all(s < 0)


def test_edges_are_simple_on_random_models(rng):
    for _ in range(10):
        model = random_unichain_model(rng, 4, 3, 2)
        front = front_dichotomy_2d(model)
        for e in front.edges:
            assert e.simple
            for h in e.hops:
                assert sum(a != b for a, b in zip(h.pi1.actions, h.pi2.actions)) == 1


def test_three_objective_bruteforce(rng):
    model = random_unichain_model(rng, 3, 3, 3)
    front = front_bruteforce(model)
    for v in front.vertices:
        assert lp.is_pareto_optimal(model, v.phi)
        sol = lp.solve_scalarized(model, v.supporting_weight)
        np.testing.assert_allclose(sol.objective, v.objective, atol=1e-9)
    for e in front.edges:
        mid = 0.5 * (front.vertices[e.start].phi + front.vertices[e.end].phi)
        assert lp.is_pareto_optimal(model, mid)


def test_multichain_model_rejected():
    kernel = np.zeros((2, 2, 2))
    kernel[0, 0, 0] = kernel[1, 0, 1] = 1.0
    kernel[0, 1, 1] = kernel[1, 1, 0] = 1.0
    model = MomdpModel(kernel, np.ones((2, 2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(MultichainError):
        front_dichotomy_2d(model)


def test_family_front_full_family_equals_dichotomy(rng):
    model = random_unichain_model(rng, 3, 2, 2)
    fam = front_from_policy_family(model, list(all_deterministic_policies(model)))
    assert fam.exact
    np.testing.assert_allclose(fam.objectives(), front_dichotomy_2d(model).objectives(), atol=1e-12)


def test_partial_family_is_not_exact(t2):
    fam = front_from_policy_family(t2, [DeterministicPolicy((1, 1)), DeterministicPolicy((0, 0))])
    assert not fam.exact
    np.testing.assert_allclose(fam.objectives(), [[0.5, 0.0]])


def test_lower_left_hull_drops_interior():
    pts = np.array([[0.0, 1.0], [1.0, 0.0], [0.6, 0.6], [0.5, 0.5], [0.2, 0.5]])
    assert lower_left_hull(pts) == [0, 4, 1]


def test_mixing_coefficient_examples():
    assert mixing_coefficient(0.5, 2 / 3, 0.5) == pytest.approx(3 / 7, abs=1e-15)
    assert mixing_coefficient(0.5, 2 / 3, 13 / 16) == pytest.approx(13 / 17, abs=1e-15)
    assert mixing_coefficient(0.5, 2 / 3, 0.0) == 0.0
    assert mixing_coefficient(0.5, 2 / 3, 1.0) == 1.0
    with pytest.raises(ValueError):
        mixing_coefficient(0.0, 0.0, 0.5)
    for b in np.linspace(0, 1, 11):
        assert blend_of_mixing(0.5, 2 / 3, mixing_coefficient(0.5, 2 / 3, b)) == pytest.approx(b, abs=1e-14)


def test_realize_edge_point_reproduces_target(t2, t2_front):
    e = t2_front.edges[0]
    for b in (0.1, 0.5, 13 / 16, 0.9):
        ep = realize_edge_point(t2, t2_front, e, b)
        assert isinstance(ep.realization, SimpleMixingPolicy)
        phi = occupancy_of_stationary(t2, ep.realization.as_stationary(2))
        target = b * t2_front.vertices[e.start].objective + (1 - b) * t2_front.vertices[e.end].objective
        np.testing.assert_allclose(objective_vector(t2, phi), target, atol=1e-14)
    assert realize_edge_point(t2, t2_front, e, 13 / 16).realization.alpha == pytest.approx(13 / 17, abs=1e-14)


def test_decompose(t2_front):
    parts = decompose_point(t2_front, [5 / 12, 1 / 3])
    assert sorted(w for _, w in parts) == pytest.approx([0.5, 0.5], abs=1e-12)
    real = realize_point(t2_front, [5 / 12, 1 / 3])
    assert real["edge_point"].realization.alpha == pytest.approx(3 / 7, abs=1e-12)
    single = decompose_point(t2_front, [0.5, 0.0])
    assert len(single) == 1 and single[0][1] == pytest.approx(1.0)


def test_decompose_rejects_off_front(t2_front):
    with pytest.raises(OffFrontError) as info:
        decompose_point(t2_front, [0.0, 0.0])
    assert info.value.nearest is not None
    with pytest.raises(OffFrontError):
        decompose_point(t2_front, [0.6, 0.7])


def test_caratheodory_reduce():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    w = np.full(4, 0.25)
    r = caratheodory_reduce(pts, w)
    assert np.count_nonzero(r) <= 3
    np.testing.assert_allclose(r @ pts, w @ pts, atol=1e-12)
    assert r.sum() == pytest.approx(1.0)


def test_decompose_objectives_of_different_magnitude():
    from conftest import pendubot

    _, front = pendubot(0.3)
    v4, v5 = front.vertices[4].objective, front.vertices[5].objective
    mid = 0.5 * (v4 + v5)
    parts = decompose_point(front, mid)
    assert sorted(w for _, w in parts) == pytest.approx([0.5, 0.5], abs=1e-9)
    # J1 reaches ~1e7 on the front; a miss of 0.004 in J2 must still be caught
    with pytest.raises(OffFrontError):
        decompose_point(front, [60.0, 0.44])
    # a rounded target on edge 4 must not pick up a third vertex with a round-off weight
    parts = decompose_point(front, [62.00517533, 0.4332282508])
    assert len(parts) == 2
    assert {id(v) for v, _ in parts} == {id(front.vertices[4]), id(front.vertices[5])}
