import numpy as np
import pytest

from momdp_front import lp
from momdp_front.front import front_bruteforce, front_dichotomy_2d
from momdp_front.model import random_unichain_model
from momdp_front.nonlinear import (
    Linear,
    Power,
    ScalarizationSpec,
    Sigmoid,
    evaluate,
    golden_section,
    minimize_over_front_2d,
    minimize_over_front_general,
    parse_scalarization,
)
from momdp_front.occupancy import objective_vector, occupancy_of_stationary

QUAD = ScalarizationSpec((Linear(1.0), Power(1.0, 2.0)))


def test_parse_and_describe():
    spec = parse_scalarization("linear(1) + sigmoid(200, 17, 0.6)")
    assert spec.terms == (Linear(1.0), Sigmoid(200.0, 17.0, 0.6))
    assert ScalarizationSpec.from_dict(spec.to_dict()) == spec
    assert evaluate(spec, [1.0, 0.6]) == pytest.approx(101.0)
    with pytest.raises(ValueError):
        parse_scalarization("cubic(1)")
    with pytest.raises(ValueError):
        parse_scalarization("linear(-1)+linear(1)").check(2)
    with pytest.raises(ValueError):
        QUAD.check(3)


def test_sigmoid_is_stable_far_from_midpoint():
    s = Sigmoid(200.0, 17.0, 0.6)
    assert s(1e4) == pytest.approx(200.0)
    assert s(-1e4) == 0.0
    assert s(0.6) == pytest.approx(100.0)


def test_power_preserves_sign():
    p = Power(1.0, 2.0)
    assert p(-2.0) == -4.0 and p(3.0) == 9.0


def test_golden_section_on_parabola():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-8)


def test_t2_quadratic_optimum(t2, t2_front):
    # f(b) = (1/2 - b/6) + (2b/3)^2 on the edge, from b*(1/3, 2/3) + (1-b)*(1/2, 0) with b the ba weight;
    # minimized at ba-weight 3/16, i.e. b = 13/16 towards the aa vertex
    sol = minimize_over_front_2d(t2, t2_front, QUAD)
    assert sol.location == "edge"
    assert sol.value == pytest.approx(0.484375, abs=1e-9)
    np.testing.assert_allclose(sol.objective_point, [0.46875, 0.125], atol=1e-8)
    assert sol.b == pytest.approx(13 / 16, abs=1e-7)
    assert sol.realization.alpha == pytest.approx(13 / 17, abs=1e-7)
    assert sol.support == 2
    phi = occupancy_of_stationary(t2, sol.realization.as_stationary(2))
    np.testing.assert_allclose(objective_vector(t2, phi), sol.objective_point, atol=1e-12)
    assert lp.is_pareto_optimal(t2, phi)


def test_linear_spec_matches_lp(rng):
    for _ in range(10):
        model = random_unichain_model(rng, 4, 3, 2)
        a = rng.random(2) + 0.1
        spec = ScalarizationSpec((Linear(a[0]), Linear(a[1])))
        sol = minimize_over_front_2d(model, front_dichotomy_2d(model), spec)
        ref = lp.solve_scalarized(model, a)
        assert sol.value == pytest.approx(float(a @ ref.objective), abs=1e-9)
        assert sol.location == "vertex"


def test_general_agrees_with_2d(rng):
    for _ in range(5):
        model = random_unichain_model(rng, 3, 3, 2)
        front = front_dichotomy_2d(model)
        spec = ScalarizationSpec((Power(1.0, 2.0), Sigmoid(1.0, 10.0, 0.5)))
        a = minimize_over_front_2d(model, front, spec)
        b = minimize_over_front_general(model, front, spec)
        assert b.value == pytest.approx(a.value, abs=1e-7)


def test_general_three_objectives(rng):
    model = random_unichain_model(rng, 3, 3, 3)
    front = front_bruteforce(model)
    spec = ScalarizationSpec((Power(1.0, 2.0), Power(1.0, 2.0), Power(1.0, 2.0)))
    sol = minimize_over_front_general(model, front, spec)
    assert sol.support <= 3
    phi = sum(w * v.phi for v, w in sol.parts)
    assert lp.is_pareto_optimal(model, phi)
    # no vertex is better than the returned point
    assert all(sol.value <= evaluate(spec, v.objective) + 1e-12 for v in front.vertices)
