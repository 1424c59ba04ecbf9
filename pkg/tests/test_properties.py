import json

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from oracles import all_policy_objectives

from momdp_front import io, lp
from momdp_front.front import blend_of_mixing, front_dichotomy_2d, mixing_coefficient
from momdp_front.model import random_unichain_model
from momdp_front.nonlinear import Linear, Power, ScalarizationSpec, Sigmoid, evaluate

prob = st.floats(min_value=1e-6, max_value=1.0)
unit = st.floats(min_value=0.0, max_value=1.0)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@given(prob, prob, unit)
def test_mixing_coefficient_inverse(nu1, nu2, b):
    alpha = mixing_coefficient(nu1, nu2, b)
    assert 0.0 <= alpha <= 1.0
    # alpha carries absolute precision eps; the inverse amplifies it by db/dalpha
    den = alpha * nu2 + (1 - alpha) * nu1
    gain = nu1 * nu2 / den**2
    assert abs(blend_of_mixing(nu1, nu2, alpha) - b) <= 1e-12 + 4 * np.finfo(float).eps * gain


term = st.one_of(
    st.builds(Linear, st.floats(0.1, 10.0)),
    st.builds(Sigmoid, st.floats(0.1, 200.0), st.floats(0.1, 10.0), st.floats(0.0, 1.0)),
    st.builds(Power, st.floats(0.1, 10.0), st.floats(1.0, 3.0)),
)


@given(
    st.lists(term, min_size=2, max_size=3),
    st.data(),
)
def test_catalog_is_strictly_increasing(terms, data):
    K = len(terms)
    spec = ScalarizationSpec(tuple(terms))
    J = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=K, max_size=K)))
    step = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=K, max_size=K)))
    k = data.draw(st.integers(0, K - 1))
    step[k] = max(step[k], 1e-3)
    assert evaluate(spec, J) < evaluate(spec, J + step)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seeds, st.integers(1, 4), st.integers(2, 3), st.integers(1, 3))
def test_scalarized_never_beaten_by_a_policy(seed, n, m, K):
    rng = np.random.default_rng(seed)
    model = random_unichain_model(rng, n, m, K)
    w = rng.random(K) + 0.01
    val = float(w @ lp.solve_scalarized(model, w).objective)
    for _, _, J in all_policy_objectives(model.kernel, model.costs):
        assert val <= float(w @ J) + 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(2, 3))
def test_front_geometry(seed, n, m):
    rng = np.random.default_rng(seed)
    model = random_unichain_model(rng, n, m, 2, sparsity=0.4)
    front = front_dichotomy_2d(model)
    J = front.objectives()
    assert np.all(np.diff(J[:, 0]) > 0) and np.all(np.diff(J[:, 1]) < 0)
    assert np.all(np.diff(front.slopes()) > 0)
    for v in front.vertices:
        assert lp.is_pareto_optimal(model, v.phi)
    for _, _, Jp in all_policy_objectives(model.kernel, model.costs):
        # no policy lies strictly below the front
        for e in front.edges:
            a, b = J[e.end], J[e.start]
            if a[0] - 1e-12 <= Jp[0] <= b[0] + 1e-12:
                t = (Jp[0] - a[0]) / (b[0] - a[0])
                assert Jp[1] >= a[1] + t * (b[1] - a[1]) - 1e-9


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(finite, min_size=8, max_size=8), seeds)
def test_model_round_trip_exact(costs, seed):
    rng = np.random.default_rng(seed)
    model = random_unichain_model(rng, 2, 2, 2)
    model = type(model)(model.kernel, np.array(costs).reshape(2, 2, 2), model.beta)
    back = io.model_from_dict(json.loads(io._dumps(io.model_to_dict(model))))
    assert np.array_equal(back.costs, model.costs)
    assert np.array_equal(back.kernel, model.kernel)
