import numpy as np
import pytest
from oracles import stationary_eig

from momdp_front.model import (
    DeterministicPolicy,
    MomdpModel,
    SimpleMixingPolicy,
    StationaryPolicy,
    analyze_chain,
    is_unichain,
    parse_policy,
    policies_adjacent,
    policy_kernel,
    random_unichain_model,
    toy_model,
    validate_model,
)


def test_toy_model_is_valid_and_unichain(t2):
    assert validate_model(t2) == []
    check = is_unichain(t2)
    assert check.verified
    assert is_unichain(t2, method="enumerate").verified


def test_broken_row_sum_reported(t2):
    kernel = t2.kernel.copy()
    kernel[0, 0] = [0.5, 0.6]
    bad = MomdpModel(kernel, t2.costs, t2.beta)
    problems = validate_model(bad)
    assert len(problems) == 1 and "row sum" in problems[0]


def test_negative_entry_and_beta_reported(t2):
    kernel = t2.kernel.copy()
    kernel[1, 1] = [1.5, -0.5]
    bad = MomdpModel(kernel, t2.costs, np.array([0.7, 0.7]))
    problems = validate_model(bad)
    assert any("negative" in p for p in problems)
    assert any("beta" in p for p in problems)


def test_shape_errors():
    with pytest.raises(ValueError):
        MomdpModel(np.ones((2, 2, 3)), np.zeros((1, 2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        MomdpModel(np.ones((2, 2, 2)) / 2, np.zeros((1, 3, 2)), np.array([1.0, 0.0]))


def test_stationary_law_matches_eigen_oracle(rng):
    for _ in range(20):
        model = random_unichain_model(rng, 4, 3, 2)
        pi = DeterministicPolicy(tuple(rng.integers(3, size=4)))
        ca = analyze_chain(model, pi)
        np.testing.assert_allclose(ca.stationary, stationary_eig(policy_kernel(model, pi)), atol=1e-12)


def test_t2_chain_values(t2):
    ca = analyze_chain(t2, DeterministicPolicy((1, 0)))
    np.testing.assert_allclose(ca.stationary, [2 / 3, 1 / 3], atol=1e-15)
    ca = analyze_chain(t2, DeterministicPolicy((0, 0)))
    np.testing.assert_allclose(ca.stationary, [0.5, 0.5], atol=1e-15)


def test_multichain_detected():
    # two absorbing states under action 0; action 1 moves to the other state
    kernel = np.zeros((2, 2, 2))
    kernel[0, 0, 0] = kernel[1, 0, 1] = 1.0
    kernel[0, 1, 1] = kernel[1, 1, 0] = 1.0
    model = MomdpModel(kernel, np.zeros((1, 2, 2)), np.array([1.0, 0.0]))
    check = is_unichain(model)
    assert check.verified is False
    assert check.witness.actions == (0, 0)
    assert len(analyze_chain(model, check.witness).recurrent_classes) == 2


def test_transient_states_found():
    kernel = np.zeros((3, 1, 3))
    kernel[0, 0, 1] = 1.0
    kernel[1, 0, 2] = 1.0
    kernel[2, 0, 1] = 1.0
    model = MomdpModel(kernel, np.zeros((1, 3, 1)), np.array([1.0, 0, 0]))
    ca = analyze_chain(model, DeterministicPolicy((0, 0, 0)))
    assert ca.transient == frozenset({0})
    np.testing.assert_allclose(ca.stationary, [0, 0.5, 0.5])


def test_unichain_enumeration_bound_refuses(rng):
    kernel = np.zeros((12, 2, 12))
    for x in range(12):
        kernel[x, 0, x] = 1.0  # self loops: no universally reachable state
        kernel[x, 1, (x + 1) % 12] = 1.0
    model = MomdpModel(kernel, np.zeros((1, 12, 2)), np.eye(12)[0])
    check = is_unichain(model, bound=100)
    assert check.verified is None
    assert "unverifiable" in check.detail


def test_policy_helpers(t2):
    p = parse_policy("ba", t2)
    assert p.actions == (1, 0)
    assert parse_policy("0,1", t2).actions == (0, 1)
    with pytest.raises(ValueError):
        parse_policy("aaa", t2)
    assert policies_adjacent(DeterministicPolicy((0, 0)), DeterministicPolicy((1, 0))) == 0
    assert policies_adjacent(DeterministicPolicy((0, 0)), DeterministicPolicy((1, 1))) is None
    with pytest.raises(ValueError):
        SimpleMixingPolicy(DeterministicPolicy((0, 0)), DeterministicPolicy((1, 1)), 0, 0.5)
    with pytest.raises(ValueError):
        StationaryPolicy(np.array([[0.5, 0.6], [1.0, 0.0]]))


def test_mixing_policy_probs():
    mix = SimpleMixingPolicy(DeterministicPolicy((0, 0)), DeterministicPolicy((1, 0)), 0, 0.25)
    np.testing.assert_allclose(mix.probs(2), [[0.25, 0.75], [1.0, 0.0]])


def test_toy_model_constructor_is_fresh():
    assert toy_model() is not toy_model()
