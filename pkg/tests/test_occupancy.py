import numpy as np
import pytest
from oracles import occupancy_enum

from momdp_front.model import DeterministicPolicy, MomdpModel, SimpleMixingPolicy, random_unichain_model
from momdp_front.occupancy import (
    MultichainError,
    basic_feasible_solutions,
    check_member,
    deterministic_policy_of_vertex,
    is_vertex,
    membership,
    objective_vector,
    occupancy_of_stationary,
    policy_of_occupancy,
    polytope_spec,
    vertices_adjacent,
)

AA, BA, AB, BB = (DeterministicPolicy(p) for p in ((0, 0), (1, 0), (0, 1), (1, 1)))


def test_t2_occupancies(t2):
    np.testing.assert_allclose(occupancy_of_stationary(t2, AA), [[0.5, 0], [0.5, 0]], atol=1e-15)
    np.testing.assert_allclose(occupancy_of_stationary(t2, BA), [[0, 2 / 3], [1 / 3, 0]], atol=1e-15)
    np.testing.assert_allclose(objective_vector(t2, occupancy_of_stationary(t2, AB)), [2 / 3, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(objective_vector(t2, occupancy_of_stationary(t2, BB)), [0.5, 1.0], atol=1e-15)


def test_occupancy_matches_oracle(rng):
    for _ in range(30):
        model = random_unichain_model(rng, 4, 3, 2, sparsity=0.3)
        acts = tuple(int(a) for a in rng.integers(3, size=4))
        phi = occupancy_of_stationary(model, DeterministicPolicy(acts))
        np.testing.assert_allclose(phi, occupancy_enum(model.kernel, acts), atol=1e-10)
        assert membership(model, phi)


def test_occupancy_is_beta_independent(t2):
    other = MomdpModel(t2.kernel, t2.costs, np.array([0.0, 1.0]))
    np.testing.assert_array_equal(occupancy_of_stationary(t2, BA), occupancy_of_stationary(other, BA))


def test_mixing_occupancy_is_linear_in_b(t2):
    # alpha = 3/7 at state 0 realizes the midpoint of phi_aa and phi_ba
    mix = SimpleMixingPolicy(AA, BA, 0, 3 / 7)
    phi = occupancy_of_stationary(t2, mix.as_stationary(2))
    mid = 0.5 * occupancy_of_stationary(t2, AA) + 0.5 * occupancy_of_stationary(t2, BA)
    np.testing.assert_allclose(phi, mid, atol=1e-15)
    np.testing.assert_allclose(objective_vector(t2, phi), [5 / 12, 1 / 3], atol=1e-15)


def test_multichain_policy_rejected():
    kernel = np.zeros((2, 1, 2))
    kernel[0, 0, 0] = kernel[1, 0, 1] = 1.0
    model = MomdpModel(kernel, np.zeros((1, 2, 1)), np.array([1.0, 0.0]))
    with pytest.raises(MultichainError):
        occupancy_of_stationary(model, DeterministicPolicy((0, 0)))


def test_vertices_and_adjacency_t2(t2):
    spec = polytope_spec(t2)
    assert spec.rank == 2
    verts = basic_feasible_solutions(spec)
    assert len(verts) == 4
    phis = {p: occupancy_of_stationary(t2, p) for p in (AA, BA, AB, BB)}
    for phi in phis.values():
        assert is_vertex(t2, phi, spec)
    assert vertices_adjacent(t2, phis[AA], phis[BA], spec)
    assert not vertices_adjacent(t2, phis[AA], phis[BB], spec)
    assert not is_vertex(t2, 0.5 * (phis[AA] + phis[BB]), spec)


def test_policy_of_occupancy_round_trip(t2):
    phi = 0.3 * occupancy_of_stationary(t2, AA) + 0.7 * occupancy_of_stationary(t2, BA)
    pi = policy_of_occupancy(t2, phi)
    np.testing.assert_allclose(occupancy_of_stationary(t2, pi), phi, atol=1e-14)
    assert deterministic_policy_of_vertex(t2, occupancy_of_stationary(t2, BA)) == BA


def test_check_member_rejects_non_members(t2):
    with pytest.raises(ValueError):
        check_member(t2, np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        check_member(t2, np.ones((3, 2)))
