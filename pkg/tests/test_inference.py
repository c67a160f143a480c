from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import classical_maxent_bruteforce, gibbs_expm, log_partition_expm
from qmaxent.errors import InfeasibleError, ValidationError
from qmaxent.fixtures import example_5_2_alpha, example_5_2_observables, example_5_2_vector, pauli_triple
from qmaxent.inference import (
    STATUS_INTERIOR,
    STATUS_SINGLETON,
    continuity_probe,
    gibbs_state,
    log_partition,
    maxent,
    sample_fiber,
)
from qmaxent.observables import ObservableSet, expected_values, transform_expected, transform_observables
from qmaxent.states import density_from_vector, pauli, random_state, random_unitary, trace_distance, von_neumann_entropy


def _random_set(d, r, rng):
    mats = []
    for _ in range(r):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append((g + g.conj().T) / 2)
    return ObservableSet.from_list(mats)


# -- dual function ---------------------------------------------------------------------------


def test_gibbs_and_log_partition_match_expm():
    rng = np.random.default_rng(5)
    u = _random_set(4, 3, rng)
    theta = rng.normal(size=3)
    val, grad, _ = log_partition(u, theta)
    assert val == pytest.approx(log_partition_expm(u.matrices, theta), abs=1e-12)
    ref = gibbs_expm(u.matrices, theta)
    assert np.allclose(gibbs_state(u, theta), ref, atol=1e-12)
    assert np.allclose(grad, expected_values(u, ref), atol=1e-12)


@given(st.integers(0, 10_000))
def test_dual_gradient_and_hessian_finite_differences(seed):
    rng = np.random.default_rng(seed)
    u = _random_set(int(rng.integers(2, 6)), int(rng.integers(1, 5)), rng)
    theta = rng.normal(size=u.r)
    _, grad, hess = log_partition(u, theta)
    h = 1e-5
    for k in range(u.r):
        e = np.zeros(u.r)
        e[k] = h
        fd = (log_partition(u, theta + e)[0] - log_partition(u, theta - e)[0]) / (2 * h)
        assert fd == pytest.approx(grad[k], abs=1e-6)
        fd_g = (log_partition(u, theta + e)[1] - log_partition(u, theta - e)[1]) / (2 * h)
        assert np.allclose(fd_g, hess[:, k], atol=1e-6)


def test_log_partition_validation():
    u = pauli_triple()
    with pytest.raises(ValidationError):
        log_partition(u, [1.0, 2.0])
    with pytest.raises(ValidationError):
        log_partition(u, [np.nan, 0, 0])


# -- Bloch ball -----------------------------------------------------------------------------


def test_pauli_center_and_interior():
    u = pauli_triple()
    sol = maxent(u, [0, 0, 0])
    assert sol.status == STATUS_INTERIOR
    assert np.allclose(sol.state, np.eye(2) / 2, atol=1e-12)
    sol = maxent(u, [0.6, 0, 0])
    assert np.allclose(sol.state, (np.eye(2) + 0.6 * pauli(1)) / 2, atol=1e-9)


def test_pauli_pure_and_infeasible():
    u = pauli_triple()
    sol = maxent(u, [0, 0, 1])
    assert sol.status == STATUS_SINGLETON
    assert np.allclose(sol.state, np.diag([1, 0]), atol=1e-9)
    assert sol.face.dim == 0
    with pytest.raises(InfeasibleError):
        maxent(u, [2, 0, 0])
    with pytest.raises(InfeasibleError):
        maxent(u, [0.8, 0.8, 0])
    with pytest.raises(ValidationError):
        maxent(u, [0, 0])


# -- Example with a discontinuity ---------------------------------------------------------------


def test_example_5_2_limit_state_is_face_center():
    u = example_5_2_observables()
    sol = maxent(u, [1, 1, 0.5])
    assert trace_distance(sol.state, np.diag([0.5, 0.5, 0])) < 1e-7
    assert sol.face.rank == 2 and sol.face.dim == 1


@pytest.mark.parametrize("k", [3, 6, 10, 15, 20])
def test_example_5_2_curve_states_are_pure(k):
    u = example_5_2_observables()
    eps = 2.0**-k
    sol = maxent(u, example_5_2_alpha(eps))
    ref = density_from_vector(example_5_2_vector(eps))
    assert trace_distance(sol.state, ref) < 1e-6
    assert sol.face.dim == 0


def test_example_5_2_probe_is_discontinuous():
    u = example_5_2_observables()
    rep = continuity_probe(u, [1, 1, 0.5], example_5_2_alpha)
    assert rep.verdict == "discontinuous-along-curve"
    assert rep.gap_trace_distance == pytest.approx(0.5, abs=1e-4)
    assert rep.entropy_jump == pytest.approx(np.log(2), abs=1e-6)
    assert rep.cauchy_basis == "states"


def test_example_5_2_pair_is_also_discontinuous():
    # the first two observables alone: 1 + i is a boundary eigenvalue of u1 + i u2
    full = example_5_2_observables()
    u = ObservableSet(full.matrices[:2])
    rep = continuity_probe(u, [1, 1], lambda e: example_5_2_alpha(e)[:2])
    assert rep.verdict == "discontinuous-along-curve"
    assert rep.gap_trace_distance == pytest.approx(0.5, abs=1e-4)


def test_probe_interior_segment_is_continuous():
    u = example_5_2_observables()
    t0 = expected_values(u, np.eye(3) / 3)
    t1 = expected_values(u, np.diag([1.0, 0, 0]))
    rep = continuity_probe(u, t0, lambda e: t0 + e * (t1 - t0))
    assert rep.verdict == "continuous-along-curve"


def test_probe_schedule_validation():
    u = pauli_triple()
    with pytest.raises(ValidationError):
        continuity_probe(u, [0, 0, 0], lambda e: [e, 0, 0], schedule=[0.1, 0.2, 0.05])
    with pytest.raises(ValidationError):
        continuity_probe(u, [0, 0, 0], lambda e: [e, 0, 0], schedule=[0.1, 0.05])


# -- commutative case against brute force ----------------------------------------------------------


def test_commuting_edge_gives_uniform_weights():
    u = ObservableSet.from_list([np.diag([0.0, 1, 2, 3]), np.diag([0.0, 0, 0, 1])])
    sol = maxent(u, [1, 0])
    assert np.allclose(np.diag(sol.state).real, [1 / 3, 1 / 3, 1 / 3, 0], atol=1e-7)


@pytest.mark.parametrize("seed", range(8))
def test_diagonal_observables_match_bruteforce(seed):
    rng = np.random.default_rng(100 + seed)
    d = int(rng.integers(3, 5))
    r = d - 3 + int(rng.integers(1, 3)) if d == 4 else 1
    diags = rng.normal(size=(r, d))
    p_true = rng.dirichlet(np.ones(d))
    alpha = diags @ p_true
    u = ObservableSet.from_list([np.diag(x) for x in diags])
    sol = maxent(u, alpha)
    ref = classical_maxent_bruteforce(diags, alpha)
    assert np.allclose(np.diag(sol.state).real, ref, atol=2e-3)
    assert np.abs(sol.state - np.diag(np.diag(sol.state))).max() < 1e-9


# -- properties -----------------------------------------------------------------------------------


@given(st.integers(0, 100_000))
def test_random_feasible_targets(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    u = _random_set(d, int(rng.integers(1, 5)), rng)
    rank = int(rng.integers(1, d + 1))
    rho = random_state(d, rng, rank)
    alpha = expected_values(u, rho)
    sol = maxent(u, alpha)
    assert np.abs(expected_values(u, sol.state) - alpha).max() < 1e-8
    assert sol.entropy >= von_neumann_entropy(rho) - 1e-8


@given(st.integers(0, 100_000))
def test_fiber_samples_have_lower_entropy(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    u = _random_set(d, int(rng.integers(1, 4)), rng)
    alpha = expected_values(u, random_state(d, rng))
    sol = maxent(u, alpha)
    for s in sample_fiber(u, sol.state, 20, rng):
        assert np.abs(expected_values(u, s) - alpha).max() < 1e-8
        assert von_neumann_entropy(s) <= sol.entropy + 1e-9


@given(st.integers(0, 100_000), st.sampled_from(["add-multiple-of-identity", "invertible-linear-recombination", "unitary-conjugation"]))
def test_inference_is_covariant(seed, kind):
    rng = np.random.default_rng(seed)
    u = _random_set(3, 2, rng)
    alpha = expected_values(u, random_state(3, rng))
    if kind == "add-multiple-of-identity":
        data = rng.normal(size=2)
    elif kind == "invertible-linear-recombination":
        data = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    else:
        data = random_unitary(3, rng)
    v = transform_observables(u, kind, data)
    a = maxent(u, alpha).state
    b = maxent(v, transform_expected(alpha, kind, data)).state
    if kind == "unitary-conjugation":
        b = data @ b @ data.conj().T
    assert trace_distance(a, b) < 1e-7
