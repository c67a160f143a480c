from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaxent.errors import ValidationError
from qmaxent.states import (
    binary_entropy,
    check_density,
    density_from_vector,
    partial_trace,
    pauli,
    random_state,
    random_unitary,
    tensor,
    trace_distance,
    von_neumann_entropy,
)


def test_pauli_algebra():
    s1, s2, s3 = (pauli(k) for k in (1, 2, 3))
    assert np.allclose(s1 @ s2, 1j * s3)
    for s in (s1, s2, s3):
        assert np.allclose(s @ s, np.eye(2))
    with pytest.raises(ValidationError):
        pauli(4)


def test_check_density_errors():
    with pytest.raises(ValidationError):
        check_density(np.diag([0.6, 0.6]))
    with pytest.raises(ValidationError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        check_density(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_density_from_vector():
    rho = density_from_vector([1, 1j], normalize=True)
    assert np.allclose(rho, [[0.5, -0.5j], [0.5j, 0.5]])
    with pytest.raises(ValidationError):
        density_from_vector([1, 1])
    with pytest.raises(ValidationError):
        density_from_vector([0, 0], normalize=True)


def test_entropy_values():
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2), abs=1e-15)
    assert von_neumann_entropy(density_from_vector([1, 0, 0])) == 0.0
    assert binary_entropy(0.5) == pytest.approx(np.log(2), abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    with pytest.raises(ValidationError):
        binary_entropy(1.5)


def test_tensor_order_is_leftmost_slowest():
    e0, e1 = np.array([1, 0]), np.array([0, 1])
    v = tensor(e1[:, None], e0[:, None], e0[:, None]).ravel()
    assert np.argmax(np.abs(v)) == 4  # |100> is index 4


def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    a, b, c = random_state(2, rng), random_state(2, rng), random_state(2, rng)
    rho = tensor(a, b, c)
    assert np.allclose(partial_trace(rho, (2, 2, 2), (0,)), a)
    assert np.allclose(partial_trace(rho, (2, 2, 2), (1, 2)), tensor(b, c))
    assert np.allclose(partial_trace(rho, (2, 2, 2), (0, 2)), tensor(a, c))
    with pytest.raises(ValidationError):
        partial_trace(rho, (2, 3), (0,))


@given(st.integers(0, 10_000))
def test_entropy_bounds_and_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    rho = random_state(d, rng)
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= np.log(d) + 1e-12
    u = random_unitary(d, rng)
    assert von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(s, abs=1e-10)


@given(st.integers(0, 10_000))
def test_trace_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_state(3, rng) for _ in range(3))
    assert 0 <= trace_distance(a, b) <= 1 + 1e-12
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-13)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12
