from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaxent.errors import ValidationError
from qmaxent.fixtures import example_5_2_observables, pauli_triple
from qmaxent.linalg import Projection
from qmaxent.observables import (
    ObservableSet,
    affine_dim,
    expected_values,
    exposed_face,
    face_dim,
    support_function,
    transform_expected,
    transform_observables,
    traceless_hermitian_basis,
)
from qmaxent.states import random_state, random_unitary


def _random_set(d, r, rng):
    mats = []
    for _ in range(r):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append((g + g.conj().T) / 2)
    return ObservableSet.from_list(mats)


def test_validation():
    with pytest.raises(ValidationError):
        ObservableSet.from_list([np.array([[0, 1], [0, 0]])])
    with pytest.raises(ValidationError):
        ObservableSet.from_list([np.eye(2), np.eye(3)])
    with pytest.raises(ValidationError):
        ObservableSet.from_list([])
    u = pauli_triple()
    with pytest.raises(ValidationError):
        expected_values(u, np.eye(3) / 3)
    with pytest.raises(ValidationError):
        support_function(u, [0, 0, 0])


def test_pauli_expected_values():
    u = pauli_triple()
    assert np.allclose(expected_values(u, np.eye(2) / 2), 0)
    assert np.allclose(expected_values(u, np.diag([1, 0])), [0, 0, 1])
    assert affine_dim(u) == 3


def test_traceless_basis_orthonormal():
    for k in (1, 2, 3, 4):
        b = traceless_hermitian_basis(k)
        assert b.shape == (k * k - 1, k, k)
        if k > 1:
            gram = np.einsum("aij,bji->ab", b, b)
            assert np.allclose(gram, np.eye(k * k - 1), atol=1e-12)
            assert np.allclose(np.einsum("aii->a", b), 0)


def test_affine_dims():
    assert affine_dim(example_5_2_observables()) == 3
    assert affine_dim(ObservableSet.from_list([np.eye(3)])) == 0
    u = ObservableSet.from_list([np.diag([1.0, 0, 0]), np.diag([2.0, 0, 0])])
    assert affine_dim(u) == 1


def test_face_dims_example_5_2():
    u = example_5_2_observables()
    p = Projection(np.eye(3)[:, :2].astype(complex))
    assert face_dim(u, p) == 1
    face = exposed_face(u, [1.0, 0.0, 0.0])
    assert face.rank == 2 and face.dim == 1


def test_json_roundtrip(tmp_path):
    u = example_5_2_observables()
    path = tmp_path / "u.json"
    u.save(path)
    v = ObservableSet.load(path)
    assert np.array_equal(u.matrices, v.matrices)
    with pytest.raises(ValidationError):
        ObservableSet.from_json_obj({"d": 2, "observables": [[[1, 0]]]})


@given(st.integers(0, 10_000), st.sampled_from(["add-multiple-of-identity", "invertible-linear-recombination", "unitary-conjugation"]))
def test_transforms_commute_with_expectations(seed, kind):
    rng = np.random.default_rng(seed)
    u = _random_set(3, 2, rng)
    rho = random_state(3, rng)
    if kind == "add-multiple-of-identity":
        data = rng.normal(size=2)
        rho_t = rho
    elif kind == "invertible-linear-recombination":
        data = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        rho_t = rho
    else:
        data = random_unitary(3, rng)
        rho_t = data.conj().T @ rho @ data
    v = transform_observables(u, kind, data)
    assert np.allclose(expected_values(v, rho_t), transform_expected(expected_values(u, rho), kind, data), atol=1e-12)
    assert affine_dim(v) == affine_dim(u)


@given(st.integers(0, 10_000))
def test_support_function_bounds_expectations(seed):
    rng = np.random.default_rng(seed)
    u = _random_set(4, 3, rng)
    lam = rng.normal(size=3)
    h = support_function(u, lam)
    for _ in range(20):
        assert lam @ expected_values(u, random_state(4, rng)) <= h + 1e-12
