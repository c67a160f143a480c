from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmaxent.correlation import (
    c3,
    c3_details,
    c3_discontinuity_probe,
    ghz_fiber_state,
    ghz_maxent_reference,
    ghz_vector,
    h_epsilon_alpha,
    h_epsilon_model,
    lambda_closed_form,
    marginal_ab_closed_form,
    marginal_ab_eigenvalues,
    marginal_triple,
    phi_vector,
    two_local_basis,
)
from qmaxent.errors import ValidationError
from qmaxent.faces import face_of
from qmaxent.inference import maxent
from qmaxent.observables import expected_values
from qmaxent.states import binary_entropy, density_from_vector, pauli, random_state, tensor, trace_distance


@pytest.fixture(scope="module")
def basis():
    return two_local_basis()


def test_basis_invariants(basis):
    mats = basis.observables.matrices
    assert len(basis) == 36 and mats.shape == (36, 8, 8)
    gram = np.einsum("kij,lji->kl", mats, mats).real
    assert np.allclose(gram, 8 * np.eye(36))
    assert np.allclose(np.einsum("kii->k", mats), 0)
    for m in mats:
        assert np.allclose(m @ m, np.eye(8))
    i2 = pauli(0)
    assert np.allclose(mats[basis.index((1, 0, 0))], tensor(pauli(1), i2, i2))
    assert np.allclose(mats[basis.index((0, 3, 3))], tensor(i2, pauli(3), pauli(3)))
    assert basis.labels[:3] == [(1, 0, 0), (2, 0, 0), (3, 0, 0)]
    assert basis.labels[9] == (1, 1, 0) and basis.labels[-1] == (0, 3, 3)


@given(st.integers(0, 100_000))
def test_marginals_are_consistent_and_match_expectations(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(8, rng)
    m = marginal_triple(rho)
    assert m.single_site_mismatch() < 1e-12
    sigma = random_state(8, rng)
    # equal two-local expectations <=> equal marginals
    basis = two_local_basis()
    d_alpha = np.abs(expected_values(basis.observables, rho) - expected_values(basis.observables, sigma)).max()
    assert (d_alpha < 1e-12) == (m.distance(marginal_triple(sigma)) < 1e-12)


def test_ghz_and_product_marginals():
    m = marginal_triple(density_from_vector(ghz_vector(np.sqrt(0.5))))
    for x in m.as_tuple():
        assert np.allclose(x, np.diag([0.5, 0, 0, 0.5]))
    e = np.zeros(8)
    e[0] = 1
    m = marginal_triple(np.outer(e, e))
    for x in m.as_tuple():
        assert np.allclose(x, np.diag([1.0, 0, 0, 0]))


def test_rejects_wrong_shape():
    with pytest.raises(ValidationError):
        marginal_triple(np.eye(4) / 4)
    with pytest.raises(ValidationError):
        ghz_vector(1.5)


@pytest.mark.parametrize("p", [0.5, 0.25, 0.1])
def test_c3_ghz_equals_binary_entropy(p):
    val = c3(density_from_vector(ghz_vector(np.sqrt(p))))
    assert val == pytest.approx(binary_entropy(p), abs=1e-8)


def test_c3_vanishes_for_product_and_phi():
    e = np.zeros(8)
    e[0] = 1
    assert abs(c3(np.outer(e, e))) < 1e-8
    assert abs(c3(np.eye(8) / 8)) < 1e-8
    assert abs(c3(density_from_vector(phi_vector(np.sqrt(0.5), 0.1)))) < 1e-8


def test_c3_details_report():
    res = c3_details(density_from_vector(ghz_vector(np.sqrt(0.5))))
    assert res.entropy_state == pytest.approx(0, abs=1e-10)
    assert res.entropy_maxent == pytest.approx(np.log(2), abs=1e-8)
    assert res.solution.rank == 2
    assert set(res.to_json_obj()) >= {"c3", "maxent_rank"}


@settings(max_examples=6)
@given(st.floats(-1, 1), st.floats(0, 2 * np.pi), st.floats(0, 1))
def test_ghz_fiber_maxent_depends_only_on_z(z, phase, radius):
    r = radius * np.sqrt(max(0.0, 1 - z * z))
    rho = ghz_fiber_state(r * np.cos(phase), r * np.sin(phase), z)
    basis = two_local_basis()
    sol = maxent(basis.observables, expected_values(basis.observables, rho))
    assert trace_distance(sol.state, ghz_maxent_reference(z)) < 1e-8


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 2.0])
def test_h_epsilon_closed_forms(eps):
    m = h_epsilon_model(eps)
    assert m.lam == pytest.approx(lambda_closed_form(eps), abs=1e-10)
    assert m.top_gap > 0
    vec = np.array([1, m.s, m.s, m.s, m.s, m.s, m.s, 1]) / np.sqrt(2 + 6 * m.s**2)
    assert abs(abs(np.vdot(vec, m.eigenvector)) - 1) < 1e-10
    assert np.allclose(m.marginal_ab, marginal_ab_closed_form(m.s), atol=1e-12)
    ev = np.sort(np.linalg.eigvalsh(m.marginal_ab))
    assert np.allclose(ev, [0, 0, *sorted(marginal_ab_eigenvalues(m.s))], atol=1e-12)


def test_h_epsilon_limit_and_faces(basis):
    assert np.allclose(h_epsilon_alpha(1e-9), h_epsilon_alpha(0), atol=1e-8)
    assert face_of(basis.observables, h_epsilon_alpha(0.5)).dim == 0
    assert face_of(basis.observables, h_epsilon_alpha(0.0)).dim == 1
    with pytest.raises(ValidationError):
        h_epsilon_model(0.0)


def test_c3_discontinuity_probe():
    probe = c3_discontinuity_probe(np.sqrt(0.5), gammas=(0.1, 0.03))
    assert probe.c3_psi == pytest.approx(np.log(2), abs=1e-8)
    assert max(abs(c) for c in probe.c3_phi) < 1e-8
    assert probe.gap == pytest.approx(np.log(2), abs=1e-8)
    with pytest.raises(ValidationError):
        c3_discontinuity_probe(1.0)
