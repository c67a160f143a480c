from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import hull_face_dim
from qmaxent.errors import ValidationError
from qmaxent.faces import (
    INFINITE_GAUGE,
    SkewConeFixture,
    _chain_levels,
    face_of,
    gauge_2d,
    gauge_boundedness_scan,
    image_face_inclusion_check,
    lsc_probe,
    skew_cone_face_dim,
)
from qmaxent.fixtures import J2, example_5_2_alpha, example_5_2_observables, thm_3x3_matrix
from qmaxent.inference import maxent
from qmaxent.numrange import boundary_sweep
from qmaxent.observables import ObservableSet, expected_values
from qmaxent.states import density_from_vector, random_state

SQUARE = np.diag([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])


def _random_set(d, r, rng):
    mats = []
    for _ in range(r):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append((g + g.conj().T) / 2)
    return ObservableSet.from_list(mats)


@pytest.fixture(scope="module")
def disk():
    return boundary_sweep(J2, 2048)


@pytest.fixture(scope="module")
def square():
    return boundary_sweep(SQUARE, 2048)


# -- face_of ----------------------------------------------------------------------------------


def test_face_of_example_5_2():
    u = example_5_2_observables()
    f = face_of(u, [1, 1, 0.5])
    assert f.dim == 1 and f.rank == 2
    assert np.allclose(f.projection.matrix, np.diag([1, 1, 0]), atol=1e-9)
    assert face_of(u, example_5_2_alpha(0.1)).dim == 0
    interior = face_of(u, expected_values(u, np.eye(3) / 3))
    assert interior.is_whole_body and interior.dim == 3


@given(st.integers(0, 100_000))
def test_face_of_is_idempotent_and_chain_ranks_decrease(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    u = _random_set(d, int(rng.integers(1, 4)), rng)
    alpha = expected_values(u, random_state(d, rng, int(rng.integers(1, d + 1))))
    sol = maxent(u, alpha)
    again = face_of(u, expected_values(u, sol.state))
    assert again.rank == sol.face.rank and again.dim == sol.face.dim
    ranks = [b.shape[1] for b, _, _ in _chain_levels(u, sol.face.exposure_chain)]
    assert all(x > y for x, y in zip(ranks, ranks[1:]))


# -- lsc probes -------------------------------------------------------------------------------


def test_lsc_probe_example_5_2_jumps():
    probe = lsc_probe(example_5_2_observables(), example_5_2_alpha)
    assert set(probe.dims_along) == {0}
    assert probe.dim_at_limit == 1 and probe.lsc_violated


def test_lsc_probe_circle_does_not_jump():
    u = ObservableSet.from_matrix(thm_3x3_matrix())
    probe = lsc_probe(u, lambda e: [np.cos(e), np.sin(e)])
    assert probe.dim_at_limit == 0 and not probe.lsc_violated


def test_lsc_probe_validation():
    with pytest.raises(ValidationError):
        lsc_probe(example_5_2_observables(), example_5_2_alpha, schedule=[0.1])


# -- image-face inclusion ------------------------------------------------------------------------


def test_inclusion_example_5_2():
    u = example_5_2_observables()
    rep = image_face_inclusion_check(u, np.diag([0.5, 0.5, 0]))
    assert rep.inclusion and rep.equality
    x = np.array([1, 1j, 0]) / np.sqrt(2)
    rep = image_face_inclusion_check(u, density_from_vector(x))
    assert rep.inclusion and rep.equality is None
    assert rep.image_dim == 0 and rep.face_dim == 1


@given(st.integers(0, 100_000))
def test_inclusion_random(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    u = _random_set(d, int(rng.integers(1, 4)), rng)
    rho = random_state(d, rng, int(rng.integers(1, d + 1)))
    rep = image_face_inclusion_check(u, rho, n_samples=30, seed=seed)
    assert rep.inclusion
    assert rep.image_dim <= rep.face_dim


# -- gauges ----------------------------------------------------------------------------------


def test_disk_gauges(disk):
    assert gauge_2d(disk, 0, 1) == pytest.approx(1.0, abs=1e-9)
    assert gauge_2d(disk, 0, np.exp(0.7j)) == pytest.approx(1.0, abs=1e-9)
    assert gauge_2d(disk, 1, 1j) == INFINITE_GAUGE
    assert gauge_2d(disk, 1, 1) == INFINITE_GAUGE
    assert gauge_2d(disk, 1, -1) == pytest.approx(0.5, abs=1e-9)


def test_square_gauges(square):
    assert gauge_2d(square, 1 + 1j, -1) == pytest.approx(0.5, abs=1e-9)
    assert gauge_2d(square, 1 + 1j, -1 - 1j) == pytest.approx(0.5, abs=1e-9)
    assert gauge_2d(square, 1 + 1j, 1) == INFINITE_GAUGE
    assert gauge_2d(square, 0, 1) == pytest.approx(1.0, abs=1e-9)


def test_gauge_rejects_outside_and_zero(disk):
    with pytest.raises(ValidationError):
        gauge_2d(disk, 0, 0)
    with pytest.raises(ValidationError):
        gauge_2d(disk, 2, 1)


@given(st.floats(0, 2 * np.pi), st.floats(0.1, 10), st.floats(0, 0.9))
def test_gauge_positive_homogeneity(disk, angle, s, r):
    w = r * np.exp(0.3j)
    v = np.exp(1j * angle)
    assert gauge_2d(disk, w, s * v) == pytest.approx(s * gauge_2d(disk, w, v), rel=1e-9)


def test_gauge_scans(disk, square):
    assert gauge_boundedness_scan(square, 1 + 1j).bounded
    scan = gauge_boundedness_scan(disk, 1)
    assert not scan.bounded and scan.witness is not None
    assert gauge_boundedness_scan(disk, 0.2j).bounded


# -- skew cone --------------------------------------------------------------------------------


def test_skew_cone_face_dims():
    assert skew_cone_face_dim((2, 0, 0)) == 0
    assert skew_cone_face_dim((0, 0, 0)) == 1
    assert skew_cone_face_dim((1, 0, 0.2)) == 3
    with pytest.raises(ValidationError):
        skew_cone_face_dim((3, 0, 0))


def test_skew_cone_matches_hull_oracle():
    body = SkewConeFixture()
    pts = body.sample_extreme_points(400)
    probes = [pts[5], pts[123], pts[-1], np.zeros(3), np.array([0, 0, 0.5]), np.array([1, 0, 0.2]),
              0.5 * (pts[40] + pts[-2]), np.array([0.7, 0.1, -0.1])]
    for p in probes:
        assert body.face_dim(p) == hull_face_dim(pts, p), p


def test_skew_cone_lsc_failure_at_origin():
    body = SkewConeFixture()
    dims = [body.face_dim(body.circle_point(np.pi + t)) for t in (0.1, 0.01, 0.001)]
    assert dims == [0, 0, 0] and body.face_dim((0, 0, 0)) == 1


@given(st.floats(0, 2 * np.pi))
def test_gauge_unbounded_at_every_disk_boundary_point(disk, phi):
    assert not gauge_boundedness_scan(disk, np.exp(1j * phi), n_directions=2000).bounded
