from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaxent.errors import ValidationError
from qmaxent.fixtures import J2, disk_4x4_matrix, disk_point_matrix, thm_3x3_matrix, triangle_matrix
from qmaxent.numrange import (
    MULTIPLY,
    SINGLY,
    analyze_3x3,
    atlas_to_csv,
    atlas_to_svg,
    boundary_sweep,
    classify_point,
    conic_fit_residual,
    discontinuity_candidates,
    ellipse_of_2x2,
    generator_count,
    range_shape,
    support_data,
    support_hausdorff,
    support_value,
    unitary_reducibility,
)
from qmaxent.states import random_state, random_unitary


def _ginibre(d, rng):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def test_support_of_jordan_block_is_unit_circle():
    atlas = boundary_sweep(J2, 512)
    assert np.allclose(atlas.support_values, 1, atol=1e-12)
    assert not atlas.flat_segments
    assert all(abs(abs(z) - 1) < 1e-12 for g in atlas.points for z in g)


def test_triangle_has_three_flats_and_corners():
    atlas = boundary_sweep(triangle_matrix(), 1024)
    assert len(atlas.flat_segments) == 3
    for z in (1, 1j, 0):
        c = classify_point(atlas, z)
        assert c.kind == "corner" and c.simplicial and c.generators == SINGLY
    c = classify_point(atlas, 0.5 + 0.5j)
    assert c.kind == "flat-interior" and c.generators == MULTIPLY
    with pytest.raises(ValidationError):
        classify_point(atlas, 0.2 + 0.2j)


def test_disk_plus_point_tangents():
    atlas = boundary_sweep(disk_point_matrix(), 2048)
    assert len(atlas.flat_segments) == 2
    ends = sorted((z for _, seg in atlas.flat_segments for z in seg if abs(z - 1) > 1e-6), key=lambda z: z.imag)
    assert ends[0] == pytest.approx(0.25 - np.sqrt(3) / 4 * 1j, abs=1e-8)
    assert ends[1] == pytest.approx(0.25 + np.sqrt(3) / 4 * 1j, abs=1e-8)
    assert classify_point(atlas, 1).kind == "corner"
    tangent = classify_point(atlas, ends[1])
    assert tangent.kind == "round" and tangent.on_flat_endpoint and not tangent.simplicial


def test_thm_matrix_point_one_is_multiply_generated_round():
    atlas = boundary_sweep(thm_3x3_matrix(), 2048)
    assert not atlas.flat_segments
    c = classify_point(atlas, 1)
    assert c.kind == "round" and c.generators == MULTIPLY and c.generator_dimension == 2
    assert classify_point(atlas, 1j).generators == SINGLY
    assert generator_count(thm_3x3_matrix(), 1).dimension == 2


def test_support_data_and_value():
    sd = support_data(triangle_matrix(), np.pi / 4)
    assert sd.multiplicity == 2
    assert sd.width == pytest.approx(np.sqrt(2), abs=1e-12)
    assert support_value(J2, 0.3) == pytest.approx(1.0, abs=1e-14)


@given(st.integers(0, 10_000))
def test_random_states_lie_in_the_range(seed):
    rng = np.random.default_rng(seed)
    a = _ginibre(3, rng)
    atlas = boundary_sweep(a, 256)
    pts = [np.trace(a @ random_state(3, rng)) for _ in range(30)]
    assert atlas.max_outward_excess(pts).max() <= 1e-10 * atlas.scale
    assert atlas.convexity_defect() <= 1e-10 * atlas.scale
    assert atlas.support_residual() <= 1e-10 * atlas.scale


@given(st.integers(0, 10_000))
def test_dichotomy_on_random_boundary_points(seed):
    rng = np.random.default_rng(seed)
    atlas = boundary_sweep(_ginibre(3, rng), 512)
    for k in rng.choice(len(atlas.points), 5, replace=False):
        c = classify_point(atlas, atlas.points[k][0])
        assert c.simplicial == (c.kind != "round")


def test_reducibility():
    assert unitary_reducibility(J2).irreducible
    rng = np.random.default_rng(3)
    u = random_unitary(3, rng)
    red = unitary_reducibility(u @ thm_3x3_matrix() @ u.conj().T)
    assert not red.irreducible
    assert sorted(b.shape[0] for b in red.blocks) == [1, 2]
    assert red.residual < 1e-8


def test_candidates_on_fixtures():
    rng = np.random.default_rng(4)
    u = random_unitary(3, rng)
    rep = discontinuity_candidates(u @ thm_3x3_matrix() @ u.conj().T, 2048)
    assert len(rep.points) == 1 and abs(rep.points[0] - 1) < 1e-6
    rep = discontinuity_candidates(disk_4x4_matrix(), 512)
    assert rep.flagged_fraction > 0.9 and rep.notes


@pytest.mark.parametrize("d", [3, 4, 5])
def test_candidate_bound_on_random_irreducible(d):
    rng = np.random.default_rng(d)
    for _ in range(5):
        rep = discontinuity_candidates(_ginibre(d, rng), 1024)
        assert rep.irreducible and rep.bound_ok
        assert len(rep.points) <= max(0, d - 3)


def test_shapes():
    assert range_shape(J2)[0] == "ellipse"
    assert range_shape(triangle_matrix())[0] == "triangle"
    assert range_shape(thm_3x3_matrix())[0] == "disk-with-boundary-eigenvalue"
    # foci at the eigenvalues, minor axis |b| for [[a, b], [0, c]]
    e = ellipse_of_2x2(np.array([[1, 2], [0, -1]]))
    assert e["minor"] == pytest.approx(2.0, abs=1e-12)
    assert e["major"] == pytest.approx(np.sqrt(8.0), abs=1e-12)
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    assert conic_fit_residual(2 * np.cos(t) + 1j * np.sin(t)) < 1e-10
    assert conic_fit_residual(np.array([1, 1j, -1, -1j, 0.9 + 0.9j, 0.5, 0.2j])) > 1e-3


def test_analyze_3x3():
    a = thm_3x3_matrix()
    res = analyze_3x3((a + a.conj().T) / 2, (a - a.conj().T) / 2j)
    assert not res.continuous_everywhere
    assert len(res.discontinuity_points) == 1 and abs(res.discontinuity_points[0] - 1) < 1e-9
    assert res.exceptional_fiber_rank == 2 and res.exceptional_fiber_dim == 3
    v = res.open_state
    assert abs(abs(np.vdot(v, np.array([1, 1, 0]) / np.sqrt(2))) - 1) < 1e-8
    t = triangle_matrix()
    assert analyze_3x3(t.real, t.imag).continuous_everywhere


def test_hausdorff_of_block_sum():
    a = disk_point_matrix()
    atlas = boundary_sweep(a, 1024)
    blocks = [a[:2, :2], a[2:, 2:]]
    assert support_hausdorff(atlas, blocks) < 1e-12


def test_exports():
    atlas = boundary_sweep(triangle_matrix(), 64)
    csv = atlas_to_csv(atlas)
    assert csv.splitlines()[0] == "theta,h,re,im,kind"
    assert "corner" in csv
    svg = atlas_to_svg(atlas, [0.5 + 0.5j], annotation="note")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>") and "note" in svg
    assert atlas_to_svg(atlas) == atlas_to_svg(atlas)
