"""Numerical ranges of pairs of observables and the classification of their boundary points.

For Hermitian ``u_1, u_2`` the convex support ``L(u_1, u_2)`` is the numerical
range ``W(A) = {x* A x : |x| = 1}`` of ``A = u_1 + i u_2``.  Its support
function in direction ``e^{i theta}`` is ``h(theta) = lambda_max(Re(e^{-i theta} A))``
and the boundary exposed at ``theta`` is ``e^{i theta}(h + i t)`` with ``t``
ranging over the spectrum of ``Im(e^{-i theta} A)`` compressed to the top
eigenspace of ``Re(e^{-i theta} A)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError
from .linalg import DEGENERACY_TOL, as_square, check_hermitian, commutant_basis, jacobi_eigh

ANGLE_RESOLUTION = 2048
FLAT_TOL = 1e-7  # width of the compressed imaginary spectrum that counts as a flat
ON_BOUNDARY_TOL = 1e-6
CORNER_BINS = 3
POINT_TOL = 1e-7
GEN_TOL = 1e-6  # eigenvalue matching when counting generators
DEGENERATE_GAP = 1e-9  # refined top gap below which an angle counts as degenerate
ELLIPSE_TOL = 1e-6
FLAT_CERT_TOL = 1e-11  # degeneracy tolerance when certifying a flat at its normal

KINDS = ("corner", "flat-interior", "flat-endpoint", "round")
SINGLY = "singly-generated"
MULTIPLY = "multiply-generated"

SHAPES = (
    "ellipse",
    "ovular",
    "flat-portion",
    "triangle",
    "segment",
    "point",
    "ellipse-reducible",
    "conv-ellipse-plus-exterior-point",
    "disk-with-boundary-eigenvalue",
)


def _scale(a: np.ndarray) -> float:
    return 1.0 + float(np.linalg.norm(a, 2))


def _re_im(a: np.ndarray, theta):
    """Hermitian and anti-Hermitian parts of ``e^{-i theta} A`` (batched over ``theta``)."""
    th = np.asarray(theta, dtype=float)
    m = np.exp(-1j * th)[..., None, None] * a
    mh = np.swapaxes(m, -1, -2).conj()
    return (m + mh) / 2, (m - mh) / 2j


# -- support data ---------------------------------------------------------------------


@dataclass(frozen=True)
class SupportData:
    """Supporting line of ``W(A)`` with outer normal ``e^{i theta}``."""

    theta: float
    h: float
    eigenspace: np.ndarray  # (d, m) orthonormal basis of the top eigenspace
    compressed_imaginary: np.ndarray  # (m, m)

    @property
    def multiplicity(self) -> int:
        return self.eigenspace.shape[1]

    @property
    def t_spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.compressed_imaginary)

    @property
    def width(self) -> float:
        t = self.t_spectrum
        return float(t[-1] - t[0])

    def point(self, t: float) -> complex:
        return complex(np.exp(1j * self.theta) * (self.h + 1j * t))

    def exposed_points(self, flat_tol: float = FLAT_TOL) -> list[complex]:
        """One point, or both endpoints of the exposed segment ordered counter-clockwise."""
        t = self.t_spectrum
        if t[-1] - t[0] > flat_tol:
            return [self.point(t[0]), self.point(t[-1])]
        return [self.point(float(np.mean(t)))]


def _support_from_eig(theta: float, w: np.ndarray, v: np.ndarray, im: np.ndarray, tol: float) -> SupportData:
    keep = w >= w[-1] - tol
    q = v[:, keep][:, ::-1]
    c = q.conj().T @ im @ q
    return SupportData(float(theta), float(w[-1]), q, (c + c.conj().T) / 2)


def support_data(a, theta: float, degeneracy_tol: float = DEGENERACY_TOL) -> SupportData:
    """Top eigenvalue, top eigenspace and compressed imaginary part at angle ``theta``.

    ``degeneracy_tol`` is relative to ``1 + ||A||``.
    """
    arr = as_square(a)
    re, im = _re_im(arr, float(theta))
    w, v = jacobi_eigh(re)
    return _support_from_eig(float(theta), w, v, im, degeneracy_tol * _scale(arr))


def support_value(a, theta: float) -> float:
    arr = as_square(a)
    re, _ = _re_im(arr, float(theta))
    return float(jacobi_eigh(re)[0][-1])


# -- boundary sweep ---------------------------------------------------------------------


@dataclass
class BoundaryAtlas:
    """Sampled boundary of ``W(A)``.

    ``points[k]`` holds the extreme points exposed at ``angles[k]``: one point,
    or a flat segment's two endpoints ordered counter-clockwise.
    """

    matrix: np.ndarray
    angles: np.ndarray
    support_values: np.ndarray
    points: list
    flat_segments: list
    resolution: int
    multiplicities: np.ndarray = field(default=None)

    @property
    def scale(self) -> float:
        return _scale(self.matrix)

    def polygon(self) -> np.ndarray:
        """Boundary points in counter-clockwise order with consecutive duplicates removed."""
        pts = [z for group in self.points for z in group]
        out = [pts[0]]
        tol = POINT_TOL * self.scale
        for z in pts[1:]:
            if abs(z - out[-1]) > tol:
                out.append(z)
        if len(out) > 1 and abs(out[-1] - out[0]) <= tol:
            out.pop()
        return np.array(out, dtype=complex)

    def convexity_defect(self) -> float:
        """Largest negative turn (cross product) along the boundary polygon, 0 if convex."""
        p = self.polygon()
        if len(p) < 3:
            return 0.0
        e1 = np.roll(p, -1) - p
        e2 = np.roll(p, -2) - np.roll(p, -1)
        cross = (e1.conj() * e2).imag
        return float(max(0.0, -cross.min()))

    def support_residual(self) -> float:
        """Largest ``|Re(e^{-i theta} z) - h(theta)|`` over stored points."""
        worst = 0.0
        for th, hv, group in zip(self.angles, self.support_values, self.points):
            for z in group:
                worst = max(worst, abs((np.exp(-1j * th) * z).real - hv))
        return worst

    def max_outward_excess(self, z) -> float:
        """``max_theta Re(e^{-i theta} z) - h(theta)`` over the stored angles."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        vals = (np.exp(-1j * self.angles)[None, :] * zz[:, None]).real - self.support_values[None, :]
        return vals.max(axis=1)

    def to_json_obj(self) -> dict:
        return {
            "resolution": self.resolution,
            "angles": [float(x) for x in self.angles],
            "support_values": [float(x) for x in self.support_values],
            "points": [[[z.real, z.imag] for z in group] for group in self.points],
            "flat_segments": [
                {"theta": float(th), "endpoints": [[z1.real, z1.imag], [z2.real, z2.imag]]}
                for th, (z1, z2) in self.flat_segments
            ],
        }


def _subspace_overlap(qa: np.ndarray, qb: np.ndarray) -> float:
    """Smallest principal cosine between two subspaces (0 when dimensions differ)."""
    if qa.shape[1] != qb.shape[1]:
        return 0.0
    return float(np.linalg.svd(qa.conj().T @ qb, compute_uv=False).min())


def _locate_switch(a: np.ndarray, sa: SupportData, sb: SupportData, tol: float, flat_len: float):
    """Bisect between two angles whose top eigenspaces differ.

    Returns ``(theta, z_in, z_out)`` when the two sides meet at a hidden flat,
    otherwise ``None``.
    """
    lo, hi = sa, sb
    for _ in range(64):
        if hi.theta - lo.theta < 1e-14:
            break
        mid = support_data(a, 0.5 * (lo.theta + hi.theta), tol / _scale(a))
        if mid.width > FLAT_TOL:
            za, zb = mid.exposed_points()
            return _certify_flat(a, za, zb)
        oa = np.linalg.norm(lo.eigenspace.conj().T @ mid.eigenspace, 2)
        ob = np.linalg.norm(hi.eigenspace.conj().T @ mid.eigenspace, 2)
        if oa >= ob:
            lo = mid
        else:
            hi = mid
    za = lo.exposed_points()[-1]
    zb = hi.exposed_points()[0]
    if abs(zb - za) <= flat_len:
        return None
    return _certify_flat(a, za, zb)


def _certify_flat(a: np.ndarray, za: complex, zb: complex):
    """``(normal, z1, z2)`` if a flat portion of ``W(A)`` runs between ``za`` and ``zb``.

    The chord normal is refined by re-exposing at it a few times; the flat is
    accepted when the final normal supports ``W(A)`` along the chord and the
    top eigenvalue there is degenerate to ``FLAT_CERT_TOL``.
    """
    scale = _scale(a)
    for _ in range(12):
        normal = float(np.mod(np.angle(zb - za) - np.pi / 2, 2 * np.pi))
        sd = support_data(a, normal)
        if sd.width <= FLAT_TOL:
            return None
        # generators of the two ends give points exactly inside W(A)
        t, y = np.linalg.eigh(sd.compressed_imaginary)
        x1, x2 = sd.eigenspace @ y[:, 0], sd.eigenspace @ y[:, -1]
        z1 = complex(x1.conj() @ a @ x1)
        z2 = complex(x2.conj() @ a @ x2)
        done = abs(z1 - za) + abs(z2 - zb) <= 1e-15 * scale
        za, zb = z1, z2
        if done:
            break
    normal = float(np.mod(np.angle(zb - za) - np.pi / 2, 2 * np.pi))
    if support_value(a, normal) - (np.exp(-1j * normal) * za).real > 1e-10 * scale:
        return None
    sd = support_data(a, normal, degeneracy_tol=FLAT_CERT_TOL)
    if sd.width <= FLAT_TOL:
        return None
    z1, z2 = sd.exposed_points()
    return normal, z1, z2


def boundary_sweep(a, n: int = ANGLE_RESOLUTION, degeneracy_tol: float = DEGENERACY_TOL) -> BoundaryAtlas:
    """Sweep supporting lines at ``n`` equally spaced angles and locate flat portions.

    Flats whose normal falls between grid angles are found by bisecting on
    the top eigenspace wherever it jumps between neighbouring angles.
    """
    arr = as_square(a)
    if n < 16:
        raise ValidationError("angle count must be at least 16")
    scale = _scale(arr)
    tol = degeneracy_tol * scale
    thetas = 2 * np.pi * np.arange(n) / n
    re, im = _re_im(arr, thetas)
    w, v = jacobi_eigh(re)
    data = [_support_from_eig(thetas[k], w[k], v[k], im[k], tol) for k in range(n)]

    entries, flats = [], []
    for k, sd in enumerate(data):
        if sd.width > FLAT_TOL:
            cert = _certify_flat(arr, *sd.exposed_points())
            if cert is None:
                # near-degenerate top eigenvalue without a flat: keep the top vector only
                sd = _support_from_eig(sd.theta, w[k], v[k], im[k], 0.0)
                data[k] = sd
            else:
                flats.append((sd.theta, tuple(sd.exposed_points())))
        entries.append((sd.theta, sd.h, sd.exposed_points(), sd.multiplicity))
    flat_len = FLAT_TOL * scale
    for k in range(n):
        sa, sb = data[k], data[(k + 1) % n]
        if _subspace_overlap(sa.eigenspace, sb.eigenspace) > 0.9:
            continue
        if k == n - 1:
            sb = SupportData(sb.theta + 2 * np.pi, sb.h, sb.eigenspace, sb.compressed_imaginary)
        found = _locate_switch(arr, sa, sb, tol, flat_len)
        if found is None:
            continue
        th, z1, z2 = found
        th = float(np.mod(th, 2 * np.pi))
        if any(abs(z1 - f[1][0]) < 1e-6 * scale and abs(z2 - f[1][1]) < 1e-6 * scale for f in flats):
            continue
        hv = float((np.exp(-1j * th) * z1).real)
        flats.append((th, (z1, z2)))
        entries.append((th, hv, [z1, z2], 2))
    entries.sort(key=lambda e: e[0])
    flats.sort(key=lambda f: f[0])
    return BoundaryAtlas(
        matrix=arr.copy(),
        angles=np.array([e[0] for e in entries]),
        support_values=np.array([e[1] for e in entries]),
        points=[e[2] for e in entries],
        flat_segments=flats,
        resolution=n,
        multiplicities=np.array([e[3] for e in entries]),
    )


def support_hausdorff(atlas: BoundaryAtlas, others: list, n: int | None = None) -> float:
    """Hausdorff distance between ``W(A)`` and the convex hull of ``W(B_j)``.

    For compact convex sets this is ``max_theta |h_A - max_j h_{B_j}|``.
    """
    m = atlas.resolution if n is None else n
    thetas = 2 * np.pi * np.arange(m) / m
    ha = jacobi_eigh(_re_im(atlas.matrix, thetas)[0])[0][:, -1]
    hb = np.full(m, -np.inf)
    for b in others:
        bb = as_square(b)
        hb = np.maximum(hb, jacobi_eigh(_re_im(bb, thetas)[0])[0][:, -1])
    return float(np.max(np.abs(ha - hb)))


# -- classification ---------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorInfo:
    kind: str
    dimension: int
    theta: float


@dataclass(frozen=True)
class BoundaryPointClass:
    """Classification of a boundary point.

    A flat-portion endpoint that is not a corner is a round boundary point;
    it is reported with ``kind="round"`` and ``on_flat_endpoint=True`` so that
    ``simplicial == (kind != "round")`` always holds.
    """

    kind: str
    generators: str
    simplicial: bool
    generator_dimension: int = 1
    exposing_angles: tuple = ()
    on_flat_endpoint: bool = False

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "generators": self.generators,
            "simplicial": self.simplicial,
            "generator_dimension": self.generator_dimension,
            "on_flat_endpoint": self.on_flat_endpoint,
        }


def _exposing_angle(arr: np.ndarray, z: complex, n_grid: int = 720, grid_angles=None, grid_h=None):
    """Angle minimizing ``h(theta) - Re(e^{-i theta} z)`` and that minimal value."""
    if grid_angles is None:
        grid_angles = 2 * np.pi * np.arange(n_grid) / n_grid
        grid_h = jacobi_eigh(_re_im(arr, grid_angles)[0])[0][:, -1]
    gap = grid_h - (np.exp(-1j * grid_angles) * z).real
    k = int(np.argmin(gap))
    best_t, best_g = float(grid_angles[k]), float(gap[k])
    if best_g <= 1e-14 * _scale(arr):
        return best_t, best_g
    step = 2 * np.pi / len(grid_angles)
    res = minimize_scalar(
        lambda t: support_value(arr, t) - (np.exp(-1j * t) * z).real,
        bounds=(best_t - 1.5 * step, best_t + 1.5 * step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    if res.fun < best_g:
        best_t, best_g = float(res.x), float(res.fun)
    return float(np.mod(best_t, 2 * np.pi)), best_g


def generator_count(a, z, theta: float | None = None, tol: float = GEN_TOL) -> GeneratorInfo:
    """Number of independent unit vectors ``x`` with ``x* A x = z`` at an extreme boundary point.

    The dimension is the multiplicity of ``Im(e^{-i theta} z)`` in the spectrum
    of the compressed imaginary part at the exposing angle ``theta``.
    """
    arr = as_square(a)
    z = complex(z)
    scale = _scale(arr)
    if theta is None:
        theta, gap = _exposing_angle(arr, z)
    sd = support_data(arr, theta)
    if abs((np.exp(-1j * theta) * z).real - sd.h) > tol * scale:
        raise ValidationError(f"{z} is not on the supporting line at angle {theta:.6f}; interior points are unsupported")
    t = (np.exp(-1j * theta) * z).imag
    dim = int(np.sum(np.abs(sd.t_spectrum - t) <= tol * scale))
    if dim == 0:
        raise ValidationError(f"{z} is not an extreme boundary point")
    return GeneratorInfo(SINGLY if dim == 1 else MULTIPLY, dim, float(theta))


def _segment_distance(z: complex, z1: complex, z2: complex) -> float:
    d = z2 - z1
    if abs(d) == 0:
        return abs(z - z1)
    s = np.clip(((z - z1) * d.conjugate()).real / abs(d) ** 2, 0.0, 1.0)
    return abs(z - (z1 + s * d))


def classify_point(atlas: BoundaryAtlas, z, angle_tol: float | None = None, tol: float = ON_BOUNDARY_TOL) -> BoundaryPointClass:
    """Corner, flat-interior or round, plus generator count and the simplicial flag."""
    z = complex(z)
    arr = atlas.matrix
    scale = atlas.scale
    step = 2 * np.pi / atlas.resolution
    if angle_tol is None:
        angle_tol = CORNER_BINS * step
    theta, gap = _exposing_angle(arr, z, grid_angles=atlas.angles, grid_h=atlas.support_values)
    if abs(gap) > tol * scale:
        where = "inside" if gap > 0 else "outside"
        raise ValidationError(f"{z} is not on the boundary (it lies {abs(gap):.3e} {where})")
    excess = (np.exp(-1j * atlas.angles) * z).real - atlas.support_values
    on_line = np.flatnonzero(excess >= -POINT_TOL * scale)
    width = len(on_line) * step
    is_corner = width > angle_tol
    on_flat_interior = on_flat_end = False
    for _, (z1, z2) in atlas.flat_segments:
        if min(abs(z - z1), abs(z - z2)) <= tol * scale:
            on_flat_end = True
        elif _segment_distance(z, z1, z2) <= tol * scale:
            on_flat_interior = True
    if is_corner:
        kind = "corner"
        # middle of the exposing interval (indices may wrap around 0)
        angs = np.sort(np.mod(atlas.angles[on_line] - atlas.angles[on_line][0] + np.pi, 2 * np.pi))
        theta = float(np.mod(np.median(angs) + atlas.angles[on_line][0] - np.pi, 2 * np.pi))
    elif on_flat_interior:
        kind = "flat-interior"
    else:
        kind = "round"
    if kind == "flat-interior":
        gens = GeneratorInfo(MULTIPLY, 2, theta)
    else:
        gens = generator_count(arr, z, theta)
    return BoundaryPointClass(
        kind=kind,
        generators=gens.kind,
        simplicial=kind != "round",
        generator_dimension=gens.dimension,
        exposing_angles=tuple(float(x) for x in atlas.angles[on_line]),
        on_flat_endpoint=on_flat_end and kind == "round",
    )


# -- unitary reducibility -----------------------------------------------------------------


@dataclass
class Reducibility:
    irreducible: bool
    blocks: list
    conjugator: np.ndarray
    residual: float

    def to_json_obj(self) -> dict:
        return {
            "irreducible": self.irreducible,
            "block_sizes": [int(b.shape[0]) for b in self.blocks],
            "residual": self.residual,
        }


def _split(arr: np.ndarray, rng: np.random.Generator, tol: float) -> list[np.ndarray]:
    """Orthonormal bases of a finest invariant orthogonal decomposition under ``{A, A*}``."""
    d = arr.shape[0]
    if d == 1:
        return [np.eye(1, dtype=complex)]
    comm = commutant_basis([arr])
    if len(comm) == 1:
        return [np.eye(d, dtype=complex)]
    coef = rng.normal(size=len(comm)) + 1j * rng.normal(size=len(comm))
    x = sum(c * m for c, m in zip(coef, comm))
    herm = (x + x.conj().T) / 2
    w, v = jacobi_eigh(herm)
    groups, start = [], 0
    for k in range(1, d + 1):
        if k == d or w[k] - w[k - 1] > tol * (1 + np.abs(w).max()):
            groups.append(v[:, start:k])
            start = k
    if len(groups) == 1:
        return [np.eye(d, dtype=complex)]
    out = []
    for q in groups:
        sub = q.conj().T @ arr @ q
        out += [q @ r for r in _split(sub, rng, tol)]
    return out


def unitary_reducibility(a, seed: int = 20240607, tol: float = 1e-8) -> Reducibility:
    """Split ``A`` into unitarily irreducible blocks.

    A generic (seeded) Hermitian element of the commutant of ``{A, A*}`` has
    eigenspaces that are jointly invariant; blocks are split recursively.
    ``conjugator* A conjugator`` is block diagonal with the returned blocks.
    """
    arr = as_square(a)
    rng = np.random.default_rng(seed)
    bases = _split(arr, rng, tol)
    u = np.column_stack(bases)
    blocks, offdiag, i0 = [], 0.0, 0
    conj = u.conj().T @ arr @ u
    for q in bases:
        k = q.shape[1]
        blocks.append(conj[i0 : i0 + k, i0 : i0 + k].copy())
        mask = np.ones(conj.shape[0], dtype=bool)
        mask[i0 : i0 + k] = False
        offdiag = max(offdiag, float(np.abs(conj[i0 : i0 + k][:, mask]).max(initial=0.0)))
        i0 += k
    if offdiag > tol * _scale(arr):
        raise ValidationError(f"block decomposition failed, off-diagonal residual {offdiag:.3e}")
    return Reducibility(len(blocks) == 1, blocks, u, offdiag)


# -- discontinuity candidates -------------------------------------------------------------


@dataclass
class CandidateReport:
    points: list
    angles: list
    generator_dimensions: list
    irreducible: bool
    bound: int | None
    bound_ok: bool | None
    flagged_fraction: float
    notes: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "points": [[z.real, z.imag] for z in self.points],
            "angles": [float(t) for t in self.angles],
            "generator_dimensions": list(self.generator_dimensions),
            "irreducible": self.irreducible,
            "bound": self.bound,
            "bound_ok": self.bound_ok,
            "flagged_fraction": self.flagged_fraction,
            "notes": list(self.notes),
        }


def _top_gap(arr: np.ndarray, theta: float) -> float:
    w = jacobi_eigh(_re_im(arr, theta)[0])[0]
    return float(w[-1] - w[-2])


def discontinuity_candidates(a, resolution: int = ANGLE_RESOLUTION) -> CandidateReport:
    """Multiply generated round boundary points of ``W(A)``.

    Degenerate top eigenvalues are searched at the grid angles and at refined
    local minima of the top spectral gap between them.  Candidates with a
    scalar compressed imaginary part are multiply generated points; for flat
    angles the endpoints are tested.  Corners are excluded (they are not round).
    """
    arr = as_square(a)
    d = arr.shape[0]
    scale = _scale(arr)
    atlas = boundary_sweep(arr, resolution)
    red = unitary_reducibility(arr)
    notes = []
    if d == 1:
        return CandidateReport([], [], [], True, 0, True, 0.0, ["1x1 matrix: the range is a point"])
    n = resolution
    thetas = 2 * np.pi * np.arange(n) / n
    re, im = _re_im(arr, thetas)
    w, v = jacobi_eigh(re)
    gaps = w[:, -1] - w[:, -2]
    angles = [float(t) for t in thetas[gaps <= DEGENERATE_GAP * scale]]
    for k in range(n):
        g0, gm, gp = gaps[k], gaps[k - 1], gaps[(k + 1) % n]
        if gaps[k] <= DEGENERATE_GAP * scale or not (g0 <= gm and g0 <= gp) or g0 > 0.25 * scale:
            continue
        step = 2 * np.pi / n
        res = minimize_scalar(
            lambda t: _top_gap(arr, t), bounds=(thetas[k] - step, thetas[k] + step), method="bounded", options={"xatol": 1e-13}
        )
        if res.fun <= DEGENERATE_GAP * scale:
            angles.append(float(np.mod(res.x, 2 * np.pi)))
    flagged = 0
    pts, angs, dims = [], [], []
    for th in angles:
        sd = support_data(arr, th, degeneracy_tol=1e-8)
        t = sd.t_spectrum
        cands = [t[0], t[-1]] if t[-1] - t[0] > FLAT_TOL else [float(np.mean(t))]
        hit = False
        for tv in cands:
            dim = int(np.sum(np.abs(t - tv) <= GEN_TOL * scale))
            if dim < 2:
                continue
            z = sd.point(tv)
            excess = (np.exp(-1j * atlas.angles) * z).real - atlas.support_values
            if np.sum(excess >= -POINT_TOL * scale) * 2 * np.pi / n > CORNER_BINS * 2 * np.pi / n:
                continue  # corner, hence simplicial
            hit = True
            if all(abs(z - p) > 1e-6 * scale for p in pts):
                pts.append(z)
                angs.append(th)
                dims.append(dim)
        flagged += hit
    fraction = flagged / n
    if fraction > 0.25:
        notes.append(
            "multiply generated round points fill a boundary arc; the matrix is unitarily reducible "
            "with repeated blocks, a situation where the expectation map can still be open"
        )
    order = np.argsort(angs)
    pts = [pts[i] for i in order]
    angs = [angs[i] for i in order]
    dims = [dims[i] for i in order]
    for i in range(len(angs) - 1):
        if angs[i + 1] - angs[i] < CORNER_BINS * 2 * np.pi / n and fraction <= 0.25:
            notes.append("two candidates are within three angular bins; increase the resolution to separate them")
            break
    bound = bound_ok = None
    if red.irreducible and d <= 5:
        bound = max(0, d - 3)
        bound_ok = len(pts) <= bound
        if not bound_ok:
            msg = f"{len(pts)} multiply generated round points exceed the bound {bound} for irreducible d={d}"
            notes.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return CandidateReport(pts, angs, dims, red.irreducible, bound, bound_ok, fraction, notes)


# -- shapes and the 3x3 analysis ------------------------------------------------------------


def ellipse_of_2x2(b) -> dict:
    """Foci, semi-axes of the elliptical range of a 2x2 matrix."""
    bb = as_square(b)
    if bb.shape != (2, 2):
        raise ValidationError("elliptical range needs a 2x2 matrix")
    lam = np.linalg.eigvals(bb)
    minor2 = max(0.0, float(np.trace(bb.conj().T @ bb).real - np.sum(np.abs(lam) ** 2)))
    minor = np.sqrt(minor2)
    major = np.sqrt(minor2 + abs(lam[0] - lam[1]) ** 2)
    return {"foci": (complex(lam[0]), complex(lam[1])), "major": float(major), "minor": float(minor)}


def _ellipse_position(b, z: complex, tol: float) -> str:
    """'inside', 'boundary' or 'outside' of the elliptical range of ``b``."""
    e = ellipse_of_2x2(b)
    f1, f2 = e["foci"]
    s = abs(z - f1) + abs(z - f2)
    if abs(s - e["major"]) <= tol:
        return "boundary"
    return "inside" if s < e["major"] else "outside"


def conic_fit_residual(points: np.ndarray) -> float:
    """Largest geometric distance of ``points`` from their least-squares conic."""
    p = np.asarray(points, dtype=complex)
    x, y = p.real, p.imag
    c = (x.max() + x.min()) / 2, (y.max() + y.min()) / 2
    span = max(np.ptp(x), np.ptp(y), 1e-300)
    xs, ys = (x - c[0]) / span, (y - c[1]) / span
    m = np.column_stack([xs * xs, xs * ys, ys * ys, xs, ys, np.ones_like(xs)])
    coef = np.linalg.svd(m)[2][-1]
    val = m @ coef
    gx = 2 * coef[0] * xs + coef[1] * ys + coef[3]
    gy = coef[1] * xs + 2 * coef[2] * ys + coef[4]
    return float(np.max(np.abs(val) / np.maximum(np.hypot(gx, gy), 1e-300)) * span)


def range_shape(a, atlas: BoundaryAtlas | None = None) -> tuple[str, bool]:
    """Shape tag of ``W(A)`` and whether the tag is heuristic."""
    arr = as_square(a)
    scale = _scale(arr)
    tol = 1e-8 * scale
    red = unitary_reducibility(arr)
    sizes = sorted(b.shape[0] for b in red.blocks)
    if all(s == 1 for s in sizes):
        ev = np.array([b[0, 0] for b in red.blocks])
        if np.ptp(ev.real) <= tol and np.ptp(ev.imag) <= tol:
            return "point", False
        z0 = ev[0]
        far = ev[np.argmax(np.abs(ev - z0))]
        cross = [((far - z0).conjugate() * (e - z0)).imag for e in ev]
        return ("segment" if max(np.abs(cross)) <= tol * scale else "triangle"), False
    if sizes == [1, 2] or (len(sizes) == 2 and sizes[0] == 1):
        big = next(b for b in red.blocks if b.shape[0] == 2)
        z = complex(next(b for b in red.blocks if b.shape[0] == 1)[0, 0])
        pos = _ellipse_position(big, z, tol)
        return {
            "inside": "ellipse-reducible",
            "outside": "conv-ellipse-plus-exterior-point",
            "boundary": "disk-with-boundary-eigenvalue",
        }[pos], False
    if arr.shape[0] == 2:
        return "ellipse", False
    atlas = boundary_sweep(arr) if atlas is None else atlas
    if atlas.flat_segments:
        return "flat-portion", False
    if conic_fit_residual(atlas.polygon()) <= ELLIPSE_TOL * scale:
        return "ellipse", True
    return "ovular", True


@dataclass
class Analysis3x3:
    shape: str
    shape_heuristic: bool
    reducible: bool
    block_sizes: list
    continuous_everywhere: bool
    discontinuity_points: list
    exceptional_fiber_rank: int | None = None
    exceptional_fiber_dim: int | None = None
    open_state: np.ndarray | None = None
    message: str = ""

    def to_json_obj(self) -> dict:
        out = {
            "shape": self.shape,
            "shape_heuristic": self.shape_heuristic,
            "reducible": self.reducible,
            "block_sizes": self.block_sizes,
            "continuous_everywhere": self.continuous_everywhere,
            "discontinuity_points": [[z.real, z.imag] for z in self.discontinuity_points],
            "exceptional_fiber_rank": self.exceptional_fiber_rank,
            "exceptional_fiber_dim": self.exceptional_fiber_dim,
            "message": self.message,
        }
        if self.open_state is not None:
            out["open_state"] = [[float(x.real), float(x.imag)] for x in self.open_state]
        return out


def analyze_3x3(u1, u2) -> Analysis3x3:
    """Decide where the expectation map of a 3x3 pair fails to be open.

    The only obstruction is a decomposition ``A = B (+) [z]`` with ``z`` on
    the boundary of the elliptical range of ``B``.  Then the inference is
    discontinuous exactly at ``z``; its fiber is the Bloch ball of
    ``span{v1, e}`` (``v1`` generates ``z`` in ``B``, ``e`` spans the 1x1
    block) and the map is open there only at ``v1 v1*``.
    """
    h1 = check_hermitian(u1, "u1")
    h2 = check_hermitian(u2, "u2")
    if h1.shape != (3, 3) or h2.shape != (3, 3):
        raise ValidationError("analyze_3x3 needs 3x3 observables")
    arr = h1 + 1j * h2
    scale = _scale(arr)
    red = unitary_reducibility(arr)
    sizes = sorted(int(b.shape[0]) for b in red.blocks)
    shape, heur = range_shape(arr)
    if shape == "disk-with-boundary-eigenvalue":
        i2 = next(i for i, b in enumerate(red.blocks) if b.shape[0] == 2)
        i1 = 1 - i2 if len(red.blocks) == 2 else None
        offs = np.cumsum([0] + [b.shape[0] for b in red.blocks])
        big = red.blocks[i2]
        z = complex(red.blocks[i1][0, 0])
        # generator of z inside the 2x2 block: top eigenvector at the exposing angle
        theta, _ = _exposing_angle(big, z)
        sd = support_data(big, theta)
        y = sd.eigenspace[:, 0]
        q2 = red.conjugator[:, offs[i2] : offs[i2] + 2]
        v1 = q2 @ y
        v1 = v1 / np.linalg.norm(v1)
        return Analysis3x3(
            shape,
            heur,
            True,
            sizes,
            False,
            [z],
            exceptional_fiber_rank=2,
            exceptional_fiber_dim=3,
            open_state=v1,
            message=(
                f"discontinuous exactly at z = {z.real:.6g}{z.imag:+.6g}i; the fiber is a three-dimensional "
                "Bloch ball on which the expectation map is open only at the pure generator of the 2x2 block"
            ),
        )
    return Analysis3x3(shape, heur, not red.irreducible, sizes, True, [], message="expectation map open everywhere; inference continuous")


# -- faces of 3x3 triples -------------------------------------------------------------------


@dataclass
class FacetFiberReport:
    faces: list

    def to_json_obj(self) -> dict:
        return {"faces": self.faces}


def _sphere_points(n: int, r: int) -> np.ndarray:
    rng = np.random.default_rng(7)
    x = rng.normal(size=(n, r))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def facet_fibers_3x3(u, n_directions: int = 4000, n_samples: int = 64, gap_tol: float = 1e-9) -> FacetFiberReport:
    """Proper exposed faces of ``L(u)`` for ``d = 3`` and the fibers over their relative boundaries.

    Directions with a doubly degenerate top eigenvalue of the pencil are
    located from coordinate directions and from refined local minima of the
    top gap over random directions.  For each such face the pre-image is
    ``M(p M_3 p)`` for a rank-2 ``p`` (a Bloch ball); relative boundary points
    are sampled by maximizing directions inside the face and their fibers are
    checked to be singletons (simple top eigenvalue of the compressed pencil).
    """
    from scipy.optimize import minimize

    from .observables import ObservableSet, affine_dim, face_dim
    from .linalg import Projection

    if not isinstance(u, ObservableSet):
        u = ObservableSet.from_list(u)
    if u.d != 3:
        raise ValidationError("facet_fibers_3x3 needs d = 3")
    mats = u.matrices
    r = u.r
    full = affine_dim(u)
    scale = 1.0 + max(float(np.abs(np.linalg.eigvalsh(m)).max()) for m in mats)

    def gap_of(lam):
        lam = lam / np.linalg.norm(lam)
        w = np.linalg.eigvalsh(np.einsum("k,kij->ij", lam, mats))
        return float(w[-1] - w[-2])

    cands = [s * e for e in np.eye(r) for s in (1.0, -1.0)]
    dirs = _sphere_points(n_directions, r)
    g = np.array([gap_of(x) for x in dirs])
    for idx in np.argsort(g)[: min(40, len(g))]:
        res = minimize(gap_of, dirs[idx], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        cands.append(res.x / np.linalg.norm(res.x))
    faces = []
    seen = []
    for lam in cands:
        if gap_of(lam) > gap_tol * scale:
            continue
        w, v = np.linalg.eigh(np.einsum("k,kij->ij", lam, mats))
        keep = w >= w[-1] - 1e-8 * scale
        if keep.sum() != 2:
            continue
        p = Projection(v[:, keep][:, ::-1])
        pm = p.matrix
        if any(np.linalg.norm(pm - s) < 1e-6 for s in seen):
            continue
        dim = face_dim(u, p)
        if not 0 < dim < full:
            continue
        seen.append(pm)
        comp = u.compressed(p).matrices
        # directions inside the face: traceless parts of the compressed observables
        coords = np.array([[np.trace(c @ x).real for c in comp] for x in _pauli_basis()])  # (3, r)
        rng = np.random.default_rng(11)
        singletons = 0
        samples = 0
        for _ in range(n_samples):
            mu = rng.normal(size=r)
            pen = np.einsum("k,kij->ij", mu, comp)
            if np.linalg.norm(coords @ mu) < 1e-9:
                continue
            ww = np.linalg.eigvalsh(pen)
            samples += 1
            singletons += int(ww[-1] - ww[-2] > 1e-9 * scale)
        faces.append(
            {
                "direction": [float(x) for x in lam],
                "projection_rank": 2,
                "face_dim": int(dim),
                "ball": dim in (1, 2, 3),
                "relative_boundary_samples": samples,
                "singleton_fibers": singletons,
            }
        )
    return FacetFiberReport(faces)


def _pauli_basis() -> list[np.ndarray]:
    return [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]


# -- export -------------------------------------------------------------------------------


def _point_kinds(atlas: BoundaryAtlas) -> list[list[str]]:
    """Cheap per-point tags for export: corner, flat-endpoint or round."""
    scale = atlas.scale
    pts = [z for group in atlas.points for z in group]
    arr = np.array(pts)
    excess = (np.exp(-1j * atlas.angles)[None, :] * arr[:, None]).real - atlas.support_values[None, :]
    counts = np.sum(excess >= -POINT_TOL * scale, axis=1)
    corner = counts > CORNER_BINS
    out, i = [], 0
    for group in atlas.points:
        tags = []
        for _ in group:
            if corner[i]:
                tags.append("corner")
            elif len(group) == 2:
                tags.append("flat-endpoint")
            else:
                tags.append("round")
            i += 1
        out.append(tags)
    return out


def atlas_to_csv(atlas: BoundaryAtlas) -> str:
    lines = ["theta,h,re,im,kind"]
    for th, hv, group, tags in zip(atlas.angles, atlas.support_values, atlas.points, _point_kinds(atlas)):
        for z, tag in zip(group, tags):
            lines.append(f"{th:.12g},{hv:.12g},{z.real:.12g},{z.imag:.12g},{tag}")
    return "\n".join(lines) + "\n"


def atlas_to_svg(
    atlas: BoundaryAtlas, candidates=(), title: str = "numerical range", size: int = 480, annotation: str = ""
) -> str:
    """SVG drawing of the boundary with corners, flats and candidate points marked."""
    poly = atlas.polygon()
    xs, ys = poly.real, poly.imag
    pad = 0.08 * max(np.ptp(xs), np.ptp(ys), 1e-9)
    x0, x1 = xs.min() - pad, xs.max() + pad
    y0, y1 = ys.min() - pad, ys.max() + pad
    s = size / max(x1 - x0, y1 - y0)

    def tr(z):
        return (z.real - x0) * s, (y1 - z.imag) * s

    w = (x1 - x0) * s
    hgt = (y1 - y0) * s + (44 if annotation else 24)
    path = " ".join(f"{a:.2f},{b:.2f}" for a, b in map(tr, poly))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{hgt:.0f}" viewBox="0 0 {w:.2f} {hgt:.2f}">',
        f'<title>{title}</title>',
        f'<polygon points="{path}" fill="#e8eef7" stroke="#1f4e8c" stroke-width="1.5"/>',
    ]
    for _, (z1, z2) in atlas.flat_segments:
        (a1, b1), (a2, b2) = tr(z1), tr(z2)
        parts.append(f'<line x1="{a1:.2f}" y1="{b1:.2f}" x2="{a2:.2f}" y2="{b2:.2f}" stroke="#2a9d3f" stroke-width="3"/>')
    for group, tags in zip(atlas.points, _point_kinds(atlas)):
        for z, tag in zip(group, tags):
            if tag == "corner":
                a, b = tr(z)
                parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="4" fill="#c0392b"/>')
    for z in candidates:
        a, b = tr(complex(z))
        parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="5" fill="none" stroke="#e67e22" stroke-width="2"/>')
    parts.append(
        f'<text x="6" y="{hgt - 6:.0f}" font-family="sans-serif" font-size="12">'
        f"{title}: green = flat portions, red = corners, orange = multiply generated round points</text>"
    )
    if annotation:
        parts.append(
            f'<text x="6" y="{hgt - 26:.0f}" font-family="sans-serif" font-size="12" fill="#8e44ad">{annotation}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text)
