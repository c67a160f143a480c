"""Faces of convex supports, semicontinuity probes, 2D gauges and the skew-cone fixture.

The face of ``alpha`` is the unique face of ``L(u)`` containing ``alpha`` in
its relative interior.  Its pre-image under the expectation map is the state
space of ``p M_d p`` for a projection ``p``, which is what the face-recursive
solver returns as the support of the maximum-entropy state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError
from .inference import DEFAULT_SCHEDULE, SOLVER_TOL, maxent
from .linalg import Projection, jacobi_eigh
from .numrange import BoundaryAtlas, _exposing_angle, support_value
from .observables import FaceDescriptor, ObservableSet, expected_values, face_dim
from .states import check_density

INFINITE_GAUGE = float("inf")
GAUGE_BLOWUP = 1e6
CONE_TOL = 1e-9


# -- faces and semicontinuity --------------------------------------------------------------


def face_of(u: ObservableSet, alpha, tol: float = SOLVER_TOL) -> FaceDescriptor:
    """Face of ``L(u)`` containing ``alpha`` in its relative interior."""
    return maxent(u, alpha, tol=tol).face


@dataclass
class CurveProbe:
    schedule: list
    dims_along: list
    dim_at_limit: int
    lsc_violated: bool
    description: str = "curve"
    ranks_along: list = field(default_factory=list)
    rank_at_limit: int = 0

    def to_json_obj(self) -> dict:
        return {
            "description": self.description,
            "schedule": [float(e) for e in self.schedule],
            "dims_along": list(self.dims_along),
            "dim_at_limit": self.dim_at_limit,
            "lsc_violated": self.lsc_violated,
            "ranks_along": list(self.ranks_along),
            "rank_at_limit": self.rank_at_limit,
        }


def lsc_probe(
    u: ObservableSet,
    curve: Callable[[float], Sequence[float]],
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    description: str = "curve",
) -> CurveProbe:
    """Face dimensions along ``curve(eps)`` versus the face dimension at ``curve(0)``.

    ``lsc_violated`` compares the limit with the minimum over the eventual
    (second) half of the schedule, a finite-sample liminf.  A violation shows
    that the expectation map is not open along the curve; continuity failures
    without a dimension jump need :func:`continuity_probe`.
    """
    eps = [float(e) for e in schedule]
    if len(eps) < 2 or any(e <= 0 for e in eps) or any(x <= y for x, y in zip(eps, eps[1:])):
        raise ValidationError("schedule must be positive and strictly decreasing")
    faces = [face_of(u, curve(e)) for e in eps]
    limit = face_of(u, curve(0.0))
    dims = [f.dim for f in faces]
    tail = dims[len(dims) // 2 :]
    return CurveProbe(eps, dims, limit.dim, limit.dim > min(tail), description, [f.rank for f in faces], limit.rank)


# -- image-face inclusion -------------------------------------------------------------------


@dataclass
class InclusionReport:
    inclusion: bool
    equality: bool | None
    support_rank: int
    face_rank: int
    image_dim: int
    face_dim: int
    max_violation: float
    samples: int

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)


def _chain_levels(u: ObservableSet, chain: list, tol: float = 1e-8) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """For each exposing direction: (basis of the current level, direction, supporting value)."""
    d = u.d
    basis = np.eye(d, dtype=complex)
    out = []
    for lam in chain:
        lam = np.asarray(lam, dtype=float)
        pen = basis.conj().T @ np.einsum("k,kij->ij", lam, u.matrices) @ basis
        w, v = jacobi_eigh((pen + pen.conj().T) / 2)
        out.append((basis, lam, float(w[-1])))
        keep = w >= w[-1] - tol * (1 + np.abs(w).max())
        basis = basis @ v[:, keep]
    return out


def image_face_inclusion_check(
    u: ObservableSet, rho, n_samples: int = 200, seed: int = 0, tol: float = 1e-7
) -> InclusionReport:
    """Check ``E(F(rho)) ⊂ F(E(rho))`` and, for the inferred state, equality of dimensions.

    ``F(rho)`` is the state space of ``q M_d q`` with ``q`` the support of
    ``rho``.  Sampled extreme points ``E(x x*)``, ``x`` in range(q), must lie
    on every supporting hyperplane of the exposure chain of ``F(E(rho))``.
    Equality is tested when ``rho`` coincides with the inferred state.
    """
    arr = check_density(rho)
    w = expected_values(u, arr)
    sol = maxent(u, w)
    face = sol.face
    ev, evec = jacobi_eigh(arr)
    q = evec[:, ev > 1e-9]
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(q.shape[1], n_samples)) + 1j * rng.normal(size=(q.shape[1], n_samples))
    xs = q @ (xs / np.linalg.norm(xs, axis=0))
    levels = _chain_levels(u, face.exposure_chain)
    worst = 0.0
    for x in xs.T:
        for basis, lam, hv in levels:
            y = basis.conj().T @ x
            # a point on the face at this level has no weight outside the level's range
            outside = 1.0 - float(np.vdot(y, y).real)
            val = float(np.vdot(x, np.einsum("k,kij->ij", lam, u.matrices) @ x).real)
            worst = max(worst, abs(val - hv), outside)
    inclusion = bool(worst <= tol * (1 + np.abs(u.matrices).max()))
    img_dim = face_dim(u, Projection(q))
    equality = None
    if np.abs(arr - sol.state).max() <= 1e-6:
        equality = inclusion and img_dim == face.dim
    return InclusionReport(inclusion, equality, q.shape[1], face.rank, img_dim, face.dim, worst, n_samples)


# -- gauge in the plane --------------------------------------------------------------------


def _normal_cone(atlas: BoundaryAtlas, w: complex, tol: float) -> tuple[float, float] | None:
    """Angular interval of outer normals at ``w``; ``None`` for interior points."""
    arr = atlas.matrix
    scale = atlas.scale
    theta, gap = _exposing_angle(arr, w, grid_angles=atlas.angles, grid_h=atlas.support_values)
    if gap > tol * scale:
        return None
    excess = (np.exp(-1j * atlas.angles) * w).real - atlas.support_values
    on = excess >= -1e-9 * scale
    if on.sum() <= 1:
        return theta, theta
    # angles exposing w form one arc; unwrap it around the refined angle
    rel = np.mod(atlas.angles[on] - theta + np.pi, 2 * np.pi) - np.pi
    lo, hi = theta + rel.min(), theta + rel.max()

    def inside(t):
        return support_value(arr, t) - (np.exp(-1j * t) * w).real <= 1e-12 * scale

    step = 2 * np.pi / atlas.resolution
    a, b = hi, hi + step
    for _ in range(50):
        m = 0.5 * (a + b)
        a, b = (m, b) if inside(m) else (a, m)
    hi = a
    a, b = lo - step, lo
    for _ in range(50):
        m = 0.5 * (a + b)
        a, b = (a, m) if inside(m) else (m, b)
    lo = b
    return lo, hi


def _exit_time(atlas: BoundaryAtlas, w: complex, v: complex) -> float:
    """``sup{t >= 0 : w + t v in W}`` from the support function."""
    arr = atlas.matrix
    th = atlas.angles
    den = (np.exp(-1j * th) * v).real
    num = atlas.support_values - (np.exp(-1j * th) * w).real
    ok = den > 1e-300
    if not ok.any():
        return np.inf
    ratio = np.where(ok, num / np.where(ok, den, 1.0), np.inf)
    k = int(np.argmin(ratio))
    best = float(max(ratio[k], 0.0))
    step = 2 * np.pi / atlas.resolution

    def f(t):
        dd = (np.exp(-1j * t) * v).real
        if dd <= 0:
            return 1e300  # finite so the bounded minimizer's parabola steps stay defined
        return (support_value(arr, t) - (np.exp(-1j * t) * w).real) / dd

    res = minimize_scalar(f, bounds=(th[k] - step, th[k] + step), method="bounded", options={"xatol": 1e-13})
    if np.isfinite(res.fun) and res.fun < best:
        best = float(max(res.fun, 0.0))
    return best


def gauge_2d(atlas: BoundaryAtlas, w, v, tol: float = 1e-8) -> float:
    """Gauge of ``W - w`` at ``v``: ``1 / sup{t >= 0 : w + t v in W}``.

    Returns ``INFINITE_GAUGE`` when ``v`` leaves ``W`` immediately.  That case
    is decided from the tangent cone at ``w``: directions strictly inside it
    are feasible, directions strictly outside are not, and directions on its
    edge are feasible only along a flat portion of the boundary.
    """
    w = complex(w)
    v = complex(v)
    if v == 0:
        raise ValidationError("gauge direction must be non-zero")
    scale = atlas.scale
    excess = float(atlas.max_outward_excess(w)[0])
    if excess > tol * scale:
        theta, gap = _exposing_angle(atlas.matrix, w, grid_angles=atlas.angles, grid_h=atlas.support_values)
        if gap < -tol * scale:
            raise ValidationError(f"{w} lies outside the numerical range")
    cone = _normal_cone(atlas, w, tol)
    vhat = v / abs(v)
    if cone is not None:
        lo, hi = cone
        ang = np.angle(vhat)
        # max of cos(theta - ang) over [lo, hi]
        rel = np.mod(ang - lo, 2 * np.pi)
        top = 1.0 if rel <= hi - lo else max(np.cos(lo - ang), np.cos(hi - ang))
        if top > CONE_TOL:
            return INFINITE_GAUGE
        if top >= -CONE_TOL:
            for _, (z1, z2) in atlas.flat_segments:
                for a, b in ((z1, z2), (z2, z1)):
                    if abs(a - w) <= 1e-8 * scale and abs((b - a) / abs(b - a) - vhat) <= 1e-6:
                        return abs(v) / abs(b - a)
            return INFINITE_GAUGE
    t = _exit_time(atlas, w, v)
    if t <= 0:
        return INFINITE_GAUGE
    return 1.0 / t


@dataclass
class GaugeScan:
    bounded: bool
    max_gauge: float
    witness: complex | None
    n_feasible: int

    def to_json_obj(self) -> dict:
        wit = None if self.witness is None else [self.witness.real, self.witness.imag]
        return {"bounded": self.bounded, "max_gauge": self.max_gauge, "witness": wit, "n_feasible": self.n_feasible}


def gauge_boundedness_scan(atlas: BoundaryAtlas, w, n_directions: int = 10_000) -> GaugeScan:
    """Sample unit directions with finite gauge and report whether the gauge stays below 1e6.

    Half of the directions are equally spaced; the other half approach the
    edges of the feasible cone geometrically (offsets 1 down to 1e-12 rad),
    which is where an unbounded gauge shows up.
    """
    w = complex(w)
    cone = _normal_cone(atlas, w, 1e-8)
    n_uniform = n_directions // 2
    angles = list(2 * np.pi * (np.arange(n_uniform) + 0.5) / n_uniform)
    if cone is not None:
        lo, hi = cone
        edges = (hi + np.pi / 2, lo - np.pi / 2 + 2 * np.pi)  # tangent-cone edges
        offs = np.logspace(0, -12, (n_directions - n_uniform) // 2)
        angles += list(edges[0] + offs) + list(edges[1] - offs)
    angles = np.asarray(angles)
    vs = np.exp(1j * angles)
    feasible = np.ones(len(vs), dtype=bool)
    if cone is not None:
        lo, hi = cone
        rel = np.mod(angles - lo, 2 * np.pi)
        top = np.where(rel <= hi - lo, 1.0, np.maximum(np.cos(lo - angles), np.cos(hi - angles)))
        # keep a margin so that gauge_2d's own cone test agrees on every scanned direction
        feasible = top < -10 * CONE_TOL
    # grid over-estimates exit times; refine only the directions that matter
    rot = np.exp(-1j * atlas.angles)
    num = atlas.support_values - (rot * w).real
    den = (np.outer(vs, rot)).real
    ratio = np.where(den > 1e-300, num / np.where(den > 1e-300, den, 1.0), np.inf).min(axis=1)
    approx = np.where(ratio > 0, 1.0 / np.maximum(ratio, 1e-300), np.inf)
    approx[~feasible] = -np.inf
    best, witness, refined = 0.0, None, 0
    for k in np.argsort(approx)[::-1]:
        if not feasible[k] or refined == 8:
            break
        g = gauge_2d(atlas, w, complex(vs[k]))
        if not np.isfinite(g):
            continue
        refined += 1
        if g > best:
            best, witness = g, complex(vs[k])
    return GaugeScan(bool(best <= GAUGE_BLOWUP), float(best), witness, int(feasible.sum()))


# -- skew cone --------------------------------------------------------------------------------


class SkewConeFixture:
    """Convex hull of the circle ``(s - 1)^2 + t^2 = 1, z = 0`` and the apices ``(0, 0, ±1)``.

    Its horizontal slice at height ``z`` is the disk of radius ``1 - |z|``
    centred at ``(1 - |z|, 0)``; all slices touch the ``z``-axis, so the
    origin is the midpoint of the boundary segment between the apices.
    """

    TOL = 1e-12
    APICES = (np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))

    def _slack(self, p) -> float:
        s, t, z = (float(x) for x in p)
        r = 1.0 - abs(z)
        if r < -self.TOL:
            return -np.inf
        return r * r - ((s - r) ** 2 + t * t)

    def contains(self, p) -> bool:
        return self._slack(p) >= -self.TOL

    def on_boundary(self, p) -> bool:
        s, t, z = (float(x) for x in p)
        return self.contains(p) and (abs(self._slack(p)) <= self.TOL or abs(abs(z) - 1) <= self.TOL)

    def is_extremal(self, p) -> bool:
        s, t, z = (float(x) for x in p)
        if not self.contains(p):
            raise ValidationError(f"{p} is outside the skew cone")
        if abs(abs(z) - 1) <= self.TOL:
            return True
        return abs(z) <= self.TOL and abs(self._slack(p)) <= self.TOL and abs(s) > self.TOL

    def face_dim(self, p) -> int:
        """0 at extreme points, 1 on boundary segments (apex to circle, or apex to apex), 3 inside."""
        if not self.contains(p):
            raise ValidationError(f"{p} is outside the skew cone")
        if self.is_extremal(p):
            return 0
        if self.on_boundary(p):
            return 1
        return 3

    @staticmethod
    def circle_point(phi: float) -> np.ndarray:
        return np.array([1.0 + np.cos(phi), np.sin(phi), 0.0])

    def sample_extreme_points(self, n: int) -> np.ndarray:
        phi = np.pi + 2 * np.pi * (np.arange(n) + 0.5) / n  # never hits the origin (phi = pi)
        circ = np.column_stack([1 + np.cos(phi), np.sin(phi), np.zeros(n)])
        return np.vstack([circ, self.APICES[0], self.APICES[1]])


def skew_cone_face_dim(point) -> int:
    return SkewConeFixture().face_dim(point)
