"""End-to-end reproduction of the reference examples against stored golden values."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import fixtures
from .correlation import (
    c3,
    density_from_vector,
    ghz_vector,
    h_epsilon_model,
    marginal_ab_closed_form,
    marginal_ab_eigenvalues,
    phi_vector,
)
from .errors import ValidationError
from .faces import SkewConeFixture, lsc_probe
from .inference import continuity_probe, maxent
from .numrange import analyze_3x3, discontinuity_candidates
from .observables import ObservableSet
from .states import trace_distance

REPRODUCIBLE = ("example-5-2", "thm-3x3", "ghz", "h-epsilon", "disk-4x4", "skew-cone")


def load_golden() -> dict:
    text = resources.files("qmaxent").joinpath("data/golden.json").read_text()
    return json.loads(text)


@dataclass
class Check:
    name: str
    value: object
    expected: object
    tol: float | None
    ok: bool

    def to_json_obj(self) -> dict:
        return {"name": self.name, "value": _plain(self.value), "expected": _plain(self.expected), "tol": self.tol, "ok": self.ok}


@dataclass
class Reproduction:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name, value, expected, tol=None, ok=None) -> None:
        if ok is None:
            if tol is None:
                ok = value == expected
            else:
                ok = bool(np.max(np.abs(np.asarray(value, dtype=complex) - np.asarray(expected, dtype=complex))) <= tol)
        self.checks.append(Check(name, value, expected, tol, bool(ok)))

    def to_json_obj(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": [c.to_json_obj() for c in self.checks]}


def _plain(x):
    if isinstance(x, np.ndarray):
        x = x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _example_5_2(g: dict) -> Reproduction:
    rep = Reproduction("example-5-2")
    u = fixtures.example_5_2_observables()
    a0 = fixtures.example_5_2_alpha(2.0**-40)
    rep.add("alpha(eps) -> alpha0", a0, g["alpha0"]["value"], g["alpha0"]["tol"])
    sol = maxent(u, g["alpha0"]["value"])
    rep.add("rho*(alpha0) diagonal", np.diag(sol.state).real, g["rho_star_alpha0_diag"]["value"], g["rho_star_alpha0_diag"]["tol"])
    ref = np.diag(g["rho_star_alpha0_diag"]["value"])
    rep.add("rho*(alpha0) trace distance", trace_distance(sol.state, ref), 0.0, g["rho_star_alpha0_diag"]["tol"])
    curve = fixtures.named_curve("example-5-2")
    cont = continuity_probe(u, curve.target, curve.curve, description=curve.description)
    rep.add("continuity gap", cont.gap_trace_distance, g["gap"]["value"], g["gap"]["tol"])
    rep.add("entropy jump", cont.entropy_jump, g["entropy_jump"]["value"], g["entropy_jump"]["tol"])
    lsc = lsc_probe(u, curve.curve)
    rep.add("face dimension at the limit", lsc.dim_at_limit, g["dim_at_limit"]["value"])
    rep.add("face dimensions along the curve", max(lsc.dims_along), g["dims_along"]["value"])
    rep.add("lsc violated", lsc.lsc_violated, True)
    return rep


def _thm_3x3(g: dict) -> Reproduction:
    rep = Reproduction("thm-3x3")
    a = fixtures.thm_3x3_matrix()
    u = ObservableSet.from_matrix(a)
    an = analyze_3x3(u[0], u[1])
    exp = [complex(*z) for z in g["candidates"]["value"]]
    ok = len(an.discontinuity_points) == len(exp) and all(
        min(abs(z - e) for z in an.discontinuity_points) <= g["candidates"]["tol"] for e in exp
    )
    rep.add("discontinuity points", an.discontinuity_points, exp, g["candidates"]["tol"], ok)
    cand = discontinuity_candidates(a)
    ok = len(cand.points) == len(exp) and all(min(abs(z - e) for z in cand.points) <= g["candidates"]["tol"] for e in exp)
    rep.add("candidate scan", cand.points, exp, g["candidates"]["tol"], ok)
    rho1 = maxent(u, [1.0, 0.0]).state
    rep.add("rho*(1)", rho1, g["rho_star_1"]["value"], g["rho_star_1"]["tol"])
    for phi in g["rho_star_angles"]["value"]:
        z = np.exp(1j * phi)
        st = maxent(u, [z.real, z.imag]).state
        rep.add(f"rho*(exp(i {phi:.4f}))", st, fixtures.thm_3x3_rho_star(z), g["rho_star_angles"]["tol"])
    rep.add("exceptional fiber dimension", an.exceptional_fiber_dim, g["exceptional_fiber_dim"]["value"])
    return rep


def _ghz(g: dict) -> Reproduction:
    rep = Reproduction("ghz")
    tol = g["c3"]["tol"]
    for key, ref in g["c3"]["value"].items():
        p = float(key)
        val = c3(density_from_vector(ghz_vector(np.sqrt(p))))
        rep.add(f"C3(psi), |alpha|^2 = {key}", val, ref, tol)
    bound = g["c3_phi_max"]["value"]
    for gam in g["c3_phi_max"]["gammas"]:
        val = c3(density_from_vector(phi_vector(np.sqrt(0.5), gam)))
        rep.add(f"C3(phi(gamma)), gamma = {gam}", val, bound, None, abs(val) < bound)
    return rep


def _h_epsilon(g: dict) -> Reproduction:
    rep = Reproduction("h-epsilon")
    tol = g["marginal_tol"]["value"]
    for key, ref in g["lambda"]["value"].items():
        m = h_epsilon_model(float(key))
        rep.add(f"lambda_max at eps = {key}", m.lam, ref, g["lambda"]["tol"])
        rep.add(f"AB marginal at eps = {key}", m.marginal_ab, marginal_ab_closed_form(m.s), tol)
        ev = np.sort(np.linalg.eigvalsh(m.marginal_ab))
        rep.add(f"AB marginal spectrum at eps = {key}", ev, [0.0, 0.0] + sorted(marginal_ab_eigenvalues(m.s)), tol)
    rep.add("s at eps = 1", h_epsilon_model(1.0).s, g["s_at_1"]["value"], g["s_at_1"]["tol"])
    return rep


def _disk_4x4(g: dict) -> Reproduction:
    rep = Reproduction("disk-4x4")
    n = g["max_gap"]["base_points"]
    gaps = []
    for k in range(n):
        phi = 2 * np.pi * k / n
        curve = fixtures.named_curve("disk-4x4", phi)
        gaps.append(continuity_probe(curve.observables, curve.target, curve.curve).gap_trace_distance)
    rep.add("largest gap along the circle", max(gaps), g["max_gap"]["value"], g["max_gap"]["tol"])
    return rep


def _skew_cone(g: dict) -> Reproduction:
    rep = Reproduction("skew-cone")
    body = SkewConeFixture()
    for point, dim in g["face_dims"]["value"]:
        rep.add(f"face dimension at {tuple(point)}", body.face_dim(point), dim)
    return rep


_RUNNERS = {
    "example-5-2": _example_5_2,
    "thm-3x3": _thm_3x3,
    "ghz": _ghz,
    "h-epsilon": _h_epsilon,
    "disk-4x4": _disk_4x4,
    "skew-cone": _skew_cone,
}


def reproduce(name: str) -> Reproduction:
    if name not in _RUNNERS:
        raise ValidationError(f"unknown example {name!r}; known: {list(REPRODUCIBLE)}")
    return _RUNNERS[name](load_golden()[name])
