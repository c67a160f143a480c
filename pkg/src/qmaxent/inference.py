"""Maximum-entropy inference under expected-value constraints.

For a target ``alpha`` the inference ``rho*(alpha)`` is the unique state of
largest von Neumann entropy among all states with ``E(rho) = alpha``.  In the
relative interior of ``L(u)`` it has the Gibbs form ``exp(u(theta)) / Z`` and
``theta`` minimizes the convex dual

    psi(theta) = ln tr exp(u(theta)) - theta . alpha.

On the relative boundary the dual has no minimizer: Newton iterates run off to
infinity while some eigenvalues of the Gibbs state die out.  The surviving
support projection ``p`` spans the state-space face that contains the fiber,
so the problem is compressed to ``p M_d p`` and solved again there.  The rank
strictly decreases, which bounds the recursion depth by ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InfeasibleError, SolverError, ValidationError

from .linalg import Projection, jacobi_eigh, null_space
from .observables import (
    pencil,
    WHOLE_BODY,
    FaceDescriptor,
    ObservableSet,
    affine_dim,
    coordinate_map,
    expected_values,
    face_dim,
    traceless_hermitian_basis,
)
from .states import trace_distance, von_neumann_entropy

THETA_MAX = 1e4
GAP_TOL = 1e-4
SOLVER_TOL = 1e-10
HESS_REG = 1e-12
SUPPORT_TOL = 1e-9  # Gibbs weights kept in the face projection at escape
WEIGHT_SUSPECT = 1e-6  # converged weights below this are followed further
MAX_POLISH = 60
PURE_TOL = 1e-10  # residual accepted for a pure state in the fiber
PURE_GAP_TOL = 1e-14  # relative top gap certifying a pure exposed point
RANK_TOL = 1e-8
FEAS_TOL = 1e-8
MAX_NEWTON = 300

STATUS_INTERIOR = "interior"
STATUS_FACE = "face-compressed"
STATUS_SINGLETON = "singleton-fiber"


# -- dual function -------------------------------------------------------------


def _gibbs(mats: np.ndarray, theta: np.ndarray):
    """Spectral data of ``exp(u(theta))`` with the top eigenvalue shifted to 0."""
    h = np.einsum("k,kij->ij", theta, mats)
    w, v = jacobi_eigh(h)
    top = w[-1]
    e = np.exp(w - top)
    z = e.sum()
    return w, v, e, z, top


def _dual_terms(mats: np.ndarray, theta: np.ndarray, hessian: bool = True):
    w, v, e, z, top = _gibbs(mats, theta)
    value = top + np.log(z)
    weights = e / z
    # observables in the eigenbasis of u(theta)
    ut = np.einsum("ji,kjl,lm->kim", v.conj(), mats, v)
    grad = np.einsum("kii,i->k", ut, weights).real
    hess = None
    if hessian:
        # Daleckii-Krein divided differences of exp: plain quotient for wide
        # gaps, e_lo * expm1(gap) / gap for close eigenvalues
        gap = np.abs(w[:, None] - w[None, :])
        e_lo = np.minimum(e[:, None], e[None, :])
        close = gap < 1.0
        g_safe = np.where(gap > 1e-300, gap, 1.0)
        near = e_lo * np.where(gap > 1e-12, np.expm1(np.where(close, gap, 0.0)) / g_safe, 1.0)
        far = np.abs(e[:, None] - e[None, :]) / g_safe
        f = np.where(close, near, far)
        hess = np.einsum("akl,bkl,kl->ab", ut.conj(), ut, f).real / z
        hess = 0.5 * (hess + hess.T) - np.outer(grad, grad)
    state = (v * weights) @ v.conj().T
    return value, grad, hess, state, weights


def log_partition(u: ObservableSet, theta) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of ``theta -> ln tr exp(u(theta))``.

    The gradient is ``E(rho(theta))`` for the Gibbs state ``rho(theta)``; the
    Hessian is the Kubo-Mori covariance of the observables, assembled from the
    divided-difference formula for the derivative of the matrix exponential.
    """
    t = np.asarray(theta, dtype=float).ravel()
    if t.shape != (u.r,):
        raise ValidationError(f"theta must have length {u.r}")
    if not np.all(np.isfinite(t)):
        raise ValidationError("theta must be finite")
    value, grad, hess, _, _ = _dual_terms(u.matrices, t)
    return float(value), grad, hess


def gibbs_state(u: ObservableSet, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float).ravel()
    return _dual_terms(u.matrices, t, hessian=False)[3]


# -- result types --------------------------------------------------------------


@dataclass
class DualState:
    """Dual point ``theta`` with its Gibbs state and the dual gradient ``E(state) - alpha``."""

    theta: np.ndarray
    state: np.ndarray
    gradient: np.ndarray
    value: float


@dataclass
class BoundaryEscape:
    """Newton ran toward the relative boundary; ``support`` spans the surviving weights."""

    direction: np.ndarray
    support: Projection
    theta: np.ndarray
    iterations: int
    reason: str
    state: np.ndarray


@dataclass
class MaxEntSolution:
    state: np.ndarray
    status: str
    face: FaceDescriptor | None
    dual: DualState | None
    constraint_residual: float
    iterations: int
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @cached_property
    def entropy(self) -> float:
        return von_neumann_entropy(self.state)

    @property
    def rank(self) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.state) > SUPPORT_TOL))

    def to_json_obj(self) -> dict:
        from .observables import matrix_to_pairs

        return {
            "status": self.status,
            "alpha": [float(x) for x in self.alpha],
            "dim": int(self.state.shape[0]),
            "entries": matrix_to_pairs(self.state),
            "entropy": self.entropy,
            "face_rank": None if self.face is None else self.face.rank,
            "face": None if self.face is None else self.face.to_json_obj(),
            "constraint_residual": self.constraint_residual,
            "iterations": self.iterations,
            "theta": None if self.dual is None else [float(x) for x in self.dual.theta],
        }


# -- reduction to an orthonormal traceless basis --------------------------------


@dataclass
class _Reduced:
    """Observables rewritten as ``c_i 1 + sum_j C_ij B_j`` with orthonormal traceless ``B_j``."""

    basis: np.ndarray  # (k, d, d)
    coeff: np.ndarray  # (r, k)
    offset: np.ndarray  # (r,)
    target: np.ndarray  # (k,) expected values of the B_j
    residual: float  # distance of alpha from the affine span of L(u)


def _reduce(u: ObservableSet, alpha: np.ndarray) -> _Reduced:
    d = u.d
    offset = np.einsum("kii->k", u.matrices).real / d
    herm = traceless_hermitian_basis(d)
    m = coordinate_map(u)  # (r, d^2 - 1)
    if m.size:
        uu, s, vt = np.linalg.svd(m, full_matrices=False)
        k = int(np.sum(s >= RANK_TOL))
    else:
        k = 0
    beta = alpha - offset
    if k == 0:
        return _Reduced(np.zeros((0, d, d), complex), np.zeros((u.r, 0)), offset, np.zeros(0), float(np.max(np.abs(beta))))
    uu, s, vt = uu[:, :k], s[:k], vt[:k]
    basis = np.einsum("jb,bxy->jxy", vt, herm)
    coeff = uu * s
    target, *_ = np.linalg.lstsq(coeff, beta, rcond=None)
    residual = float(np.max(np.abs(coeff @ target - beta)))
    return _Reduced(basis, coeff, offset, target, residual)


def _feas_scale(u: ObservableSet) -> float:
    return 1.0 + float(np.max(np.abs(u.matrices)))


# -- interior Newton ------------------------------------------------------------


def _newton(mats: np.ndarray, target: np.ndarray, tol: float, max_iter: int = MAX_NEWTON):
    """Damped Newton on the reduced dual.

    Returns ``("interior", theta, iters, terms)``, ``("escape", theta, iters, terms, reason)``
    or raises :class:`InfeasibleError`.
    """
    k = mats.shape[0]
    theta = np.zeros(k)
    value, g, hess, state, weights = _dual_terms(mats, theta)
    psi = value - theta @ target
    stall = 0
    prev_gn = np.inf
    polish = 0
    for it in range(1, max_iter + 1):
        grad = g - target
        gn = float(np.max(np.abs(grad)))
        wmin = float(weights.min())
        if psi < -1e-9:
            raise InfeasibleError(f"dual value {psi:.3e} < 0 certifies that the target lies outside the convex support")
        if gn <= tol:
            # near a face the gradient shrinks with the dying weights; keep
            # going until those weights separate clearly from the support
            dying = wmin < WEIGHT_SUSPECT
            if not dying or polish >= MAX_POLISH or gn > 0.9 * prev_gn or gn < 1e-15:
                if wmin > SUPPORT_TOL:
                    return "interior", theta, it, (value, g, hess, state, weights)
                return "escape", theta, it, (value, g, hess, state, weights), "converged-with-vanishing-weights"
            polish += 1
        prev_gn = gn
        if np.linalg.norm(theta) > THETA_MAX:
            return "escape", theta, it, (value, g, hess, state, weights), "theta-norm"
        h = hess + HESS_REG * np.eye(k)
        try:
            step = -np.linalg.solve(h, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(h, grad, rcond=None)[0]
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        t = 1.0
        accepted = None
        fallback = None
        while t > 1e-12:
            cand = theta + t * step
            terms = _dual_terms(mats, cand)
            cpsi = terms[0] - cand @ target
            if cpsi <= psi + 1e-4 * t * slope:
                accepted = (cand, terms, cpsi)
                break
            # roundoff can hide a genuine decrease of psi; accept a smaller gradient instead
            if fallback is None and np.max(np.abs(terms[1] - target)) < gn and cpsi <= psi + 1e-12 * (1 + abs(psi)):
                fallback = (cand, terms, cpsi)
            t *= 0.5
        if accepted is None:
            accepted = fallback
        if accepted is None:
            stall += 1
            if stall >= 3:
                return "escape", theta, it, (value, g, hess, state, weights), "stalled"
            continue
        theta, (value, g, hess, state, weights), psi = accepted
    return "escape", theta, max_iter, (value, g, hess, state, weights), "iteration-limit"


def _support_projection(state: np.ndarray, weights_floor: float = SUPPORT_TOL) -> Projection:
    w, v = jacobi_eigh(state)
    keep = w >= weights_floor
    if not np.any(keep):
        keep = w >= w[-1]
    return Projection(v[:, keep][:, ::-1])


def maxent_interior(u: ObservableSet, alpha, tol: float = SOLVER_TOL) -> DualState | BoundaryEscape:
    """Interior dual Newton solve.

    Returns a :class:`DualState` whose ``theta`` is expressed in the original
    observable coordinates when ``alpha`` lies in the relative interior, and a
    :class:`BoundaryEscape` otherwise.  Raises :class:`InfeasibleError` when
    ``alpha`` is certified to lie outside ``L(u)``.
    """
    a = _check_alpha(u, alpha)
    red = _reduce(u, a)
    if red.residual > FEAS_TOL * _feas_scale(u):
        raise InfeasibleError(f"target is {red.residual:.3e} away from the affine hull of the convex support")
    d = u.d
    if red.basis.shape[0] == 0:
        state = np.eye(d, dtype=complex) / d
        return DualState(np.zeros(u.r), state, expected_values(u, state) - a, float(np.log(d)))
    out = _newton(red.basis, red.target, tol)
    theta_red = out[1]
    theta = _lift_theta(red, theta_red)
    if out[0] == "interior":
        value, g, _, state, _ = out[3]
        return DualState(theta, state, expected_values(u, state) - a, float(value - theta_red @ red.target))
    state = out[3][3]
    support = _support_projection(state)
    if support.rank == d:
        # the weights were small but no eigenvalue actually vanished
        value = out[3][0]
        return DualState(theta, state, expected_values(u, state) - a, float(value - theta_red @ red.target))
    nrm = np.linalg.norm(theta)
    direction = theta / nrm if nrm > 0 else theta
    return BoundaryEscape(direction, support, theta, out[2], out[4], state)


def _lift_theta(red: _Reduced, theta_red: np.ndarray) -> np.ndarray:
    """Original-coordinate ``theta`` with ``sum_i theta_i u_i = sum_j theta_red_j B_j + c 1``."""
    if theta_red.size == 0:
        return np.zeros(red.coeff.shape[0])
    sol, *_ = np.linalg.lstsq(red.coeff.T, theta_red, rcond=None)
    return sol


def _check_alpha(u: ObservableSet, alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float).ravel()
    if a.shape != (u.r,):
        raise ValidationError(f"alpha must have length {u.r}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("alpha must be finite")
    return a


# -- exposure certificate ---------------------------------------------------------


def exposing_direction(
    u: ObservableSet,
    p: Projection,
    hint: np.ndarray | None = None,
    gap_tol: float = 1e-12,
    null_rtol: float = 1e-6,
):
    """A unit ``lam`` whose pencil has ``p`` as its top spectral projection, or ``None``.

    Candidates come from ``{lam : p u(lam) p scalar, p u(lam) (1-p) = 0}``
    (solved with a loose null-space tolerance since ``p`` is itself
    approximate).  The hint, typically the normalized escape direction, is
    projected onto that space first; otherwise fixed basis combinations are
    tried.  A candidate is accepted when the top ``rank(p)`` eigenvectors of
    ``u(lam)`` span ``range(p)`` within 1e-6 and are separated from the rest
    of the spectrum by more than ``gap_tol`` (relative to the pencil norm).
    """
    d, m = u.d, p.rank
    if m == d:
        return None
    q = p.basis
    comp = np.linalg.svd(q, full_matrices=True)[0][:, m:]
    herm = traceless_hermitian_basis(m)
    rows = []
    for a in u.matrices:
        pb = q.conj().T @ a @ q
        cross = q.conj().T @ a @ comp
        row = [np.einsum("bij,ji->b", herm, pb).real] if herm.shape[0] else []
        row += [cross.real.ravel(), cross.imag.ravel()]
        rows.append(np.concatenate(row))
    ns = null_space(np.array(rows).T, rtol=null_rtol).real
    if ns.shape[1] == 0:
        return None

    def certified(lam):
        mat = np.einsum("k,kij->ij", lam, u.matrices)
        w, v = jacobi_eigh(mat)
        scale = 1.0 + float(np.max(np.abs(w)))
        gap = (w[d - m] - w[d - m - 1]) / scale
        spread = (w[-1] - w[d - m]) / scale
        top = v[:, d - m:]
        overlap = np.linalg.svd(q.conj().T @ top, compute_uv=False)
        ok = gap > gap_tol and spread < 0.5 * gap and np.min(overlap) > 1 - 1e-6
        return ok, gap

    cands = []
    if hint is not None:
        proj = ns @ (ns.T @ np.asarray(hint, dtype=float))
        if np.linalg.norm(proj) > 1e-12:
            cands.append(proj / np.linalg.norm(proj))
    for j in range(ns.shape[1]):
        cands += [ns[:, j], -ns[:, j]]
    best, best_gap = None, 0.0
    for i, lam in enumerate(cands):
        ok, gap = certified(lam)
        if ok and i == 0 and hint is not None:
            return lam
        if ok and gap > best_gap:
            best, best_gap = lam, gap
    return best


def _pure_fit(u: ObservableSet, alpha: np.ndarray, starts: list[np.ndarray]) -> np.ndarray | None:
    """Unit vector ``x`` with ``E(x x*) = alpha`` by nonlinear least squares, or ``None``."""
    d = u.d
    mats = u.matrices
    scale = _feas_scale(u)

    def resid(y):
        z = y[:d] + 1j * y[d:]
        return np.einsum("i,kij,j->k", z.conj(), mats, z).real / np.vdot(z, z).real - alpha

    best = None
    for x0 in starts:
        y0 = np.concatenate([x0.real, x0.imag])
        sol = least_squares(resid, y0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        err = float(np.max(np.abs(sol.fun)))
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err <= PURE_TOL * scale:
            break
    if best is None or best[0] > PURE_TOL * scale:
        return None
    z = best[1][:d] + 1j * best[1][d:]
    return z / np.linalg.norm(z)


def _exposed_pure(u: ObservableSet, alpha: np.ndarray, lam0: np.ndarray, max_iter: int = 200):
    """Minimize ``h(lam) - lam . alpha`` on the slice ``lam . n = 1``, ``n = lam0 / |lam0|``.

    At a minimizer with a simple top eigenvalue the top eigenvector ``y``
    satisfies ``E(y y*) = alpha``.  Returns ``(y, lam, gap, residual)`` for
    the best iterate; ``y`` is ``None`` if the top eigenvalue never separated.
    """
    mats = u.matrices
    n = lam0 / np.linalg.norm(lam0)
    b = np.linalg.svd(n[None, :])[2][1:].T  # orthonormal basis of n-perp, (r, r-1)
    t = np.zeros(b.shape[1])

    def evaluate(tv):
        lam = n + b @ tv
        w, v = jacobi_eigh(np.einsum("k,kij->ij", lam, mats))
        return lam, w, v, w[-1] - lam @ alpha

    lam, w, v, f = evaluate(t)
    best = None
    stalled = 0
    for _ in range(max_iter):
        y = v[:, -1]
        uy = np.einsum("kij,j->ki", mats, y)
        ev = np.einsum("i,ki->k", y.conj(), uy).real
        res = ev - alpha
        gap = w[-1] - w[-2]
        err = float(np.max(np.abs(res)))
        if best is None or err < 0.9 * best[3]:
            stalled = 0
        else:
            stalled += 1
        if best is None or err < best[3]:
            best = (y, lam, gap, err)
        if err <= 1e-3 * PURE_TOL or b.shape[1] == 0 or stalled >= 6:
            break
        grad = b.T @ res
        # second-order perturbation of the top eigenvalue
        c = np.einsum("ik,ji->jk", v[:, :-1].conj(), uy)  # <e_k|u_j|y>, shape (r, d-1)
        denom = np.maximum(w[-1] - w[:-1], 1e-300)
        hess = 2.0 * np.einsum("ik,jk,k->ij", c.conj(), c, 1.0 / denom).real
        hb = b.T @ hess @ b
        step = -np.linalg.lstsq(hb + 1e-14 * np.trace(hb) * np.eye(len(t)), grad, rcond=None)[0]
        slope = grad @ step
        if not slope < 0:
            break
        moved = False
        eta = 1.0
        gnorm = np.linalg.norm(grad)
        for _ in range(30):
            cand = evaluate(t + eta * step)
            # near the optimum f only moves at roundoff level; the gradient still does
            if cand[3] <= f + 1e-4 * eta * slope or _slice_grad(mats, b, cand, alpha) < 0.5 * gnorm:
                t = t + eta * step
                lam, w, v, f = cand
                moved = True
                break
            eta *= 0.5
        if not moved:
            break
    return best


def _slice_grad(mats: np.ndarray, b: np.ndarray, cand, alpha: np.ndarray) -> float:
    y = cand[2][:, -1]
    ev = np.einsum("i,kij,j->k", y.conj(), mats, y).real
    return float(np.linalg.norm(b.T @ (ev - alpha)))


def _pure_shortcut(u: ObservableSet, alpha: np.ndarray, esc: "BoundaryEscape", gap_tol: float):
    """A pure state that is the only state with expected values ``alpha``, or ``None``.

    Accepts a unit ``x`` with ``E(x x*) = alpha`` (within ``PURE_TOL``) that is
    the simple top eigenvector of a pencil ``u(lam)``: every state in the fiber
    then has ``lam``-energy within the residual of the top eigenvalue, hence
    lives on ``x`` up to residual / gap.  Tries the exposing-direction
    minimization first, then a direct least-squares fit.  Returns ``(x, lam)``.
    """
    if u.d < 2:
        return None
    scale = _feas_scale(u)
    y, lam, gap, err = _exposed_pure(u, alpha, esc.direction)
    for _ in range(3):  # re-centering the slice on the current iterate helps with tiny gaps
        if err <= PURE_TOL * scale:
            break
        cand = _exposed_pure(u, alpha, lam)
        if cand[3] >= err:
            break
        y, lam, gap, err = cand
    top = 1.0 + float(np.max(np.abs(jacobi_eigh(pencil(u, lam))[0])))
    if err <= PURE_TOL * scale and gap > gap_tol * top:
        return y, lam / np.linalg.norm(lam)
    x = _pure_fit(u, alpha, _pure_starts(esc.state))
    if x is None:
        return None
    lam = exposing_direction(u, Projection(x[:, None]), esc.direction, gap_tol=gap_tol)
    if lam is None:
        return None
    return x, lam


def _pure_starts(state: np.ndarray) -> list[np.ndarray]:
    w, v = jacobi_eigh(state)
    order = np.argsort(w)[::-1]
    starts = [v[:, j] for j in order[:3] if w[j] > 1e-6]
    mix = v[:, order[:3]] @ np.sqrt(np.clip(w[order[:3]], 0, None))
    if np.linalg.norm(mix) > 0:
        starts.insert(1, mix / np.linalg.norm(mix))
    return starts


# -- full solver ------------------------------------------------------------------


def maxent(
    u: ObservableSet,
    alpha,
    tol: float = SOLVER_TOL,
    degeneracy_tol: float = 1e-8,
    max_depth: int | None = None,
) -> MaxEntSolution:
    """Maximum-entropy state with expected values ``alpha``.

    Parameters
    ----------
    u : ObservableSet
    alpha : array_like, shape (r,)
    tol : float
        Dual gradient tolerance (infinity norm).
    degeneracy_tol : float
        Tolerance used when certifying exposing directions of faces.
    """
    a = _check_alpha(u, alpha)
    d = u.d
    depth_cap = d if max_depth is None else max_depth
    basis = np.eye(d, dtype=complex)  # isometry from the current compressed space
    current = u
    chain: list[np.ndarray] = []
    certified = True
    iterations = 0
    for _ in range(depth_cap + 1):
        res = maxent_interior(current, a, tol)
        if isinstance(res, DualState):
            iterations += 1
            state = basis @ res.state @ basis.conj().T
            state = 0.5 * (state + state.conj().T)
            residual = float(np.max(np.abs(expected_values(u, state) - a)))
            if not chain:
                face = FaceDescriptor(Projection(np.eye(d, dtype=complex)), WHOLE_BODY, affine_dim(u), [])
                return MaxEntSolution(state, STATUS_INTERIOR, face, res, residual, iterations, a)
            proj = Projection(basis)
            status = STATUS_SINGLETON if proj.rank == 1 else STATUS_FACE
            direc = chain[-1] if certified else None
            face = FaceDescriptor(proj, direc, face_dim(u, proj), list(chain))
            return MaxEntSolution(state, status, face, res, residual, iterations, a)
        iterations += res.iterations
        pure = _pure_shortcut(current, a, res, min(degeneracy_tol, PURE_GAP_TOL))
        if pure is not None:
            x, lam = pure
            chain.append(lam)
            vec = basis @ x
            state = np.outer(vec, vec.conj())
            residual = float(np.max(np.abs(expected_values(u, state) - a)))
            proj = Projection(vec[:, None])
            direc = lam if certified else None
            face = FaceDescriptor(proj, direc, 0, list(chain))
            return MaxEntSolution(state, STATUS_SINGLETON, face, None, residual, iterations, a)
        lam = exposing_direction(current, res.support, res.direction, gap_tol=degeneracy_tol)
        if lam is None:
            certified = False
            lam = res.direction
        chain.append(lam)
        current = current.compressed(res.support)
        basis = basis @ res.support.basis
        if current.d == 1:
            state = basis @ basis.conj().T
            residual = float(np.max(np.abs(expected_values(u, state) - a)))
            if residual > FEAS_TOL * _feas_scale(u):
                raise InfeasibleError(f"target misses the only candidate state by {residual:.3e}")
            proj = Projection(basis)
            direc = chain[-1] if certified else None
            face = FaceDescriptor(proj, direc, 0, list(chain))
            return MaxEntSolution(state, STATUS_SINGLETON, face, None, residual, iterations, a)
    raise SolverError(f"face recursion did not terminate within depth {depth_cap}")


def face_projection(sol: MaxEntSolution) -> Projection:
    if sol.face is not None:
        return sol.face.projection
    return _support_projection(sol.state)


# -- fiber sampling ------------------------------------------------------------------


def fiber_directions(u: ObservableSet, p: Projection) -> np.ndarray:
    """Basis of traceless Hermitian ``X`` in ``p M_d p`` with ``E(X) = 0``, shape (m, d, d)."""
    herm = traceless_hermitian_basis(p.rank)
    if herm.shape[0] == 0:
        return np.zeros((0, u.d, u.d), dtype=complex)
    lifted = np.array([p.basis @ x @ p.basis.conj().T for x in herm])
    m = np.einsum("kij,bji->kb", u.matrices, lifted).real
    ns = null_space(m, rtol=1e-10).real if m.size else np.eye(herm.shape[0])
    return np.einsum("bm,bij->mij", ns, lifted)


def _psd_range(rho: np.ndarray, x: np.ndarray, support: Projection, hi: float = 10.0) -> float:
    """Largest ``t`` with ``rho + t x`` PSD on the support, by bisection on ``lambda_min``."""
    def lo_eig(t):
        return np.linalg.eigvalsh(support.basis.conj().T @ (rho + t * x) @ support.basis)[0]

    if lo_eig(hi) >= 0:
        return hi
    a, b = 0.0, hi
    for _ in range(60):
        mid = 0.5 * (a + b)
        if lo_eig(mid) >= 0:
            a = mid
        else:
            b = mid
    return a


def sample_fiber(u: ObservableSet, rho, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random states with the same expected values as ``rho``.

    A hit-and-run walk inside the fiber restricted to the support of ``rho``:
    each step picks a random direction in the kernel of ``E`` and a uniform
    point on the chord of PSD matrices through the current sample.
    """
    rho = np.asarray(rho, dtype=complex)
    support = _support_projection(rho)
    dirs = fiber_directions(u, support)
    if dirs.shape[0] == 0:
        return [rho.copy() for _ in range(n)]
    out = []
    cur = rho.copy()
    for _ in range(n):
        c = rng.normal(size=dirs.shape[0])
        x = np.einsum("m,mij->ij", c, dirs)
        x = x / np.linalg.norm(x)
        tp = _psd_range(cur, x, support)
        tm = _psd_range(cur, -x, support)
        t = rng.uniform(-tm, tp)
        cur = cur + t * x
        cur = 0.5 * (cur + cur.conj().T)
        out.append(cur.copy())
    return out


# -- continuity probe ------------------------------------------------------------------


@dataclass
class ContinuityReport:
    target: np.ndarray
    limit_state: np.ndarray
    target_state: np.ndarray
    gap_trace_distance: float
    entropy_jump: float
    sequence_used: str
    verdict: str
    schedule: list = field(default_factory=list)
    cauchy_steps: list = field(default_factory=list)
    gap_sequence: list = field(default_factory=list)
    cauchy_basis: str = "states"

    def to_json_obj(self) -> dict:
        from .observables import matrix_to_pairs

        return {
            "target": [float(x) for x in self.target],
            "gap_trace_distance": self.gap_trace_distance,
            "entropy_jump": self.entropy_jump,
            "verdict": self.verdict,
            "sequence_used": self.sequence_used,
            "schedule": [float(x) for x in self.schedule],
            "cauchy_steps": [float(x) for x in self.cauchy_steps],
            "gap_sequence": [float(x) for x in self.gap_sequence],
            "cauchy_basis": self.cauchy_basis,
            "limit_state": matrix_to_pairs(self.limit_state),
            "target_state": matrix_to_pairs(self.target_state),
        }


DEFAULT_SCHEDULE = tuple(2.0 ** -k for k in range(3, 21))


def continuity_probe(
    u: ObservableSet,
    alpha,
    curve: Callable[[float], Sequence[float]],
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    description: str = "curve",
    cauchy_tol: float = 1e-6,
    tol: float = SOLVER_TOL,
) -> ContinuityReport:
    """Compare the limit of ``rho*(curve(eps))`` as ``eps -> 0`` with ``rho*(alpha)``.

    The limit is estimated by the last iterate of the schedule.  The sequence
    counts as converged when the last successive trace distance is below
    ``cauchy_tol``.  Near curved boundary points with tiny spectral gaps the
    individual states carry noise far above that, so the check falls back to
    the sequence of gaps ``||rho*(curve(eps_k)) - rho*(alpha)||``: its last two
    increments must be below ``cauchy_tol``.  ``cauchy_basis`` records which
    test applied; otherwise the verdict is ``inconclusive``.
    """
    a = _check_alpha(u, alpha)
    eps = [float(e) for e in schedule]
    if len(eps) < 3 or any(e <= 0 for e in eps) or any(x <= y for x, y in zip(eps, eps[1:])):
        raise ValidationError("schedule must have at least three positive, strictly decreasing entries")
    states = [maxent(u, curve(e), tol=tol).state for e in eps]
    steps = [trace_distance(x, y) for x, y in zip(states, states[1:])]
    target_state = maxent(u, a, tol=tol).state
    gaps = [trace_distance(x, target_state) for x in states]
    limit = states[-1]
    gap = gaps[-1]
    jump = abs(von_neumann_entropy(limit) - von_neumann_entropy(target_state))
    basis = "states"
    if steps[-1] >= cauchy_tol:
        basis = "gaps"
        if abs(gaps[-1] - gaps[-2]) >= cauchy_tol or abs(gaps[-2] - gaps[-3]) >= cauchy_tol:
            basis = "none"
    if basis == "none":
        verdict = "inconclusive"
    else:
        verdict = "discontinuous-along-curve" if gap > GAP_TOL else "continuous-along-curve"
    return ContinuityReport(a, limit, target_state, gap, jump, description, verdict, eps, steps, gaps, basis)
