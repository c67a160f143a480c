"""Dense Hermitian linear algebra used throughout the package.

The eigensolver is a cyclic complex Jacobi method.  It works on a single
matrix or on a stack of matrices of shape ``(..., n, n)``; the stacked form
is what makes angle sweeps of numerical ranges cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

TOL_HERM = 1e-12
DEGENERACY_TOL = 1e-8

_EPS = np.finfo(float).eps


def as_square(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def check_hermitian(h, name: str = "matrix", tol: float = TOL_HERM) -> np.ndarray:
    """Return ``h`` as a complex array after checking entrywise hermiticity."""
    arr = as_square(h, name)
    dev = np.max(np.abs(arr - arr.conj().T))
    if dev > tol:
        raise ValidationError(f"{name} is not Hermitian (max |h - h*| = {dev:.3e})")
    return arr


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + np.swapaxes(a, -1, -2).conj()) / 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def jacobi_eigh(a, max_sweeps: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose Hermitian matrices by cyclic complex Jacobi rotations.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Hermitian matrices. Only the Hermitian part is used.
    max_sweeps : int
        Upper bound on full (p, q) sweeps.

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues, ascending.
    v : ndarray, shape (..., n, n)
        Eigenvectors as columns; each column is phase-fixed so that its
        largest-modulus entry is real and positive.
    """
    a = hermitian_part(np.array(a, dtype=complex))
    n = a.shape[-1]
    batch = a.shape[:-2]
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    if n > 1:
        scale = np.maximum(np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1))), np.finfo(float).tiny)
        offmask = ~np.eye(n, dtype=bool)
        stop = 4.0 * n * _EPS
        for _ in range(max_sweeps):
            off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1))
            if np.all(off <= stop * scale):
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    _rotate(a, v, p, q)
        else:
            off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1))
            if np.any(off > 1e-10 * scale):
                raise ArithmeticError("Jacobi eigensolver did not converge")
    w = np.real(np.diagonal(a, axis1=-2, axis2=-1)).copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    # phase fix: largest-modulus entry of each column real positive
    idx = np.argmax(np.abs(v), axis=-2)
    lead = np.take_along_axis(v, idx[..., None, :], axis=-2)
    v = v * (np.abs(lead) / np.where(lead == 0, 1, lead))
    return w, v.reshape(batch + (n, n))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[..., p, q]
    mag = np.abs(apq)
    live = mag > 0
    if not np.any(live):
        return
    safe = np.where(live, mag, 1.0)
    phase = np.where(live, apq / safe, 1.0)
    app = a[..., p, p].real.copy()
    aqq = a[..., q, q].real.copy()
    theta = (aqq - app) / (2.0 * safe)
    sgn = np.where(theta >= 0, 1.0, -1.0)
    with np.errstate(over="ignore"):
        # theta**2 may overflow for tiny |a_pq|; the rotation then tends to identity
        t = np.where(live, sgn / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    ph = np.conj(phase)

    cp = a[..., :, p].copy()
    cq = a[..., :, q].copy()
    a[..., :, p] = c[..., None] * cp - (s * ph)[..., None] * cq
    a[..., :, q] = s[..., None] * cp + (c * ph)[..., None] * cq
    rp = a[..., p, :].copy()
    rq = a[..., q, :].copy()
    a[..., p, :] = c[..., None] * rp - (s * phase)[..., None] * rq
    a[..., q, :] = s[..., None] * rp + (c * phase)[..., None] * rq
    a[..., p, q] = 0.0
    a[..., q, p] = 0.0
    a[..., p, p] = app - t * mag
    a[..., q, q] = aqq + t * mag

    vp = v[..., :, p].copy()
    vq = v[..., :, q].copy()
    v[..., :, p] = c[..., None] * vp - (s * ph)[..., None] * vq
    v[..., :, q] = s[..., None] * vp + (c * ph)[..., None] * vq


def hermitian_eig(h) -> SpectralDecomposition:
    """Validated, deterministic eigendecomposition of one Hermitian matrix."""
    arr = check_hermitian(h)
    w, v = jacobi_eigh(arr)
    return SpectralDecomposition(w, v)


def eigvalsh(h) -> np.ndarray:
    return jacobi_eigh(h)[0]


def _function_of(h: np.ndarray, fn) -> np.ndarray:
    w, v = jacobi_eigh(h)
    return (v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def matrix_exp_hermitian(h) -> np.ndarray:
    """exp(h) by functional calculus on the spectrum."""
    return _function_of(check_hermitian(h), np.exp)


def entropy_of_spectrum(eigenvalues, slack: float = 1e-10, sum_tol: float = 1e-8) -> float:
    """Shannon/von Neumann entropy in nats of a probability spectrum.

    Values in ``[-slack, 0)`` are clamped to zero; ``0 ln 0`` counts as zero.
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    if lam.size == 0:
        raise ValidationError("empty spectrum")
    if np.any(lam < -slack):
        raise ValidationError(f"negative eigenvalue {lam.min():.3e} below slack")
    if abs(lam.sum() - 1.0) > sum_tol:
        raise ValidationError(f"spectrum sums to {lam.sum():.12f}, expected 1")
    lam = np.clip(lam, 0.0, None)
    nz = lam[lam > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class Projection:
    """Orthogonal projection stored through an orthonormal basis of its range.

    ``basis`` is a ``d x k`` isometry; the projection matrix is ``basis @ basis*``.
    Compressions use this basis, so it is kept fixed once chosen.
    """

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @classmethod
    def from_matrix(cls, p, tol: float = 1e-8) -> "Projection":
        """Build from a projection matrix, checking ``p = p* = p^2``."""
        arr = check_hermitian(p, "projection", tol=1e-10)
        if np.linalg.norm(arr @ arr - arr) > 1e-10:
            raise ValidationError("matrix is not idempotent")
        w, v = jacobi_eigh(arr)
        keep = w > 0.5
        return cls(v[:, keep])

    @classmethod
    def from_vectors(cls, vectors) -> "Projection":
        """Projection onto the span of the given columns (Gram-Schmidt, in column order)."""
        q = orthonormalize(np.asarray(vectors, dtype=complex))
        return cls(q)


def orthonormalize(cols: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Modified Gram-Schmidt over columns, dropping numerically dependent ones."""
    cols = np.atleast_2d(np.asarray(cols, dtype=complex))
    out = []
    for j in range(cols.shape[1]):
        x = cols[:, j].copy()
        for _ in range(2):
            for b in out:
                x -= b * (b.conj() @ x)
        nrm = np.linalg.norm(x)
        if nrm > tol:
            out.append(x / nrm)
    if not out:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    return np.column_stack(out)


def spectral_projection_max(h, degeneracy_tol: float = DEGENERACY_TOL) -> Projection:
    """Projection onto eigenvectors with eigenvalue >= lambda_max - degeneracy_tol."""
    if degeneracy_tol <= 0:
        raise ValidationError("degeneracy_tol must be positive")
    w, v = jacobi_eigh(check_hermitian(h))
    keep = w >= w[-1] - degeneracy_tol
    # eigenvalue-descending order for the basis
    return Projection(v[:, keep][:, ::-1])


def compress(a, p: Projection) -> np.ndarray:
    """Matrix of ``p a p`` on the stored orthonormal basis of range(p)."""
    arr = as_square(a)
    if p.rank == 0:
        raise ValidationError("cannot compress to a rank-0 projection")
    if arr.shape[0] != p.dim:
        raise ValidationError(f"dimension mismatch: matrix {arr.shape[0]} vs projection {p.dim}")
    q = p.basis
    return q.conj().T @ arr @ q


def embed(a_small: np.ndarray, p: Projection) -> np.ndarray:
    """Inverse of :func:`compress` on the range: ``Q a Q*``."""
    q = p.basis
    return q @ a_small @ q.conj().T


def _span_basis(mats: list[np.ndarray], tol: float = 1e-10) -> np.ndarray:
    vecs = np.array([m.ravel() for m in mats]).T
    return orthonormalize(vecs, tol=tol)


def generated_star_algebra(generators, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns of vectorized matrices) of the unital *-algebra
    generated by the given square matrices.

    The span of ``{1, g, g*}`` is closed under products until its dimension
    stops growing for a full multiplication round, or reaches ``d^2``.
    """
    gens = [as_square(g, "generator") for g in generators]
    if not gens:
        return np.ones((1, 1), dtype=complex)
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise ValidationError("generators must share one dimension")
    seed = [np.eye(d, dtype=complex)]
    for g in gens:
        seed += [g, g.conj().T]
    basis = _span_basis(seed, tol)
    while basis.shape[1] < d * d:
        mats = [basis[:, j].reshape(d, d) for j in range(basis.shape[1])]
        products = [x @ y for x in mats for y in mats]
        new = _span_basis(mats + products, tol)
        if new.shape[1] == basis.shape[1]:
            break
        basis = new
    return basis


def generated_star_algebra_dim(generators) -> int:
    """Complex dimension of the unital *-algebra generated by ``generators``."""
    gens = list(generators)
    if not gens:
        return 1
    return generated_star_algebra(gens).shape[1]


def in_span(basis: np.ndarray, m: np.ndarray) -> float:
    """Frobenius distance from ``m`` to the span of the vectorized ``basis`` columns."""
    x = np.asarray(m, dtype=complex).ravel()
    return float(np.linalg.norm(x - basis @ (basis.conj().T @ x)))


def null_space(m: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the null space of ``m`` (columns)."""
    m = np.atleast_2d(m)
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=m.dtype)
    _, s, vh = np.linalg.svd(m)
    cutoff = rtol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def commutant_basis(generators) -> list[np.ndarray]:
    """Basis of ``{X : XG = GX and XG* = G*X for all generators G}``."""
    gens = [as_square(g, "generator") for g in generators]
    if not gens:
        raise ValidationError("need at least one generator")
    d = gens[0].shape[0]
    eye = np.eye(d)
    blocks = []
    for g in gens:
        for h in (g, g.conj().T):
            # row-major vec: vec(XG) = (I kron G^T) vec X, vec(GX) = (G kron I) vec X
            blocks.append(np.kron(eye, h.T) - np.kron(h, eye))
    ns = null_space(np.vstack(blocks))
    basis = orthonormalize(np.column_stack([eye.ravel() / np.sqrt(d), ns]))
    return [basis[:, j].reshape(d, d) for j in range(basis.shape[1])]
