"""Observable sets, the expected-value map and exposed faces of the convex support.

For observables ``u = (u_1, ..., u_r)`` the expected-value map sends a state
``rho`` to ``(tr u_1 rho, ..., tr u_r rho)``.  Its image on all states is the
convex support ``L(u)``, whose support function in direction ``lam`` is the
largest eigenvalue of the pencil ``u(lam) = sum_i lam_i u_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import (
    DEGENERACY_TOL,
    Projection,
    as_square,
    check_hermitian,
    compress,
    eigvalsh,
    hermitian_part,
    spectral_projection_max,
)

WHOLE_BODY = "whole-body"
RANK_TOL = 1e-8


@dataclass(frozen=True)
class ObservableSet:
    """``r`` Hermitian ``d x d`` observables stored as an ``(r, d, d)`` array."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] == 0:
            raise ValidationError(f"observables must have shape (r, d, d), got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @classmethod
    def from_list(cls, mats: Sequence, tol: float = 1e-12) -> "ObservableSet":
        checked = [check_hermitian(a, f"observable {i}", tol=tol) for i, a in enumerate(mats)]
        if not checked:
            raise ValidationError("need at least one observable")
        d = checked[0].shape[0]
        if any(a.shape != (d, d) for a in checked):
            raise ValidationError("observables must share one size")
        return cls(np.array([hermitian_part(a) for a in checked]))

    @classmethod
    def from_matrix(cls, a) -> "ObservableSet":
        """Pair ``(Re A, Im A)`` with ``A = u_1 + i u_2``."""
        arr = as_square(a)
        return cls(np.array([(arr + arr.conj().T) / 2, (arr - arr.conj().T) / 2j]))

    @property
    def r(self) -> int:
        return self.matrices.shape[0]

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.r

    def __getitem__(self, i: int) -> np.ndarray:
        return self.matrices[i]

    def as_matrix(self) -> np.ndarray:
        """``u_1 + i u_2`` for a pair."""
        if self.r != 2:
            raise ValidationError("complex matrix form needs exactly two observables")
        return self.matrices[0] + 1j * self.matrices[1]

    def compressed(self, p: Projection) -> "ObservableSet":
        return ObservableSet(np.array([hermitian_part(compress(a, p)) for a in self.matrices]))

    # -- serialization -------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "d": self.d,
            "observables": [matrix_to_pairs(a) for a in self.matrices],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ObservableSet":
        try:
            d = int(obj["d"])
            mats = [pairs_to_matrix(m) for m in obj["observables"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed observable set: {exc}") from exc
        if any(m.shape != (d, d) for m in mats):
            raise ValidationError(f"observable sizes do not match d={d}")
        return cls.from_list(mats)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "ObservableSet":
        return cls.from_json_obj(json.loads(Path(path).read_text()))


def matrix_to_pairs(a) -> list:
    arr = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def pairs_to_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"matrix must be a square array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _as_vector(x, r: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if v.shape != (r,):
        raise ValidationError(f"{name} must have length {r}, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be finite")
    return v


def expected_values(u: ObservableSet, rho) -> np.ndarray:
    """``(tr u_i rho)_i``; the imaginary residue must stay below 1e-10."""
    arr = as_square(rho, "state")
    if arr.shape[0] != u.d:
        raise ValidationError(f"state size {arr.shape[0]} does not match observables d={u.d}")
    vals = np.einsum("kij,ji->k", u.matrices, arr)
    scale = 1.0 + np.max(np.abs(vals.real))
    if np.max(np.abs(vals.imag)) > 1e-10 * scale:
        raise ValidationError("expected values have a non-negligible imaginary part; is the state Hermitian?")
    return vals.real.copy()


def pencil(u: ObservableSet, theta) -> np.ndarray:
    """``u(theta) = sum_i theta_i u_i``."""
    t = _as_vector(theta, u.r, "theta")
    return np.einsum("k,kij->ij", t, u.matrices)


def support_function(u: ObservableSet, lam) -> float:
    """``h(lam) = max_rho lam . E(rho)``, the top eigenvalue of the pencil."""
    v = _as_vector(lam, u.r, "direction")
    if not np.any(v):
        raise ValidationError("support direction must be non-zero")
    return float(eigvalsh(pencil(u, v))[-1])


def traceless_hermitian_basis(k: int) -> np.ndarray:
    """Orthonormal basis (Hilbert-Schmidt) of traceless Hermitian ``k x k`` matrices.

    Returns an array of shape ``(k*k - 1, k, k)``; off-diagonal symmetric and
    antisymmetric units first, then a Helmert-type diagonal basis.
    """
    out = []
    for a in range(k):
        for b in range(a + 1, k):
            m = np.zeros((k, k), dtype=complex)
            m[a, b] = m[b, a] = 1 / np.sqrt(2)
            out.append(m)
            m = np.zeros((k, k), dtype=complex)
            m[a, b] = -1j / np.sqrt(2)
            m[b, a] = 1j / np.sqrt(2)
            out.append(m)
    for j in range(1, k):
        diag = np.zeros(k)
        diag[:j] = 1.0
        diag[j] = -j
        out.append(np.diag(diag / np.linalg.norm(diag)).astype(complex))
    if not out:
        return np.zeros((0, k, k), dtype=complex)
    return np.array(out)


def coordinate_map(u: ObservableSet) -> np.ndarray:
    """Real ``r x (d^2 - 1)`` matrix of ``X -> (tr u_i X)`` on traceless Hermitian ``X``."""
    basis = traceless_hermitian_basis(u.d)
    if basis.shape[0] == 0:
        return np.zeros((u.r, 0))
    return np.einsum("kij,bji->kb", u.matrices, basis).real


def affine_dim(u: ObservableSet, rank_tol: float = RANK_TOL) -> int:
    """Dimension of ``L(u)``, i.e. rank of E on traceless Hermitian matrices."""
    m = coordinate_map(u)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s >= rank_tol))


def face_dim(u: ObservableSet, p: Projection, rank_tol: float = RANK_TOL) -> int:
    """Affine dimension of ``E(M(pMp))``."""
    return affine_dim(u.compressed(p), rank_tol)


@dataclass(frozen=True)
class FaceDescriptor:
    """A face of ``L(u)`` through the support projection of its state-space pre-image.

    ``exposing_direction`` is a direction exposing the face inside the
    previous face of the chain, ``WHOLE_BODY`` for ``L(u)`` itself, or
    ``None`` when no exposing functional could be certified numerically.
    """

    projection: Projection
    exposing_direction: np.ndarray | str | None
    dim: int
    exposure_chain: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.projection.rank

    @property
    def is_whole_body(self) -> bool:
        return isinstance(self.exposing_direction, str) and self.exposing_direction == WHOLE_BODY

    def to_json_obj(self) -> dict:
        direc = self.exposing_direction
        if isinstance(direc, np.ndarray):
            direc = [float(x) for x in direc]
        return {
            "projection_rank": self.rank,
            "dim": self.dim,
            "exposing_direction": direc,
            "exposure_chain": [[float(x) for x in lam] for lam in self.exposure_chain],
        }


def exposed_face(u: ObservableSet, lam, tol: float = DEGENERACY_TOL) -> FaceDescriptor:
    """Face of ``L(u)`` exposed by ``lam``: the top spectral projection of ``u(lam)``."""
    v = _as_vector(lam, u.r, "direction")
    if not np.any(v):
        raise ValidationError("exposing direction must be non-zero")
    p = spectral_projection_max(pencil(u, v), tol)
    return FaceDescriptor(p, v.copy(), face_dim(u, p), [v.copy()])


def transform_observables(u: ObservableSet, kind: str, data) -> ObservableSet:
    """Reparametrize observables without essentially changing ``L(u)`` or the inference.

    kind : {"add-multiple-of-identity", "invertible-linear-recombination", "unitary-conjugation"}
        ``data`` is the shift vector ``c`` (``u_i + c_i 1``), the invertible
        ``r x r`` real matrix ``R`` (``u'_i = sum_j R_ij u_j``) or the unitary
        ``T`` (``T* u_i T``) respectively.
    """
    mats = u.matrices
    if kind == "add-multiple-of-identity":
        c = _as_vector(data, u.r, "shift")
        return ObservableSet(mats + c[:, None, None] * np.eye(u.d))
    if kind == "invertible-linear-recombination":
        rmat = np.asarray(data, dtype=float)
        if rmat.shape != (u.r, u.r):
            raise ValidationError(f"recombination must be {u.r}x{u.r}")
        s = np.linalg.svd(rmat, compute_uv=False)
        if s[-1] <= 1e-12 * max(1.0, s[0]):
            raise ValidationError("recombination matrix is singular")
        return ObservableSet(np.einsum("ij,jab->iab", rmat, mats))
    if kind == "unitary-conjugation":
        t = as_square(data, "conjugator")
        if t.shape[0] != u.d or np.linalg.norm(t.conj().T @ t - np.eye(u.d)) > 1e-10:
            raise ValidationError("conjugator must be a unitary of matching size")
        out = np.einsum("ji,kjl,lm->kim", t.conj(), mats, t)
        return ObservableSet(hermitian_part(out))
    raise ValidationError(f"unknown transform kind {kind!r}")


def transform_expected(alpha, kind: str, data) -> np.ndarray:
    """Image of expected values under :func:`transform_observables`."""
    a = np.asarray(alpha, dtype=float)
    if kind == "add-multiple-of-identity":
        return a + np.asarray(data, dtype=float)
    if kind == "invertible-linear-recombination":
        return np.asarray(data, dtype=float) @ a
    if kind == "unitary-conjugation":
        return a.copy()
    raise ValidationError(f"unknown transform kind {kind!r}")
