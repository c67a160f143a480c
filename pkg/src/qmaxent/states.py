"""Density matrices, pure states, entropies, tensor products and partial traces.

Tensor products use the leftmost factor as the slowest-varying index, so
``|i> (x) |j>`` sits at position ``i * dim_b + j`` and ``|001>`` is index 1.
Entropies are in nats.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import as_square, check_hermitian, eigvalsh, entropy_of_spectrum

TRACE_TOL = 1e-10
PSD_SLACK = 1e-9

_PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(i: int) -> np.ndarray:
    """Pauli matrix sigma_i for i in {1, 2, 3}; index 0 gives the 2x2 identity."""
    if i == 0:
        return np.eye(2, dtype=complex)
    if i not in _PAULI:
        raise ValidationError(f"Pauli index must be 1, 2 or 3, got {i}")
    return _PAULI[i].copy()


def _check_unit_trace(rho, name: str) -> np.ndarray:
    arr = check_hermitian(rho, name)
    tr = np.trace(arr).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"{name} has trace {tr:.12f}, expected 1")
    return arr


def check_density(rho, name: str = "state", psd_slack: float = PSD_SLACK) -> np.ndarray:
    """Validate a density matrix and return it as a complex array."""
    arr = _check_unit_trace(rho, name)
    lo = eigvalsh(arr)[0]
    if lo < -psd_slack:
        raise ValidationError(f"{name} has negative eigenvalue {lo:.3e}")
    return arr


def normalize_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if v.size == 0 or nrm == 0:
        raise ValidationError("state vector must be non-zero")
    return v / nrm


def density_from_vector(x, normalize: bool = False) -> np.ndarray:
    """Pure state ``x x*``.

    With ``normalize=False`` the vector must already have unit norm (1e-12).
    """
    v = np.asarray(x, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if v.size == 0 or nrm == 0:
        raise ValidationError("state vector must be non-zero")
    if normalize:
        v = v / nrm
    elif abs(nrm - 1.0) > 1e-12:
        raise ValidationError(f"state vector has norm {nrm:.15f}, expected 1")
    return np.outer(v, v.conj())


def von_neumann_entropy(rho) -> float:
    """S(rho) = -tr rho ln rho in nats."""
    # one decomposition: the spectrum check rejects eigenvalues below -PSD_SLACK
    arr = _check_unit_trace(rho, "state")
    return entropy_of_spectrum(eigvalsh(arr), slack=PSD_SLACK, sum_tol=1e-8)


def tensor(*factors) -> np.ndarray:
    """Kronecker product, leftmost factor slowest."""
    if not factors:
        raise ValidationError("tensor needs at least one factor")
    mats = [np.atleast_2d(np.asarray(f, dtype=complex)) for f in factors]
    return reduce(np.kron, mats)


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced state on the factors listed in ``keep`` (in increasing order).

    Parameters
    ----------
    rho : array_like
        Operator on the tensor product of spaces of sizes ``dims``.
    dims : sequence of int
        Local dimensions, leftmost slowest.
    keep : sequence of int
        Indices of the factors to keep.
    """
    arr = as_square(rho, "state")
    dims = [int(k) for k in dims]
    if any(k <= 0 for k in dims) or int(np.prod(dims)) != arr.shape[0]:
        raise ValidationError(f"dims {dims} inconsistent with matrix size {arr.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ValidationError(f"keep {keep} must be a non-empty subset of 0..{len(dims) - 1}")
    n = len(dims)
    t = arr.reshape(dims + dims)
    # einsum labels: row factors a.., column factors; traced ones share a label
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = [letters[n + k] if k in keep else rows[k] for k in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    red = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    dk = int(np.prod([dims[k] for k in keep]))
    return red.reshape(dk, dk)


def binary_entropy(eta: float) -> float:
    """H(eta) = -eta ln eta - (1 - eta) ln(1 - eta), in nats."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"binary entropy argument {eta} outside [0, 1]")
    return float(sum(-p * np.log(p) for p in (eta, 1.0 - eta) if p > 0))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a = as_square(rho, "rho")
    b = as_square(sigma, "sigma")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.sum(np.abs(eigvalsh(diff))))


def random_state(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G* / tr`` with Ginibre ``G`` of the given rank."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=d) + 1j * rng.normal(size=d)
    return x / np.linalg.norm(x)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR of a Ginibre matrix with phase correction."""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph
