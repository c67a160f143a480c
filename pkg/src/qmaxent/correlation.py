"""Irreducible three-party correlation of three qubits.

``C3(rho) = S(rho*(rho^(2))) - S(rho)`` where ``rho^(2)`` is the triple of
two-party marginals and ``rho*`` the maximum-entropy inference over the
two-local observables.  Qubits are ordered A, B, C with A the leftmost
(slowest) tensor factor; entropies are in nats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .inference import MaxEntSolution, maxent
from .linalg import jacobi_eigh
from .observables import ObservableSet, expected_values
from .states import (
    binary_entropy,
    check_density,
    density_from_vector,
    partial_trace,
    pauli,
    tensor,
    von_neumann_entropy,
)

C3_SOLVER_TOL = 1e-9
GAMMA_SCHEDULE = (0.3, 0.1, 0.03, 0.01)
_DIMS = (2, 2, 2)


# -- basis and marginals ------------------------------------------------------------------


@dataclass
class TwoLocalBasis:
    """Pauli words with one or two non-identity factors.

    Order: weight one first (site A, B, C; Pauli index 1, 2, 3), then
    weight two by site pair AB, AC, BC with Pauli indices ascending
    lexicographically.  ``labels`` holds triples of Pauli indices, e.g.
    ``(1, 0, 0)`` for sigma_1 on A.
    """

    observables: ObservableSet
    labels: list

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(tuple(label))


def two_local_basis() -> TwoLocalBasis:
    labels = []
    for site in range(3):
        for k in (1, 2, 3):
            lab = [0, 0, 0]
            lab[site] = k
            labels.append(tuple(lab))
    for s1, s2 in itertools.combinations(range(3), 2):
        for k1, k2 in itertools.product((1, 2, 3), repeat=2):
            lab = [0, 0, 0]
            lab[s1], lab[s2] = k1, k2
            labels.append(tuple(lab))
    mats = [tensor(*(pauli(k) for k in lab)) for lab in labels]
    return TwoLocalBasis(ObservableSet(np.array(mats)), labels)


@dataclass
class MarginalTriple:
    ab: np.ndarray
    ac: np.ndarray
    bc: np.ndarray

    def single_site_mismatch(self) -> float:
        """Largest disagreement between the one-site reductions of the three marginals."""
        a1 = partial_trace(self.ab, (2, 2), (0,))
        a2 = partial_trace(self.ac, (2, 2), (0,))
        b1 = partial_trace(self.ab, (2, 2), (1,))
        b2 = partial_trace(self.bc, (2, 2), (0,))
        c1 = partial_trace(self.ac, (2, 2), (1,))
        c2 = partial_trace(self.bc, (2, 2), (1,))
        return float(max(np.abs(a1 - a2).max(), np.abs(b1 - b2).max(), np.abs(c1 - c2).max()))

    def distance(self, other: "MarginalTriple") -> float:
        return float(max(np.abs(x - y).max() for x, y in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self) -> tuple:
        return self.ab, self.ac, self.bc


def _check_three_qubit(rho) -> np.ndarray:
    arr = check_density(rho)
    if arr.shape != (8, 8):
        raise ValidationError(f"expected a three-qubit state (8x8), got {arr.shape}")
    return arr


def marginal_triple(rho) -> MarginalTriple:
    arr = _check_three_qubit(rho)
    return MarginalTriple(
        partial_trace(arr, _DIMS, (0, 1)),
        partial_trace(arr, _DIMS, (0, 2)),
        partial_trace(arr, _DIMS, (1, 2)),
    )


# -- C3 --------------------------------------------------------------------------------


@dataclass
class C3Result:
    value: float
    entropy_state: float
    entropy_maxent: float
    solution: MaxEntSolution

    def to_json_obj(self) -> dict:
        return {
            "c3": self.value,
            "entropy_state": self.entropy_state,
            "entropy_maxent": self.entropy_maxent,
            "maxent_status": self.solution.status,
            "maxent_rank": self.solution.rank,
            "constraint_residual": self.solution.constraint_residual,
        }


def c3_details(rho, tol: float = C3_SOLVER_TOL) -> C3Result:
    arr = _check_three_qubit(rho)
    basis = two_local_basis()
    alpha = expected_values(basis.observables, arr)
    sol = maxent(basis.observables, alpha, tol=tol)
    s_max = sol.entropy
    s = von_neumann_entropy(arr)
    return C3Result(s_max - s, s, s_max, sol)


def c3(rho, tol: float = C3_SOLVER_TOL) -> float:
    """Irreducible three-party correlation in nats."""
    return c3_details(rho, tol).value


# -- GHZ family ---------------------------------------------------------------------------


def _ket(bits: str) -> np.ndarray:
    v = np.zeros(8, dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def ghz_vector(alpha: complex, beta: complex | None = None) -> np.ndarray:
    """``alpha|000> + beta|111>``; ``beta`` defaults to ``sqrt(1 - |alpha|^2)``."""
    if beta is None:
        if abs(alpha) > 1:
            raise ValidationError("|alpha| must not exceed 1")
        beta = np.sqrt(1 - abs(alpha) ** 2)
    v = alpha * _ket("000") + beta * _ket("111")
    if abs(np.linalg.norm(v) - 1) > 1e-12:
        raise ValidationError("|alpha|^2 + |beta|^2 must equal 1")
    return v


def phi_vector(alpha: complex, gamma: float) -> np.ndarray:
    """``alpha|000> + cos(gamma) beta|111> + sin(gamma) beta|001>`` with ``beta = sqrt(1 - |alpha|^2)``."""
    beta = np.sqrt(1 - abs(alpha) ** 2)
    return alpha * _ket("000") + np.cos(gamma) * beta * _ket("111") + np.sin(gamma) * beta * _ket("001")


def ghz_fiber_state(x: float, y: float, z: float) -> np.ndarray:
    """Bloch-ball state on span{|000>, |111>}."""
    if x * x + y * y + z * z > 1 + 1e-12:
        raise ValidationError("(x, y, z) must lie in the unit ball")
    e0, e7 = _ket("000"), _ket("111")
    p = np.outer(e0, e0) + np.outer(e7, e7)
    off = np.outer(e0, e7)
    sig = p + x * (off + off.T) + y * (-1j * off + 1j * off.T) + z * (np.outer(e0, e0) - np.outer(e7, e7))
    return 0.5 * sig


def ghz_maxent_reference(z: float) -> np.ndarray:
    """Closed form ``(1+z)/2 |000><000| + (1-z)/2 |111><111|`` of the inferred state."""
    e0, e7 = _ket("000"), _ket("111")
    return 0.5 * (1 + z) * np.outer(e0, e0) + 0.5 * (1 - z) * np.outer(e7, e7)


# -- H(eps) model ---------------------------------------------------------------------------


def h_terms() -> tuple[np.ndarray, np.ndarray]:
    """``H0 = sum of sigma_3 sigma_3 pairs`` and ``H1 = sum of single-site sigma_1``."""
    i2, s1, s3 = pauli(0), pauli(1), pauli(3)
    h0 = tensor(i2, s3, s3) + tensor(s3, i2, s3) + tensor(s3, s3, i2)
    h1 = tensor(s1, i2, i2) + tensor(i2, s1, i2) + tensor(i2, i2, s1)
    return h0, h1


def lambda_closed_form(eps: float) -> float:
    return 1 + eps + 2 * np.sqrt(1 - eps + eps * eps)


def s_closed_form(eps: float) -> float:
    return (lambda_closed_form(eps) - 3) / (3 * eps)


def marginal_ab_closed_form(s: float) -> np.ndarray:
    m = np.array(
        [
            [-2 * s * s, s * s + s, s * s + s, 2 * s],
            [0, 2 * s * s, 2 * s * s, s * s + s],
            [0, 0, 2 * s * s, s * s + s],
            [0, 0, 0, -2 * s * s],
        ],
        dtype=float,
    )
    m = m + np.triu(m, 1).T
    return 0.5 * np.diag([1.0, 0, 0, 1]) + m / (2 + 6 * s * s)


def marginal_ab_eigenvalues(s: float) -> tuple[float, float]:
    den = 2 * (3 * s * s + 1)
    return (s - 1) ** 2 / den, (5 * s * s + 2 * s + 1) / den


@dataclass
class HEpsilonModel:
    eps: float
    hamiltonian: np.ndarray
    lam: float
    lam_closed_form: float
    s: float
    eigenvector: np.ndarray
    ground_state: np.ndarray
    marginal_ab: np.ndarray
    top_gap: float

    def to_json_obj(self) -> dict:
        return {
            "eps": self.eps,
            "lambda": self.lam,
            "lambda_closed_form": self.lam_closed_form,
            "s": self.s,
            "top_gap": self.top_gap,
            "marginal_ab_eigenvalues": [float(x) for x in np.linalg.eigvalsh(self.marginal_ab)],
        }


def h_epsilon_model(eps: float) -> HEpsilonModel:
    """Top eigenvector of ``H0 + eps H1`` and its marginals.

    ``ground_state`` is the projection onto the eigenvector of the maximal
    eigenvalue, normalised from ``w = (1, s, s, s, s, s, s, 1)``.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    h0, h1 = h_terms()
    h = h0 + eps * h1
    w, v = jacobi_eigh(h)
    s = s_closed_form(eps)
    vec = np.array([1, s, s, s, s, s, s, 1], dtype=complex)
    rho = np.outer(vec, vec) / (2 + 6 * s * s)
    return HEpsilonModel(
        eps,
        h,
        float(w[-1]),
        lambda_closed_form(eps),
        s,
        v[:, -1],
        rho,
        partial_trace(rho, _DIMS, (0, 1)),
        float(w[-1] - w[-2]),
    )


def h_epsilon_alpha(eps: float) -> np.ndarray:
    """Two-local expected values of ``rho(eps)``; ``eps = 0`` gives the midpoint limit."""
    basis = two_local_basis()
    if eps == 0:
        rho = 0.5 * (np.outer(_ket("000"), _ket("000")) + np.outer(_ket("111"), _ket("111")))
    else:
        rho = h_epsilon_model(eps).ground_state
    return expected_values(basis.observables, rho)


# -- discontinuity probe -----------------------------------------------------------------------


@dataclass
class C3Probe:
    alpha: complex
    c3_psi: float
    reference: float
    gammas: list
    c3_phi: list
    gap: float
    notes: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "alpha": [float(np.real(self.alpha)), float(np.imag(self.alpha))],
            "c3_psi": self.c3_psi,
            "reference_binary_entropy": self.reference,
            "gammas": [float(g) for g in self.gammas],
            "c3_phi": [float(c) for c in self.c3_phi],
            "gap": self.gap,
            "notes": list(self.notes),
        }


def c3_discontinuity_probe(alpha: complex, gammas=GAMMA_SCHEDULE, tol: float = C3_SOLVER_TOL) -> C3Probe:
    """C3 at ``psi = alpha|000> + beta|111>`` versus along ``phi(gamma) -> psi``.

    Each ``phi(gamma)`` is a pure state determined by its marginals, so its
    C3 vanishes, while ``C3(psi psi*) = H(|alpha|^2)``.  The gap persists as
    ``gamma -> 0``.
    """
    if not 0 < abs(alpha) < 1:
        raise ValidationError("need 0 < |alpha| < 1")
    psi = density_from_vector(ghz_vector(alpha))
    val = c3(psi, tol)
    ref = binary_entropy(abs(alpha) ** 2)
    phis = [c3(density_from_vector(phi_vector(alpha, g)), tol) for g in gammas]
    notes = ["gamma values below 1e-2 approach the tolerance of the face detection"]
    return C3Probe(alpha, val, ref, list(gammas), phis, val - phis[-1], notes)
