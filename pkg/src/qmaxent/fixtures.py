"""Built-in observable sets, curves and reference states used by tests and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .observables import ObservableSet
from .states import pauli

J2 = np.array([[0, 2], [0, 0]], dtype=complex)


# -- Example with a discontinuity on a curved face boundary ----------------------------------


def example_5_2_observables() -> ObservableSet:
    u1 = np.diag([1.0, 1.0, -1.0])
    u2 = np.array([[1, 0, 1], [0, 1, 1], [1, 1, -1]], dtype=float)
    u3 = np.array([[1, 0, 1], [0, 0, 1], [1, 1, -1]], dtype=float)
    return ObservableSet.from_list([u1, u2, u3])


def example_5_2_vector(eps: float) -> np.ndarray:
    """Unit top eigenvector of ``u1 - eps u2``: proportional to ``(1, 1, -eps x(eps))``."""
    if eps == 0:
        v = np.array([1.0, 1.0, 0.0])
    else:
        xi = np.sqrt((1 - eps) ** 2 + 2 * eps * eps)
        x = 2.0 / (xi + 1 - eps)  # rationalised form of (xi + eps - 1) / eps^2
        v = np.array([1.0, 1.0, -eps * x])
    return v / np.linalg.norm(v)


def example_5_2_alpha(eps: float) -> np.ndarray:
    """``alpha(eps) = E(v v*)``; at ``eps = 0`` the limit ``(1, 1, 1/2)``."""
    if eps == 0:
        return np.array([1.0, 1.0, 0.5])
    u = example_5_2_observables()
    v = example_5_2_vector(eps)
    return np.einsum("i,kij,j->k", v, u.matrices.real, v)


def example_5_2_face_state() -> np.ndarray:
    """``p / 2`` with ``p = e1 e1* + e2 e2*``."""
    return np.diag([0.5, 0.5, 0.0]).astype(complex)


# -- planar fixtures ---------------------------------------------------------------------------


def pauli_triple() -> ObservableSet:
    return ObservableSet.from_list([pauli(1), pauli(2), pauli(3)])


def thm_3x3_matrix() -> np.ndarray:
    """``[[0, 2], [0, 0]] (+) [1]``: unit-disk range, 1 is a boundary eigenvalue."""
    a = np.zeros((3, 3), dtype=complex)
    a[:2, :2] = J2
    a[2, 2] = 1
    return a


def thm_3x3_rho_star_at_1() -> np.ndarray:
    r = np.zeros((3, 3), dtype=complex)
    r[:2, :2] = 0.25
    r[2, 2] = 0.5
    return r


def thm_3x3_rho_star(alpha: complex) -> np.ndarray:
    """``v v*`` with ``v = (1, alpha, 0) / sqrt(2)`` for ``|alpha| = 1, alpha != 1``."""
    v = np.array([1, alpha, 0], dtype=complex) / np.sqrt(2)
    return np.outer(v, v.conj())


def disk_4x4_matrix() -> np.ndarray:
    return np.kron(np.eye(2), J2)


def triangle_matrix() -> np.ndarray:
    return np.diag([1, 1j, 0]).astype(complex)


def disk_point_matrix() -> np.ndarray:
    """``[[0, 1], [0, 0]] (+) [1]``: convex hull of the disk of radius 1/2 and the point 1."""
    a = np.zeros((3, 3), dtype=complex)
    a[0, 1] = 1
    a[2, 2] = 1
    return a


PLANAR_MATRICES: dict[str, Callable[[], np.ndarray]] = {
    "thm-3x3": thm_3x3_matrix,
    "disk-4x4": disk_4x4_matrix,
    "triangle": triangle_matrix,
    "disk-point": disk_point_matrix,
    "jordan-2x2": lambda: J2.copy(),
}


def planar_matrix(name: str) -> np.ndarray:
    try:
        return PLANAR_MATRICES[name]()
    except KeyError:
        raise ValidationError(f"unknown planar fixture {name!r}; known: {sorted(PLANAR_MATRICES)}") from None


# -- named curves for probes -------------------------------------------------------------------


@dataclass
class NamedCurve:
    observables: ObservableSet
    curve: Callable[[float], np.ndarray]
    target: np.ndarray
    description: str


def _circle(phi: float) -> Callable[[float], np.ndarray]:
    return lambda e: np.array([np.cos(phi + e), np.sin(phi + e)])


def named_curve(name: str, base_angle: float = 0.0) -> NamedCurve:
    """Curves ``eps -> alpha(eps)`` approaching ``target`` as ``eps -> 0``."""
    if name == "example-5-2":
        return NamedCurve(example_5_2_observables(), example_5_2_alpha, example_5_2_alpha(0.0), "alpha(eps) -> (1, 1, 1/2)")
    if name == "example-5-2-interior":
        u = example_5_2_observables()
        t0 = np.einsum("kii->k", u.matrices).real / 3  # E(I/3)
        t1 = u.matrices[:, 0, 0].real  # E(e1 e1*)
        return NamedCurve(u, lambda e: t0 + e * (t1 - t0), t0, "segment from E(e1 e1*) into E(I/3)")
    if name in ("thm-3x3", "disk-4x4"):
        a = thm_3x3_matrix() if name == "thm-3x3" else disk_4x4_matrix()
        target = np.array([np.cos(base_angle), np.sin(base_angle)])
        return NamedCurve(ObservableSet.from_matrix(a), _circle(base_angle), target, f"unit circle -> angle {base_angle:.6g}")
    raise ValidationError(f"unknown curve {name!r}; known: example-5-2, example-5-2-interior, thm-3x3, disk-4x4")


CURVES = ("example-5-2", "example-5-2-interior", "thm-3x3", "disk-4x4")
OBSERVABLE_FIXTURES = ("example-5-2", "pauli", "thm-3x3", "disk-4x4", "triangle", "disk-point")


def observable_fixture(name: str) -> ObservableSet:
    if name == "example-5-2":
        return example_5_2_observables()
    if name == "pauli":
        return pauli_triple()
    if name in PLANAR_MATRICES:
        return ObservableSet.from_matrix(planar_matrix(name))
    raise ValidationError(f"unknown fixture {name!r}; known: {list(OBSERVABLE_FIXTURES)}")
