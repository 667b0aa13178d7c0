"""Two-level density matrices, Pauli algebra and Bloch-vector maps.

Everything here works on plain ``numpy`` arrays of shape ``(..., 2, 2)``;
:class:`DensityMatrix` and :class:`BlochVector` are thin validated value
types on top of them.  Units are natural (hbar = 1), all quantities are
dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IDENTITY",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "POSITIVITY_TOL",
    "ValidationError",
    "DomainError",
    "DensityMatrix",
    "BlochVector",
    "dagger",
    "commutator",
    "anticommutator",
    "eigvalsh2",
    "check_density",
    "bloch_components",
    "density_from_components",
    "bloch_from_density",
    "density_from_bloch",
    "linear_entropy",
    "purity",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


IDENTITY = _frozen([[1, 0], [0, 1]])
PAULI_X = _frozen([[0, 1], [1, 0]])
PAULI_Y = _frozen([[0, -1j], [1j, 0]])
PAULI_Z = _frozen([[1, 0], [0, -1]])
# raising operator of the sigma_z eigenbasis: |1><2| with |1> the +1 state
SIGMA_PLUS = _frozen([[0, 1], [0, 0]])
SIGMA_MINUS = _frozen([[0, 0], [1, 0]])

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
# smallest eigenvalue allowed before a state is declared non-positive
POSITIVITY_TOL = -1e-10
BLOCH_NORM_TOL = 1e-10


class ValidationError(ValueError):
    """A matrix failed one of the density-matrix invariants.

    ``invariant`` is one of ``"shape"``, ``"hermiticity"``, ``"trace"``,
    ``"positivity"``; ``value`` is the measured violation.
    """

    def __init__(self, invariant: str, value: float, tol: float, where: str = ""):
        self.invariant = invariant
        self.value = value
        self.tol = tol
        loc = f" at {where}" if where else ""
        super().__init__(f"{invariant} violated{loc}: measured {value:.3e}, tolerance {tol:.1e}")


class DomainError(ValueError):
    """Input outside the physical domain (e.g. a Bloch vector longer than 1)."""


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def eigvalsh2(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of Hermitian 2x2 matrices in ascending order.

    Closed form ``tr/2 -+ sqrt((tr/2)^2 - det)``, evaluated as
    ``sqrt(((a - d)/2)^2 + |b|^2)`` for the radical, which is the same
    quantity without the cancellation.  Works on stacks ``(..., 2, 2)``.
    """
    m = np.asarray(m)
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    b = m[..., 0, 1]
    half_tr = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), np.abs(b))
    return np.stack([half_tr - rad, half_tr + rad], axis=-1)


def check_density(
    m: np.ndarray,
    *,
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    pos_tol: float = POSITIVITY_TOL,
    where: str = "",
) -> None:
    """Raise :class:`ValidationError` naming the first violated invariant."""
    m = np.asarray(m)
    if m.shape != (2, 2):
        raise ValidationError("shape", float("nan"), 0.0, where)
    herm = float(np.max(np.abs(m - dagger(m))))
    if herm > herm_tol:
        raise ValidationError("hermiticity", herm, herm_tol, where)
    tr = abs(complex(np.trace(m)) - 1.0)
    if tr > trace_tol:
        raise ValidationError("trace", tr, trace_tol, where)
    # eigenvalues of the Hermitian part; the anti-Hermitian residue is bounded above
    lo = float(eigvalsh2(0.5 * (m + dagger(m)))[0])
    if lo < pos_tol:
        raise ValidationError("positivity", lo, pos_tol, where)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = self.norm
        if not np.isfinite(n) or n > 1.0 + BLOCH_NORM_TOL:
            raise DomainError(f"Bloch vector norm {n!r} exceeds 1 (non-physical state)")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated 2x2 density matrix.

    Tolerances default to the module constants and may be overridden per
    instance, e.g. ``DensityMatrix(m, trace_tol=1e-10)`` for integrator
    output.  Violations raise; nothing is ever projected back to the
    physical set.
    """

    matrix: np.ndarray
    herm_tol: float = HERMITICITY_TOL
    trace_tol: float = TRACE_TOL
    pos_tol: float = POSITIVITY_TOL

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        check_density(m, herm_tol=self.herm_tol, trace_tol=self.trace_tol, pos_tol=self.pos_tol)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def eigenvalues(self) -> np.ndarray:
        return eigvalsh2(self.matrix)

    def bloch(self) -> BlochVector:
        return bloch_from_density(self)

    @classmethod
    def from_bloch(cls, s) -> "DensityMatrix":
        return density_from_bloch(s)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(0.5 * IDENTITY)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def bloch_components(rhos: np.ndarray) -> np.ndarray:
    """``S_i = Tr(rho sigma_i)`` for a stack of matrices, shape ``(..., 3)``."""
    rhos = np.asarray(rhos)
    sx = 2.0 * rhos[..., 1, 0].real
    sy = 2.0 * rhos[..., 1, 0].imag
    sz = (rhos[..., 0, 0] - rhos[..., 1, 1]).real
    return np.stack([sx, sy, sz], axis=-1)


def density_from_components(s: np.ndarray) -> np.ndarray:
    """``(1 + S.sigma)/2`` for a stack of Bloch vectors ``(..., 3)``."""
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5 * (1.0 + s[..., 2])
    out[..., 1, 1] = 0.5 * (1.0 - s[..., 2])
    out[..., 0, 1] = 0.5 * (s[..., 0] - 1j * s[..., 1])
    out[..., 1, 0] = 0.5 * (s[..., 0] + 1j * s[..., 1])
    return out


def _as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def bloch_from_density(rho) -> BlochVector:
    rho = _as_density(rho)
    sx, sy, sz = bloch_components(rho.matrix)
    return BlochVector(float(sx), float(sy), float(sz))


def density_from_bloch(s) -> DensityMatrix:
    if not isinstance(s, BlochVector):
        s = BlochVector(*map(float, s))
    return DensityMatrix(density_from_components(s.as_array()))


def purity(rho) -> float:
    m = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho)
    return float(np.real(np.trace(m @ m)))


def linear_entropy(rho) -> float:
    """Idempotency defect ``1 - Tr rho^2``; zero exactly for pure states."""
    return 1.0 - purity(_as_density(rho))
