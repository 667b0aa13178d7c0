"""The driven spin-1/2: parameters, Hamiltonians and frame transformations.

The lab Hamiltonian is a field of constant norm precessing about z,

    H(t) = muB [[cos th, sin th e^{-i w t}], [sin th e^{i w t}, -cos th]].

Frames are related to the lab frame by unitaries ``U_F(t)`` with
``rho_F = U_F^dag rho_lab U_F``:

    Lab            U = 1
    Rotating       U = R(t) = exp(-i w t sigma_z / 2)
    Diagonal       U = R(t) D            (D real, symmetric, D^2 = 1)
    Instantaneous  U = W(t) = V(t) exp(+i w t sigma_z / 2)

``V(t)`` is the eigenbasis matrix returned by :func:`instantaneous_basis`.
``W(t)`` has the same columns up to the phases ``e^{+-i w t/2}``; it is the
gauge in which the instantaneous-frame master equation has the
``(muB + w/2) sigma_z - (w/2) sigma_n(t)`` unitary part used by
:mod:`spinberry.generators`, and in which ``sigma_n(t) = W^dag sigma_z W``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .qcore import (
    PAULI_X,
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    DensityMatrix,
    dagger,
)

__all__ = [
    "ADIABATIC_THRESHOLD",
    "WEAK_THRESHOLD",
    "Frame",
    "ModelParams",
    "DerivedParams",
    "DegeneracyError",
    "RegimeError",
    "derived",
    "hamiltonian_lab",
    "rotation_matrix",
    "diagonalizing_matrix",
    "instantaneous_basis",
    "instantaneous_frame_unitary",
    "sigma_n",
    "sigma_plus_inst",
    "sigma_minus_inst",
    "frame_unitary",
    "convert_matrices",
    "convert_state",
    "initial_state",
]

ADIABATIC_THRESHOLD = 0.01
WEAK_THRESHOLD = 0.01


class DegeneracyError(ValueError):
    """lambda_1 = 0: the diagonal frame does not exist."""


class RegimeError(ValueError):
    """Parameters outside the adiabatic / weak-coupling regime of the closed forms."""


class Frame(enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"
    DIAGONAL = "diagonal"
    INSTANTANEOUS = "instantaneous"

    @classmethod
    def parse(cls, value) -> "Frame":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown frame {value!r}; expected one of {names}") from None


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the scenario, natural units.

    ``alpha`` fixes the initial state ``cos(alpha)|+> + sin(alpha)|->`` in the
    sigma_z basis; ``tracer_a`` multiplies the geometric term (1 = physical).
    """

    muB: float = 1.0
    omega: float = 1e-3
    theta: float = math.pi / 4
    k: float = 1e-2
    nbar: float = 0.0
    alpha: float = 0.0
    tracer_a: float = 1.0

    def __post_init__(self):
        for name in ("muB", "omega", "theta", "k", "nbar", "alpha", "tracer_a"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.muB <= 0:
            raise ValueError(f"muB must be > 0, got {self.muB}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    @property
    def period(self) -> float:
        """Drive period 2 pi / omega."""
        if self.omega == 0:
            raise ValueError("static field (omega = 0) has no drive period")
        return 2 * math.pi / abs(self.omega)

    @property
    def decay_rate(self) -> float:
        """Thermal coherence decay rate k (2 nbar + 1)."""
        return self.k * (2 * self.nbar + 1)

    def is_adiabatic(self, threshold: float = ADIABATIC_THRESHOLD) -> bool:
        return abs(self.omega) / self.muB <= threshold

    def is_weak(self, threshold: float = WEAK_THRESHOLD) -> bool:
        return self.k / self.muB <= threshold

    def require_regime(
        self,
        adiabatic_threshold: float = ADIABATIC_THRESHOLD,
        weak_threshold: float = WEAK_THRESHOLD,
    ) -> None:
        problems = []
        if not self.is_adiabatic(adiabatic_threshold):
            problems.append(f"omega/muB = {abs(self.omega) / self.muB:.3g} > {adiabatic_threshold:g}")
        if not self.is_weak(weak_threshold):
            problems.append(f"k/muB = {self.k / self.muB:.3g} > {weak_threshold:g}")
        if problems:
            raise RegimeError("closed form invalid outside the adiabatic/weak-coupling regime: " + "; ".join(problems))


@dataclass(frozen=True)
class DerivedParams:
    lambda1: float
    Lambda: float
    solid_angle: float


def derived(p: ModelParams) -> DerivedParams:
    detuned = p.muB * math.cos(p.theta) - 0.5 * p.omega
    lambda1 = math.hypot(p.muB * math.sin(p.theta), detuned)
    if lambda1 <= 1e-14 * max(p.muB, abs(p.omega)):
        raise DegeneracyError(
            f"lambda1 = {lambda1:.3e}: muB cos(theta) = omega/2 with sin(theta) = 0, diagonal frame undefined"
        )
    Lam = min(1.0, max(-1.0, detuned / lambda1))
    return DerivedParams(lambda1=lambda1, Lambda=Lam, solid_angle=2 * math.pi * (1 - math.cos(p.theta)))


def _phase(p: ModelParams, t, sign: float = 1.0) -> np.ndarray:
    return np.exp(sign * 1j * p.omega * np.asarray(t, dtype=float))


def _mat(a00, a01, a10, a11) -> np.ndarray:
    a00, a01, a10, a11 = np.broadcast_arrays(a00, a01, a10, a11)
    out = np.empty(a00.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a00
    out[..., 0, 1] = a01
    out[..., 1, 0] = a10
    out[..., 1, 1] = a11
    return out


def hamiltonian_lab(p: ModelParams, t) -> np.ndarray:
    c, s = math.cos(p.theta), math.sin(p.theta)
    e = _phase(p, t)
    return p.muB * _mat(c, s / e, s * e, -c + 0 * e)


def rotation_matrix(p: ModelParams, t) -> np.ndarray:
    """R(t) = exp(-i w t sigma_z / 2)."""
    h = _phase(p, t, -0.5)
    return _mat(h, 0 * h, 0 * h, 1 / h)


def diagonalizing_matrix(p: ModelParams) -> np.ndarray:
    """D with D (H_R - w/2 sigma_z) D = diag(lambda1, -lambda1)."""
    Lam = derived(p).Lambda
    return math.sqrt(0.5 * (1 - Lam)) * PAULI_X + math.sqrt(0.5 * (1 + Lam)) * PAULI_Z


def instantaneous_basis(p: ModelParams, t) -> np.ndarray:
    """V(t): columns are the +muB and -muB eigenvectors of the lab Hamiltonian."""
    c, s = math.cos(p.theta / 2), math.sin(p.theta / 2)
    h = _phase(p, t, 0.5)
    return _mat(c / h, -s / h, s * h, c * h)


def instantaneous_frame_unitary(p: ModelParams, t) -> np.ndarray:
    """W(t) = V(t) exp(+i w t sigma_z/2), the gauge of the instantaneous frame.

    Same eigenvectors as V(t), re-phased column by column.
    """
    c, s = math.cos(p.theta / 2), math.sin(p.theta / 2)
    e = _phase(p, t)
    return _mat(c + 0 * e, -s / e, s * e, c + 0 * e)


def sigma_n(p: ModelParams, t) -> np.ndarray:
    c, s = math.cos(p.theta), math.sin(p.theta)
    e = _phase(p, t)
    return _mat(c + 0 * e, -s / e, -s * e, -c + 0 * e)


def sigma_plus_inst(p: ModelParams, t) -> np.ndarray:
    """sigma_+(t) = e^{iwt} [ sin(th)/2 sigma_z + cos^2(th/2) e^{-iwt} sigma_+ - sin^2(th/2) e^{iwt} sigma_- ]."""
    e = _phase(p, t)[..., None, None]
    half = 0.5 * p.theta
    return e * (
        0.5 * math.sin(p.theta) * PAULI_Z
        + math.cos(half) ** 2 / e * SIGMA_PLUS
        - math.sin(half) ** 2 * e * SIGMA_MINUS
    )


def sigma_minus_inst(p: ModelParams, t) -> np.ndarray:
    return dagger(sigma_plus_inst(p, t))


def frame_unitary(frame, p: ModelParams, t) -> np.ndarray:
    frame = Frame.parse(frame)
    t = np.asarray(t, dtype=float)
    if frame is Frame.LAB:
        return np.broadcast_to(np.eye(2, dtype=complex), t.shape + (2, 2))
    if frame is Frame.ROTATING:
        return rotation_matrix(p, t)
    if frame is Frame.DIAGONAL:
        return rotation_matrix(p, t) @ diagonalizing_matrix(p)
    return instantaneous_frame_unitary(p, t)


def convert_matrices(rhos, source, target, p: ModelParams, t) -> np.ndarray:
    """Change frame of a matrix or a stack of matrices sampled at times ``t``.

    Works for any operator, not only states: ``X_target = U_t^dag U_s X_s U_s^dag U_t``.
    """
    source, target = Frame.parse(source), Frame.parse(target)
    rhos = np.asarray(rhos, dtype=complex)
    if source is target:
        return rhos.copy()
    u = dagger(frame_unitary(target, p, t)) @ frame_unitary(source, p, t)
    return u @ rhos @ dagger(u)


def convert_state(rho, source, target, p: ModelParams, t: float) -> DensityMatrix:
    """Frame change of a single state; trace and spectrum are preserved."""
    if float(t) < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if not isinstance(rho, DensityMatrix):
        DensityMatrix(m)
    out = convert_matrices(m, source, target, p, float(t))
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, herm_tol=rho.herm_tol, trace_tol=rho.trace_tol, pos_tol=rho.pos_tol)
    return DensityMatrix(out)


def initial_state(p: ModelParams, frame=Frame.LAB) -> DensityMatrix:
    """Pure state cos(alpha)|+> + sin(alpha)|-> at t = 0, expressed in ``frame``."""
    psi = np.array([math.cos(p.alpha), math.sin(p.alpha)], dtype=complex)
    rho = np.outer(psi, psi.conj())
    return DensityMatrix(convert_matrices(rho, Frame.LAB, frame, p, 0.0))
