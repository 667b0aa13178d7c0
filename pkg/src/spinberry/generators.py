"""Master-equation right-hand sides for the thermal and dephasing channels.

Each generator is a pure function ``(rho, t) -> d rho / dt`` acting on a
single 2x2 matrix or on a stack ``(..., 2, 2)`` (``t`` broadcasts against
the stack's leading axes).  Two representations are provided:

* the diagonal frame, where the effective Hamiltonian is ``lambda1 sigma_z``
  and the jump operators are the constant ladder matrices;
* the instantaneous eigenbasis of the lab Hamiltonian, where the unitary
  part is ``(muB + w/2) sigma_z - a (w/2) sigma_n(t)`` and the dissipators
  are written in terms of ``sigma_n(t)``, ``sigma_+(t)``, ``sigma_-(t)``.

The instantaneous-frame dissipators are spelled out term by term rather
than obtained by conjugating the diagonal ones, so that the two
representations can be checked against each other.  The geometric tracer
``a`` multiplies the ``sigma_n(t)`` term of the unitary part only; ``a = 1``
is the physical generator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    Frame,
    ModelParams,
    derived,
    sigma_n,
    sigma_plus_inst,
)
from .qcore import PAULI_Z, SIGMA_MINUS, SIGMA_PLUS, DensityMatrix, dagger

__all__ = [
    "Channel",
    "GeneratorSpec",
    "thermal_diagonal",
    "dephasing_diagonal",
    "thermal_instantaneous",
    "dephasing_instantaneous",
    "thermal_fixed_point",
    "make_generator",
]

_SZ = np.asarray(PAULI_Z)
_SP = np.asarray(SIGMA_PLUS)
_SM = np.asarray(SIGMA_MINUS)
_SPSM = _SP @ _SM
_SMSP = _SM @ _SP


class Channel(enum.Enum):
    THERMAL = "thermal"
    DEPHASING = "dephasing"

    @classmethod
    def parse(cls, value) -> "Channel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown channel {value!r}; expected 'thermal' or 'dephasing'") from None


def _arr(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _comm(h, r):
    return h @ r - r @ h


def _anti(h, r):
    return h @ r + r @ h


# ---------------------------------------------------------------- diagonal frame


def _thermal_diag_rhs(p: ModelParams, lambda1: float, r: np.ndarray) -> np.ndarray:
    out = -1j * lambda1 * _comm(_SZ, r)
    if p.k:
        out = out + p.k * (p.nbar + 1) * (2 * _SM @ r @ _SP - _anti(_SPSM, r))
        if p.nbar:
            out = out + p.k * p.nbar * (2 * _SP @ r @ _SM - _anti(_SMSP, r))
    return out


def _dephasing_diag_rhs(p: ModelParams, lambda1: float, r: np.ndarray) -> np.ndarray:
    return -1j * lambda1 * _comm(_SZ, r) + 0.5 * p.k * (_SZ @ r @ _SZ - r)


def thermal_diagonal(p: ModelParams):
    """Thermal-bath generator in the diagonal frame.

    Parameters
    ----------
    p : ModelParams

    Returns
    -------
    callable
        ``rhs(rho) -> d rho/dt`` with
        ``-i[lambda1 sz, rho] + k(n+1) D[s-] rho + k n D[s+] rho``,
        ``D[c] rho = 2 c rho c^dag - {c^dag c, rho}``.

    Raises
    ------
    DegeneracyError
        If ``lambda1 = 0``.
    """
    lam = derived(p).lambda1
    return lambda rho, t=0.0: _thermal_diag_rhs(p, lam, _arr(rho))


def dephasing_diagonal(p: ModelParams):
    """Dephasing generator ``-i[lambda1 sz, rho] + (k/2)(sz rho sz - rho)``."""
    lam = derived(p).lambda1
    return lambda rho, t=0.0: _dephasing_diag_rhs(p, lam, _arr(rho))


# ---------------------------------------------------------- instantaneous frame


def _inst_operators(p: ModelParams, t):
    t = np.asarray(t, dtype=float)
    n = sigma_n(p, t)
    sp = sigma_plus_inst(p, t)
    sm = dagger(sp)
    e = np.exp(1j * p.omega * t)[..., None, None]
    return n, sp, sm, e


def _inst_unitary(p: ModelParams, n: np.ndarray, r: np.ndarray) -> np.ndarray:
    h = (p.muB + 0.5 * p.omega) * _SZ - p.tracer_a * 0.5 * p.omega * n
    return -1j * _comm(h, r)


def _thermal_inst_dissipator(p: ModelParams, Lam: float, t, r: np.ndarray) -> np.ndarray:
    n, P, M, e = _inst_operators(p, t)
    q = math.sqrt(max(0.0, 1.0 - Lam * Lam))
    ei = 1.0 / e
    # part proportional to (2n+1)/2
    sym = (
        -2 * r
        + (1 - Lam**2) * (n @ r @ n - ei**2 * (P @ r @ P) - e**2 * (M @ r @ M))
        + (1 + Lam**2) * (P @ r @ M + M @ r @ P)
        - Lam * q * (e * (n @ r @ M + M @ r @ n) + ei * (P @ r @ n + n @ r @ P))
    )
    # temperature-independent part; the anticommutator closes after the
    # sigma_n / sigma_+- combination
    x = Lam * n + q * (ei * P + e * M)
    asym = -0.5 * (
        _anti(x, r)
        + 2 * Lam * (P @ r @ M - M @ r @ P)
        + q * (ei * (n @ r @ P - P @ r @ n) + e * (M @ r @ n - n @ r @ M))
    )
    return 0.5 * (2 * p.nbar + 1) * sym + asym


def _dephasing_inst_dissipator(p: ModelParams, Lam: float, t, r: np.ndarray) -> np.ndarray:
    n, P, M, e = _inst_operators(p, t)
    q = math.sqrt(max(0.0, 1.0 - Lam * Lam))
    ei = 1.0 / e
    return (
        Lam**2 * (n @ r @ n)
        + Lam * q * (ei * (n @ r @ P + P @ r @ n) + e * (n @ r @ M + M @ r @ n))
        + (1 - Lam**2) * (ei**2 * (P @ r @ P) + e**2 * (M @ r @ M) + P @ r @ M + M @ r @ P)
        - r
    )


def _thermal_inst_rhs(p, Lam, r, t):
    n = sigma_n(p, t)
    out = _inst_unitary(p, n, r)
    if p.k:
        out = out + p.k * _thermal_inst_dissipator(p, Lam, t, r)
    return out


def _dephasing_inst_rhs(p, Lam, r, t):
    n = sigma_n(p, t)
    out = _inst_unitary(p, n, r)
    if p.k:
        out = out + 0.5 * p.k * _dephasing_inst_dissipator(p, Lam, t, r)
    return out


def thermal_instantaneous(p: ModelParams, t):
    """Thermal generator in the instantaneous eigenbasis at time ``t``.

    Returns ``rhs(rho)``; the unitary part is
    ``-i[(muB + w/2) sz - a (w/2) sigma_n(t), rho]`` and the dissipator is
    ``k`` times the instantaneous-basis image of the diagonal-frame one.
    """
    Lam = derived(p).Lambda
    return lambda rho: _thermal_inst_rhs(p, Lam, _arr(rho), t)


def dephasing_instantaneous(p: ModelParams, t):
    """Dephasing generator in the instantaneous eigenbasis at time ``t``."""
    Lam = derived(p).Lambda
    return lambda rho: _dephasing_inst_rhs(p, Lam, _arr(rho), t)


def thermal_fixed_point(p: ModelParams) -> DensityMatrix:
    """Stationary state of the thermal channel in the diagonal frame.

    ``diag(n/(2n+1), (n+1)/(2n+1))``.  For ``k = 0`` every diagonal state is
    stationary; the Gibbs state is returned regardless.
    """
    g = 1.0 / (2 * p.nbar + 1)
    return DensityMatrix(np.diag([p.nbar * g, (p.nbar + 1) * g]).astype(complex))


# ------------------------------------------------------------------ dispatch


@dataclass(frozen=True)
class GeneratorSpec:
    """A channel in a frame, with fixed parameters.

    Attributes
    ----------
    channel : Channel
    frame : Frame
        ``Frame.DIAGONAL`` or ``Frame.INSTANTANEOUS``.
    params : ModelParams
    """

    channel: Channel
    frame: Frame
    params: ModelParams

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel.parse(self.channel))
        frame = Frame.parse(self.frame)
        if frame not in (Frame.DIAGONAL, Frame.INSTANTANEOUS):
            raise ValueError(f"generators exist in the diagonal and instantaneous frames, not {frame.value}")
        object.__setattr__(self, "frame", frame)
        derived(self.params)  # degeneracy check up front

    @property
    def autonomous(self) -> bool:
        return self.frame is Frame.DIAGONAL

    @property
    def harmonics(self) -> int:
        """Highest power of ``exp(+-i w t)`` in the time dependence."""
        return 0 if self.autonomous else 2

    def rhs(self, rho, t=0.0) -> np.ndarray:
        r = _arr(rho)
        d = derived(self.params)
        if self.frame is Frame.DIAGONAL:
            if self.channel is Channel.THERMAL:
                return _thermal_diag_rhs(self.params, d.lambda1, r)
            return _dephasing_diag_rhs(self.params, d.lambda1, r)
        if self.channel is Channel.THERMAL:
            return _thermal_inst_rhs(self.params, d.Lambda, r, t)
        return _dephasing_inst_rhs(self.params, d.Lambda, r, t)

    __call__ = rhs


def make_generator(channel, frame, p: ModelParams) -> GeneratorSpec:
    return GeneratorSpec(Channel.parse(channel), Frame.parse(frame), p)
