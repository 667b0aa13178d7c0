"""Closed-form adiabatic, weak-coupling solutions in the instantaneous frame.

For ``w << muB`` and ``k << muB`` the instantaneous-frame state separates
into a population relaxing toward the Gibbs value and a coherence that
picks up three independent factors:

* the dynamic phase ``exp(-2i muB t)``,
* the geometric phase ``exp(-i a w (1 - cos th) t)``, equal to the solid
  angle ``2 pi (1 - cos th)`` per drive cycle,
* a real damping ``exp(-chi t)`` with ``chi = k(2n+1)`` (thermal) or
  ``k`` (dephasing), independent of ``th`` and ``w``.

The initial state is ``cos(alpha)|+> + sin(alpha)|->`` in the sigma_z basis,
which in the instantaneous frame has ``rho11 = (1 + cos(th - 2 alpha))/2``
and ``rho12 = sin(2 alpha - th)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import IntegratorOptions, evolve
from .generators import Channel, make_generator
from .model import (
    ADIABATIC_THRESHOLD,
    WEAK_THRESHOLD,
    Frame,
    ModelParams,
    initial_state,
    sigma_n,
)
from .qcore import DensityMatrix

__all__ = [
    "PhaseReport",
    "AnalyticSpectrumParams",
    "ProbeRow",
    "adiabatic_thermal_rho_I",
    "adiabatic_dephasing_rho_I",
    "adiabatic_matrices",
    "adiabatic_mz",
    "phase_report",
    "analytic_spectrum",
    "adiabatic_convergence_probe",
]


@dataclass(frozen=True)
class PhaseReport:
    """Rates of the three factors multiplying the instantaneous-frame coherence."""

    geometric_rate: float
    geometric_per_cycle: float
    imaginary_chi_rate: float
    dynamic_rate: float


@dataclass(frozen=True)
class AnalyticSpectrumParams:
    """Line parameters of the adiabatic magnetization spectrum.

    The transform of ``m_z(t)`` (for ``t >= 0``) is

        s mu / sqrt(2 pi) [ dc pi delta(w')
                            - i decay / (w' + 2 i g)
                            - i resonant (1/(w' + Gamma + i g) + 1/(w' - Gamma + i g)) ]

    with ``g = linewidth`` and the weights below.  ``sign`` (``s``) is the
    global constant tying this expression to :func:`spinberry.spectrum.dft`
    applied to ``m_z = mu Tr(rho sigma_z)``.
    """

    Gamma: float
    linewidth: float
    dc_weight: float
    decay_weight: float
    resonant_weight: float
    sign: float = -1.0

    def transform(self, omega_prime, mu: float = 1.0) -> np.ndarray:
        """Regular part of the transform (the ``delta`` line omitted)."""
        w = np.asarray(omega_prime, dtype=float)
        g = self.linewidth
        bracket = -1j * self.decay_weight / (w + 2j * g) - 1j * self.resonant_weight * (
            1 / (w + self.Gamma + 1j * g) + 1 / (w - self.Gamma + 1j * g)
        )
        return self.sign * mu / math.sqrt(2 * math.pi) * bracket


@dataclass(frozen=True)
class ProbeRow:
    omega: float
    k: float
    deviation: float


def _check_regime(p: ModelParams, adiabatic_threshold: float, weak_threshold: float) -> None:
    p.require_regime(adiabatic_threshold, weak_threshold)


def _coherence(p: ModelParams, t: np.ndarray, rate: float) -> np.ndarray:
    amp = 0.5 * math.sin(2 * p.alpha - p.theta)
    phase = 2 * p.muB + p.tracer_a * p.omega * (1 - math.cos(p.theta))
    return amp * np.exp(-1j * phase * t) * np.exp(-rate * t)


def _assemble(r11: np.ndarray, r12: np.ndarray) -> np.ndarray:
    out = np.empty(np.shape(r11) + (2, 2), dtype=complex)
    out[..., 0, 0] = r11
    out[..., 1, 1] = 1 - r11
    out[..., 0, 1] = r12
    out[..., 1, 0] = np.conj(r12)
    return out


def adiabatic_matrices(
    channel,
    p: ModelParams,
    times,
    *,
    adiabatic_threshold: float = ADIABATIC_THRESHOLD,
    weak_threshold: float = WEAK_THRESHOLD,
) -> np.ndarray:
    """Closed-form ``rho_I`` at an array of times, shape ``times.shape + (2, 2)``."""
    channel = Channel.parse(channel)
    _check_regime(p, adiabatic_threshold, weak_threshold)
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    start = 0.5 * (1 + math.cos(p.theta - 2 * p.alpha))
    if channel is Channel.THERMAL:
        g = 2 * p.nbar + 1
        r11 = p.nbar / g + 0.5 * (1 / g + math.cos(p.theta - 2 * p.alpha)) * np.exp(-2 * p.k * g * t)
        r12 = _coherence(p, t, p.k * g)
    else:
        r11 = np.full(t.shape, start)
        r12 = _coherence(p, t, p.k)
    return _assemble(r11, r12)


def adiabatic_thermal_rho_I(p: ModelParams, t: float, **thresholds) -> DensityMatrix:
    """Instantaneous-frame state under the thermal channel.

    Parameters
    ----------
    p : ModelParams
        Must satisfy the adiabatic and weak-coupling flags.
    t : float
        Time, ``t >= 0``.
    **thresholds
        ``adiabatic_threshold`` and ``weak_threshold`` overrides.

    Returns
    -------
    DensityMatrix

    Raises
    ------
    RegimeError
        If ``w/muB`` or ``k/muB`` exceed their thresholds.
    """
    return DensityMatrix(adiabatic_matrices(Channel.THERMAL, p, float(t), **thresholds))


def adiabatic_dephasing_rho_I(p: ModelParams, t: float, **thresholds) -> DensityMatrix:
    """Instantaneous-frame state under dephasing: populations frozen, coherence damped at ``k``."""
    return DensityMatrix(adiabatic_matrices(Channel.DEPHASING, p, float(t), **thresholds))


def adiabatic_mz(channel, p: ModelParams, times, mu: float = 1.0, **thresholds) -> np.ndarray:
    """``mu Tr(rho_I sigma_n(t))``, the lab magnetization along z from the closed form."""
    t = np.asarray(times, dtype=float)
    rho = adiabatic_matrices(channel, p, t, **thresholds)
    return mu * np.real(np.trace(rho @ sigma_n(p, t), axis1=-2, axis2=-1))


def phase_report(channel, p: ModelParams) -> PhaseReport:
    channel = Channel.parse(channel)
    one_minus_cos = 1 - math.cos(p.theta)
    chi = p.k * (1 + 2 * p.nbar) if channel is Channel.THERMAL else p.k
    return PhaseReport(
        geometric_rate=p.tracer_a * p.omega * one_minus_cos,
        geometric_per_cycle=2 * math.pi * one_minus_cos,
        imaginary_chi_rate=chi,
        dynamic_rate=2 * p.muB,
    )


def analytic_spectrum(p: ModelParams, **thresholds) -> AnalyticSpectrumParams:
    """Line center, width and weights of the thermal-channel ``m_z`` spectrum."""
    p.require_regime(
        thresholds.get("adiabatic_threshold", ADIABATIC_THRESHOLD),
        thresholds.get("weak_threshold", WEAK_THRESHOLD),
    )
    g = 2 * p.nbar + 1
    c = math.cos(p.theta)
    return AnalyticSpectrumParams(
        Gamma=2 * p.muB - p.tracer_a * p.omega * c,
        linewidth=p.k * g,
        dc_weight=c / g,
        decay_weight=c * (1 / g + math.cos(p.theta - 2 * p.alpha)),
        resonant_weight=0.5 * math.sin(p.theta) * math.sin(p.theta - 2 * p.alpha),
    )


def adiabatic_convergence_probe(
    channel,
    p_base: ModelParams,
    omega_list,
    *,
    k_over_omega: float | None = None,
    step: float | None = None,
    samples: int = 401,
    **thresholds,
) -> list[ProbeRow]:
    """Closed form versus full integration over one drive period, for several ``w``.

    ``k`` is scaled with ``w`` so ``k/w`` stays at ``k_over_omega``
    (default: the ratio in ``p_base``).  Each row holds the largest
    elementwise deviation of the instantaneous-frame state over the
    period.
    """
    channel = Channel.parse(channel)
    ratio = p_base.k / p_base.omega if k_over_omega is None else k_over_omega
    rows = []
    for w in omega_list:
        p = p_base.replace(omega=float(w), k=ratio * float(w))
        times = np.linspace(0.0, p.period, samples)
        closed = adiabatic_matrices(channel, p, times, **thresholds)
        # RK4 phase error grows like h^4 T; hold that product fixed as w shrinks
        h = step or 0.01 / p.muB * min(1.0, (abs(p.omega) / (1e-3 * p.muB)) ** 0.25)
        traj = evolve(
            make_generator(channel, Frame.INSTANTANEOUS, p),
            initial_state(p, Frame.INSTANTANEOUS),
            times,
            IntegratorOptions(step=h),
        )
        rows.append(ProbeRow(omega=p.omega, k=p.k, deviation=float(np.max(np.abs(traj.rhos - closed)))))
    return rows
