"""Magnetization time series, discrete Fourier transforms and line fitting.

Transform convention (angular frequency, unitary prefactor)::

    F(w') = dt / sqrt(2 pi) * sum_n f(t_n) exp(+i w' t_n)

which is the Riemann sum of ``(1/sqrt(2 pi)) int f(t) exp(+i w' t) dt``.
With this sign a signal ``exp(-i G t)`` peaks at ``w' = +G`` and a damped
one ``exp(-(g + i G) t)`` has the pole ``1/(w' - G + i g)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .engine import Trajectory
from .model import Frame, convert_matrices
from .qcore import BlochVector, bloch_components

__all__ = [
    "TimeSeries",
    "Spectrum",
    "PeakFit",
    "FitError",
    "NonUniformGridError",
    "magnetization",
    "magnetization_components",
    "bloch_array",
    "bloch_trajectory",
    "dft",
    "fit_lorentzian",
    "lorentzian_power",
]


class NonUniformGridError(ValueError):
    pass


class FitError(RuntimeError):
    """Lorentzian fit did not converge; carries the best iterate."""

    def __init__(self, message: str, best: "PeakFit | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class TimeSeries:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a time series needs at least 2 samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @classmethod
    def from_samples(cls, times, values, rtol: float = 1e-9) -> "TimeSeries":
        t = np.asarray(times, dtype=float)
        if t.size < 2:
            raise ValueError("a time series needs at least 2 samples")
        steps = np.diff(t)
        dt = (t[-1] - t[0]) / (t.size - 1)
        if np.max(np.abs(steps - dt)) > rtol * max(abs(dt), abs(t[-1])):
            raise NonUniformGridError("samples are not on a uniform grid")
        return cls(float(t[0]), float(dt), np.asarray(values))


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def spacing(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(frozen=True)
class PeakFit:
    """Result of :func:`fit_lorentzian`.

    ``amplitude`` is the complex ``A`` of ``A / (w' - center + i hwhm)``;
    ``residual`` is the RMS power residual over the fit window.
    """

    center: float
    hwhm: float
    amplitude: complex
    baseline: float
    residual: float
    center_err: float
    hwhm_err: float
    points: int


# ------------------------------------------------------------- observables


def magnetization_components(traj: Trajectory, mu: float = 1.0) -> np.ndarray:
    """``mu Tr(rho_lab sigma_i)`` for every sample, shape ``(N, 3)``."""
    if traj.frame is not Frame.LAB and traj.params is None:
        raise ValueError("trajectory carries no ModelParams; cannot convert to the lab frame")
    lab = convert_matrices(traj.rhos, traj.frame, Frame.LAB, traj.params, traj.times)
    return mu * bloch_components(lab)


def magnetization(traj: Trajectory, p=None, mu: float = 1.0):
    """Lab-frame magnetization ``(m_x, m_y, m_z)`` as three :class:`TimeSeries`.

    Parameters
    ----------
    traj : Trajectory
        Any frame; uniformly sampled.
    p : ModelParams, optional
        Overrides ``traj.params`` for the frame conversion.
    mu : float
        Overall scale.
    """
    if p is not None and p is not traj.params:
        traj = Trajectory(traj.frame, traj.times, traj.rhos, params=p, meta=traj.meta)
    m = magnetization_components(traj, mu)
    return tuple(TimeSeries.from_samples(traj.times, m[:, i]) for i in range(3))


def bloch_array(traj: Trajectory) -> np.ndarray:
    """Bloch components in the trajectory's own frame, shape ``(N, 3)``."""
    return bloch_components(traj.rhos)


def bloch_trajectory(traj: Trajectory):
    """``[(t, BlochVector), ...]`` in the trajectory's own frame."""
    s = bloch_array(traj)
    return [(float(t), BlochVector(*map(float, v))) for t, v in zip(traj.times, s)]


# ---------------------------------------------------------------- transform


def dft(series: TimeSeries, window: str | None = None) -> Spectrum:
    """Discrete transform on the full angular-frequency grid ``2 pi m / (N dt)``.

    ``window`` is ``None`` or ``"hann"``; a window is applied to the samples
    without renormalization.  Frequencies are returned in ascending order.
    """
    f = np.asarray(series.values, dtype=complex)
    n = f.size
    if window is not None:
        if str(window).lower() != "hann":
            raise ValueError(f"unknown window {window!r}")
        f = f * np.hanning(n)
    # sum_n f_n e^{+i w_m n dt} = n * ifft(f)[m]
    w = 2 * math.pi * np.fft.fftfreq(n, series.dt)
    amp = series.dt / math.sqrt(2 * math.pi) * n * np.fft.ifft(f) * np.exp(1j * w * series.t0)
    order = np.argsort(w, kind="stable")
    return Spectrum(frequencies=w[order], amplitudes=amp[order])


def lorentzian_power(w, center: float, hwhm: float, amp2: float, baseline: float = 0.0):
    return amp2 / ((np.asarray(w) - center) ** 2 + hwhm**2) + baseline


def fit_lorentzian(
    spec: Spectrum,
    guess_center: float,
    guess_hwhm: float,
    *,
    window_hwhm: float = 8.0,
    min_points: int = 7,
    max_nfev: int = 2000,
) -> PeakFit:
    """Fit ``|A/(w' - c + i w)|^2 + b`` to the power spectrum near a guess.

    The fit window is ``guess_center +- window_hwhm * guess_hwhm``, widened
    to at least ``min_points`` bins.  ``c``, ``w`` and ``b`` come from a
    nonlinear least-squares fit of the power; the complex ``A`` from a
    linear fit of the amplitudes with ``c`` and ``w`` held fixed.

    Raises
    ------
    FitError
        Non-convergence, or a guess outside the spectral window.
    """
    w = spec.frequencies
    if not (w[0] <= guess_center <= w[-1]):
        raise FitError(f"guess center {guess_center} outside spectrum [{w[0]}, {w[-1]}]")
    if not guess_hwhm > 0:
        raise ValueError("guess_hwhm must be > 0")
    half = max(window_hwhm * guess_hwhm, 0.5 * min_points * spec.spacing)
    sel = np.flatnonzero(np.abs(w - guess_center) <= half)
    if sel.size < 4:
        raise FitError(f"only {sel.size} bins in the fit window")
    x = w[sel]
    y = spec.power[sel]
    ymax = float(y.max())
    scale = ymax if ymax > 0 else 1.0
    yn = y / scale

    def model(q):
        c, logw, loga, b = q
        hw = math.exp(logw)
        return math.exp(loga) / ((x - c) ** 2 + hw * hw) + b

    c0 = float(x[np.argmax(y)]) if abs(float(x[np.argmax(y)]) - guess_center) <= half else guess_center
    q0 = np.array([c0, math.log(guess_hwhm), math.log(guess_hwhm**2), 0.0])
    fit = least_squares(
        lambda q: model(q) - yn,
        q0,
        x_scale=np.array([guess_hwhm, 1.0, 1.0, 1.0]),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        max_nfev=max_nfev,
    )
    c, logw, loga, b = fit.x
    hw = math.exp(logw)
    resid = float(np.sqrt(np.mean(fit.fun**2))) * scale
    # complex amplitude with (c, hw) fixed: F ~ A/(w - c + i hw) + beta
    basis = np.stack([1 / (x - c + 1j * hw), np.ones_like(x, dtype=complex)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, spec.amplitudes[sel], rcond=None)
    dof = max(1, sel.size - 4)
    try:
        cov = np.linalg.inv(fit.jac.T @ fit.jac) * (np.sum(fit.fun**2) / dof)
        c_err = float(math.sqrt(max(cov[0, 0], 0.0)))
        w_err = float(hw * math.sqrt(max(cov[1, 1], 0.0)))
    except np.linalg.LinAlgError:
        c_err = w_err = float("inf")
    best = PeakFit(
        center=float(c),
        hwhm=hw,
        amplitude=complex(coef[0]),
        baseline=float(b) * scale,
        residual=resid,
        center_err=c_err,
        hwhm_err=w_err,
        points=int(sel.size),
    )
    if not fit.success or not math.isfinite(c) or not hw > 0:
        raise FitError(f"Lorentzian fit did not converge: {fit.message}", best)
    return best
