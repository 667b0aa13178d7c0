"""Time evolution of master equations.

Fixed-step RK4 is the workhorse.  Because every generator here is linear in
``rho``, one RK4 step is itself a linear map ``vec(rho) -> M vec(rho)`` and
the engine builds these 4x4 step matrices directly, multiplying them
together between output samples.  The stage times are the usual
``t, t + h/2, t + h`` so the method keeps fourth order for the
time-dependent instantaneous-frame generator.  This is arithmetically the
same scheme as stepping the matrix, only batched.

``RK45Adaptive`` is a Dormand-Prince 5(4) pair with max-norm error control
that steps the matrix ODE directly; it works with any callable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .generators import Channel, GeneratorSpec
from .model import Frame, ModelParams, derived
from .qcore import DensityMatrix, check_density, dagger, eigvalsh2

__all__ = [
    "Method",
    "IntegratorOptions",
    "Trajectory",
    "IntegrationError",
    "StateCorruptionError",
    "TRAJ_HERM_TOL",
    "TRAJ_TRACE_TOL",
    "TRAJ_POS_TOL",
    "default_step",
    "superoperator",
    "evolve",
    "evolve_exact_diagonal",
    "exact_diagonal_matrices",
]

TRAJ_HERM_TOL = 1e-10
TRAJ_TRACE_TOL = 1e-10
TRAJ_POS_TOL = -1e-8

# largest number of 4x4 step matrices held in memory at once
_CHUNK_STEPS = 1 << 16


class IntegrationError(RuntimeError):
    """The integrator could not reach the requested time."""


class StateCorruptionError(RuntimeError):
    """An integrated state left the physical set beyond tolerance."""

    def __init__(self, t: float, invariant: str, value: float):
        self.t = t
        self.invariant = invariant
        self.value = value
        super().__init__(f"state invalid at t = {t:.6g}: {invariant} = {value:.3e}")


class Method(enum.Enum):
    RK4_FIXED = "rk4"
    RK45_ADAPTIVE = "rk45"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        aliases = {"rk4fixed": "rk4", "rk4": "rk4", "rk45adaptive": "rk45", "rk45": "rk45", "dopri5": "rk45"}
        if v not in aliases:
            raise ValueError(f"unknown integrator method {value!r}")
        return cls(aliases[v])


@dataclass(frozen=True)
class IntegratorOptions:
    """Integrator settings.

    ``step`` is used by RK4 (``None`` picks :func:`default_step`);
    ``rtol``/``atol``/``max_step``/``max_steps`` by RK45.  ``direct = True``
    forces RK4 to step the matrix equation one step at a time instead of
    building step matrices (slow; a cross-check).
    """

    method: Method = Method.RK4_FIXED
    step: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float | None = None
    max_steps: int = 10_000_000
    direct: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if self.step is not None and not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"step must be > 0, got {self.step}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be > 0")


def default_step(p: ModelParams) -> float:
    """``min(pi/(50 muB), 2 pi/(200 w), 1/(10 k))`` over the terms that exist."""
    h = 2 * math.pi / (2 * p.muB) / 50
    if p.omega:
        h = min(h, 2 * math.pi / abs(p.omega) / 200)
    if p.k:
        h = min(h, 1 / (10 * p.k))
    return h


# ---------------------------------------------------------------- trajectory


def _first_violation(times, rhos, herm_tol, trace_tol, pos_tol):
    """Index and description of the first invalid sample, or None."""
    herm = np.max(np.abs(rhos - dagger(rhos)), axis=(-1, -2))
    tr = np.abs(np.trace(rhos, axis1=-2, axis2=-1) - 1.0)
    lo = eigvalsh2(0.5 * (rhos + dagger(rhos)))[..., 0]
    bad = (herm > herm_tol) | (tr > trace_tol) | (lo < pos_tol) | ~np.isfinite(herm)
    if not bad.any():
        return None
    i = int(np.argmax(bad))
    if not np.isfinite(herm[i]):
        return i, "finite", float("nan")
    if herm[i] > herm_tol:
        return i, "hermiticity", float(herm[i])
    if tr[i] > trace_tol:
        return i, "trace", float(tr[i])
    return i, "positivity", float(lo[i])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered states in one frame.

    Attributes
    ----------
    frame : Frame
    times : ndarray, shape (N,)
        Strictly increasing.
    rhos : ndarray, shape (N, 2, 2)
    params : ModelParams or None
        Needed for frame conversion downstream.
    """

    frame: Frame
    times: np.ndarray
    rhos: np.ndarray
    params: ModelParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame.parse(self.frame))
        t = np.array(self.times, dtype=float)
        r = np.array(self.rhos, dtype=complex)
        if t.ndim != 1 or r.shape != t.shape + (2, 2):
            raise ValueError(f"times {t.shape} and rhos {r.shape} do not match")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        bad = _first_violation(t, r, TRAJ_HERM_TOL, TRAJ_TRACE_TOL, TRAJ_POS_TOL)
        if bad is not None:
            i, name, val = bad
            raise StateCorruptionError(float(t[i]), name, val)
        t.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rhos", r)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def samples(self):
        """List of ``(t, DensityMatrix)`` pairs."""
        return [(float(t), self.state(i)) for i, t in enumerate(self.times)]

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(
            self.rhos[i], herm_tol=TRAJ_HERM_TOL, trace_tol=TRAJ_TRACE_TOL, pos_tol=TRAJ_POS_TOL
        )

    @property
    def final(self) -> DensityMatrix:
        return self.state(-1)


# ------------------------------------------------------------ superoperators

_BASIS = np.eye(4, dtype=complex).reshape(4, 2, 2)


def superoperator(rhs, t=0.0) -> np.ndarray:
    """4x4 matrix of a linear ``rhs(rho, t)`` in the row-major ``vec``.

    Found by applying ``rhs`` to the four matrix units; ``t`` may be an
    array, giving a stack ``t.shape + (4, 4)``.
    """
    t = np.asarray(t, dtype=float)
    out = np.asarray(rhs(_BASIS, t[..., None]))
    out = np.broadcast_to(out, t.shape + (4, 2, 2)).reshape(t.shape + (4, 4))
    return np.swapaxes(out, -1, -2)


class _TrigSuperoperator:
    """Superoperator of a generator that is a trigonometric polynomial in ``w t``.

    Sampled at ``2K+1`` equally spaced phases over one period and
    interpolated exactly by its Fourier coefficients.
    """

    def __init__(self, rhs, omega: float, harmonics: int):
        self.omega = omega
        K = harmonics
        self.modes = np.arange(-K, K + 1)
        ts = 2 * math.pi / omega * np.arange(2 * K + 1) / (2 * K + 1)
        S = superoperator(rhs, ts)
        ph = np.exp(-1j * np.outer(self.modes, omega * ts))
        coef = np.einsum("ms,sij->mij", ph, S) / (2 * K + 1)
        # the generator is trace-annihilating; strip the interpolation
        # roundoff from the trace row so it cannot build up over 1e7 steps
        tr = np.array([1.0, 0.0, 0.0, 1.0])
        coef -= 0.5 * tr[None, :, None] * (tr @ coef)[:, None, :]
        self.coef = coef.reshape(2 * K + 1, 16)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        ph = np.exp(1j * np.multiply.outer(self.omega * t, self.modes))
        return (ph.reshape(-1, self.modes.size) @ self.coef).reshape(t.shape + (4, 4))


_I4 = np.eye(4, dtype=complex)


def _compose(later: np.ndarray, earlier: np.ndarray) -> np.ndarray:
    """``(1 + A)(1 + B) - 1`` for step deltas ``A``, ``B``.

    Products are carried as offsets from the identity; forming ``1 + A``
    explicitly would round ``A`` against 1 at every step and the trace
    drifts by ~1e-10 over 1e7 steps.
    """
    return later + earlier + later @ earlier


def _rk4_step_deltas(sup, starts: np.ndarray, h: np.ndarray, n: int) -> np.ndarray:
    """``P - 1`` for the product ``P`` of ``n`` RK4 step matrices per start time.

    ``starts`` and ``h`` have shape (J,); returns (J, 4, 4).
    """
    J = starts.shape[0]
    hh = h[:, None, None, None]
    tg = starts[:, None] + h[:, None] * np.arange(n + 1)[None, :]
    Lg = sup(tg)
    Lh = sup(tg[:, :-1] + 0.5 * h[:, None])
    L1, L3 = Lg[:, :-1], Lg[:, 1:]
    K2 = Lh @ (_I4 + 0.5 * hh * L1)
    K3 = Lh @ (_I4 + 0.5 * hh * K2)
    K4 = L3 @ (_I4 + hh * K3)
    D = hh / 6 * (L1 + 2 * K2 + 2 * K3 + K4)
    # pairwise product tree, later steps on the left
    while D.shape[1] > 1:
        if D.shape[1] % 2:
            D = np.concatenate([D, np.zeros((J, 1, 4, 4), dtype=complex)], axis=1)
        D = _compose(D[:, 1::2], D[:, 0::2])
    return D[:, 0]


def _rk4_autonomous_deltas(L: np.ndarray, h: np.ndarray, n: int) -> np.ndarray:
    """``M(h)^n - 1`` with ``M(h) = sum_{j<=4} (hL)^j / j!`` for each h in (J,)."""
    hh = h[:, None, None]
    A = hh * L
    A2 = A @ A
    base = A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24
    out = np.zeros_like(base)
    while n:
        if n & 1:
            out = _compose(base, out)
        n >>= 1
        if n:
            base = _compose(base, base)
    return out


def _interval_steps(dts: np.ndarray, h: float) -> np.ndarray:
    return np.maximum(1, np.ceil(dts / h * (1 - 1e-12)).astype(np.int64))


def _propagator_deltas(sup, autonomous: bool, edges: np.ndarray, h: float) -> np.ndarray:
    """``P_j - 1`` for the step-matrix product over each ``[edges[j], edges[j+1]]``."""
    dts = np.diff(edges)
    ns = _interval_steps(dts, h)
    out = np.empty((dts.size, 4, 4), dtype=complex)
    L0 = sup(np.array(0.0)) if autonomous else None
    for n in np.unique(ns):
        n = int(n)
        idx = np.flatnonzero(ns == n)
        hs = dts[idx] / n
        if autonomous:
            out[idx] = _rk4_autonomous_deltas(L0, hs, n)
        elif n > _CHUNK_STEPS:
            for j, hj in zip(idx, hs):
                out[j] = _long_interval(sup, edges[j], hj, n)
        else:
            per_chunk = max(1, _CHUNK_STEPS // n)
            for c in range(0, idx.size, per_chunk):
                sel = idx[c : c + per_chunk]
                out[sel] = _rk4_step_deltas(sup, edges[sel], hs[c : c + per_chunk], n)
    return out


def _long_interval(sup, t0: float, h: float, n: int) -> np.ndarray:
    D = np.zeros((4, 4), dtype=complex)
    done = 0
    while done < n:
        m = min(_CHUNK_STEPS, n - done)
        D = _compose(_rk4_step_deltas(sup, np.array([t0 + done * h]), np.array([h]), m)[0], D)
        done += m
    return D


def _rk4_direct(rhs, r0: np.ndarray, edges: np.ndarray, h: float) -> np.ndarray:
    out = [r0]
    r = r0
    ns = _interval_steps(np.diff(edges), h)
    for j, n in enumerate(ns):
        t = edges[j]
        hj = (edges[j + 1] - edges[j]) / n
        for i in range(int(n)):
            ti = t + i * hj
            k1 = rhs(r, ti)
            k2 = rhs(r + 0.5 * hj * k1, ti + 0.5 * hj)
            k3 = rhs(r + 0.5 * hj * k2, ti + 0.5 * hj)
            k4 = rhs(r + hj * k3, ti + hj)
            r = r + hj / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(r)
    return np.array(out)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rk45(rhs, r0: np.ndarray, edges: np.ndarray, opts: IntegratorOptions, h0: float) -> np.ndarray:
    out = [r0]
    r = r0
    t = float(edges[0])
    h = min(h0, opts.max_step or h0)
    steps = 0
    k1 = rhs(r, t)
    for target in edges[1:]:
        while t < target:
            hs = min(h, target - t)
            last = hs == target - t
            if hs <= 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow (h = {hs:.3e}) at t = {t:.6g}")
            ks = [k1]
            for i in range(1, 7):
                ri = r + hs * sum(a * kk for a, kk in zip(_DP_A[i], ks))
                ks.append(rhs(ri, t + _DP_C[i] * hs))
            r5 = r + hs * sum(b * kk for b, kk in zip(_DP_B5, ks) if b)
            r4 = r + hs * sum(b * kk for b, kk in zip(_DP_B4, ks) if b)
            scale = opts.atol + opts.rtol * np.maximum(np.abs(r), np.abs(r5))
            err = float(np.max(np.abs(r5 - r4) / scale))
            steps += 1
            if steps > opts.max_steps:
                raise IntegrationError(f"exceeded {opts.max_steps} steps at t = {t:.6g}")
            if not math.isfinite(err):
                raise IntegrationError(f"non-finite error estimate at t = {t:.6g}")
            factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
            h_new = hs * min(5.0, max(0.2, factor))
            if err <= 1.0:
                t = float(target) if last else t + hs
                r = r5
                k1 = ks[6]  # first-same-as-last
                if last:
                    # a step clipped to hit the sample says little about h
                    h_new = max(h, h_new)
            h = min(h_new, opts.max_step) if opts.max_step else h_new
        out.append(r)
    return np.array(out)


# -------------------------------------------------------------------- evolve


def _as_matrix(rho0) -> np.ndarray:
    if isinstance(rho0, DensityMatrix):
        return rho0.matrix.copy()
    m = np.asarray(rho0, dtype=complex)
    check_density(m, where="initial state")
    return m


def evolve(gen, rho0, t_grid, opts: IntegratorOptions | None = None, *, frame=None, params=None) -> Trajectory:
    """Integrate ``d rho/dt = gen(rho, t)`` from ``t = 0`` and sample on ``t_grid``.

    Parameters
    ----------
    gen : GeneratorSpec or callable
        A :class:`GeneratorSpec`, or any ``rhs(rho, t)``.  Plain callables
        need ``frame`` (and ideally ``params``) for the returned trajectory
        and are stepped directly rather than through step matrices.
    rho0 : DensityMatrix or array
        State at ``t = 0``.
    t_grid : array_like
        Strictly increasing sample times, the first one ``>= 0``.  Samples
        land exactly on these times.
    opts : IntegratorOptions, optional

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationError
        Adaptive step underflow or step budget exhausted.
    StateCorruptionError
        A sample fails trace / Hermiticity / positivity checks.
    """
    opts = opts or IntegratorOptions()
    grid = np.asarray(t_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("empty time grid")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at t >= 0")
    r0 = _as_matrix(rho0)

    if isinstance(gen, GeneratorSpec):
        p = gen.params
        rhs = gen.rhs
        frame = gen.frame
        linear = True
        autonomous = gen.autonomous or p.omega == 0
    else:
        if frame is None:
            raise ValueError("a frame is required when evolving a plain callable")
        p = params
        rhs = gen
        linear = False
        autonomous = False

    edges = grid if grid[0] == 0 else np.concatenate([[0.0], grid])
    if opts.method is Method.RK4_FIXED:
        h = opts.step or (default_step(p) if p is not None else None)
        if h is None:
            raise ValueError("a step is required when no ModelParams are known")
        if linear and not opts.direct:
            if autonomous:
                L = superoperator(rhs)
                sup = lambda t: np.broadcast_to(L, np.shape(t) + (4, 4))  # noqa: E731
            else:
                sup = _TrigSuperoperator(rhs, p.omega, gen.harmonics)
            deltas = _propagator_deltas(sup, autonomous, edges, h)
            vs = np.empty((edges.size, 4), dtype=complex)
            vs[0] = r0.reshape(4)
            for j in range(deltas.shape[0]):
                vs[j + 1] = vs[j] + deltas[j] @ vs[j]
            rhos = vs.reshape(-1, 2, 2)
        else:
            rhos = _rk4_direct(rhs, r0, edges, h)
    else:
        h0 = opts.max_step or (default_step(p) if p is not None else 1e-2)
        rhos = _rk45(rhs, r0, edges, opts, h0)

    if grid[0] != 0:
        rhos = rhos[1:]
    bad = _first_violation(grid, rhos, TRAJ_HERM_TOL, TRAJ_TRACE_TOL, TRAJ_POS_TOL)
    if bad is not None:
        i, name, val = bad
        raise StateCorruptionError(float(grid[i]), name, val)
    meta = {"method": opts.method.value}
    if isinstance(gen, GeneratorSpec):
        meta["channel"] = gen.channel.value
    return Trajectory(frame=frame, times=grid, rhos=rhos, params=p, meta=meta)


# ------------------------------------------------------ exact diagonal frame


def exact_diagonal_matrices(channel, p: ModelParams, rho0, times) -> np.ndarray:
    """Closed-form diagonal-frame states at an array of times, shape ``(N, 2, 2)``."""
    channel = Channel.parse(channel)
    lam = derived(p).lambda1
    r0 = _as_matrix(rho0)
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    if channel is Channel.THERMAL:
        g = 2 * p.nbar + 1
        eq = p.nbar / g
        decay = np.exp(-2 * p.k * g * t)
        r11 = eq * (1 - decay) + r0[0, 0].real * decay
        r12 = r0[0, 1] * np.exp(-(2j * lam + p.k * g) * t)
    else:
        r11 = np.full(t.shape, r0[0, 0].real)
        r12 = r0[0, 1] * np.exp(-(2j * lam + p.k) * t)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = r11
    out[..., 1, 1] = 1 - r11
    out[..., 0, 1] = r12
    out[..., 1, 0] = np.conj(r12)
    return out


def evolve_exact_diagonal(channel, p: ModelParams, rho0, t: float) -> DensityMatrix:
    """Exact diagonal-frame state at time ``t``.

    Thermal: populations relax to ``n/(2n+1)`` at rate ``2k(2n+1)``,
    coherences rotate at ``2 lambda1`` and decay at ``k(2n+1)``.
    Dephasing: populations frozen, coherences decay at ``k``.
    """
    if float(t) == 0.0:
        return rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0)
    return DensityMatrix(exact_diagonal_matrices(channel, p, rho0, float(t)))
