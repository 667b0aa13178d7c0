import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinberry.acceptance import kron_superoperator
from spinberry.engine import (
    IntegrationError,
    IntegratorOptions,
    Method,
    StateCorruptionError,
    Trajectory,
    default_step,
    evolve,
    evolve_exact_diagonal,
    exact_diagonal_matrices,
    superoperator,
)
from spinberry.generators import Channel, make_generator
from spinberry.model import Frame, ModelParams, derived, initial_state
from spinberry.qcore import density_from_bloch, purity

FIG1 = ModelParams(muB=1.0, omega=1e-3, theta=math.pi / 4, k=1e-2, nbar=0.0, alpha=0.0)
RHO0 = density_from_bloch((0.4, -0.3, 0.5)).matrix


# ------------------------------------------------------------- examples


def test_unitary_evolution_keeps_purity():
    p = FIG1.replace(k=0.0, omega=0.05)
    t = np.linspace(0, 60, 121)
    traj = evolve(
        make_generator("thermal", "instantaneous", p),
        initial_state(p, Frame.INSTANTANEOUS),
        t,
        IntegratorOptions(step=5e-3),
    )
    pur = np.einsum("nij,nji->n", traj.rhos, traj.rhos).real
    assert np.max(np.abs(pur - 1)) <= 1e-10


def test_excited_population_decays_exponentially():
    p = ModelParams(k=0.02, nbar=0.0, omega=0.1)
    t = np.linspace(0, 100, 51)
    traj = evolve(make_generator("thermal", "diagonal", p), np.diag([1.0, 0.0]), t)
    assert np.allclose(traj.rhos[:, 0, 0].real, np.exp(-2 * p.k * t), rtol=1e-9, atol=0)


def test_coherence_envelope_at_fig1_parameters():
    p = FIG1
    t = np.linspace(0, 4 / p.k, 81)
    traj = evolve(make_generator("thermal", "diagonal", p), initial_state(p, Frame.DIAGONAL), t)
    c = np.abs(traj.rhos[:, 0, 1])
    expected = c[0] * np.exp(-p.k * t)
    assert np.max(np.abs(c / expected - 1)) <= 1e-2


def test_evolve_returns_samples_on_grid():
    t = np.array([0.5, 1.0, 3.7])
    traj = evolve(make_generator("dephasing", "diagonal", FIG1), RHO0, t)
    assert np.array_equal(traj.times, t)
    assert len(traj) == 3 and traj.frame is Frame.DIAGONAL
    assert traj.meta == {"method": "rk4", "channel": "dephasing"}
    assert len(traj.samples) == 3
    assert traj.final.matrix.shape == (2, 2)


def test_default_step_rule():
    p = ModelParams(muB=2.0, omega=1e-3, k=1e-2)
    assert default_step(p) == pytest.approx(math.pi / 100)
    assert default_step(p.replace(k=10.0)) == pytest.approx(0.01)
    assert default_step(p.replace(omega=20.0)) == pytest.approx(2 * math.pi / 4000)


# ---------------------------------------------------- independent oracles


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.3, 3),
    st.floats(0, 0.5),
    st.floats(0.1, 3.0),
    st.floats(0, 0.2),
    st.floats(0, 3),
    st.sampled_from(list(Channel)),
)
def test_probed_superoperator_matches_kronecker_oracle(muB, omega, theta, k, nbar, ch):
    p = ModelParams(muB=muB, omega=omega, theta=theta, k=k, nbar=nbar)
    L = superoperator(make_generator(ch, "diagonal", p).rhs)
    assert np.max(np.abs(L - kron_superoperator(ch, p))) <= 1e-13 * max(1, muB)


@pytest.mark.parametrize("ch", list(Channel))
def test_closed_form_matches_matrix_exponential(ch):
    from scipy.linalg import expm

    p = ModelParams(muB=1.2, omega=0.3, theta=1.1, k=0.05, nbar=0.6)
    L = kron_superoperator(ch, p)
    for t in (0.0, 0.7, 13.0, 80.0):
        ref = (expm(L * t) @ RHO0.reshape(4)).reshape(2, 2)
        assert np.max(np.abs(exact_diagonal_matrices(ch, p, RHO0, t) - ref)) <= 1e-12
        assert np.max(np.abs(evolve_exact_diagonal(ch, p, RHO0, t).matrix - ref)) <= 1e-12


def test_rk4_is_fourth_order():
    p = ModelParams(muB=1.0, omega=0.2, theta=0.8, k=0.05, nbar=0.5)
    t = np.array([0.0, 20.0])
    exact = exact_diagonal_matrices("thermal", p, RHO0, t[-1])
    errs = []
    for h in (0.2, 0.1):
        traj = evolve(make_generator("thermal", "diagonal", p), RHO0, t, IntegratorOptions(step=h))
        errs.append(np.max(np.abs(traj.rhos[-1] - exact)))
    assert errs[0] / errs[1] >= 14


def test_time_translation_of_autonomous_generator():
    p = ModelParams(muB=1.0, omega=0.2, theta=0.8, k=0.05, nbar=0.5)
    g = make_generator("thermal", "diagonal", p)
    opts = IntegratorOptions(step=0.01)
    whole = evolve(g, RHO0, [0.0, 30.0], opts).rhos[-1]
    first = evolve(g, RHO0, [0.0, 12.0], opts).rhos[-1]
    second = evolve(g, first, [0.0, 18.0], opts).rhos[-1]
    assert np.max(np.abs(whole - second)) <= 1e-9


@pytest.mark.parametrize("ch", list(Channel))
def test_batched_and_direct_rk4_agree(ch):
    p = FIG1.replace(omega=0.05, nbar=0.3)
    t = np.linspace(0, 40, 9)
    g = make_generator(ch, "instantaneous", p)
    r0 = initial_state(p, Frame.INSTANTANEOUS)
    a = evolve(g, r0, t, IntegratorOptions(step=0.02)).rhos
    b = evolve(g, r0, t, IntegratorOptions(step=0.02, direct=True)).rhos
    assert np.max(np.abs(a - b)) <= 1e-12


def test_plain_callable_matches_generator():
    p = FIG1.replace(omega=0.05)
    g = make_generator("thermal", "instantaneous", p)
    t = np.linspace(0, 10, 6)
    r0 = initial_state(p, Frame.INSTANTANEOUS)
    a = evolve(g, r0, t, IntegratorOptions(step=0.01)).rhos
    b = evolve(lambda r, s: g(r, s), r0, t, IntegratorOptions(step=0.01), frame="instantaneous", params=p)
    assert np.max(np.abs(a - b.rhos)) <= 1e-12
    assert b.frame is Frame.INSTANTANEOUS


@pytest.mark.parametrize("ch", list(Channel))
def test_adaptive_and_fixed_step_agree(ch):
    p = FIG1.replace(omega=0.05, nbar=0.3)
    t = np.linspace(0, 30, 7)
    g = make_generator(ch, "instantaneous", p)
    r0 = initial_state(p, Frame.INSTANTANEOUS)
    a = evolve(g, r0, t, IntegratorOptions(step=0.005)).rhos
    b = evolve(g, r0, t, IntegratorOptions(method="rk45"))
    assert b.meta["method"] == Method.RK45_ADAPTIVE.value
    assert np.max(np.abs(a - b.rhos)) <= 1e-8


def test_long_run_keeps_trace():
    p = ModelParams(muB=1.0, omega=1e-3, theta=math.pi / 4, k=1e-3)
    t = np.linspace(0, 2 * math.pi / p.omega, 11)
    traj = evolve(make_generator("thermal", "instantaneous", p), initial_state(p, Frame.INSTANTANEOUS), t)
    tr = np.trace(traj.rhos, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 1)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2), st.floats(0, 0.2), st.floats(0.2, 2.9), st.floats(0, 0.1), st.floats(0, 2))
def test_dephasing_purity_monotone_and_bounded(muB, omega, theta, k, nbar):
    p = ModelParams(muB=muB, omega=omega, theta=theta, k=k, nbar=nbar)
    t = np.linspace(0, 50, 26)
    traj = evolve(make_generator("dephasing", "diagonal", p), RHO0, t)
    pur = np.array([purity(traj.state(i)) for i in range(len(t))])
    assert np.all(np.diff(pur) <= 1e-12)
    assert np.all(pur >= 0.5 - 1e-12)


# ----------------------------------------------------------------- errors


def test_bad_grids():
    g = make_generator("thermal", "diagonal", FIG1)
    with pytest.raises(ValueError):
        evolve(g, RHO0, [])
    with pytest.raises(ValueError):
        evolve(g, RHO0, [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        evolve(g, RHO0, [-1.0, 1.0])


def test_plain_callable_needs_frame():
    with pytest.raises(ValueError):
        evolve(lambda r, t: 0 * r, RHO0, [0.0, 1.0], IntegratorOptions(step=0.1))


def test_bad_options():
    with pytest.raises(ValueError):
        IntegratorOptions(step=-1.0)
    with pytest.raises(ValueError):
        IntegratorOptions(rtol=0.0)
    with pytest.raises(ValueError):
        IntegratorOptions(method="euler")


def test_corrupting_generator_is_caught():
    with pytest.raises(StateCorruptionError) as e:
        evolve(lambda r, t: np.eye(2), RHO0, [0.0, 1.0], IntegratorOptions(step=0.1), frame="lab")
    assert e.value.invariant == "trace"


def test_adaptive_step_budget():
    g = make_generator("thermal", "instantaneous", FIG1)
    with pytest.raises(IntegrationError):
        evolve(g, RHO0, [0.0, 100.0], IntegratorOptions(method="rk45", max_steps=10))
    with pytest.raises(IntegrationError):
        evolve(g, RHO0, [0.0, 1.0], IntegratorOptions(method="rk45", rtol=1e-300, atol=1e-300))


def test_trajectory_validates_itself():
    with pytest.raises(StateCorruptionError):
        Trajectory(frame="lab", times=[0.0], rhos=[np.diag([2.0, 0.0])])
    with pytest.raises(ValueError):
        Trajectory(frame="lab", times=[1.0, 0.0], rhos=[RHO0, RHO0])
    tr = Trajectory(frame="lab", times=[0.0], rhos=[RHO0])
    with pytest.raises(ValueError):
        tr.rhos[0, 0, 0] = 0


def test_exact_diagonal_rejects_negative_times():
    with pytest.raises(ValueError):
        exact_diagonal_matrices("thermal", FIG1, RHO0, [-1.0])


def test_derived_rate_drives_coherence_phase():
    p = ModelParams(muB=1.0, omega=0.3, theta=1.0, k=0.0)
    lam = derived(p).lambda1
    r = exact_diagonal_matrices("thermal", p, RHO0, 2.0)
    assert r[0, 1] == pytest.approx(RHO0[0, 1] * np.exp(-4j * lam), abs=1e-14)
