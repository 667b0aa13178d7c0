import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinberry.generators import (
    Channel,
    dephasing_diagonal,
    dephasing_instantaneous,
    make_generator,
    thermal_diagonal,
    thermal_fixed_point,
    thermal_instantaneous,
)
from spinberry.model import DegeneracyError, Frame, ModelParams, convert_matrices
from spinberry.qcore import PAULI_Z, dagger, density_from_bloch

CHANNELS = list(Channel)
FRAMES = [Frame.DIAGONAL, Frame.INSTANTANEOUS]


@st.composite
def params(draw):
    return ModelParams(
        muB=draw(st.floats(0.3, 3)),
        omega=draw(st.floats(0, 0.4)),
        theta=draw(st.floats(0.05, math.pi - 0.05)),
        k=draw(st.floats(0, 0.2)),
        nbar=draw(st.floats(0, 3)),
    )


@st.composite
def states(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    n = np.linalg.norm(v)
    return density_from_bloch(v / n * draw(st.floats(0, 1)) if n else v).matrix


# ------------------------------------------------------------- examples


def test_excited_population_decays_at_2k():
    p = ModelParams(k=0.03, nbar=0.0)
    d = thermal_diagonal(p)(np.diag([1.0, 0.0]).astype(complex))
    assert d[0, 0].real == pytest.approx(-2 * p.k, rel=1e-14)
    assert d[1, 1].real == pytest.approx(2 * p.k, rel=1e-14)


@pytest.mark.parametrize("nbar", [0.0, 0.4, 2.5])
def test_gibbs_state_is_stationary(nbar):
    p = ModelParams(k=0.05, nbar=nbar, omega=0.2)
    fp = thermal_fixed_point(p)
    assert np.max(np.abs(thermal_diagonal(p)(fp.matrix))) <= 1e-15
    assert fp.matrix[0, 0].real == pytest.approx(nbar / (2 * nbar + 1))


def test_dephasing_acts_elementwise():
    p = ModelParams(k=0.07, omega=0.1, theta=0.9)
    lam = math.sqrt(math.sin(0.9) ** 2 + (math.cos(0.9) - 0.05) ** 2)
    rho = density_from_bloch((0.3, -0.4, 0.2)).matrix
    d = dephasing_diagonal(p)(rho)
    assert d[0, 0] == 0 and d[1, 1] == 0
    assert d[0, 1] == pytest.approx((-2j * lam - p.k) * rho[0, 1], rel=1e-13)


def test_degenerate_parameters_rejected():
    p = ModelParams(muB=1.0, omega=2.0, theta=0.0)
    for fn in (thermal_diagonal, dephasing_diagonal):
        with pytest.raises(DegeneracyError):
            fn(p)
    with pytest.raises(DegeneracyError):
        make_generator("thermal", "diagonal", p)


def test_generator_frames_limited():
    with pytest.raises(ValueError):
        make_generator("thermal", "lab", ModelParams())
    g = make_generator("dephasing", "instantaneous", ModelParams())
    assert not g.autonomous and g.harmonics == 2
    assert make_generator(Channel.THERMAL, Frame.DIAGONAL, ModelParams()).autonomous


# ------------------------------------------------------------ invariants


@settings(max_examples=80)
@given(params(), states(), st.floats(0, 1e3), st.sampled_from(CHANNELS), st.sampled_from(FRAMES))
def test_trace_and_hermiticity_preserved(p, rho, t, ch, fr):
    d = make_generator(ch, fr, p)(rho, t)
    assert abs(np.trace(d)) <= 1e-13
    assert np.max(np.abs(d - dagger(d))) <= 1e-13


@settings(max_examples=60)
@given(params(), states(), st.floats(0, 1e3), st.sampled_from(FRAMES))
def test_dephasing_never_raises_purity(p, rho, t, fr):
    d = make_generator(Channel.DEPHASING, fr, p)(rho, t)
    assert 2 * np.trace(rho @ d).real <= 1e-13


@given(params(), st.floats(0, 1e3))
def test_ground_state_is_dark_at_zero_temperature(p, t):
    p = p.replace(nbar=0.0)
    ground = np.diag([0.0, 1.0]).astype(complex)
    assert np.max(np.abs(make_generator("thermal", "diagonal", p)(ground))) <= 1e-15


def test_functional_forms_match_generator_objects():
    p = ModelParams(k=0.02, nbar=0.3, omega=0.05)
    rho = density_from_bloch((0.1, 0.2, 0.3)).matrix
    assert np.array_equal(thermal_instantaneous(p, 3.0)(rho), make_generator("thermal", "instantaneous", p)(rho, 3.0))
    assert np.array_equal(
        dephasing_instantaneous(p, 3.0)(rho), make_generator("dephasing", "instantaneous", p)(rho, 3.0)
    )


@pytest.mark.parametrize("ch", CHANNELS)
def test_static_aligned_field_frames_coincide(ch):
    # w = 0, theta = 0: both frames see H = muB sz and identical jumps
    p = ModelParams(muB=1.3, omega=0.0, theta=0.0, k=0.04, nbar=0.7)
    rng = np.random.default_rng(1)
    for _ in range(5):
        rho = density_from_bloch(rng.uniform(-0.5, 0.5, 3)).matrix
        a = make_generator(ch, "diagonal", p)(rho)
        b = make_generator(ch, "instantaneous", p)(rho, 2.0)
        assert np.max(np.abs(a - b)) <= 1e-15


# ---------------------------------------------------- frame equivalence


def _diag_taylor(L, rho, eps):
    """rho(eps) from d rho/dt = L(rho) by a fourth-order Taylor series."""
    t1 = L(rho)
    t2 = L(t1)
    t3 = L(t2)
    t4 = L(t3)
    return rho + eps * t1 + eps**2 / 2 * t2 + eps**3 / 6 * t3 + eps**4 / 24 * t4


@pytest.mark.parametrize("ch", CHANNELS)
@pytest.mark.parametrize("seed", range(4))
def test_instantaneous_generator_is_image_of_diagonal_one(ch, seed):
    rng = np.random.default_rng(seed)
    p = ModelParams(
        muB=rng.uniform(0.5, 2),
        omega=rng.uniform(0.01, 0.4),
        theta=rng.uniform(0.2, 2.9),
        k=rng.uniform(0.005, 0.1),
        nbar=rng.uniform(0, 2),
    )
    t = rng.uniform(0, 50)
    rho_d = density_from_bloch(rng.uniform(-0.5, 0.5, 3)).matrix
    L = make_generator(ch, "diagonal", p)
    eps = 1e-5 / p.muB

    def inst(delta):
        r = _diag_taylor(L, rho_d, delta)
        return convert_matrices(r, Frame.DIAGONAL, Frame.INSTANTANEOUS, p, t + delta)

    numeric = (inst(eps) - inst(-eps)) / (2 * eps)
    rho_i = inst(0.0)
    analytic = make_generator(ch, "instantaneous", p)(rho_i, t)
    assert np.max(np.abs(numeric - analytic)) <= 1e-8


def test_tracer_only_touches_berry_term():
    p = ModelParams(omega=0.1, k=0.0)
    rho = density_from_bloch((0.3, 0.1, 0.5)).matrix
    full = make_generator("thermal", "instantaneous", p)(rho, 1.0)
    off = make_generator("thermal", "instantaneous", p.replace(tracer_a=0.0))(rho, 1.0)
    plain = -1j * (p.muB + p.omega / 2) * (PAULI_Z @ rho - rho @ PAULI_Z)
    assert np.allclose(off, plain, atol=1e-15)
    assert np.max(np.abs(full - off)) > 1e-3
