import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinberry.qcore import (
    IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    BlochVector,
    DensityMatrix,
    DomainError,
    ValidationError,
    bloch_components,
    bloch_from_density,
    check_density,
    dagger,
    density_from_bloch,
    density_from_components,
    eigvalsh2,
    linear_entropy,
    purity,
)

unit = st.floats(-1, 1, allow_nan=False)


@st.composite
def bloch_vectors(draw):
    v = np.array([draw(unit), draw(unit), draw(unit)])
    r = draw(st.floats(0, 1))
    n = np.linalg.norm(v)
    if n == 0:
        return BlochVector(0.0, 0.0, 0.0)
    v = v / n * r
    return BlochVector(*map(float, v))


@st.composite
def hermitian(draw):
    a, d = draw(st.floats(-5, 5)), draw(st.floats(-5, 5))
    b = complex(draw(st.floats(-5, 5)), draw(st.floats(-5, 5)))
    return np.array([[a, b], [b.conjugate(), d]])


# --------------------------------------------------------------- algebra


def test_pauli_algebra_hand_cases():
    assert np.array_equal(PAULI_X @ PAULI_X, IDENTITY)
    assert np.array_equal(PAULI_X @ PAULI_Y, 1j * PAULI_Z)
    assert np.array_equal(PAULI_Y @ PAULI_Z, 1j * PAULI_X)
    assert np.array_equal(SIGMA_PLUS + SIGMA_MINUS, PAULI_X)
    assert np.array_equal(dagger(SIGMA_PLUS), SIGMA_MINUS)
    assert np.array_equal(SIGMA_PLUS @ SIGMA_MINUS - SIGMA_MINUS @ SIGMA_PLUS, PAULI_Z)
    m = np.array([[1 + 2j, 3], [4j, 5]])
    assert np.array_equal(dagger(m), np.array([[1 - 2j, -4j], [3, 5]]))


def test_constants_are_read_only():
    with pytest.raises(ValueError):
        PAULI_X[0, 0] = 5


@given(hermitian())
def test_eigvalsh2_matches_closed_form_and_lapack(h):
    tr2 = np.trace(h).real / 2
    det = np.linalg.det(h).real
    rad = np.sqrt(max(tr2**2 - det, 0.0))
    ev = eigvalsh2(h)
    scale = max(1.0, np.abs(h).max())
    assert np.allclose(ev, [tr2 - rad, tr2 + rad], atol=1e-14 * scale * 10)
    assert np.allclose(ev, np.linalg.eigvalsh(h), atol=1e-13 * scale)


def test_eigvalsh2_stack():
    hs = np.stack([PAULI_X, PAULI_Z, IDENTITY])
    assert np.allclose(eigvalsh2(hs), [[-1, 1], [-1, 1], [1, 1]])


# ------------------------------------------------------------ validation


def test_validation_names_invariant():
    with pytest.raises(ValidationError) as e:
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    assert e.value.invariant == "hermiticity"
    with pytest.raises(ValidationError) as e:
        DensityMatrix(np.diag([0.6, 0.6]))
    assert e.value.invariant == "trace"
    with pytest.raises(ValidationError) as e:
        DensityMatrix(np.diag([1.5, -0.5]))
    assert e.value.invariant == "positivity"
    with pytest.raises(ValidationError) as e:
        DensityMatrix(np.eye(3) / 3)
    assert e.value.invariant == "shape"


def test_tolerances_overridable_per_instance():
    m = np.diag([0.5 + 5e-11, 0.5])
    with pytest.raises(ValidationError):
        DensityMatrix(m)
    DensityMatrix(m, trace_tol=1e-10)
    check_density(np.diag([1 + 1e-9, -1e-9]), pos_tol=-1e-8)


def test_no_repair_is_applied():
    m = np.diag([1.0 + 5e-11, -5e-11])
    rho = DensityMatrix(m)  # within -1e-10 positivity tolerance
    assert rho.matrix[1, 1] == -5e-11


def test_density_matrix_is_immutable():
    rho = DensityMatrix.maximally_mixed()
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


# ----------------------------------------------------------------- Bloch


def test_bloch_examples():
    assert bloch_from_density(np.eye(2) / 2).as_array() == pytest.approx([0, 0, 0])
    assert bloch_from_density(np.diag([1.0, 0.0])).as_array() == pytest.approx([0, 0, 1])
    assert bloch_from_density((IDENTITY + 0.3 * PAULI_X) / 2).as_array() == pytest.approx([0.3, 0, 0])


def test_density_from_bloch_examples():
    assert np.allclose(density_from_bloch((0, 0, 0)).matrix, IDENTITY / 2)
    assert np.allclose(density_from_bloch((0, 0, -1)).matrix, np.diag([0, 1]))
    rho = density_from_bloch((1, 0, 0))
    assert np.allclose(rho.matrix, (IDENTITY + PAULI_X) / 2)
    assert linear_entropy(rho) == pytest.approx(0, abs=1e-15)


def test_long_bloch_vector_is_rejected():
    with pytest.raises(DomainError):
        BlochVector(1.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        density_from_bloch((0, 0, 1.001))


def test_bloch_components_follow_trace_definition():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = a @ dagger(a)
    rho /= np.trace(rho)
    s = bloch_components(rho)
    expected = [np.trace(rho @ m).real for m in (PAULI_X, PAULI_Y, PAULI_Z)]
    assert np.allclose(s, expected, atol=1e-15)


@given(bloch_vectors())
def test_round_trip_bloch(s):
    back = bloch_from_density(density_from_bloch(s))
    assert np.allclose(back.as_array(), s.as_array(), atol=1e-14)


@given(bloch_vectors())
def test_round_trip_density(s):
    rho = density_from_bloch(s).matrix
    again = density_from_components(bloch_components(rho))
    assert np.max(np.abs(again - rho)) <= 1e-14


# --------------------------------------------------------------- entropy


def test_linear_entropy_examples():
    assert linear_entropy(DensityMatrix.pure([1, 1j])) == pytest.approx(0, abs=1e-15)
    assert linear_entropy(np.eye(2) / 2) == pytest.approx(0.5)
    assert linear_entropy(density_from_bloch((0.5, 0, 0))) == pytest.approx(0.375)


@settings(max_examples=200)
@given(bloch_vectors())
def test_entropy_equals_bloch_length_identity(s):
    rho = density_from_bloch(s)
    assert abs(linear_entropy(rho) - 0.5 * (1 - s.norm**2)) <= 1e-12
    assert 0.5 - 1e-15 <= purity(rho) <= 1 + 1e-15
