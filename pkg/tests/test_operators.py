import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtnoise import operators as ops
from conftest import I2, SX, SY, SZ, bloch_vectors, rand_density, rand_hermitian


def test_pauli_matrices():
    np.testing.assert_array_equal(ops.pauli("X"), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(ops.pauli("Z"), [[1, 0], [0, -1]])
    np.testing.assert_array_equal(ops.pauli("x") @ ops.pauli("X"), I2)
    np.testing.assert_array_equal(ops.pauli("I"), I2)


def test_pauli_rejects_unknown_axis():
    with pytest.raises(ops.OperatorError):
        ops.pauli("W")


def test_pauli_returns_fresh_copy():
    x = ops.pauli("X")
    x[0, 0] = 5
    assert ops.pauli("X")[0, 0] == 0


def test_commutator_examples():
    np.testing.assert_array_equal(ops.commutator(SX, SX), np.zeros((2, 2)))
    np.testing.assert_allclose(ops.commutator(SX, SY), 2j * SZ)
    np.testing.assert_array_equal(ops.anticommutator(SX, SY), np.zeros((2, 2)))
    np.testing.assert_allclose(ops.anticommutator(SZ, SZ), 2 * I2)


def test_commutator_dimension_mismatch():
    with pytest.raises(ops.OperatorError):
        ops.commutator(SX, np.eye(3))
    with pytest.raises(ops.OperatorError):
        ops.anticommutator(np.eye(4), SX)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ops.OperatorError):
        ops.as_matrix(np.zeros((2, 3)))
    with pytest.raises(ops.OperatorError):
        ops.as_matrix([[np.nan, 0], [0, 1]])


def test_expm_examples():
    np.testing.assert_allclose(ops.expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(ops.expm(-1j * np.pi * SX / 2), -1j * SX, atol=1e-14)
    np.testing.assert_allclose(ops.expm(np.diag([0.3, -1.7])), np.diag(np.exp([0.3, -1.7])),
                               rtol=1e-14)


def test_expm_against_closed_form_rotations(rng):
    for _ in range(20):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        theta = rng.uniform(-40, 40)
        ns = n[0] * SX + n[1] * SY + n[2] * SZ
        exact = np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * ns
        got = ops.expm(-1j * theta * ns / 2)
        assert np.linalg.norm(got - exact) / np.linalg.norm(exact) < 1e-12


def test_expm_against_series_for_nilpotent_plus_scalar():
    # exp(s I + N) with N^2 = 0 is e^s (I + N): an exact series check
    n = np.array([[0, 7.5 - 2j], [0, 0]])
    s = -3.25 + 1.5j
    got = ops.expm(s * I2 + n)
    exact = np.exp(s) * (I2 + n)
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) < 1e-12


def test_expm_overflow_raises():
    with pytest.raises(ops.OperatorError):
        ops.expm(np.diag([1e4, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6), st.floats(0.1, 10))
def test_expm_inverse_and_unitarity(seed, d, norm):
    rng = np.random.default_rng(seed)
    h = rand_hermitian(rng, d)
    h *= norm / np.linalg.norm(h, 2)
    a = 1j * h + 0.3 * rand_hermitian(rng, d) / d
    np.testing.assert_allclose(ops.expm(a) @ ops.expm(-a), np.eye(d), atol=1e-10)
    u = ops.expm(-1j * h)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(d), atol=1e-10)
    np.testing.assert_allclose(ops.unitary_propagator(h, 1.0), u, atol=1e-10)


def test_expm_small_batch_matches_scipy(rng):
    a = np.stack([rand_hermitian(rng, 6, 0.3) @ rand_hermitian(rng, 6, 0.5) for _ in range(10)])
    a[3] *= 40
    from scipy.linalg import expm
    np.testing.assert_allclose(ops.expm_small_batch(a), expm(a), rtol=1e-12, atol=1e-12)


def test_trace_distance_examples():
    p0, p1 = ops.projector(ops.ket(0)), ops.projector(ops.ket(1))
    rho = rand_density(np.random.default_rng(1))
    assert ops.trace_distance(rho, rho) == 0.0
    assert ops.trace_distance(p0, p1) == pytest.approx(1.0, abs=1e-15)
    assert ops.trace_distance(p0, I2 / 2) == pytest.approx(0.5, abs=1e-15)


def test_trace_distance_dimension_mismatch():
    with pytest.raises(ops.OperatorError):
        ops.trace_distance(I2 / 2, np.eye(3) / 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4))
def test_trace_distance_metric_properties(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (rand_density(rng, d) for _ in range(3))
    assert abs(ops.trace_distance(a, b) - ops.trace_distance(b, a)) <= 1e-12
    assert ops.trace_distance(a, c) <= ops.trace_distance(a, b) + ops.trace_distance(b, c) + 1e-12
    assert 0 <= ops.trace_distance(a, b) <= 1 + 1e-12


def test_bloch_examples():
    np.testing.assert_allclose(ops.bloch(I2 / 2), [0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(ops.bloch(ops.projector(ops.ket(0))), [0, 0, 1])
    plus = np.array([1, 1]) / np.sqrt(2)
    np.testing.assert_allclose(ops.from_bloch([1, 0, 0]), ops.projector(plus), atol=1e-15)


def test_bloch_errors():
    with pytest.raises(ops.OperatorError):
        ops.bloch(np.eye(3) / 3)
    with pytest.raises(ops.OperatorError):
        ops.from_bloch([1, 1, 0])
    with pytest.raises(ops.OperatorError):
        ops.from_bloch([0, 1])


@settings(max_examples=100, deadline=None)
@given(bloch_vectors())
def test_bloch_round_trip(v):
    np.testing.assert_allclose(ops.bloch(ops.from_bloch(v)), v, atol=1e-12)


def test_bloch_of_subnormalized_state():
    rho = 0.3 * ops.from_bloch([0.2, -0.4, 0.1])
    np.testing.assert_allclose(ops.bloch(rho), [0.2, -0.4, 0.1], atol=1e-15)


def test_density_operator_validation():
    rho = ops.density_operator(0.5 * ops.from_bloch([0, 0, 1]))
    assert np.trace(rho).real == pytest.approx(0.5)
    with pytest.raises(ops.OperatorError):
        ops.density_operator([[1, 1e-6], [0, 0]])           # not Hermitian
    with pytest.raises(ops.OperatorError):
        ops.density_operator(np.diag([1.2, -0.2]))            # negative eigenvalue
    with pytest.raises(ops.OperatorError):
        ops.density_operator(np.diag([0.6, 0.6]))             # trace above 1
    with pytest.raises(ops.OperatorError):
        ops.density_operator(I2 / 4, weight=1.0)
    # roundoff-size negative eigenvalues are tolerated
    ops.density_operator(np.diag([1 + 1e-11, -1e-11]))


def test_symmetrize_and_drift_error():
    m = np.array([[1, 1e-11j], [0, 0]])
    out = ops.symmetrize(m)
    assert ops.hermiticity_error(out) == 0.0
    with pytest.raises(ops.OperatorError):
        ops.symmetrize(np.array([[1, 1e-6], [0, 0]]))


def test_vec_convention():
    x = np.arange(9).reshape(3, 3) + 0j
    v = ops.vec(x)
    assert all(v[i + 3 * j] == x[i, j] for i in range(3) for j in range(3))
    np.testing.assert_array_equal(ops.unvec(v), x)


def test_superoperators_match_matrix_action(rng):
    a, b, x = (rand_hermitian(rng, 3) + 1j * rand_hermitian(rng, 3) for _ in range(3))
    np.testing.assert_allclose(np.kron(b.T, a) @ ops.vec(x), ops.vec(a @ x @ b), atol=1e-12)
    np.testing.assert_allclose(ops.spre(a) @ ops.vec(x), ops.vec(a @ x), atol=1e-12)
    np.testing.assert_allclose(ops.spost(a) @ ops.vec(x), ops.vec(x @ a), atol=1e-12)
    np.testing.assert_allclose(ops.liouvillian(a) @ ops.vec(x), ops.vec(-1j * (a @ x - x @ a)),
                               atol=1e-12)
    l = a
    expected = l @ x @ l.conj().T - 0.5 * (l.conj().T @ l @ x + x @ l.conj().T @ l)
    np.testing.assert_allclose(ops.dissipator(l) @ ops.vec(x), ops.vec(expected), atol=1e-12)


def test_matrix_json_round_trip(rng):
    m = rand_hermitian(rng, 3) + 0.5j * rand_hermitian(rng, 3)
    obj = json.loads(json.dumps(ops.matrix_to_json(m)))
    assert obj[0][1] == [m[0, 1].real, m[0, 1].imag]        # row-major [re, im]
    np.testing.assert_array_equal(ops.matrix_from_json(obj), m)
    with pytest.raises(ops.OperatorError):
        ops.matrix_from_json([[1, 2], [3, 4]])
