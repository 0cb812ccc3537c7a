import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from rtnoise import operators as ops
from rtnoise.classical_noise import MarkovNoiseModel, RtnSpec, rtn_model, two_state_model
from rtnoise.ensemble import (ConditionalEnsemble, EvolutionError, average_state,
                              default_backend, ensemble_trajectory, evolve_average,
                              evolve_ensemble, init_ensemble, rk4_step_size)
from rtnoise.pulses import ControlPulse, composite_pulses
from conftest import dephasing_coherence, rand_density, rand_hermitian, rot_x

RHO_Z = np.diag([1.0, 0.0]).astype(complex)
RHO_PLUS = 0.5 * np.ones((2, 2), dtype=complex)


def random_model(rng, n=3, d=2, rate_scale=1.0):
    off = rng.uniform(0, rate_scale, (n, n))
    np.fill_diagonal(off, 0)
    g = off - np.diag(off.sum(axis=0))
    return MarkovNoiseModel(g, [rand_hermitian(rng, d, 0.5) for _ in range(n)],
                            rand_hermitian(rng, d, 0.5))


def random_pulse(rng, n=6, T=5.0):
    return ControlPulse.uniform(rng.uniform(-1, 1, n), T)


def test_init_ensemble_examples():
    e = init_ensemble(RHO_Z, rtn_model(RtnSpec(0.1, 1.0)))
    np.testing.assert_allclose(e.parts, [RHO_Z / 2, RHO_Z / 2])
    g1, g2 = 0.3, 1.2
    m = two_state_model(np.zeros((2, 2)), np.zeros((2, 2)), g1, g2)
    rho0 = rand_density(np.random.default_rng(3))
    e = init_ensemble(rho0, m)
    np.testing.assert_allclose(e.parts[0], g2 / (g1 + g2) * rho0, atol=1e-14)
    assert e.probabilities.sum() == pytest.approx(1.0, abs=1e-14)
    assert e.time == 0.0


def test_init_ensemble_rejects_unnormalized():
    with pytest.raises(ops.OperatorError):
        init_ensemble(RHO_Z / 2, rtn_model(RtnSpec(0.1, 1.0)))
    with pytest.raises(EvolutionError):
        init_ensemble(np.eye(3) / 3, rtn_model(RtnSpec(0.1, 1.0)))


def test_average_state_after_init_is_rho0(rng):
    rho0 = rand_density(rng)
    np.testing.assert_allclose(average_state(init_ensemble(rho0, random_model(rng))), rho0,
                               atol=1e-15)


def test_closed_system_is_unitary(rng):
    h = rand_hermitian(rng, 3)
    m = MarkovNoiseModel([[0.0]], [h])
    rho0 = rand_density(rng, 3)
    u = linalg.expm(-1j * h * 2.7)
    for backend in ("exact", "rk4"):
        out = evolve_average(rho0, m, 2.7, backend=backend)
        np.testing.assert_allclose(out, u @ rho0 @ u.conj().T, atol=1e-10)


def test_traces_follow_rate_equation(rng):
    m = random_model(rng, n=4)
    p = random_pulse(rng)
    e = evolve_ensemble(init_ensemble(rand_density(rng), m), m, 3.3, p)
    # stationary start stays stationary
    np.testing.assert_allclose(e.probabilities, m.initial_distribution(), atol=1e-12)
    # a non-stationary start follows dP/dt = rates P
    m2 = MarkovNoiseModel(m.rates, m.drifts, m.control, initial_probabilities=[1, 0, 0, 0])
    e2 = evolve_ensemble(init_ensemble(rand_density(rng), m2), m2, 3.3, p)
    np.testing.assert_allclose(e2.probabilities, linalg.expm(m.rates * 3.3) @ [1, 0, 0, 0],
                               atol=1e-12)


@pytest.mark.parametrize("delta_tau", [0.05, 0.125, 0.5, 2.0])
def test_dephasing_closed_form(delta_tau):
    tau_c = 3.0
    delta = delta_tau / tau_c
    m = rtn_model(RtnSpec(delta, tau_c))
    times = np.linspace(0, 40, 41)
    states = ensemble_trajectory(RHO_PLUS, m, times, backend="exact")
    c = states[:, 0, 1] / RHO_PLUS[0, 1]
    np.testing.assert_allclose(c.real, dephasing_coherence(times, delta, tau_c), atol=1e-8)
    np.testing.assert_allclose(c.imag, 0, atol=1e-12)
    np.testing.assert_allclose(states[:, 0, 0], 0.5, atol=1e-13)


def test_oscillatory_branch_has_imaginary_omega():
    tau_c, delta = 2.0, 3.0
    assert 1 / tau_c ** 2 - delta ** 2 < 0
    m = rtn_model(RtnSpec(delta, tau_c))
    times = np.linspace(0, 6, 61)
    c = ensemble_trajectory(RHO_PLUS, m, times)[:, 0, 1] / 0.5
    expected = dephasing_coherence(times, delta, tau_c)
    assert np.any(expected < 0)              # the coherence oscillates through zero
    np.testing.assert_allclose(c.real, expected, atol=1e-8)


def test_long_time_dephasing_limit():
    m = rtn_model(RtnSpec(1.0, 20.0))
    rho0 = ops.from_bloch([0.6, 0.0, 0.8])
    out = evolve_average(rho0, m, 400.0)
    assert abs(out[0, 1]) < 1e-6
    np.testing.assert_allclose(np.diag(out).real, np.diag(rho0).real, atol=1e-12)


def test_zero_delta_equals_closed_evolution():
    m = rtn_model(RtnSpec(0.0, 0.7))
    for p in composite_pulses().values():
        u = np.eye(2, dtype=complex)
        for dt, a in zip(p.durations, p.amplitudes):
            u = rot_x(a * dt) @ u
        rho0 = ops.from_bloch([0.3, -0.2, 0.9])
        np.testing.assert_allclose(evolve_average(rho0, m, p.duration, p),
                                   u @ rho0 @ u.conj().T, atol=1e-12)


def test_backends_agree(rng):
    for tau_c in (0.3, 5.0, 50.0):
        m = rtn_model(RtnSpec(0.25, tau_c))
        p = composite_pulses()["corpse"]
        rho0 = rand_density(rng)
        a = evolve_average(rho0, m, p.duration, p, backend="exact")
        b = evolve_average(rho0, m, p.duration, p, backend="rk4")
        assert ops.trace_distance(a, b) <= 1e-8
    m = random_model(rng, n=3)
    p = random_pulse(rng)
    rho0 = rand_density(rng)
    a = evolve_average(rho0, m, 5.0, p, backend="exact")
    b = evolve_average(rho0, m, 5.0, p, backend="rk4")
    assert ops.trace_distance(a, b) <= 1e-8


def test_rk4_step_rule():
    m = rtn_model(RtnSpec(0.1, 0.2))
    assert rk4_step_size(m, None) <= min(0.01, 0.2 / 100)
    assert default_backend(m) == "exact"
    big = MarkovNoiseModel(np.zeros((1, 1)), [np.eye(5)])
    assert default_backend(big) == "rk4"


def test_evolution_errors(rng):
    m = rtn_model(RtnSpec(0.1, 1.0))
    e = evolve_ensemble(init_ensemble(RHO_Z, m), m, 1.0)
    with pytest.raises(EvolutionError):
        evolve_ensemble(e, m, 0.5)
    with pytest.raises(EvolutionError):
        evolve_ensemble(e, m, 2.0, backend="euler")
    with pytest.raises(EvolutionError):
        evolve_ensemble(e, m, 2.0, backend="rk4", step=1e-15)
    with pytest.raises(EvolutionError):
        evolve_ensemble(e, random_model(rng), 2.0)


def test_incremental_evolution_matches_single_step(rng):
    m = random_model(rng)
    p = random_pulse(rng, 8, 6.0)
    rho0 = rand_density(rng)
    traj = ensemble_trajectory(rho0, m, [0.5, 2.2, 6.0, 7.5], p)
    np.testing.assert_allclose(traj[-1], evolve_average(rho0, m, 7.5, p), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 1))
def test_invariants_on_random_models(seed, alpha):
    rng = np.random.default_rng(seed)
    m = random_model(rng, n=int(rng.integers(1, 4)), rate_scale=2.0)
    p = random_pulse(rng)
    ra, rb = rand_density(rng), rand_density(rng, rank=1)
    e = evolve_ensemble(init_ensemble(ra, m), m, 5.0, p)
    e.validate(1e-9)                              # trace, Hermiticity, PSD of every part
    out = average_state(e)
    assert abs(np.trace(out).real - 1) <= 1e-9
    assert ops.hermiticity_error(out) <= 1e-9
    mix = evolve_average(alpha * ra + (1 - alpha) * rb, m, 5.0, p)
    lin = alpha * out + (1 - alpha) * evolve_average(rb, m, 5.0, p)
    np.testing.assert_allclose(mix, lin, atol=1e-9)


def test_trace_conserved_over_long_horizon(rng):
    m = random_model(rng, n=2, rate_scale=0.5)
    out = evolve_average(rand_density(rng), m, 1000.0)
    assert abs(np.trace(out).real - 1) <= 1e-9


def test_conditional_ensemble_validation():
    with pytest.raises(EvolutionError):
        ConditionalEnsemble(np.zeros((2, 2)))
    bad = ConditionalEnsemble(np.array([np.diag([0.7, -0.2]), np.diag([0.5, 0.0])]))
    with pytest.raises(EvolutionError):
        bad.validate()
