import numpy as np
import pytest
from hypothesis import strategies as st

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rand_hermitian(rng, d=2, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (a + a.conj().T)


def rand_density(rng, d=2, rank=None):
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def rot_x(theta):
    """exp(-i theta sigma_x / 2) written out by hand."""
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * SX


def dephasing_coherence(t, delta, tau_c):
    """c(t)/c(0) for telegraph noise +-delta sigma_z/2 with flip rate 1/tau_c.

    Hand eigensolve of d/dt (c+, c-) = [[-i delta - r, r], [r, i delta - r]] (c+, c-),
    r = 1/tau_c; Omega may be imaginary, the expression stays analytic.
    """
    omega = np.sqrt(complex(1 / tau_c ** 2 - delta ** 2))
    if abs(omega) < 1e-14:
        return np.exp(-t / tau_c) * (1 + t / tau_c)
    return (np.exp(-t / tau_c) * (np.cosh(omega * t) + np.sinh(omega * t) / (omega * tau_c))).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def bloch_vectors(max_norm=1.0):
    comp = st.floats(-1, 1, allow_nan=False)
    return st.tuples(comp, comp, comp, st.floats(0, max_norm)).filter(
        lambda v: np.linalg.norm(v[:3]) > 1e-3).map(
        lambda v: np.array(v[:3]) / np.linalg.norm(v[:3]) * v[3])
