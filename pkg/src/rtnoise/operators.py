"""Dense operator algebra for small Hilbert spaces.

Everything here works on plain ``numpy`` complex arrays.  Vectorization
uses column stacking throughout the package::

    vec(A X B) = (B^T kron A) vec(X)

so ``vec(X)[i + d*j] == X[i, j]``.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

HERMITIAN_TOL = 1e-12
DRIFT_TOL = 1e-9
POSITIVITY_TOL = 1e-10
EXPM_NORM_LIMIT = 700.0

_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class OperatorError(ValueError):
    """Raised for malformed matrices, dimension mismatches and drift."""


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 identity or Pauli matrix for ``axis`` in I, X, Y, Z."""
    try:
        return _PAULI[axis.upper()].copy()
    except (KeyError, AttributeError):
        raise OperatorError(f"unknown Pauli axis {axis!r}") from None


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise OperatorError("matrix has non-finite entries")
    return m


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise OperatorError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return a @ b + b @ a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_error(a: np.ndarray) -> float:
    """Largest entrywise deviation of ``a`` from its adjoint."""
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(as_matrix(a)) <= tol


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as a Hermitian operator and return its symmetrized copy."""
    m = as_matrix(a)
    err = hermiticity_error(m)
    if err > tol:
        raise OperatorError(f"operator is not Hermitian (deviation {err:.3e})")
    return 0.5 * (m + dagger(m))


def symmetrize(rho: np.ndarray, tol: float = DRIFT_TOL) -> np.ndarray:
    """Project an integrated state back onto Hermitian matrices.

    Works on a single matrix or a stack ``(..., d, d)``.  Raises if the
    asymmetry accumulated by an integrator exceeds ``tol``.
    """
    err = float(np.max(np.abs(rho - dagger(rho)), initial=0.0))
    if err > tol:
        raise OperatorError(f"Hermiticity drift {err:.3e} exceeds {tol:.1e}")
    return 0.5 * (rho + dagger(rho))


def density_operator(rho, *, weight: float | None = None,
                     check_positive: bool = True) -> np.ndarray:
    """Validate a (possibly subnormalized) density operator.

    Parameters
    ----------
    rho : array_like
        Square matrix.
    weight : float, optional
        Expected trace.  When omitted the trace only has to lie in [0, 1].
    check_positive : bool
        Verify eigenvalues are above ``-POSITIVITY_TOL``.
    """
    m = hermitian(rho)
    tr = np.trace(m).real
    if weight is not None:
        if abs(tr - weight) > 1e-9:
            raise OperatorError(f"trace {tr:.12g} differs from expected {weight:.12g}")
    elif not (-1e-12 <= tr <= 1 + 1e-9):
        raise OperatorError(f"trace {tr:.12g} outside [0, 1]")
    if check_positive:
        lo = np.linalg.eigvalsh(m).min()
        if lo < -POSITIVITY_TOL:
            raise OperatorError(f"negative eigenvalue {lo:.3e}")
    return m


def ket(index: int, dim: int = 2) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants).

    Raises when the result could overflow: ``||exp(A)||_2`` is bounded by
    ``exp(mu)`` with ``mu`` the top eigenvalue of the Hermitian part of
    ``A``, so large but dissipative generators are fine.
    """
    m = as_matrix(a)
    mu = np.linalg.eigvalsh(0.5 * (m + dagger(m)))[-1]
    if mu > EXPM_NORM_LIMIT:
        raise OperatorError(f"expm growth bound exp({mu:.3g}) would overflow")
    out = linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise OperatorError("expm overflowed")
    return out


def expm_small_batch(a: np.ndarray, order: int = 12, theta: float = 0.25) -> np.ndarray:
    """Exponentials of a stack ``(n, m, m)`` of small matrices.

    Truncated Taylor series after scaling every matrix by the same power of
    two (1-norm of the largest below ``theta``), then repeated squaring.  For
    stacks of many small, well-scaled generators this is several times
    faster than a per-matrix Pade call and accurate to a few ulps.
    """
    a = np.asarray(a)
    norm = float(np.abs(a).sum(axis=-2).max(initial=0.0))
    if norm > EXPM_NORM_LIMIT:
        raise OperatorError(f"expm argument norm {norm:.3g} would overflow")
    s = max(0, int(np.ceil(np.log2(norm / theta)))) if norm > 0 else 0
    x = a / 2.0 ** s
    out = np.broadcast_to(np.eye(a.shape[-1], dtype=a.dtype), a.shape).copy()
    term = out.copy()
    for k in range(1, order + 1):
        term = term @ x / k
        out += term
    for _ in range(s):
        out = out @ out
    return out


def unitary_propagator(h, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian ``H`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ dagger(v)


def trace_distance(rho1, rho2) -> float:
    """Half the trace norm of ``rho1 - rho2``."""
    a, b = as_matrix(rho1), as_matrix(rho2)
    _check_same_shape(a, b)
    return 0.5 * float(np.sum(np.linalg.svd(a - b, compute_uv=False)))


def bloch(rho) -> np.ndarray:
    """Bloch vector ``Tr(sigma_i rho) / Tr(rho)`` of a qubit operator."""
    m = as_matrix(rho)
    if m.shape != (2, 2):
        raise OperatorError("Bloch vectors are defined for qubits only")
    tr = np.trace(m).real
    if tr <= 0:
        raise OperatorError("operator has non-positive trace")
    return np.array([np.trace(_PAULI[k] @ m).real for k in "XYZ"]) / tr


def from_bloch(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise OperatorError("Bloch vector must have three components")
    if np.linalg.norm(v) > 1 + 1e-12:
        raise OperatorError(f"Bloch vector norm {np.linalg.norm(v):.6g} > 1")
    return 0.5 * (_PAULI["I"] + v[0] * _PAULI["X"] + v[1] * _PAULI["Y"]
                  + v[2] * _PAULI["Z"])


# -- superoperators (column-stacking convention) ----------------------------

def vec(m) -> np.ndarray:
    """Column-stack the last two axes."""
    m = np.asarray(m)
    return np.swapaxes(m, -1, -2).reshape(m.shape[:-2] + (-1,))


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.shape[-1])))
    if dim * dim != v.shape[-1]:
        raise OperatorError(f"vector length {v.shape[-1]} is not a square")
    return np.swapaxes(v.reshape(v.shape[:-1] + (dim, dim)), -1, -2)


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> X A``."""
    return np.kron(a.T, np.eye(a.shape[0]))


def liouvillian(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> -i [H, X]``."""
    return -1j * (spre(h) - spost(h))


def anticommutator_super(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> {A, X}``."""
    return spre(a) + spost(a)


def dissipator(l: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> L X L^+ - {L^+ L, X}/2``."""
    ld = dagger(l)
    return spre(l) @ spost(ld) - 0.5 * anticommutator_super(ld @ l)


# -- JSON matrix encoding: row-major nested lists of [re, im] pairs ---------

def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise OperatorError("matrix JSON must be rows of [re, im] pairs")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
