"""Dense complex linear algebra used throughout the package.

Matrices are plain 2-D ``complex128`` numpy arrays. Tensor products put the
left factor in the most significant position, so ``tensor(a, b)[i*rb + j]``
indexes ``a`` by ``i`` and ``b`` by ``j``.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, fields
from functools import reduce

import numpy as np
import scipy.linalg

from .errors import DimensionError


@dataclass
class Tolerances:
    """Global numerical tolerances. Change with :func:`configure_tolerances`."""

    unitary: float = 1e-12
    polar: float = 1e-10
    hermitian: float = 1e-12
    psd: float = 1e-12
    completeness: float = 1e-10
    rank: float = 1e-10
    choi_equal: float = 1e-8


TOL = Tolerances()


def configure_tolerances(**overrides):
    """Update global tolerances in place and return the previous values."""
    names = {f.name for f in fields(Tolerances)}
    unknown = set(overrides) - names
    if unknown:
        raise TypeError(f"unknown tolerance(s): {sorted(unknown)}")
    previous = {name: getattr(TOL, name) for name in overrides}
    for name, value in overrides.items():
        setattr(TOL, name, float(value))
    return previous


@contextlib.contextmanager
def tolerances(**overrides):
    """Temporarily override global tolerances."""
    previous = configure_tolerances(**overrides)
    try:
        yield TOL
    finally:
        configure_tolerances(**previous)


def as_matrix(a, name="matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    return m


def require_square(a, name="matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not ops:
        raise DimensionError("tensor() needs at least one operand")
    return reduce(np.kron, (as_matrix(op, "tensor operand") for op in ops))


def ket(index: int, dim: int) -> np.ndarray:
    """Standard basis column vector ``|index>`` of dimension ``dim``."""
    v = np.zeros((dim, 1), dtype=complex)
    v[index, 0] = 1.0
    return v


def ketbra(i: int, j: int, dim: int) -> np.ndarray:
    """Matrix unit ``|i><j|``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def matrix_exp(h, scale: float = 1.0, *, unitary: bool = True) -> np.ndarray:
    """Matrix exponential.

    With ``unitary=True`` (the default) returns ``exp(i*scale*h)``, which is
    unitary for Hermitian ``h``. With ``unitary=False`` returns
    ``exp(scale*h)`` for use with generators.
    """
    h = require_square(h, "h")
    factor = 1j * scale if unitary else scale
    return scipy.linalg.expm(factor * h)


def svd_sorted(k):
    """SVD ``k = w @ diag(s) @ vh`` with a deterministic phase convention.

    Singular values come back in descending order (numpy's order). Each right
    singular vector (row of ``vh``) is rephased so that its first entry with
    magnitude above 1e-12 is real and positive; the matching left vector gets
    the compensating phase.
    """
    k = as_matrix(k, "k")
    w, s, vh = np.linalg.svd(k)
    vh = vh.copy()
    w = w.copy()
    for row in range(vh.shape[0]):
        nonzero = np.flatnonzero(np.abs(vh[row]) > 1e-12)
        if nonzero.size == 0:
            continue
        entry = vh[row, nonzero[0]]
        phase = entry / abs(entry)
        vh[row] /= phase
        if row < w.shape[1]:
            w[:, row] *= phase
    return w, s, vh


def polar_decompose(k):
    """Right polar decomposition ``k = unitary @ positive``.

    Built from the SVD ``k = W S V^dag`` as ``unitary = W V^dag`` and
    ``positive = V S V^dag``. When ``k`` is singular the unitary factor on
    the null space of ``positive`` is whatever the phase-fixed SVD supplies,
    which makes the result reproducible.
    """
    k = require_square(k, "k")
    w, s, vh = svd_sorted(k)
    v = dagger(vh)
    unitary = w @ vh
    positive = (v * s) @ vh
    positive = 0.5 * (positive + dagger(positive))
    return unitary, positive


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = require_square(m, "m")
    if np.allclose(m, dagger(m), atol=1e-14, rtol=0.0):
        return float(np.abs(np.linalg.eigvalsh(0.5 * (m + dagger(m)))).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def eigh_hermitian(m):
    """Eigendecomposition of the Hermitian part of ``m`` (ascending eigenvalues)."""
    m = require_square(m, "m")
    return np.linalg.eigh(0.5 * (m + dagger(m)))


def hermitian_residual(m) -> float:
    m = require_square(m, "m")
    return float(np.abs(m - dagger(m)).max())


def unitarity_residual(u) -> float:
    """``max |U^dag U - I|``."""
    u = require_square(u, "u")
    return float(np.abs(dagger(u) @ u - np.eye(u.shape[0])).max())


def is_unitary(u, atol=None) -> bool:
    return unitarity_residual(u) <= (TOL.polar if atol is None else atol)


def is_hermitian(m, atol=None) -> bool:
    return hermitian_residual(m) <= (TOL.hermitian if atol is None else atol)


def min_eigenvalue(m) -> float:
    return float(eigh_hermitian(m)[0][0])


def random_state(dim: int, rng) -> np.ndarray:
    """Haar-random pure state as a flat vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary via QR with the diagonal phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real
