import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from ctqec import linalg
from ctqec.errors import DimensionError

seeds = st.integers(0, 2**32 - 1)


def test_tensor_and_kets():
    x = np.array([[0, 1], [1, 0]])
    assert linalg.tensor(x, np.eye(2)).shape == (4, 4)
    with pytest.raises(DimensionError):
        linalg.tensor()
    assert linalg.ket(2, 4)[2, 0] == 1
    assert np.allclose(linalg.ketbra(0, 1, 2), [[0, 1], [0, 0]])


def test_require_square_rejects():
    with pytest.raises(DimensionError):
        linalg.require_square(np.zeros((2, 3)))


def test_matrix_exp_pauli():
    y = np.array([[0, -1j], [1j, 0]])
    t = 0.37
    u = linalg.matrix_exp(y, t)
    assert np.allclose(u, np.cos(t) * np.eye(2) + 1j * np.sin(t) * y, atol=1e-14)


@given(seeds, st.integers(2, 6))
def test_polar_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    u, m = linalg.polar_decompose(k)
    assert np.abs(u @ m - k).max() < 1e-10
    assert linalg.unitarity_residual(u) < 1e-12
    assert linalg.hermitian_residual(m) < 1e-12
    assert linalg.min_eigenvalue(m) > -1e-12
    # scipy's right polar decomposition as an independent oracle
    u2, m2 = scipy.linalg.polar(k, side="right")
    assert np.allclose(u, u2, atol=1e-9) and np.allclose(m, m2, atol=1e-9)


@given(seeds, st.integers(1, 6))
def test_random_density_matrix_valid(seed, d):
    rho = linalg.random_density_matrix(d, np.random.default_rng(seed))
    assert abs(np.trace(rho) - 1) < 1e-12
    assert linalg.min_eigenvalue(rho) > -1e-12


def test_trace_norm_matches_singular_values(rng):
    m = rng.normal(size=(5, 5))
    assert np.isclose(linalg.trace_norm(m), np.linalg.svd(m, compute_uv=False).sum())


def test_configure_tolerances_roundtrip():
    old = linalg.configure_tolerances(unitary=1e-6)
    try:
        assert linalg.TOL.unitary == 1e-6
    finally:
        linalg.configure_tolerances(**old)
    with linalg.tolerances(psd=1e-3):
        assert linalg.TOL.psd == 1e-3
    assert linalg.TOL.psd == 1e-12
