import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctqec.channels import (
    KrausChannel,
    SuperoperatorGenerator,
    choi_distance,
    choi_matrix,
    diamond_norm,
    diamond_norm_search,
    induced_trace_norm,
    kraus_equivalence,
    kraus_rank,
    random_kraus_channel,
    reconstruction_residual,
    unvec,
    vec,
)
from ctqec.errors import DimensionError
from ctqec.linalg import random_density_matrix, random_unitary
from ctqec.minimal import strong_correction_map

from sdp_oracle import diamond_norm_sdp

seeds = st.integers(0, 2**32 - 1)


def test_vec_roundtrip(rng):
    m = rng.normal(size=(3, 3))
    assert np.array_equal(unvec(vec(m), 3), m)
    assert np.array_equal(vec(m), m.T.ravel())


@given(seeds, st.integers(2, 4), st.integers(1, 4))
def test_channel_is_cptp(seed, d, nk):
    rng = np.random.default_rng(seed)
    ch = random_kraus_channel(d, nk, rng)
    assert ch.completeness_residual() < 1e-12
    j = choi_matrix(ch)
    assert np.linalg.eigvalsh(j).min() > -1e-12
    rho = random_density_matrix(d, rng)
    out = ch.apply(rho)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.allclose(SuperoperatorGenerator.from_channel(ch).apply(rho), out)


@given(seeds, st.integers(2, 3), st.integers(1, 4))
def test_kraus_equivalence_recovers_mixing(seed, d, nk):
    rng = np.random.default_rng(seed)
    a = random_kraus_channel(d, nk, rng)
    u = random_unitary(nk, rng)
    b = KrausChannel(tuple(sum(u[j, l] * a.kraus[l] for l in range(nk)) for j in range(nk)))
    assert choi_distance(a, b) < 1e-10
    w = kraus_equivalence(a, b)
    assert w is not None
    assert reconstruction_residual(a, b, w) < 1e-9
    assert np.allclose(w @ w.conj().T, np.eye(w.shape[0]), atol=1e-10)


def test_kraus_equivalence_rejects_different_maps(rng):
    a = random_kraus_channel(2, 2, rng)
    b = random_kraus_channel(2, 2, rng)
    assert kraus_equivalence(a, b) is None


def test_kraus_rank_counts_independent_ops(rng):
    a = random_kraus_channel(3, 2, rng)
    padded = KrausChannel(a.kraus + (np.zeros((3, 3)),), trace_preserving=True)
    assert kraus_rank(a) == 2 and kraus_rank(padded) == 2


def test_generator_algebra():
    h = np.diag([1.0, -1.0])
    g = SuperoperatorGenerator.commutator(h)
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(g.apply(rho), -1j * (h @ rho - rho @ h))
    assert g.trace_residual() < 1e-15 and g.hermiticity_residual() < 1e-15
    assert np.allclose((2 * g - g).matrix, g.matrix)
    with pytest.raises(DimensionError):
        g + SuperoperatorGenerator.identity(3)


def test_generator_copies_input():
    m = np.eye(4, dtype=complex)
    SuperoperatorGenerator(m)
    m[0, 0] = 2.0  # caller's array stays writable


def test_strong_correction_distance():
    r = SuperoperatorGenerator.from_channel(strong_correction_map(2, 1)) - SuperoperatorGenerator.identity(4)
    assert abs(diamond_norm(r) - 2.0) < 1e-6


def test_diamond_norm_zero_and_identity():
    assert diamond_norm(SuperoperatorGenerator.zero(2)) == 0.0
    assert abs(diamond_norm(SuperoperatorGenerator.identity(2)) - 1.0) < 1e-8


def test_search_deterministic_under_workers(rng):
    a, b = random_kraus_channel(2, 2, rng), random_kraus_channel(2, 3, rng)
    g = SuperoperatorGenerator.from_channel(a) - SuperoperatorGenerator.from_channel(b)
    r1 = diamond_norm_search(g, restarts=8, seed=5, workers=1)
    r2 = diamond_norm_search(g, restarts=8, seed=5, workers=3)
    assert r1.values == r2.values


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_diamond_norm_matches_sdp(seed):
    rng = np.random.default_rng(seed)
    a, b = random_kraus_channel(2, 2, rng), random_kraus_channel(2, 2, rng)
    g = SuperoperatorGenerator.from_channel(a) - SuperoperatorGenerator.from_channel(b)
    sdp = diamond_norm_sdp(g.choi(), 2, 2)
    got = diamond_norm(g, restarts=16)
    assert abs(got - sdp) < 1e-5 * max(1, sdp)
    assert induced_trace_norm(g) <= got + 1e-7


@pytest.mark.slow
def test_adl_norm_matches_sdp():
    from ctqec.baselines import ADLMap, adl_generator
    g = adl_generator(ADLMap(1.0, 2.0))
    sdp = diamond_norm_sdp(g.choi(), 8, 8)
    assert abs(diamond_norm(g) - sdp) < 1e-4 * sdp
    assert abs(sdp / 2 - 7.6847) < 1e-3
