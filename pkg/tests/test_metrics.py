import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mixfield import PowerVector, SelectionMask, interference_coupling, mrt_weights
from mixfield import rate_full_array, rate_with_selection
from mixfield.metrics import beam_amplitudes, coupling_factors

from conftest import NOISE, mixed_two_user


def _complex_matrix(rng, K, N):
    return rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))


def test_power_vector_budget():
    PowerVector([0.4, 0.6], 1.0)
    with pytest.raises(ValueError):
        PowerVector([0.6, 0.6], 1.0)
    with pytest.raises(ValueError):
        PowerVector([-0.1, 0.2], 1.0)
    assert np.allclose(PowerVector.equal(4, 2.0).powers, 0.5)


def test_selection_mask():
    m = SelectionMask([1, 0, 1])
    assert m.active_count == 2 and m.bits.dtype == bool
    with pytest.raises(ValueError):
        SelectionMask([0, 2])


@given(st.integers(1, 4), st.integers(1, 24), st.integers(0, 2**31))
def test_full_mask_identity(K, N, seed):
    rng = np.random.default_rng(seed)
    H = _complex_matrix(rng, K, N)
    P = rng.uniform(0, 1, K)
    a = rate_full_array(H, P, 0.3)
    b = rate_with_selection(H, np.ones((K, N)), P, 0.3)
    assert np.allclose(a.per_user_rate, b.per_user_rate, rtol=0, atol=1e-12)


def test_mrt_beam_is_matched():
    sc = mixed_two_user(32)
    W = mrt_weights(sc.channels)
    S = np.stack([c.steering for c in sc.channels])
    assert np.allclose(W, np.sqrt(32) * np.conj(S))
    A = beam_amplitudes(sc.H, W)
    # own-beam amplitude equals sqrt(N) * ||h|| under LoS
    assert np.allclose(np.abs(np.diag(A)), np.sqrt(32) * np.linalg.norm(sc.H, axis=1))


def test_single_user_rate_closed_form():
    sc = mixed_two_user(32)
    h = sc.channels[0]
    rep = rate_full_array([h], [1.0], NOISE)
    assert rep.per_user_rate[0] == pytest.approx(np.log2(1 + abs(h.gain) ** 2 * 32 / NOISE))


@given(st.integers(0, 2**31))
def test_more_antennas_raise_single_user_rate(seed):
    rng = np.random.default_rng(seed)
    sc = mixed_two_user(16)
    h = sc.channels[0]
    bits = rng.random(16) < 0.5
    bits[0] = True
    r_sub = rate_with_selection([h], bits[None], [1.0], NOISE).per_user_rate[0]
    r_full = rate_full_array([h], [1.0], NOISE).per_user_rate[0]
    assert r_sub <= r_full + 1e-12


def test_rate_report_fields(two_user16):
    sc = two_user16
    rep = rate_with_selection(sc.channels, np.ones((2, 16)), [0.5, 0.5], NOISE, weights=[1, 3])
    assert rep.weighted_sum_rate == pytest.approx(rep.per_user_rate @ [1, 3])
    assert np.all(np.diag(rep.interference_matrix) == 0)
    row = rep.to_row(seed=1, scheme="x")
    assert row["seed"] == 1 and "rate_1" in row and row["sum_rate"] == rep.sum_rate


def test_rate_rejects_bad_inputs(two_user16):
    sc = two_user16
    with pytest.raises(ValueError):
        rate_with_selection(sc.channels, np.zeros((2, 16)), [0.5, 0.5], NOISE)
    with pytest.raises(ValueError):
        rate_with_selection(sc.channels, np.full((2, 16), 0.5), [0.5, 0.5], NOISE)
    with pytest.raises(ValueError):
        rate_full_array(sc.channels, [0.5], NOISE)
    with pytest.raises(ValueError):
        rate_full_array(sc.channels, [0.5, 0.5], 0.0)
    with pytest.raises(ValueError):
        rate_full_array(np.full((2, 3), np.nan), [0.5, 0.5], NOISE)


@given(arrays(bool, (3, 10)), st.integers(0, 2**31))
def test_coupling_matches_definition(bits, seed):
    bits[:, 0] = True
    rng = np.random.default_rng(seed)
    H = _complex_matrix(rng, 3, 10)
    W = mrt_weights(H)
    V = bits.astype(float)
    I = coupling_factors(H, W, V)
    for k in range(3):
        total, per = interference_coupling(k, H, V, W)
        direct = sum(abs(np.sum(H[i] * V[k] * W[k])) for i in range(3) if i != k) / np.sqrt(V[k].sum())
        assert total == pytest.approx(direct) == pytest.approx(I[k])
        assert len(per) == 2
