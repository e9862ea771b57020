import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polmod.constellation import get_constellation, hard_demap_index
from polmod.pmod import (
    IllConditioned, candidate_set, demod_hd, demod_llr, demod_ml, demod_sd, demod_zf, demodulate,
    hard_bits, mmse_filter, mmse_frontend, pmod_map, throughput_gain,
)

QPSK = get_constellation("qpsk")
S = 1 / np.sqrt(2)


def rand_h(rng, n=None):
    shape = (2, 2) if n is None else (n, 2, 2)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def well_conditioned(rng, n, limit=1e3):
    out = []
    while len(out) < n:
        H = rand_h(rng)
        if np.linalg.cond(H) < np.sqrt(limit):
            out.append(H)
    return np.array(out)


def test_throughput_gain():
    assert throughput_gain(1) == 2
    assert throughput_gain(2) == 1.5
    assert throughput_gain(4) == 1.25
    with pytest.raises(ValueError):
        throughput_gain(0)


def test_pmod_map_examples():
    np.testing.assert_allclose(pmod_map([0, 0, 0], QPSK), [S + S * 1j, 0])
    np.testing.assert_allclose(pmod_map([1, 0, 0], QPSK), [0, S + S * 1j])
    np.testing.assert_allclose(pmod_map([1, 1], get_constellation("bpsk")), [0, -1])
    with pytest.raises(ValueError):
        pmod_map([0, 1], QPSK)


def test_tx_vector_single_active_entry_full_power():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, (500, 3))
    x = pmod_map(bits, QPSK)
    assert np.all(np.sum(x != 0, axis=1) == 1)
    np.testing.assert_allclose(np.sum(np.abs(x) ** 2, axis=1), 1.0)


def test_zf_identity_and_permutation():
    s = S + S * 1j
    r = demod_zf(np.array([s, 0]), np.eye(2), QPSK)
    assert r.c_hat == 0 and r.r == pytest.approx(s)
    P = np.array([[0, 1], [1, 0]], dtype=complex)
    r = demod_zf(P @ np.array([s, 0]), P, QPSK)
    assert r.c_hat == 0 and r.r == pytest.approx(s)


def test_zf_ill_conditioned():
    H = np.ones((2, 2), dtype=complex)
    with pytest.raises(IllConditioned):
        demod_zf(np.array([1, 1], dtype=complex), H, QPSK)
    r = demod_zf(np.array([1, 1], dtype=complex), H, QPSK, n0=0.1, on_ill="flag")
    assert r.diagnostics["ill"]


def test_zf_noiseless_recovery_random_channels():
    rng = np.random.default_rng(1)
    H = well_conditioned(rng, 2000)
    X = candidate_set(QPSK)
    k = rng.integers(0, len(X), 2000)
    y = (H @ X[k][..., None])[..., 0]
    r = demod_zf(y, H, QPSK)
    assert np.array_equal(r.c_hat, k // 4)
    assert np.array_equal(hard_demap_index(r.r, QPSK), k % 4)


def naive_ml(y, H, X):
    best, arg = np.inf, -1
    for k, x in enumerate(X):
        d = np.sum(np.abs(y - H @ x) ** 2)
        if d < best:
            best, arg = d, k
    return arg


def test_ml_matches_naive_oracle():
    rng = np.random.default_rng(2)
    X = candidate_set(QPSK)
    H = rand_h(rng, 3000)
    y = (H @ X[rng.integers(0, 8, 3000)][..., None])[..., 0] + 0.4 * rand_h(rng, 3000)[:, :, 0]
    r = demod_ml(y, H, QPSK)
    k = np.array([naive_ml(y[i], H[i], X) for i in range(3000)])
    assert np.array_equal(r.c_hat, k // 4) and np.array_equal(r.s_index, k % 4)


def test_ml_tie_and_unique_minimiser():
    r = demod_ml(np.zeros(2, complex), np.eye(2), QPSK)
    assert r.c_hat == 0 and r.s_index == 0
    rng = np.random.default_rng(3)
    H = rand_h(rng)
    s = QPSK.points[2]
    r = demod_ml(H @ np.array([0, s]), H, QPSK)
    assert r.c_hat == 1 and r.s_index == 2


def test_llr_equal_columns_is_zero():
    h = np.array([0.7 + 0.1j, 0.3 - 0.2j])
    H = np.stack([h, h], axis=1)
    assert demod_llr(np.array([0.4, -0.1j]), H, QPSK, 0.3) == 0.0


def test_llr_fixed_instance_matches_high_precision_oracle():
    H = np.array([[0.9 + 0.2j, 0.1 - 0.3j], [-0.2 + 0.1j, 1.1 + 0.4j]])
    y = np.array([0.5 + 0.6j, -0.3 + 0.2j])
    # 30-digit direct summation
    assert demod_llr(y, H, QPSK, 0.5) == pytest.approx(-1.51961978744689125534, rel=1e-12)


def test_llr_clamped_in_limit():
    H = np.array([[1, 0.2], [0.1, 1]], dtype=complex)
    y = H @ np.array([0, QPSK.points[1]])
    assert demod_llr(y, H, QPSK, 1e-9) == 50.0


def test_hd_rule_and_branch():
    H = np.array([[1, 0.1], [0.2, 1]], dtype=complex)
    s = QPSK.points[3]
    r = demod_hd(H @ np.array([0, s]), H, QPSK, 0.05)
    assert r.lambda_log > 0 and r.c_hat == 1 and r.r == pytest.approx((H @ np.array([0, s]))[1])
    r = demod_hd(H @ np.array([s, 0]), H, QPSK, 0.05)
    assert r.lambda_log < 0 and r.c_hat == 0
    # log-ratio exactly 0 resolves to polarization 1
    Hs = np.ones((2, 2), complex)
    assert demod_hd(np.array([1, 1], complex), Hs, QPSK, 1.0).c_hat == 0


def test_hd_noiseless_random_channels():
    rng = np.random.default_rng(4)
    H = well_conditioned(rng, 2000)
    k = rng.integers(0, 4, 2000)
    y = H[:, :, 0] * QPSK.points[k][:, None]
    r = demod_hd(y, H, QPSK, 1e-4)
    assert np.all(r.c_hat == 0)
    assert np.array_equal(hard_demap_index(r.r / r.gain, QPSK), k)


def test_sd_limits():
    H = np.ones((2, 2), complex)
    y = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    r = demod_sd(y, H, QPSK, 0.5)
    assert r.p2 == 0.5 and r.r == pytest.approx((y[0] + y[1]) / 2)
    H = np.array([[1, 0.1], [0.1, 1]], complex)
    y = H @ np.array([0, QPSK.points[0]])
    r = demod_sd(y, H, QPSK, 1e-6)
    assert r.r == pytest.approx(y[1], abs=1e-12)


def test_sd_sigmoid_matches_ratio_form():
    rng = np.random.default_rng(5)
    n = 100_000
    H = rand_h(rng, n)
    y = rand_h(rng, n)[:, :, 0] * 1.5
    r = demod_sd(y, H, QPSK, 1.0)
    lam = np.exp(r.lambda_log)
    np.testing.assert_allclose(r.p2, lam / (1 + lam), rtol=1e-12)
    np.testing.assert_allclose(r.p1 + r.p2, 1.0, rtol=0, atol=1e-15)
    assert np.all((r.p2 >= 0) & (r.p2 <= 1))


@pytest.mark.parametrize("name", ["zf", "ml", "hd", "sd"])
@pytest.mark.parametrize("const", ["bpsk", "qpsk", "qam16"])
def test_noiseless_recovery_all_receivers(name, const):
    c = get_constellation(const)
    rng = np.random.default_rng(6)
    X = candidate_set(c)
    H = well_conditioned(rng, 200)
    idx = np.arange(200) % len(X)
    y = (H @ X[idx][..., None])[..., 0]
    r = demodulate(name, y, H, c, 1e-8)
    bits = hard_bits(r, c)
    expect = np.concatenate([(idx // c.size)[:, None], c.labels[idx % c.size]], axis=1)
    assert np.array_equal(bits, expect)


def test_hd_ml_agree_at_tiny_noise():
    rng = np.random.default_rng(7)
    n = 10_000
    X = candidate_set(QPSK)
    H = rand_h(rng, n)
    y = (H @ X[rng.integers(0, 8, n)][..., None])[..., 0] + 1e-4 * rand_h(rng, n)[:, :, 0]
    ml = demod_ml(y, H, QPSK)
    met = np.sort(ml.diagnostics["metrics"], axis=1)
    unique = met[:, 1] - met[:, 0] > 1e-6
    hd = demod_hd(y, H, QPSK, 1e-6)
    assert np.array_equal(hd.c_hat[unique], ml.c_hat[unique])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.01, 10))
def test_sd_hd_consistent_sign(seed, n0):
    rng = np.random.default_rng(seed)
    H = rand_h(rng, 16)
    y = rand_h(rng, 16)[:, :, 0]
    sd = demod_sd(y, H, QPSK, n0)
    hd = demod_hd(y, H, QPSK, n0)
    assert np.array_equal((sd.c_llr < 0).astype(int), hd.c_hat)
    np.testing.assert_allclose(sd.p1 + sd.p2, 1.0)


def test_deterministic_repeat():
    rng = np.random.default_rng(8)
    H = rand_h(rng, 50)
    y = rand_h(rng, 50)[:, :, 0]
    for name in ("zf", "ml", "hd", "sd"):
        a, b = demodulate(name, y, H, QPSK, 0.3), demodulate(name, y, H, QPSK, 0.3)
        assert np.array_equal(a.c_hat, b.c_hat) and np.array_equal(a.llr, b.llr)


def test_llr_layout_and_hard_c_weight():
    rng = np.random.default_rng(9)
    H = rand_h(rng, 20)
    y = rand_h(rng, 20)[:, :, 0]
    for name in ("zf", "hd", "sd"):
        r = demodulate(name, y, H, QPSK, 0.5)
        assert r.llr.shape == (20, 3)
    r = demod_hd(y, H, QPSK, 0.5)
    np.testing.assert_allclose(np.abs(r.llr[:, 0]), np.mean(np.abs(r.llr[:, 1:]), axis=1))
    assert np.all(np.abs(demod_ml(y, H, QPSK).llr) == 1)


def test_mmse_examples():
    n0 = 0.25
    np.testing.assert_allclose(mmse_filter(np.eye(2), np.zeros((2, 2)), n0), np.eye(2) / (1 + n0))
    U = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    y = np.array([0.3 + 0.1j, -0.7j])
    np.testing.assert_allclose(mmse_frontend(y, U, np.zeros((2, 2)), 1e-12), U.conj().T @ y, atol=1e-10)


def test_mmse_matches_explicit_inverse():
    rng = np.random.default_rng(10)
    H = rand_h(rng)
    A = rand_h(rng)
    R = A @ A.conj().T * 0.2
    n0 = 0.1
    M = H @ H.conj().T + R + n0 * np.eye(2)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    inv = np.array([[d, -b], [-c, a]]) / (a * d - b * c)
    np.testing.assert_allclose(mmse_filter(H, R, n0), H.conj().T @ inv, atol=1e-10)
