import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j0

from polmod import channel as ch


def test_los_limit_is_deterministic():
    H = ch.gen_fading(ch.FadingParams(k_factor=np.inf), 100, seed=0)
    np.testing.assert_allclose(np.abs(H), 1.0)
    assert np.all(H == H[0])


def test_params_validation():
    for kw in ({"k_factor": -1}, {"rho": 1.5}, {"doppler_hz": -2}, {"n_oscillators": 0}):
        with pytest.raises(ValueError):
            ch.FadingParams(**kw)
    with pytest.raises(ValueError):
        ch.gen_fading(ch.FadingParams(), 0)


def test_determinism():
    p = ch.FadingParams()
    a = ch.gen_fading(p, 500, seed=42)
    b = ch.gen_fading(p, 500, seed=42)
    c = ch.gen_fading(p, 500, seed=43)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("k,rho", [(0.0, 0.0), (3.0, 0.9), (10.0, 0.5)])
def test_unit_power(k, rho):
    H = ch.gen_fading_batch(ch.FadingParams(k_factor=k, rho=rho), 50_000, 1, np.random.default_rng(1))
    np.testing.assert_allclose(np.mean(np.abs(H.reshape(-1, 4)) ** 2, axis=0), 1.0, rtol=0.02)


def test_coloring_matrix():
    L = ch.correlation_coloring(0.5)
    np.testing.assert_allclose(L @ L.T, 0.5 + 0.5 * np.eye(4), atol=1e-12)


def test_jakes_autocorrelation_short_run():
    p = ch.FadingParams(doppler_hz=84.0)
    g = ch.jakes_processes(p, 400, 600, np.random.default_rng(2))
    lags = np.arange(0, 201, 20)
    n = 400
    ac = np.array([np.mean(np.real(g[:, l:l + n] * np.conj(g[:, :n]))) for l in lags])
    np.testing.assert_allclose(ac, j0(2 * np.pi * 84.0 / 33600 * lags), atol=0.08)


def test_cos_sum_factorisation_exact():
    rng = np.random.default_rng(3)
    f = rng.uniform(0, 1e-2, (5, 8))
    ph = rng.uniform(-np.pi, np.pi, (5, 8))
    for n in (1, 7, 32, 33, 100):
        t = np.arange(n)
        ref = np.cos(f[:, :, None] * t + ph[:, :, None]).sum(axis=1)
        np.testing.assert_allclose(ch._cos_sum(f, ph, n), ref, atol=1e-12)


def test_coupling_table_data_row():
    tab = ch.load_coupling_table()
    np.testing.assert_allclose(tab[0], [[40.8, -11.6], [-11.6, 40.8]])
    np.testing.assert_allclose(tab[3], [[3.6, -6.7], [-6.7, 3.6]])
    bc = ch.BeamCoupling()
    np.testing.assert_allclose(bc.matrix(0), [[1, 0.00239883291901949046], [0.00239883291901949046, 1]], rtol=1e-12)
    assert bc.data_xpd_db == pytest.approx(52.4)


def test_coupling_b3_applied_to_unit_vector():
    # 10^((3.6-40.8)/20), 10^((-6.7-40.8)/20) evaluated at 30 digits
    out = ch.apply_coupling(np.array([1, 0]), ch.BeamCoupling(), 3)
    np.testing.assert_allclose(out, [0.0138038426460288484, 0.00421696503428582249], rtol=1e-12)


def test_coupling_signed_and_unnormalised():
    bc = ch.BeamCoupling(normalize=False, signed=True)
    B = bc.matrix(3)
    assert B[0, 0] == pytest.approx(10 ** (3.6 / 20)) and B[0, 1] == pytest.approx(-(10 ** (-6.7 / 20)))


def test_identity_coupling_and_bad_index():
    table = np.zeros((7, 2, 2))
    table[:, 0, 1] = table[:, 1, 0] = -np.inf
    bc = ch.BeamCoupling(table, normalize=False)
    x = np.array([0.3 + 0.2j, -1j])
    np.testing.assert_allclose(ch.apply_coupling(x, bc, 2), x)
    with pytest.raises(IndexError):
        bc.matrix(7)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.integers(0, 6))
def test_coupling_linearity(re, im, i):
    x = np.array([0.4 - 0.1j, 0.9j])
    a = complex(re, im)
    bc = ch.BeamCoupling()
    np.testing.assert_allclose(ch.apply_coupling(a * x, bc, i), a * ch.apply_coupling(x, bc, i), rtol=1e-12, atol=1e-9)


def test_interference_disabled_and_single():
    bc = ch.BeamCoupling()
    rng = np.random.default_rng(4)
    y = rng.standard_normal((10, 2)) + 0j
    sym = ch.interferer_symbols(6, (10,), rng)
    Hs = np.ones((6, 10, 2, 2), complex)
    np.testing.assert_allclose(ch.add_interference(y, sym, Hs, bc, enabled=np.zeros(6, bool)), y)
    only = np.zeros(6, bool)
    only[3] = True  # beam 4
    got = ch.add_interference(np.zeros((10, 2)), sym, Hs, bc, enabled=only)
    np.testing.assert_allclose(got, (bc.matrix(4) @ sym[3][..., None])[..., 0])


def test_interferer_symbols_power():
    s = ch.interferer_symbols(6, (20_000,), np.random.default_rng(5))
    np.testing.assert_allclose(np.abs(s) ** 2, 0.5)


def test_interference_power_matches_analytic_sum():
    bc = ch.BeamCoupling()
    rng = np.random.default_rng(6)
    p = ch.FadingParams()
    n = 200_000
    Hs = ch.gen_fading_batch(p, 6 * n, 1, rng).reshape(6, n, 2, 2)
    sym = ch.interferer_symbols(6, (n,), rng)
    i = ch.add_interference(np.zeros((n, 2)), sym, Hs, bc)
    np.testing.assert_allclose(np.mean(np.abs(i) ** 2, axis=0), ch.interference_power(bc), rtol=0.03)
    R = ch.interference_covariance(Hs, bc)
    np.testing.assert_allclose(np.mean(np.real(np.diagonal(R, axis1=-2, axis2=-1)), axis=0),
                               ch.interference_power(bc), rtol=0.03)


def test_awgn():
    y = np.zeros(1_000_000, complex)
    assert np.array_equal(ch.add_awgn(y[:10], 0.0), y[:10])
    w = ch.add_awgn(y, 0.3, seed=7)
    assert np.var(w) == pytest.approx(0.3, rel=0.01)
    assert np.var(w.real) == pytest.approx(0.15, rel=0.01)
    assert np.var(w.imag) == pytest.approx(0.15, rel=0.01)
    with pytest.raises(ValueError):
        ch.add_awgn(y, -1)


def test_xpd_examples():
    assert ch.xpd_db(10.0, 1.0) == pytest.approx(20.0)
    H = np.ones((2, 2), complex)
    np.testing.assert_allclose(ch.set_xpd(H, 0.0), H)
    np.testing.assert_allclose(ch.set_xpd(H, 30.0), [[1, 10 ** -1.5], [10 ** -1.5, 1]])
    with pytest.raises(ValueError):
        ch.set_xpd(H, np.inf)


def test_xpd_in_expectation_on_fading():
    H = ch.gen_fading_batch(ch.FadingParams(), 20_000, 1, np.random.default_rng(8)).reshape(-1, 2, 2)
    G = ch.set_xpd(H, 15.0)
    ratio = np.mean(np.abs(G[:, 0, 0]) ** 2) / np.mean(np.abs(G[:, 1, 0]) ** 2)
    assert 10 * np.log10(ratio) == pytest.approx(15.0, abs=0.2)


def test_perturb_csi():
    rng = np.random.default_rng(9)
    H = (rng.standard_normal((250_000, 2, 2)) + 1j * rng.standard_normal((250_000, 2, 2))) / np.sqrt(2)
    np.testing.assert_array_equal(ch.perturb_csi(H, 0.0, seed=1), H)
    Hb = ch.perturb_csi(H, 0.1, seed=1)
    e = (Hb - H).reshape(-1, 4)
    assert np.mean(np.abs(e) ** 2) / np.mean(np.abs(H) ** 2) == pytest.approx(0.1, rel=0.02)
    C = np.abs(np.corrcoef(e.T))
    assert np.max(C - np.diag(np.diag(C))) < 0.01
    assert abs(np.mean(e[:, 0] * np.conj(H.reshape(-1, 4)[:, 0]))) / 0.1 < 0.01
    with pytest.raises(ValueError):
        ch.perturb_csi(H, -0.1)


def test_link_budget_roundtrip():
    lb = ch.LinkBudget(eirp_dbw=40.0)
    eb = lb.ebn0_db(40e3)
    assert ch.LinkBudget(eirp_dbw=lb.eirp_for_ebn0(eb, 40e3)).ebn0_db(40e3) == pytest.approx(eb)
    assert lb.cn0_dbhz() == pytest.approx(40.0 - 187.05 - 12.5 + 228.6)
