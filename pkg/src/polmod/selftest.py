"""Quick oracle-equivalence checks run by ``polmod selftest``."""

from __future__ import annotations

import itertools

import numpy as np

from . import analysis, baselines, fec, kernels
from .constellation import get_constellation, soft_demap
from .pmod import candidate_set, demod_llr, demod_ml


def _rand_channels(rng, n):
    return (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) / np.sqrt(2)


def check_ml_oracle(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    c = get_constellation("qpsk")
    H = _rand_channels(rng, n)
    X = candidate_set(c)
    x = X[rng.integers(0, len(X), n)]
    y = (H @ x[..., None])[..., 0] + 0.5 * (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)))
    res = demod_ml(y, H, c)
    for i in range(n):
        best, arg = np.inf, -1
        for k, cand in enumerate(X):
            d = np.sum(np.abs(y[i] - H[i] @ cand) ** 2)
            if d < best:
                best, arg = d, k
        if (arg >= c.size) != bool(res.c_hat[i]) or arg % c.size != res.s_index[i]:
            return False
    return True


def check_vblast_oracle(n=500, seed=1):
    rng = np.random.default_rng(seed)
    c = get_constellation("qpsk")
    H = _rand_channels(rng, n)
    bits = rng.integers(0, 2, (n, 4))
    y = (H @ baselines.vblast_tx(bits, c)[..., None])[..., 0]
    y = y + 0.3 * (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)))
    _, hard = baselines.vblast_rx(y, H, 0.18, c)
    for i in range(n):
        best, lab = np.inf, None
        for b in itertools.product((0, 1), repeat=4):
            d = np.sum(np.abs(y[i] - H[i] @ baselines.vblast_tx(np.array(b), c)) ** 2)
            if d < best:
                best, lab = d, b
        if tuple(hard[i]) != lab:
            return False
    return True


def check_llr_direct(seed=2):
    rng = np.random.default_rng(seed)
    c = get_constellation("qpsk")
    H = _rand_channels(rng, 50)
    y = rng.standard_normal((50, 2)) + 1j * rng.standard_normal((50, 2))
    n0 = 2.0
    lam = demod_llr(y, H, c, n0)
    p1 = np.exp(-np.abs(y[:, :, None] - H[:, :, 0, None] * c.points) ** 2 / n0).prod(axis=1).sum(axis=1)
    p2 = np.exp(-np.abs(y[:, :, None] - H[:, :, 1, None] * c.points) ** 2 / n0).prod(axis=1).sum(axis=1)
    return np.allclose(lam, np.log(p2) - np.log(p1), rtol=1e-12, atol=1e-12)


def check_bpsk_llr():
    c = get_constellation("bpsk")
    r = np.linspace(-2, 2, 41)
    return np.allclose(soft_demap(r, 1.0, 0.7, c)[:, 0], np.clip(4 * r / 0.7, -50, 50), atol=1e-12)


def check_viterbi_backends(seed=3):
    if kernels.viterbi_batch_compiled is None:
        return True
    cfg = fec.CodeConfig(block_bits=256)
    rng = np.random.default_rng(seed)
    info = rng.integers(0, 2, (4, 256), dtype=np.uint8)
    llr = (1 - 2.0 * fec.encode_batch(info, cfg)) * 2 + rng.standard_normal((4, cfg.coded_bits)) * 2
    a, _ = fec.decode_batch(llr, cfg, backend=kernels.viterbi_batch_compiled)
    b, _ = fec.decode_batch(llr, cfg, backend=kernels.viterbi_batch_python)
    return np.array_equal(a, b)


def check_fec_roundtrip(seed=4):
    cfg = fec.CodeConfig()
    info = np.random.default_rng(seed).integers(0, 2, cfg.block_bits, dtype=np.uint8)
    out, err = fec.decode(1 - 2.0 * fec.encode(info, cfg), cfg)
    return np.array_equal(out, info) and not err


def check_rician_reduces():
    return all(abs(analysis.pe_rician_bound(g, 0) - analysis.pe_rayleigh_bound(g)) < 1e-9 for g in (0.5, 3.0, 10.0))


CHECKS = {
    "ml-vs-exhaustive-oracle": check_ml_oracle,
    "vblast-vs-joint-search-oracle": check_vblast_oracle,
    "log-ratio-vs-direct-sum": check_llr_direct,
    "bpsk-llr-closed-form": check_bpsk_llr,
    "viterbi-compiled-vs-python": check_viterbi_backends,
    "fec-noiseless-roundtrip": check_fec_roundtrip,
    "rician-bound-k0-equals-rayleigh": check_rician_reduces,
}


def run(out=print) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        passed = bool(fn())
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    out(f"kernel backend: {kernels.BACKEND}")
    return ok
