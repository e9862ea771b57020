"""Polarized modulation: transmit mapping and the four receivers.

Every symbol carries b+1 bits: the first bit ``c`` selects the polarization
and the remaining b bits pick the constellation point ``s``.  The channel
matrix follows ``H[:, 0] = h1`` (polarization 1) and ``H[:, 1] = h2``.

All receivers accept a single observation (``y`` of shape (2,), ``H`` of
shape (2, 2)) or a batch (``(n, 2)`` and ``(n, 2, 2)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .constellation import LLR_CLAMP, Constellation, hard_demap_index, modulate, soft_demap

ZF_COND_LIMIT = 1e12
DEMODULATORS = ("zf", "ml", "hd", "sd")


class IllConditioned(ValueError):
    """Raised when HᴴH is too badly conditioned for zero forcing."""


@dataclass(frozen=True)
class PModSymbol:
    c: int
    s: complex


@dataclass
class DemodResult:
    """Output of a PMod receiver.

    ``r = gain * s + noise(noise_var)`` is the scalar stream handed to the
    SISO stage; ``llr`` holds the b+1 bit LLRs (c first) when the receiver
    was given a noise level.
    """

    c_hat: np.ndarray
    r: np.ndarray
    gain: np.ndarray
    noise_var: np.ndarray | None = None
    s_index: np.ndarray | None = None
    lambda_log: np.ndarray | None = None
    p2: np.ndarray | None = None
    llr: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def c_llr(self):
        """Soft value of c under the LLR convention (positive favours c = 0)."""
        if self.lambda_log is None:
            return None
        return np.clip(-self.lambda_log, -LLR_CLAMP, LLR_CLAMP)

    @property
    def p1(self):
        return None if self.p2 is None else 1.0 - self.p2


def throughput_gain(b: int) -> float:
    """Rate gain (b+1)/b of PMod over the single-polarization link."""
    if b < 1:
        raise ValueError("b must be a positive integer")
    return 1.0 + 1.0 / b


def pmod_map(bits, c: Constellation) -> np.ndarray:
    """Map b+1 bits (c first) to the transmit vector [s, 0] or [0, s]."""
    bits = np.asarray(bits)
    if bits.ndim == 0 or bits.shape[-1] != c.bits_per_symbol + 1:
        raise ValueError(f"expected groups of {c.bits_per_symbol + 1} bits, got shape {bits.shape}")
    sel = bits[..., 0].astype(np.intp)
    s = np.asarray(modulate(bits[..., 1:], c))
    x = np.zeros(bits.shape[:-1] + (2,), dtype=complex)
    np.put_along_axis(x, sel[..., None], s[..., None], axis=-1)
    return x


def candidate_set(c: Constellation) -> np.ndarray:
    """The 2·2^b PMod vectors, c = 0 half first, each half in point order."""
    m = c.size
    cand = np.zeros((2 * m, 2), dtype=complex)
    cand[:m, 0] = c.points
    cand[m:, 1] = c.points
    return cand


def _batch(y, H):
    y = np.asarray(y, dtype=complex)
    H = np.asarray(H, dtype=complex)
    single = y.ndim == 1
    return np.atleast_2d(y), H.reshape(-1, 2, 2), single


def _unbatch(res: DemodResult, single: bool) -> DemodResult:
    if not single:
        return res
    for name in ("c_hat", "r", "gain", "noise_var", "s_index", "lambda_log", "p2", "llr"):
        v = getattr(res, name)
        if v is not None:
            setattr(res, name, v[0])
    res.diagnostics = {k: v[0] for k, v in res.diagnostics.items()}
    return res


def _hard_c_llr(c_hat, s_llr):
    # Hard c decision weighted like the symbol's own s bits.
    mag = np.mean(np.abs(s_llr), axis=-1)
    return np.where(c_hat == 0, mag, -mag)


def demod_zf(y, H, c: Constellation, n0=None, on_ill: str = "raise", max_log: bool = False) -> DemodResult:
    """Zero-forcing pre-filter followed by a power detector on the two branches.

    With ``on_ill="flag"`` ill-conditioned symbols are zeroed and reported in
    ``diagnostics["ill"]`` instead of raising.
    """
    yb, Hb, single = _batch(y, H)
    Hh = np.conj(np.swapaxes(Hb, -1, -2))
    G = Hh @ Hb
    cond = np.linalg.cond(G)
    ill = ~(cond <= ZF_COND_LIMIT)
    if ill.any() and on_ill == "raise":
        raise IllConditioned(f"condition number of HᴴH is {np.max(cond):.3g}")
    Gs = np.where(ill[:, None, None], np.eye(2), G)
    Ginv = np.linalg.inv(Gs)
    z = (Ginv @ (Hh @ yb[..., None]))[..., 0]
    z[ill] = 0.0
    power = np.abs(z) ** 2
    c_hat = (power[:, 1] > power[:, 0]).astype(np.int64)
    idx = np.arange(len(yb))
    r = z[idx, c_hat]
    gain = np.ones(len(yb), dtype=complex)
    res = DemodResult(c_hat=c_hat, r=r, gain=gain, diagnostics={"z": z, "ill": ill})
    if n0 is not None:
        nv = n0 * np.real(Ginv[idx, c_hat, c_hat])
        nv = np.where(ill, np.inf, np.maximum(nv, 1e-300))
        s_llr = soft_demap(r, gain, np.where(ill, 1.0, nv), c, max_log=max_log)
        s_llr[ill] = 0.0
        c_llr = _hard_c_llr(c_hat, s_llr)
        res.noise_var = nv
        res.llr = np.concatenate([c_llr[:, None], s_llr], axis=1)
    return _unbatch(res, single)


def ml_metrics(y, H, c: Constellation) -> np.ndarray:
    """‖y − Hx‖² for every PMod candidate x, shape (n, 2·2^b)."""
    yb, Hb, _ = _batch(y, H)
    m = c.size
    # H x for x = [s,0] is h1·s and for x = [0,s] is h2·s
    hx = np.concatenate(
        [Hb[:, :, 0, None] * c.points[None, None, :], Hb[:, :, 1, None] * c.points[None, None, :]],
        axis=2,
    )
    assert hx.shape[-1] == 2 * m
    return np.sum(np.abs(yb[:, :, None] - hx) ** 2, axis=1)


def demod_ml(y, H, c: Constellation) -> DemodResult:
    """Exhaustive minimum-distance search over the PMod candidate set."""
    yb, Hb, single = _batch(y, H)
    met = ml_metrics(yb, Hb, c)
    k = np.argmin(met, axis=1)
    m = c.size
    c_hat = (k >= m).astype(np.int64)
    s_idx = k % m
    r = c.points[s_idx]
    bits = np.concatenate([c_hat[:, None], c.labels[s_idx]], axis=1)
    llr = np.where(bits == 0, 1.0, -1.0)
    res = DemodResult(
        c_hat=c_hat, r=r, gain=np.ones(len(yb), dtype=complex), s_index=s_idx, llr=llr,
        diagnostics={"metrics": met},
    )
    return _unbatch(res, single)


def _branch_metrics(yb, Hb, c, n0):
    n0 = np.broadcast_to(np.asarray(n0, dtype=float), (len(yb),))
    if np.any(n0 <= 0):
        raise ValueError("n0 must be positive")
    met = ml_metrics(yb, Hb, c) / n0[:, None]
    m = c.size
    return -met[:, :m], -met[:, m:]


def demod_llr(y, H, c: Constellation, n0):
    """log Λ(y) = log P(c=1|y) − log P(c=0|y), evaluated in the log domain."""
    yb, Hb, single = _batch(y, H)
    m1, m2 = _branch_metrics(yb, Hb, c, n0)
    lam = logsumexp(m2, axis=1) - logsumexp(m1, axis=1)
    lam = np.clip(lam, -LLR_CLAMP, LLR_CLAMP)
    return float(lam[0]) if single else lam


def demod_hd(y, H, c: Constellation, n0, max_log: bool = False) -> DemodResult:
    """Hard decision on c from the sign of log Λ, then the selected branch."""
    yb, Hb, single = _batch(y, H)
    lam = demod_llr(yb, Hb, c, n0)
    c_hat = (lam > 0).astype(np.int64)
    idx = np.arange(len(yb))
    y_sel = yb[idx, c_hat]
    h_sel = Hb[idx, c_hat, c_hat]
    nv = np.broadcast_to(np.asarray(n0, dtype=float), (len(yb),))
    s_llr = soft_demap(y_sel, h_sel, nv, c, max_log=max_log)
    c_llr = _hard_c_llr(c_hat, s_llr)
    res = DemodResult(
        c_hat=c_hat, r=y_sel, gain=h_sel, noise_var=nv.copy(), lambda_log=lam,
        llr=np.concatenate([c_llr[:, None], s_llr], axis=1),
    )
    return _unbatch(res, single)


def demod_sd(y, H, c: Constellation, n0, max_log: bool = False) -> DemodResult:
    """Soft c (log Λ) and the probability-weighted combination of both branches."""
    yb, Hb, single = _batch(y, H)
    lam = demod_llr(yb, Hb, c, n0)
    p2 = expit(lam)
    p1 = expit(-lam)
    r = p1 * yb[:, 0] + p2 * yb[:, 1]
    gain = p1 * Hb[:, 0, 0] + p2 * Hb[:, 1, 1]
    nv = np.broadcast_to(np.asarray(n0, dtype=float), (len(yb),)) * (p1 ** 2 + p2 ** 2)
    s_llr = soft_demap(r, gain, nv, c, max_log=max_log)
    c_llr = np.clip(-lam, -LLR_CLAMP, LLR_CLAMP)
    res = DemodResult(
        c_hat=(lam > 0).astype(np.int64), r=r, gain=gain, noise_var=nv, lambda_log=lam, p2=p2,
        llr=np.concatenate([c_llr[:, None], s_llr], axis=1),
    )
    return _unbatch(res, single)


def demodulate(name: str, y, H, c: Constellation, n0, max_log: bool = False) -> DemodResult:
    """Dispatch on a receiver name ("zf", "ml", "hd", "sd")."""
    if name == "zf":
        return demod_zf(y, H, c, n0, on_ill="flag", max_log=max_log)
    if name == "ml":
        return demod_ml(y, H, c)
    if name == "hd":
        return demod_hd(y, H, c, n0, max_log=max_log)
    if name == "sd":
        return demod_sd(y, H, c, n0, max_log=max_log)
    raise ValueError(f"unknown demodulator {name!r}; expected one of {DEMODULATORS}")


def hard_bits(res: DemodResult, c: Constellation) -> np.ndarray:
    """Uncoded (c, s-bits) decisions, shape (n, b+1)."""
    c_hat = np.atleast_1d(res.c_hat)
    if res.s_index is not None:
        s_idx = np.atleast_1d(res.s_index)
    else:
        s_idx = hard_demap_index(np.atleast_1d(res.r), c, np.atleast_1d(res.gain))
    return np.concatenate([c_hat[:, None], c.labels[s_idx]], axis=1).astype(np.uint8)


def mmse_filter(H, Rint, n0) -> np.ndarray:
    """W = Hᴴ (H Hᴴ + R_int + n0 I)⁻¹ for one or many channels."""
    H = np.asarray(H, dtype=complex)
    Hh = np.conj(np.swapaxes(H, -1, -2))
    A = H @ Hh + np.asarray(Rint) + np.asarray(n0)[..., None, None] * np.eye(2)
    return Hh @ np.linalg.inv(A)


def mmse_frontend(y, H, Rint, n0) -> np.ndarray:
    """Apply the MMSE interference-suppression filter to ``y``."""
    W = mmse_filter(H, Rint, n0)
    return (W @ np.asarray(y, dtype=complex)[..., None])[..., 0]
