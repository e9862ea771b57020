"""Analytical symbol-error references for PMod with QPSK, used as Monte Carlo oracles.

``gamma_bar`` is the per-polarization SNR Es/N0 (linear) unless a name ends
in ``_db``.  The three-term union expression keeps only the nearest
neighbours of each point; :func:`pe_union_full` sums every pairwise term
and is a true upper bound on the ML symbol error rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .constellation import Constellation
from .pmod import candidate_set

QUAD_EPSREL = 1e-9


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def pe_union_conditional(H, ebn0):
    """Nearest-neighbour union expression for a fixed channel (QPSK, linear Eb/N0)."""
    H = np.asarray(H, dtype=complex)
    h1, h2 = H[..., :, 0], H[..., :, 1]
    n1 = np.sum(np.abs(h1) ** 2, axis=-1)
    n2 = np.sum(np.abs(h2) ** 2, axis=-1)
    d12 = np.sum(np.abs(h1 - h2) ** 2, axis=-1)
    g = np.asarray(ebn0, dtype=float)
    return 0.5 * (erfc(np.sqrt(g * n1)) + erfc(np.sqrt(g * n2)) + erfc(np.sqrt(g * d12 / 2)))


def pe_rayleigh_bound(gamma_bar):
    """Closed form of the nearest-neighbour expression averaged over i.i.d. Rayleigh fading."""
    g = np.asarray(gamma_bar, dtype=float)
    if np.any(g <= 0):
        raise ValueError("gamma_bar must be positive")
    out = 1.5 * (1.0 - np.sqrt(g / (2.0 + g)) * (1.0 + 1.0 / (2.0 + g)))
    return float(out) if out.ndim == 0 else out


def _rician_integrand(theta, g, k):
    a = 2.0 * (1.0 + k) * np.sin(theta) ** 2
    return (a / (a + g)) ** 2 * np.exp(-2.0 * k * g / (a + g))


def pe_rician_bound(gamma_bar, k):
    """Rician counterpart of :func:`pe_rayleigh_bound` by adaptive quadrature over θ ∈ (0, π)."""
    g = float(gamma_bar)
    if not g > 0:
        raise ValueError("gamma_bar must be positive")
    if k < 0:
        raise ValueError("k must be >= 0")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(
                _rician_integrand, 0.0, np.pi, args=(g, float(k)),
                epsabs=0.0, epsrel=QUAD_EPSREL, limit=200,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return 3.0 / (2.0 * np.pi) * val


def pe_ostbc_conditional(H, ebn0):
    """Alamouti QPSK symbol error term erfc(√(γ_b (‖h1‖² + ‖h2‖²)/2))."""
    H = np.asarray(H, dtype=complex)
    e = np.sum(np.abs(H) ** 2, axis=(-2, -1))
    return erfc(np.sqrt(np.asarray(ebn0, dtype=float) * e / 2))


def pe_union_full(H, n0, c: Constellation):
    """Full pairwise union bound on PMod-ML symbol error for fixed channels.

    Sums Q(‖H(x_i − x_j)‖ / √(2 n0)) over all ordered pairs, averaged over
    the 2·2^b equiprobable transmit vectors.
    """
    H = np.asarray(H, dtype=complex).reshape(-1, 2, 2)
    X = candidate_set(c)
    diff = X[:, None, :] - X[None, :, :]
    hd = np.einsum("nij,abj->nabi", H, diff)
    d2 = np.sum(np.abs(hd) ** 2, axis=-1)
    q = 0.5 * erfc(np.sqrt(d2 / (4.0 * n0)))
    m = len(X)
    q[:, np.arange(m), np.arange(m)] = 0.0
    return np.minimum(q.sum(axis=(1, 2)) / m, 1.0)


def pe_union_full_rayleigh(gamma_bar, c: Constellation, n_draws=200_000, seed=0):
    """Monte Carlo average of :func:`pe_union_full` over i.i.d. unit-power Rayleigh channels."""
    rng = np.random.default_rng(seed)
    n0 = 1.0 / float(gamma_bar)
    acc = 0.0
    done = 0
    while done < n_draws:
        n = min(50_000, n_draws - done)
        H = (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) / np.sqrt(2)
        acc += pe_union_full(H, n0, c).sum()
        done += n
    return acc / n_draws


@dataclass(frozen=True)
class OrderCheck:
    index: int
    status: str  # "pass", "fail" or "inconclusive"
    detail: str = ""


def _interval(est):
    if hasattr(est, "lo"):
        return float(est.value), float(est.lo), float(est.hi)
    v, lo, hi = est
    return float(v), float(lo), float(hi)


def check_order(estimates, names=None) -> str:
    """Classify whether ``estimates`` (each value or (v, lo, hi)) is increasing.

    ``"pass"`` when every consecutive pair is separated by its 95% intervals
    in the expected direction, ``"fail"`` when any pair is separated in the
    opposite direction, otherwise ``"inconclusive"``.
    """
    iv = [_interval(e) for e in estimates]
    status = "pass"
    for a, b in zip(iv, iv[1:]):
        if a[1] > b[2]:
            return "fail"
        if not a[2] < b[1]:
            status = "inconclusive"
    return status


def verify_bound_order(mc_ser_ostbc, mc_ser_pmod, mc_ser_vblast):
    """Per-SNR check of OSTBC ≤ PMod ≤ VBLAST from matched Monte Carlo estimates.

    Each argument is a sequence of estimates with confidence intervals (a
    :class:`~polmod.fec.RateEstimate` or a ``(value, lo, hi)`` tuple), one
    per SNR point.
    """
    out = []
    for i, trio in enumerate(zip(mc_ser_ostbc, mc_ser_pmod, mc_ser_vblast)):
        vals = [_interval(t)[0] for t in trio]
        out.append(OrderCheck(i, check_order(trio), "ostbc={:.3g} pmod={:.3g} vblast={:.3g}".format(*vals)))
    return out
