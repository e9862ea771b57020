"""Dual-polarized channel: Rician/Jakes fading, beam coupling, noise, impairments.

Channel matrices use ``H[..., i, j]`` = gain from transmit polarization j to
receive polarization i, i.e. ``H = [[h11, h21], [h12, h22]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

N_BEAMS = 7
_CHUNK_ELEMS = 1 << 22
BOLTZMANN_DBW = -228.6


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class FadingParams:
    """Rician fading with a Jakes Doppler spectrum on all four coefficients."""

    k_factor: float = 10.0
    rho: float = 0.5
    doppler_hz: float = 2.0
    symbol_rate_hz: float = 33_600.0
    n_oscillators: int = 32

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError("k_factor must be >= 0")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.doppler_hz < 0:
            raise ValueError("doppler_hz must be >= 0")
        if self.n_oscillators < 1:
            raise ValueError("n_oscillators must be >= 1")

    @property
    def sigma_h(self) -> float:
        """RMS amplitude of the diffuse part under unit total power."""
        if np.isinf(self.k_factor):
            return 0.0
        return float(np.sqrt(1.0 / (self.k_factor + 1.0)))

    @property
    def los_amplitude(self) -> float:
        if np.isinf(self.k_factor):
            return 1.0
        return float(np.sqrt(self.k_factor / (self.k_factor + 1.0)))


def correlation_coloring(rho: float) -> np.ndarray:
    """Matrix L with L Lᵀ = (1-ρ)I + ρ11ᵀ over the four coefficients."""
    R = np.full((4, 4), rho) + (1.0 - rho) * np.eye(4)
    w, V = np.linalg.eigh(R)
    return V * np.sqrt(np.clip(w, 0.0, None))


def jakes_processes(params: FadingParams, n_proc: int, n_symbols: int, rng) -> np.ndarray:
    """Independent unit-power sum-of-sinusoids Jakes processes, shape (n_proc, n_symbols).

    Uses the randomized Zheng-Xiao arrival angles so that the ensemble
    autocorrelation is J0(2π f_d τ) and in-phase/quadrature parts are
    uncorrelated.  Processes are drawn in chunks to bound memory.
    """
    rng = _rng(rng)
    m = params.n_oscillators
    wd = 2 * np.pi * params.doppler_hz / params.symbol_rate_hz
    step = max(1, _CHUNK_ELEMS // (m * max(n_symbols, 32)))
    out = np.empty((n_proc, n_symbols), dtype=complex)
    for lo in range(0, n_proc, step):
        k = min(step, n_proc - lo)
        theta = rng.uniform(-np.pi, np.pi, size=(k, 1))
        phi = rng.uniform(-np.pi, np.pi, size=(k, m))
        psi = rng.uniform(-np.pi, np.pi, size=(k, m))
        alpha = (2 * np.pi * np.arange(1, m + 1) - np.pi + theta) / (4 * m)
        g_i = _cos_sum(wd * np.cos(alpha), phi, n_symbols)
        g_q = _cos_sum(wd * np.sin(alpha), psi, n_symbols)
        out[lo:lo + k] = (g_i + 1j * g_q) / np.sqrt(m)
    return out


def _cos_sum(freq, phase, n, chunk=32):
    """Σ_m cos(freq_m t + phase_m) for t = 0..n-1, per row.

    Writes t = chunk·q + r so the sum becomes Re(A_q · B_r) with
    A = exp(i(freq·chunk·q + phase)) and B = exp(i·freq·r): one batched
    complex matrix product instead of n·m cosines.
    """
    r = np.arange(min(chunk, n), dtype=float)
    q = np.arange(-(-n // len(r)), dtype=float) * len(r)
    A = np.exp(1j * (freq[:, None, :] * q[:, None] + phase[:, None, :]))   # (P, Q, M)
    B = np.exp(1j * freq[:, :, None] * r)                                  # (P, M, R)
    return np.real(A @ B).reshape(len(freq), -1)[:, :n]


def gen_fading_batch(params: FadingParams, n_blocks: int, n_symbols: int, rng) -> np.ndarray:
    """Independent fading realizations, shape (n_blocks, n_symbols, 2, 2)."""
    rng = _rng(rng)
    los = params.los_amplitude
    if params.sigma_h == 0.0:
        return np.full((n_blocks, n_symbols, 2, 2), los, dtype=complex)
    g = jakes_processes(params, 4 * n_blocks, n_symbols, rng).reshape(n_blocks, 4, n_symbols)
    d = np.einsum("ij,bjn->bni", correlation_coloring(params.rho), g)
    h = los + params.sigma_h * d
    return h.reshape(n_blocks, n_symbols, 2, 2)


def gen_fading(params: FadingParams, n_symbols: int, seed=None) -> np.ndarray:
    """One channel realization per symbol, shape (n_symbols, 2, 2)."""
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    return gen_fading_batch(params, 1, n_symbols, seed)[0]


def load_coupling_table(path=None) -> np.ndarray:
    """Read the seven 2x2 dB coupling matrices, shape (7, 2, 2)."""
    if path is None:
        text = resources.files("polmod").joinpath("data/coupling_table.txt").read_text()
    else:
        text = Path(path).read_text()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(v) for v in line.split()])
    table = np.array(rows)
    if table.shape != (N_BEAMS, 5):
        raise ValueError(f"coupling table must have {N_BEAMS} rows of 'index m11 m12 m21 m22'")
    order = np.argsort(table[:, 0])
    return table[order, 1:].reshape(N_BEAMS, 2, 2)


@dataclass
class BeamCoupling:
    """Polarization coupling of the data beam (0) and six interferers (1..6).

    dB entries are power gains.  With ``normalize`` every matrix is shifted
    by the data-beam diagonal so the desired copolar path has unit gain and
    all relative levels are kept.  With ``signed`` the sign of each original
    dB entry becomes the amplitude polarity.
    """

    table_db: np.ndarray = field(default_factory=load_coupling_table)
    normalize: bool = True
    signed: bool = False

    @property
    def amplitudes(self) -> np.ndarray:
        db = np.asarray(self.table_db, dtype=float)
        ref = db[0, 0, 0] if self.normalize else 0.0
        amp = 10.0 ** ((db - ref) / 20.0)
        if self.signed:
            amp = np.where(db < 0, -amp, amp)
        return amp

    def matrix(self, i: int) -> np.ndarray:
        if not 0 <= i < N_BEAMS:
            raise IndexError(f"coupling index must be in 0..{N_BEAMS - 1}, got {i}")
        return self.amplitudes[i]

    @property
    def data_xpd_db(self) -> float:
        a = self.amplitudes[0]
        return float(20 * np.log10(abs(a[0, 0]) / abs(a[0, 1])))


def apply_coupling(x, coupling: BeamCoupling, i: int) -> np.ndarray:
    """Apply coupling matrix B_i (amplitude domain) to transmit vector(s) ``x``."""
    B = coupling.matrix(i)
    return (B @ np.asarray(x, dtype=complex)[..., None])[..., 0]


def couple_channel(H, B) -> np.ndarray:
    """Per-path coupling gains applied to a fading channel: B ∘ H.

    For a pure line-of-sight channel (all-ones H) this is the same as
    applying B to the transmit vector.
    """
    return np.asarray(H) * np.asarray(B)


def interferer_symbols(n_interferers: int, shape, rng) -> np.ndarray:
    """Independent dual-polarized QPSK streams at P/2 per polarization."""
    rng = _rng(rng)
    bits = rng.integers(0, 2, size=(n_interferers,) + tuple(shape) + (2, 2))
    sym = ((1 - 2 * bits[..., 1]) + 1j * (1 - 2 * bits[..., 0])) / np.sqrt(2)
    return sym / np.sqrt(2)


def add_interference(y, symbols, channels, coupling: BeamCoupling, enabled=None) -> np.ndarray:
    """Superimpose the coupled, faded interfering beams on ``y``.

    ``symbols`` has shape (6, ..., 2), ``channels`` (6, ..., 2, 2); ``enabled``
    is an optional boolean mask over the six interferers.
    """
    y = np.array(y, dtype=complex, copy=True)
    amp = coupling.amplitudes
    for k in range(N_BEAMS - 1):
        if enabled is not None and not enabled[k]:
            continue
        G = couple_channel(channels[k], amp[k + 1])
        y += (G @ symbols[k][..., None])[..., 0]
    return y


def interference_covariance(channels, coupling: BeamCoupling, pol_power: float = 0.5, enabled=None):
    """Instantaneous interference covariance Σ G_i diag(p) G_iᴴ, shape (..., 2, 2)."""
    amp = coupling.amplitudes
    R = 0.0
    for k in range(N_BEAMS - 1):
        if enabled is not None and not enabled[k]:
            continue
        G = couple_channel(channels[k], amp[k + 1])
        R = R + pol_power * G @ np.conj(np.swapaxes(G, -1, -2))
    return R


def interference_power(coupling: BeamCoupling, pol_power: float = 0.5, enabled=None) -> np.ndarray:
    """Expected interference power per receive polarization (unit-power fading)."""
    amp = coupling.amplitudes[1:]
    mask = np.ones(N_BEAMS - 1, bool) if enabled is None else np.asarray(enabled, bool)
    return pol_power * np.sum(np.abs(amp[mask]) ** 2, axis=(0, 2))


def add_awgn(y, n0: float, seed=None) -> np.ndarray:
    """Add circular complex Gaussian noise of variance ``n0`` per entry."""
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    y = np.asarray(y, dtype=complex)
    if n0 == 0:
        return y.copy()
    rng = _rng(seed)
    w = rng.standard_normal(y.shape + (2,)) * np.sqrt(n0 / 2)
    return y + w[..., 0] + 1j * w[..., 1]


def xpd_db(copolar, crosspolar) -> float:
    """Cross-polar discrimination 20·log10(|y_c| / |y_(1-c)|)."""
    return float(20 * np.log10(np.abs(copolar) / np.abs(crosspolar)))


def xpd_matrix(xpd: float) -> np.ndarray:
    """Coupling amplitudes with unit copolar gain and the given XPD."""
    a = 10.0 ** (-xpd / 20.0)
    return np.array([[1.0, a], [a, 1.0]])


def set_xpd(H, xpd: float) -> np.ndarray:
    """Scale cross-polar coefficients of unit-power channels to the target XPD."""
    if not np.isfinite(xpd):
        raise ValueError("xpd must be finite")
    return couple_channel(H, xpd_matrix(xpd))


def perturb_csi(H, xi_power: float, seed=None, mean_power=None) -> np.ndarray:
    """Channel estimate h̄ = h + e with E|e|² = xi_power · E|h|² per coefficient.

    ``mean_power`` (broadcastable to (2, 2)) gives E|h_ij|²; by default it is
    estimated from ``H`` over all leading axes.
    """
    if xi_power < 0:
        raise ValueError("xi_power must be >= 0")
    H = np.asarray(H, dtype=complex)
    if xi_power == 0:
        return H.copy()
    if mean_power is None:
        mean_power = np.mean(np.abs(H.reshape(-1, 2, 2)) ** 2, axis=0)
    rng = _rng(seed)
    w = rng.standard_normal(H.shape + (2,))
    e = (w[..., 0] + 1j * w[..., 1]) * np.sqrt(xi_power * np.asarray(mean_power) / 2)
    return H + e


@dataclass(frozen=True)
class LinkBudget:
    """Absolute link budget; sweeps use the Eb/N0 it implies rather than raw powers."""

    path_loss_db: float = 187.05
    tx_power: float = 1.0
    g_over_t_db: float = -12.5
    bandwidth_hz: float = 200e3
    eirp_dbw: float = 0.0

    def cn0_dbhz(self) -> float:
        return self.eirp_dbw - self.path_loss_db + self.g_over_t_db - BOLTZMANN_DBW

    def ebn0_db(self, bitrate_bps: float) -> float:
        return self.cn0_dbhz() - 10 * np.log10(bitrate_bps)

    def eirp_for_ebn0(self, ebn0_db: float, bitrate_bps: float) -> float:
        """EIRP (dBW) needed to reach ``ebn0_db`` at ``bitrate_bps``."""
        return ebn0_db + 10 * np.log10(bitrate_bps) + self.path_loss_db - self.g_over_t_db + BOLTZMANN_DBW
