"""Reference schemes: single polarization, VBLAST and Alamouti across polarizations.

Each ``*_rx`` returns ``(llr, hard)`` with one row per transmitted bit group.
Total transmit power is 1 per channel use for every scheme.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .constellation import LLR_CLAMP, Constellation, hard_demap_index, modulate, soft_demap


class SchemeKind(str, Enum):
    REFERENCE = "reference"
    VBLAST = "vblast"
    OSTBC = "ostbc"
    PMOD = "pmod"


def bits_per_use(kind: SchemeKind | str, c: Constellation) -> int:
    """Uncoded information bits per channel use."""
    kind = SchemeKind(kind)
    b = c.bits_per_symbol
    return {SchemeKind.REFERENCE: b, SchemeKind.OSTBC: b, SchemeKind.VBLAST: 2 * b, SchemeKind.PMOD: b + 1}[kind]


def scheme_gain(kind: SchemeKind | str, c: Constellation) -> float:
    """Throughput multiplier relative to the single-polarization link."""
    kind = SchemeKind(kind)
    if kind is SchemeKind.PMOD:
        return 1.0 + 1.0 / c.bits_per_symbol
    if kind is SchemeKind.VBLAST:
        return 2.0
    return 1.0


# -- single polarization ------------------------------------------------------

def siso_tx(bits, c: Constellation) -> np.ndarray:
    s = np.atleast_1d(modulate(bits, c))
    x = np.zeros(s.shape + (2,), dtype=complex)
    x[..., 0] = s
    return x


def siso_rx(y, H, n0, c: Constellation, max_log: bool = False):
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    h = np.asarray(H, dtype=complex).reshape(-1, 2, 2)[:, 0, 0]
    llr = soft_demap(y[:, 0], h, n0, c, max_log=max_log)
    hard = c.labels[hard_demap_index(y[:, 0], c, h)]
    return llr, hard


# -- VBLAST ---------------------------------------------------------------------

def vblast_tx(bits, c: Constellation) -> np.ndarray:
    """Two independent streams, one per polarization, each at half power."""
    bits = np.asarray(bits)
    b = c.bits_per_symbol
    if bits.shape[-1] != 2 * b:
        raise ValueError(f"expected groups of {2 * b} bits")
    s1 = np.asarray(modulate(bits[..., :b], c))
    s2 = np.asarray(modulate(bits[..., b:], c))
    return np.stack([s1, s2], axis=-1) / np.sqrt(2)


def vblast_candidates(c: Constellation) -> np.ndarray:
    """All (s1, s2) pairs at half power, s1-major order, shape (M², 2)."""
    p = c.points
    return np.stack(np.meshgrid(p, p, indexing="ij"), axis=-1).reshape(-1, 2) / np.sqrt(2)


def vblast_rx(y, H, n0, c: Constellation, max_log: bool = False):
    """Joint ML detection over S×S with exact per-bit LLRs."""
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    H = np.asarray(H, dtype=complex).reshape(-1, 2, 2)
    X = vblast_candidates(c)
    hx = np.einsum("nij,kj->nik", H, X)
    dist = np.sum(np.abs(y[:, :, None] - hx) ** 2, axis=1)
    n0 = np.broadcast_to(np.asarray(n0, dtype=float), (len(y),))
    met = -dist / n0[:, None]
    m, b = c.size, c.bits_per_symbol
    lab = np.concatenate([np.repeat(c.labels, m, axis=0), np.tile(c.labels, (m, 1))], axis=1)
    llr = np.empty((len(y), 2 * b))
    for k in range(2 * b):
        zero = lab[:, k] == 0
        if max_log:
            llr[:, k] = met[:, zero].max(axis=1) - met[:, ~zero].max(axis=1)
        else:
            llr[:, k] = logsumexp(met[:, zero], axis=1) - logsumexp(met[:, ~zero], axis=1)
    hard = lab[np.argmin(dist, axis=1)]
    return np.clip(llr, -LLR_CLAMP, LLR_CLAMP), hard


# -- Alamouti OSTBC -------------------------------------------------------------

def ostbc_tx(bits, c: Constellation) -> np.ndarray:
    """Alamouti blocks, shape (..., 2 slots, 2 polarizations).

    Slot 1 sends [s1, s2], slot 2 sends [-s2*, s1*], each entry at half power.
    """
    bits = np.asarray(bits)
    b = c.bits_per_symbol
    if bits.shape[-1] != 2 * b:
        raise ValueError(f"expected groups of {2 * b} bits")
    s1 = np.asarray(modulate(bits[..., :b], c))
    s2 = np.asarray(modulate(bits[..., b:], c))
    slot1 = np.stack([s1, s2], axis=-1)
    slot2 = np.stack([-np.conj(s2), np.conj(s1)], axis=-1)
    return np.stack([slot1, slot2], axis=-2) / np.sqrt(2)


def ostbc_combine(Y, H):
    """Orthogonal combiner.

    Returns ``(r, gain)`` with ``r[..., k] = gain * s_k + CN(0, n0)`` for both
    symbols of every block; ``gain = sqrt((‖h1‖² + ‖h2‖²) / 2)``.
    """
    Y = np.asarray(Y, dtype=complex).reshape(-1, 2, 2)
    H = np.asarray(H, dtype=complex).reshape(-1, 2, 2)
    h1, h2 = H[:, :, 0], H[:, :, 1]
    y1, y2 = Y[:, 0, :], Y[:, 1, :]
    e = np.sum(np.abs(H) ** 2, axis=(1, 2))
    s1 = np.sum(np.conj(h1) * y1, axis=1) + np.sum(h2 * np.conj(y2), axis=1)
    s2 = np.sum(np.conj(h2) * y1, axis=1) - np.sum(h1 * np.conj(y2), axis=1)
    norm = np.sqrt(np.where(e > 0, e, 1.0))
    r = np.stack([s1, s2], axis=1) / norm[:, None]
    gain = np.sqrt(e / 2)
    return r, gain


def ostbc_rx(Y, H, n0, c: Constellation, max_log: bool = False):
    """Combine each Alamouti block and soft-demap both symbols.

    ``H`` is the channel held over the block, shape (n_blocks, 2, 2).
    """
    r, gain = ostbc_combine(Y, H)
    g = np.repeat(gain[:, None], 2, axis=1)
    n0 = np.broadcast_to(np.asarray(n0, dtype=float), (len(r),))[:, None]
    n0 = np.broadcast_to(n0, r.shape)
    llr = soft_demap(r, g, n0, c, max_log=max_log).reshape(len(r), -1)
    hard = c.labels[hard_demap_index(r, c, g)].reshape(len(r), -1)
    return llr, hard
