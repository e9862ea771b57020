"""Gray-labelled constellations, bit mapping and (soft) demapping.

Points are stored indexed by their label read as an unsigned integer with
the first bit as MSB, so ``points[i]`` carries label ``bits(i)``.

Label tables (unit average energy)::

    BPSK   0 -> +1          1 -> -1
    QPSK   00 -> (+1+j)/√2  01 -> (-1+j)/√2  11 -> (-1-j)/√2  10 -> (+1-j)/√2
    QAM16  (b0 b1 | b2 b3) -> (I | Q), per axis 00->+1 01->+3 10->-1 11->-3, /√10

LLR convention: ``llr = log P(bit=0 | r) - log P(bit=1 | r)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

LLR_CLAMP = 50.0

_PAM4 = {0b00: 1.0, 0b01: 3.0, 0b10: -1.0, 0b11: -3.0}


@dataclass(frozen=True)
class Constellation:
    name: str
    points: np.ndarray = field(repr=False)
    bits_per_symbol: int

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> np.ndarray:
        """(M, b) array of label bits, MSB first."""
        return _label_table(self.size, self.bits_per_symbol)


@lru_cache(maxsize=None)
def _label_table(m: int, b: int) -> np.ndarray:
    idx = np.arange(m)
    labels = (idx[:, None] >> np.arange(b - 1, -1, -1)[None, :]) & 1
    labels = labels.astype(np.uint8)
    labels.setflags(write=False)
    return labels


def _bpsk() -> np.ndarray:
    return np.array([1.0 + 0j, -1.0 + 0j])


def _qpsk() -> np.ndarray:
    pts = np.empty(4, dtype=complex)
    for i in range(4):
        b0, b1 = i >> 1, i & 1
        pts[i] = complex(1 - 2 * b1, 1 - 2 * b0)
    return pts / np.sqrt(2)


def _qam16() -> np.ndarray:
    pts = np.empty(16, dtype=complex)
    for i in range(16):
        pts[i] = complex(_PAM4[i >> 2], _PAM4[i & 0b11])
    return pts / np.sqrt(10)


_BUILDERS = {"bpsk": (_bpsk, 1), "qpsk": (_qpsk, 2), "qam16": (_qam16, 4)}


@lru_cache(maxsize=None)
def get_constellation(name: str) -> Constellation:
    """Look up a constellation by its config name ("bpsk", "qpsk", "qam16")."""
    key = name.lower()
    if key not in _BUILDERS:
        raise ValueError(f"unknown constellation {name!r}; expected one of {sorted(_BUILDERS)}")
    build, b = _BUILDERS[key]
    pts = build()
    pts.setflags(write=False)
    return Constellation(key, pts, b)


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    b = bits.shape[-1]
    weights = 1 << np.arange(b - 1, -1, -1)
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def modulate(bits, c: Constellation):
    """Map groups of ``c.bits_per_symbol`` bits to constellation points.

    ``bits`` may be a flat bit-list of length b (returns a complex scalar) or
    an array of shape (..., b).
    """
    bits = np.asarray(bits)
    if bits.ndim == 0 or bits.shape[-1] != c.bits_per_symbol:
        raise ValueError(
            f"expected groups of {c.bits_per_symbol} bits for {c.name}, got shape {bits.shape}"
        )
    out = c.points[bits_to_index(bits)]
    return complex(out) if bits.ndim == 1 else out


def hard_demap_index(y, c: Constellation, gain=1.0) -> np.ndarray:
    """Index of the nearest point to ``y`` in the model ``y = gain * s``."""
    y = np.asarray(y)
    gain = np.asarray(gain)
    d = np.abs(y[..., None] - gain[..., None] * c.points) ** 2
    return np.argmin(d, axis=-1)


def hard_demap(y, c: Constellation) -> np.ndarray:
    """Label bits of the minimum-distance point (ties go to the lower index)."""
    return c.labels[hard_demap_index(y, c)]


def soft_demap(r, gain, n0, c: Constellation, max_log: bool = False) -> np.ndarray:
    """Per-bit LLRs for ``r = gain * s + CN(0, n0)``.

    ``gain`` may be complex; ``n0`` may be a scalar or broadcast against ``r``.
    Returns an array of shape ``r.shape + (b,)`` clamped to ``±LLR_CLAMP``.
    """
    r = np.asarray(r, dtype=complex)
    gain = np.asarray(gain)
    n0 = np.asarray(n0, dtype=float)
    if np.any(n0 <= 0):
        raise ValueError("n0 must be positive")
    metric = -np.abs(r[..., None] - gain[..., None] * c.points) ** 2 / n0[..., None]
    labels = c.labels
    llr = np.empty(r.shape + (c.bits_per_symbol,))
    for k in range(c.bits_per_symbol):
        zero = labels[:, k] == 0
        m0, m1 = metric[..., zero], metric[..., ~zero]
        if max_log:
            llr[..., k] = m0.max(axis=-1) - m1.max(axis=-1)
        else:
            llr[..., k] = logsumexp(m0, axis=-1) - logsumexp(m1, axis=-1)
    return np.clip(llr, -LLR_CLAMP, LLR_CLAMP)
