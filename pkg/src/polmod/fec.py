"""Stand-in channel code: CRC-16 + punctured K=7 convolutional code, soft Viterbi.

The mother code is the rate-1/2 (133, 171) octal code.  The default
puncturing pattern keeps 8 of every 10 mother bits for rate 5/8 = 0.625
(free distance 6).  Blocks are zero-tail terminated and not interleaved.
"""

from __future__ import annotations

import binascii
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binomtest

from . import kernels

# rows: generator, columns: puncturing period
PUNCTURE_5_8 = ((1, 1, 1, 1, 1), (0, 0, 1, 1, 1))
PUNCTURE_NONE = ((1,), (1,))

PROFILES = {
    "default": dict(block_bits=2048),
    # 80 ms frame at 33.6 ksps, QPSK, rate 0.625 -> 3360 information bits
    "bgan-like": dict(block_bits=3360),
}


@dataclass(frozen=True)
class CodeConfig:
    block_bits: int = 2048
    constraint_length: int = 7
    generators: tuple = (0o133, 0o171)
    puncture: tuple = PUNCTURE_5_8
    crc_bits: int = 16

    @classmethod
    def profile(cls, name: str, **kw) -> "CodeConfig":
        if name not in PROFILES:
            raise ValueError(f"unknown code profile {name!r}; expected one of {sorted(PROFILES)}")
        return cls(**{**PROFILES[name], **kw})

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_steps(self) -> int:
        return self.block_bits + self.crc_bits + self.memory

    @property
    def keep_mask(self) -> np.ndarray:
        """Boolean mask over the interleaved mother-code bits of one block."""
        return _keep_mask(self.puncture, self.n_steps)

    @property
    def coded_bits(self) -> int:
        return int(self.keep_mask.sum())

    @property
    def rate(self) -> float:
        return self.block_bits / self.coded_bits

    @property
    def pattern_rate(self) -> float:
        p = np.asarray(self.puncture)
        return p.shape[1] / p.sum()


@lru_cache(maxsize=32)
def _keep_mask(puncture, n_steps):
    p = np.asarray(puncture, dtype=bool)
    period = p.shape[1]
    cols = np.arange(n_steps) % period
    return p[:, cols].T.reshape(-1).copy()


@lru_cache(maxsize=8)
def branch_signs(generators, memory) -> np.ndarray:
    """(2^memory · 2, n_out) table of ±1 branch outputs indexed by (state << 1) | u."""
    n_states = 1 << memory
    table = np.empty((2 * n_states, len(generators)), dtype=np.int8)
    for s in range(n_states):
        for u in (0, 1):
            reg = (u << memory) | s
            for k, g in enumerate(generators):
                bit = bin(reg & g).count("1") & 1
                table[(s << 1) | u, k] = 1 - 2 * bit
    return table


def crc16(bits) -> np.ndarray:
    """CRC-16/CCITT (poly 0x1021, init 0xFFFF) of a bit array, as 16 bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    value = binascii.crc_hqx(np.packbits(bits).tobytes(), 0xFFFF)
    if bits.size % 8:
        # packbits pads with zeros; mix the true length in so padding is not ambiguous
        value = binascii.crc_hqx(bits.size.to_bytes(4, "big"), value)
    return ((value >> np.arange(15, -1, -1)) & 1).astype(np.uint8)


def conv_encode(u, cfg: CodeConfig) -> np.ndarray:
    """Unpunctured mother-code output, interleaved per step (g0, g1, ...)."""
    u = np.asarray(u, dtype=np.uint8)
    L = cfg.constraint_length
    outs = []
    for g in cfg.generators:
        taps = np.array([(g >> (L - 1 - d)) & 1 for d in range(L)], dtype=np.int64)
        outs.append(np.convolve(u.astype(np.int64), taps)[: len(u)] % 2)
    return np.stack(outs, axis=-1).reshape(-1).astype(np.uint8)


def encode(info_bits, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    """CRC-attach, terminate, encode and puncture one information block."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if info_bits.shape != (cfg.block_bits,):
        raise ValueError(f"expected {cfg.block_bits} information bits, got shape {info_bits.shape}")
    u = np.concatenate([info_bits, crc16(info_bits), np.zeros(cfg.memory, np.uint8)])
    return conv_encode(u, cfg)[cfg.keep_mask]


def encode_batch(info_bits, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    return np.stack([encode(b, cfg) for b in np.asarray(info_bits)])


def depuncture(llr, cfg: CodeConfig) -> np.ndarray:
    """Place received LLRs on the mother-code grid, zeros where punctured."""
    llr = np.asarray(llr, dtype=np.float64)
    lead = llr.shape[:-1]
    if llr.shape[-1] != cfg.coded_bits:
        raise ValueError(f"expected {cfg.coded_bits} LLRs per block, got {llr.shape[-1]}")
    full = np.zeros(lead + (cfg.keep_mask.size,))
    full[..., cfg.keep_mask] = llr
    return full.reshape(lead + (cfg.n_steps, len(cfg.generators)))


def decode_batch(llr, cfg: CodeConfig = CodeConfig(), backend=None):
    """Soft Viterbi decode of a batch of blocks.

    Returns ``(info_bits, crc_fail)`` with shapes (n, block_bits) and (n,).
    """
    llr = np.atleast_2d(llr)
    grid = np.ascontiguousarray(depuncture(llr, cfg))
    fn = backend or kernels.viterbi_batch
    u = fn(grid, branch_signs(tuple(cfg.generators), cfg.memory), cfg.memory)
    info = u[:, : cfg.block_bits]
    crc = u[:, cfg.block_bits : cfg.block_bits + cfg.crc_bits]
    fail = np.array([not np.array_equal(crc16(i), c) for i, c in zip(info, crc)])
    return info, fail


def decode(llr, cfg: CodeConfig = CodeConfig()):
    """Decode one block; returns ``(info_bits, block_error)`` where the flag is the CRC check."""
    info, fail = decode_batch(np.asarray(llr)[None, :], cfg)
    return info[0], bool(fail[0])


@dataclass(frozen=True)
class RateEstimate:
    value: float
    lo: float
    hi: float
    errors: int
    trials: int

    @property
    def ci95(self) -> float:
        return (self.hi - self.lo) / 2


def wilson(errors: int, trials: int) -> RateEstimate:
    """Error rate with its 95% Wilson score interval."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=0.95, method="wilson")
    return RateEstimate(errors / trials, float(ci.low), float(ci.high), int(errors), int(trials))


def bler(block_errors) -> RateEstimate:
    """Block error rate of a sequence of per-block error flags."""
    flags = np.asarray(block_errors, dtype=bool)
    if flags.size == 0:
        raise ValueError("bler needs at least one block")
    return wilson(int(flags.sum()), flags.size)
