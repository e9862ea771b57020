"""Monte Carlo engine: per-point simulation, sweeps, throughput and CSV output.

Noise level
    On an ``ebn0`` axis ``N0 = 1 / (k · R_c · 10^(Eb/N0 / 10))`` where k is
    the number of information-carrying bits per channel use (b+1 for PMod,
    b for the single-polarization reference and Alamouti, 2b for VBLAST)
    and R_c the code rate (1 when uncoded).  Transmit power is 1 per
    channel use, so Es/N0 = 1/N0.  ``xpd`` and ``csi_error`` axes hold
    ``N0 = 10^(-snr_db / 10)`` fixed.

Seeding
    Point i uses ``SeedSequence(seed, spawn_key=(i,))``; batch j of that
    point draws from ``SeedSequence(point_seed, spawn_key=(j,))``.  Batches
    are merged strictly in index order, so results do not depend on the
    number of worker threads.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import channel as ch
from . import fec
from .baselines import SchemeKind
from .config import ScenarioConfig
from .pmod import demodulate, hard_bits, mmse_filter, pmod_map

CSV_COLUMNS = [
    "axis", "ber", "ber_ci95", "bler", "bler_ci95", "throughput_kbps",
    "n_bits", "n_blocks", "n_errors", "seed",
]
CSV_INTERFERENCE_COLUMNS = ["ebn0_db", "sinr_db"]


@dataclass
class MetricRecord:
    axis_value: float
    ber: float
    ber_ci95: float
    bler: float
    bler_ci95: float
    throughput_kbps: float
    n_bits: int
    n_blocks: int
    n_errors: int
    n_block_errors: int
    seed: int
    ebn0_db: float = float("nan")
    sinr_db: float = float("nan")
    c_errors: int = 0
    n_c: int = 0
    ber_lo: float = 0.0
    ber_hi: float = 1.0
    bler_lo: float = 0.0
    bler_hi: float = 1.0

    @property
    def c_ber(self) -> float:
        return self.c_errors / self.n_c if self.n_c else float("nan")

    @property
    def ber_estimate(self) -> fec.RateEstimate:
        return fec.RateEstimate(self.ber, self.ber_lo, self.ber_hi, self.n_errors, self.n_bits)

    @property
    def bler_estimate(self) -> fec.RateEstimate:
        return fec.RateEstimate(self.bler, self.bler_lo, self.bler_hi, self.n_block_errors, self.n_blocks)


def throughput_kbps(bitrate_kbps: float, bler: float, gain: float) -> float:
    """Average rate of successfully delivered information, R · (1 − BLER) · G."""
    return bitrate_kbps * (1.0 - bler) * gain


def point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def resolve_threads(threads: int | None = None) -> int:
    env = os.environ.get("POLMOD_THREADS")
    if env:
        try:
            threads = int(env)
        except ValueError:
            raise ValueError(f"POLMOD_THREADS must be an integer, got {env!r}") from None
    threads = 1 if threads is None else int(threads)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


# -- per-point set-up ---------------------------------------------------------------

@dataclass
class _Point:
    cfg: ScenarioConfig
    kind: SchemeKind
    n0: float
    ebn0_db: float
    xi: float
    link: np.ndarray          # amplitude coupling of the data beam, (2, 2)
    coupling: ch.BeamCoupling
    enabled: np.ndarray       # which of the six interferers are active
    info_bits: int
    coded_bits: int
    group: int                # bits per transmit group
    n_groups: int
    n_uses: int               # channel uses per block
    code: fec.CodeConfig | None = None
    extra: dict = field(default_factory=dict)


def _group_bits(kind: SchemeKind, b: int) -> int:
    return {SchemeKind.PMOD: b + 1, SchemeKind.REFERENCE: b, SchemeKind.VBLAST: 2 * b, SchemeKind.OSTBC: 2 * b}[kind]


def prepare_point(cfg: ScenarioConfig, axis_value: float) -> _Point:
    kind = cfg.kind
    const = cfg.const
    b = const.bits_per_symbol
    code = cfg.code if cfg.coded else None
    rate = code.rate if code else 1.0
    per_use = bl.bits_per_use(kind, const) * rate

    xpd, xi = cfg.xpd_db, cfg.csi_error
    axis = cfg.sweep.kind
    if axis == "ebn0":
        ebn0_db = float(axis_value)
        n0 = 1.0 / (per_use * 10 ** (ebn0_db / 10))
    else:
        n0 = 10 ** (-cfg.snr_db / 10)
        ebn0_db = cfg.snr_db - 10 * np.log10(per_use)
        if axis == "xpd":
            xpd = float(axis_value)
        else:
            xi = float(axis_value)
    if xi < 0:
        raise ValueError("csi error power must be >= 0")

    table = ch.load_coupling_table(cfg.coupling_table)
    coupling = ch.BeamCoupling(table, normalize=True, signed=cfg.coupling_signed)
    link = ch.xpd_matrix(xpd) if xpd is not None else coupling.matrix(0)
    enabled = np.zeros(ch.N_BEAMS - 1, bool)
    if cfg.interference:
        enabled[[i - 1 for i in cfg.interferers]] = True

    info = code.block_bits if code else cfg.uncoded_block_bits
    coded = code.coded_bits if code else info
    g = _group_bits(kind, b)
    n_groups = -(-coded // g)
    n_uses = 2 * n_groups if kind is SchemeKind.OSTBC else n_groups
    return _Point(cfg, kind, n0, ebn0_db, xi, link, coupling, enabled, info, coded, g, n_groups, n_uses, code)


# -- one batch of blocks -------------------------------------------------------------

def _channels(cfg: ScenarioConfig, n_blocks: int, n_uses: int, rng) -> np.ndarray:
    if cfg.iid_rayleigh:
        w = rng.standard_normal((n_blocks, n_uses, 2, 2, 2)) / np.sqrt(2)
        return w[..., 0] + 1j * w[..., 1]
    return ch.gen_fading_batch(cfg.fading, n_blocks, n_uses, rng)


def _tx_power(kind: SchemeKind) -> float:
    """Power per active transmit branch."""
    return 0.5 if kind in (SchemeKind.VBLAST, SchemeKind.OSTBC) else 1.0


def _transmit(p: _Point, groups: np.ndarray) -> np.ndarray:
    """Transmit vectors per channel use, shape (B, n_uses, 2)."""
    const = p.cfg.const
    B = groups.shape[0]
    if p.kind is SchemeKind.PMOD:
        return pmod_map(groups, const)
    if p.kind is SchemeKind.REFERENCE:
        return bl.siso_tx(groups, const)
    if p.kind is SchemeKind.VBLAST:
        return bl.vblast_tx(groups, const)
    return bl.ostbc_tx(groups, const).reshape(B, p.n_uses, 2)


def _receive(p: _Point, y, H_hat, n0_eff, n0_pol):
    """Soft bits (B, n_groups·group) and raw hard bits, plus PMod c decisions."""
    cfg, const = p.cfg, p.cfg.const
    B = y.shape[0]
    if p.kind is SchemeKind.PMOD:
        res = demodulate(cfg.demod, y.reshape(-1, 2), H_hat.reshape(-1, 2, 2), const,
                         n0_eff.reshape(-1), max_log=cfg.max_log)
        llr = res.llr.reshape(B, -1)
        hard = hard_bits(res, const).reshape(B, -1)
        ill = res.diagnostics.get("ill")
        ill = np.zeros(B, bool) if ill is None else ill.reshape(B, -1).any(axis=1)
        return llr, hard, np.asarray(res.c_hat).reshape(B, -1), ill
    if p.kind is SchemeKind.REFERENCE:
        llr, hard = bl.siso_rx(y.reshape(-1, 2), H_hat.reshape(-1, 2, 2), n0_pol.reshape(-1), const,
                               max_log=cfg.max_log)
    elif p.kind is SchemeKind.VBLAST:
        llr, hard = bl.vblast_rx(y.reshape(-1, 2), H_hat.reshape(-1, 2, 2), n0_eff.reshape(-1), const,
                                 max_log=cfg.max_log)
    else:
        Y = y.reshape(-1, 2, 2)
        Hp = H_hat[:, 0::2].reshape(-1, 2, 2)
        n0p = n0_eff[:, 0::2].reshape(-1)
        llr, hard = bl.ostbc_rx(Y, Hp, n0p, const, max_log=cfg.max_log)
    return llr.reshape(B, -1), hard.reshape(B, -1), None, np.zeros(B, bool)


def simulate_batch(p: _Point, n_blocks: int, rng: np.random.Generator) -> dict:
    """Simulate ``n_blocks`` blocks and return integer/float counters."""
    cfg = p.cfg
    B = n_blocks
    info = rng.integers(0, 2, size=(B, p.info_bits), dtype=np.uint8)
    coded = fec.encode_batch(info, p.code) if p.code else info
    pad = p.n_groups * p.group - p.coded_bits
    if pad:
        coded = np.concatenate([coded, rng.integers(0, 2, size=(B, pad), dtype=np.uint8)], axis=1)
    groups = coded.reshape(B, p.n_groups, p.group)
    x = _transmit(p, groups)

    H = _channels(cfg, B, p.n_uses, rng)
    if p.kind is SchemeKind.OSTBC:
        # Alamouti needs the channel constant over each slot pair
        H = np.repeat(H[:, 0::2], 2, axis=1)
    H = ch.couple_channel(H, p.link)
    y_sig = (H @ x[..., None])[..., 0]

    sig_pow = float(np.sum(np.abs(y_sig) ** 2))
    int_pow = 0.0
    Rint = None
    y = y_sig
    if p.enabled.any():
        n_int = ch.N_BEAMS - 1
        Hi = _channels(cfg, n_int * B, p.n_uses, rng).reshape(n_int, B, p.n_uses, 2, 2)
        sym = ch.interferer_symbols(n_int, (B, p.n_uses), rng)
        y = ch.add_interference(y_sig, sym, Hi, p.coupling, enabled=p.enabled)
        int_pow = float(np.sum(np.abs(y - y_sig) ** 2))
        Rint = ch.interference_covariance(Hi, p.coupling, enabled=p.enabled)
    y = ch.add_awgn(y, p.n0, rng)

    H_hat = H
    if p.xi > 0:
        H_hat = ch.perturb_csi(H, p.xi, rng, mean_power=np.abs(p.link) ** 2)

    n0_rx = p.n0
    if p.xi > 0 and cfg.csi_noise:
        # estimation error seen as extra Gaussian noise of power ξ·E|h|² per receive branch
        n0_rx = p.n0 + p.xi * float(np.max(np.sum(np.abs(p.link) ** 2, axis=1))) * _tx_power(p.kind)
    n0_eff = np.full((B, p.n_uses), n0_rx)
    n0_pol = n0_eff
    if Rint is not None:
        if p.kind is SchemeKind.PMOD and cfg.mmse:
            W = mmse_filter(H_hat, Rint, n0_rx)
            Cn = Rint + n0_rx * np.eye(2)
            y = (W @ y[..., None])[..., 0]
            n0_eff = np.real(np.trace(W @ Cn @ np.conj(np.swapaxes(W, -1, -2)), axis1=-2, axis2=-1)) / 2
            H_hat = W @ H_hat
        else:
            n0_pol = n0_rx + np.real(Rint[..., 0, 0])
            n0_eff = n0_rx + np.real(np.trace(Rint, axis1=-2, axis2=-1)) / 2

    llr, hard, c_hat, ill = _receive(p, y, H_hat, n0_eff, n0_pol)
    out = {"c_errors": 0, "n_c": 0}
    if c_hat is not None:
        out["c_errors"] = int(np.sum(c_hat != groups[..., 0]))
        out["n_c"] = int(c_hat.size)

    if p.code:
        dec, crc_fail = fec.decode_batch(llr[:, : p.coded_bits], p.code)
        bit_err = np.sum(dec != info, axis=1)
        blk_err = (bit_err > 0) | crc_fail | ill
    else:
        bit_err = np.sum(hard[:, : p.info_bits] != info, axis=1)
        blk_err = (bit_err > 0) | ill

    out.update(
        n_blocks=B,
        n_bits=B * p.info_bits,
        bit_errors=int(bit_err.sum()),
        block_errors=int(blk_err.sum()),
        sig_pow=sig_pow,
        int_pow=int_pow,
        noise_pow=2.0 * p.n0 * B * p.n_uses,
    )
    return out


# -- points and sweeps ----------------------------------------------------------------

def _batch_sizes(cfg: ScenarioConfig):
    done = 0
    while done < cfg.max_blocks:
        n = min(cfg.batch_blocks, cfg.max_blocks - done)
        yield n
        done += n


def _stop(cfg: ScenarioConfig, acc: dict) -> bool:
    if acc["n_blocks"] >= cfg.max_blocks:
        return True
    return acc["block_errors"] >= cfg.min_block_errors and acc["bit_errors"] >= cfg.min_bit_errors


def run_point(cfg: ScenarioConfig, axis_value: float, seed: int, threads: int | None = 1) -> MetricRecord:
    """Simulate one sweep point until the stop rule triggers."""
    p = prepare_point(cfg, axis_value)
    threads = max(1, int(threads or 1))
    acc = dict(n_blocks=0, n_bits=0, bit_errors=0, block_errors=0, c_errors=0, n_c=0,
               sig_pow=0.0, int_pow=0.0, noise_pow=0.0)
    sizes = list(_batch_sizes(cfg))

    def job(j):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))
        return simulate_batch(p, sizes[j], rng)

    def merge(res):
        for k in acc:
            acc[k] += res[k]

    if threads == 1:
        for j in range(len(sizes)):
            merge(job(j))
            if _stop(cfg, acc):
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            j = 0
            pending = {}
            while j < len(sizes):
                for k in range(j, min(j + threads, len(sizes))):
                    if k not in pending:
                        pending[k] = pool.submit(job, k)
                merge(pending.pop(j).result())
                j += 1
                if _stop(cfg, acc):
                    break
            for f in pending.values():
                f.cancel()
    return _record(cfg, p, axis_value, seed, acc)


def _record(cfg, p: _Point, axis_value, seed, acc) -> MetricRecord:
    ber = fec.wilson(acc["bit_errors"], acc["n_bits"])
    blr = fec.wilson(acc["block_errors"], acc["n_blocks"])
    gain = bl.scheme_gain(p.kind, cfg.const)
    sinr = float("nan")
    if cfg.interference:
        sinr = 10 * np.log10(acc["sig_pow"] / (acc["int_pow"] + acc["noise_pow"]))
    return MetricRecord(
        axis_value=float(axis_value),
        ber=ber.value, ber_ci95=ber.ci95, bler=blr.value, bler_ci95=blr.ci95,
        throughput_kbps=throughput_kbps(cfg.bitrate_kbps, blr.value, gain),
        n_bits=acc["n_bits"], n_blocks=acc["n_blocks"], n_errors=acc["bit_errors"],
        n_block_errors=acc["block_errors"], seed=int(seed),
        ebn0_db=float(p.ebn0_db), sinr_db=float(sinr),
        c_errors=acc["c_errors"], n_c=acc["n_c"],
        ber_lo=ber.lo, ber_hi=ber.hi, bler_lo=blr.lo, bler_hi=blr.hi,
    )


def run_sweep(cfg: ScenarioConfig, threads: int | None = 1, progress=None) -> list[MetricRecord]:
    """One record per axis value, each with its own derived seed."""
    records = []
    for i, v in enumerate(cfg.sweep.values()):
        rec = run_point(cfg, float(v), point_seed(cfg.seed, i), threads=threads)
        if progress is not None:
            progress(rec)
        records.append(rec)
    return records


# -- CSV ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_columns(with_interference: bool) -> list[str]:
    return CSV_COLUMNS + (CSV_INTERFERENCE_COLUMNS if with_interference else [])


def format_csv(records, with_interference: bool = False) -> str:
    cols = csv_columns(with_interference)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        row = {
            "axis": r.axis_value, "ber": r.ber, "ber_ci95": r.ber_ci95, "bler": r.bler,
            "bler_ci95": r.bler_ci95, "throughput_kbps": r.throughput_kbps, "n_bits": r.n_bits,
            "n_blocks": r.n_blocks, "n_errors": r.n_errors, "seed": r.seed,
            "ebn0_db": r.ebn0_db, "sinr_db": r.sinr_db,
        }
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def emit_csv(records, path, with_interference: bool = False) -> Path:
    """Write records with the fixed column order; identical input gives identical bytes."""
    path = Path(path)
    path.write_bytes(format_csv(records, with_interference).encode())
    return path


_INT_COLUMNS = {"n_bits", "n_blocks", "n_errors", "seed"}


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return [{k: int(v) if k in _INT_COLUMNS else float(v) for k, v in row.items()}
                for row in csv.DictReader(f)]
