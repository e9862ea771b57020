"""Scenario configuration: flat ``key = value`` files with dotted sections.

Example::

    # uncoded PMod-SD sweep
    scenario.scheme = pmod
    scenario.demod = sd
    scenario.constellation = qpsk
    fading.k_factor = 10
    sweep.kind = ebn0
    sweep.start = 0
    sweep.stop = 10
    sweep.step = 2

Unknown keys are rejected.  Values are parsed according to the field's type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .baselines import SchemeKind
from .channel import FadingParams
from .constellation import get_constellation
from .fec import PROFILES, CodeConfig
from .pmod import DEMODULATORS

SWEEP_KINDS = ("ebn0", "xpd", "csi_error")


class ConfigError(ValueError):
    """Invalid or unresolvable scenario configuration."""


@dataclass(frozen=True)
class SweepSpec:
    kind: str = "ebn0"
    start: float = 0.0
    stop: float = 10.0
    step: float = 2.0

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment description; defaults follow the maritime scenario."""

    scheme: str = "pmod"
    demod: str = "sd"
    constellation: str = "qpsk"
    max_log: bool = False
    fading: FadingParams = field(default_factory=FadingParams)
    # channel
    xpd_db: float | None = None
    csi_error: float = 0.0
    csi_noise: bool = False
    snr_db: float = 20.0
    ebn0_db: float = 6.0
    iid_rayleigh: bool = False
    # interference from the six adjacent beams
    interference: bool = False
    coupling_signed: bool = False
    coupling_table: str | None = None
    interferers: tuple = (1, 2, 3, 4, 5, 6)
    mmse: bool = True
    # coding
    coded: bool = True
    code_profile: str = "default"
    block_bits: int | None = None
    uncoded_block_bits: int = 96
    bitrate_kbps: float = 40.0
    # sweep and stop rule
    sweep: SweepSpec = field(default_factory=SweepSpec)
    min_block_errors: int = 100
    min_bit_errors: int = 0
    max_blocks: int = 1_000_000
    batch_blocks: int = 64
    seed: int = 1

    def __post_init__(self):
        validate(self)

    @property
    def kind(self) -> SchemeKind:
        return SchemeKind(self.scheme)

    @property
    def const(self):
        return get_constellation(self.constellation)

    @property
    def code(self) -> CodeConfig:
        kw = {} if self.block_bits is None else {"block_bits": self.block_bits}
        return CodeConfig.profile(self.code_profile, **kw)

    def with_overrides(self, overrides) -> "ScenarioConfig":
        return apply_overrides(self, overrides)


def validate(cfg: ScenarioConfig):
    try:
        SchemeKind(cfg.scheme)
    except ValueError:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}; expected one of {[k.value for k in SchemeKind]}")
    if cfg.demod not in DEMODULATORS:
        raise ConfigError(f"unknown demodulator {cfg.demod!r}; expected one of {DEMODULATORS}")
    try:
        get_constellation(cfg.constellation)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if cfg.code_profile not in PROFILES:
        raise ConfigError(f"unknown code profile {cfg.code_profile!r}")
    s = cfg.sweep
    if s.kind not in SWEEP_KINDS:
        raise ConfigError(f"unknown sweep kind {s.kind!r}; expected one of {SWEEP_KINDS}")
    if not s.step > 0:
        raise ConfigError("sweep.step must be > 0")
    if s.stop < s.start:
        raise ConfigError("sweep range is empty (stop < start)")
    if cfg.min_block_errors < 0 or cfg.max_blocks < 1 or cfg.batch_blocks < 1:
        raise ConfigError("stop rule needs min_block_errors >= 0, max_blocks >= 1, batch_blocks >= 1")
    if cfg.csi_error < 0:
        raise ConfigError("channel.csi_error must be >= 0")
    if any(not 1 <= i <= 6 for i in cfg.interferers):
        raise ConfigError("coupling.interferers must list beams in 1..6")
    if cfg.uncoded_block_bits < 1:
        raise ConfigError("code.uncoded_block_bits must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")


# dotted key -> (target, attribute).  Target None is the top level.
KEYS = {
    "scenario.scheme": (None, "scheme"),
    "scenario.demod": (None, "demod"),
    "scenario.constellation": (None, "constellation"),
    "scenario.max_log": (None, "max_log"),
    "scenario.seed": (None, "seed"),
    "scenario.bitrate_kbps": (None, "bitrate_kbps"),
    "fading.k_factor": ("fading", "k_factor"),
    "fading.rho": ("fading", "rho"),
    "fading.doppler_hz": ("fading", "doppler_hz"),
    "fading.symbol_rate_hz": ("fading", "symbol_rate_hz"),
    "fading.n_oscillators": ("fading", "n_oscillators"),
    "fading.iid_rayleigh": (None, "iid_rayleigh"),
    "channel.xpd_db": (None, "xpd_db"),
    "channel.csi_error": (None, "csi_error"),
    "receiver.csi_noise": (None, "csi_noise"),
    "channel.snr_db": (None, "snr_db"),
    "channel.ebn0_db": (None, "ebn0_db"),
    "coupling.enabled": (None, "interference"),
    "coupling.signed": (None, "coupling_signed"),
    "coupling.table": (None, "coupling_table"),
    "coupling.interferers": (None, "interferers"),
    "receiver.mmse": (None, "mmse"),
    "code.enabled": (None, "coded"),
    "code.profile": (None, "code_profile"),
    "code.block_bits": (None, "block_bits"),
    "code.uncoded_block_bits": (None, "uncoded_block_bits"),
    "sweep.kind": ("sweep", "kind"),
    "sweep.start": ("sweep", "start"),
    "sweep.stop": ("sweep", "stop"),
    "sweep.step": ("sweep", "step"),
    "stop.min_block_errors": (None, "min_block_errors"),
    "stop.min_bit_errors": (None, "min_bit_errors"),
    "stop.max_blocks": (None, "max_blocks"),
    "stop.batch_blocks": (None, "batch_blocks"),
}

_TYPES = {
    "scheme": str, "demod": str, "constellation": str, "code_profile": str, "kind": str,
    "max_log": bool, "iid_rayleigh": bool, "interference": bool, "coupling_signed": bool,
    "mmse": bool, "coded": bool, "csi_noise": bool,
    "seed": int, "n_oscillators": int, "block_bits": "optint", "uncoded_block_bits": int,
    "min_block_errors": int, "min_bit_errors": int, "max_blocks": int, "batch_blocks": int,
    "xpd_db": "optfloat", "coupling_table": "optstr", "interferers": "intlist",
}


def _parse_value(attr: str, text: str):
    kind = _TYPES.get(attr, float)
    t = text.strip()
    if kind is str:
        return t.lower()
    if kind == "optstr":
        return None if t.lower() in ("", "none", "default") else t
    if kind is bool:
        low = t.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is int:
        return int(float(t)) if "e" in t.lower() else int(t)
    if kind == "intlist":
        if t.lower() in ("", "none"):
            return ()
        return tuple(int(v) for v in t.replace(",", " ").split())
    if kind == "optint":
        return None if t.lower() in ("", "none", "default") else _parse_value("seed", t)
    if kind == "optfloat":
        return None if t.lower() in ("", "none", "default") else float(t)
    return float(t)


def apply_overrides(cfg: ScenarioConfig, items) -> ScenarioConfig:
    """Return ``cfg`` with ``items`` (mapping or ``key=value`` strings) applied."""
    if isinstance(items, dict):
        pairs = list(items.items())
    else:
        pairs = []
        for item in items:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            k, v = item.split("=", 1)
            pairs.append((k, v))
    top, sub = {}, {"fading": {}, "sweep": {}}
    for key, raw in pairs:
        key = key.strip().lower()
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        target, attr = KEYS[key]
        try:
            val = _parse_value(attr, raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        (top if target is None else sub[target])[attr] = val
    try:
        fading = replace(cfg.fading, **sub["fading"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return replace(cfg, fading=fading, sweep=replace(cfg.sweep, **sub["sweep"]), **top)


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse config text (comments start with ``#``)."""
    items = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {line!r}")
        items.append(line)
    return apply_overrides(base or ScenarioConfig(), items)


def bundled_configs() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files("polmod").joinpath("configs")
    return sorted(e.name[:-4] for e in root.iterdir() if e.name.endswith(".cfg"))


def bundled_config(name: str) -> Path:
    """Filesystem path of a shipped scenario file such as ``"fig2"``."""
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem not in bundled_configs():
        raise ConfigError(f"no bundled config named {name!r}; available: {bundled_configs()}")
    return Path(str(resources.files("polmod").joinpath("configs", stem + ".cfg")))


def load_config(path) -> ScenarioConfig:
    """Read a scenario file; a bare bundled name like ``fig2`` also works."""
    p = Path(path)
    if not p.exists() and p.parent == Path(".") and p.stem in bundled_configs():
        p = bundled_config(p.stem)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize every key so that ``parse_config(dump_config(c)) == c``."""
    lines = []
    for key, (target, attr) in KEYS.items():
        obj = cfg if target is None else getattr(cfg, target)
        v = getattr(obj, attr)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif v is None:
            s = "none"
        elif isinstance(v, tuple):
            s = ",".join(str(i) for i in v) or "none"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        lines.append(f"{key} = {s}")
    return "\n".join(lines) + "\n"


__all__ = [
    "ConfigError", "SweepSpec", "ScenarioConfig", "parse_config", "load_config",
    "apply_overrides", "dump_config", "bundled_config", "bundled_configs", "KEYS", "SWEEP_KINDS",
]
