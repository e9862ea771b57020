import pytest

from polmod.config import (
    ConfigError, ScenarioConfig, apply_overrides, bundled_config, bundled_configs,
    dump_config, load_config, parse_config,
)

EXPECTED = ["fig10", "fig11", "fig12", "fig13", "fig14", "fig2", "fig3", "fig4", "fig5", "fig9"]


def test_parse_basic_and_comments():
    cfg = parse_config("""
        # comment
        scenario.demod = ML   # trailing comment
        fading.k_factor = 4.5
        code.enabled = false
        coupling.interferers = 1, 3 5
        channel.xpd_db = 12
    """)
    assert cfg.demod == "ml"
    assert cfg.fading.k_factor == 4.5
    assert cfg.coded is False
    assert cfg.interferers == (1, 3, 5)
    assert cfg.xpd_db == 12.0


def test_defaults():
    cfg = ScenarioConfig()
    assert cfg.fading.k_factor == 10 and cfg.fading.rho == 0.5
    assert cfg.bitrate_kbps == 40.0
    assert cfg.code.block_bits == 2048


@pytest.mark.parametrize("text, msg", [
    ("scenario.bogus = 1", "unknown config key"),
    ("scenario.demod = mmse", "unknown demodulator"),
    ("scenario.scheme = siso", "unknown scheme"),
    ("code.enabled = maybe", "bad value"),
    ("sweep.step = 0", "sweep.step"),
    ("sweep.kind = snr", "unknown sweep kind"),
    ("coupling.interferers = 7", "1..6"),
    ("just a line", "expected key = value"),
    ("fading.rho = 1.5", "rho"),
])
def test_rejects_bad_input(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_overrides_accept_strings_and_mappings():
    cfg = ScenarioConfig()
    a = apply_overrides(cfg, ["sweep.start=4", "sweep.stop = 6"])
    b = cfg.with_overrides({"sweep.start": "4", "sweep.stop": "6"})
    assert a == b
    assert list(a.sweep.values()) == [4.0, 6.0]
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["nokeyvalue"])


def test_sweep_values_include_stop():
    cfg = parse_config("sweep.start = 0\nsweep.stop = 0.1\nsweep.step = 0.02")
    assert list(cfg.sweep.values()) == [0.0, 0.02, 0.04, 0.06, 0.08, 0.1]


def test_dump_round_trip():
    cfg = parse_config("scenario.demod = hd\nchannel.xpd_db = 7.25\ncoupling.interferers = 2,4\nfading.rho = 0.3")
    assert parse_config(dump_config(cfg)) == cfg
    assert parse_config(dump_config(ScenarioConfig())) == ScenarioConfig()


def test_bundled_configs_load():
    assert bundled_configs() == EXPECTED
    for name in EXPECTED:
        cfg = load_config(bundled_config(name))
        assert isinstance(cfg, ScenarioConfig)
    assert load_config("fig2") == load_config(bundled_config("fig2"))


def test_bundled_scenarios_match_their_axes():
    assert load_config("fig13").sweep.kind == "xpd"
    assert load_config("fig14").sweep.kind == "csi_error"
    for name in ("fig9", "fig10", "fig11", "fig12"):
        cfg = load_config(name)
        assert cfg.coded and cfg.interference
    for name in ("fig2", "fig3", "fig4", "fig5"):
        assert not load_config(name).coded


def test_missing_file_names_path(tmp_path):
    p = tmp_path / "nope.cfg"
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(p)
    with pytest.raises(ConfigError):
        bundled_config("fig99")
