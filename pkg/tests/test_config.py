import pytest

from cfrelay.config import (ConfigError, SystemConfig, dump_config, load_config,
                            parse_overrides)


def test_defaults_are_table_one():
    cfg = SystemConfig()
    assert (cfg.num_aps, cfg.antennas_per_ap, cfg.num_pairs) == (200, 3, 5)
    assert cfg.coherence_symbols == 200 and cfg.pilot_symbols == 10
    assert cfg.bandwidth == 20e6 and cfg.noise_figure_db == 9.0 and cfg.noise_temp == 290.0
    assert cfg.pilot_power_dbm == 20.0 and cfg.uplink_power_dbm == 20.0


def test_prelog():
    assert SystemConfig().prelog == pytest.approx(190 / 400)


@pytest.mark.parametrize("changes", [
    {"pilot_symbols": 8},  # < 2W
    {"pilot_symbols": 200},  # >= tau_c
    {"num_aps": 0},
    {"antennas_per_ap": 0},
    {"area_side": 0.0},
    {"num_realizations": 1},
])
def test_invalid_configs_rejected(changes):
    with pytest.raises(ConfigError):
        SystemConfig(**changes)


def test_overrides_coerce_types():
    cfg = parse_overrides(["num_aps=50", "uplink_power_dbm=13.5", "relay_power_dbm=none"],
                          SystemConfig())
    assert cfg.num_aps == 50 and isinstance(cfg.num_aps, int)
    assert cfg.uplink_power_dbm == 13.5
    assert cfg.relay_power_dbm is None


@pytest.mark.parametrize("item", ["num_aps", "unknown=3", "num_aps=2.5", "num_aps=abc",
                                  "carrier_freq=inf", "num_aps=none"])
def test_bad_overrides(item):
    with pytest.raises(ConfigError):
        parse_overrides([item], SystemConfig())


def test_load_config_round_trip(tmp_path):
    cfg = SystemConfig(num_aps=33, relay_power_dbm=27.0, rng_seed=5)
    path = tmp_path / "c.toml"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("")
    assert load_config(path) == SystemConfig()


def test_malformed_file_reports_line(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("num_aps = 10\nnum_pairs = = 3\n")
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)
