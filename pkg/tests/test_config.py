import dataclasses
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from mirrorsim.config import (ConfigError, ConfigWarning, RunConfig, format_config, parse_config,
                              parse_dims, parse_duration)
from mirrorsim.radio import max_range

SCENARIO_BLOCK = """\
SIMULATION-TIME\t15M
TERRAIN-DIMENSIONS\t(1250, 1250)
NUMBER-OF-NODES\t121
NODE-PLACEMENT\tGRID
MOBILITY\tRANDOM-WAYPOINT
MOBILITY-WP-PAUSE\t30S
MOBILITY-WP-MIN-SPEED\t0
MOBILITY-WP-MAX-SPEED\t10
MOBILITY-POSITION-GRANULARITY\t0.5
PROMISCUOUS-MODE\tYES
ROUTING-PROTOCOL\tDSR
"""

RADIO_BLOCK = """\
PROPAGATION-LIMIT (dBm)\t-111
PROPAGATION-PATHLOSS\tTwo-Ray
RADIO-FREQUENCY (hz)\t2.40E+09
RADIO-TX-POWER (dBm)\t1

RADIO-ANTENNA-GAIN (dBm)\t0
RADIO-RX-SENSITIVITY (dBm)\t-91
RADIO-RX-THRESHOLD (dBm)\t-81
RADIO RANGE (M)\t125.227
"""


def test_scenario_block():
    cfg = parse_config(SCENARIO_BLOCK)
    assert cfg.nodes == 121 and cfg.sim_time == 900.0
    assert cfg.placement == "GRID" and cfg.promiscuous
    assert cfg.terrain == (1250.0, 1250.0)
    assert cfg.motion.pause == 30.0 and cfg.motion.v_max == 10.0 and cfg.motion.granularity == 0.5


def test_radio_block():
    cfg = parse_config(RADIO_BLOCK, strict=False)
    assert cfg.radio.frequency == 2.4e9 and cfg.radio.rx_threshold == -81.0
    assert cfg.declared_range == 125.227
    assert max_range(cfg.radio) == pytest.approx(cfg.declared_range, abs=0.05)


@pytest.mark.parametrize("text,seconds", [("30S", 30.0), ("15M", 900.0), ("250MS", 0.25),
                                          ("2", 2.0), ("1H", 3600.0), ("1.5E1S", 15.0)])
def test_durations(text, seconds):
    assert parse_duration(text) == seconds


def test_dims():
    assert parse_dims("(1250, 1250)") == (1250.0, 1250.0)
    assert parse_dims("( 10.5 ,20 )") == (10.5, 20.0)
    with pytest.raises(ValueError):
        parse_dims("1250 1250")


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n" + SCENARIO_BLOCK + "\nSEED 9  # trailing\n")
    assert cfg.seed == 9


def test_keys_are_case_sensitive():
    with pytest.warns(ConfigWarning, match="line 12"):
        cfg = parse_config(SCENARIO_BLOCK + "seed 4\n")
    assert cfg.seed == RunConfig().seed


def test_missing_mandatory_key():
    text = SCENARIO_BLOCK.replace("NUMBER-OF-NODES\t121\n", "")
    with pytest.raises(ConfigError, match="NUMBER-OF-NODES"):
        parse_config(text)


def test_malformed_value_names_key_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config(SCENARIO_BLOCK.replace("30S", "thirty"))
    assert exc.value.key == "MOBILITY-WP-PAUSE" and exc.value.line == 6
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("SIMULATION-TIME 1M\nTERRAIN-DIMENSIONS\n")


def test_invalid_combination_reported():
    with pytest.raises(ConfigError, match="MOBILITY-WP-MIN-SPEED"):
        parse_config(SCENARIO_BLOCK + "MOBILITY-WP-MIN-SPEED 20\n")


def test_protocol_keys():
    assert parse_config(SCENARIO_BLOCK + "PROTOCOL-VARIANT mdsr\n").protocol == "MDSR"
    assert parse_config(SCENARIO_BLOCK + "MIRROR-ROUND 1M\n").mirror.round_length == 60.0
    assert parse_config(SCENARIO_BLOCK + "SELFISH-FRACTION 0.3\n").scenario.selfish_fraction == 0.3


def test_round_trip_defaults_and_blocks():
    for cfg in (RunConfig(), parse_config(SCENARIO_BLOCK), parse_config(SCENARIO_BLOCK + RADIO_BLOCK)):
        assert parse_config(format_config(cfg)) == cfg


def test_replace_dotted():
    cfg = RunConfig().replace(**{"scenario.flows": 5, "seed": 3})
    assert cfg.scenario.flows == 5 and cfg.seed == 3
    assert RunConfig().scenario.flows != 5


@settings(max_examples=60)
@given(st.floats(1, 1e5, allow_nan=False), st.integers(1, 20), st.floats(0, 1),
       st.floats(0.1, 50), st.integers(0, 2**40), st.booleans(), st.sampled_from(["PDSR", "MDSR"]))
def test_round_trip_property(t, k, frac, rate, seed, promisc, proto):
    cfg = RunConfig(sim_time=t, nodes=k * k, seed=seed, promiscuous=promisc, protocol=proto)
    cfg = cfg.replace(**{"scenario.selfish_fraction": frac, "scenario.flow_rate": rate})
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert parse_config(format_config(cfg)) == cfg


def test_config_is_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        RunConfig().seed = 3
