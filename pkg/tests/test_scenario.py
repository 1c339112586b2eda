"""Scenario file parsing: strict vocabulary, line-tagged diagnostics."""

from pathlib import Path

import pytest

from loraconn.scenario import ScenarioParseError, parse_scenario_file, parse_scenario_text
from loraconn.simkernel import InvalidScenarioError

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "src" / "loraconn" / "scenarios"

MINIMAL = """\
[scenario]
name = t
seed = 1
duration_s = 100

[node]
role = gateway
address = 0x00
height_m = 1.5

[node]
role = sensor
address = 0x01

[link]
from = 0x01
to = 0x00
loss = 0.0

[link]
from = 0x00
to = 0x01
loss = 0.0

[schedule]
node = 0x01
count = 2
start_s = 1
interval_s = 5
"""


def test_minimal_scenario_parses():
    sc = parse_scenario_text(MINIMAL)
    assert sc.name == "t"
    assert len(sc.nodes) == 2
    assert len(sc.links) == 2
    assert sc.schedule == [(1.0, 0x01), (6.0, 0x01)]
    assert sc.retries_enabled  # default


def test_every_bundled_scenario_parses():
    files = sorted(SCENARIO_DIR.glob("*.scn"))
    assert len(files) == 25
    for path in files:
        sc = parse_scenario_file(path)
        assert sc.name == path.stem


def test_unknown_key_names_the_line():
    bad = MINIMAL.replace("height_m = 1.5", "altitude = 1.5")
    with pytest.raises(ScenarioParseError, match="line 9: unknown key 'altitude'"):
        parse_scenario_text(bad)


def test_unknown_section_rejected():
    with pytest.raises(ScenarioParseError, match="unknown section"):
        parse_scenario_text(MINIMAL + "\n[weather]\nrain = yes\n")


def test_duplicate_key_rejected():
    bad = MINIMAL.replace("name = t", "name = t\nname = u")
    with pytest.raises(ScenarioParseError, match="duplicate key"):
        parse_scenario_text(bad)


def test_missing_required_key_rejected():
    bad = MINIMAL.replace("seed = 1\n", "")
    with pytest.raises(ScenarioParseError, match="missing required key.*seed"):
        parse_scenario_text(bad)


def test_malformed_entry_line_rejected():
    bad = MINIMAL.replace("seed = 1", "seed")
    with pytest.raises(ScenarioParseError, match="line 3"):
        parse_scenario_text(bad)


def test_bad_number_names_line_and_key():
    bad = MINIMAL.replace("duration_s = 100", "duration_s = soon")
    with pytest.raises(ScenarioParseError, match="'duration_s' needs a number"):
        parse_scenario_text(bad)


def test_link_needs_loss_or_row():
    bad = MINIMAL.replace("loss = 0.0\n\n[link]", "\n[link]", 1)
    with pytest.raises(ScenarioParseError, match="link needs"):
        parse_scenario_text(bad)


def test_link_cannot_mix_loss_and_row():
    bad = MINIMAL.replace("loss = 0.0", "loss = 0.0\nenvironment = grassland\ndistance_m = 200\nlos = yes", 1)
    with pytest.raises(ScenarioParseError, match="both"):
        parse_scenario_text(bad)


def test_unreachable_loss_parses():
    sc = parse_scenario_text(MINIMAL.replace("loss = 0.0", "loss = unreachable", 1))
    assert not sc.links[0].profile.reachable


def test_measured_row_link_uses_node_heights():
    text = MINIMAL.replace(
        "[link]\nfrom = 0x01\nto = 0x00\nloss = 0.0",
        "[link]\nfrom = 0x01\nto = 0x00\nenvironment = grassland\ndistance_m = 800\nlos = yes",
        1,
    )
    sc = parse_scenario_text(text)
    profile = sc.links[0].profile
    assert profile.loss_probability == 0.05  # SN ground, GW 1.5 m, 800 m
    assert profile.tx_height_m == 0.0 and profile.rx_height_m == 1.5


def test_unknown_measured_row_is_invalid_scenario():
    text = MINIMAL.replace(
        "[link]\nfrom = 0x01\nto = 0x00\nloss = 0.0",
        "[link]\nfrom = 0x01\nto = 0x00\nenvironment = grassland\ndistance_m = 412\nlos = yes",
        1,
    )
    with pytest.raises(InvalidScenarioError, match="no measured row"):
        parse_scenario_text(text)


def test_structural_validation_missing_gateway():
    bad = MINIMAL.replace("role = gateway", "role = sensor").replace("address = 0x00", "address = 0x09")
    with pytest.raises(InvalidScenarioError, match="gateway"):
        parse_scenario_text(bad)


def test_coding_rate_vocabulary():
    with_radio = MINIMAL + "\n[radio]\ncoding_rate = 5/8\n"
    with pytest.raises(ScenarioParseError, match="coding_rate"):
        parse_scenario_text(with_radio)
    ok = parse_scenario_text(MINIMAL + "\n[radio]\ncoding_rate = 4/5\n")
    assert ok.radio.coding_denominator == 5


def test_protocol_knobs_parse():
    text = MINIMAL + (
        "\n[protocol]\nretries = off\nbase_interval_s = 4\nidle_timeout_s = 30\n"
        "payload_len = 16\nack_timeout_s = 9.5\nmax_retries = 7\nwake_idle_s = 0.5\n"
    )
    sc = parse_scenario_text(text)
    assert not sc.retries_enabled
    assert sc.base_interval_s == 4.0
    assert sc.idle_timeout_s == 30.0
    assert sc.payload_len == 16
    assert sc.ack_timeout_s == 9.5
    assert sc.max_retries == 7
    assert sc.wake_idle_s == 0.5


def test_comments_and_blank_lines_ignored():
    sc = parse_scenario_text("# header comment\n\n" + MINIMAL)
    assert sc.name == "t"
