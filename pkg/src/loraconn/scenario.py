"""Strict line-oriented scenario file parser.

Grammar (see docs/scenario_format.md for the full description):

    file      = { blank | comment | section } ;
    section   = header { blank | comment | entry } ;
    header    = "[" name "]" ;            name in: scenario radio protocol
                                          node link schedule
    entry     = key " = " value ;         one per line, '=' padding free
    comment   = "#" anything ;

Unknown sections or keys, duplicate keys within a section, and malformed
values are all hard errors carrying the offending line number.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .channel import ChannelError, RadioParams, explicit_profile, lookup_profile
from .simkernel import InvalidScenarioError, LinkSpec, NodeSpec, Scenario


class ScenarioParseError(ValueError):
    """Syntax or vocabulary error in a scenario file."""

    def __init__(self, message: str, line: int):
        super().__init__("line {}: {}".format(line, message))
        self.line = line


_SECTION_KEYS = {
    "scenario": {"name", "seed", "duration_s", "environment", "distance_m"},
    "radio": {"spreading_factor", "coding_rate", "bandwidth_hz", "preamble_symbols"},
    "protocol": {
        "retries",
        "base_interval_s",
        "idle_timeout_s",
        "wake_idle_s",
        "payload_len",
        "ack_timeout_s",
        "max_retries",
        "relay",
    },
    "node": {"role", "address", "height_m"},
    "link": {"from", "to", "loss", "environment", "distance_m", "los"},
    "schedule": {"node", "count", "start_s", "interval_s"},
}

_REQUIRED_KEYS = {
    "scenario": {"name", "seed", "duration_s"},
    "node": {"role", "address"},
    "link": {"from", "to"},
    "schedule": {"node"},
}


def _parse_sections(text: str) -> list[tuple[str, int, dict[str, tuple[str, int]]]]:
    """Split the file into (section name, header line, {key: (value, line)})."""
    sections: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    current: Optional[dict[str, tuple[str, int]]] = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTION_KEYS:
                raise ScenarioParseError("unknown section [{}]".format(name), line_no)
            current = {}
            sections.append((name, line_no, current))
            continue
        if "=" not in line:
            raise ScenarioParseError("expected 'key = value', got {!r}".format(raw.strip()), line_no)
        if current is None:
            raise ScenarioParseError("entry outside any section", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        section_name = sections[-1][0]
        if key not in _SECTION_KEYS[section_name]:
            raise ScenarioParseError("unknown key {!r} in section [{}]".format(key, section_name), line_no)
        if key in current:
            raise ScenarioParseError("duplicate key {!r}".format(key), line_no)
        if not value:
            raise ScenarioParseError("empty value for key {!r}".format(key), line_no)
        current[key] = (value, line_no)
    return sections


def _check_required(name: str, header_line: int, entries: dict[str, tuple[str, int]]) -> None:
    missing = _REQUIRED_KEYS.get(name, set()) - entries.keys()
    if missing:
        raise ScenarioParseError(
            "section [{}] is missing required key(s): {}".format(name, ", ".join(sorted(missing))),
            header_line,
        )


def _parse_int(value: str, line: int, key: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise ScenarioParseError("key {!r} needs an integer, got {!r}".format(key, value), line) from None


def _parse_float(value: str, line: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioParseError("key {!r} needs a number, got {!r}".format(key, value), line) from None


def _parse_address(value: str, line: int, key: str) -> int:
    addr = _parse_int(value, line, key)
    if not 0 <= addr <= 0xFE:
        raise ScenarioParseError("address {!r} outside 0x00..0xFE".format(value), line)
    return addr


def _parse_bool(value: str, line: int, key: str, true: str, false: str) -> bool:
    if value == true:
        return True
    if value == false:
        return False
    raise ScenarioParseError("key {!r} must be {!r} or {!r}, got {!r}".format(key, true, false, value), line)


def parse_scenario_text(text: str) -> Scenario:
    """Parse scenario file contents into a validated Scenario.

    Raises:
        ScenarioParseError: On any syntax/vocabulary problem (line-tagged).
        InvalidScenarioError: When the parsed structure is inconsistent
            (e.g. missing gateway, link to an undeclared node, unknown
            measured link row).
    """
    sections = _parse_sections(text)

    meta: dict[str, tuple[str, int]] = {}
    radio_entries: dict[str, tuple[str, int]] = {}
    protocol_entries: dict[str, tuple[str, int]] = {}
    nodes: list[NodeSpec] = []
    link_sections: list[tuple[int, dict[str, tuple[str, int]]]] = []
    schedule_sections: list[tuple[int, dict[str, tuple[str, int]]]] = []

    seen_singular: set[str] = set()
    for name, header_line, entries in sections:
        _check_required(name, header_line, entries)
        if name in ("scenario", "radio", "protocol"):
            if name in seen_singular:
                raise ScenarioParseError("section [{}] declared twice".format(name), header_line)
            seen_singular.add(name)
        if name == "scenario":
            meta = entries
        elif name == "radio":
            radio_entries = entries
        elif name == "protocol":
            protocol_entries = entries
        elif name == "node":
            role, role_line = entries["role"]
            if role not in ("sensor", "gateway", "relay"):
                raise ScenarioParseError("unknown role {!r}".format(role), role_line)
            address = _parse_address(*entries["address"], key="address")
            height = _parse_float(*entries["height_m"], key="height_m") if "height_m" in entries else 0.0
            nodes.append(NodeSpec(address=address, role=role, height_m=height))
        elif name == "link":
            link_sections.append((header_line, entries))
        elif name == "schedule":
            schedule_sections.append((header_line, entries))

    if not meta:
        raise ScenarioParseError("missing [scenario] section", 1)

    radio_kwargs = {}
    if "spreading_factor" in radio_entries:
        radio_kwargs["spreading_factor"] = _parse_int(*radio_entries["spreading_factor"], key="spreading_factor")
    if "coding_rate" in radio_entries:
        value, line = radio_entries["coding_rate"]
        if not value.startswith("4/") or value[2:] not in ("5", "6", "7", "8"):
            raise ScenarioParseError("coding_rate must be 4/5..4/8, got {!r}".format(value), line)
        radio_kwargs["coding_denominator"] = int(value[2:])
    if "bandwidth_hz" in radio_entries:
        radio_kwargs["bandwidth_hz"] = _parse_int(*radio_entries["bandwidth_hz"], key="bandwidth_hz")
    if "preamble_symbols" in radio_entries:
        radio_kwargs["preamble_symbols"] = _parse_int(*radio_entries["preamble_symbols"], key="preamble_symbols")
    try:
        radio = RadioParams(**radio_kwargs)
    except ChannelError as exc:
        raise ScenarioParseError(str(exc), radio_entries[next(iter(radio_kwargs))][1]) from None

    heights = {n.address: n.height_m for n in nodes}
    links: list[LinkSpec] = []
    for header_line, entries in link_sections:
        src = _parse_address(*entries["from"], key="from")
        dst = _parse_address(*entries["to"], key="to")
        has_loss = "loss" in entries
        has_row = "environment" in entries or "distance_m" in entries or "los" in entries
        if has_loss and has_row:
            raise ScenarioParseError(
                "link declares both an explicit loss and a measured-row reference", header_line
            )
        if has_loss:
            value, line = entries["loss"]
            if value == "unreachable":
                profile = explicit_profile(None)
            else:
                loss = _parse_float(value, line, "loss")
                if not 0.0 <= loss <= 1.0:
                    raise ScenarioParseError("loss must be in [0, 1] or 'unreachable'", line)
                profile = explicit_profile(loss)
        elif has_row:
            for needed in ("environment", "distance_m"):
                if needed not in entries:
                    raise ScenarioParseError(
                        "measured-row link needs key {!r}".format(needed), header_line
                    )
            env, env_line = entries["environment"]
            distance = _parse_float(*entries["distance_m"], key="distance_m")
            los = _parse_bool(*entries["los"], key="los", true="yes", false="no") if "los" in entries else True
            if src not in heights or dst not in heights:
                raise InvalidScenarioError(
                    "link 0x{:02X}->0x{:02X} references an undeclared node".format(src, dst)
                )
            try:
                profile = lookup_profile(env, distance, heights[src], heights[dst], los)
            except ChannelError as exc:
                raise InvalidScenarioError(str(exc)) from None
        else:
            raise ScenarioParseError("link needs 'loss' or a measured-row reference", header_line)
        links.append(LinkSpec(src=src, dst=dst, profile=profile))

    schedule: list[tuple[float, int]] = []
    for header_line, entries in schedule_sections:
        target = _parse_address(*entries["node"], key="node")
        count = _parse_int(*entries["count"], key="count") if "count" in entries else 1
        if count < 1:
            raise ScenarioParseError("count must be at least 1", entries["count"][1])
        start = _parse_float(*entries["start_s"], key="start_s") if "start_s" in entries else 0.0
        interval = _parse_float(*entries["interval_s"], key="interval_s") if "interval_s" in entries else 0.0
        for i in range(count):
            schedule.append((start + i * interval, target))
    schedule.sort(key=lambda item: item[0])

    retries = True
    if "retries" in protocol_entries:
        retries = _parse_bool(*protocol_entries["retries"], key="retries", true="on", false="off")
    relay_enabled = True
    if "relay" in protocol_entries:
        relay_enabled = _parse_bool(*protocol_entries["relay"], key="relay", true="enabled", false="disabled")
    ack_timeout: Optional[float] = None
    if "ack_timeout_s" in protocol_entries:
        value, line = protocol_entries["ack_timeout_s"]
        if value != "auto":
            ack_timeout = _parse_float(value, line, "ack_timeout_s")
    max_retries: Optional[int] = None
    if "max_retries" in protocol_entries:
        value, line = protocol_entries["max_retries"]
        if value != "none":
            max_retries = _parse_int(value, line, "max_retries")

    def proto_float(key: str, default: float) -> float:
        if key in protocol_entries:
            return _parse_float(*protocol_entries[key], key=key)
        return default

    scenario = Scenario(
        name=meta["name"][0],
        nodes=nodes,
        links=links,
        schedule=schedule,
        duration_s=_parse_float(*meta["duration_s"], key="duration_s"),
        seed=_parse_int(*meta["seed"], key="seed"),
        radio=radio,
        retries_enabled=retries,
        base_interval_s=proto_float("base_interval_s", 8.0),
        idle_timeout_s=proto_float("idle_timeout_s", 60.0),
        wake_idle_s=proto_float("wake_idle_s", 1.0),
        ack_timeout_s=ack_timeout,
        max_retries=max_retries,
        payload_len=_parse_int(*protocol_entries["payload_len"], key="payload_len")
        if "payload_len" in protocol_entries
        else 8,
        relay_enabled=relay_enabled,
        environment=meta["environment"][0] if "environment" in meta else None,
        distance_m=_parse_float(*meta["distance_m"], key="distance_m") if "distance_m" in meta else None,
    )
    scenario.validate()
    return scenario


def parse_scenario_file(path: str | Path) -> Scenario:
    """Read and parse one scenario file."""
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))
