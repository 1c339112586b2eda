"""Deterministic discrete-event engine binding protocol, channel, power,
and ingestion.

Virtual time is a 64-bit count of microseconds presented as seconds.  The
event queue pops in (time, insertion sequence) order, every random draw
comes from a named sub-stream of the scenario seed, and identical
(scenario, seed) pairs produce byte-identical traces.

Medium access: before a frame goes on air the transmitter senses the
channel; while some registered transmission covers the sensing instant it
waits a random sub-second backoff and re-senses.  Sensing sees what is on
air at that instant, not transmissions committed later, so two nodes can
still start close enough together to overlap; overlapping frames at the
same receiver destroy each other.  Frames lost to the empirical link
sampling carry no decodable energy and do not interfere.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Optional

from . import protocol as proto
from .channel import LinkProfile, RadioParams, airtime, csma_delay, sample_delivery
from .frame import GATEWAY_ADDRESS, HEADER_SIZE, Frame, RELAY_ADDRESS, encode
from .ingest import TimeSeriesStore
from .power import EnergyLedger, Mode

ROLE_SENSOR = "sensor"
ROLE_GATEWAY = "gateway"
ROLE_RELAY = "relay"

US = 1_000_000  # microseconds per second

_CSMA_GUARD_ITERATIONS = 1_000_000


class InvalidScenarioError(ValueError):
    """Raised when a scenario violates its structural invariants."""


def seeded_stream(seed: int, stream_id: str) -> random.Random:
    """Independent, reproducible random stream for (seed, stream_id)."""
    return random.Random("{}:{}".format(seed, stream_id))


# ---------------------------------------------------------------------------
# Scenario description


@dataclass(frozen=True)
class NodeSpec:
    address: int
    role: str
    height_m: float = 0.0


@dataclass(frozen=True)
class LinkSpec:
    src: int
    dst: int
    profile: LinkProfile


@dataclass
class Scenario:
    """Everything one run needs: topology, schedule, knobs, seed."""

    name: str
    nodes: list[NodeSpec]
    links: list[LinkSpec]
    schedule: list[tuple[float, int]]
    duration_s: float
    seed: int
    radio: RadioParams = RadioParams()
    retries_enabled: bool = True
    base_interval_s: float = 8.0
    idle_timeout_s: float = 60.0
    wake_idle_s: float = 1.0
    ack_timeout_s: Optional[float] = None
    max_retries: Optional[int] = None
    payload_len: int = 8
    relay_enabled: bool = True
    environment: Optional[str] = None
    distance_m: Optional[float] = None

    def sensors(self) -> list[NodeSpec]:
        return [n for n in self.nodes if n.role == ROLE_SENSOR]

    def gateway(self) -> NodeSpec:
        return next(n for n in self.nodes if n.role == ROLE_GATEWAY)

    def relay(self) -> Optional[NodeSpec]:
        return next((n for n in self.nodes if n.role == ROLE_RELAY), None)

    def has_active_relay(self) -> bool:
        return self.relay() is not None and self.relay_enabled

    def effective_ack_timeout_s(self) -> float:
        """Configured ack timeout, or round-trip airtime plus a 1 s margin
        (doubled airtime share when the path crosses the relay)."""
        if self.ack_timeout_s is not None:
            return self.ack_timeout_s
        hops = 4 if self.has_active_relay() else 2
        return hops * airtime(self.radio, HEADER_SIZE + self.payload_len) + 1.0

    def validate(self) -> None:
        addresses = [n.address for n in self.nodes]
        if len(set(addresses)) != len(addresses):
            raise InvalidScenarioError("duplicate node addresses")
        gateways = [n for n in self.nodes if n.role == ROLE_GATEWAY]
        if len(gateways) != 1:
            raise InvalidScenarioError("scenario needs exactly one gateway, found {}".format(len(gateways)))
        if gateways[0].address != GATEWAY_ADDRESS:
            raise InvalidScenarioError("gateway address must be 0x00")
        relays = [n for n in self.nodes if n.role == ROLE_RELAY]
        if len(relays) > 1:
            raise InvalidScenarioError("at most one relay is supported")
        if relays and relays[0].address != RELAY_ADDRESS:
            raise InvalidScenarioError("relay address must be 0xFE")
        for n in self.nodes:
            if n.role == ROLE_SENSOR and not 0x01 <= n.address <= 0xFD:
                raise InvalidScenarioError("sensor address 0x{:02X} outside 0x01..0xFD".format(n.address))
            if n.role not in (ROLE_SENSOR, ROLE_GATEWAY, ROLE_RELAY):
                raise InvalidScenarioError("unknown role {!r}".format(n.role))
        known = set(addresses)
        for link in self.links:
            if link.src not in known or link.dst not in known:
                raise InvalidScenarioError(
                    "link 0x{:02X}->0x{:02X} references an undeclared node".format(link.src, link.dst)
                )
            if link.src == link.dst:
                raise InvalidScenarioError("link may not loop back to its source")
        if len({(l.src, l.dst) for l in self.links}) != len(self.links):
            raise InvalidScenarioError("duplicate link declaration")
        sensor_addrs = {n.address for n in self.sensors()}
        for t, target in self.schedule:
            if target not in sensor_addrs:
                raise InvalidScenarioError("schedule targets non-sensor 0x{:02X}".format(target))
            if not 0 <= t < self.duration_s:
                raise InvalidScenarioError("schedule time {} outside [0, duration)".format(t))
        if self.duration_s <= 0:
            raise InvalidScenarioError("duration must be positive")
        if not 1 <= self.payload_len <= 248:
            raise InvalidScenarioError("payload length must be 1..248")


# ---------------------------------------------------------------------------
# Trace


DIR_TX = "tx"
DIR_RX = "rx"
DIR_DROP = "drop"
DIR_COLLIDE = "collide"
DIR_SINK = "sink"


@dataclass(frozen=True)
class TraceRecord:
    """One line of the run trace.

    node is the acting node: the transmitter for tx, the receiver for
    rx/drop/collide, the measurement's source for sink.  frame_addr is
    the sensor the frame concerns (the address byte on the wire).
    """

    time_s: float
    node: int
    direction: str
    kind: str
    frame_addr: int
    seq: int
    mode: str

    def format_line(self) -> str:
        return "{:.6f} {:02x} {} {}@{:02x} {} {}".format(
            self.time_s, self.node, self.direction, self.kind, self.frame_addr, self.seq, self.mode
        )


def trace_to_text(trace: list[TraceRecord]) -> str:
    if not trace:
        return ""
    return "\n".join(rec.format_line() for rec in trace) + "\n"


def parse_trace(text: str) -> list[TraceRecord]:
    """Inverse of trace_to_text, for recomputing metrics from a file."""
    records = []
    for line in text.splitlines():
        if not line:
            continue
        time_str, node_str, direction, kind_str, seq_str, mode = line.split(" ")
        kind, addr_str = kind_str.split("@")
        records.append(
            TraceRecord(
                time_s=float(time_str),
                node=int(node_str, 16),
                direction=direction,
                kind=kind,
                frame_addr=int(addr_str, 16),
                seq=int(seq_str),
                mode=mode,
            )
        )
    return records


_KIND_NAMES = {
    proto.ControlFlags.CONNECT_REQ: "connect_req",
    proto.ControlFlags.CONNECT_ACCEPT: "connect_accept",
    proto.ControlFlags.CONNECT_DENY: "connect_deny",
    proto.ControlFlags.DATA: "data",
    proto.ControlFlags.DATA_ACK: "data_ack",
    proto.ControlFlags.DISCONNECT: "disconnect",
}


def kind_name(frame: Frame) -> str:
    return _KIND_NAMES[frame.kind]


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class NodeMetrics:
    role: str
    sent: int = 0
    delivered: int = 0
    retried: int = 0
    collided: int = 0
    flr: float = 0.0
    energy_mj: float = 0.0


@dataclass
class SimMetrics:
    scenario: str
    seed: int
    duration_s: float
    retries_enabled: bool
    environment: str
    distance_m: float
    gw_height_m: float
    sn_height_m: float
    link_unreachable: bool
    attempts: int
    successes: int
    flr: float
    power_mw: dict[str, float] = field(default_factory=dict)
    per_node: dict[int, NodeMetrics] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            "scenario {}".format(self.scenario),
            "seed {}".format(self.seed),
            "duration_s {:.6f}".format(self.duration_s),
            "retries {}".format("on" if self.retries_enabled else "off"),
            "environment {}".format(self.environment),
            "distance_m {:.1f}".format(self.distance_m),
            "gw_height_m {:.2f}".format(self.gw_height_m),
            "sn_height_m {:.2f}".format(self.sn_height_m),
            "link_unreachable {}".format(1 if self.link_unreachable else 0),
            "power_sleep_mw {:.6f}".format(self.power_mw.get("sleep", 0.0)),
            "power_idle_mw {:.6f}".format(self.power_mw.get("idle", 0.0)),
            "power_active_mw {:.6f}".format(self.power_mw.get("active", 0.0)),
        ]
        for addr in sorted(self.per_node):
            nm = self.per_node[addr]
            lines.append(
                "node {:02x} role {} sent {} delivered {} retried {} collided {} flr {:.6f} energy_mj {:.3f}".format(
                    addr, nm.role, nm.sent, nm.delivered, nm.retried, nm.collided, nm.flr, nm.energy_mj
                )
            )
        lines.append("total attempts {} successes {} flr {:.6f}".format(self.attempts, self.successes, self.flr))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SimMetrics":
        fields: dict[str, str] = {}
        per_node: dict[int, NodeMetrics] = {}
        attempts = successes = 0
        flr = 0.0
        for line in text.splitlines():
            if not line:
                continue
            parts = line.split(" ")
            if parts[0] == "node":
                addr = int(parts[1], 16)
                per_node[addr] = NodeMetrics(
                    role=parts[3],
                    sent=int(parts[5]),
                    delivered=int(parts[7]),
                    retried=int(parts[9]),
                    collided=int(parts[11]),
                    flr=float(parts[13]),
                    energy_mj=float(parts[15]),
                )
            elif parts[0] == "total":
                attempts = int(parts[2])
                successes = int(parts[4])
                flr = float(parts[6])
            else:
                fields[parts[0]] = " ".join(parts[1:])
        return cls(
            scenario=fields["scenario"],
            seed=int(fields["seed"]),
            duration_s=float(fields["duration_s"]),
            retries_enabled=fields["retries"] == "on",
            environment=fields["environment"],
            distance_m=float(fields["distance_m"]),
            gw_height_m=float(fields["gw_height_m"]),
            sn_height_m=float(fields["sn_height_m"]),
            link_unreachable=fields["link_unreachable"] == "1",
            attempts=attempts,
            successes=successes,
            flr=flr,
            power_mw={
                "sleep": float(fields["power_sleep_mw"]),
                "idle": float(fields["power_idle_mw"]),
                "active": float(fields["power_active_mw"]),
            },
            per_node=per_node,
        )


@dataclass
class SimResult:
    trace: list[TraceRecord]
    metrics: SimMetrics
    store: TimeSeriesStore
    ledgers: dict[int, EnergyLedger] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Frame-loss accounting


def flr_detail(trace: list[TraceRecord]) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """(attempted, succeeded) payload keys (sensor, sequence) from a trace.

    A payload's attempt starts with the first uplink transmission carrying
    its sequence (connect_req while it heads the queue, or its data
    frame).  It succeeded end to end when its acknowledgement reached the
    sensor and its measurement reached the sink.
    """
    attempted: set[tuple[int, int]] = set()
    acked: set[tuple[int, int]] = set()
    sunk: set[tuple[int, int]] = set()
    for rec in trace:
        key = (rec.frame_addr, rec.seq)
        if rec.direction == DIR_TX and rec.kind in ("connect_req", "data"):
            attempted.add(key)
        elif rec.direction == DIR_RX and rec.kind == "data_ack" and rec.node == rec.frame_addr:
            acked.add(key)
        elif rec.direction == DIR_SINK:
            sunk.add(key)
    return attempted, acked & sunk & attempted


def compute_flr(trace: list[TraceRecord]) -> float:
    """Fraction of attempted payloads that failed end to end.

    A payload counts lost if its data frame, its acknowledgement, or its
    sink publication failed; a run with no attempts has zero loss.
    """
    attempted, succeeded = flr_detail(trace)
    if not attempted:
        return 0.0
    return 1.0 - len(succeeded) / len(attempted)


# ---------------------------------------------------------------------------
# Engine


def make_payload(node: int, ordinal: int, length: int) -> bytes:
    """Deterministic stand-in measurement bytes for one interrupt."""
    base = bytes([node]) + (ordinal % 65536).to_bytes(2, "big")
    reps = length // len(base) + 1
    return (base * reps)[:length]


class _Kernel:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.sc = scenario
        self.duration_us = round(scenario.duration_s * US)
        self.heap: list[tuple[int, int, tuple]] = []
        self._event_seq = 0
        self.trace: list[TraceRecord] = []
        self.store = TimeSeriesStore()
        self.now_us = 0

        sn_config = proto.SnConfig(
            ack_timeout_s=scenario.effective_ack_timeout_s(),
            base_interval_s=scenario.base_interval_s,
            wake_idle_s=scenario.wake_idle_s,
            retries_enabled=scenario.retries_enabled,
            max_retries=scenario.max_retries,
        )
        gw_config = proto.GwConfig(idle_timeout_s=scenario.idle_timeout_s)

        self.sensors: dict[int, proto.SensorNodeSM] = {}
        self.roles: dict[int, str] = {}
        self.ledgers: dict[int, EnergyLedger] = {}
        self.gateway = proto.GatewaySM(gw_config)
        self.relay: Optional[proto.RelaySM] = None
        for node in scenario.nodes:
            self.roles[node.address] = node.role
            if node.role == ROLE_SENSOR:
                self.sensors[node.address] = proto.SensorNodeSM(node.address, sn_config)
                self.ledgers[node.address] = EnergyLedger(node.address)
            else:
                # Gateway and relay are mains-assisted listeners: idle
                # baseline, active while transmitting.
                self.ledgers[node.address] = EnergyLedger(node.address, initial_mode=Mode.IDLE)
            if node.role == ROLE_RELAY:
                self.relay = proto.RelaySM(node.address, enabled=scenario.relay_enabled)

        self.links_by_src: dict[int, list[LinkSpec]] = {}
        for link in scenario.links:
            self.links_by_src.setdefault(link.src, []).append(link)

        self.node_rngs = {a: seeded_stream(scenario.seed, "node:{:02x}".format(a)) for a in self.sensors}
        self.csma_rngs = {
            n.address: seeded_stream(scenario.seed, "csma:{:02x}".format(n.address)) for n in scenario.nodes
        }
        self.channel_rng = seeded_stream(scenario.seed, "channel")

        self.timer_gen: dict[tuple[int, str], int] = {}
        self.onair: list[tuple[int, int]] = []
        self.rx_copies: dict[int, list[tuple[int, int, int]]] = {}
        self.tx_busy_until: dict[int, int] = {a: 0 for a in self.roles}
        self._copy_seq = 0
        self.tick_pending = False
        self.tick_cadence_us = round(max(0.25, scenario.idle_timeout_s / 4.0) * US)
        self.collided_by_node: dict[int, int] = {a: 0 for a in self.roles}
        self.sent_by_node: dict[int, int] = {a: 0 for a in self.roles}

    # -- queue plumbing

    def push(self, time_us: int, payload: tuple) -> None:
        heapq.heappush(self.heap, (time_us, self._event_seq, payload))
        self._event_seq += 1

    def add_trace(self, time_us: int, node: int, direction: str, frame: Frame) -> None:
        self.trace.append(
            TraceRecord(
                time_s=time_us / US,
                node=node,
                direction=direction,
                kind=kind_name(frame),
                frame_addr=frame.source,
                seq=frame.sequence,
                mode=self.ledgers[node].current_mode.value,
            )
        )

    def ledger_transition(self, node: int, mode: Mode, time_us: int) -> None:
        if time_us > self.duration_us:
            return
        ledger = self.ledgers[node]
        if ledger.current_mode != mode:
            ledger.record_transition(mode, time_us / US)

    # -- medium access

    def _busy_at(self, t_us: int) -> bool:
        return any(start <= t_us < end for start, end in self.onair)

    def _prune_air(self) -> None:
        self.onair = [(s, e) for s, e in self.onair if e > self.now_us]

    def transmit(self, node: int, frame: Frame, t_us: int) -> int:
        """Put *frame* on air for *node*; returns the on-air start time.

        The radio is half duplex and serial: a new frame waits for the
        node's own pending transmission, then senses the channel,
        backing off while some other transmission covers the sensing
        instant.  Sensing cannot see transmissions committed to start in
        the future, so near-simultaneous starts remain possible and are
        resolved as collisions at the receivers.
        """
        air_us = round(airtime(self.sc.radio, len(encode(frame))) * US)
        self._prune_air()
        rng = self.csma_rngs[node]
        start = max(t_us, self.tx_busy_until[node])
        for _ in range(_CSMA_GUARD_ITERATIONS):
            if not self._busy_at(start):
                break
            start += max(1, round(csma_delay(rng) * US))
        else:
            raise RuntimeError("carrier sense never found an idle instant")
        end = start + air_us
        self.tx_busy_until[node] = end
        self.onair.append((start, end))
        # a transmitting radio cannot receive: its own on-air interval
        # destroys anything arriving over it
        self._copy_seq += 1
        self.rx_copies.setdefault(node, []).append((start, end, self._copy_seq))
        if self.roles[node] != ROLE_SENSOR:
            self.ledger_transition(node, Mode.ACTIVE, start)
        self.sent_by_node[node] += 1
        self.add_trace(start, node, DIR_TX, frame)
        if self.roles[node] != ROLE_SENSOR:
            self.ledger_transition(node, Mode.IDLE, end)
        else:
            self.push(end, ("txdone", node))
        for link in self.links_by_src.get(node, []):
            delivered = sample_delivery(link.profile, self.channel_rng)
            if delivered:
                self._copy_seq += 1
                self.rx_copies.setdefault(link.dst, []).append((start, end, self._copy_seq))
                self.push(end, ("arrival", link.dst, frame, self._copy_seq, node))
            elif link.profile.reachable:
                self.push(end, ("drop", link.dst, frame))
        return start

    def _collided(self, receiver: int, copy_id: int) -> bool:
        copies = self.rx_copies.get(receiver, [])
        # keep recent history: an overlap partner's interval always ends
        # within one max frame airtime of ours
        horizon = self.now_us - 30 * US
        copies = [c for c in copies if c[1] >= horizon]
        self.rx_copies[receiver] = copies
        mine = next(c for c in copies if c[2] == copy_id)
        for other in copies:
            if other[2] == copy_id:
                continue
            if max(mine[0], other[0]) < min(mine[1], other[1]):
                return True
        return False

    # -- action execution

    def execute_actions(self, node: int, actions: list[proto.Action], t_us: int) -> None:
        batch_offset = 0
        for action in actions:
            if isinstance(action, proto.Transmit):
                start = self.transmit(node, action.frame, t_us)
                batch_offset = start - t_us
            elif isinstance(action, proto.SetTimer):
                key = (node, action.timer_id)
                gen = self.timer_gen.get(key, 0) + 1
                self.timer_gen[key] = gen
                fire_at = t_us + batch_offset + round(action.delay_s * US)
                self.push(fire_at, ("timer", node, action.timer_id, gen))
            elif isinstance(action, proto.CancelTimer):
                key = (node, action.timer_id)
                self.timer_gen[key] = self.timer_gen.get(key, 0) + 1
            elif isinstance(action, proto.WakePower):
                self.ledger_transition(node, action.mode, t_us)
            elif isinstance(action, proto.DeliverToSink):
                record = action.record
                self.store.publish(record)
                self.trace.append(
                    TraceRecord(
                        time_s=t_us / US,
                        node=record.node,
                        direction=DIR_SINK,
                        kind="data",
                        frame_addr=record.node,
                        seq=record.sequence,
                        mode=self.ledgers[record.node].current_mode.value,
                    )
                )

    def _ensure_tick(self, t_us: int) -> None:
        if self.gateway.connected is not None and not self.tick_pending:
            self.push(t_us + self.tick_cadence_us, ("tick",))
            self.tick_pending = True

    def dispatch_frame(self, receiver: int, frame: Frame, t_us: int) -> None:
        role = self.roles[receiver]
        if role == ROLE_SENSOR:
            sm = self.sensors[receiver]
            actions = sm.on_event(proto.FrameReceived(frame, t_us / US), self.node_rngs[receiver])
            self.execute_actions(receiver, actions, t_us)
        elif role == ROLE_GATEWAY:
            actions = self.gateway.on_event(proto.FrameReceived(frame, t_us / US))
            self.execute_actions(receiver, actions, t_us)
            self._ensure_tick(t_us)
        elif role == ROLE_RELAY and self.relay is not None:
            actions = self.relay.on_frame(frame, proto.direction_of(frame))
            self.execute_actions(receiver, actions, t_us)

    # -- main loop

    def run(self) -> SimResult:
        ordinals: dict[int, int] = {}
        for t, target in self.sc.schedule:
            ordinal = ordinals.get(target, 0)
            ordinals[target] = ordinal + 1
            self.push(round(t * US), ("gas", target, ordinal))
        self.push(self.duration_us, ("end",))

        while self.heap:
            time_us, _, payload = heapq.heappop(self.heap)
            if time_us > self.duration_us or payload[0] == "end":
                break
            self.now_us = time_us
            kind = payload[0]
            if kind == "gas":
                _, node, ordinal = payload
                sm = self.sensors[node]
                data = make_payload(node, ordinal, self.sc.payload_len)
                actions = sm.on_event(proto.GasInterrupt(data), self.node_rngs[node])
                self.execute_actions(node, actions, time_us)
            elif kind == "arrival":
                _, receiver, frame, copy_id, tx_node = payload
                if self._collided(receiver, copy_id):
                    self.add_trace(time_us, receiver, DIR_COLLIDE, frame)
                    self.collided_by_node[tx_node] += 1
                else:
                    self.add_trace(time_us, receiver, DIR_RX, frame)
                    self.dispatch_frame(receiver, frame, time_us)
            elif kind == "drop":
                _, receiver, frame = payload
                self.add_trace(time_us, receiver, DIR_DROP, frame)
            elif kind == "timer":
                _, node, timer_id, gen = payload
                if self.timer_gen.get((node, timer_id)) != gen:
                    continue
                sm = self.sensors[node]
                actions = sm.on_event(proto.TimerFired(timer_id), self.node_rngs[node])
                self.execute_actions(node, actions, time_us)
            elif kind == "txdone":
                _, node = payload
                sm = self.sensors[node]
                actions = sm.on_event(proto.TimerFired(proto.TIMER_TXDONE), self.node_rngs[node])
                self.execute_actions(node, actions, time_us)
            elif kind == "tick":
                self.tick_pending = False
                self.gateway.on_event(proto.Tick(time_us / US))
                self._ensure_tick(time_us)

        for ledger in self.ledgers.values():
            ledger.finalize(self.sc.duration_s)
        self.trace.sort(key=lambda rec: rec.time_s)
        return SimResult(
            trace=self.trace, metrics=self._metrics(), store=self.store, ledgers=self.ledgers
        )

    # -- metrics assembly

    def _metrics(self) -> SimMetrics:
        attempted, succeeded = flr_detail(self.trace)
        flr = 0.0 if not attempted else 1.0 - len(succeeded) / len(attempted)

        first_copies: dict[tuple[int, str, int, int], int] = {}
        for rec in self.trace:
            if rec.direction == DIR_TX and rec.kind in ("connect_req", "data"):
                key = (rec.node, rec.kind, rec.frame_addr, rec.seq)
                first_copies[key] = first_copies.get(key, 0) + 1
        retried: dict[int, int] = {a: 0 for a in self.roles}
        for (node, _, _, _), count in first_copies.items():
            retried[node] += count - 1

        delivered: dict[int, int] = {a: 0 for a in self.roles}
        for rec in self.trace:
            if rec.direction == DIR_SINK:
                delivered[rec.frame_addr] += 1

        per_node: dict[int, NodeMetrics] = {}
        for spec in self.sc.nodes:
            addr = spec.address
            node_attempts = {key for key in attempted if key[0] == addr}
            node_success = {key for key in succeeded if key[0] == addr}
            node_flr = 0.0 if not node_attempts else 1.0 - len(node_success) / len(node_attempts)
            per_node[addr] = NodeMetrics(
                role=spec.role,
                sent=self.sent_by_node[addr],
                delivered=delivered[addr],
                retried=retried[addr],
                collided=self.collided_by_node[addr],
                flr=node_flr,
                energy_mj=self.ledgers[addr].total_mj,
            )

        gw = self.sc.gateway()
        sensors = self.sc.sensors()
        direct_up = [l for l in self.sc.links if l.dst == gw.address and self.roles[l.src] == ROLE_SENSOR]
        unreachable = (
            bool(direct_up)
            and all(not l.profile.reachable for l in direct_up)
            and not self.sc.has_active_relay()
        )
        env = self.sc.environment or "none"
        distance = self.sc.distance_m if self.sc.distance_m is not None else 0.0
        powers = {mode.value: self.ledgers[sensors[0].address].powers_mw[mode] for mode in Mode} if sensors else {}
        return SimMetrics(
            scenario=self.sc.name,
            seed=self.sc.seed,
            duration_s=self.sc.duration_s,
            retries_enabled=self.sc.retries_enabled,
            environment=env,
            distance_m=distance,
            gw_height_m=gw.height_m,
            sn_height_m=sensors[0].height_m if sensors else 0.0,
            link_unreachable=unreachable,
            attempts=len(attempted),
            successes=len(succeeded),
            flr=flr,
            power_mw=powers,
            per_node=per_node,
        )


def run(scenario: Scenario) -> SimResult:
    """Simulate *scenario* to completion; deterministic in its seed."""
    return _Kernel(scenario).run()
