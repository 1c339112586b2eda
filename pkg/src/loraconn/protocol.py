"""Sensor node, gateway, and relay state machines.

The machines are passive values driven by events; each transition returns
an ordered list of actions for the harness to execute.  All randomness
(retry delays) enters through an explicit random stream.

Connection lifecycle: a sensor wakes on a gas interrupt, establishes a
connection (connect_req / connect_accept), sends each queued payload as a
data frame and waits for its per-message acknowledgement, then
disconnects and sleeps.  The gateway serves one connection at a time and
denies competing requests.  Denied or timed-out attempts back off for a
random time inside a window that doubles per retry up to one hour.

The "retries" switch gates loss-driven retransmission of data frames
only: connection arbitration (a deny, or a lost handshake) always backs
off and tries again, because giving up there would strand every queued
payload behind a busy medium.
"""

from __future__ import annotations

import random
from collections import OrderedDict, deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

from .frame import (
    ControlFlags,
    Frame,
    GATEWAY_ADDRESS,
    RELAY_ADDRESS,
    SEQUENCE_MODULUS,
    make_connect_accept,
    make_connect_deny,
    make_connect_req,
    make_data,
    make_data_ack,
    make_disconnect,
)
from .ingest import MeasurementRecord
from .power import Mode

# Timer identifiers used by the sensor node machine.  TXDONE is fired by
# the harness when one of the node's own transmissions leaves the air.
TIMER_WAKE = "wake"
TIMER_RESPONSE = "response"
TIMER_RETRY = "retry"
TIMER_TXDONE = "txdone"

BACKOFF_CAP_S = 3600.0

UPLINK = "uplink"
DOWNLINK = "downlink"

_DOWNLINK_KINDS = (
    ControlFlags.CONNECT_ACCEPT,
    ControlFlags.CONNECT_DENY,
    ControlFlags.DATA_ACK,
)


def direction_of(frame: Frame) -> str:
    """Traffic direction implied by the frame kind (gateway-originated
    kinds flow downlink; everything else is sensor-originated)."""
    return DOWNLINK if frame.kind in _DOWNLINK_KINDS else UPLINK


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class GasInterrupt:
    payload: bytes


@dataclass(frozen=True)
class FrameReceived:
    frame: Frame
    at: float = 0.0


@dataclass(frozen=True)
class TimerFired:
    timer_id: str


@dataclass(frozen=True)
class Tick:
    at: float


Event = Union[GasInterrupt, FrameReceived, TimerFired, Tick]


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Transmit:
    frame: Frame


@dataclass(frozen=True)
class SetTimer:
    timer_id: str
    delay_s: float


@dataclass(frozen=True)
class CancelTimer:
    timer_id: str


@dataclass(frozen=True)
class DeliverToSink:
    record: MeasurementRecord


@dataclass(frozen=True)
class WakePower:
    mode: Mode


Action = Union[Transmit, SetTimer, CancelTimer, DeliverToSink, WakePower]


# ---------------------------------------------------------------------------
# Retry schedule


@dataclass(frozen=True)
class RetrySchedule:
    """Doubling random-backoff window, capped at one hour."""

    base_interval_s: float = 8.0
    attempt: int = 0
    cap_s: float = BACKOFF_CAP_S

    @property
    def window_s(self) -> float:
        return min(self.base_interval_s * 2.0 ** min(self.attempt, 40), self.cap_s)

    def reset(self) -> "RetrySchedule":
        return replace(self, attempt=0)


def next_retry_delay(rs: RetrySchedule, rng: random.Random) -> tuple[RetrySchedule, float]:
    """Draw a delay uniform in [0, current window) and advance the attempt."""
    delay = rng.random() * rs.window_s
    return replace(rs, attempt=rs.attempt + 1), delay


# ---------------------------------------------------------------------------
# Sensor node


class SnState(Enum):
    SLEEPING = "sleeping"
    CONNECTING = "connecting"
    CONNECTED = "connected"
    AWAITING_ACK = "awaiting_ack"
    BACKOFF = "backoff"
    DISCONNECTING = "disconnecting"


@dataclass
class SnConfig:
    """Tunables for one sensor node.

    ack_timeout_s defaults to two worst-case short-frame airtimes plus a
    one-second processing margin; the simulator recomputes it from the
    actual radio parameters (and doubles the airtime share when a relay
    is in the path).
    """

    ack_timeout_s: float = 5.0
    base_interval_s: float = 8.0
    backoff_cap_s: float = BACKOFF_CAP_S
    wake_idle_s: float = 1.0
    retries_enabled: bool = True
    max_retries: Optional[int] = None


class SensorNodeSM:
    """Event-driven sensor node: wakes on interrupts, never transmits
    spontaneously, and queues payloads arriving mid-session."""

    def __init__(self, address: int, config: SnConfig | None = None):
        self.address = address
        self.config = config or SnConfig()
        self.state = SnState.SLEEPING
        self.outbox: deque[tuple[int, bytes]] = deque()
        self.next_seq = 0
        self.retry = RetrySchedule(self.config.base_interval_s, 0, self.config.backoff_cap_s)
        self.req_sent = False
        self._last_data_seq = 0
        # counters for diagnostics
        self.delivered = 0
        self.abandoned = 0
        self.loss_backoffs = 0
        self.deny_backoffs = 0

    def on_event(self, event: Event, rng: random.Random) -> list[Action]:
        if isinstance(event, GasInterrupt):
            return self._on_gas(event.payload)
        if isinstance(event, FrameReceived):
            return self._on_frame(event.frame, rng)
        if isinstance(event, TimerFired):
            return self._on_timer(event.timer_id, rng)
        return []

    # -- helpers

    def _send_connect_req(self) -> list[Action]:
        seq = self.outbox[0][0]
        self.req_sent = True
        return [
            Transmit(make_connect_req(self.address, seq)),
            SetTimer(TIMER_RESPONSE, self.config.ack_timeout_s),
        ]

    def _send_head_data(self) -> list[Action]:
        seq, payload = self.outbox[0]
        self._last_data_seq = seq
        more = len(self.outbox) > 1
        return [
            Transmit(make_data(self.address, seq, payload, more)),
            SetTimer(TIMER_RESPONSE, self.config.ack_timeout_s),
        ]

    def _send_disconnect(self) -> list[Action]:
        self.state = SnState.DISCONNECTING
        return [Transmit(make_disconnect(self.address, self._last_data_seq))]

    def _wake_then_connect(self) -> list[Action]:
        self.state = SnState.CONNECTING
        self.req_sent = False
        if self.config.wake_idle_s > 0:
            return [WakePower(Mode.IDLE), SetTimer(TIMER_WAKE, self.config.wake_idle_s)]
        return [WakePower(Mode.ACTIVE)] + self._send_connect_req()

    def _enter_backoff(self, rng: random.Random, loss: bool) -> list[Action]:
        if loss:
            self.loss_backoffs += 1
        else:
            self.deny_backoffs += 1
        self.retry, delay = next_retry_delay(self.retry, rng)
        self.state = SnState.BACKOFF
        return [WakePower(Mode.SLEEP), SetTimer(TIMER_RETRY, delay)]

    def _go_to_sleep(self) -> list[Action]:
        self.state = SnState.SLEEPING
        self.retry = self.retry.reset()
        self.req_sent = False
        return [WakePower(Mode.SLEEP)]

    def _abandon_head(self) -> None:
        self.outbox.popleft()
        self.abandoned += 1
        self.retry = self.retry.reset()

    def _retries_exhausted(self) -> bool:
        limit = self.config.max_retries
        return limit is not None and self.retry.attempt >= limit

    # -- event handlers

    def _on_gas(self, payload: bytes) -> list[Action]:
        self.outbox.append((self.next_seq, payload))
        self.next_seq = (self.next_seq + 1) % SEQUENCE_MODULUS
        if self.state is SnState.SLEEPING:
            return self._wake_then_connect()
        return []

    def _on_frame(self, frame: Frame, rng: random.Random) -> list[Action]:
        if frame.source != self.address:
            return []
        kind = frame.kind
        if self.state is SnState.CONNECTING and self.req_sent:
            if kind == ControlFlags.CONNECT_ACCEPT:
                self.retry = self.retry.reset()
                self.state = SnState.AWAITING_ACK
                return self._send_head_data()
            if kind == ControlFlags.CONNECT_DENY:
                return [CancelTimer(TIMER_RESPONSE)] + self._enter_backoff(rng, loss=False)
        elif self.state is SnState.AWAITING_ACK and kind == ControlFlags.DATA_ACK:
            if self.outbox and frame.sequence == self.outbox[0][0]:
                self.outbox.popleft()
                self.delivered += 1
                self.retry = self.retry.reset()
                if self.outbox:
                    return self._send_head_data()
                return [CancelTimer(TIMER_RESPONSE)] + self._send_disconnect()
        return []

    def _on_timer(self, timer_id: str, rng: random.Random) -> list[Action]:
        if timer_id == TIMER_WAKE:
            if self.state is SnState.CONNECTING and not self.req_sent:
                return [WakePower(Mode.ACTIVE)] + self._send_connect_req()
            return []
        if timer_id == TIMER_RETRY:
            if self.state is SnState.BACKOFF:
                return self._wake_then_connect()
            return []
        if timer_id == TIMER_RESPONSE:
            return self._on_response_timeout(rng)
        if timer_id == TIMER_TXDONE:
            if self.state is SnState.DISCONNECTING:
                if self.outbox:
                    self.state = SnState.CONNECTING
                    return self._send_connect_req()
                return self._go_to_sleep()
            return []
        return []

    def _on_response_timeout(self, rng: random.Random) -> list[Action]:
        if self.state is SnState.CONNECTING:
            # Lost handshake: always retry; the payload has not had its
            # one data attempt yet.
            if self._retries_exhausted():
                self._abandon_head()
                if self.outbox:
                    return self._send_connect_req()
                return self._go_to_sleep()
            return self._enter_backoff(rng, loss=True)
        if self.state is SnState.AWAITING_ACK:
            if self.config.retries_enabled and not self._retries_exhausted():
                return self._enter_backoff(rng, loss=True)
            # One shot per payload: drop it and move on.  The gateway's
            # idle timeout is far above the ack timeout, so the session
            # is still open for the next frame.
            self._abandon_head()
            if self.outbox:
                return self._send_head_data()
            return self._send_disconnect()
        return []


def sn_on_event(
    sm: SensorNodeSM, event: Event, rng: random.Random
) -> tuple[SensorNodeSM, list[Action]]:
    """Drive a sensor node machine one event forward."""
    return sm, sm.on_event(event, rng)


# ---------------------------------------------------------------------------
# Gateway


@dataclass
class GwConfig:
    idle_timeout_s: float = 60.0
    dedupe_capacity: int = 1024
    topic_prefix: str = "gas"


class GatewaySM:
    """Single-connection gateway: accepts the first requester, denies the
    rest, acks every data frame, and forwards unseen measurements to the
    sink.  A duplicate (address, sequence) is acked but not re-delivered."""

    def __init__(self, config: GwConfig | None = None):
        self.address = GATEWAY_ADDRESS
        self.config = config or GwConfig()
        self.connected: Optional[int] = None
        self.last_activity_s = 0.0
        self._seen: OrderedDict[tuple[int, int], None] = OrderedDict()
        self.accepted = 0
        self.denied = 0
        self.idle_timeouts = 0

    def on_event(self, event: Event) -> list[Action]:
        if isinstance(event, FrameReceived):
            return self._on_frame(event.frame, event.at)
        if isinstance(event, Tick):
            return self._on_tick(event.at)
        return []

    def _unseen(self, key: tuple[int, int]) -> bool:
        if key in self._seen:
            self._seen.move_to_end(key)
            return False
        self._seen[key] = None
        if len(self._seen) > self.config.dedupe_capacity:
            self._seen.popitem(last=False)
        return True

    def _on_frame(self, frame: Frame, at: float) -> list[Action]:
        kind = frame.kind
        src = frame.source
        if kind == ControlFlags.CONNECT_REQ:
            if self.connected is None or self.connected == src:
                if self.connected is None:
                    self.accepted += 1
                self.connected = src
                self.last_activity_s = at
                return [Transmit(make_connect_accept(src, frame.sequence))]
            self.denied += 1
            return [Transmit(make_connect_deny(src, frame.sequence))]
        if kind == ControlFlags.DATA:
            if self.connected != src:
                return []
            self.last_activity_s = at
            actions: list[Action] = [Transmit(make_data_ack(src, frame.sequence))]
            if self._unseen((src, frame.sequence)):
                record = MeasurementRecord(
                    node=src,
                    sequence=frame.sequence,
                    sim_time_s=at,
                    payload=frame.payload,
                    topic="{}/{:02x}".format(self.config.topic_prefix, src),
                )
                actions.append(DeliverToSink(record))
            return actions
        if kind == ControlFlags.DISCONNECT:
            if self.connected == src:
                self.connected = None
            return []
        return []

    def _on_tick(self, at: float) -> list[Action]:
        if self.connected is not None and at - self.last_activity_s > self.config.idle_timeout_s:
            self.connected = None
            self.idle_timeouts += 1
        return []


def gw_on_event(sm: GatewaySM, event: Event) -> tuple[GatewaySM, list[Action]]:
    """Drive the gateway machine one event forward."""
    return sm, sm.on_event(event)


# ---------------------------------------------------------------------------
# Relay


class RelaySM:
    """Store-and-forward repeater: re-emits any frame it has not already
    forwarded, marking the copy so it is never forwarded twice."""

    def __init__(self, address: int = RELAY_ADDRESS, enabled: bool = True):
        self.address = address
        self.enabled = enabled
        self.forwarded = 0

    def on_frame(self, frame: Frame, heard_from_direction: str = UPLINK) -> list[Action]:
        if not self.enabled or frame.relayed:
            return []
        self.forwarded += 1
        return [Transmit(frame.with_relayed())]


def relay_on_frame(
    sm: RelaySM, frame: Frame, heard_from_direction: str = UPLINK
) -> tuple[RelaySM, list[Action]]:
    """Drive the relay machine with one overheard frame."""
    return sm, sm.on_frame(frame, heard_from_direction)
