"""Frame encoding and decoding for the connection-based upper layer protocol.

On-wire layout (radio payload, no extra framing):

    | Offset | Size | Field    |
    |--------|------|----------|
    | 0      | 1    | control  |
    | 1      | 1    | address  |
    | 2      | 2    | sequence (uint16 BE) |
    | 4      | N    | payload  |

Control byte (bitfield):
- Bit 0 (0x01): CONNECT_REQ   - open a connection
- Bit 1 (0x02): CONNECT_ACCEPT - connection accepted
- Bit 2 (0x04): CONNECT_DENY  - connection denied
- Bit 3 (0x08): DATA          - measurement payload
- Bit 4 (0x10): DATA_ACK      - per-message acknowledgement
- Bit 5 (0x20): MORE_MESSAGES - further data frames will follow (DATA only)
- Bit 6 (0x40): DISCONNECT    - close the connection
- Bit 7 (0x80): RELAYED       - frame was forwarded by the relay

Exactly one of {CONNECT_REQ, CONNECT_ACCEPT, CONNECT_DENY, DATA, DATA_ACK,
DISCONNECT} (the "kind" group) must be set.  MORE_MESSAGES is legal only on
DATA frames.  RELAYED may accompany any kind.

The address byte always identifies the sensor node the exchange concerns:
the transmitter for uplink frames, the addressee for gateway-originated
frames.  DATA_ACK carries the acknowledged sequence as a 2-byte payload;
all other control kinds carry no payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntFlag


class ControlFlags(IntFlag):
    """Control byte bit assignments."""

    CONNECT_REQ = 0x01
    CONNECT_ACCEPT = 0x02
    CONNECT_DENY = 0x04
    DATA = 0x08
    DATA_ACK = 0x10
    MORE_MESSAGES = 0x20
    DISCONNECT = 0x40
    RELAYED = 0x80


KIND_MASK = (
    ControlFlags.CONNECT_REQ
    | ControlFlags.CONNECT_ACCEPT
    | ControlFlags.CONNECT_DENY
    | ControlFlags.DATA
    | ControlFlags.DATA_ACK
    | ControlFlags.DISCONNECT
)

# Address plan: one byte, gateway fixed, relay fixed, 0xFF never valid.
GATEWAY_ADDRESS = 0x00
SENSOR_ADDRESS_MIN = 0x01
SENSOR_ADDRESS_MAX = 0xFD
RELAY_ADDRESS = 0xFE
RESERVED_ADDRESS = 0xFF

HEADER_SIZE = 4
# Cap so the full frame fits a 252-byte radio MTU with margin below the
# SX1276-class 255-byte FIFO.
MAX_PAYLOAD = 248
MAX_FRAME = HEADER_SIZE + MAX_PAYLOAD

SEQUENCE_MODULUS = 1 << 16


class FrameError(ValueError):
    """Raised when a frame violates the wire contract."""


def is_valid_address(addr: int) -> bool:
    """Check whether *addr* is usable as a frame address byte."""
    return 0 <= addr < RESERVED_ADDRESS


def _validate_control(control: int) -> ControlFlags:
    flags = ControlFlags(control)
    kind_bits = flags & KIND_MASK
    if bin(kind_bits).count("1") != 1:
        raise FrameError(
            "invalid flags: control byte 0x{:02X} must set exactly one kind bit".format(control)
        )
    if ControlFlags.MORE_MESSAGES in flags and kind_bits != ControlFlags.DATA:
        raise FrameError(
            "invalid flags: MORE_MESSAGES is only legal on DATA frames (control 0x{:02X})".format(control)
        )
    return flags


def _validate_payload(kind: ControlFlags, payload: bytes) -> None:
    if len(payload) > MAX_PAYLOAD:
        raise FrameError(
            "payload too long: {} bytes exceeds max {}".format(len(payload), MAX_PAYLOAD)
        )
    if kind == ControlFlags.DATA:
        if len(payload) < 1:
            raise FrameError("invalid payload: DATA frames need at least 1 byte")
    elif kind == ControlFlags.DATA_ACK:
        if len(payload) != 2:
            raise FrameError(
                "invalid payload: DATA_ACK carries the 2-byte acknowledged sequence, got {} bytes".format(len(payload))
            )
    elif payload:
        raise FrameError(
            "invalid payload: {} frames carry no payload, got {} bytes".format(kind.name, len(payload))
        )


@dataclass(frozen=True)
class Frame:
    """One over-the-air protocol frame."""

    control: ControlFlags
    source: int
    sequence: int
    payload: bytes = field(default=b"")

    @property
    def kind(self) -> ControlFlags:
        """The frame's single kind bit."""
        return self.control & KIND_MASK

    @property
    def relayed(self) -> bool:
        return bool(self.control & ControlFlags.RELAYED)

    def with_relayed(self) -> "Frame":
        """Copy of this frame with the RELAYED flag set."""
        return Frame(self.control | ControlFlags.RELAYED, self.source, self.sequence, self.payload)

    def validate(self) -> None:
        """Raise FrameError unless every frame invariant holds."""
        _validate_control(int(self.control))
        if not is_valid_address(self.source):
            raise FrameError("reserved address: 0x{:02X}".format(self.source))
        if not 0 <= self.sequence < SEQUENCE_MODULUS:
            raise FrameError("sequence {} out of uint16 range".format(self.sequence))
        _validate_payload(self.kind, self.payload)

    def __repr__(self) -> str:
        extra = ""
        if self.control & ControlFlags.MORE_MESSAGES:
            extra += "|MM"
        if self.relayed:
            extra += "|RLY"
        return "Frame({}{} src=0x{:02X} seq={} payload={}B)".format(
            self.kind.name, extra, self.source, self.sequence, len(self.payload)
        )


def encode(frame: Frame) -> bytes:
    """Serialize *frame* to its wire bytes.

    Raises:
        FrameError: If the frame violates any invariant (kind group,
            MORE_MESSAGES placement, address, sequence range, payload rules).
    """
    frame.validate()
    return (
        bytes([int(frame.control), frame.source])
        + frame.sequence.to_bytes(2, "big")
        + frame.payload
    )


def decode(data: bytes) -> Frame:
    """Parse wire bytes into a Frame; exact inverse of encode on its image.

    Raises:
        FrameError: On short input, an invalid control byte, a reserved
            address, or a payload that is illegal for the frame kind.
    """
    if len(data) < HEADER_SIZE:
        raise FrameError("too short: {} bytes, header needs {}".format(len(data), HEADER_SIZE))
    if len(data) > MAX_FRAME:
        raise FrameError("payload too long: frame is {} bytes, max {}".format(len(data), MAX_FRAME))
    flags = _validate_control(data[0])
    source = data[1]
    if source == RESERVED_ADDRESS:
        raise FrameError("reserved address: 0x{:02X}".format(source))
    sequence = int.from_bytes(data[2:4], "big")
    payload = bytes(data[4:])
    _validate_payload(flags & KIND_MASK, payload)
    return Frame(flags, source, sequence, payload)


def make_connect_req(source: int, sequence: int) -> Frame:
    return Frame(ControlFlags.CONNECT_REQ, source, sequence)


def make_connect_accept(source: int, sequence: int) -> Frame:
    return Frame(ControlFlags.CONNECT_ACCEPT, source, sequence)


def make_connect_deny(source: int, sequence: int) -> Frame:
    return Frame(ControlFlags.CONNECT_DENY, source, sequence)


def make_data(source: int, sequence: int, payload: bytes, more: bool = False) -> Frame:
    flags = ControlFlags.DATA
    if more:
        flags |= ControlFlags.MORE_MESSAGES
    return Frame(flags, source, sequence, payload)


def make_data_ack(source: int, sequence: int) -> Frame:
    return Frame(ControlFlags.DATA_ACK, source, sequence, sequence.to_bytes(2, "big"))


def make_disconnect(source: int, sequence: int) -> Frame:
    return Frame(ControlFlags.DISCONNECT, source, sequence)
