"""Classical header/trailer of the hybrid quantum frame, as a modified LLDPDU.

Wire layout (all integers big-endian)::

    +----------------+----------------+-----------+
    | dest addr (6)  | src addr (6)   | 0x88CC (2)|
    +----------------+----------------+-----------+
    | TLV: 7-bit type | 9-bit length | value ...   |  repeated
    +----------------------------------------------+
    | End of LLDPDU: 0x0000                        |
    +----------------------------------------------+

Header frames carry, in order: Chassis ID (type 1, subtype 4 + src addr),
Port ID (type 2, subtype 3 + src addr), TTL (type 3, 2 octets), then
organizationally specific TLVs (type 127, OUI 00-00-00) with subtype:

    1  role flag                    1 octet  (0 header, 1 trailer)
    2  QDU descriptor               8 octets (payload_len:2, encoding:1,
                                              emission_period:4, multiplexing:1)
    3  elapsed memory time (ns)     8 octets
    4  max cut-off time (ns)        8 octets (0 = no cut-off)
    5  QEC protocol id              1 octet  (0 = none)
    6  guard time (ns)              4 octets

A trailer frame is the minimal LLDPDU: addresses, the role TLV set to
trailer, and End. Unrecognised TLVs are kept in ``FrameHeader.extra_tlvs``
and re-emitted just before End.
"""

from __future__ import annotations

import dataclasses
import struct
from dataclasses import dataclass, field
from enum import IntEnum

ETHERTYPE_LLDP = 0x88CC
OUI_EXPERIMENTAL = b"\x00\x00\x00"
ETH_HEADER_LEN = 14
MAX_TLV_VALUE = 0x1FF

CHASSIS_SUBTYPE_MAC = 4
PORT_SUBTYPE_MAC = 3

ENCODING_BB84 = 0
ENCODING_EPR_HALF = 1
MUX_TDM = 0
MUX_WDM = 1


class TlvType(IntEnum):
    END = 0
    CHASSIS_ID = 1
    PORT_ID = 2
    TTL = 3
    ORG_SPECIFIC = 127


class QuantumSubtype(IntEnum):
    ROLE = 1
    QDU = 2
    ELAPSED_MEMORY = 3
    MAX_CUTOFF = 4
    QEC_PROTOCOL = 5
    GUARD_TIME = 6


class Role(IntEnum):
    HEADER = 0
    TRAILER = 1


_QDU = struct.Struct(">HBIB")
_QUANTUM_WIDTH = {
    QuantumSubtype.ROLE: 1,
    QuantumSubtype.QDU: _QDU.size,
    QuantumSubtype.ELAPSED_MEMORY: 8,
    QuantumSubtype.MAX_CUTOFF: 8,
    QuantumSubtype.QEC_PROTOCOL: 1,
    QuantumSubtype.GUARD_TIME: 4,
}


class FrameError(ValueError):
    """Base class for codec failures."""


class FrameEncodeError(FrameError):
    """A field does not fit its wire width or the header is inconsistent."""


class FrameDecodeError(FrameError):
    """Structured parse failure; ``offset`` is the octet where it was detected."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class TruncatedFrameError(FrameDecodeError):
    pass


class BadEtherTypeError(FrameDecodeError):
    pass


class MissingTlvError(FrameDecodeError):
    def __init__(self, tlv: str, offset: int):
        super().__init__(f"mandatory TLV missing: {tlv}", offset)
        self.tlv = tlv


class MalformedTlvError(FrameDecodeError):
    pass


@dataclass(frozen=True)
class QduDescriptor:
    """Shape of the quantum payload that follows the header."""

    payload_len: int
    encoding_scheme: int = ENCODING_BB84
    emission_period: int = 1
    multiplexing: int = MUX_TDM

    @property
    def duration(self) -> int:
        """Temporal length of the payload in ns."""
        return self.payload_len * self.emission_period


@dataclass(frozen=True)
class RawTlv:
    """A TLV the decoder did not interpret; ``value`` is the raw value field."""

    tlv_type: int
    value: bytes


@dataclass(frozen=True)
class FrameHeader:
    dest_addr: bytes
    src_addr: bytes
    role: Role = Role.HEADER
    qdu: QduDescriptor | None = None
    guard_time: int = 0
    elapsed_memory_time: int = 0
    max_cutoff_time: int = 0
    qec_protocol: int = 0
    ttl: int = 0
    extra_tlvs: tuple[RawTlv, ...] = field(default=())

    @property
    def is_expired(self) -> bool:
        """True once the payload has spent longer in memory than the cut-off allows."""
        return self.max_cutoff_time > 0 and self.elapsed_memory_time > self.max_cutoff_time

    def trailer(self) -> FrameHeader:
        """The matching trailer: same addresses, role set to trailer, nothing else."""
        return FrameHeader(dest_addr=self.dest_addr, src_addr=self.src_addr, role=Role.TRAILER)


def bump_elapsed_memory(header: FrameHeader, delta: int) -> FrameHeader:
    """Account ``delta`` ns of storage; check ``is_expired`` on the result."""
    if delta < 0:
        raise ValueError(f"storage increment must be non-negative, got {delta}")
    if delta == 0:
        return header
    return dataclasses.replace(header, elapsed_memory_time=header.elapsed_memory_time + delta)


def parse_mac(text: str) -> bytes:
    """``aa:bb:cc:dd:ee:ff`` (or ``-`` separated) to 6 octets."""
    parts = text.replace("-", ":").split(":")
    if len(parts) != 6:
        raise ValueError(f"not a 6-octet address: {text!r}")
    return bytes(int(p, 16) for p in parts)


def format_mac(addr: bytes) -> str:
    return ":".join(f"{b:02x}" for b in addr)


# --- encoding ---------------------------------------------------------------


def _uint(value: int, width: int, name: str) -> bytes:
    if not isinstance(value, int) or isinstance(value, bool):
        raise FrameEncodeError(f"{name} must be an integer, got {value!r}")
    if not 0 <= value < 1 << (8 * width):
        raise FrameEncodeError(f"{name}={value} does not fit in {width} octets")
    return value.to_bytes(width, "big")


def _tlv(tlv_type: int, value: bytes) -> bytes:
    if len(value) > MAX_TLV_VALUE:
        raise FrameEncodeError(f"TLV type {tlv_type} value too long ({len(value)} octets)")
    return ((tlv_type << 9) | len(value)).to_bytes(2, "big") + value


def _quantum_tlv(subtype: QuantumSubtype, value: bytes) -> bytes:
    return _tlv(TlvType.ORG_SPECIFIC, OUI_EXPERIMENTAL + bytes([subtype]) + value)


def _check_addr(addr: bytes, name: str) -> bytes:
    if not isinstance(addr, (bytes, bytearray)) or len(addr) != 6:
        raise FrameEncodeError(f"{name} must be 6 octets")
    return bytes(addr)


def encode(header: FrameHeader) -> bytes:
    """Serialise a header or trailer frame to octets."""
    dest = _check_addr(header.dest_addr, "dest_addr")
    src = _check_addr(header.src_addr, "src_addr")
    out = [dest, src, ETHERTYPE_LLDP.to_bytes(2, "big")]

    if header.role == Role.TRAILER:
        if header != dataclasses.replace(header.trailer(), extra_tlvs=header.extra_tlvs):
            raise FrameEncodeError("trailer frames carry only addresses and the role flag")
        out.append(_quantum_tlv(QuantumSubtype.ROLE, bytes([Role.TRAILER])))
    elif header.role == Role.HEADER:
        qdu = header.qdu
        if qdu is None:
            raise FrameEncodeError("header frames need a QDU descriptor")
        if qdu.payload_len < 1 or qdu.emission_period < 1:
            raise FrameEncodeError("QDU needs payload_len >= 1 and emission_period > 0")
        try:
            qdu_bytes = _QDU.pack(qdu.payload_len, qdu.encoding_scheme, qdu.emission_period, qdu.multiplexing)
        except struct.error as exc:
            raise FrameEncodeError(f"QDU field out of range: {exc}") from None
        out += [
            _tlv(TlvType.CHASSIS_ID, bytes([CHASSIS_SUBTYPE_MAC]) + src),
            _tlv(TlvType.PORT_ID, bytes([PORT_SUBTYPE_MAC]) + src),
            _tlv(TlvType.TTL, _uint(header.ttl, 2, "ttl")),
            _quantum_tlv(QuantumSubtype.ROLE, bytes([Role.HEADER])),
            _quantum_tlv(QuantumSubtype.QDU, qdu_bytes),
            _quantum_tlv(QuantumSubtype.ELAPSED_MEMORY, _uint(header.elapsed_memory_time, 8, "elapsed_memory_time")),
            _quantum_tlv(QuantumSubtype.MAX_CUTOFF, _uint(header.max_cutoff_time, 8, "max_cutoff_time")),
            _quantum_tlv(QuantumSubtype.QEC_PROTOCOL, _uint(header.qec_protocol, 1, "qec_protocol")),
            _quantum_tlv(QuantumSubtype.GUARD_TIME, _uint(header.guard_time, 4, "guard_time")),
        ]
    else:
        raise FrameEncodeError(f"unknown role {header.role!r}")

    for raw in header.extra_tlvs:
        if not 4 <= raw.tlv_type <= 127 or _is_quantum(raw.tlv_type, raw.value):
            raise FrameEncodeError(f"extra TLV type {raw.tlv_type} collides with a field the codec owns")
        out.append(_tlv(raw.tlv_type, bytes(raw.value)))
    out.append(_tlv(TlvType.END, b""))
    return b"".join(out)


def encoded_length(header: FrameHeader) -> int:
    """Octet count of ``encode(header)``, computed from the TLV sizes alone."""
    if header.role == Role.TRAILER:
        tlv_values = [4 + 1]
    else:
        tlv_values = [7, 7, 2] + [4 + w for w in _QUANTUM_WIDTH.values()]
    tlv_values += [len(raw.value) for raw in header.extra_tlvs]
    tlv_values.append(0)
    return ETH_HEADER_LEN + sum(2 + n for n in tlv_values)


# --- decoding ---------------------------------------------------------------


def _is_quantum(tlv_type: int, value: bytes) -> bool:
    return (
        tlv_type == TlvType.ORG_SPECIFIC
        and len(value) >= 4
        and value[:3] == OUI_EXPERIMENTAL
        and value[3] in _QUANTUM_WIDTH.keys()
    )


def _split_tlvs(data: bytes) -> tuple[list[tuple[int, int, bytes]], int]:
    """Return ``[(offset, type, value)]`` up to (excluding) End, and End's offset."""
    tlvs = []
    pos = ETH_HEADER_LEN
    while True:
        if pos == len(data):
            raise MissingTlvError("End of LLDPDU", pos)
        if pos + 2 > len(data):
            raise TruncatedFrameError("truncated TLV header", pos)
        prefix = int.from_bytes(data[pos : pos + 2], "big")
        tlv_type, length = prefix >> 9, prefix & MAX_TLV_VALUE
        if pos + 2 + length > len(data):
            raise TruncatedFrameError(
                f"TLV type {tlv_type} declares {length} octets but only {len(data) - pos - 2} remain", pos
            )
        if tlv_type == TlvType.END:
            if length != 0:
                raise MalformedTlvError(f"End TLV with non-zero length {length}", pos)
            if pos + 2 != len(data):
                raise MalformedTlvError(f"{len(data) - pos - 2} octets after End TLV", pos + 2)
            return tlvs, pos
        tlvs.append((pos, tlv_type, data[pos + 2 : pos + 2 + length]))
        pos += 2 + length


def decode(data: bytes) -> FrameHeader:
    """Strict parse of a frame produced by :func:`encode`.

    Raises:
        TruncatedFrameError: input ends inside the Ethernet header or a TLV.
        BadEtherTypeError: EtherType is not LLDP.
        MissingTlvError: End, role, or a TLV mandatory for header frames is absent.
        MalformedTlvError: a known TLV has the wrong size, value, or repeats.
    """
    data = bytes(data)
    for start, end, what in ((0, 6, "destination address"), (6, 12, "source address"), (12, 14, "EtherType")):
        if len(data) < end:
            raise TruncatedFrameError(f"truncated {what}", start)
    ethertype = int.from_bytes(data[12:14], "big")
    if ethertype != ETHERTYPE_LLDP:
        raise BadEtherTypeError(f"EtherType 0x{ethertype:04x} is not LLDP", 12)
    dest, src = data[0:6], data[6:12]
    tlvs, end_offset = _split_tlvs(data)

    std: dict[int, tuple[int, bytes]] = {}
    quantum: dict[QuantumSubtype, tuple[int, bytes]] = {}
    extras: list[RawTlv] = []
    for offset, tlv_type, value in tlvs:
        if tlv_type in (TlvType.CHASSIS_ID, TlvType.PORT_ID, TlvType.TTL):
            if tlv_type in std:
                raise MalformedTlvError(f"duplicate TLV type {tlv_type}", offset)
            std[tlv_type] = (offset, value)
        elif _is_quantum(tlv_type, value):
            subtype = QuantumSubtype(value[3])
            if subtype in quantum:
                raise MalformedTlvError(f"duplicate quantum TLV subtype {subtype.name}", offset)
            body = value[4:]
            if len(body) != _QUANTUM_WIDTH[subtype]:
                raise MalformedTlvError(
                    f"quantum TLV {subtype.name} has {len(body)} octets, expected {_QUANTUM_WIDTH[subtype]}", offset
                )
            quantum[subtype] = (offset, body)
        else:
            extras.append(RawTlv(tlv_type, value))

    if QuantumSubtype.ROLE not in quantum:
        raise MissingTlvError("role", end_offset)
    role_offset, role_body = quantum[QuantumSubtype.ROLE]
    if role_body[0] not in (Role.HEADER, Role.TRAILER):
        raise MalformedTlvError(f"role flag {role_body[0]} is neither header nor trailer", role_offset)
    role = Role(role_body[0])

    if role == Role.TRAILER:
        stray = [o for o, _ in std.values()] + [o for s, (o, _) in quantum.items() if s != QuantumSubtype.ROLE]
        if stray:
            raise MalformedTlvError("trailer frame carries header-only TLVs", min(stray))
        return FrameHeader(dest_addr=dest, src_addr=src, role=role, extra_tlvs=tuple(extras))

    for tlv_type, name in ((TlvType.CHASSIS_ID, "Chassis ID"), (TlvType.PORT_ID, "Port ID"), (TlvType.TTL, "TTL")):
        if tlv_type not in std:
            raise MissingTlvError(name, end_offset)
    for subtype in QuantumSubtype:
        if subtype not in quantum:
            raise MissingTlvError(subtype.name, end_offset)

    for tlv_type, subtype_id in ((TlvType.CHASSIS_ID, CHASSIS_SUBTYPE_MAC), (TlvType.PORT_ID, PORT_SUBTYPE_MAC)):
        offset, value = std[tlv_type]
        if value != bytes([subtype_id]) + src:
            raise MalformedTlvError(f"TLV type {tlv_type} does not name the source address", offset)
    ttl_offset, ttl_value = std[TlvType.TTL]
    if len(ttl_value) != 2:
        raise MalformedTlvError(f"TTL has {len(ttl_value)} octets, expected 2", ttl_offset)

    qdu_offset, qdu_body = quantum[QuantumSubtype.QDU]
    qdu = QduDescriptor(*_QDU.unpack(qdu_body))
    if qdu.payload_len < 1 or qdu.emission_period < 1:
        raise MalformedTlvError("QDU needs payload_len >= 1 and emission_period > 0", qdu_offset)

    def field_int(subtype: QuantumSubtype) -> int:
        return int.from_bytes(quantum[subtype][1], "big")

    return FrameHeader(
        dest_addr=dest,
        src_addr=src,
        role=role,
        qdu=qdu,
        guard_time=field_int(QuantumSubtype.GUARD_TIME),
        elapsed_memory_time=field_int(QuantumSubtype.ELAPSED_MEMORY),
        max_cutoff_time=field_int(QuantumSubtype.MAX_CUTOFF),
        qec_protocol=field_int(QuantumSubtype.QEC_PROTOCOL),
        ttl=int.from_bytes(ttl_value, "big"),
        extra_tlvs=tuple(extras),
    )
