"""Protocol messages and their binary frame encoding.

Frame layout (big-endian)::

    magic "GCRS" | version u8 | kind u8 | src u32 | dst u32 | seq u32
    | sent_at u64 | payload_len u32 | payload

Payload layouts are listed in docs/protocol.md.
"""

from __future__ import annotations

import struct
from dataclasses import astuple, dataclass
from enum import IntEnum
from typing import ClassVar, Optional, Union

from .spectrum import FrequencyBand
from .uclt import AvailabilityWindow, NetworkRecord, PermissionMode, PermissionSet

MAGIC = b"GCRS"
VERSION = 1
MAX_PAYLOAD = 64 * 1024
NONE_ID = 0xFFFFFFFF

_HEADER = struct.Struct("!4sBBIIIQI")
HEADER_LEN = _HEADER.size


class MessageKind(IntEnum):
    SPECTRUM_QUERY = 1
    SPECTRUM_RESPONSE = 2
    UCLT_UPDATE = 3
    PROBE_REQUEST = 4
    STATUS_REPORT = 5
    LEASE_GRANT = 6
    LEASE_REVOKE = 7
    HAND_OVER_DIRECTIVE = 8


class AccessMode(IntEnum):
    OPPORTUNISTIC = 0
    DYNAMIC = 1


class ResponseStatus(IntEnum):
    GRANTED = 0
    NO_SPECTRUM = 1
    PROTOCOL_ERROR = 2
    IDLE_REGION_FOUND = 3


class RevokeReason(IntEnum):
    PRIMARY_RETURN = 0
    EXPIRED = 1


class FrameError(ValueError):
    """Base class for frames that cannot be decoded."""


class TruncatedFrame(FrameError):
    pass


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class BadLength(FrameError):
    pass


class UnknownKind(FrameError):
    pass


class BadPayload(FrameError):
    pass


class EncodeError(ValueError):
    pass


class _Fixed:
    """Mixin for payloads that pack as a single fixed struct of their fields."""

    kind: ClassVar[MessageKind]
    _struct: ClassVar[struct.Struct]
    _enums: ClassVar[dict] = {}

    def to_bytes(self) -> bytes:
        try:
            return self._struct.pack(*(int(v) for v in astuple(self)))
        except struct.error as exc:
            raise EncodeError(f"{type(self).__name__}: {exc}") from exc

    @classmethod
    def from_bytes(cls, data: bytes):
        if len(data) != cls._struct.size:
            raise BadPayload(f"{cls.__name__} payload is {len(data)} bytes, "
                             f"expected {cls._struct.size}")
        values = list(cls._struct.unpack(data))
        names = list(cls.__dataclass_fields__)
        for i, name in enumerate(names):
            enum = cls._enums.get(name)
            if enum is not None:
                try:
                    values[i] = enum(values[i])
                except ValueError as exc:
                    raise BadPayload(f"{cls.__name__}.{name}: {exc}") from exc
        return cls(*values)


class _HasBand:
    band_low: int
    band_high: int

    @property
    def band(self) -> Optional[FrequencyBand]:
        if self.band_low == self.band_high == 0:
            return None
        return FrequencyBand(self.band_low, self.band_high)


@dataclass(frozen=True)
class SpectrumQuery(_Fixed):
    requester: int
    width_hz: int
    min_duration: int
    lease_duration: int
    mode: AccessMode = AccessMode.DYNAMIC

    kind: ClassVar = MessageKind.SPECTRUM_QUERY
    _struct: ClassVar = struct.Struct("!IQIIB")
    _enums: ClassVar = {"mode": AccessMode}


@dataclass(frozen=True)
class SpectrumResponse(_Fixed, _HasBand):
    requester: int
    query_seq: int
    status: ResponseStatus
    lease_id: int = NONE_ID
    lessor: int = NONE_ID
    band_low: int = 0
    band_high: int = 0
    expires_at: int = 0
    idle_region: int = NONE_ID
    mode: AccessMode = AccessMode.DYNAMIC

    kind: ClassVar = MessageKind.SPECTRUM_RESPONSE
    _struct: ClassVar = struct.Struct("!IIBIIQQQIB")
    _enums: ClassVar = {"status": ResponseStatus, "mode": AccessMode}


@dataclass(frozen=True)
class UcltUpdate:
    """Carries one whole network record."""

    record: NetworkRecord

    kind: ClassVar = MessageKind.UCLT_UPDATE
    _head: ClassVar = struct.Struct("!IIQQB")
    _count: ClassVar = struct.Struct("!H")
    _id: ClassVar = struct.Struct("!I")
    _band: ClassVar = struct.Struct("!QQ")

    def to_bytes(self) -> bytes:
        r = self.record
        try:
            parts = [self._head.pack(r.network_id, r.region_id, r.availability.start,
                                     r.availability.until, int(r.permissions.mode))]
            allowed = sorted(r.permissions.allowed)
            parts.append(self._count.pack(len(allowed)))
            parts.extend(self._id.pack(a) for a in allowed)
            for bands in (r.occupied_bands, r.idle_bands):
                parts.append(self._count.pack(len(bands)))
                parts.extend(self._band.pack(b.low_hz, b.high_hz) for b in bands)
        except struct.error as exc:
            raise EncodeError(f"UcltUpdate: {exc}") from exc
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "UcltUpdate":
        view = memoryview(data)
        pos = 0

        def take(st: struct.Struct):
            nonlocal pos
            if pos + st.size > len(view):
                raise BadPayload("UcltUpdate payload truncated")
            out = st.unpack_from(view, pos)
            pos += st.size
            return out

        try:
            nid, region, start, until, mode = take(cls._head)
            (n,) = take(cls._count)
            allowed = frozenset(take(cls._id)[0] for _ in range(n))
            band_sets = []
            for _ in range(2):
                (n,) = take(cls._count)
                band_sets.append(tuple(FrequencyBand(*take(cls._band)) for _ in range(n)))
            if pos != len(view):
                raise BadPayload("UcltUpdate payload has trailing bytes")
            record = NetworkRecord(
                network_id=nid,
                region_id=region,
                occupied_bands=band_sets[0],
                idle_bands=band_sets[1],
                permissions=PermissionSet(PermissionMode(mode), allowed),
                availability=AvailabilityWindow(start, until),
            )
        except BadPayload:
            raise
        except ValueError as exc:
            raise BadPayload(f"UcltUpdate: {exc}") from exc
        return cls(record)


@dataclass(frozen=True)
class ProbeRequest(_Fixed):
    requester: int
    region: int
    query_seq: int

    kind: ClassVar = MessageKind.PROBE_REQUEST
    _struct: ClassVar = struct.Struct("!III")


@dataclass(frozen=True)
class StatusReport(_Fixed):
    region: int
    network: int
    idle: bool
    query_seq: int

    kind: ClassVar = MessageKind.STATUS_REPORT
    _struct: ClassVar = struct.Struct("!IIBI")
    _enums: ClassVar = {"idle": bool}

    @classmethod
    def from_bytes(cls, data: bytes):
        if len(data) == cls._struct.size and data[8] > 1:
            raise BadPayload("StatusReport.idle must be 0 or 1")
        return super().from_bytes(data)


@dataclass(frozen=True)
class LeaseGrant(_Fixed, _HasBand):
    lease_id: int
    lessor: int
    lessee: int
    band_low: int
    band_high: int
    granted_at: int
    expires_at: int
    mode: AccessMode

    kind: ClassVar = MessageKind.LEASE_GRANT
    _struct: ClassVar = struct.Struct("!IIIQQQQB")
    _enums: ClassVar = {"mode": AccessMode}


@dataclass(frozen=True)
class LeaseRevoke(_Fixed, _HasBand):
    lease_id: int
    lessor: int
    lessee: int
    band_low: int
    band_high: int
    reason: RevokeReason

    kind: ClassVar = MessageKind.LEASE_REVOKE
    _struct: ClassVar = struct.Struct("!IIIQQB")
    _enums: ClassVar = {"reason": RevokeReason}


@dataclass(frozen=True)
class HandOverDirective(_Fixed):
    from_sat: int
    to_entity: int
    region: int
    effective_at: int

    kind: ClassVar = MessageKind.HAND_OVER_DIRECTIVE
    _struct: ClassVar = struct.Struct("!IIIQ")


Payload = Union[SpectrumQuery, SpectrumResponse, UcltUpdate, ProbeRequest, StatusReport,
                LeaseGrant, LeaseRevoke, HandOverDirective]

PAYLOAD_TYPES = {cls.kind: cls for cls in (
    SpectrumQuery, SpectrumResponse, UcltUpdate, ProbeRequest, StatusReport,
    LeaseGrant, LeaseRevoke, HandOverDirective)}


@dataclass(frozen=True)
class WireMessage:
    src: int
    dst: int
    seq: int
    sent_at: int
    payload: Payload

    @property
    def kind(self) -> MessageKind:
        return self.payload.kind


def encode_frame(m: WireMessage) -> bytes:
    body = m.payload.to_bytes()
    if len(body) > MAX_PAYLOAD:
        raise EncodeError(f"payload of {len(body)} bytes exceeds {MAX_PAYLOAD}")
    try:
        head = _HEADER.pack(MAGIC, VERSION, int(m.kind), m.src, m.dst, m.seq, m.sent_at, len(body))
    except struct.error as exc:
        raise EncodeError(f"header field out of range: {exc}") from exc
    return head + body


def decode_frame(data: bytes) -> WireMessage:
    if len(data) < HEADER_LEN:
        raise TruncatedFrame(f"frame of {len(data)} bytes is shorter than the {HEADER_LEN}-byte header")
    magic, version, kind, src, dst, seq, sent_at, payload_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    if payload_len > MAX_PAYLOAD:
        raise BadLength(f"declared payload length {payload_len} exceeds {MAX_PAYLOAD}")
    if len(data) < HEADER_LEN + payload_len:
        raise TruncatedFrame(f"payload truncated: have {len(data) - HEADER_LEN}, need {payload_len}")
    if len(data) > HEADER_LEN + payload_len:
        raise BadLength(f"{len(data) - HEADER_LEN - payload_len} trailing bytes after payload")
    try:
        cls = PAYLOAD_TYPES[MessageKind(kind)]
    except ValueError:
        raise UnknownKind(f"unknown message kind {kind:#04x}") from None
    payload = cls.from_bytes(bytes(data[HEADER_LEN:]))
    return WireMessage(src=src, dst=dst, seq=seq, sent_at=sent_at, payload=payload)
