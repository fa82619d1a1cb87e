"""Advertisement protocol: key derivation and the 17-byte wire codec.

Authorized drones periodically broadcast identity, quantized GPS position
and an 8-bit verification key in a compact packet that fits a legacy BLE
advertising payload (31 bytes).  The key is a weighted sum of the integer
fields actually transmitted, reduced by a modulus; the weights are the
secret shared by authorized drones, so any verifier can recompute the key
bit-for-bit from the fields it decodes.

Wire layout, big-endian, 17 bytes total:

    offset  size  field
    0       1     magic 0xD5
    1       2     drone_id  u16
    3       4     lat_q     i32  degrees x 1e4
    7       4     lon_q     i32  degrees x 1e4
    11      2     alt_q     i16  meters
    13      2     seq       u16  wrapping broadcast counter
    15      1     key       u8
    16      1     crc       CRC-8 over bytes 0..15 (poly 0x07, init 0x00)

The hex form used by the CLI is the uppercase 34-character hex encoding of
these bytes, no separators.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = 0xD5
PACKET_LEN = 17

LAT_SCALE = 10_000
LON_SCALE = 10_000
LAT_Q_MAX = 900_000
LON_Q_MAX = 1_800_000
ALT_Q_MAX = 32_767

_BODY = struct.Struct(">BHiihHB")  # magic, drone_id, lat_q, lon_q, alt_q, seq, key
assert _BODY.size == PACKET_LEN - 1


class PacketError(ValueError):
    """A byte string or field set is not a valid advertisement packet."""


class TruncatedPacketError(PacketError):
    """Encoded packet does not have the exact wire length."""


class BadMagicError(PacketError):
    """First byte is not the 0xD5 marker."""


class CrcMismatchError(PacketError):
    """Checksum over bytes 0..15 does not match byte 16."""


class FieldRangeError(PacketError):
    """A field value lies outside its allowed range."""


def _build_crc_table(poly: int = 0x07) -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc8(data: bytes) -> int:
    """CRC-8, polynomial 0x07, init 0x00, no reflection, no final xor."""
    crc = 0
    for byte in data:
        crc = _CRC_TABLE[crc ^ byte]
    return crc


@dataclass(frozen=True, slots=True)
class KeySchedule:
    """Weighted-sum secret shared by authorized drones.

    The default weights and modulus are the swarm-wide defaults; deployments
    may configure their own.  The wire format carries one key byte, so only
    moduli up to 256 are transmittable.
    """

    w_id: int = 5
    w_lat: int = 4
    w_lon: int = 3
    w_alt: int = 2
    modulus: int = 256

    def __post_init__(self) -> None:
        if self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        for name in ("w_id", "w_lat", "w_lon", "w_alt"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


DEFAULT_SCHEDULE = KeySchedule()


@dataclass(frozen=True, slots=True)
class GpsFixQ:
    """Quantized GPS fix: degrees x 1e4 for lat/lon, whole meters for altitude."""

    lat_q: int
    lon_q: int
    alt_q: int

    def __post_init__(self) -> None:
        if abs(self.lat_q) > LAT_Q_MAX:
            raise FieldRangeError(f"lat_q {self.lat_q} out of range +/-{LAT_Q_MAX}")
        if abs(self.lon_q) > LON_Q_MAX:
            raise FieldRangeError(f"lon_q {self.lon_q} out of range +/-{LON_Q_MAX}")
        if abs(self.alt_q) > ALT_Q_MAX:
            raise FieldRangeError(f"alt_q {self.alt_q} out of range +/-{ALT_Q_MAX}")

    @property
    def lat_deg(self) -> float:
        return self.lat_q / LAT_SCALE

    @property
    def lon_deg(self) -> float:
        return self.lon_q / LON_SCALE


def quantize_fix(lat: float, lon: float, alt: float) -> GpsFixQ:
    """Quantize real coordinates onto the wire grid (round half to even).

    The sender quantizes exactly once; the key is then derived from the very
    integers that go over the air, so sender and verifier agree bit-for-bit
    no matter how noisy the underlying GPS floats are.
    """
    if not -90.0 <= lat <= 90.0:
        raise FieldRangeError(f"latitude {lat!r} out of range [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise FieldRangeError(f"longitude {lon!r} out of range [-180, 180]")
    if not -32767.0 <= alt <= 32767.0:
        raise FieldRangeError(f"altitude {alt!r} out of range [-32767, 32767]")
    return GpsFixQ(round(lat * LAT_SCALE), round(lon * LON_SCALE), round(alt))


@dataclass(frozen=True, slots=True)
class FlightRecord:
    """A drone's identity plus quantized fix; the input to key derivation."""

    drone_id: int
    fix: GpsFixQ
    seq: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.drone_id <= 0xFFFF:
            raise FieldRangeError(f"drone_id {self.drone_id} out of u16 range")
        if not 0 <= self.seq <= 0xFFFF:
            raise FieldRangeError(f"seq {self.seq} out of u16 range")


@dataclass(frozen=True, slots=True)
class VerificationKey:
    """One-byte key carried in the advertisement."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 0xFF:
            raise FieldRangeError(f"key {self.value} out of u8 range")


def derive_key(record: FlightRecord, schedule: KeySchedule = DEFAULT_SCHEDULE) -> VerificationKey:
    """Derive the verification key for a flight record.

    The weighted sum runs over Python's unbounded integers, and ``%`` with a
    positive modulus is the Euclidean reduction, so the result is always in
    ``[0, modulus - 1]`` even when negative coordinates drive the sum below
    zero.
    """
    fix = record.fix
    weighted = (
        schedule.w_id * record.drone_id
        + schedule.w_lat * fix.lat_q
        + schedule.w_lon * fix.lon_q
        + schedule.w_alt * fix.alt_q
    )
    return VerificationKey(weighted % schedule.modulus)


def _pack_body(record: FlightRecord, key: VerificationKey) -> bytes:
    fix = record.fix
    return _BODY.pack(MAGIC, record.drone_id, fix.lat_q, fix.lon_q, fix.alt_q, record.seq, key.value)


@dataclass(frozen=True, slots=True)
class AdvertisementPacket:
    """A flight record, its key, and the checksum over the encoded body.

    Construction validates the checksum, so every live instance satisfies
    ``crc == crc8(first 16 encoded bytes)``.  Use :meth:`build` to create a
    packet without computing the checksum by hand.
    """

    record: FlightRecord
    key: VerificationKey
    crc: int

    def __post_init__(self) -> None:
        expected = crc8(_pack_body(self.record, self.key))
        if self.crc != expected:
            raise CrcMismatchError(f"crc 0x{self.crc:02X} does not match body crc 0x{expected:02X}")

    @classmethod
    def build(cls, record: FlightRecord, key: VerificationKey) -> "AdvertisementPacket":
        return cls(record, key, crc8(_pack_body(record, key)))


def encode_packet(packet: AdvertisementPacket) -> bytes:
    """Encode to the fixed 17-byte wire form."""
    return _pack_body(packet.record, packet.key) + bytes([packet.crc])


def decode_packet(data: bytes) -> AdvertisementPacket:
    """Decode and validate 17 wire bytes.

    Checks run in order: length, magic, checksum, field ranges; the first
    failure raises the matching :class:`PacketError` subclass.
    """
    if len(data) != PACKET_LEN:
        raise TruncatedPacketError(f"length {len(data)}, expected {PACKET_LEN} bytes")
    if data[0] != MAGIC:
        raise BadMagicError(f"bad magic 0x{data[0]:02X}, expected 0x{MAGIC:02X}")
    if crc8(data[:16]) != data[16]:
        raise CrcMismatchError("crc mismatch")
    _, drone_id, lat_q, lon_q, alt_q, seq, key = _BODY.unpack(data[:16])
    fix = GpsFixQ(lat_q, lon_q, alt_q)
    return AdvertisementPacket(FlightRecord(drone_id, fix, seq), VerificationKey(key), data[16])


def packet_to_hex(packet: AdvertisementPacket) -> str:
    """Uppercase 34-character hex form used by the command-line tools."""
    return encode_packet(packet).hex().upper()


def packet_from_hex(text: str) -> AdvertisementPacket:
    cleaned = text.strip()
    if len(cleaned) != 2 * PACKET_LEN:
        raise TruncatedPacketError(
            f"hex length {len(cleaned)}, expected {2 * PACKET_LEN} characters"
        )
    try:
        raw = bytes.fromhex(cleaned)
    except ValueError as exc:
        raise PacketError(f"invalid hex: {exc}") from exc
    return decode_packet(raw)
