"""GDSII stream writer and reader.

Fixed conventions: 1 um user unit, 1 nm database unit, a single structure
holding every polygon as a BOUNDARY on layer 1, datatype 0.  Timestamps are
pinned to 2000-01-01 so output is byte-reproducible.  The reader understands
exactly what the writer emits (plus arbitrary record order inside elements)
and is used for the round-trip bit-exactness check.

Record layout: 2-byte big-endian total length (header included), 1-byte
record type, 1-byte data type, then payload.  Reals are the 8-byte excess-64
base-16 GDSII format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from cpwkit.errors import DesignRuleError
from cpwkit.layout.polygons import Polygon

USER_UNIT_IN_M = 1e-6  # 1 um
DB_UNIT_IN_USER = 1e-3  # 1 nm in um
DB_UNIT_IN_M = 1e-9

LAYER = 1
DATATYPE = 0

_FIXED_TIMESTAMP = (2000, 1, 1, 0, 0, 0)

# record type, data type
HEADER = (0x00, 0x02)
BGNLIB = (0x01, 0x02)
LIBNAME = (0x02, 0x06)
UNITS = (0x03, 0x05)
ENDLIB = (0x04, 0x00)
BGNSTR = (0x05, 0x02)
STRNAME = (0x06, 0x06)
ENDSTR = (0x07, 0x00)
BOUNDARY = (0x08, 0x00)
LAYER_REC = (0x0D, 0x02)
DATATYPE_REC = (0x0E, 0x02)
XY = (0x10, 0x03)
ENDEL = (0x11, 0x00)

RECORD_NAMES = {
    HEADER: "HEADER",
    BGNLIB: "BGNLIB",
    LIBNAME: "LIBNAME",
    UNITS: "UNITS",
    ENDLIB: "ENDLIB",
    BGNSTR: "BGNSTR",
    STRNAME: "STRNAME",
    ENDSTR: "ENDSTR",
    BOUNDARY: "BOUNDARY",
    LAYER_REC: "LAYER",
    DATATYPE_REC: "DATATYPE",
    XY: "XY",
    ENDEL: "ENDEL",
}

_MAX_XY_PAIRS = 8190


def float_to_gds_real(value: float) -> bytes:
    """Excess-64 base-16 8-byte real."""
    if value == 0.0:
        return b"\x00" * 8
    sign = 0x80 if value < 0 else 0x00
    mantissa = abs(value)
    exponent = 64
    while mantissa >= 1.0:
        mantissa /= 16.0
        exponent += 1
    while mantissa < 1.0 / 16.0:
        mantissa *= 16.0
        exponent -= 1
    if not 0 <= exponent <= 127:
        raise ValueError(f"value {value} outside GDSII real range")
    mant_int = int(round(mantissa * (1 << 56)))
    if mant_int >= 1 << 56:
        mant_int >>= 4
        exponent += 1
    return bytes([sign | exponent]) + mant_int.to_bytes(7, "big")


def gds_real_to_float(raw: bytes) -> float:
    if len(raw) != 8:
        raise ValueError("GDSII real must be 8 bytes")
    if raw == b"\x00" * 8:
        return 0.0
    sign = -1.0 if raw[0] & 0x80 else 1.0
    exponent = (raw[0] & 0x7F) - 64
    mantissa = int.from_bytes(raw[1:], "big") / float(1 << 56)
    return sign * mantissa * (16.0**exponent)


def _record(rec: tuple[int, int], payload: bytes = b"") -> bytes:
    length = 4 + len(payload)
    if length > 0xFFFF:
        raise ValueError("record too long")
    return struct.pack(">HBB", length, rec[0], rec[1]) + payload


def _string_payload(text: str) -> bytes:
    raw = text.encode("ascii")
    if len(raw) % 2:
        raw += b"\x00"
    return raw


def _timestamp_payload() -> bytes:
    return struct.pack(">12h", *(_FIXED_TIMESTAMP * 2))


def polygon_to_db_units(points: np.ndarray) -> np.ndarray:
    """Round um coordinates onto the nm database grid as int32."""
    db = np.rint(np.asarray(points, dtype=float) / DB_UNIT_IN_USER)
    if np.any(np.abs(db) > 2**31 - 1):
        raise DesignRuleError("coordinate overflows the 32-bit database range")
    return db.astype(np.int64)


def _write_db_polygons(db_polygons: list[np.ndarray], design_name: str) -> bytes:
    chunks = [
        _record(HEADER, struct.pack(">h", 600)),
        _record(BGNLIB, _timestamp_payload()),
        _record(LIBNAME, _string_payload(design_name)),
        _record(
            UNITS,
            float_to_gds_real(DB_UNIT_IN_USER) + float_to_gds_real(DB_UNIT_IN_M),
        ),
        _record(BGNSTR, _timestamp_payload()),
        _record(STRNAME, _string_payload(design_name)),
    ]
    for db in db_polygons:
        if len(db) + 1 > _MAX_XY_PAIRS:
            raise DesignRuleError(
                f"polygon with {len(db)} vertices exceeds the XY record limit"
            )
        closed = np.vstack([db, db[:1]])
        chunks.append(_record(BOUNDARY))
        chunks.append(_record(LAYER_REC, struct.pack(">h", LAYER)))
        chunks.append(_record(DATATYPE_REC, struct.pack(">h", DATATYPE)))
        chunks.append(_record(XY, closed.astype(">i4").tobytes()))
        chunks.append(_record(ENDEL))
    chunks.append(_record(ENDSTR))
    chunks.append(_record(ENDLIB))
    return b"".join(chunks)


def write_gdsii(polygons: list[Polygon], design_name: str = "CPW8R") -> bytes:
    """Serialize polygons into a single-structure GDSII stream."""
    return _write_db_polygons(
        [polygon_to_db_units(p.points) for p in polygons], design_name
    )


@dataclass
class GdsLibrary:
    """Parsed stream content, sufficient to re-emit the identical bytes."""

    name: str
    structure_name: str
    user_unit_in_db: float
    db_unit_in_m: float
    polygons: list[np.ndarray]  # um coordinates, open (no closing vertex)
    db_polygons: list[np.ndarray]  # raw int database-unit coordinates
    record_names: list[str]


def read_gdsii(data: bytes) -> GdsLibrary:
    pos = 0
    name = ""
    structure = ""
    db_in_user = DB_UNIT_IN_USER
    db_in_m = DB_UNIT_IN_M
    polygons: list[np.ndarray] = []
    db_polygons: list[np.ndarray] = []
    names: list[str] = []
    current_xy: np.ndarray | None = None
    while pos < len(data):
        if pos + 4 > len(data):
            raise ValueError("truncated record header")
        length, rtype, dtype = struct.unpack(">HBB", data[pos : pos + 4])
        if length < 4:
            raise ValueError(f"invalid record length {length} at byte {pos}")
        payload = data[pos + 4 : pos + length]
        rec = (rtype, dtype)
        names.append(RECORD_NAMES.get(rec, f"0x{rtype:02X}"))
        if rec == LIBNAME:
            name = payload.rstrip(b"\x00").decode("ascii")
        elif rec == STRNAME:
            structure = payload.rstrip(b"\x00").decode("ascii")
        elif rec == UNITS:
            db_in_user = gds_real_to_float(payload[:8])
            db_in_m = gds_real_to_float(payload[8:16])
        elif rec == XY:
            coords = np.frombuffer(payload, dtype=">i4").astype(np.int64)
            pts = coords.reshape(-1, 2)
            if len(pts) >= 2 and np.all(pts[0] == pts[-1]):
                pts = pts[:-1]
            current_xy = pts
        elif rec == ENDEL:
            if current_xy is not None:
                polygons.append(current_xy.astype(float) * db_in_user)
                db_polygons.append(current_xy)
                current_xy = None
        pos += length
    if names and names[-1] != "ENDLIB":
        raise ValueError("stream does not end with ENDLIB")
    return GdsLibrary(
        name=name,
        structure_name=structure,
        user_unit_in_db=db_in_user,
        db_unit_in_m=db_in_m,
        polygons=polygons,
        db_polygons=db_polygons,
        record_names=names,
    )


def round_trip_bytes(data: bytes) -> bytes:
    """Parse a stream and re-emit it; equality proves lossless round-trip."""
    lib = read_gdsii(data)
    return _write_db_polygons(lib.db_polygons, design_name=lib.structure_name)
