"""File formats: binary field dumps and plain-text key-value configs.

A field dump is a plain-text header (one ``key = value`` record per line,
terminated by a ``---`` line) followed by raw little-endian complex128 data,
component-major, row-major in the grid axes (x1, y1, x2, y2).  Dumps are
byte-reproducible: loading and re-dumping is the identity on bytes.

Config files use the same key-value syntax; values are integers, floats,
rationals like ``3/4``, bare words, or bracketed lists of these.
"""

from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

from .field_calculus import KIND_COMPONENTS, Field, GridSpec
from .surface_topology import SurfacePresentation, rat

__all__ = [
    "dump_field",
    "load_field",
    "write_field",
    "read_field",
    "parse_keyval",
    "format_value",
    "parse_value",
    "surface_from_config",
    "grid_from_config",
]

FIELD_MAGIC = "vortexlab-field 1"

_INT_RE = re.compile(r"^[+-]?\d+$")
_FRACTION_RE = re.compile(r"^[+-]?\d+/\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


def parse_value(token: str):
    token = token.strip()
    if token.startswith("["):
        return _parse_list(token)
    if _INT_RE.match(token):
        return int(token)
    if _FRACTION_RE.match(token):
        return token  # kept as a string; exact consumers call rat()
    if _FLOAT_RE.match(token):
        return float(token)
    if token in ("true", "false"):
        return token == "true"
    return token


def _parse_list(token: str):
    body = token.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ValueError(f"malformed list value: {token!r}")
    body = body[1:-1]
    items, depth, current = [], 0, []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            items.append("".join(current))
            current = []
        else:
            current.append(ch)
    if current and "".join(current).strip():
        items.append("".join(current))
    return [parse_value(item) for item in items if item.strip()]


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


def parse_keyval(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = parse_value(value)
    return out


# ---------------------------------------------------------------------------
# field dumps
# ---------------------------------------------------------------------------


def dump_field(field: Field) -> bytes:
    grid = field.grid
    header = [
        FIELD_MAGIC,
        f"kind = {field.kind}",
        f"geom = {field.geom}",
        f"n = {grid.n}",
        f"areas = {format_value(list(grid.areas))}",
        f"backend = {grid.backend}",
        f"bidegree = {format_value(list(grid.bidegree))}",
        f"rank = {grid.rank}",
        f"components = {KIND_COMPONENTS[field.kind]}",
        "endianness = little",
        "---",
        "",
    ]
    payload = np.ascontiguousarray(field.values.astype("<c16"))
    return "\n".join(header).encode("ascii") + payload.tobytes()


def load_field(blob: bytes) -> Field:
    marker = b"\n---\n"
    at = blob.find(marker)
    if at < 0:
        raise ValueError("not a field dump: missing header terminator")
    header_text = blob[:at].decode("ascii")
    lines = header_text.splitlines()
    if not lines or lines[0] != FIELD_MAGIC:
        raise ValueError("not a field dump: bad magic line")
    meta = {}
    string_keys = {"kind", "geom", "backend", "endianness"}
    for raw in lines[1:]:
        key, _, value = raw.partition("=")
        key = key.strip()
        value = value.strip()
        meta[key] = value if key in string_keys else parse_value(value)
    if meta.get("endianness") != "little":
        raise ValueError("unsupported endianness in field dump")
    grid = GridSpec(
        n=int(meta["n"]),
        areas=tuple(float(a) for a in meta["areas"]),
        backend=str(meta["backend"]),
        bidegree=tuple(int(d) for d in meta["bidegree"]),
        rank=int(meta["rank"]),
    )
    kind = str(meta["kind"])
    geom = str(meta["geom"])
    ncomp = KIND_COMPONENTS[kind]
    if int(meta["components"]) != ncomp:
        raise ValueError("component count disagrees with the field kind")
    mat = {"scalar": (), "section": (grid.rank,), "endo": (grid.rank, grid.rank)}[geom]
    shape = (ncomp,) + mat + grid.shape
    expected_bytes = int(np.prod(shape)) * 16
    payload = blob[at + len(marker):]
    if len(payload) != expected_bytes:
        raise ValueError(
            f"field dump payload has {len(payload)} bytes, expected {expected_bytes}"
        )
    values = np.frombuffer(payload, dtype="<c16").reshape(shape).astype(complex)
    return Field(grid, kind, geom, values)


def write_field(path, field: Field):
    with open(path, "wb") as fh:
        fh.write(dump_field(field))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        return load_field(fh.read())


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------


def surface_from_config(config: dict) -> SurfacePresentation:
    try:
        return SurfacePresentation(
            b2=int(config["b2"]),
            Q=tuple(tuple(int(v) for v in row) for row in config["Q"]),
            torsion=tuple(int(v) for v in config.get("torsion", [])),
            sigma=int(config["sigma"]),
            euler=int(config["euler"]),
            K=tuple(int(v) for v in config.get("K", [0] * int(config["b2"]))),
            omega=tuple(rat(v) for v in config.get("omega", [])),
            volume=rat(config.get("volume", 1)),
            chiO=rat(config.get("chiO", 0)),
            kaehler=bool(config.get("kaehler", True)),
            name=str(config.get("name", "")),
        )
    except KeyError as missing:
        raise ValueError(f"surface config is missing the field {missing.args[0]!r}") from None


def grid_from_config(config: dict) -> GridSpec:
    try:
        n = int(config["n"])
    except KeyError:
        raise ValueError("solve config is missing the field 'n'") from None
    areas = config.get("areas", [1.0, 1.0])
    bidegree = config.get("bidegree", [0, 0])
    return GridSpec(
        n=n,
        areas=(float(areas[0]), float(areas[1])),
        backend=str(config.get("backend", "spectral")),
        bidegree=(int(bidegree[0]), int(bidegree[1])),
        rank=int(config.get("rank", 1)),
    )
