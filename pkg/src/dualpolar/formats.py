"""Plain-text file formats: geometries (.npg), ovoids (.ovd), generator
matrices (.grp) and search checkpoints.

All indices are 0-based decimal integers. Geometry hashes are SHA-256 digests
of the serialized ``.npg`` bytes, so an ovoid file is bound to exactly one
geometry.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Geometry, GeometryError


class FormatError(ValueError):
    pass


_FAMILY_TAGS = {"Q": "dq", "W": "dw", "H": "dh"}
_TAG_FAMILIES = {v: k for k, v in _FAMILY_TAGS.items()}


def serialize_geometry(G: Geometry) -> bytes:
    head = [
        "NPG 1",
        f"name {G.name or '-'}",
        f"family {_FAMILY_TAGS.get(G.family, '-')}",
        f"q {G.q if G.q is not None else '-'}",
        f"d {G.d if G.d is not None else '-'}",
        f"n {G.n}",
        f"lines {len(G.lines)}",
    ]
    body = [" ".join(map(str, ln)) for ln in G.lines]
    return ("\n".join(head + body) + "\n").encode("ascii")


def _lines_of(text: str | bytes) -> list[str]:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    return text.split("\n")


def _header(lines: list[str], pos: int, key: str) -> str:
    if pos >= len(lines):
        raise FormatError(f"missing header line {key!r}")
    parts = lines[pos].split(" ", 1)
    if parts[0] != key or len(parts) != 2:
        raise FormatError(f"line {pos + 1}: expected '{key} <value>', got {lines[pos]!r}")
    return parts[1].strip()


def _int_or_none(value: str, key: str) -> int | None:
    if value == "-":
        return None
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"{key}: expected an integer, got {value!r}") from None


def parse_geometry(text: str | bytes) -> Geometry:
    lines = _lines_of(text)
    if not lines or lines[0].strip() != "NPG 1":
        raise FormatError("not an NPG 1 file")
    name = _header(lines, 1, "name")
    family = _header(lines, 2, "family")
    q = _int_or_none(_header(lines, 3, "q"), "q")
    d = _int_or_none(_header(lines, 4, "d"), "d")
    n = _int_or_none(_header(lines, 5, "n"), "n")
    count = _int_or_none(_header(lines, 6, "lines"), "lines")
    if n is None or count is None:
        raise FormatError("n and lines must be integers")
    body = lines[7:]
    if body and body[-1] == "":
        body = body[:-1]
    if len(body) != count:
        raise FormatError(f"header declares {count} lines, body has {len(body)}")
    try:
        geo_lines = [tuple(int(x) for x in row.split()) for row in body]
    except ValueError as exc:
        raise FormatError(f"malformed line body: {exc}") from None
    if family != "-" and family not in _TAG_FAMILIES:
        raise FormatError(f"unknown family tag {family!r}")
    try:
        G = Geometry(n, geo_lines, name="" if name == "-" else name,
                     family=_TAG_FAMILIES.get(family), q=q, d=d)
    except GeometryError as exc:
        raise FormatError(str(exc)) from None
    return G


def write_geometry(G: Geometry, path: str | Path) -> None:
    Path(path).write_bytes(serialize_geometry(G))


def read_geometry(path: str | Path) -> Geometry:
    return parse_geometry(Path(path).read_bytes())


def geometry_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- ovoids -------------------------------------------------------------------

def serialize_ovoid(geom_hash: str, m: int, members) -> bytes:
    members = [int(x) for x in members]
    if any(b <= a for a, b in zip(members, members[1:])):
        raise FormatError("ovoid indices must be strictly increasing")
    out = ["OVD 1", f"geom {geom_hash}", f"m {m}"] + [str(x) for x in members]
    return ("\n".join(out) + "\n").encode("ascii")


def parse_ovoid(text: str | bytes, G: Geometry | None = None) -> tuple[str, int, list[int]]:
    """Return ``(geometry hash, m, members)``; validate against ``G`` when given."""
    lines = [ln for ln in _lines_of(text) if ln.strip()]
    if not lines or lines[0].strip() != "OVD 1":
        raise FormatError("not an OVD 1 file")
    geom = _header(lines, 1, "geom")
    m = _int_or_none(_header(lines, 2, "m"), "m")
    try:
        members = [int(x) for x in lines[3:]]
    except ValueError as exc:
        raise FormatError(f"malformed index: {exc}") from None
    if any(b <= a for a, b in zip(members, members[1:])):
        raise FormatError("ovoid indices must be strictly increasing")
    if G is not None:
        if geom != G.content_hash:
            raise FormatError(f"ovoid belongs to geometry {geom[:12]}..., not {G.content_hash[:12]}...")
        if members and (members[0] < 0 or members[-1] >= G.n):
            raise FormatError(f"ovoid index out of range [0, {G.n})")
    return geom, m, members


# -- generator matrices -------------------------------------------------------

@dataclass
class GroupFile:
    q: int
    dim: int
    gens: list[np.ndarray] = field(default_factory=list)
    frobs: list[int] = field(default_factory=list)


def serialize_group(gf: GroupFile) -> bytes:
    out = ["GRP 1", f"q {gf.q}", f"dim {gf.dim}"]
    for g, fr in zip(gf.gens, gf.frobs):
        out.append("")
        if fr:
            out.append(f"frob {fr}")
        out.extend(" ".join(str(int(x)) for x in row) for row in g)
    return ("\n".join(out) + "\n").encode("ascii")


def parse_group(text: str | bytes) -> GroupFile:
    lines = _lines_of(text)
    if not lines or lines[0].strip() != "GRP 1":
        raise FormatError("not a GRP 1 file")
    q = _int_or_none(_header(lines, 1, "q"), "q")
    dim = _int_or_none(_header(lines, 2, "dim"), "dim")
    if q is None or dim is None or dim < 1:
        raise FormatError("q and dim must be positive integers")
    blocks: list[list[str]] = []
    cur: list[str] = []
    for ln in lines[3:]:
        if ln.strip():
            cur.append(ln.strip())
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    gf = GroupFile(q, dim)
    for b in blocks:
        frob = 0
        if b[0].startswith("frob"):
            frob = _int_or_none(b[0].split()[1], "frob")
            b = b[1:]
        if len(b) != dim:
            raise FormatError(f"generator has {len(b)} rows, expected {dim}")
        try:
            mat = np.array([[int(x) for x in row.split()] for row in b], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"malformed matrix entry: {exc}") from None
        if mat.shape != (dim, dim):
            raise FormatError(f"generator is not {dim}x{dim}")
        if mat.min() < 0 or mat.max() >= q:
            raise FormatError(f"matrix entries must lie in [0, {q})")
        gf.gens.append(mat)
        gf.frobs.append(frob)
    return gf


def read_group(path: str | Path) -> GroupFile:
    return parse_group(Path(path).read_bytes())


def write_group(gf: GroupFile, path: str | Path) -> None:
    Path(path).write_bytes(serialize_group(gf))
