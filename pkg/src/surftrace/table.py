"""The trace table: one CSV row per (z, p) with counts and candidate traces."""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .counting import CountRecord
from .gaussian import GaussianInt, format_gaussian, parse_gaussian, split_prime

SCHEMA_VERSION = 1
HEADER = "schema_version,z,p,split,S1,Sphi,S2,has_S2,verified,cands"
_INT = re.compile(r"^-?(0|[1-9][0-9]*)$")
_COLUMNS = HEADER.split(",")


class TableError(ValueError):
    def __init__(self, msg: str, row: int = 0, col: Optional[str] = None):
        where = f"row {row}" + (f", column {col}" if col else "")
        super().__init__(f"{where}: {msg}")
        self.row = row
        self.col = col


class TableVersionError(TableError):
    pass


@dataclass(frozen=True)
class TraceRow:
    z: int
    p: int
    S1: int
    Sphi: int
    S2: Optional[int] = None
    verified: bool = False
    cands: tuple = ()  # GaussianInt values of a_p; empty when unresolved

    @property
    def split(self) -> str:
        return split_prime(self.p).code

    @property
    def candidates(self) -> tuple:
        return self.cands

    def record(self) -> CountRecord:
        return CountRecord(self.z, self.p, self.S1, self.Sphi, self.S2, self.verified)

    @classmethod
    def from_record(cls, r: CountRecord) -> "TraceRow":
        return cls(r.z, r.p, r.S1, r.Sphi, r.S2, r.oracle_verified)


@dataclass
class TraceTable:
    rows: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def by_p(self) -> dict:
        return {r.p: r for r in self.rows}

    def to_text(self) -> str:
        out = [HEADER]
        for r in sorted(self.rows, key=lambda r: r.p):
            out.append(
                ",".join(
                    [
                        str(self.schema_version),
                        str(r.z),
                        str(r.p),
                        r.split,
                        str(r.S1),
                        str(r.Sphi),
                        "" if r.S2 is None else str(r.S2),
                        "0" if r.S2 is None else "1",
                        "1" if r.verified else "0",
                        ";".join(format_gaussian(a) for a in r.cands),
                    ]
                )
            )
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TraceTable":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != HEADER:
            raise TableError(f"header must be exactly {HEADER!r}", 1)
        rows = []
        for lineno, line in enumerate(lines[1:], 2):
            rows.append(_parse_row(line, lineno))
        for k in range(1, len(rows)):
            if rows[k].p <= rows[k - 1].p:
                raise TableError("rows must be sorted by p without repeats", k + 2, "p")
        zs = {r.z for r in rows}
        if len(zs) > 1:
            raise TableError(f"table mixes z values {sorted(zs)}", 2, "z")
        return cls(rows)

    def write(self, path: Path) -> None:
        atomic_write(Path(path), self.to_text())

    @classmethod
    def read(cls, path: Path) -> "TraceTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _int(tok: str, row: int, col: str) -> int:
    if not _INT.match(tok) or tok == "-0":
        raise TableError(f"malformed integer {tok!r}", row, col)
    return int(tok)


def _parse_row(line: str, row: int) -> TraceRow:
    parts = line.split(",")
    if len(parts) != len(_COLUMNS):
        raise TableError(f"expected {len(_COLUMNS)} fields, found {len(parts)}", row)
    f = dict(zip(_COLUMNS, parts))
    version = _int(f["schema_version"], row, "schema_version")
    if version != SCHEMA_VERSION:
        raise TableVersionError(f"schema version {version} is not supported (expected {SCHEMA_VERSION})", row, "schema_version")
    z = _int(f["z"], row, "z")
    p = _int(f["p"], row, "p")
    s1 = _int(f["S1"], row, "S1")
    sphi = _int(f["Sphi"], row, "Sphi")
    if f["has_S2"] not in ("0", "1"):
        raise TableError("has_S2 must be 0 or 1", row, "has_S2")
    if f["verified"] not in ("0", "1"):
        raise TableError("verified must be 0 or 1", row, "verified")
    if f["has_S2"] == "1":
        s2 = _int(f["S2"], row, "S2")
    elif f["S2"] != "":
        raise TableError("S2 present but has_S2 = 0", row, "S2")
    else:
        s2 = None
    if p < 3:
        raise TableError(f"p = {p} is not an odd prime", row, "p")
    try:
        kind = split_prime(p).code
    except ValueError as exc:
        raise TableError(str(exc), row, "p") from exc
    if f["split"] != kind:
        raise TableError(f"split kind {f['split']!r} does not match p = {p}", row, "split")
    cands = ()
    if f["cands"]:
        try:
            cands = tuple(parse_gaussian(t) for t in f["cands"].split(";"))
        except ValueError as exc:
            raise TableError(str(exc), row, "cands") from exc
    try:
        return TraceRow(z, p, s1, sphi, s2, f["verified"] == "1", cands)
    except ValueError as exc:
        raise TableError(str(exc), row) from exc


def atomic_write(path: Path, text: str) -> None:
    """Write via a temp file in the same directory and rename over the target."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
