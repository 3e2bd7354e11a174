"""FASTA reading: '>' header lines, sequences joined across wrapped lines."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..core import DossierError


class FastaError(DossierError):
    pass


_RESIDUES = re.compile(r"^[A-Za-z*]+$")


@dataclass(frozen=True)
class FastaRecord:
    header: str  # text after '>'
    sequence: str

    def __post_init__(self):
        if not self.sequence:
            raise FastaError("empty sequence")
        if not _RESIDUES.match(self.sequence):
            raise FastaError(f"non-residue characters in sequence for {self.header!r}")


def parse_fasta(text: str) -> list[FastaRecord]:
    records: list[FastaRecord] = []
    header: str | None = None
    parts: list[str] = []

    def flush():
        if header is not None:
            records.append(FastaRecord(header, "".join(parts).upper()))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            header = line[1:].strip()
            parts = []
        else:
            if header is None:
                raise FastaError(f"line {lineno}: sequence data before any '>' header")
            parts.append(line)
    flush()
    return records


def to_fasta(records: list[FastaRecord], width: int = 60) -> str:
    lines = []
    for rec in records:
        lines.append(f">{rec.header}")
        seq = rec.sequence
        lines.extend(seq[i : i + width] for i in range(0, len(seq), width))
    return "\n".join(lines) + "\n"
