"""Metrics for the two bundled base fonts (Helvetica regular and bold).

Standard AFM advance widths in 1/1000 em for ASCII 32..126; anything
outside that range falls back to a nominal width.  No system font discovery
happens anywhere: layout depends only on these tables.
"""

from __future__ import annotations

_HELVETICA = [
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278,
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556, 278, 278, 584, 584, 584, 556,
    1015, 667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833, 722, 778,
    667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611, 278, 278, 278, 469, 556,
    333, 556, 556, 500, 556, 556, 278, 556, 556, 222, 222, 500, 222, 833, 556, 556,
    556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500, 334, 260, 334, 584,
]

_HELVETICA_BOLD = [
    278, 333, 474, 556, 556, 889, 722, 238, 333, 333, 389, 584, 278, 333, 278, 278,
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556, 333, 333, 584, 584, 584, 611,
    975, 722, 722, 722, 722, 667, 611, 778, 722, 278, 556, 722, 611, 833, 722, 778,
    667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611, 333, 278, 333, 584, 556,
    333, 556, 611, 556, 611, 556, 333, 611, 611, 278, 278, 556, 278, 889, 611, 611,
    611, 611, 389, 556, 333, 611, 556, 778, 556, 556, 500, 389, 280, 389, 584,
]

FALLBACK_WIDTH = 556

REGULAR = "Helvetica"
BOLD = "Helvetica-Bold"


def char_width(ch: str, bold: bool = False) -> int:
    code = ord(ch)
    table = _HELVETICA_BOLD if bold else _HELVETICA
    if 32 <= code <= 126:
        return table[code - 32]
    return FALLBACK_WIDTH


def string_width(text: str, size: float, bold: bool = False) -> float:
    return sum(char_width(c, bold) for c in text) * size / 1000.0


def widths_array(bold: bool = False) -> list[int]:
    return list(_HELVETICA_BOLD if bold else _HELVETICA)


def wrap_text(text: str, max_width: float, size: float, bold: bool = False) -> list[str]:
    """Greedy word wrap; a single word wider than the line is broken hard."""
    lines: list[str] = []
    for raw_line in text.split("\n"):
        words = raw_line.split()
        if not words:
            lines.append("")
            continue
        current = ""
        for word in words:
            candidate = f"{current} {word}".strip()
            if current and string_width(candidate, size, bold) > max_width:
                lines.append(current)
                current = word
            else:
                current = candidate
            while string_width(current, size, bold) > max_width and len(current) > 1:
                cut = max(1, int(len(current) * max_width / string_width(current, size, bold)))
                lines.append(current[:cut])
                current = current[cut:]
        if current:
            lines.append(current)
    return lines or [""]
