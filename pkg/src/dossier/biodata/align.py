"""Global pairwise protein alignment (affine-gap Needleman-Wunsch).

Used for the cross-species similarity table.  The first gap residue costs
``gap_open`` and each further residue in the same gap costs ``gap_extend``.
Traceback is deterministic: diagonal beats up beats left on score ties.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import DossierError

GAP_OPEN = -10.0
GAP_EXTEND = -1.0

NEG_INF = float("-inf")

# Canonical BLOSUM62 (half matrix, NCBI ordering).
_ALPHABET = "ARNDCQEGHILKMFPSTWYVBZX*"
_ROWS = """
 4 -1 -2 -2  0 -1 -1  0 -2 -1 -1 -1 -1 -2 -1  1  0 -3 -2  0 -2 -1  0 -4
    5  0 -2 -3  1  0 -2  0 -3 -2  2 -1 -3 -2 -1 -1 -3 -2 -3 -1  0 -1 -4
       6  1 -3  0  0  0  1 -3 -3  0 -2 -3 -2  1  0 -4 -2 -3  3  0 -1 -4
          6 -3  0  2 -1 -1 -3 -4 -1 -3 -3 -1  0 -1 -4 -3 -3  4  1 -1 -4
             9 -3 -4 -3 -3 -1 -1 -3 -1 -2 -3 -1 -1 -2 -2 -1 -3 -3 -2 -4
                5  2 -2  0 -3 -2  1  0 -3 -1  0 -1 -2 -1 -2  0  3 -1 -4
                   5 -2  0 -3 -3  1 -2 -3 -1  0 -1 -3 -2 -2  1  4 -1 -4
                      6 -2 -4 -4 -2 -3 -3 -2  0 -2 -2 -3 -3 -1 -2 -1 -4
                         8 -3 -3 -1 -2 -1 -2 -1 -2 -2  2 -3  0  0 -1 -4
                            4  2 -3  1  0 -3 -2 -1 -3 -1  3 -3 -3 -1 -4
                               4 -2  2  0 -3 -2 -1 -2 -1  1 -4 -3 -1 -4
                                  5 -1 -3 -1  0 -1 -3 -2 -2  0  1 -1 -4
                                     5  0 -2 -1 -1 -1 -1  1 -3 -1 -1 -4
                                        6 -4 -2 -2  1  3 -1 -3 -3 -1 -4
                                           7 -1 -1 -4 -3 -2 -2 -1 -2 -4
                                              4  1 -3 -2 -2  0  0  0 -4
                                                 5 -2 -2  0 -1 -1  0 -4
                                                   11  2 -3 -4 -3 -2 -4
                                                       7 -1 -3 -2 -1 -4
                                                          4 -3 -2 -1 -4
                                                             4  1 -1 -4
                                                                4 -1 -4
                                                                  -1 -4
                                                                      1
"""


def _build_blosum62() -> dict[tuple[str, str], float]:
    matrix: dict[tuple[str, str], float] = {}
    rows = [line for line in _ROWS.splitlines() if line.strip()]
    for i, line in enumerate(rows):
        values = [float(v) for v in line.split()]
        for offset, value in enumerate(values):
            j = i + offset
            a, b = _ALPHABET[i], _ALPHABET[j]
            matrix[(a, b)] = value
            matrix[(b, a)] = value
    return matrix


BLOSUM62 = _build_blosum62()


class AlignmentError(DossierError):
    pass


@dataclass(frozen=True)
class Alignment:
    aligned_a: str
    aligned_b: str
    score: float

    def __post_init__(self):
        if len(self.aligned_a) != len(self.aligned_b):
            raise AlignmentError("aligned strings must have equal length")
        if any(x == "-" and y == "-" for x, y in zip(self.aligned_a, self.aligned_b)):
            raise AlignmentError("a column may not hold two gaps")

    def columns(self):
        return zip(self.aligned_a, self.aligned_b)


def _check_sequence(seq: str, label: str, matrix) -> None:
    if not seq:
        raise AlignmentError(f"sequence {label} is empty")
    for pos, residue in enumerate(seq):
        if (residue, residue) not in matrix:
            raise AlignmentError(f"unknown residue {residue!r} at position {pos} of {label}")


def align_global(
    a: str,
    b: str,
    matrix=None,
    gap_open: float = GAP_OPEN,
    gap_extend: float = GAP_EXTEND,
) -> Alignment:
    """Optimal global alignment via the three-state affine-gap recurrence.

    States: M consumes one residue of each sequence; X places a gap in b
    (consumes from a, the "up" move); Y places a gap in a ("left").
    """
    matrix = matrix or BLOSUM62
    a, b = a.upper(), b.upper()
    _check_sequence(a, "a", matrix)
    _check_sequence(b, "b", matrix)
    n, m = len(a), len(b)

    M = [[NEG_INF] * (m + 1) for _ in range(n + 1)]
    X = [[NEG_INF] * (m + 1) for _ in range(n + 1)]
    Y = [[NEG_INF] * (m + 1) for _ in range(n + 1)]
    # predecessor state per cell, resolved with the diag > up > left preference
    ptr_m = [[""] * (m + 1) for _ in range(n + 1)]
    ptr_x = [[""] * (m + 1) for _ in range(n + 1)]
    ptr_y = [[""] * (m + 1) for _ in range(n + 1)]

    M[0][0] = 0.0
    for i in range(1, n + 1):
        X[i][0] = gap_open + (i - 1) * gap_extend
        ptr_x[i][0] = "M" if i == 1 else "X"
    for j in range(1, m + 1):
        Y[0][j] = gap_open + (j - 1) * gap_extend
        ptr_y[0][j] = "M" if j == 1 else "Y"

    def best(choices):
        # choices: (score, state) in preference order M > X > Y
        top = max(score for score, _ in choices)
        for score, state in choices:
            if score == top:
                return top, state
        raise AssertionError("unreachable")

    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = matrix[(a[i - 1], b[j - 1])]
            score, state = best(
                [
                    (M[i - 1][j - 1], "M"),
                    (X[i - 1][j - 1], "X"),
                    (Y[i - 1][j - 1], "Y"),
                ]
            )
            M[i][j] = sub + score
            ptr_m[i][j] = state

            score, state = best(
                [
                    (M[i - 1][j] + gap_open, "M"),
                    (X[i - 1][j] + gap_extend, "X"),
                    (Y[i - 1][j] + gap_open, "Y"),
                ]
            )
            X[i][j] = score
            ptr_x[i][j] = state

            score, state = best(
                [
                    (M[i][j - 1] + gap_open, "M"),
                    (X[i][j - 1] + gap_open, "X"),
                    (Y[i][j - 1] + gap_extend, "Y"),
                ]
            )
            Y[i][j] = score
            ptr_y[i][j] = state

    final_score, state = best([(M[n][m], "M"), (X[n][m], "X"), (Y[n][m], "Y")])

    out_a: list[str] = []
    out_b: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if state == "M":
            prev = ptr_m[i][j]
            out_a.append(a[i - 1])
            out_b.append(b[j - 1])
            i, j = i - 1, j - 1
        elif state == "X":
            prev = ptr_x[i][j]
            out_a.append(a[i - 1])
            out_b.append("-")
            i -= 1
        else:
            prev = ptr_y[i][j]
            out_a.append("-")
            out_b.append(b[j - 1])
            j -= 1
        state = prev

    return Alignment("".join(reversed(out_a)), "".join(reversed(out_b)), final_score)


def percent_identity(alignment: Alignment) -> float:
    """Identical columns over alignment length, as a percentage rounded to
    two decimals for display."""
    length = len(alignment.aligned_a)
    if length == 0:
        raise AlignmentError("empty alignment")
    identical = sum(1 for x, y in alignment.columns() if x == y and x != "-")
    return round(100.0 * identical / length, 2)
