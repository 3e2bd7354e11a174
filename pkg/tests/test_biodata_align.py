import random
from functools import lru_cache

import pytest

from dossier.biodata.align import (
    BLOSUM62,
    GAP_EXTEND,
    GAP_OPEN,
    Alignment,
    AlignmentError,
    align_global,
    percent_identity,
)
from dossier.biodata.fasta import FastaError, FastaRecord, parse_fasta, to_fasta

RESIDUES = "ARNDCQEGHILKMFPSTWYV"


def reference_score(a, b, gap_open=GAP_OPEN, gap_extend=GAP_EXTEND):
    """Independent affine-gap scorer: recursion over suffixes keyed by the
    previous operation, structurally unlike the matrix implementation."""

    @lru_cache(maxsize=None)
    def best(i, j, prev):
        if i == len(a) and j == len(b):
            return 0.0
        candidates = []
        if i < len(a) and j < len(b):
            candidates.append(BLOSUM62[(a[i], b[j])] + best(i + 1, j + 1, "M"))
        if i < len(a):
            cost = gap_extend if prev == "X" else gap_open
            candidates.append(cost + best(i + 1, j, "X"))
        if j < len(b):
            cost = gap_extend if prev == "Y" else gap_open
            candidates.append(cost + best(i, j + 1, "Y"))
        return max(candidates)

    return best(0, 0, "M")


class TestBlosum62:
    def test_symmetric(self):
        for (x, y), v in BLOSUM62.items():
            assert BLOSUM62[(y, x)] == v

    def test_known_diagonal(self):
        assert BLOSUM62[("A", "A")] == 4
        assert BLOSUM62[("W", "W")] == 11
        assert BLOSUM62[("C", "C")] == 9

    def test_known_off_diagonal(self):
        assert BLOSUM62[("E", "F")] == -3
        assert BLOSUM62[("N", "B")] == 3
        assert BLOSUM62[("I", "L")] == 2


class TestAlignGlobal:
    def test_identity_alignment(self):
        al = align_global("MTEYK", "MTEYK")
        assert al.aligned_a == al.aligned_b == "MTEYK"
        assert al.score == 27.0  # 5+5+5+7+5 from the diagonal
        assert "-" not in al.aligned_a

    def test_gapless_beats_gapped(self):
        al = align_global("ACDE", "ACDF")
        assert (al.aligned_a, al.aligned_b) == ("ACDE", "ACDF")
        assert al.score == 16.0  # 4+9+6-3

    def test_terminal_gap(self):
        al = align_global("ACDE", "ACD")
        assert (al.aligned_a, al.aligned_b) == ("ACDE", "ACD-")
        assert al.score == 9.0  # 4+9+6-10

    def test_unknown_residue_names_position(self):
        with pytest.raises(AlignmentError, match="position 2"):
            align_global("AC1E", "ACDE")

    def test_empty_sequence_rejected(self):
        with pytest.raises(AlignmentError):
            align_global("", "ACD")

    def test_gap_cost_structure(self):
        # a 3-gap costs open + 2*extend, not 3*open
        al = align_global("AAAWWWAAA", "AAAAAA")
        gaps = al.aligned_b.count("-")
        assert gaps == 3
        assert al.score == reference_score("AAAWWWAAA", "AAAAAA")

    def test_matches_reference_on_random_pairs(self):
        rng = random.Random(1234)
        for _ in range(200):
            a = "".join(rng.choice(RESIDUES) for _ in range(rng.randint(1, 30)))
            b = "".join(rng.choice(RESIDUES) for _ in range(rng.randint(1, 30)))
            al = align_global(a, b)
            assert al.score == reference_score(a, b), (a, b)
            # removing gaps reproduces the inputs
            assert al.aligned_a.replace("-", "") == a
            assert al.aligned_b.replace("-", "") == b


class TestPercentIdentity:
    def test_identical(self):
        assert percent_identity(align_global("MTEYK", "MTEYK")) == 100.0

    def test_three_of_four(self):
        assert percent_identity(align_global("ACDE", "ACDF")) == 75.0

    def test_bounds_and_gapless_iff_100(self):
        rng = random.Random(7)
        for _ in range(50):
            a = "".join(rng.choice(RESIDUES) for _ in range(rng.randint(1, 20)))
            b = "".join(rng.choice(RESIDUES) for _ in range(rng.randint(1, 20)))
            al = align_global(a, b)
            pid = percent_identity(al)
            assert 0.0 <= pid <= 100.0
            if pid == 100.0:
                assert a == b and "-" not in al.aligned_a

    def test_alignment_invariants_enforced(self):
        with pytest.raises(AlignmentError):
            Alignment("A-", "A", 0.0)
        with pytest.raises(AlignmentError):
            Alignment("A-", "A-", 0.0)


class TestFasta:
    def test_single_record(self):
        records = parse_fasta(">h\nMTEYK")
        assert records == [FastaRecord("h", "MTEYK")]

    def test_multiline_and_multiple(self):
        records = parse_fasta(">a\nMT\nEY\n>b\nKL")
        assert [r.sequence for r in records] == ["MTEY", "KL"]
        assert [r.header for r in records] == ["a", "b"]

    def test_sequence_before_header_names_line(self):
        with pytest.raises(FastaError, match="line 1"):
            parse_fasta("MTEYK\n>h\nACD")

    def test_empty_sequence_rejected(self):
        with pytest.raises(FastaError):
            parse_fasta(">only header\n>next\nACD")

    def test_round_trip(self):
        records = [FastaRecord("sp|P1|X", "MTEYK" * 30)]
        assert parse_fasta(to_fasta(records)) == records
