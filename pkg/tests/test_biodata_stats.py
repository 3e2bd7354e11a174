import itertools
import random
from fractions import Fraction

import pytest

from dossier.biodata.stats import (
    GeneSetLibrary,
    StatsError,
    bh_adjust,
    enrich,
    hypergeom_sf,
    km_estimate,
    load_gmt,
    parse_gmt,
)


def hypergeom_enumeration(k, N, K, n):
    """Exhaustive oracle: draw every C(N, n) subset and count overlaps."""
    marked = set(range(K))
    hits = 0
    total = 0
    for draw in itertools.combinations(range(N), n):
        total += 1
        if len(marked.intersection(draw)) >= k:
            hits += 1
    return Fraction(hits, total)


class TestHypergeomSF:
    def test_k_zero_is_certain(self):
        assert hypergeom_sf(0, 10, 4, 5) == 1.0

    def test_worked_case(self):
        assert hypergeom_sf(3, 10, 4, 5) == pytest.approx(66 / 252, abs=1e-12)
        assert hypergeom_enumeration(3, 10, 4, 5) == Fraction(66, 252)

    def test_degenerate_full_universe(self):
        assert hypergeom_sf(4, 4, 4, 4) == pytest.approx(1.0)

    def test_bounds_enforced(self):
        with pytest.raises(StatsError):
            hypergeom_sf(5, 10, 4, 5)  # k > min(K, n)
        with pytest.raises(StatsError):
            hypergeom_sf(1, 5, 6, 2)  # K > N

    def test_matches_enumeration_small_sweep(self):
        for N in range(1, 9):
            for K in range(N + 1):
                for n in range(N + 1):
                    for k in range(min(K, n) + 1):
                        want = float(hypergeom_enumeration(k, N, K, n))
                        assert hypergeom_sf(k, N, K, n) == pytest.approx(want, abs=1e-9), (k, N, K, n)


class TestBHAdjust:
    def test_single_value(self):
        assert bh_adjust([0.05]) == [0.05]

    def test_hand_step_up(self):
        assert bh_adjust([0.01, 0.02, 0.03]) == pytest.approx([0.03, 0.03, 0.03])

    def test_sorted_input_gives_nondecreasing_output(self):
        rng = random.Random(3)
        for _ in range(30):
            pvals = sorted(rng.random() for _ in range(rng.randint(1, 12)))
            adjusted = bh_adjust(pvals)
            assert all(a <= b for a, b in zip(adjusted, adjusted[1:]))
            assert all(q >= p for p, q in zip(pvals, adjusted))
            assert all(0 <= q <= 1 for q in adjusted)

    def test_returns_input_order(self):
        adjusted = bh_adjust([0.9, 0.001, 0.5])
        assert adjusted[1] == min(adjusted)

    def test_rejects_out_of_range(self):
        with pytest.raises(StatsError):
            bh_adjust([1.5])


TOY_LIB = GeneSetLibrary(
    name="toy",
    terms={
        "PATH_A": frozenset({"G1", "G2", "G3"}),
        "PATH_B": frozenset({"G4", "G5"}),
        "PATH_C": frozenset({"G6", "G7", "G8", "G9"}),
    },
)


class TestEnrich:
    def test_perfect_overlap_ranks_first(self):
        results, warnings = enrich({"G4", "G5"}, TOY_LIB)
        assert warnings == []
        assert results[0].term == "PATH_B"
        assert results[0].overlap == 2

    def test_pvalues_match_enumeration_oracle(self):
        query = {"G1", "G2", "G4"}
        results, _ = enrich(query, TOY_LIB)
        N = len(TOY_LIB.universe)  # 9
        n = len(query)
        by_term = {r.term: r for r in results}
        for term, genes in TOY_LIB.terms.items():
            k = len(query & genes)
            if k == 0:
                assert term not in by_term
                continue
            want = float(hypergeom_enumeration(k, N, len(genes), n))
            assert by_term[term].p_value == pytest.approx(want, abs=1e-12)

    def test_adjusted_at_least_raw(self):
        results, _ = enrich({"G1", "G4", "G6"}, TOY_LIB)
        for r in results:
            assert r.adjusted_p >= r.p_value

    def test_zero_overlap_warns(self):
        results, warnings = enrich({"ZZZ"}, TOY_LIB)
        assert results == []
        assert len(warnings) == 1

    def test_permutation_invariant(self):
        genes = ["G1", "G2", "G4", "G6"]
        a, _ = enrich(set(genes), TOY_LIB)
        b, _ = enrich(set(reversed(genes)), TOY_LIB)
        assert a == b

    def test_case_normalized(self):
        results, _ = enrich({"g4", "g5"}, TOY_LIB)
        assert results[0].term == "PATH_B"

    def test_max_terms_truncates(self):
        results, _ = enrich({"G1", "G4", "G6"}, TOY_LIB, max_terms=1)
        assert len(results) == 1

    def test_empty_query_rejected(self):
        with pytest.raises(StatsError):
            enrich(set(), TOY_LIB)


class TestGMT:
    def test_parse(self):
        lib = parse_gmt("RAS_PATHWAY\tdesc\tKRAS\tBRAF\nOTHER\td\tINS\n", "KEGG")
        assert lib.terms["RAS_PATHWAY"] == frozenset({"KRAS", "BRAF"})
        assert lib.universe == frozenset({"KRAS", "BRAF", "INS"})

    def test_genes_uppercased(self):
        lib = parse_gmt("T\td\tkras\n", "x")
        assert lib.terms["T"] == frozenset({"KRAS"})

    def test_short_line_rejected(self):
        with pytest.raises(StatsError, match="line 1"):
            parse_gmt("TERM_ONLY\tdesc\n", "x")

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "lib.gmt"
        p.write_text("T\td\tA\tB\n", encoding="utf-8")
        assert load_gmt(p).name == "lib"


class TestKaplanMeier:
    def test_all_events(self):
        curve = km_estimate([(1.0, True), (2.0, True), (3.0, True)])
        assert curve.points == (
            (0.0, 1.0, 3),
            (1.0, pytest.approx(2 / 3), 3),
            (2.0, pytest.approx(1 / 3), 2),
            (3.0, pytest.approx(0.0), 1),
        )

    def test_all_censored(self):
        curve = km_estimate([(1.0, False), (5.0, False)])
        assert curve.points == ((0.0, 1.0, 2),)
        assert curve.survival_at(10.0) == 1.0

    def test_event_then_censor(self):
        curve = km_estimate([(1.0, True), (2.0, False)])
        assert curve.points == ((0.0, 1.0, 2), (1.0, 0.5, 2))
        assert curve.survival_at(1.5) == 0.5

    def test_no_censoring_matches_ecdf(self):
        rng = random.Random(11)
        for _ in range(30):
            times = [rng.randint(1, 8) for _ in range(rng.randint(1, 15))]
            curve = km_estimate([(float(t), True) for t in times])
            for t, s, _ in curve.points:
                ecdf = sum(1 for x in times if x <= t) / len(times)
                assert s == pytest.approx(1.0 - ecdf, abs=1e-12)

    def test_monotone_on_random_mixtures(self):
        rng = random.Random(5)
        for _ in range(100):
            obs = [(rng.uniform(0.1, 9.0), rng.random() < 0.6) for _ in range(rng.randint(1, 20))]
            curve = km_estimate(obs)
            probs = [p for _, p, _ in curve.points]
            assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_nonpositive_time_rejected(self):
        with pytest.raises(StatsError):
            km_estimate([(0.0, True)])
