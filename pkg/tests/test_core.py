import pytest
from hypothesis import given
from hypothesis import strategies as st

from dossier.core import (
    Block,
    ChartModel,
    Dossier,
    FixedClock,
    Section,
    SourceRef,
    ValidationError,
    assemble_sources_appendix,
    chart,
    dossier_from_json,
    dossier_to_json,
    image,
    paragraph,
    swot_grid,
    table,
    validate_answer,
)

CLOCK = FixedClock("2025-01-02T03:04:05+00:00")


def ref(name="UniProt", locator="P01116", detail=None):
    return SourceRef(name, locator, detail, retrieved_at="2025-01-02T03:04:05Z")


class TestSourceRef:
    def test_requires_registry_name(self):
        with pytest.raises(ValidationError):
            SourceRef("NotASource", "x")

    def test_requires_locator(self):
        with pytest.raises(ValidationError):
            SourceRef("UniProt", "")

    def test_key(self):
        assert ref().key() == ("UniProt", "P01116")


class TestValidateAnswer:
    def test_kept_citation(self):
        a = validate_answer("GSDME forms a barrier [PMID:111].", {111, 222}, CLOCK)
        assert a.pmid_citations() == {"111"}
        assert a.warnings == ()
        assert a.text == "GSDME forms a barrier [PMID:111]."

    def test_no_citations(self):
        a = validate_answer("Text with no citations.", {111}, CLOCK)
        assert a.citations == frozenset()
        assert a.warnings == ()

    def test_stripped_citation(self):
        a = validate_answer("Claim [PMID:999].", {111}, CLOCK)
        assert a.text == "Claim ."
        assert a.citations == frozenset()
        assert len(a.warnings) == 1

    def test_src_marker_kept(self):
        a = validate_answer("Known fact [SRC:UniProt:P01116].", {"1"}, CLOCK)
        assert {c.source_name for c in a.citations} == {"UniProt"}

    def test_src_marker_unknown_source_stripped(self):
        a = validate_answer("Fact [SRC:Wikipedia:KRAS].", set(), CLOCK)
        assert a.citations == frozenset()
        assert "[SRC:Wikipedia:KRAS]" not in a.text
        assert len(a.warnings) == 1

    @given(
        context=st.sets(st.integers(min_value=1, max_value=50), max_size=8),
        cited=st.lists(st.integers(min_value=1, max_value=50), max_size=8),
    )
    def test_citations_always_subset_of_context(self, context, cited):
        text = " ".join(f"claim [PMID:{p}]." for p in cited)
        a = validate_answer(text, context)
        assert a.pmid_citations() <= {str(c) for c in context}
        # every out-of-context marker produced a warning
        assert len(a.warnings) == sum(1 for p in cited if p not in context)


class TestBlocks:
    def test_table_must_be_rectangular(self):
        with pytest.raises(ValidationError):
            table([["a", "b"], ["c"]])

    def test_image_media_type(self):
        with pytest.raises(ValidationError):
            image(b"xx", "image/gif")

    def test_chart_step_monotonic(self):
        with pytest.raises(ValidationError):
            ChartModel("step", ("a", "b"), (0.5, 0.7))

    def test_chart_finite(self):
        with pytest.raises(ValidationError):
            ChartModel("bar", ("a",), (float("nan"),))

    def test_swot_requires_quadrants(self):
        with pytest.raises(ValidationError):
            Block("swot_grid", {"strengths": []})


def build_dossier():
    s1 = Section(
        id="target",
        title="Target information",
        children=(
            Section(
                id="summary",
                title="Summary and characteristics",
                blocks=(paragraph("KRAS is a GTPase."),),
                sources=(ref(), ref("UniProt", "P01116"), ref("STRING", "https://string-db.org/KRAS")),
            ),
        ),
    )
    s2 = Section(id="disease", title="Disease information",
                 blocks=(paragraph("PDAC."),), sources=(ref("PubMed", "111"),))
    s3 = Section(id="landscape", title="Competitive landscape")
    s4 = Section(
        id="conclusion",
        title="Conclusion",
        blocks=(
            swot_grid(["s"], ["w"], ["o"], ["t"]),
            chart(ChartModel("bar", ("a", "b"), (1.0, 2.0))),
            table([["x", "y"]], header=["c1", "c2"]),
            image(b"\xff\xd8\xff\xe0fake", "image/jpeg", "cap"),
        ),
        sources=(ref("GSEAPy", "KEGG_2021_Human"),),
    )
    return Dossier(
        gene="KRAS",
        disease="pancreatic cancer",
        sections=(s1, s2, s3, s4),
        generated_at="2025-01-02T03:04:05Z",
        trace_ref="trace.json",
    )


class TestDossier:
    def test_validate_accepts_plan_order(self):
        build_dossier().validate()

    def test_validate_rejects_reordered_sections(self):
        d = build_dossier()
        swapped = Dossier(d.gene, d.disease, tuple(reversed(d.sections)), d.generated_at)
        with pytest.raises(ValidationError):
            swapped.validate()

    def test_section_with_blocks_needs_sources(self):
        with pytest.raises(ValidationError):
            Section(id="x", title="X", blocks=(paragraph("hi"),)).validate()

    def test_round_trip(self):
        d = build_dossier()
        assert dossier_from_json(dossier_to_json(d)) == d

    def test_round_trip_is_stable(self):
        d = build_dossier()
        once = dossier_to_json(d)
        assert dossier_to_json(dossier_from_json(once)) == once


class TestSourcesAppendix:
    def test_dedupes_by_source_and_locator(self):
        d = build_dossier()
        appendix = assemble_sources_appendix(d)
        keys = [r.key() for r in appendix.sources]
        assert len(keys) == len(set(keys))
        # (UniProt, P01116) appears twice in the dossier but once here
        assert keys.count(("UniProt", "P01116")) == 1

    def test_counts_match_trace_walk_oracle(self):
        d = build_dossier()
        # independent oracle: set-build over a full walk
        distinct = {(r.source_name, r.locator) for s in d.walk_sections() for r in s.sources}
        appendix = assemble_sources_appendix(d)
        assert len(appendix.sources) == len(distinct)
        assert len(appendix.blocks[0].payload["rows"]) == len(distinct)

    def test_empty_dossier(self):
        d = Dossier(
            gene="KRAS",
            disease="x",
            sections=(
                Section(id="target", title="Target information"),
                Section(id="disease", title="Disease information"),
                Section(id="landscape", title="Competitive landscape"),
                Section(id="conclusion", title="Conclusion"),
            ),
            generated_at="t",
        )
        appendix = assemble_sources_appendix(d)
        assert appendix.sources == ()
        assert appendix.blocks == ()

    def test_grouped_in_first_occurrence_order(self):
        d = build_dossier()
        appendix = assemble_sources_appendix(d)
        names = [r.source_name for r in appendix.sources]
        # groups contiguous, ordered by first appearance: UniProt, STRING, PubMed, GSEAPy
        assert names == ["UniProt", "STRING", "PubMed", "GSEAPy"]
