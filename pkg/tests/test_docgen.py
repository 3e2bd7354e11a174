import io

import pytest
from PIL import Image as PILImage

from dossier.core import (
    ChartModel,
    Dossier,
    Section,
    SourceRef,
    assemble_sources_appendix,
    chart,
    image,
    paragraph,
    swot_grid,
    table,
)
from dossier.docgen import render_chart, render_charts_pdf, render_pdf, render_pptx
from dossier.docgen.charts import BAR_FILL, Rect, Text
from dossier.docgen.pdf import DocgenError, RenderedDocument

from checkers import check_pdf, check_pptx, notes_refs


def make_jpeg(size=(40, 30), color=(90, 160, 90)) -> bytes:
    buf = io.BytesIO()
    PILImage.new("RGB", size, color).save(buf, format="JPEG")
    return buf.getvalue()


def make_png(size=(20, 20), color=(10, 30, 200)) -> bytes:
    buf = io.BytesIO()
    PILImage.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def ref(name, locator, detail=None):
    return SourceRef(name, locator, detail, retrieved_at="2025-01-02T00:00:00Z")


def fixture_dossier():
    target = Section(
        id="target",
        title="Target information",
        children=(
            Section(
                id="summary",
                title="Summary and characteristics",
                blocks=(
                    paragraph("KRAS is a small GTPase switching between GDP and GTP states."),
                    table(
                        [["Similarity with mice", "98.94%"], ["Similarity with Guinea pigs", "100.0%"]],
                        header=["Characteristic", "Value"],
                    ),
                ),
                sources=(ref("UniProt", "P01116"), ref("BLAST", "local:blosum62-global-alignment")),
            ),
            Section(
                id="subcellular",
                title="Subcellular location",
                blocks=(
                    image(make_jpeg(), "image/jpeg", "A-431"),
                    image(make_png(), "image/png", "U2OS"),
                ),
                sources=(
                    ref("Human Protein Atlas", "https://www.proteinatlas.org/ENSG00000133703",
                        detail="Antigen: HPA072761"),
                ),
            ),
            Section(
                id="enrichment",
                title="Pathway enrichment",
                blocks=(
                    chart(ChartModel("bar", ("Ras signaling", "MAPK cascade"), (5.2, 3.1),
                                     y_title="-log10 p")),
                ),
                sources=(ref("GSEAPy", "KEGG_2021_Human"), ref("STRING", "https://string-db.org/KRAS")),
            ),
            Section(
                id="survival",
                title="Kaplan-Meier curves",
                blocks=(
                    chart(ChartModel("step", ("0", "12", "30"), (1.0, 0.62, 0.31),
                                     x_title="months", y_title="S(t)")),
                ),
                sources=(ref("TCGA Survival", "https://tcga-survival.com/api?gene=KRAS"),),
            ),
        ),
    )
    disease = Section(
        id="disease",
        title="Disease information",
        blocks=(paragraph("Pancreatic cancer has a dismal prognosis [PMID:101]."),),
        sources=(ref("PubMed", "101"),),
    )
    landscape = Section(
        id="landscape",
        title="Competitive landscape",
        blocks=(table([["sotorasib", "Phase 3"]], header=["Drug", "Phase"]),),
        sources=(ref("Open Targets", "https://platform.opentargets.org/target/ENSG00000133703"),),
    )
    conclusion = Section(
        id="conclusion",
        title="Conclusion",
        blocks=(swot_grid(["validated target"], ["hard to drug"], ["new chemistry"], ["competition"]),),
        sources=(ref("PubMed", "101"),),
    )
    return Dossier(
        gene="KRAS",
        disease="pancreatic cancer",
        sections=(target, disease, landscape, conclusion),
        generated_at="2025-01-02T03:04:05Z",
        trace_ref="trace.json",
    )


class TestRenderChart:
    def bars(self, model):
        return [c for c in render_chart(model) if isinstance(c, Rect) and c.fill == BAR_FILL]

    def test_bar_heights_proportional(self):
        bars = self.bars(ChartModel("bar", ("a", "b"), (2.0, 4.0)))
        assert bars[1].h == pytest.approx(2 * bars[0].h)

    def test_single_bar_fills_axis(self):
        bars = self.bars(ChartModel("bar", ("only",), (3.0,)))
        assert bars[0].h == pytest.approx(240.0 - 8.0 - 34.0)  # the full plot height

    def test_ten_bars_with_labels_in_order(self):
        labels = tuple(f"TERM_{i}" for i in range(10))
        model = ChartModel("bar", labels, tuple(float(i + 1) for i in range(10)))
        commands = render_chart(model)
        bars = [c for c in commands if isinstance(c, Rect) and c.fill == BAR_FILL]
        assert len(bars) == 10
        texts = [c.text for c in commands if isinstance(c, Text)]
        positions = [next(i for i, t in enumerate(texts) if lbl[:4] in t) for lbl in labels]
        assert positions == sorted(positions)

    def test_all_zero_values(self):
        bars = self.bars(ChartModel("bar", ("a", "b"), (0.0, 0.0)))
        assert all(b.h == 0.0 for b in bars)

    def test_proportionality_random_pairs(self):
        model = ChartModel("bar", ("a", "b", "c"), (1.5, 4.5, 3.0))
        bars = self.bars(model)
        for i in range(3):
            for j in range(3):
                assert bars[i].h * model.values[j] == pytest.approx(bars[j].h * model.values[i])

    def test_box_chart_cells(self):
        model = ChartModel(
            "box", ("none", "naive", "advanced"), (3.0, 4.0, 5.0),
            spans=((2.0, 4.0), (3.0, 4.5), (4.0, 5.0)),
        )
        boxes = [c for c in render_chart(model) if isinstance(c, Rect) and c.stroke]
        assert len(boxes) == 3


class TestRenderPdf:
    def test_structure_check_passes(self):
        doc = render_pdf(fixture_dossier())
        info = check_pdf(doc.data)
        assert info["pages"] == doc.count

    def test_toc_lists_four_top_level_entries(self):
        doc = render_pdf(fixture_dossier())
        for label in (
            "1. Target information",
            "2. Disease information",
            "3. Competitive landscape",
            "4. Conclusion",
        ):
            assert label.encode("latin-1") in doc.data

    def test_empty_sections_still_valid(self):
        d = Dossier(
            gene="KRAS",
            disease="x",
            sections=(
                Section(id="target", title="Target information"),
                Section(id="disease", title="Disease information"),
                Section(id="landscape", title="Competitive landscape"),
                Section(id="conclusion", title="Conclusion"),
            ),
            generated_at="2025-01-02T03:04:05Z",
        )
        doc = render_pdf(d)
        check_pdf(doc.data)

    def test_repeated_render_is_byte_identical(self):
        d = fixture_dossier()
        assert render_pdf(d).data == render_pdf(d).data

    def test_sources_appendix_is_rendered(self):
        doc = render_pdf(fixture_dossier())
        assert b"(Sources)" in doc.data
        assert b"HPA072761" in doc.data

    def test_header_invariant_enforced(self):
        with pytest.raises(DocgenError):
            RenderedDocument(data=b"not a pdf", media_type="application/pdf", count=1)


class TestRenderPptx:
    def test_structure_and_notes(self):
        d = fixture_dossier()
        doc = render_pptx(d)
        info = check_pptx(doc.data)
        assert info["slides"] == doc.count
        # title slide + 7 content sections
        assert info["slides"] == 8

    def test_every_notes_part_nonempty(self):
        info = check_pptx(render_pptx(fixture_dossier()).data)
        assert all(text.strip() for text in info["notes_texts"].values())

    def test_subcellular_notes_carry_antibody_detail(self):
        info = check_pptx(render_pptx(fixture_dossier()).data)
        assert any("HPA072761" in text for text in info["notes_texts"].values())

    def test_notes_refs_match_pdf_appendix(self):
        d = fixture_dossier()
        info = check_pptx(render_pptx(d).data)
        from_notes = notes_refs(info["notes_texts"])
        appendix = assemble_sources_appendix(d)
        from_pdf = {(r.source_name, r.locator) for r in appendix.sources}
        assert from_notes == from_pdf

    def test_repeated_render_is_byte_identical(self):
        d = fixture_dossier()
        assert render_pptx(d).data == render_pptx(d).data

    def test_media_parts_present(self):
        import io as _io
        import zipfile

        doc = render_pptx(fixture_dossier())
        names = zipfile.ZipFile(_io.BytesIO(doc.data)).namelist()
        assert "ppt/media/image1.jpeg" in names
        assert "ppt/media/image2.png" in names


class TestChartsPdf:
    def test_booklet_renders(self):
        charts = [
            (
                metric,
                ChartModel(
                    "box", ("none", "naive", "advanced"), (3.0, 4.0, 5.0),
                    spans=((2.0, 4.0), (3.5, 4.5), (4.5, 5.0)),
                ),
            )
            for metric in ("faithfulness", "relevance", "quality")
        ]
        doc = render_charts_pdf("Evaluation", charts)
        check_pdf(doc.data)
