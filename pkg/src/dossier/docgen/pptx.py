"""Slide deck writer: a ZIP of OOXML parts built by hand.

One condensed slide per dossier section with content, plus a title slide.
Every slide gets a notes part; the notes enumerate that section's source
references, which is where reviewers find the provenance trail.  Charts are
emitted as native drawing shapes from the shared chart command list.
"""

from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from ..core import Block, ChartModel, Dossier, Section
from .charts import Line, Rect, Text, render_chart
from .fonts import wrap_text
from .pdf import PPTX_MEDIA_TYPE, RenderedDocument

EMU_PER_PT = 12700
SLIDE_W = 9144000  # 10 in
SLIDE_H = 6858000  # 7.5 in

NS_DECL = (
    'xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" '
    'xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" '
    'xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main"'
)

REL_NS = "http://schemas.openxmlformats.org/package/2006/relationships"
RT = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"

CT_SLIDE = "application/vnd.openxmlformats-officedocument.presentationml.slide+xml"
CT_NOTES = "application/vnd.openxmlformats-officedocument.presentationml.notesSlide+xml"


def emu(pt: float) -> int:
    return int(round(pt * EMU_PER_PT))


def _color(rgb: tuple[float, float, float]) -> str:
    return "".join(f"{int(round(c * 255)):02X}" for c in rgb)


def _runs(text: str, size_pt: float, bold: bool = False, color: str = "000000") -> str:
    b = ' b="1"' if bold else ""
    out = []
    for line in text.split("\n"):
        out.append(
            f'<a:p><a:r><a:rPr lang="en-US" sz="{int(size_pt * 100)}"{b} dirty="0">'
            f'<a:solidFill><a:srgbClr val="{color}"/></a:solidFill></a:rPr>'
            f"<a:t>{escape(line)}</a:t></a:r></a:p>"
        )
    return "".join(out) or "<a:p/>"


@dataclass
class _Slide:
    shapes: list[str] = field(default_factory=list)
    rels: list[tuple[str, str, str]] = field(default_factory=list)  # id, type, target
    notes_lines: list[str] = field(default_factory=list)
    next_id: int = 2

    def shape_id(self) -> int:
        self.next_id += 1
        return self.next_id

    def textbox(self, x, y, w, h, text, size, bold=False, color="000000", fill=None, stroke=None):
        sid = self.shape_id()
        fill_xml = f'<a:solidFill><a:srgbClr val="{fill}"/></a:solidFill>' if fill else "<a:noFill/>"
        line_xml = (
            f'<a:ln w="9525"><a:solidFill><a:srgbClr val="{stroke}"/></a:solidFill></a:ln>'
            if stroke
            else ""
        )
        self.shapes.append(
            f'<p:sp><p:nvSpPr><p:cNvPr id="{sid}" name="TextBox {sid}"/>'
            f"<p:cNvSpPr/><p:nvPr/></p:nvSpPr>"
            f"<p:spPr><a:xfrm><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{w}\" cy=\"{h}\"/></a:xfrm>"
            f'<a:prstGeom prst="rect"><a:avLst/></a:prstGeom>{fill_xml}{line_xml}</p:spPr>'
            f'<p:txBody><a:bodyPr wrap="square"><a:normAutofit/></a:bodyPr><a:lstStyle/>'
            f"{_runs(text, size, bold, color)}</p:txBody></p:sp>"
        )

    def solid_rect(self, x, y, w, h, fill, stroke=None):
        sid = self.shape_id()
        line_xml = (
            f'<a:ln w="9525"><a:solidFill><a:srgbClr val="{stroke}"/></a:solidFill></a:ln>'
            if stroke
            else ""
        )
        self.shapes.append(
            f'<p:sp><p:nvSpPr><p:cNvPr id="{sid}" name="Rect {sid}"/>'
            f"<p:cNvSpPr/><p:nvPr/></p:nvSpPr>"
            f"<p:spPr><a:xfrm><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{w}\" cy=\"{h}\"/></a:xfrm>"
            f'<a:prstGeom prst="rect"><a:avLst/></a:prstGeom>'
            f'<a:solidFill><a:srgbClr val="{fill}"/></a:solidFill>{line_xml}</p:spPr>'
            f"<p:txBody><a:bodyPr/><a:lstStyle/><a:p/></p:txBody></p:sp>"
        )

    def line_shape(self, x1, y1, x2, y2, color, width_pt):
        sid = self.shape_id()
        x, y = min(x1, x2), min(y1, y2)
        cx, cy = abs(x2 - x1), abs(y2 - y1)
        flip = ""
        if (x2 < x1) != (y2 < y1) and cx and cy:
            flip = ' flipV="1"'
        self.shapes.append(
            f'<p:cxnSp><p:nvCxnSpPr><p:cNvPr id="{sid}" name="Line {sid}"/>'
            f"<p:cNvCxnSpPr/><p:nvPr/></p:nvCxnSpPr>"
            f"<p:spPr><a:xfrm{flip}><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{cx}\" cy=\"{cy}\"/></a:xfrm>"
            f'<a:prstGeom prst="line"><a:avLst/></a:prstGeom>'
            f'<a:ln w="{emu(width_pt) if width_pt else 9525}"><a:solidFill>'
            f'<a:srgbClr val="{color}"/></a:solidFill></a:ln></p:spPr></p:cxnSp>'
        )

    def picture(self, rel_id, x, y, w, h):
        sid = self.shape_id()
        self.shapes.append(
            f'<p:pic><p:nvPicPr><p:cNvPr id="{sid}" name="Picture {sid}"/>'
            f"<p:cNvPicPr/><p:nvPr/></p:nvPicPr>"
            f'<p:blipFill><a:blip r:embed="{rel_id}"/><a:stretch><a:fillRect/></a:stretch></p:blipFill>'
            f"<p:spPr><a:xfrm><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{w}\" cy=\"{h}\"/></a:xfrm>"
            f'<a:prstGeom prst="rect"><a:avLst/></a:prstGeom></p:spPr></p:pic>'
        )

    def table(self, x, y, w, header, rows, size=10.0):
        all_rows = ([header] if header else []) + rows
        if not all_rows:
            return
        ncols = len(all_rows[0])
        col_w = w // ncols
        sid = self.shape_id()
        grid = "".join(f'<a:gridCol w="{col_w}"/>' for _ in range(ncols))
        body_rows = []
        for r, row in enumerate(all_rows):
            is_header = header is not None and r == 0
            cells = []
            for cell in row:
                fill = '<a:solidFill><a:srgbClr val="E8EEF5"/></a:solidFill>' if is_header else ""
                cells.append(
                    f"<a:tc><a:txBody><a:bodyPr/><a:lstStyle/>"
                    f"{_runs(str(cell), size, bold=is_header)}</a:txBody>"
                    f"<a:tcPr>{fill}</a:tcPr></a:tc>"
                )
            lines = max(str(c).count("\n") + 1 for c in row)
            body_rows.append(f'<a:tr h="{emu(16 * lines + 6)}">{"".join(cells)}</a:tr>')
        height = emu(20 * len(all_rows))
        self.shapes.append(
            f'<p:graphicFrame><p:nvGraphicFramePr><p:cNvPr id="{sid}" name="Table {sid}"/>'
            f"<p:cNvGraphicFramePr/><p:nvPr/></p:nvGraphicFramePr>"
            f"<p:xfrm><a:off x=\"{x}\" y=\"{y}\"/><a:ext cx=\"{w}\" cy=\"{height}\"/></p:xfrm>"
            f'<a:graphic><a:graphicData uri="http://schemas.openxmlformats.org/drawingml/2006/table">'
            f'<a:tbl><a:tblPr firstRow="1" bandRow="1"/><a:tblGrid>{grid}</a:tblGrid>'
            f'{"".join(body_rows)}</a:tbl></a:graphicData></a:graphic></p:graphicFrame>'
        )

    def xml(self) -> str:
        return (
            f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
            f"<p:sld {NS_DECL}><p:cSld><p:spTree>"
            f'<p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr>'
            f"<p:grpSpPr/>{''.join(self.shapes)}</p:spTree></p:cSld>"
            f"<p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sld>"
        )


def _notes_xml(lines: list[str]) -> str:
    body = _runs("\n".join(lines), 12.0)
    return (
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f"<p:notes {NS_DECL}><p:cSld><p:spTree>"
        f'<p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr>'
        f"<p:grpSpPr/>"
        f'<p:sp><p:nvSpPr><p:cNvPr id="2" name="Notes Placeholder"/>'
        f'<p:cNvSpPr><a:spLocks noGrp="1"/></p:cNvSpPr>'
        f'<p:nvPr><p:ph type="body" idx="1"/></p:nvPr></p:nvSpPr>'
        f"<p:spPr/><p:txBody><a:bodyPr/><a:lstStyle/>{body}</p:txBody></p:sp>"
        f"</p:spTree></p:cSld><p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:notes>"
    )


def _rels_xml(rels: list[tuple[str, str, str]]) -> str:
    items = "".join(
        f'<Relationship Id="{rid}" Type="{rtype}" Target="{target}"/>' for rid, rtype, target in rels
    )
    return (
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f'<Relationships xmlns="{REL_NS}">{items}</Relationships>'
    )


_EMPTY_TREE = (
    '<p:cSld><p:spTree><p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/>'
    "</p:nvGrpSpPr><p:grpSpPr/></p:spTree></p:cSld>"
)

_CLR_MAP = (
    '<p:clrMap bg1="lt1" tx1="dk1" bg2="lt2" tx2="dk2" accent1="accent1" accent2="accent2" '
    'accent3="accent3" accent4="accent4" accent5="accent5" accent6="accent6" '
    'hlink="hlink" folHlink="folHlink"/>'
)


def _master_xml() -> str:
    return (
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f"<p:sldMaster {NS_DECL}>{_EMPTY_TREE}{_CLR_MAP}"
        f'<p:sldLayoutIdLst><p:sldLayoutId id="2147483649" r:id="rId1"/></p:sldLayoutIdLst>'
        f"</p:sldMaster>"
    )


def _layout_xml() -> str:
    return (
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f'<p:sldLayout {NS_DECL} type="blank">{_EMPTY_TREE}'
        f"<p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sldLayout>"
    )


def _notes_master_xml() -> str:
    return (
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f"<p:notesMaster {NS_DECL}>{_EMPTY_TREE}{_CLR_MAP}</p:notesMaster>"
    )


def _theme_xml() -> str:
    accents = ["4472C4", "ED7D31", "A5A5A5", "FFC000", "5B9BD5", "70AD47"]
    accent_xml = "".join(
        f'<a:accent{i + 1}><a:srgbClr val="{c}"/></a:accent{i + 1}>' for i, c in enumerate(accents)
    )
    fill = '<a:solidFill><a:schemeClr val="phClr"/></a:solidFill>'
    line = (
        f'<a:ln w="9525" cap="flat" cmpd="sng" algn="ctr">{fill}<a:prstDash val="solid"/></a:ln>'
    )
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<a:theme xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" name="Dossier">'
        "<a:themeElements>"
        '<a:clrScheme name="Dossier"><a:dk1><a:sysClr val="windowText" lastClr="000000"/></a:dk1>'
        '<a:lt1><a:sysClr val="window" lastClr="FFFFFF"/></a:lt1>'
        '<a:dk2><a:srgbClr val="44546A"/></a:dk2><a:lt2><a:srgbClr val="E7E6E6"/></a:lt2>'
        f"{accent_xml}"
        '<a:hlink><a:srgbClr val="0563C1"/></a:hlink><a:folHlink><a:srgbClr val="954F72"/></a:folHlink>'
        "</a:clrScheme>"
        '<a:fontScheme name="Dossier"><a:majorFont><a:latin typeface="Helvetica"/><a:ea typeface=""/>'
        '<a:cs typeface=""/></a:majorFont><a:minorFont><a:latin typeface="Helvetica"/>'
        '<a:ea typeface=""/><a:cs typeface=""/></a:minorFont></a:fontScheme>'
        '<a:fmtScheme name="Dossier">'
        f"<a:fillStyleLst>{fill}{fill}{fill}</a:fillStyleLst>"
        f"<a:lnStyleLst>{line}{line}{line}</a:lnStyleLst>"
        '<a:effectStyleLst><a:effectStyle><a:effectLst/></a:effectStyle>'
        "<a:effectStyle><a:effectLst/></a:effectStyle>"
        "<a:effectStyle><a:effectLst/></a:effectStyle></a:effectStyleLst>"
        f"<a:bgFillStyleLst>{fill}{fill}{fill}</a:bgFillStyleLst>"
        "</a:fmtScheme></a:themeElements></a:theme>"
    )


def _core_props(generated_at: str) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<cp:coreProperties xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties" '
        'xmlns:dc="http://purl.org/dc/elements/1.1/" xmlns:dcterms="http://purl.org/dc/terms/" '
        'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">'
        "<dc:title>Target Dossier</dc:title>"
        f'<dcterms:created xsi:type="dcterms:W3CDTF">{escape(generated_at)}</dcterms:created>'
        "</cp:coreProperties>"
    )


_APP_PROPS = (
    '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
    '<Properties xmlns="http://schemas.openxmlformats.org/officeDocument/2006/extended-properties">'
    "<Application>dossier docgen</Application></Properties>"
)


# --- slide construction ------------------------------------------------------

MARGIN_PT = 36.0
TITLE_H_PT = 50.0
CONTENT_W_PT = 720.0 - 2 * MARGIN_PT  # slide is 720 x 540 pt


class _Media:
    def __init__(self):
        self.items: list[tuple[str, bytes]] = []  # (filename, data)

    def add(self, data: bytes, media_type: str) -> str:
        ext = "jpeg" if media_type == "image/jpeg" else "png"
        name = f"image{len(self.items) + 1}.{ext}"
        self.items.append((name, data))
        return name


def _chart_shapes(slide: _Slide, model: ChartModel, x_pt: float, y_pt: float, w_pt: float, h_pt: float):
    sx, sy = w_pt / 460.0, h_pt / 240.0
    for cmd in render_chart(model, 460.0, 240.0):
        if isinstance(cmd, Rect):
            slide.solid_rect(
                emu(x_pt + cmd.x * sx),
                emu(y_pt + cmd.y * sy),
                max(emu(cmd.w * sx), 1),
                max(emu(cmd.h * sy), 1),
                fill=_color(cmd.fill) if cmd.fill else "FFFFFF",
                stroke="888888" if cmd.stroke else None,
            )
        elif isinstance(cmd, Line):
            slide.line_shape(
                emu(x_pt + cmd.x1 * sx),
                emu(y_pt + cmd.y1 * sy),
                emu(x_pt + cmd.x2 * sx),
                emu(y_pt + cmd.y2 * sy),
                color=_color(cmd.color),
                width_pt=cmd.width,
            )
        elif isinstance(cmd, Text):
            tw = 160.0
            tx = cmd.x * sx
            if cmd.anchor == "middle":
                tx -= tw / 2.0
            elif cmd.anchor == "end":
                tx -= tw
            slide.textbox(
                emu(x_pt + tx),
                emu(y_pt + (cmd.y - cmd.size) * sy),
                emu(tw),
                emu(cmd.size + 8),
                cmd.text,
                size=max(cmd.size * min(sx, sy), 7.0),
                color=_color(cmd.color),
            )


def _condense(text: str, limit: int = 600) -> str:
    if len(text) <= limit:
        return text
    return text[: limit - 3].rstrip() + "..."


def _section_slide(section: Section, media: _Media) -> _Slide:
    slide = _Slide()
    slide.textbox(emu(MARGIN_PT), emu(18), emu(CONTENT_W_PT), emu(TITLE_H_PT),
                  section.title, size=26.0, bold=True)
    y = 18 + TITLE_H_PT + 8
    image_row_x = MARGIN_PT
    for block in section.blocks:
        if block.kind == "paragraph":
            text = _condense(block.payload["text"])
            lines = wrap_text(text, CONTENT_W_PT, 13.0)
            h = max(len(lines) * 18.0, 22.0)
            slide.textbox(emu(MARGIN_PT), emu(y), emu(CONTENT_W_PT), emu(h), text, size=13.0)
            y += h + 8
        elif block.kind == "table":
            rows = [[str(c) for c in row] for row in block.payload["rows"][:8]]
            if len(block.payload["rows"]) > 8:
                rows.append(["..."] * len(rows[0]))
            slide.table(emu(MARGIN_PT), emu(y), emu(CONTENT_W_PT), block.payload.get("header"), rows)
            n_rows = len(rows) + (1 if block.payload.get("header") else 0)
            y += n_rows * 20.0 + 10
        elif block.kind == "chart":
            _chart_shapes(slide, block.payload["model"], MARGIN_PT, y, 440.0, 230.0)
            y += 240.0
        elif block.kind == "image":
            name = media.add(block.payload["data"], block.payload["media_type"])
            rid = f"rId{len(slide.rels) + 10}"
            slide.rels.append((rid, f"{RT}/image", f"../media/{name}"))
            slide.picture(rid, emu(image_row_x), emu(y), emu(170), emu(130))
            caption = block.payload.get("caption", "")
            if caption:
                slide.textbox(emu(image_row_x), emu(y + 132), emu(170), emu(18), caption, size=9.0)
            image_row_x += 180
            if image_row_x + 170 > 720 - MARGIN_PT:
                image_row_x = MARGIN_PT
                y += 160
        elif block.kind == "swot_grid":
            p = block.payload
            header = ["Strengths", "Weaknesses"]
            rows = [
                ["\n".join(f"- {i}" for i in p["strengths"]), "\n".join(f"- {i}" for i in p["weaknesses"])],
                ["Opportunities", "Threats"],
                ["\n".join(f"- {i}" for i in p["opportunities"]), "\n".join(f"- {i}" for i in p["threats"])],
            ]
            slide.table(emu(MARGIN_PT), emu(y), emu(CONTENT_W_PT), header, rows, size=10.0)
            y += 200
    slide.notes_lines = ["Sources:"] + [
        f"- {r.source_name}: {r.locator}" + (f" ({r.detail})" if r.detail else "")
        for r in section.sources
    ]
    return slide


def render_pptx(dossier: Dossier) -> RenderedDocument:
    dossier.validate()
    media = _Media()
    slides: list[_Slide] = []

    title = _Slide()
    title.textbox(emu(MARGIN_PT), emu(180), emu(CONTENT_W_PT), emu(60),
                  "Target Dossier", size=36.0, bold=True)
    title.textbox(emu(MARGIN_PT), emu(250), emu(CONTENT_W_PT), emu(40),
                  f"{dossier.gene} in {dossier.disease}", size=20.0)
    title.textbox(emu(MARGIN_PT), emu(300), emu(CONTENT_W_PT), emu(24),
                  f"Generated: {dossier.generated_at}", size=11.0, color="666666")
    title.notes_lines = [
        f"Generated at {dossier.generated_at}.",
        f"Agent trace: {dossier.trace_ref or 'n/a'}.",
    ]
    slides.append(title)

    for section in dossier.walk_sections():
        if section.blocks:
            slides.append(_section_slide(section, media))

    return RenderedDocument(
        data=_package(slides, media, dossier.generated_at),
        media_type=PPTX_MEDIA_TYPE,
        count=len(slides),
    )


def _package(slides: list[_Slide], media: _Media, generated_at: str) -> bytes:
    n = len(slides)
    parts: list[tuple[str, str | bytes]] = []

    overrides = [
        ("/ppt/presentation.xml",
         "application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml"),
        ("/ppt/slideMasters/slideMaster1.xml",
         "application/vnd.openxmlformats-officedocument.presentationml.slideMaster+xml"),
        ("/ppt/slideLayouts/slideLayout1.xml",
         "application/vnd.openxmlformats-officedocument.presentationml.slideLayout+xml"),
        ("/ppt/notesMasters/notesMaster1.xml",
         "application/vnd.openxmlformats-officedocument.presentationml.notesMaster+xml"),
        ("/ppt/theme/theme1.xml", "application/vnd.openxmlformats-officedocument.theme+xml"),
        ("/docProps/core.xml", "application/vnd.openxmlformats-package.core-properties+xml"),
        ("/docProps/app.xml", "application/vnd.openxmlformats-officedocument.extended-properties+xml"),
    ]
    for i in range(1, n + 1):
        overrides.append((f"/ppt/slides/slide{i}.xml", CT_SLIDE))
        overrides.append((f"/ppt/notesSlides/notesSlide{i}.xml", CT_NOTES))
    override_xml = "".join(
        f'<Override PartName="{p}" ContentType="{ct}"/>' for p, ct in overrides
    )
    parts.append((
        "[Content_Types].xml",
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">'
        '<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>'
        '<Default Extension="xml" ContentType="application/xml"/>'
        '<Default Extension="jpeg" ContentType="image/jpeg"/>'
        '<Default Extension="png" ContentType="image/png"/>'
        f"{override_xml}</Types>",
    ))

    parts.append((
        "_rels/.rels",
        _rels_xml([
            ("rId1", f"{RT}/officeDocument", "ppt/presentation.xml"),
            ("rId2", "http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties",
             "docProps/core.xml"),
            ("rId3", f"{RT}/extended-properties", "docProps/app.xml"),
        ]),
    ))
    parts.append(("docProps/core.xml", _core_props(generated_at)))
    parts.append(("docProps/app.xml", _APP_PROPS))

    slide_ids = "".join(
        f'<p:sldId id="{255 + i}" r:id="rId{2 + i}"/>' for i in range(1, n + 1)
    )
    parts.append((
        "ppt/presentation.xml",
        f"<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
        f"<p:presentation {NS_DECL}>"
        f'<p:sldMasterIdLst><p:sldMasterId id="2147483648" r:id="rId1"/></p:sldMasterIdLst>'
        f'<p:notesMasterIdLst><p:notesMasterId r:id="rId2"/></p:notesMasterIdLst>'
        f"<p:sldIdLst>{slide_ids}</p:sldIdLst>"
        f'<p:sldSz cx="{SLIDE_W}" cy="{SLIDE_H}"/><p:notesSz cx="{SLIDE_H}" cy="{SLIDE_W}"/>'
        f"</p:presentation>",
    ))
    pres_rels = [
        ("rId1", f"{RT}/slideMaster", "slideMasters/slideMaster1.xml"),
        ("rId2", f"{RT}/notesMaster", "notesMasters/notesMaster1.xml"),
    ]
    for i in range(1, n + 1):
        pres_rels.append((f"rId{2 + i}", f"{RT}/slide", f"slides/slide{i}.xml"))
    parts.append(("ppt/_rels/presentation.xml.rels", _rels_xml(pres_rels)))

    parts.append(("ppt/slideMasters/slideMaster1.xml", _master_xml()))
    parts.append((
        "ppt/slideMasters/_rels/slideMaster1.xml.rels",
        _rels_xml([
            ("rId1", f"{RT}/slideLayout", "../slideLayouts/slideLayout1.xml"),
            ("rId2", f"{RT}/theme", "../theme/theme1.xml"),
        ]),
    ))
    parts.append(("ppt/slideLayouts/slideLayout1.xml", _layout_xml()))
    parts.append((
        "ppt/slideLayouts/_rels/slideLayout1.xml.rels",
        _rels_xml([("rId1", f"{RT}/slideMaster", "../slideMasters/slideMaster1.xml")]),
    ))
    parts.append(("ppt/notesMasters/notesMaster1.xml", _notes_master_xml()))
    parts.append((
        "ppt/notesMasters/_rels/notesMaster1.xml.rels",
        _rels_xml([("rId1", f"{RT}/theme", "../theme/theme1.xml")]),
    ))
    parts.append(("ppt/theme/theme1.xml", _theme_xml()))

    for i, slide in enumerate(slides, start=1):
        parts.append((f"ppt/slides/slide{i}.xml", slide.xml()))
        slide_rels = [
            ("rId1", f"{RT}/slideLayout", "../slideLayouts/slideLayout1.xml"),
            ("rId2", f"{RT}/notesSlide", f"../notesSlides/notesSlide{i}.xml"),
        ] + slide.rels
        parts.append((f"ppt/slides/_rels/slide{i}.xml.rels", _rels_xml(slide_rels)))
        notes_lines = slide.notes_lines or ["(no notes)"]
        parts.append((f"ppt/notesSlides/notesSlide{i}.xml", _notes_xml(notes_lines)))
        parts.append((
            f"ppt/notesSlides/_rels/notesSlide{i}.xml.rels",
            _rels_xml([
                ("rId1", f"{RT}/slide", f"../slides/slide{i}.xml"),
                ("rId2", f"{RT}/notesMaster", "../notesMasters/notesMaster1.xml"),
            ]),
        ))

    for name, data in media.items:
        parts.append((f"ppt/media/{name}", data))

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, payload in parts:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o600 << 16
            data = payload.encode("utf-8") if isinstance(payload, str) else payload
            zf.writestr(info, data)
    return buf.getvalue()
