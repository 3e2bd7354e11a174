"""PDF report writer, implemented directly against the file format.

Pages are built as uncompressed content streams; images embed as XObjects
(JPEG passed through with DCTDecode, PNG recompressed to FlateDecode RGB);
the cross-reference table is emitted by hand.  Output bytes depend only on
the dossier value, so a pinned clock upstream yields bit-identical files.
"""

from __future__ import annotations

import io
import re
import zlib
from dataclasses import dataclass

from PIL import Image as PILImage

from ..core import (
    Block,
    ChartModel,
    Dossier,
    DossierError,
    Section,
    assemble_sources_appendix,
)
from .charts import Line, Rect, Text, render_chart
from .fonts import string_width, wrap_text

PAGE_W = 595.0
PAGE_H = 842.0
MARGIN = 57.0
CONTENT_W = PAGE_W - 2 * MARGIN
BODY_SIZE = 10.0
BODY_LEADING = 14.0
H1_SIZE = 18.0
H2_SIZE = 13.0
TOC_LEADING = 16.0
CHART_W = 460.0
CHART_H = 240.0

GRAY = (0.45, 0.45, 0.45)
TABLE_LINE = (0.6, 0.6, 0.6)
HEADER_FILL = (0.91, 0.93, 0.96)


class DocgenError(DossierError):
    pass


@dataclass(frozen=True)
class RenderedDocument:
    data: bytes
    media_type: str  # application/pdf | pptx content type
    count: int  # pages or slides

    def __post_init__(self):
        if self.media_type == "application/pdf" and not self.data.startswith(b"%PDF-"):
            raise DocgenError("PDF bytes must start with %PDF-")
        if "presentation" in self.media_type and not self.data.startswith(b"PK"):
            raise DocgenError("PPTX bytes must start with the ZIP signature")


PPTX_MEDIA_TYPE = "application/vnd.openxmlformats-officedocument.presentationml.presentation"


def _esc(text: str) -> str:
    out = []
    for ch in text:
        if ch in "\\()":
            out.append("\\" + ch)
        elif 32 <= ord(ch) <= 126:
            out.append(ch)
        else:
            try:
                ch.encode("latin-1")
                out.append(f"\\{ord(ch.encode('latin-1')):03o}")
            except UnicodeEncodeError:
                out.append("?")
    return "".join(out)


def _n(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return s if s else "0"


class _Page:
    """One page: content ops plus the image resources it references."""

    def __init__(self):
        self.ops: list[str] = []
        self.images: list[str] = []  # XObject names used on this page

    # top-left origin helpers; flip y when emitting
    def text(self, x, y, size, s, bold=False, color=(0, 0, 0), anchor="start"):
        if anchor == "middle":
            x -= string_width(s, size, bold) / 2.0
        elif anchor == "end":
            x -= string_width(s, size, bold)
        font = "F2" if bold else "F1"
        r, g, b = color
        self.ops.append(
            f"BT /{font} {_n(size)} Tf {_n(r)} {_n(g)} {_n(b)} rg "
            f"{_n(x)} {_n(PAGE_H - y)} Td ({_esc(s)}) Tj ET"
        )

    def rect(self, x, y, w, h, fill=None, stroke=None, line_width=0.75):
        parts = []
        if fill:
            parts.append(f"{_n(fill[0])} {_n(fill[1])} {_n(fill[2])} rg")
        if stroke:
            parts.append(f"{_n(stroke[0])} {_n(stroke[1])} {_n(stroke[2])} RG {_n(line_width)} w")
        op = "B" if (fill and stroke) else ("f" if fill else "S")
        parts.append(f"{_n(x)} {_n(PAGE_H - y - h)} {_n(w)} {_n(h)} re {op}")
        self.ops.append(" ".join(parts))

    def line(self, x1, y1, x2, y2, color=(0, 0, 0), width=0.75):
        r, g, b = color
        self.ops.append(
            f"{_n(r)} {_n(g)} {_n(b)} RG {_n(width)} w "
            f"{_n(x1)} {_n(PAGE_H - y1)} m {_n(x2)} {_n(PAGE_H - y2)} l S"
        )

    def image(self, name, x, y, w, h):
        self.images.append(name)
        self.ops.append(f"q {_n(w)} 0 0 {_n(h)} {_n(x)} {_n(PAGE_H - y - h)} cm /{name} Do Q")

    def content(self) -> bytes:
        return ("\n".join(self.ops) + "\n").encode("latin-1")


@dataclass
class _XImage:
    name: str
    width: int
    height: int
    color_space: str
    filter_name: str
    data: bytes


def _prepare_image(data: bytes, media_type: str, index: int) -> _XImage:
    img = PILImage.open(io.BytesIO(data))
    if media_type == "image/jpeg":
        mode_to_cs = {"RGB": "DeviceRGB", "L": "DeviceGray", "CMYK": "DeviceCMYK"}
        cs = mode_to_cs.get(img.mode)
        if cs is None:
            rgb = img.convert("RGB")
            raw = zlib.compress(rgb.tobytes(), 6)
            return _XImage(f"Im{index}", img.width, img.height, "DeviceRGB", "FlateDecode", raw)
        return _XImage(f"Im{index}", img.width, img.height, cs, "DCTDecode", data)
    if media_type == "image/png":
        rgb = img.convert("RGB")
        raw = zlib.compress(rgb.tobytes(), 6)
        return _XImage(f"Im{index}", img.width, img.height, "DeviceRGB", "FlateDecode", raw)
    raise DocgenError(f"unsupported image media type: {media_type}")


class _Layout:
    """Top-down cursor layout with page breaks and a running ToC map."""

    def __init__(self, first_page_number: int):
        self.pages: list[_Page] = []
        self.page_numbers: list[int] = []
        self.first_page_number = first_page_number
        self.images: list[_XImage] = []
        self.warnings: list[str] = []
        self.y = MARGIN
        self._new_page()

    def _new_page(self):
        self.pages.append(_Page())
        self.page_numbers.append(self.first_page_number + len(self.pages) - 1)
        self.y = MARGIN

    @property
    def page(self) -> _Page:
        return self.pages[-1]

    @property
    def page_number(self) -> int:
        return self.page_numbers[-1]

    def ensure(self, height: float):
        if self.y + height > PAGE_H - MARGIN:
            self._new_page()

    def heading(self, text: str, size: float, new_page: bool = False):
        if new_page and self.page.ops:
            self._new_page()
        self.ensure(size + 18)
        self.y += size
        self.page.text(MARGIN, self.y, size, text, bold=True)
        self.y += 10

    def paragraph(self, text: str, size: float = BODY_SIZE, color=(0, 0, 0)):
        for line in wrap_text(text, CONTENT_W, size):
            self.ensure(BODY_LEADING)
            self.y += BODY_LEADING
            self.page.text(MARGIN, self.y, size, line, color=color)
        self.y += 4

    def table(self, header: list[str] | None, rows: list[list[str]]):
        all_rows = ([header] if header else []) + rows
        if not all_rows:
            return
        ncols = len(all_rows[0])
        col_w = CONTENT_W / ncols
        size = 9.0
        for r, row in enumerate(all_rows):
            is_header = header is not None and r == 0
            cells = [wrap_text(str(c), col_w - 8, size, bold=is_header) for c in row]
            row_h = max(len(c) for c in cells) * 12.0 + 6
            self.ensure(row_h)
            top = self.y
            if is_header:
                self.page.rect(MARGIN, top, CONTENT_W, row_h, fill=HEADER_FILL)
            for ci, lines in enumerate(cells):
                x = MARGIN + ci * col_w
                for li, line in enumerate(lines):
                    self.page.text(x + 4, top + 12 + li * 12.0, size, line, bold=is_header)
            self.page.rect(MARGIN, top, CONTENT_W, row_h, stroke=TABLE_LINE)
            for ci in range(1, ncols):
                x = MARGIN + ci * col_w
                self.page.line(x, top, x, top + row_h, color=TABLE_LINE)
            self.y = top + row_h
        self.y += 8

    def chart(self, model: ChartModel):
        self.ensure(CHART_H + 10)
        top = self.y
        for cmd in render_chart(model, CHART_W, CHART_H):
            ox = MARGIN + (CONTENT_W - CHART_W) / 2.0
            if isinstance(cmd, Rect):
                stroke = TABLE_LINE if cmd.stroke else None
                self.page.rect(ox + cmd.x, top + cmd.y, cmd.w, cmd.h, fill=cmd.fill, stroke=stroke)
            elif isinstance(cmd, Line):
                self.page.line(ox + cmd.x1, top + cmd.y1, ox + cmd.x2, top + cmd.y2,
                               color=cmd.color, width=cmd.width)
            elif isinstance(cmd, Text):
                self.page.text(ox + cmd.x, top + cmd.y, cmd.size, cmd.text,
                               anchor=cmd.anchor, color=cmd.color)
        self.y = top + CHART_H + 10

    def image_block(self, data: bytes, media_type: str, caption: str):
        try:
            ximg = _prepare_image(data, media_type, len(self.images) + 1)
        except DocgenError as exc:
            self.warnings.append(str(exc))
            self.ensure(60)
            self.page.rect(MARGIN, self.y, 180, 50, stroke=TABLE_LINE)
            self.page.text(MARGIN + 8, self.y + 28, BODY_SIZE, "image unavailable", color=GRAY)
            self.y += 58
            return
        self.images.append(ximg)
        scale = min(220.0 / ximg.width, 200.0 / ximg.height, 1.5)
        w, h = ximg.width * scale, ximg.height * scale
        self.ensure(h + 24)
        self.page.image(ximg.name, MARGIN, self.y, w, h)
        self.y += h
        if caption:
            self.y += 12
            self.page.text(MARGIN, self.y, 8.5, caption, color=GRAY)
        self.y += 10

    def swot(self, payload: dict):
        quads = [
            ("Strengths", payload["strengths"]),
            ("Weaknesses", payload["weaknesses"]),
            ("Opportunities", payload["opportunities"]),
            ("Threats", payload["threats"]),
        ]
        rows = []
        for (t1, items1), (t2, items2) in (quads[:2], quads[2:]):
            rows.append([t1, t2])
            rows.append(["\n".join(f"- {i}" for i in items1), "\n".join(f"- {i}" for i in items2)])
        self.table(None, rows)


def _render_block(layout: _Layout, block: Block):
    if block.kind == "paragraph":
        layout.paragraph(block.payload["text"])
    elif block.kind == "table":
        layout.table(block.payload.get("header"), block.payload["rows"])
    elif block.kind == "chart":
        layout.chart(block.payload["model"])
    elif block.kind == "image":
        layout.image_block(block.payload["data"], block.payload["media_type"], block.payload.get("caption", ""))
    elif block.kind == "swot_grid":
        layout.swot(block.payload)


def _toc_entries(dossier: Dossier) -> list[tuple[int, str, str]]:
    entries = []
    for i, section in enumerate(dossier.sections, start=1):
        entries.append((0, f"{i}.", section.title))
        for j, child in enumerate(section.children, start=1):
            entries.append((1, f"{i}.{j}", child.title))
    return entries


def _toc_capacity() -> int:
    return int((PAGE_H - 2 * MARGIN - 40) // TOC_LEADING)


def _creation_date(generated_at: str) -> str:
    digits = re.sub(r"[^0-9]", "", generated_at)[:14]
    return f"D:{digits}Z" if digits else "D:20000101000000Z"


class _PdfAssembler:
    def __init__(self):
        self.objects: list[bytes | None] = []

    def add(self, body: bytes) -> int:
        self.objects.append(body)
        return len(self.objects)

    def reserve(self) -> int:
        self.objects.append(None)
        return len(self.objects)

    def set(self, num: int, body: bytes):
        self.objects[num - 1] = body

    def stream(self, dict_entries: str, data: bytes) -> int:
        body = f"<< {dict_entries} /Length {len(data)} >>\nstream\n".encode("latin-1")
        return self.add(body + data + b"\nendstream")

    def build(self, root: int, info: int | None) -> bytes:
        out = io.BytesIO()
        out.write(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
        offsets = [0] * (len(self.objects) + 1)
        for i, body in enumerate(self.objects, start=1):
            assert body is not None, f"object {i} never set"
            offsets[i] = out.tell()
            out.write(f"{i} 0 obj\n".encode("latin-1"))
            out.write(body)
            out.write(b"\nendobj\n")
        xref_at = out.tell()
        out.write(f"xref\n0 {len(self.objects) + 1}\n".encode("latin-1"))
        out.write(b"0000000000 65535 f \n")
        for i in range(1, len(self.objects) + 1):
            out.write(f"{offsets[i]:010d} 00000 n \n".encode("latin-1"))
        trailer = f"trailer\n<< /Size {len(self.objects) + 1} /Root {root} 0 R"
        if info:
            trailer += f" /Info {info} 0 R"
        trailer += f" >>\nstartxref\n{xref_at}\n%%EOF\n"
        out.write(trailer.encode("latin-1"))
        return out.getvalue()


def _assemble(pages: list[_Page], images: list[_XImage], generated_at: str) -> bytes:
    pdf = _PdfAssembler()
    catalog = pdf.reserve()
    pages_node = pdf.reserve()
    f1 = pdf.add(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>")
    f2 = pdf.add(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica-Bold /Encoding /WinAnsiEncoding >>")

    image_objs: dict[str, int] = {}
    for ximg in images:
        num = pdf.stream(
            f"/Type /XObject /Subtype /Image /Width {ximg.width} /Height {ximg.height} "
            f"/ColorSpace /{ximg.color_space} /BitsPerComponent 8 /Filter /{ximg.filter_name}",
            ximg.data,
        )
        image_objs[ximg.name] = num

    page_ids = []
    for page in pages:
        content = pdf.stream("", page.content())
        xobjects = ""
        if page.images:
            entries = " ".join(f"/{name} {image_objs[name]} 0 R" for name in sorted(set(page.images)))
            xobjects = f" /XObject << {entries} >>"
        resources = f"<< /Font << /F1 {f1} 0 R /F2 {f2} 0 R >>{xobjects} >>"
        page_id = pdf.add(
            f"<< /Type /Page /Parent {pages_node} 0 R /MediaBox [0 0 {_n(PAGE_W)} {_n(PAGE_H)}] "
            f"/Resources {resources} /Contents {content} 0 R >>".encode("latin-1")
        )
        page_ids.append(page_id)

    kids = " ".join(f"{pid} 0 R" for pid in page_ids)
    pdf.set(pages_node, f"<< /Type /Pages /Count {len(page_ids)} /Kids [ {kids} ] >>".encode("latin-1"))
    pdf.set(catalog, f"<< /Type /Catalog /Pages {pages_node} 0 R >>".encode("latin-1"))
    info = pdf.add(
        f"<< /Producer (dossier docgen) /CreationDate ({_creation_date(generated_at)}) >>".encode("latin-1")
    )
    return pdf.build(catalog, info)


def _footer(page: _Page, number: int):
    page.text(PAGE_W / 2.0, PAGE_H - 28.0, 9.0, str(number), anchor="middle", color=GRAY)


def render_pdf(dossier: Dossier) -> RenderedDocument:
    """Cover, ToC with page numbers, plan-ordered sections, Sources last."""
    dossier.validate()
    appendix = assemble_sources_appendix(dossier)
    entries = _toc_entries(dossier)
    toc_pages = max(1, -(-len(entries) // _toc_capacity()))
    body_first = 1 + toc_pages + 1

    layout = _Layout(first_page_number=body_first)
    section_pages: dict[str, int] = {}
    for i, section in enumerate(dossier.sections, start=1):
        layout.heading(f"{i}. {section.title}", H1_SIZE, new_page=True)
        section_pages[section.id] = layout.page_number
        for block in section.blocks:
            _render_block(layout, block)
        for j, child in enumerate(section.children, start=1):
            layout.heading(f"{i}.{j} {child.title}", H2_SIZE)
            section_pages[child.id] = layout.page_number
            for block in child.blocks:
                _render_block(layout, block)

    layout.heading("Sources", H1_SIZE, new_page=True)
    if appendix.blocks:
        for block in appendix.blocks:
            _render_block(layout, block)
    else:
        layout.paragraph("No sources recorded.", color=GRAY)

    # cover
    cover = _Page()
    cover.text(MARGIN, 240, 26, "Target Dossier", bold=True)
    cover.text(MARGIN, 290, 16, f"{dossier.gene} in {dossier.disease}")
    cover.text(MARGIN, 330, 10, f"Generated: {dossier.generated_at}", color=GRAY)
    if dossier.trace_ref:
        cover.text(MARGIN, 346, 10, f"Trace: {dossier.trace_ref}", color=GRAY)

    # table of contents, with final page numbers
    toc_page_list: list[_Page] = []
    capacity = _toc_capacity()
    flat: list[tuple[int, str, str, str]] = []
    for (level, number, title), section in zip(entries, _toc_sections(dossier)):
        flat.append((level, number, title, str(section_pages[section.id])))
    for start in range(0, len(flat), capacity):
        page = _Page()
        y = MARGIN + 20
        page.text(MARGIN, y, H1_SIZE, "Table of contents", bold=True)
        y += 16
        for level, number, title, pageno in flat[start : start + capacity]:
            y += TOC_LEADING
            indent = MARGIN + level * 18
            label = f"{number} {title}"
            page.text(indent, y, BODY_SIZE, label, bold=(level == 0))
            label_w = string_width(label, BODY_SIZE, bold=(level == 0))
            dots_from = indent + label_w + 6
            dots_to = PAGE_W - MARGIN - 24
            if dots_to > dots_from:
                n_dots = int((dots_to - dots_from) / string_width(".", BODY_SIZE))
                page.text(dots_from, y, BODY_SIZE, "." * n_dots, color=GRAY)
            page.text(PAGE_W - MARGIN, y, BODY_SIZE, pageno, anchor="end")
        toc_page_list.append(page)

    all_pages = [cover] + toc_page_list + layout.pages
    for idx, page in enumerate(all_pages[1:], start=2):
        _footer(page, idx)

    data = _assemble(all_pages, layout.images, dossier.generated_at)
    return RenderedDocument(data=data, media_type="application/pdf", count=len(all_pages))


def _toc_sections(dossier: Dossier):
    for section in dossier.sections:
        yield section
        yield from section.children


def render_charts_pdf(title: str, charts: list[tuple[str, ChartModel]]) -> RenderedDocument:
    """Standalone chart booklet (used by the eval report's box plots)."""
    layout = _Layout(first_page_number=1)
    layout.heading(title, H1_SIZE)
    for heading, model in charts:
        layout.heading(heading, H2_SIZE)
        layout.chart(model)
    for idx, page in enumerate(layout.pages, start=1):
        _footer(page, idx)
    data = _assemble(layout.pages, layout.images, "")
    return RenderedDocument(data=data, media_type="application/pdf", count=len(layout.pages))
