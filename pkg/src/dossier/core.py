"""Shared domain model: provenance records, dossier tree, grounded answers.

Everything downstream (retrieval, recipes, document rendering) exchanges the
immutable value types defined here.  Citation trust rests on two pieces of
this module: ``SourceRef`` construction rejects unknown sources, and
``validate_answer`` strips any citation that was not part of the prompt
context.
"""

from __future__ import annotations

import base64
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone

# The closed set of source names a SourceRef may carry.  Registry metadata
# (URLs, access tiers, rate limits) lives in dossier.biodata.registry; the
# name set itself is shared here so core types need no upward import.
SOURCE_NAMES = frozenset(
    {
        "UniProt",
        "Human Protein Atlas",
        "DrugBank",
        "Open Targets",
        "RCSB PDB",
        "cBioPortal",
        "TCGA Survival",
        "OGEE",
        "STRING",
        "SIGNOR",
        "ESMO",
        "PubChem",
        "Gene",
        "PubMed",
        "PMC",
        "BLAST",
        "DeepTMHMM",
        "GSEAPy",
    }
)

BLOCK_KINDS = ("paragraph", "table", "chart", "image", "swot_grid")
IMAGE_MEDIA_TYPES = ("image/jpeg", "image/png")


class DossierError(Exception):
    """Base error for the package."""


class ValidationError(DossierError):
    """A domain invariant was violated."""


class Clock:
    """Time source, injectable so offline runs are byte-stable."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class FixedClock(Clock):
    def __init__(self, pinned: datetime | str):
        if isinstance(pinned, str):
            pinned = datetime.fromisoformat(pinned)
        if pinned.tzinfo is None:
            pinned = pinned.replace(tzinfo=timezone.utc)
        self._pinned = pinned

    def now(self) -> datetime:
        return self._pinned


def _iso(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True, order=True)
class SourceRef:
    """Provenance record attached to every generated fact."""

    source_name: str
    locator: str
    detail: str | None = None
    retrieved_at: str = ""

    def __post_init__(self):
        if self.source_name not in SOURCE_NAMES:
            raise ValidationError(f"unknown source name: {self.source_name!r}")
        if not self.locator:
            raise ValidationError("SourceRef locator must be non-empty")

    def key(self) -> tuple[str, str]:
        return (self.source_name, self.locator)


@dataclass(frozen=True)
class GroundedAnswer:
    """Generated prose plus the citations that survived context validation."""

    text: str
    citations: frozenset[SourceRef]
    context_ids: frozenset[str]
    warnings: tuple[str, ...] = ()

    def pmid_citations(self) -> set[str]:
        return {c.locator for c in self.citations if c.source_name == "PubMed"}


@dataclass(frozen=True)
class ChartModel:
    """Device-independent chart description rendered by docgen.

    ``bar`` draws one bar per label; ``step`` draws a non-increasing survival
    staircase; ``box`` draws one quartile box per label and requires ``spans``
    holding (q1, q3) per label, with ``values`` holding the medians.
    """

    kind: str
    labels: tuple[str, ...]
    values: tuple[float, ...]
    x_title: str = ""
    y_title: str = ""
    spans: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("bar", "step", "box"):
            raise ValidationError(f"unknown chart kind: {self.kind!r}")
        if len(self.labels) != len(self.values):
            raise ValidationError("chart labels and values must align")
        if any(v != v or v in (float("inf"), float("-inf")) for v in self.values):
            raise ValidationError("chart values must be finite")
        if self.kind == "step" and any(
            b > a for a, b in zip(self.values, self.values[1:])
        ):
            raise ValidationError("step chart values must be non-increasing")
        if self.kind == "box" and len(self.spans) != len(self.labels):
            raise ValidationError("box chart requires one (q1, q3) span per label")


@dataclass(frozen=True)
class Block:
    """One content unit inside a section."""

    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ValidationError(f"unknown block kind: {self.kind!r}")
        p = self.payload
        if self.kind == "table":
            rows = p.get("rows", [])
            widths = {len(r) for r in rows}
            if p.get("header") is not None:
                widths.add(len(p["header"]))
            if len(widths) > 1:
                raise ValidationError("table rows must be rectangular")
        elif self.kind == "image":
            if p.get("media_type") not in IMAGE_MEDIA_TYPES:
                raise ValidationError(f"unsupported image media type: {p.get('media_type')!r}")
            if not isinstance(p.get("data"), bytes) or not p["data"]:
                raise ValidationError("image block requires raw bytes")
        elif self.kind == "chart":
            if not isinstance(p.get("model"), ChartModel):
                raise ValidationError("chart block requires a ChartModel payload")
        elif self.kind == "swot_grid":
            for quadrant in ("strengths", "weaknesses", "opportunities", "threats"):
                if not isinstance(p.get(quadrant), list):
                    raise ValidationError(f"swot_grid missing list for {quadrant!r}")
        elif self.kind == "paragraph":
            if not isinstance(p.get("text"), str):
                raise ValidationError("paragraph block requires text")


def paragraph(text: str) -> Block:
    return Block("paragraph", {"text": text})


def table(rows: list[list[str]], header: list[str] | None = None) -> Block:
    return Block("table", {"header": header, "rows": rows})


def chart(model: ChartModel) -> Block:
    return Block("chart", {"model": model})


def image(data: bytes, media_type: str, caption: str = "") -> Block:
    return Block("image", {"data": data, "media_type": media_type, "caption": caption})


def swot_grid(strengths, weaknesses, opportunities, threats) -> Block:
    return Block(
        "swot_grid",
        {
            "strengths": list(strengths),
            "weaknesses": list(weaknesses),
            "opportunities": list(opportunities),
            "threats": list(threats),
        },
    )


@dataclass(frozen=True)
class Section:
    """A dossier node: display content plus the provenance that backs it."""

    id: str
    title: str
    blocks: tuple[Block, ...] = ()
    sources: tuple[SourceRef, ...] = ()
    children: tuple[Section, ...] = ()

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def validate(self):
        if self.blocks and not self.sources:
            raise ValidationError(f"section {self.id!r} has content but no sources")
        for child in self.children:
            child.validate()


@dataclass(frozen=True)
class Dossier:
    gene: str
    disease: str
    sections: tuple[Section, ...]
    generated_at: str
    trace_ref: str = ""

    def walk_sections(self):
        for section in self.sections:
            yield from section.walk()

    def all_refs(self) -> list[SourceRef]:
        refs: list[SourceRef] = []
        for section in self.walk_sections():
            refs.extend(section.sources)
        return refs

    def validate(self, plan_titles: list[str] | None = None):
        titles = [s.title for s in self.sections]
        expected = plan_titles or DEFAULT_PLAN_TITLES
        if titles != list(expected):
            raise ValidationError(
                f"top-level sections {titles!r} do not match the dossier plan {list(expected)!r}"
            )
        for section in self.sections:
            section.validate()


DEFAULT_PLAN_TITLES = (
    "Target information",
    "Disease information",
    "Competitive landscape",
    "Conclusion",
)


# --- citation validation -------------------------------------------------

# Inline wire syntax: [PMID:123] for literature, [SRC:UniProt:P01116] for
# anything else.  Locators may not contain ']' by construction.
_PMID_MARKER = re.compile(r"\[PMID:(\d+)\]")
_SRC_MARKER = re.compile(r"\[SRC:([^:\]]+):([^\]]+)\]")


def validate_answer(
    text: str,
    context_ids: set[str] | set[int] | frozenset,
    clock: Clock | None = None,
) -> GroundedAnswer:
    """Keep only citations whose locator was actually in the prompt context.

    Markers citing anything else are removed from the text and reported as
    warnings.  Validation never fails: a dossier with a stripped citation is
    more useful than no dossier.
    """
    clock = clock or Clock()
    ids = frozenset(str(i) for i in context_ids)
    ts = _iso(clock.now())
    citations: set[SourceRef] = set()
    warnings: list[str] = []

    def check_pmid(m: re.Match) -> str:
        pmid = m.group(1)
        if pmid in ids:
            citations.add(SourceRef("PubMed", pmid, retrieved_at=ts))
            return m.group(0)
        warnings.append(f"stripped citation [PMID:{pmid}]: not in context")
        return ""

    def check_src(m: re.Match) -> str:
        name, locator = m.group(1), m.group(2)
        if name not in SOURCE_NAMES:
            warnings.append(f"stripped citation [SRC:{name}:{locator}]: unknown source")
            return ""
        citations.add(SourceRef(name, locator, retrieved_at=ts))
        return m.group(0)

    out = _PMID_MARKER.sub(check_pmid, text)
    out = _SRC_MARKER.sub(check_src, out)
    return GroundedAnswer(
        text=out,
        citations=frozenset(citations),
        context_ids=ids,
        warnings=tuple(warnings),
    )


def assemble_sources_appendix(dossier: Dossier) -> Section:
    """Build the trailing Sources section: every distinct reference, grouped
    by source name in first-occurrence order."""
    seen: dict[tuple[str, str], SourceRef] = {}
    group_order: list[str] = []
    for ref in dossier.all_refs():
        if ref.key() not in seen:
            seen[ref.key()] = ref
            if ref.source_name not in group_order:
                group_order.append(ref.source_name)
    rows = []
    ordered: list[SourceRef] = []
    for name in group_order:
        for key, ref in seen.items():
            if key[0] == name:
                ordered.append(ref)
                rows.append([name, ref.locator, ref.detail or ""])
    blocks = (table(rows, header=["Source", "Locator", "Detail"]),) if rows else ()
    return Section(
        id="sources",
        title="Sources",
        blocks=blocks,
        sources=tuple(ordered),
    )


# --- serialization (the dossier.json contract) ----------------------------

def _chart_to_json(m: ChartModel) -> dict:
    d = {
        "kind": m.kind,
        "labels": list(m.labels),
        "values": list(m.values),
        "x_title": m.x_title,
        "y_title": m.y_title,
    }
    if m.spans:
        d["spans"] = [list(s) for s in m.spans]
    return d


def _chart_from_json(d: dict) -> ChartModel:
    return ChartModel(
        kind=d["kind"],
        labels=tuple(d["labels"]),
        values=tuple(d["values"]),
        x_title=d.get("x_title", ""),
        y_title=d.get("y_title", ""),
        spans=tuple(tuple(s) for s in d.get("spans", [])),
    )


def _block_to_json(b: Block) -> dict:
    if b.kind == "image":
        payload = dict(b.payload)
        payload["data"] = base64.b64encode(payload["data"]).decode("ascii")
    elif b.kind == "chart":
        payload = {"model": _chart_to_json(b.payload["model"])}
    else:
        payload = b.payload
    return {"kind": b.kind, "payload": payload}


def _block_from_json(d: dict) -> Block:
    payload = d["payload"]
    if d["kind"] == "image":
        payload = dict(payload)
        payload["data"] = base64.b64decode(payload["data"])
    elif d["kind"] == "chart":
        payload = {"model": _chart_from_json(payload["model"])}
    return Block(d["kind"], payload)


def _ref_to_json(r: SourceRef) -> dict:
    return {
        "source_name": r.source_name,
        "locator": r.locator,
        "detail": r.detail,
        "retrieved_at": r.retrieved_at,
    }


def _ref_from_json(d: dict) -> SourceRef:
    return SourceRef(d["source_name"], d["locator"], d.get("detail"), d.get("retrieved_at", ""))


def _section_to_json(s: Section) -> dict:
    return {
        "id": s.id,
        "title": s.title,
        "blocks": [_block_to_json(b) for b in s.blocks],
        "sources": [_ref_to_json(r) for r in s.sources],
        "children": [_section_to_json(c) for c in s.children],
    }


def _section_from_json(d: dict) -> Section:
    return Section(
        id=d["id"],
        title=d["title"],
        blocks=tuple(_block_from_json(b) for b in d["blocks"]),
        sources=tuple(_ref_from_json(r) for r in d["sources"]),
        children=tuple(_section_from_json(c) for c in d["children"]),
    )


def dossier_to_json(d: Dossier) -> str:
    doc = {
        "gene": d.gene,
        "disease": d.disease,
        "generated_at": d.generated_at,
        "trace_ref": d.trace_ref,
        "sections": [_section_to_json(s) for s in d.sections],
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dossier_from_json(text: str) -> Dossier:
    doc = json.loads(text)
    return Dossier(
        gene=doc["gene"],
        disease=doc["disease"],
        sections=tuple(_section_from_json(s) for s in doc["sections"]),
        generated_at=doc["generated_at"],
        trace_ref=doc.get("trace_ref", ""),
    )
