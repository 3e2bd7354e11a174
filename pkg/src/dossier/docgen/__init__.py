"""Document generation: dossier model in, deliverables out.

`render_pdf` writes the report directly against the PDF object/xref model;
`render_pptx` writes the OOXML package part by part.  Both consume the same
dossier value and the same device-independent chart command lists, so their
provenance content stays in lockstep.
"""

from ..core import ChartModel
from .charts import Line, Rect, Text, render_chart
from .pdf import RenderedDocument, render_charts_pdf, render_pdf
from .pptx import render_pptx

__all__ = [
    "ChartModel",
    "Line",
    "Rect",
    "Text",
    "render_chart",
    "RenderedDocument",
    "render_pdf",
    "render_charts_pdf",
    "render_pptx",
]
