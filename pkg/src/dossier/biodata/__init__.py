"""Biomedical data access and local analytics.

Typed clients for the external source registry (replayable from recorded
cassettes), plus the in-repo math that replaces remote computations:
global sequence alignment for similarity tables, the hypergeometric
over-representation test for pathway enrichment, and the product-limit
survival estimator.
"""

from .align import Alignment, align_global, percent_identity
from .fasta import FastaRecord, parse_fasta
from .registry import REGISTRY, SourceRegistryEntry
from .stats import (
    EnrichmentResult,
    GeneSetLibrary,
    SurvivalCurve,
    bh_adjust,
    enrich,
    hypergeom_sf,
    km_estimate,
    parse_gmt,
)

__all__ = [
    "Alignment",
    "align_global",
    "percent_identity",
    "FastaRecord",
    "parse_fasta",
    "REGISTRY",
    "SourceRegistryEntry",
    "EnrichmentResult",
    "GeneSetLibrary",
    "SurvivalCurve",
    "bh_adjust",
    "enrich",
    "hypergeom_sf",
    "km_estimate",
    "parse_gmt",
]
