"""The source registry: every external database or tool the pipeline may
cite, with its access tier and live-mode rate limit."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import SOURCE_NAMES, ValidationError

ACCESS_TIERS = ("live", "fixture_only")


@dataclass(frozen=True)
class SourceRegistryEntry:
    name: str
    base_url: str
    access: str
    rate_limit: float  # requests per second in live mode
    description: str = ""

    def __post_init__(self):
        if self.access not in ACCESS_TIERS:
            raise ValidationError(f"unknown access tier: {self.access!r}")


def _entry(name, base_url, access, rate_limit, description):
    return SourceRegistryEntry(name, base_url, access, rate_limit, description)


# fixture_only tiers: licensed (DrugBank), unstructured guideline/visual
# sites (ESMO, TCGA Survival, OGEE, SIGNOR), ML services (DeepTMHMM), and
# the two computations performed locally in this package (BLAST alignment,
# GSEAPy-style enrichment) which keep registry entries so their results can
# be cited.
REGISTRY: dict[str, SourceRegistryEntry] = {
    e.name: e
    for e in [
        _entry("UniProt", "https://rest.uniprot.org", "live", 5.0,
               "Protein sequence and functional annotation"),
        _entry("Human Protein Atlas", "https://www.proteinatlas.org", "live", 2.0,
               "Genome-wide human protein profiling, incl. subcellular imaging"),
        _entry("DrugBank", "https://go.drugbank.com", "fixture_only", 1.0,
               "Drug and drug-target reference (licensed)"),
        _entry("Open Targets", "https://api.platform.opentargets.org", "live", 5.0,
               "Genetics-driven target identification and known drugs"),
        _entry("RCSB PDB", "https://search.rcsb.org", "live", 5.0,
               "Experimental macromolecular structures"),
        _entry("cBioPortal", "https://www.cbioportal.org", "live", 5.0,
               "Cancer genomics cohorts, incl. mutation frequencies"),
        _entry("TCGA Survival", "https://tcga-survival.com", "fixture_only", 1.0,
               "Outcome associations for TCGA cohorts"),
        _entry("OGEE", "https://v3.ogee.info", "fixture_only", 1.0,
               "Gene essentiality calls across screens"),
        _entry("STRING", "https://string-db.org", "live", 1.0,
               "Protein-protein interaction network"),
        _entry("SIGNOR", "https://signor.uniroma2.it", "fixture_only", 1.0,
               "Causal signaling relationships"),
        _entry("ESMO", "https://www.esmo.org", "fixture_only", 1.0,
               "Oncology clinical practice guidelines"),
        _entry("PubChem", "https://pubchem.ncbi.nlm.nih.gov", "live", 5.0,
               "Small-molecule structures and properties"),
        _entry("Gene", "https://eutils.ncbi.nlm.nih.gov", "live", 3.0,
               "NCBI gene-centric summaries"),
        _entry("PubMed", "https://eutils.ncbi.nlm.nih.gov", "live", 3.0,
               "Biomedical literature citations and abstracts"),
        _entry("PMC", "https://eutils.ncbi.nlm.nih.gov", "live", 3.0,
               "Open-access full-text articles"),
        _entry("BLAST", "https://blast.ncbi.nlm.nih.gov", "fixture_only", 1.0,
               "Sequence similarity (replaced by local global alignment)"),
        _entry("DeepTMHMM", "https://dtu.biolib.com", "fixture_only", 1.0,
               "Transmembrane topology prediction service"),
        _entry("GSEAPy", "https://github.com/zqfang/GSEApy", "fixture_only", 1.0,
               "Gene-set enrichment (replaced by local hypergeometric test)"),
    ]
}

assert set(REGISTRY) == SOURCE_NAMES, "registry must cover exactly the known source names"

LIVE_SOURCES = frozenset(n for n, e in REGISTRY.items() if e.access == "live")
FIXTURE_ONLY_SOURCES = frozenset(n for n, e in REGISTRY.items() if e.access == "fixture_only")
