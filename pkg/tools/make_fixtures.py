#!/usr/bin/env python3
"""Build the offline fixture set.

A synthetic HTTP backend answers every request the real pipeline makes for
the KRAS / pancreatic-cancer job; a recording transport captures the
request/response pairs into the packaged cassettes.  The same content
tables also emit the gene-set libraries and the evaluation corpus, so the
fixtures can never drift apart from each other.

Run from the repo root:  python3 tools/make_fixtures.py
"""

from __future__ import annotations

import io
import json
import sys
from pathlib import Path
from urllib.parse import parse_qs, urlparse
from xml.sax.saxutils import escape

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dossier.agent.recipes import generate_dossier, load_plan  # noqa: E402
from dossier.biodata.cassette import CassetteStore, RecordingTransport, TransportResponse  # noqa: E402
from dossier.biodata.clients import BioClient  # noqa: E402
from dossier.config import DEFAULTS, RunConfig, make_context_factory, resource_path  # noqa: E402
from dossier.config import Runtime  # noqa: E402
from dossier.modelgw import MockChatClient, MockEmbeddingClient, MockRerankClient  # noqa: E402
from dossier.retrieval import CollectionStore  # noqa: E402

RESOURCES = ROOT / "src" / "dossier" / "resources"

# --- protein sequences ------------------------------------------------------

KRAS_HUMAN = (
    "MTEYKLVVVGAGGVGKSALTIQLIQNHFVDEYDPTIEDSYRKQVVIDGETCLLDILDTAGQEEYSAMRDQ"
    "YMRTGEGFLCVFAINNTKSFEDIHHYREQIKRVKDSEDVPMVLVGNKCDLPSRTVDTKQAQDLARSYGIP"
    "FIETSAKTRQGVDDAFYTLVREIRKHKEKMSKDGKKKKKKSKTKCVIM"
)
assert len(KRAS_HUMAN) == 188


def _substitute(seq: str, changes: dict[int, str]) -> str:
    out = list(seq)
    for pos, residue in changes.items():
        assert out[pos] != residue
        out[pos] = residue
    return "".join(out)


# fixture ortholog set: substitution counts chosen so the similarity table
# reproduces the expected percentages over a gapless 188-column alignment
ORTHOLOGS = {
    "P01116": ("sp|P01116|RASK_HUMAN GTPase KRas OS=Homo sapiens", KRAS_HUMAN),
    "P90001": ("sp|P90001|RASK_MACFA GTPase KRas OS=Macaca fascicularis",
               _substitute(KRAS_HUMAN, {30: "D", 94: "Q", 121: "A", 152: "E", 171: "N", 180: "R"})),
    "P90002": ("sp|P90002|RASK_MOUSE GTPase KRas OS=Mus musculus",
               _substitute(KRAS_HUMAN, {94: "Q", 171: "N"})),
    "P90003": ("sp|P90003|RASK_RABIT GTPase KRas OS=Oryctolagus cuniculus",
               _substitute(KRAS_HUMAN, {40: "H", 130: "E"})),
    "P90004": ("sp|P90004|RASK_CANLF GTPase KRas OS=Canis lupus familiaris",
               _substitute(KRAS_HUMAN, {55: "M", 160: "K"})),
    "P90005": ("sp|P90005|RASK_CAVPO GTPase KRas OS=Cavia porcellus", KRAS_HUMAN),
}

KRAS_FUNCTION = (
    "Ras proteins bind GDP and GTP and possess intrinsic GTPase activity, working "
    "as binary molecular switches downstream of receptor tyrosine kinases. In the "
    "GTP-bound state the protein engages effector cascades including RAF-MEK-ERK "
    "and PI3K-AKT, promoting proliferation, survival, and metabolic rewiring. "
    "Cycling between states is accelerated by GTPase-activating proteins and "
    "nucleotide exchange factors; oncogenic substitutions lock the switch in the "
    "active conformation and sustain downstream signaling, in part through "
    "ZNF304-dependent silencing of tumor suppressor genes."
)

# --- interactors and gene sets ------------------------------------------------

INTERACTORS = [
    "RAF1", "BRAF", "PIK3CA", "SOS1", "EGFR", "HRAS", "NRAS", "RALGDS", "PLCE1", "ARAF",
    "MAPK1", "MAPK3", "MAP2K1", "MAP2K2", "RASA1", "RASGRP1", "SHC1", "GRB2", "PTPN11", "NF1",
    "RALA", "RALB", "RIN1", "TIAM1", "AKT1", "PIK3CB", "PIK3CD", "RGL1", "RGL2", "SHOC2",
    "KSR1", "KSR2", "SPRED1", "ERBB2", "ERBB3", "FGFR1", "IGF1R", "MET", "PDGFRA", "PDGFRB",
    "INSR", "ABL1", "SRC", "JAK2", "STAT3", "RHOA", "RAC1", "CDC42", "PLCG1", "CBL",
    "GAB1", "SOS2", "MAP3K1", "DUSP1", "DUSP6", "MYC", "JUN", "FOS", "ELK1", "TP53",
    "MDM2", "CDKN1A", "CDKN2A", "SMAD4", "TGFB1", "VEGFA", "MTOR", "GSK3B", "FOXO1", "PTEN",
    "CCND1", "CDK4", "CDK6", "RB1", "E2F1", "STK11", "PRKACA", "BCL2", "BAX", "CASP3",
    "CASP9", "ETS1", "ETS2", "RREB1", "ZNF304", "RASAL1", "RASAL2", "DAB2IP", "CALM1", "CALM2",
    "CAMK2A", "PRKCA", "PRKCB", "EPHA2", "SPRY2", "LZTR1", "RIT1", "MRAS", "RRAS", "RAP1A",
]
assert len(INTERACTORS) == 100

KEGG_SETS = {
    "Ras signaling pathway": [
        "RAF1", "BRAF", "PIK3CA", "SOS1", "SOS2", "EGFR", "HRAS", "NRAS", "RALGDS", "PLCE1",
        "ARAF", "MAPK1", "MAPK3", "MAP2K1", "MAP2K2", "RASA1", "RASGRP1", "SHC1", "GRB2", "NF1",
        "RALA", "RALB", "TIAM1", "AKT1", "PIK3CB", "RGL1", "KSR1", "IGF1R", "MET", "PDGFRA",
        "FGFR1", "INSR", "RAC1", "RHOA", "ABL1", "ETS1",
    ],
    "MAPK signaling pathway": [
        "RAF1", "BRAF", "MAP2K1", "MAP2K2", "MAPK1", "MAPK3", "MAP3K1", "DUSP1", "DUSP6",
        "EGFR", "FGFR1", "PDGFRA", "TP53", "MYC", "JUN", "FOS", "ELK1", "SRF", "ATF2", "MEF2C",
    ],
    "PI3K-Akt signaling pathway": [
        "PIK3CA", "PIK3CB", "PIK3CD", "AKT1", "AKT2", "PTEN", "MTOR", "GSK3B", "FOXO1",
        "IGF1R", "INSR", "EGFR", "MET", "PDGFRA", "TP53", "MDM2", "CDKN1A", "BCL2",
    ],
    "Pancreatic cancer": [
        "KRAS", "TP53", "SMAD4", "CDKN2A", "EGFR", "ERBB2", "PIK3CA", "AKT1", "RAF1",
        "MAPK1", "MAPK3", "STAT3", "TGFB1", "VEGFA",
    ],
    "ErbB signaling pathway": [
        "EGFR", "ERBB2", "ERBB3", "ERBB4", "SHC1", "GRB2", "SOS1", "PIK3CA", "AKT1",
        "MAPK1", "MAPK3", "PLCG1",
    ],
    "Pathways in cancer": [
        "KRAS", "TP53", "MYC", "CCND1", "CDK4", "RB1", "E2F1", "PTEN", "PIK3CA", "AKT1",
        "MTOR", "VEGFA", "STAT3", "JAK2", "BCL2", "BAX", "CASP3", "CASP9", "MDM2", "CDKN2A",
        "SMAD4", "TGFB1", "FOS", "JUN", "ABL1",
    ],
    "Cell cycle": [
        "CDK1", "CDK2", "CDK4", "CDK6", "CCNB1", "CCND1", "CCNE1", "RB1", "E2F1", "CDC20",
        "BUB1", "MAD2L1", "WEE1", "CHEK1", "CHEK2",
    ],
    "Apoptosis": [
        "BCL2", "BAX", "CASP3", "CASP8", "CASP9", "TP53", "FAS", "FADD", "BID", "APAF1",
    ],
    "Insulin signaling pathway": [
        "INSR", "IRS1", "IRS2", "PIK3CA", "AKT2", "GSK3B", "PRKAA1", "SLC2A4", "FOXO1",
    ],
    "Wnt signaling pathway": [
        "WNT1", "CTNNB1", "APC", "AXIN1", "GSK3B", "TCF7", "LEF1", "DVL1", "LRP5", "LRP6",
    ],
}

GO_BP_SETS = {
    "Ras Protein Signal Transduction (GO:0007265)": [
        "KRAS", "HRAS", "NRAS", "RAF1", "BRAF", "RASA1", "RASGRP1", "RALGDS", "SOS1", "NF1",
        "RGL1", "RALA", "RALB", "RIN1", "SHOC2", "KSR1",
    ],
    "Positive Regulation Of MAPK Cascade (GO:0043410)": [
        "EGFR", "FGFR1", "MET", "PDGFRA", "IGF1R", "SHC1", "GRB2", "SOS1", "RAF1", "BRAF",
        "MAP2K1", "KSR1", "GAB1", "PTPN11",
    ],
    "Epidermal Growth Factor Receptor Signaling Pathway (GO:0007173)": [
        "EGFR", "SHC1", "GRB2", "SOS1", "PLCG1", "CBL", "PTPN11", "ERBB2",
    ],
    "Regulation Of Cell Population Proliferation (GO:0042127)": [
        "MYC", "TP53", "CDKN1A", "CCND1", "EGFR", "AKT1", "STAT3", "MTOR", "VEGFA", "TGFB1",
    ],
    "Intracellular Signal Transduction (GO:0035556)": [
        "AKT1", "PIK3CA", "PRKACA", "PLCE1", "RAC1", "CDC42", "RHOA", "MAPK1", "MAPK3", "STK11",
    ],
    "Apoptotic Process (GO:0006915)": [
        "CASP3", "CASP8", "BAX", "BCL2", "TP53", "FAS", "APAF1", "BID",
    ],
    "DNA Repair (GO:0006281)": [
        "BRCA1", "BRCA2", "ATM", "ATR", "RAD51", "XRCC1", "PARP1", "MLH1",
    ],
    "Glucose Metabolic Process (GO:0006006)": [
        "GCK", "HK2", "PFKL", "PKM", "G6PC1", "PCK1",
    ],
}

# --- literature pool ---------------------------------------------------------

ABSTRACTS = [
    ("30100001", "KRAS signaling in normal tissue physiology",
     "KRAS operates as a nucleotide-dependent switch in epithelial and hematopoietic "
     "lineages. Physiological KRAS signaling supports proliferation during tissue "
     "renewal and wound repair. Effector pathways downstream of KRAS include the "
     "RAF-MEK-ERK cascade and PI3K signaling. Loss of normal KRAS regulation disturbs "
     "differentiation programs in the gut and pancreas."),
    ("30100002", "Oncogenic KRAS mutations drive pancreatic tumor initiation",
     "Activating KRAS mutations are found in over ninety percent of pancreatic ductal "
     "adenocarcinoma cases. Mutant KRAS locks the protein in its GTP-bound state and "
     "sustains proliferative signaling. In mouse models, induction of mutant KRAS in "
     "acinar cells produces precursor lesions that progress to invasive tumors. KRAS "
     "is therefore considered the initiating driver of pancreatic tumor progression."),
    ("30100003", "Pancreatic ductal adenocarcinoma epidemiology and outcomes",
     "Pancreatic cancer is projected to become the second leading cause of cancer "
     "death in several regions. Five-year survival remains near eleven percent across "
     "stages. Incidence rises with age, smoking, diabetes, and chronic pancreatitis. "
     "Late diagnosis explains much of the poor outcome statistics of pancreatic "
     "cancer."),
    ("30100004", "Standard of care chemotherapy for pancreatic cancer",
     "FOLFIRINOX and gemcitabine plus nab-paclitaxel remain the standard of care "
     "options for fit patients with advanced pancreatic cancer. Adjuvant modified "
     "FOLFIRINOX improves survival after resection. Treatment selection balances "
     "performance status against toxicity. Supportive care and biliary drainage are "
     "integral parts of management of pancreatic cancer."),
    ("30100005", "Covalent KRAS G12C inhibitors in clinical trials",
     "Covalent inhibitors targeting the KRAS G12C allele, including sotorasib and "
     "adagrasib, achieve objective responses in lung and pancreatic tumors. "
     "Combination trials pair KRAS inhibitors with EGFR blockade to forestall "
     "adaptive resistance. Allele-selective therapies are currently in clinical "
     "trials for pancreatic cancer. These agents validate direct KRAS inhibition as "
     "a therapeutic strategy."),
    ("30100006", "Immune evasion and escape mechanisms in PDAC",
     "Pancreatic ductal adenocarcinoma escapes immune clearance through several "
     "described mechanisms. Autophagy-dependent sequestration of MHC class I reduces "
     "antigen presentation on PDAC cells. Gasdermin family proteins support mucin "
     "barriers that blunt enzymatic attack. The dense stroma further excludes "
     "effector T cells, completing the escape phenotype of PDAC."),
    ("30100007", "KRAS effector rewiring sustains tumor progression",
     "Beyond initiation, KRAS output is required for tumor maintenance and metastatic "
     "progression in pancreatic cancer. Extinction of KRAS expression in established "
     "tumors causes regression, although escaper clones can emerge through YAP1 "
     "amplification. Metabolic rewiring, including macropinocytosis and glutamine "
     "utilization, is a KRAS-dependent hallmark of tumor progression."),
    ("30100008", "Stromal biology of pancreatic tumors",
     "The fibrotic stroma of pancreatic cancer contains activated stellate cells, "
     "hyaluronan, and collagen networks. Stromal pressure collapses vasculature and "
     "limits drug delivery. Stroma-targeting approaches have produced mixed clinical "
     "results. Understanding stromal crosstalk with tumor cells informs combination "
     "therapies for pancreatic cancer."),
    ("30100009", "Incidence trends and risk factors for pancreatic cancer",
     "Registry analyses show rising pancreatic cancer incidence of roughly one "
     "percent per year in high-income countries. Median age at diagnosis is about "
     "seventy years. Modifiable risk factors include smoking, obesity, and heavy "
     "alcohol use. Survival statistics improve modestly with earlier detection "
     "programs for pancreatic cancer."),
    ("30100010", "Resistance mechanisms to KRAS-targeted therapy",
     "Acquired resistance to KRAS G12C inhibitors arises through secondary KRAS "
     "mutations, amplification of the target allele, and bypass receptor tyrosine "
     "kinase signaling. Vertical combination strategies are being tested in clinical "
     "trials. Tumor heterogeneity in pancreatic cancer accelerates the outgrowth of "
     "resistant clones under targeted therapy."),
    ("30100011", "Clinical guidelines for pancreatic cancer management",
     "Consensus guidelines recommend multidisciplinary review for every new "
     "pancreatic cancer diagnosis. Resectability criteria stratify patients into "
     "resectable, borderline, and locally advanced groups. Germline testing is "
     "recommended for all patients. Guideline-concordant care improves survival in "
     "population studies of pancreatic cancer."),
    ("30100012", "KRAS in development and tissue homeostasis",
     "Genetic studies show KRAS is essential during embryogenesis, with knockout "
     "mice dying in utero. In adult physiology KRAS contributes to hematopoiesis and "
     "epithelial renewal. Signal flux through wild-type KRAS is tightly buffered by "
     "GTPase-activating proteins. These physiological roles constrain the tolerable "
     "window for systemic KRAS inhibition."),
    ("30100013", "Emerging pan-RAS and degradation therapies",
     "Pan-RAS inhibitors, molecular glues, and proteolysis-targeting chimeras extend "
     "coverage beyond the G12C allele toward G12D and G12V tumors. Early clinical "
     "trials report encouraging disease control in pancreatic cancer. Delivery and "
     "on-target toxicity remain open questions for these therapies. The therapeutic "
     "outlook for KRAS-mutant tumors is broadening."),
    ("30100014", "Liquid biopsy and early detection in pancreatic cancer",
     "Circulating tumor DNA bearing KRAS mutations is detectable in a majority of "
     "advanced pancreatic cancer patients. Sensitivity falls in early-stage disease. "
     "Combining ctDNA with protein markers such as CA19-9 improves detection "
     "statistics. Screening remains restricted to high-risk cohorts."),
]

FULLTEXTS = [
    ("7000001", "Mechanisms of PDAC immune escape: a review",
     ["Pancreatic ductal adenocarcinoma presents one of the most hostile tumor "
      "microenvironments described. Immune escape mechanisms operate at several "
      "layers in PDAC. Autophagy sequesters MHC class I molecules inside PDAC "
      "cells and lowers antigen presentation. Restoring presentation with autophagy "
      "inhibitors sensitizes tumors to checkpoint blockade in model systems.",
      "Mucin barriers form a second escape layer. Gasdermin E supports the "
      "expression of mucin 1 and mucin 13 on the tumor surface. The mucin coat "
      "protects PDAC cells from enzymatic destruction. Interfering with mucin "
      "expression abrogates orthotopic tumor growth in immunodeficient mice.",
      "Stromal exclusion completes the picture. Dense desmoplastic stroma blocks "
      "T cell infiltration into PDAC nests. Tumor-derived cytokines polarize "
      "macrophages toward immunosuppressive states. Combination strategies that "
      "pair stromal remodeling with immunotherapy are in clinical trials."]),
    ("7000002", "KRAS biology from bench to bedside",
     ["KRAS encodes a small GTPase that cycles between GDP-bound and GTP-bound "
      "conformations. Guanine nucleotide exchange factors load GTP while GTPase "
      "activating proteins terminate signaling. Oncogenic mutations impair GTP "
      "hydrolysis and freeze the protein in its active state.",
      "Pancreatic tumors depend on sustained KRAS output for growth and metabolic "
      "adaptation. Macropinocytosis scavenges extracellular protein as a nutrient "
      "source in KRAS-mutant cells. Suppression of KRAS collapses this metabolic "
      "program and causes tumor regression in mice.",
      "Drugging KRAS directly took four decades. Covalent G12C inhibitors opened "
      "the field and newer agents address G12D and pan-RAS inhibition. Resistance "
      "through bypass signaling argues for rational combinations. Clinical benefit "
      "in pancreatic cancer is now documented in early trials."]),
]

GENE_SUMMARY = (
    "This gene, a Kirsten ras oncogene homolog from the mammalian ras gene family, "
    "encodes a protein that is a member of the small GTPase superfamily. A single "
    "amino acid substitution is responsible for an activating mutation. The "
    "transforming protein that results is implicated in various malignancies, "
    "including lung adenocarcinoma, mucinous adenoma, ductal carcinoma of the "
    "pancreas and colorectal carcinoma."
)

KNOWN_DRUGS = [
    {"drug": "SOTORASIB", "phase": 4, "mechanism": "KRAS G12C covalent inhibitor",
     "disease": "non-small cell lung carcinoma"},
    {"drug": "ADAGRASIB", "phase": 3, "mechanism": "KRAS G12C covalent inhibitor",
     "disease": "pancreatic carcinoma"},
    {"drug": "MRTX1133", "phase": 1, "mechanism": "KRAS G12D non-covalent inhibitor",
     "disease": "pancreatic carcinoma"},
    {"drug": "RMC-6236", "phase": 1, "mechanism": "pan-RAS(ON) inhibitor",
     "disease": "pancreatic carcinoma"},
]

DRUGBANK_DRUGS = [
    {"drugbank_id": "DB15569", "name": "Sotorasib", "groups": ["approved"],
     "description": "Covalent inhibitor of the KRAS G12C mutant protein."},
    {"drugbank_id": "DB16785", "name": "Adagrasib", "groups": ["approved", "investigational"],
     "description": "Irreversible KRAS G12C inhibitor with CNS penetration."},
]

ESMO_GUIDELINE = {
    "title": "Clinical practice guideline: pancreatic cancer",
    "year": 2024,
    "url": "https://www.esmo.org/guidelines/gastrointestinal-cancers/pancreatic-cancer",
    "recommendations": [
        "Discuss every new diagnosis in a multidisciplinary tumor board.",
        "Offer germline testing to all patients with pancreatic cancer.",
        "Prefer FOLFIRINOX for fit patients with advanced disease.",
        "Consider gemcitabine plus nab-paclitaxel when FOLFIRINOX is unsuitable.",
        "Enroll eligible patients in molecularly guided clinical trials.",
    ],
}

SIGNOR_EDGES = [
    {"source": "EGFR", "target": "KRAS", "effect": "up-regulates activity", "mechanism": "GEF recruitment"},
    {"source": "KRAS", "target": "RAF1", "effect": "up-regulates activity", "mechanism": "binding"},
    {"source": "KRAS", "target": "PIK3CA", "effect": "up-regulates activity", "mechanism": "binding"},
    {"source": "KRAS", "target": "RALGDS", "effect": "up-regulates activity", "mechanism": "binding"},
    {"source": "RASA1", "target": "KRAS", "effect": "down-regulates activity", "mechanism": "GAP activity"},
    {"source": "NF1", "target": "KRAS", "effect": "down-regulates activity", "mechanism": "GAP activity"},
    {"source": "SOS1", "target": "KRAS", "effect": "up-regulates activity", "mechanism": "nucleotide exchange"},
]

SURVIVAL_GROUPS = {
    "high": [[2.1, True], [3.5, True], [4.0, False], [5.2, True], [6.8, True], [7.5, True],
             [8.1, False], [9.9, True], [11.4, True], [12.5, False], [14.0, True], [16.2, True],
             [18.0, False], [21.5, True]],
    "low": [[3.0, True], [5.5, False], [7.2, True], [9.0, True], [12.0, False], [15.5, True],
            [18.4, True], [22.0, False], [26.3, True], [30.0, False], [34.8, True], [40.1, False],
            [46.0, True], [52.0, False]],
}

STUDIES = [
    {"studyId": "paad_tcga", "name": "Pancreatic Adenocarcinoma (TCGA)", "allSampleCount": 185,
     "profiled": 178, "mutated": 120},
    {"studyId": "paad_qcmg", "name": "Pancreatic Adenocarcinoma (QCMG)", "allSampleCount": 96,
     "profiled": 96, "mutated": 68},
]

HPA_ENTRY = {
    "gene": "KRAS",
    "antibody": "HPA072761",
    "subcellular_locations": ["Cytosol", "Plasma membrane"],
    "images": [
        {"cell_line": "A-431", "url": "https://images.proteinatlas.org/72761/a431_if.jpg"},
        {"cell_line": "U-251 MG", "url": "https://images.proteinatlas.org/72761/u251_if.jpg"},
        {"cell_line": "U2OS", "url": "https://images.proteinatlas.org/72761/u2os_if.jpg"},
    ],
    "expression": [
        {"tissue": "pancreas", "level": "medium"},
        {"tissue": "colon", "level": "medium"},
        {"tissue": "lung", "level": "low"},
        {"tissue": "cerebral cortex", "level": "low"},
        {"tissue": "bone marrow", "level": "medium"},
    ],
}

PDB_IDS = ["6OIM", "6GJ8", "4OBE", "7RPZ", "6P8Z", "5V9U", "4EPT", "6ASE"]

QUESTIONS = [
    "Can you describe the PDAC escape mechanisms?",
    "What makes KRAS difficult to target with small molecules?",
    "Which KRAS alleles are actionable with covalent inhibitors?",
    "How does mutant KRAS rewire tumor metabolism?",
    "What is the role of autophagy in pancreatic cancer immune evasion?",
    "Why does pancreatic cancer respond poorly to checkpoint inhibitors?",
    "What resistance mechanisms follow KRAS G12C inhibition?",
    "How does the stroma limit drug delivery in pancreatic tumors?",
    "What is the standard first-line regimen for metastatic pancreatic cancer?",
    "When is adjuvant FOLFIRINOX indicated?",
    "Which biomarkers guide therapy selection in pancreatic cancer?",
    "What is the prognostic value of circulating tumor DNA in PDAC?",
    "How prevalent are KRAS mutations across pancreatic tumors?",
    "What distinguishes G12D from G12C tumors therapeutically?",
    "Can pan-RAS inhibitors widen the treatable population?",
    "What role does mucin expression play in PDAC progression?",
    "How do gasdermin proteins contribute to tumor cell protection?",
    "What are realistic endpoints for early detection programs?",
    "Which combination strategies pair with KRAS inhibitors?",
    "How does KRAS loss affect normal tissue homeostasis?",
    "What epidemiological trends are reported for pancreatic cancer?",
    "Which stromal targets have reached clinical testing in PDAC?",
]
assert len(QUESTIONS) == 22


def make_if_image(label: str, seed: int) -> bytes:
    """Small immunofluorescence-style JPEG: green cytosol, blue nuclei."""
    img = Image.new("RGB", (96, 96), (4, 8, 4))
    draw = ImageDraw.Draw(img)
    for i in range(6):
        cx = (seed * 37 + i * 29) % 80 + 8
        cy = (seed * 53 + i * 41) % 80 + 8
        r = 10 + (seed + i) % 6
        draw.ellipse((cx - r, cy - r, cx + r, cy + r), fill=(20, 140 + 10 * (i % 4), 40))
    for i in range(3):
        cx = (seed * 61 + i * 47) % 70 + 12
        cy = (seed * 31 + i * 59) % 70 + 12
        draw.ellipse((cx - 6, cy - 6, cx + 6, cy + 6), fill=(30, 40, 170))
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=85)
    return buf.getvalue()


# --- the synthetic backend -------------------------------------------------------


def _json_response(payload) -> TransportResponse:
    return TransportResponse(200, "application/json",
                             json.dumps(payload, sort_keys=True).encode("utf-8"))


def _xml_response(text: str) -> TransportResponse:
    return TransportResponse(200, "text/xml", text.encode("utf-8"))


def _score_doc(query: str, title: str, text: str) -> int:
    q_tokens = {t.lower().strip("?.,") for t in query.split()}
    body = f"{title} {text}".lower()
    return sum(1 for t in q_tokens if t and t in body)


def _select_pmids(query: str, retmax: int) -> list[str]:
    scored = sorted(
        ABSTRACTS,
        key=lambda a: (-_score_doc(query, a[1], a[2]), a[0]),
    )
    chosen = [pmid for pmid, title, text in scored if _score_doc(query, title, text) > 0]
    return (chosen or [a[0] for a in ABSTRACTS[:4]])[: min(retmax, 8)]


def _select_pmc(query: str, retmax: int) -> list[str]:
    scored = sorted(
        FULLTEXTS,
        key=lambda a: (-_score_doc(query, a[1], " ".join(a[2])), a[0]),
    )
    chosen = [pid for pid, title, paras in scored if _score_doc(query, title, " ".join(paras)) > 0]
    return chosen[:retmax]


def _pubmed_xml(ids: list[str]) -> str:
    by_id = {pmid: (title, text) for pmid, title, text in ABSTRACTS}
    articles = []
    for pmid in ids:
        title, text = by_id[pmid]
        articles.append(
            "<PubmedArticle><MedlineCitation>"
            f"<PMID Version=\"1\">{pmid}</PMID>"
            f"<Article><ArticleTitle>{escape(title)}</ArticleTitle>"
            f"<Abstract><AbstractText>{escape(text)}</AbstractText></Abstract></Article>"
            "</MedlineCitation></PubmedArticle>"
        )
    return '<?xml version="1.0" ?><PubmedArticleSet>' + "".join(articles) + "</PubmedArticleSet>"


def _pmc_xml(ids: list[str]) -> str:
    by_id = {pid: (title, paras) for pid, title, paras in FULLTEXTS}
    articles = []
    for pid in ids:
        title, paras = by_id[pid]
        body = "".join(f"<sec><p>{escape(p)}</p></sec>" for p in paras)
        articles.append(
            "<article><front><article-meta>"
            f"<article-id pub-id-type=\"pmc\">{pid}</article-id>"
            f"<title-group><article-title>{escape(title)}</article-title></title-group>"
            f"</article-meta></front><body>{body}</body></article>"
        )
    return '<?xml version="1.0" ?><pmc-articleset>' + "".join(articles) + "</pmc-articleset>"


class SyntheticBackend:
    """Transport look-alike that fabricates realistic responses."""

    def request(self, source, method, url, body=None):
        parsed = urlparse(url)
        params = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        host, path = parsed.netloc, parsed.path
        body_text = body.decode("utf-8") if body else ""

        if host == "rest.uniprot.org":
            if path.endswith(".fasta"):
                accession = path.rsplit("/", 1)[1][: -len(".fasta")]
                header, seq = ORTHOLOGS[accession]
                lines = [f">{header}"] + [seq[i : i + 60] for i in range(0, len(seq), 60)]
                return TransportResponse(200, "text/plain", ("\n".join(lines) + "\n").encode())
            return _json_response(
                {
                    "results": [
                        {
                            "primaryAccession": "P01116",
                            "uniProtkbId": "RASK_HUMAN",
                            "proteinDescription": {
                                "recommendedName": {"fullName": {"value": "GTPase KRas"}}
                            },
                            "sequence": {"value": KRAS_HUMAN, "length": len(KRAS_HUMAN)},
                            "comments": [
                                {"commentType": "FUNCTION", "texts": [{"value": KRAS_FUNCTION}]}
                            ],
                            "features": [],
                        }
                    ]
                }
            )

        if host == "www.proteinatlas.org":
            if path.endswith("search_download.php"):
                return _json_response([{"Gene": "KRAS", "Ensembl": "ENSG00000133703"}])
            return _json_response(HPA_ENTRY)

        if host == "images.proteinatlas.org":
            seed = {"a431_if.jpg": 3, "u251_if.jpg": 5, "u2os_if.jpg": 7}[path.rsplit("/", 1)[1]]
            return TransportResponse(200, "image/jpeg", make_if_image(path, seed))

        if host == "string-db.org":
            limit = int(params.get("limit", 100))
            rows = [
                {"preferredName_A": "KRAS", "preferredName_B": symbol,
                 "score": round(0.999 - 0.004 * i, 3)}
                for i, symbol in enumerate(INTERACTORS[:limit])
            ]
            return _json_response(rows)

        if host == "api.platform.opentargets.org":
            if "knownDrugs" in body_text:
                return _json_response(
                    {"data": {"target": {"knownDrugs": {"rows": [
                        {"drug": {"name": d["drug"]}, "phase": d["phase"],
                         "mechanismOfAction": d["mechanism"], "disease": {"name": d["disease"]}}
                        for d in KNOWN_DRUGS
                    ]}}}}
                )
            return _json_response(
                {"data": {"search": {"hits": [{"id": "ENSG00000133703", "name": "KRAS"}]}}}
            )

        if host == "pubchem.ncbi.nlm.nih.gov":
            compound = path.split("/compound/name/")[1].split("/")[0]
            cid = {"adagrasib": 138611145, "sotorasib": 137278711}.get(compound, 10000000)
            return _json_response(
                {"PropertyTable": {"Properties": [
                    {"CID": cid, "MolecularFormula": "C32H35ClFN7O2",
                     "MolecularWeight": "604.1", "CanonicalSMILES": "CC1CCN(C(=O)C=C)C1"}
                ]}}
            )

        if host == "search.rcsb.org":
            return _json_response(
                {"result_set": [{"identifier": pid} for pid in PDB_IDS], "total_count": 152}
            )

        if host == "www.cbioportal.org":
            if path == "/api/genes/KRAS":
                return _json_response({"entrezGeneId": 3845, "hugoGeneSymbol": "KRAS"})
            if path == "/api/studies":
                return _json_response(
                    [{"studyId": s["studyId"], "name": s["name"],
                      "allSampleCount": s["allSampleCount"]} for s in STUDIES]
                )
            for s in STUDIES:
                if path == f"/api/molecular-profiles/{s['studyId']}_mutations/mutations":
                    return _json_response(
                        [{"sampleId": f"{s['studyId']}-S{i:04d}", "proteinChange": "G12D"}
                         for i in range(s["mutated"])]
                    )
                if path == f"/api/sample-lists/{s['studyId']}_all":
                    return _json_response(
                        {"sampleListId": f"{s['studyId']}_all", "sampleCount": s["profiled"]}
                    )

        if host == "eutils.ncbi.nlm.nih.gov":
            db = params.get("db", "")
            if path.endswith("esearch.fcgi"):
                term = params.get("term", "")
                retmax = int(params.get("retmax", 20))
                if db == "gene":
                    return _json_response({"esearchresult": {"idlist": ["3845"]}})
                if db == "pubmed":
                    return _json_response({"esearchresult": {"idlist": _select_pmids(term, retmax)}})
                if db == "pmc":
                    return _json_response({"esearchresult": {"idlist": _select_pmc(term, retmax)}})
            if path.endswith("esummary.fcgi") and db == "gene":
                return _json_response(
                    {"result": {"3845": {"name": "KRAS",
                                         "description": "KRAS proto-oncogene, GTPase",
                                         "summary": GENE_SUMMARY}}}
                )
            if path.endswith("efetch.fcgi"):
                ids = params.get("id", "").split(",")
                if db == "pubmed":
                    return _xml_response(_pubmed_xml(ids))
                if db == "pmc":
                    return _xml_response(_pmc_xml(ids))

        if host == "go.drugbank.com":
            return _json_response({"drugs": DRUGBANK_DRUGS})

        if host == "www.esmo.org":
            return _json_response(ESMO_GUIDELINE)

        if host == "tcga-survival.com":
            return _json_response({"cohort": "PAAD", "groups": SURVIVAL_GROUPS})

        if host == "v3.ogee.info":
            return _json_response(
                {"essential_in": 688, "tested_in": 927,
                 "summary": "KRAS scores as essential in most proliferation screens of "
                            "KRAS-mutant cell lines and conditionally essential elsewhere."}
            )

        if host == "signor.uniroma2.it":
            return _json_response({"edges": SIGNOR_EDGES})

        if host == "dtu.biolib.com":
            return _json_response(
                {"topology": "GLOB", "helices": 0,
                 "summary": "No transmembrane helices are predicted; the chain is "
                            "classified as a globular, membrane-anchored protein via "
                            "C-terminal prenylation rather than a transmembrane segment."}
            )

        raise AssertionError(f"synthetic backend has no route for {method} {url}")


# --- emit resource files --------------------------------------------------------


def write_genesets():
    out = RESOURCES / "genesets"
    out.mkdir(parents=True, exist_ok=True)
    for name, sets in (("KEGG_2021_Human", KEGG_SETS), ("GO_Biological_Process_2023", GO_BP_SETS)):
        lines = [
            "\t".join([term, f"{name} fixture subset", *genes])
            for term, genes in sets.items()
        ]
        (out / f"{name}.gmt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}/*.gmt")


def write_eval_resources():
    out = RESOURCES / "eval"
    out.mkdir(parents=True, exist_ok=True)
    corpus_lines = [
        json.dumps({"doc_id": pmid, "kind": "abstract", "title": title, "text": text})
        for pmid, title, text in ABSTRACTS
    ]
    corpus_lines += [
        json.dumps({"doc_id": f"PMC{pid}", "kind": "fulltext", "title": title,
                    "text": " ".join(paras)})
        for pid, title, paras in FULLTEXTS
    ]
    (out / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")
    question_lines = [
        json.dumps({"id": f"q{i + 1:02d}", "question": q}) for i, q in enumerate(QUESTIONS)
    ]
    (out / "questions.jsonl").write_text("\n".join(question_lines) + "\n", encoding="utf-8")
    print(f"wrote {out}/corpus.jsonl and questions.jsonl")


def record_cassettes():
    cassette_dir = RESOURCES / "fixtures" / "cassettes"
    if cassette_dir.exists():
        for old in cassette_dir.glob("*.jsonl"):
            old.unlink()
    cassette_dir.mkdir(parents=True, exist_ok=True)

    store = CassetteStore(cassette_dir)
    transport = RecordingTransport(SyntheticBackend(), store)
    cfg = RunConfig()
    clients = BioClient(transport, replay_transport=transport, clock=cfg.clock)
    runtime = Runtime(
        config=cfg,
        chat=MockChatClient(),
        embedder=MockEmbeddingClient(),
        reranker=MockRerankClient(),
        clients=clients,
        store=CollectionStore(),
        clock=cfg.clock,
        plan=load_plan(resource_path("plan", "default_plan.json")),
    )
    factory = make_context_factory(runtime, "KRAS", "pancreatic cancer")
    dossier, trace = generate_dossier("KRAS", "pancreatic cancer", runtime.plan, factory)
    assert len(dossier.sections) == 4
    assert not trace.warnings, f"fixture run produced warnings: {trace.warnings}"

    # extra cassettes for the documented ask demo question
    demo_context = factory(type(trace)(job_id="demo"))
    demo_context.dispatch("literature_answer", {"question": QUESTIONS[0]})

    # by-accession sequence fetches and the truncation variant used in tests
    for accession in ORTHOLOGS:
        clients.fetch_record("UniProt", {"accession": accession})
    clients.pubmed_corpus(QUESTIONS[0], max_docs=1, max_fulltext=0)

    count = sum(1 for _ in cassette_dir.glob("*.jsonl"))
    print(f"recorded cassettes for {count} sources under {cassette_dir}")


def main():
    write_genesets()
    write_eval_resources()
    record_cassettes()
    print("fixture build complete")


if __name__ == "__main__":
    main()
