"""Default tool set.

API access, local analytics (alignment, enrichment, survival), and the
grounded literature answer are all expressed as typed tools so every effect
lands in the trace.  Arbitrary code execution is replaced by these; an
opt-in sandboxed script runner exists behind tools.allow_scripts.
"""

from __future__ import annotations

import subprocess
import sys

from ..biodata.align import align_global, percent_identity
from ..biodata.stats import enrich, km_estimate, load_gmt
from ..core import SourceRef
from ..modelgw import ChatRequest
from ..retrieval import create_collection, drop_collection, grounded_answer, retrieve
from .tools import ToolError, ToolParam, ToolRegistry, ToolResult, ToolSpec

ALIGNMENT_LOCATOR = "local:blosum62-global-alignment"
SUMMARIZE_PROMPT = "TASK: summarize\nCondense the text to at most two sentences.\nSOURCE TEXT:\n{text}"


def _protein_entry(ctx, args):
    fr = ctx.clients.fetch_record("UniProt", {"gene": args["gene"]})
    rec = fr.record
    obs = (
        f"{rec['accession']} {rec['protein_name']}; sequence {len(rec['sequence'])} aa; "
        f"function text {len(rec['function'])} chars; "
        f"{len(rec['glycosylation'])} glycosylation features"
    )
    return ToolResult(rec, (fr.ref,), obs)


def _ortholog_sequence(ctx, args):
    fr = ctx.clients.fetch_record("UniProt", {"accession": args["accession"]})
    return ToolResult(fr.record, (fr.ref,), f"{args['accession']}: {len(fr.record['sequence'])} aa")


def _sequence_similarity(ctx, args):
    gene = args["gene"]
    human = ctx.clients.fetch_record("UniProt", {"gene": gene})
    refs = [human.ref]
    rows = []
    for label, accession in ctx.species_map():
        ortholog = ctx.clients.fetch_record("UniProt", {"accession": accession})
        refs.append(ortholog.ref)
        alignment = align_global(human.record["sequence"], ortholog.record["sequence"])
        rows.append((label, percent_identity(alignment)))
    refs.append(
        SourceRef(
            "BLAST",
            ALIGNMENT_LOCATOR,
            detail="Needleman-Wunsch, BLOSUM62, affine gaps (-10/-1)",
            retrieved_at=ctx.now(),
        )
    )
    obs = "; ".join(f"{label} {pid}%" for label, pid in rows)
    return ToolResult({"gene": gene, "rows": rows}, tuple(refs), obs)


def _transmembrane(ctx, args):
    fr = ctx.clients.fetch_record("DeepTMHMM", {"gene": args["gene"]})
    rec = fr.record
    obs = f"topology {rec['topology']}, {rec['helices']} predicted helices"
    return ToolResult(rec, (fr.ref,), obs)


def _subcellular_images(ctx, args):
    fr = ctx.clients.fetch_record("Human Protein Atlas", {"gene": args["gene"]})
    rec = fr.record
    cells = ", ".join(i["cell_line"] for i in rec["images"]) or "none"
    obs = (
        f"locations: {', '.join(rec['subcellular_locations']) or 'unknown'}; "
        f"antibody {rec['antibody']}; images for {cells}"
    )
    return ToolResult(rec, (fr.ref,), obs)


def _expression_summary(ctx, args):
    fr = ctx.clients.fetch_record("Human Protein Atlas", {"gene": args["gene"]})
    rec = fr.record
    obs = f"expression reported for {len(rec['expression'])} tissues"
    return ToolResult(rec, (fr.ref,), obs)


def _mutation_frequencies(ctx, args):
    query = {"gene": args["gene"], "disease_keyword": args.get("keyword", ctx.disease_keyword())}
    fr = ctx.clients.fetch_record("cBioPortal", query)
    studies = fr.record["studies"]
    obs = "; ".join(f"{s['study_id']} {100 * s['frequency']:.1f}%" for s in studies) or "no studies"
    return ToolResult(fr.record, (fr.ref,), obs)


def _gene_essentiality(ctx, args):
    fr = ctx.clients.fetch_record("OGEE", {"gene": args["gene"]})
    rec = fr.record
    obs = f"essential in {rec['essential_in']} of {rec['tested_in']} screens"
    return ToolResult(rec, (fr.ref,), obs)


def _string_interactors(ctx, args):
    fr = ctx.clients.fetch_record(
        "STRING", {"gene": args["gene"], "limit": args.get("limit", 100)}
    )
    interactors = fr.record["interactors"]
    top = ", ".join(i["symbol"] for i in interactors[:5])
    return ToolResult(fr.record, (fr.ref,), f"{len(interactors)} partners; top: {top}")


def _pathway_enrichment(ctx, args):
    limit = args.get("interactor_limit", 100)
    string_result = ctx.clients.fetch_record("STRING", {"gene": args["gene"], "limit": limit})
    genes = {i["symbol"] for i in string_result.record["interactors"]}
    refs = [string_result.ref]
    combined = []
    for lib_name in args.get("libraries") or ctx.geneset_names():
        lib = load_gmt(ctx.geneset_path(lib_name), lib_name)
        results, warnings = enrich(genes, lib, max_terms=args.get("max_terms", 10))
        for w in warnings:
            ctx.trace.warn(w)
        combined.extend((r, lib_name) for r in results)
        refs.append(
            SourceRef("GSEAPy", lib_name, detail="local hypergeometric over-representation test",
                      retrieved_at=ctx.now())
        )
    combined.sort(key=lambda rl: (rl[0].p_value, rl[0].term))
    combined = combined[: args.get("max_terms", 10)]
    record = {
        "gene": args["gene"],
        "results": [
            {
                "term": r.term,
                "library": lib_name,
                "overlap": r.overlap,
                "term_size": r.term_size,
                "p_value": r.p_value,
                "adjusted_p": r.adjusted_p,
            }
            for r, lib_name in combined
        ],
    }
    top = combined[0][0].term if combined else "none"
    return ToolResult(record, tuple(refs), f"{len(combined)} enriched terms; best: {top}")


def _signaling_network(ctx, args):
    fr = ctx.clients.fetch_record("SIGNOR", {"gene": args["gene"]})
    edges = fr.record["edges"]
    return ToolResult(fr.record, (fr.ref,), f"{len(edges)} causal edges")


def _survival_curves(ctx, args):
    fr = ctx.clients.fetch_record(
        "TCGA Survival", {"gene": args["gene"], "cancer": args.get("cancer", "PAAD")}
    )
    curves = {}
    for group, observations in sorted(fr.record["groups"].items()):
        curves[group] = km_estimate(observations).points
    record = {"gene": args["gene"], "cohort": fr.record["cohort"], "curves": curves}
    obs = "; ".join(f"{g}: {len(pts)} steps" for g, pts in curves.items())
    return ToolResult(record, (fr.ref,), obs)


def _gene_summary(ctx, args):
    fr = ctx.clients.fetch_record("Gene", {"gene": args["gene"]})
    return ToolResult(fr.record, (fr.ref,), fr.record["description"] or fr.record["name"])


def _known_drugs(ctx, args):
    fr = ctx.clients.fetch_record("Open Targets", {"gene": args["gene"]})
    drugs = fr.record["known_drugs"]
    names = ", ".join(sorted({d["drug"] for d in drugs})[:5]) or "none"
    return ToolResult(fr.record, (fr.ref,), f"{len(drugs)} known drug rows; e.g. {names}")


def _drugbank_drugs(ctx, args):
    fr = ctx.clients.fetch_record("DrugBank", {"gene": args["gene"]})
    return ToolResult(fr.record, (fr.ref,), f"{len(fr.record['drugs'])} DrugBank entries")


def _compound_properties(ctx, args):
    fr = ctx.clients.fetch_record("PubChem", {"compound": args["compound"]})
    rec = fr.record
    return ToolResult(rec, (fr.ref,), f"{args['compound']}: {rec['formula']}, MW {rec['weight']}")


def _structures(ctx, args):
    fr = ctx.clients.fetch_record("RCSB PDB", {"gene": args["gene"]})
    rec = fr.record
    shown = ", ".join(rec["structure_ids"][:5])
    return ToolResult(rec, (fr.ref,), f"{rec['total_count']} structures; e.g. {shown}")


def _guidelines(ctx, args):
    fr = ctx.clients.fetch_record("ESMO", {"disease": args.get("disease") or ctx.disease})
    rec = fr.record
    return ToolResult(rec, (fr.ref,), f"{rec['title']} ({rec.get('year')})")


def _literature_answer(ctx, args):
    question = args["question"]
    docs, search_ref, warnings = ctx.clients.pubmed_corpus(
        question,
        max_docs=ctx.corpus_max_docs(),
        max_fulltext=ctx.corpus_max_fulltext(),
    )
    for w in warnings:
        ctx.trace.warn(w)
    if not docs:
        raise ToolError(f"insufficient context: no literature found for {question!r}")
    collection = create_collection(
        docs, ctx.embedder, ctx.store, clock=ctx.clock,
        buffer=ctx.retrieval_param("chunk_buffer", 1),
        breakpoint_percentile=ctx.retrieval_param("chunk_percentile", 95.0),
    )
    try:
        hits = retrieve(
            question,
            collection,
            ctx.embedder,
            ctx.reranker,
            k_dense=ctx.retrieval_param("k_dense", 20),
            k_sparse=ctx.retrieval_param("k_sparse", 20),
            top_n=ctx.retrieval_param("top_n", 5),
            rerank_top_m=ctx.retrieval_param("rerank_top_m", 20),
            rerank_required=ctx.rerank_required(),
        )
        answer = grounded_answer(
            question, hits, "advanced", ctx.chat, clock=ctx.clock, gene=ctx.gene
        )
    finally:
        drop_collection(ctx.store, collection)
    for w in answer.warnings:
        ctx.trace.warn(w)
    record = {
        "question": question,
        "text": answer.text,
        "citations": sorted(c.locator for c in answer.citations),
    }
    refs = tuple(sorted(answer.citations)) or (search_ref,)
    return ToolResult(record, refs, answer.text)


def _summarize(ctx, args):
    text = args["text"]
    limit = args.get("limit", 400)
    if len(text) <= limit:
        return ToolResult({"text": text}, (), text)
    response = ctx.chat.chat(
        ChatRequest(messages=(("user", SUMMARIZE_PROMPT.format(text=text)),), temperature=0.1)
    )
    return ToolResult({"text": response.text}, (), response.text)


def _run_script(ctx, args):
    if not ctx.allow_scripts():
        raise ToolError("script execution is disabled (tools.allow_scripts=false)")
    proc = subprocess.run(
        [sys.executable, args["path"], *args.get("args", [])],
        capture_output=True,
        text=True,
        timeout=30,
    )
    if proc.returncode != 0:
        raise ToolError(f"script failed ({proc.returncode}): {proc.stderr[:200]}")
    return ToolResult({"stdout": proc.stdout}, (), proc.stdout[:400])


def register_default_tools(registry: ToolRegistry, allow_scripts: bool = False) -> None:
    gene = ToolParam("gene", "string")
    specs = [
        ToolSpec("protein_entry", "UniProt entry: sequence, function text, PTM features",
                 (gene,), _protein_entry, source="UniProt"),
        ToolSpec("ortholog_sequence", "Fetch one UniProt sequence by accession",
                 (ToolParam("accession", "string"),), _ortholog_sequence, source="UniProt"),
        ToolSpec("sequence_similarity", "Cross-species percent identity table via local global alignment",
                 (gene,), _sequence_similarity, source="BLAST"),
        ToolSpec("transmembrane_prediction", "Transmembrane topology prediction",
                 (gene,), _transmembrane, source="DeepTMHMM"),
        ToolSpec("subcellular_images", "Subcellular locations, antibody, and stained cell images",
                 (gene,), _subcellular_images, source="Human Protein Atlas"),
        ToolSpec("expression_summary", "Tissue expression overview",
                 (gene,), _expression_summary, source="Human Protein Atlas"),
        ToolSpec("mutation_frequencies", "Per-study mutation frequencies",
                 (gene, ToolParam("keyword", "string", required=False)),
                 _mutation_frequencies, source="cBioPortal"),
        ToolSpec("gene_essentiality", "Essentiality calls across screens",
                 (gene,), _gene_essentiality, source="OGEE"),
        ToolSpec("string_interactors", "Highest-scoring interaction partners",
                 (gene, ToolParam("limit", "int", required=False)),
                 _string_interactors, source="STRING"),
        ToolSpec("pathway_enrichment", "Over-representation of interactor genes in pathway libraries",
                 (gene, ToolParam("max_terms", "int", required=False),
                  ToolParam("interactor_limit", "int", required=False),
                  ToolParam("libraries", "string_list", required=False)),
                 _pathway_enrichment, source="GSEAPy"),
        ToolSpec("signaling_network", "Causal signaling edges",
                 (gene,), _signaling_network, source="SIGNOR"),
        ToolSpec("survival_curves", "Product-limit survival curves per expression group",
                 (gene, ToolParam("cancer", "string", required=False)),
                 _survival_curves, source="TCGA Survival"),
        ToolSpec("gene_summary", "NCBI gene summary",
                 (gene,), _gene_summary, source="Gene"),
        ToolSpec("known_drugs", "Known drugs for the target",
                 (gene,), _known_drugs, source="Open Targets"),
        ToolSpec("drugbank_drugs", "DrugBank entries for the target",
                 (gene,), _drugbank_drugs, source="DrugBank"),
        ToolSpec("compound_properties", "Small-molecule properties by name",
                 (ToolParam("compound", "string"),), _compound_properties, source="PubChem"),
        ToolSpec("structures", "Experimental structure accessions",
                 (gene,), _structures, source="RCSB PDB"),
        ToolSpec("guidelines", "Clinical guideline recommendations",
                 (ToolParam("disease", "string", required=False),), _guidelines, source="ESMO"),
        ToolSpec("literature_answer", "Grounded answer from PubMed/PMC with PMID citations",
                 (ToolParam("question", "string"),), _literature_answer, source="PubMed"),
        ToolSpec("summarize", "Shorten a text with the generation model",
                 (ToolParam("text", "string"), ToolParam("limit", "int", required=False)),
                 _summarize),
    ]
    if allow_scripts:
        specs.append(
            ToolSpec("run_script", "Run a local analysis script (opt-in)",
                     (ToolParam("path", "string"), ToolParam("args", "string_list", required=False)),
                     _run_script)
        )
    for spec in specs:
        registry.register(spec)
