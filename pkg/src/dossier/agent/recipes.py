"""Section recipes: deterministic tool plans, one per table-of-contents
entry, plus the SWOT recipe which runs the free-form tool loop.

A recipe failure degrades to an explicit "data unavailable" block and a
trace warning; the job continues and other sections are untouched.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..core import (
    Block,
    ChartModel,
    Clock,
    Dossier,
    DossierError,
    Section,
    SourceRef,
    chart,
    paragraph,
    swot_grid,
    table,
)
from .loop import run_loop
from .tools import AgentTrace, ToolCall, ToolRegistry, TracingChat

SWOT_PROMPT = """TASK: agent
GENE: {gene}
DISEASE: {disease}
You are preparing the SWOT analysis of {gene} as a drug target in {disease}.
Gather any missing evidence with the tools, then finish.

TOOLS:
{manifest}

Reply with exactly one JSON object per turn:
  {{"tool": "<name>", "args": {{...}}}}        to call a tool
  {{"final": "<swot json>"}}                   to finish
The final answer must itself be JSON with four non-empty string lists:
strengths, weaknesses, opportunities, threats."""


@dataclass
class RecipeContext:
    gene: str
    disease: str
    config: dict
    clients: object
    chat: TracingChat
    embedder: object
    reranker: object
    store: object
    registry: ToolRegistry
    trace: AgentTrace
    clock: Clock
    geneset_dir: Path
    cache: dict = field(default_factory=dict)

    def now(self) -> str:
        return self.clock.now().isoformat().replace("+00:00", "Z")

    def fmt(self, template: str) -> str:
        return template.format(gene=self.gene, disease=self.disease)

    def dispatch(self, tool: str, args: dict):
        """Shared per-job cache keyed by (tool, args); repeat calls replay the
        result without a second fetch but still log a trace step."""
        key = (tool, json.dumps(args, sort_keys=True))
        if key in self.cache:
            result = self.cache[key]
            self.trace.steps.append(
                ToolCall(tool=tool, args=dict(args), observation=result.observation,
                         refs=result.refs, error=None)
            )
            return result
        result = self.registry.dispatch(tool, args, self, self.trace)
        self.cache[key] = result
        return result

    # config accessors used by tool handlers
    def species_map(self):
        return [tuple(pair) for pair in self.config.get("similarity_species", [])]

    def geneset_names(self):
        return list(self.config.get("genesets", []))

    def geneset_path(self, name: str) -> Path:
        return self.geneset_dir / f"{name}.gmt"

    def corpus_max_docs(self) -> int:
        return int(self.config.get("corpus", {}).get("max_docs", 50))

    def corpus_max_fulltext(self) -> int:
        return int(self.config.get("corpus", {}).get("max_fulltext", 2))

    def retrieval_param(self, name: str, default):
        return self.config.get("retrieval", {}).get(name, default)

    def rerank_required(self) -> bool:
        return bool(self.config.get("rerank", {}).get("required", True))

    def disease_keyword(self) -> str:
        return self.config.get("disease_keyword") or self.disease.split()[0]

    def allow_scripts(self) -> bool:
        return bool(self.config.get("tools", {}).get("allow_scripts", False))

    def summary_threshold(self) -> int:
        return int(self.config.get("summary_threshold", 400))


# --- recipe implementations -------------------------------------------------
# each returns (blocks, sources)


def recipe_summary_characteristics(ctx: RecipeContext, params: dict):
    entry = ctx.dispatch("protein_entry", {"gene": ctx.gene})
    similarity = ctx.dispatch("sequence_similarity", {"gene": ctx.gene})
    structures = ctx.dispatch("structures", {"gene": ctx.gene})
    summary = ctx.dispatch("gene_summary", {"gene": ctx.gene})

    function_text = entry.record["function"]
    if len(function_text) > ctx.summary_threshold():
        condensed = ctx.dispatch("summarize", {"text": function_text, "limit": ctx.summary_threshold()})
        function_text = condensed.record["text"]

    rows = [[f"Similarity with {label}", f"{pid}%"] for label, pid in similarity.record["rows"]]
    rows.append(["Protein function", function_text])
    shown = ", ".join(structures.record["structure_ids"][:4])
    blocks = [
        paragraph(
            f"{entry.record['protein_name']} ({entry.record['accession']}, "
            f"{len(entry.record['sequence'])} aa). {summary.record['summary']}"
        ),
        table(rows, header=["Target characteristics", ""]),
        paragraph(
            f"{structures.record['total_count']} experimental structures are available "
            f"(e.g. {shown})."
        ),
    ]
    sources = entry.refs + similarity.refs + structures.refs + summary.refs
    return blocks, sources


def recipe_transmembrane(ctx, params):
    result = ctx.dispatch("transmembrane_prediction", {"gene": ctx.gene})
    rec = result.record
    text = rec["summary"] or (
        f"Predicted topology: {rec['topology']} with {rec['helices']} transmembrane helices."
    )
    return [paragraph(text)], result.refs


def recipe_subcellular(ctx, params):
    result = ctx.dispatch("subcellular_images", {"gene": ctx.gene})
    rec = result.record
    blocks = [
        paragraph(
            f"Localized to the {', '.join(rec['subcellular_locations']) or 'cell'}. "
            f"Antigen: {rec['antibody']}"
        )
    ]
    for img in rec["images"]:
        blocks.append(
            Block("image", {"data": img["data"], "media_type": img["media_type"],
                            "caption": img["cell_line"]})
        )
    return blocks, result.refs


def recipe_expression(ctx, params):
    result = ctx.dispatch("expression_summary", {"gene": ctx.gene})
    rows = [[e["tissue"], e["level"]] for e in result.record["expression"]]
    blocks = [paragraph(f"Expression summary for {ctx.gene} across tissues.")]
    if rows:
        blocks.append(table(rows, header=["Tissue", "Level"]))
    return blocks, result.refs


def recipe_mutations(ctx, params):
    result = ctx.dispatch("mutation_frequencies", {"gene": ctx.gene})
    rows = [
        [s["name"], str(s["mutated_samples"]), str(s["profiled_samples"]),
         f"{100 * s['frequency']:.1f}%"]
        for s in result.record["studies"]
    ]
    blocks = [
        paragraph(f"Mutation frequency of {ctx.gene} per study (mutated / profiled samples)."),
        table(rows, header=["Study", "Mutated", "Profiled", "Frequency"]),
    ]
    return blocks, result.refs


def recipe_glycosylation(ctx, params):
    entry = ctx.dispatch("protein_entry", {"gene": ctx.gene})
    glyco = entry.record["glycosylation"]
    if glyco:
        rows = [[str(g["position"]), g["description"]] for g in glyco]
        blocks = [table(rows, header=["Position", "Description"])]
    else:
        blocks = [paragraph(f"No glycosylation sites are annotated for {ctx.gene}.")]
    return blocks, entry.refs


def recipe_essentiality(ctx, params):
    result = ctx.dispatch("gene_essentiality", {"gene": ctx.gene})
    rec = result.record
    text = rec["summary"] or (
        f"{ctx.gene} is called essential in {rec['essential_in']} of "
        f"{rec['tested_in']} screens."
    )
    return [paragraph(text)], result.refs


def recipe_interactions(ctx, params):
    limit = int(params.get("limit", 100))
    result = ctx.dispatch("string_interactors", {"gene": ctx.gene, "limit": limit})
    interactors = result.record["interactors"]
    rows = [[i["symbol"], f"{i['score']:.3f}"] for i in interactors[:10]]
    blocks = [
        paragraph(
            f"The {len(interactors)} genes with the highest interaction scores with "
            f"{ctx.gene}; the ten strongest partners are shown."
        ),
        table(rows, header=["Partner", "Score"]),
    ]
    return blocks, result.refs


def recipe_enrichment(ctx, params):
    args = {"gene": ctx.gene}
    if "max_terms" in params:
        args["max_terms"] = int(params["max_terms"])
    if "interactor_limit" in params:
        args["interactor_limit"] = int(params["interactor_limit"])
    result = ctx.dispatch("pathway_enrichment", args)
    results = result.record["results"]
    model = ChartModel(
        kind="bar",
        labels=tuple(r["term"] for r in results),
        values=tuple(r["p_value"] for r in results),
        x_title="term",
        y_title="p-value (lower is better)",
    )
    blocks = [
        paragraph(
            f"Over-representation of the top {ctx.gene} interactors in "
            f"{', '.join(ctx.geneset_names())}."
        ),
        chart(model),
    ]
    return blocks, result.refs


def recipe_signaling(ctx, params):
    result = ctx.dispatch("signaling_network", {"gene": ctx.gene})
    rows = [
        [e["source"], e["effect"], e["target"], e.get("mechanism", "")]
        for e in result.record["edges"][:12]
    ]
    blocks = [paragraph(f"Curated causal interactions around {ctx.gene}.")]
    if rows:
        blocks.append(table(rows, header=["Source", "Effect", "Target", "Mechanism"]))
    return blocks, result.refs


def recipe_survival(ctx, params):
    args = {"gene": ctx.gene}
    if "cancer" in params:
        args["cancer"] = params["cancer"]
    result = ctx.dispatch("survival_curves", args)
    blocks = [
        paragraph(
            f"Product-limit survival for {result.record['cohort']} stratified by "
            f"{ctx.gene} expression (groups: {', '.join(result.record['curves'])})."
        )
    ]
    for group, points in result.record["curves"].items():
        model = ChartModel(
            kind="step",
            labels=tuple(str(t) for t, _, _ in points),
            values=tuple(s for _, s, _ in points),
            x_title=f"months ({group} expression)",
            y_title="S(t)",
        )
        blocks.append(chart(model))
    return blocks, result.refs


def recipe_literature_topic(ctx, params):
    question = ctx.fmt(params["question"])
    result = ctx.dispatch("literature_answer", {"question": question})
    return [paragraph(result.record["text"])], result.refs


def recipe_guidelines(ctx, params):
    result = ctx.dispatch("guidelines", {})
    rec = result.record
    blocks = [paragraph(f"{rec['title']} ({rec.get('year', 'n.d.')}).")]
    for recommendation in rec["recommendations"]:
        blocks.append(paragraph(f"- {recommendation}"))
    return blocks, result.refs


def recipe_known_drugs(ctx, params):
    ot = ctx.dispatch("known_drugs", {"gene": ctx.gene})
    db = ctx.dispatch("drugbank_drugs", {"gene": ctx.gene})
    rows = [
        [d["drug"], str(d["phase"]), d["mechanism"], d["disease"]]
        for d in ot.record["known_drugs"]
    ]
    blocks = [
        paragraph(f"Known drugs targeting {ctx.gene}, with development phase and mechanism."),
        table(rows, header=["Drug", "Phase", "Mechanism", "Disease"]),
    ]
    sources = ot.refs + db.refs
    drugs = sorted({d["drug"] for d in ot.record["known_drugs"]})
    if drugs:
        compound = ctx.dispatch("compound_properties", {"compound": drugs[0].lower()})
        blocks.append(
            paragraph(
                f"{drugs[0]}: formula {compound.record['formula']}, "
                f"molecular weight {compound.record['weight']}."
            )
        )
        sources = sources + compound.refs
    return blocks, sources


def recipe_swot(ctx, params):
    budget = int(params.get("budget", ctx.config.get("swot_budget", 6)))
    goal = SWOT_PROMPT.format(gene=ctx.gene, disease=ctx.disease, manifest=ctx.registry.manifest())
    step_start = len(ctx.trace.steps)
    result = run_loop(goal, ctx.registry, ctx, ctx.chat, ctx.trace, budget=budget)
    if result.final is None:
        raise DossierError(f"SWOT loop failed: {result.reason}")
    try:
        grid = json.loads(result.final.text)
        quadrants = {k: [str(i) for i in grid[k]] for k in
                     ("strengths", "weaknesses", "opportunities", "threats")}
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DossierError(f"SWOT answer was not a valid grid: {exc}") from exc
    if any(not v for v in quadrants.values()):
        raise DossierError("SWOT grid has an empty quadrant")
    refs = []
    for step in ctx.trace.steps[step_start:]:
        for ref in step.refs:
            if ref not in refs:
                refs.append(ref)
    blocks = [swot_grid(**quadrants)]
    if not refs:
        # loop finished without tool calls; ground the grid explicitly instead
        answer = ctx.dispatch(
            "literature_answer",
            {"question": ctx.fmt("Evidence on {gene} as a therapeutic target in {disease}")},
        )
        refs = list(answer.refs)
    return blocks, tuple(refs)


RECIPES = {
    "summary_characteristics": recipe_summary_characteristics,
    "transmembrane": recipe_transmembrane,
    "subcellular": recipe_subcellular,
    "expression": recipe_expression,
    "mutations": recipe_mutations,
    "glycosylation": recipe_glycosylation,
    "essentiality": recipe_essentiality,
    "interactions": recipe_interactions,
    "enrichment": recipe_enrichment,
    "signaling": recipe_signaling,
    "survival": recipe_survival,
    "literature_topic": recipe_literature_topic,
    "guidelines": recipe_guidelines,
    "known_drugs": recipe_known_drugs,
    "swot": recipe_swot,
}


def run_recipe(recipe_def: dict, ctx: RecipeContext) -> Section:
    """Execute one plan entry; on failure emit a placeholder section whose
    reference still traces to a logged step."""
    section_id = recipe_def["id"]
    title = ctx.fmt(recipe_def["title"])
    name = recipe_def["recipe"]
    fn = RECIPES.get(name)
    if fn is None:
        raise DossierError(f"unknown recipe {name!r} for section {section_id!r}")
    step_start = len(ctx.trace.steps)
    try:
        blocks, sources = fn(ctx, recipe_def.get("params", {}))
        return Section(id=section_id, title=title, blocks=tuple(blocks), sources=tuple(sources))
    except DossierError as exc:
        ctx.trace.warn(f"recipe {section_id} degraded: {exc}")
        refs = _degraded_refs(ctx, section_id, step_start, exc)
        block = paragraph(f"Data unavailable for this section ({exc}).")
        return Section(id=section_id, title=title, blocks=(block,), sources=refs)


def _degraded_refs(ctx, section_id, step_start, exc) -> tuple[SourceRef, ...]:
    seen: list[SourceRef] = []
    for step in ctx.trace.steps[step_start:]:
        for ref in step.refs:
            if ref not in seen:
                seen.append(ref)
    if seen:
        return tuple(seen)
    ref = SourceRef("PubMed", f"unavailable:{section_id}", detail=str(exc)[:120],
                    retrieved_at=ctx.now())
    ctx.trace.steps.append(
        ToolCall(tool=f"recipe:{section_id}", args={}, observation="degraded",
                 refs=(ref,), error=str(exc))
    )
    return (ref,)


def load_plan(path: str | Path) -> dict:
    plan = json.loads(Path(path).read_text(encoding="utf-8"))
    if "sections" not in plan or not isinstance(plan["sections"], list):
        raise DossierError("dossier plan must carry a 'sections' list")
    return plan


def _job_id(gene: str, disease: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", disease.lower()).strip("-")
    return f"{gene.lower()}-{slug}"


def generate_dossier(
    gene: str,
    disease: str,
    plan: dict,
    ctx_factory,
) -> tuple[Dossier, AgentTrace]:
    """Run every recipe of the plan in ToC order.

    ``ctx_factory(trace)`` builds the RecipeContext; collections opened by
    literature recipes must all be dropped by the time this returns.
    """
    gene = gene.upper()
    trace = AgentTrace(job_id=_job_id(gene, disease))
    ctx = ctx_factory(trace)

    top_sections: list[Section] = []
    for section_def in plan["sections"]:
        children = tuple(run_recipe(child, ctx) for child in section_def.get("children", []))
        refs: list[SourceRef] = []
        for child in children:
            for ref in child.sources:
                if ref not in refs:
                    refs.append(ref)
        top_sections.append(
            Section(
                id=section_def["id"],
                title=ctx.fmt(section_def["title"]),
                children=children,
                sources=tuple(refs),
            )
        )

    leftover = ctx.store.live_collections()
    if leftover:
        trace.warn(f"dropping leftover collections: {leftover}")
        for collection_id in leftover:
            ctx.store.drop(collection_id)

    dossier = Dossier(
        gene=gene,
        disease=disease,
        sections=tuple(top_sections),
        generated_at=ctx.now(),
        trace_ref="trace.json",
    )
    dossier.validate([ctx.fmt(s["title"]) for s in plan["sections"]])
    return dossier, trace


def is_degraded(trace: AgentTrace) -> bool:
    return any("degraded" in w for w in trace.warnings)
