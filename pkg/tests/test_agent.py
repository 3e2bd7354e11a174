import json

import pytest

from dossier.agent.loop import FinalAnswer, LoopError, ParsedToolCall, parse_model_action, run_loop
from dossier.agent.recipes import RECIPES, generate_dossier, is_degraded, run_recipe
from dossier.agent.tools import (
    AgentTrace,
    ToolError,
    ToolParam,
    ToolRegistry,
    ToolResult,
    ToolSpec,
    build_default_registry,
)
from dossier.biodata.stats import enrich, load_gmt
from dossier.config import resource_path
from dossier.core import dossier_to_json
from dossier.modelgw import ScriptedChatClient


def spec(name="echo", params=(), handler=None, source=None):
    handler = handler or (lambda ctx, args: ToolResult({"args": args}, (), f"ran {name}"))
    return ToolSpec(name, f"{name} tool", tuple(params), handler, source=source)


class DummyCtx:
    def now(self):
        return "2025-01-01T00:00:00Z"


class TestRegistry:
    def test_register_and_manifest(self):
        registry = ToolRegistry()
        registry.register(spec("string_interactors", (ToolParam("gene", "string"),
                                                      ToolParam("limit", "int", required=False))))
        assert "string_interactors(gene: string, limit: int?)" in registry.manifest()

    def test_duplicate_rejected(self):
        registry = ToolRegistry()
        registry.register(spec("a"))
        with pytest.raises(ToolError):
            registry.register(spec("a"))

    def test_manifest_counts_tools(self):
        registry = ToolRegistry()
        for name in ("a", "b", "c"):
            registry.register(spec(name))
        assert len(registry.manifest().splitlines()) == 3

    def test_arg_validation(self):
        registry = ToolRegistry()
        registry.register(spec("t", (ToolParam("gene", "string"), ToolParam("limit", "int"))))
        trace = AgentTrace("job")
        with pytest.raises(ToolError, match="missing argument"):
            registry.dispatch("t", {"gene": "KRAS"}, DummyCtx(), trace)
        with pytest.raises(ToolError, match="must be int"):
            registry.dispatch("t", {"gene": "KRAS", "limit": "ten"}, DummyCtx(), trace)
        with pytest.raises(ToolError, match="unexpected argument"):
            registry.dispatch("t", {"gene": "KRAS", "limit": 5, "x": 1}, DummyCtx(), trace)

    def test_dispatch_logs_tool_call(self):
        registry = ToolRegistry()
        registry.register(spec("t", (ToolParam("gene", "string"),)))
        trace = AgentTrace("job")
        registry.dispatch("t", {"gene": "KRAS"}, DummyCtx(), trace)
        assert len(trace.steps) == 1
        assert trace.steps[0].tool == "t"
        assert trace.steps[0].error is None

    def test_failed_dispatch_logs_error_and_attempt_ref(self):
        def boom(ctx, args):
            raise ToolError("backend down")

        registry = ToolRegistry()
        registry.register(spec("t", (), handler=boom, source="UniProt"))
        trace = AgentTrace("job")
        with pytest.raises(ToolError):
            registry.dispatch("t", {}, DummyCtx(), trace)
        step = trace.steps[0]
        assert step.error == "backend down"
        assert step.refs[0].source_name == "UniProt"
        assert step.refs[0].locator.startswith("unavailable:")

    def test_scripts_tool_absent_by_default(self):
        registry = build_default_registry(allow_scripts=False)
        assert "run_script" not in registry
        assert "run_script" in build_default_registry(allow_scripts=True)


class TestParseModelAction:
    def test_tool_call(self):
        action = parse_model_action(
            '{"tool":"string_interactors","args":{"gene":"KRAS","limit":100}}'
        )
        assert action == ParsedToolCall("string_interactors", {"gene": "KRAS", "limit": 100})

    def test_final(self):
        assert parse_model_action('{"final":"Done."}') == FinalAnswer("Done.")

    def test_prose_around_json_ignored(self):
        action = parse_model_action('let me think {"tool":"x","args":{}} and done')
        assert action == ParsedToolCall("x", {})

    def test_no_json_is_error(self):
        with pytest.raises(LoopError):
            parse_model_action("I will just describe my plan in words.")

    def test_wrong_shape_is_error(self):
        with pytest.raises(LoopError):
            parse_model_action('{"thought": "hmm"}')

    def test_structured_final_serialized(self):
        action = parse_model_action('{"final": {"strengths": ["x"]}}')
        assert isinstance(action, FinalAnswer)
        assert json.loads(action.text) == {"strengths": ["x"]}


class TestRunLoop:
    def registry(self):
        registry = ToolRegistry()
        registry.register(spec("probe", (ToolParam("q", "string"),),
                               handler=lambda ctx, args: ToolResult({}, (), f"observed {args['q']}")))
        return registry

    def test_immediate_final_makes_no_tool_steps(self):
        chat = ScriptedChatClient(['{"final":"All done."}'])
        trace = AgentTrace("job")
        result = run_loop("goal", self.registry(), DummyCtx(), chat, trace, budget=3)
        assert result.final == FinalAnswer("All done.")
        assert trace.steps == []

    def test_tool_then_final_transcript(self):
        chat = ScriptedChatClient(
            ['{"tool":"probe","args":{"q":"kras"}}', '{"final":"ok"}']
        )
        trace = AgentTrace("job")
        result = run_loop("goal", self.registry(), DummyCtx(), chat, trace, budget=4)
        assert result.final == FinalAnswer("ok")
        assert [s.tool for s in trace.steps] == ["probe"]
        second_prompt = chat.requests[1].prompt_text()
        assert "OBSERVATION: observed kras" in second_prompt

    def test_budget_exhaustion_is_flagged(self):
        chat = ScriptedChatClient(['{"tool":"probe","args":{"q":"x"}}'] * 3)
        trace = AgentTrace("job")
        result = run_loop("goal", self.registry(), DummyCtx(), chat, trace, budget=3)
        assert result.final is None
        assert result.flagged
        assert any("budget" in w for w in trace.warnings)

    def test_two_parse_failures_abort(self):
        chat = ScriptedChatClient(["no json here", "still no json"])
        trace = AgentTrace("job")
        result = run_loop("goal", self.registry(), DummyCtx(), chat, trace, budget=5)
        assert result.flagged
        assert len(chat.requests) == 2

    def test_unknown_tool_fed_back_then_recovers(self):
        chat = ScriptedChatClient(
            ['{"tool":"missing","args":{}}', '{"final":"recovered"}']
        )
        trace = AgentTrace("job")
        result = run_loop("goal", self.registry(), DummyCtx(), chat, trace, budget=4)
        assert result.final == FinalAnswer("recovered")
        assert "unknown tool" in chat.requests[1].prompt_text()

    def test_tool_error_is_observation_not_fatal(self):
        def boom(ctx, args):
            raise ToolError("fixture missing")

        registry = ToolRegistry()
        registry.register(spec("bad", (), handler=boom))
        chat = ScriptedChatClient(['{"tool":"bad","args":{}}', '{"final":"done"}'])
        trace = AgentTrace("job")
        result = run_loop("goal", registry, DummyCtx(), chat, trace, budget=4)
        assert result.final == FinalAnswer("done")
        assert "tool error: fixture missing" in chat.requests[1].prompt_text()


@pytest.fixture()
def ctx(kras_factory):
    return kras_factory(AgentTrace("test-job"))


class TestRecipesOnFixtures:
    def test_similarity_table(self, ctx):
        section = run_recipe(
            {"id": "summary", "title": "Summary and characteristics",
             "recipe": "summary_characteristics", "params": {}},
            ctx,
        )
        tables = [b for b in section.blocks if b.kind == "table"]
        rows = {r[0]: r[1] for r in tables[0].payload["rows"]}
        assert rows["Similarity with Guinea pigs"] == "100.0%"
        assert rows["Similarity with mice"] == "98.94%"
        assert len([k for k in rows if k.startswith("Similarity")]) == 5
        assert "Protein function" in rows
        assert any(r.source_name == "BLAST" for r in section.sources)

    def test_enrichment_chart_values_match_oracle(self, ctx):
        section = run_recipe(
            {"id": "enrichment", "title": "Pathway enrichment", "recipe": "enrichment",
             "params": {"max_terms": 10, "interactor_limit": 100}},
            ctx,
        )
        model = next(b for b in section.blocks if b.kind == "chart").payload["model"]
        assert model.kind == "bar"
        assert 0 < len(model.values) <= 10

        # independent recomputation from the same fixture inputs
        string_fr = ctx.clients.fetch_record("STRING", {"gene": "KRAS", "limit": 100})
        genes = {i["symbol"] for i in string_fr.record["interactors"]}
        combined = []
        for lib_name in ("GO_Biological_Process_2023", "KEGG_2021_Human"):
            lib = load_gmt(resource_path("genesets", f"{lib_name}.gmt"), lib_name)
            results, _ = enrich(genes, lib, max_terms=10)
            combined.extend(results)
        combined.sort(key=lambda r: (r.p_value, r.term))
        expected = combined[:10]
        assert list(model.labels) == [r.term for r in expected]
        assert list(model.values) == [r.p_value for r in expected]

    def test_enrichment_top_terms_include_ras_pathway(self, ctx):
        section = run_recipe(
            {"id": "enrichment", "title": "Pathway enrichment", "recipe": "enrichment",
             "params": {"max_terms": 10}},
            ctx,
        )
        model = next(b for b in section.blocks if b.kind == "chart").payload["model"]
        assert any("Ras" in label for label in model.labels[:3])

    def test_subcellular_recipe(self, ctx):
        section = run_recipe(
            {"id": "subcellular", "title": "Subcellular location", "recipe": "subcellular",
             "params": {}},
            ctx,
        )
        images = [b for b in section.blocks if b.kind == "image"]
        assert len(images) == 3
        assert {b.payload["caption"] for b in images} == {"A-431", "U-251 MG", "U2OS"}
        assert any("HPA072761" in (r.detail or "") for r in section.sources)

    def test_swot_recipe_under_mock(self, ctx):
        section = run_recipe(
            {"id": "swot", "title": "SWOT analysis", "recipe": "swot", "params": {"budget": 6}},
            ctx,
        )
        grid = next(b for b in section.blocks if b.kind == "swot_grid").payload
        for quadrant in ("strengths", "weaknesses", "opportunities", "threats"):
            assert grid[quadrant], quadrant
        assert section.sources  # grounded through the loop's literature call

    def test_unknown_recipe_rejected(self, ctx):
        with pytest.raises(Exception, match="unknown recipe"):
            run_recipe({"id": "x", "title": "X", "recipe": "nope", "params": {}}, ctx)

    def test_recipe_names_cover_plan(self, offline_runtime):
        for section in offline_runtime.plan["sections"]:
            for child in section["children"]:
                assert child["recipe"] in RECIPES


class TestGenerateDossier:
    def test_four_sections_in_plan_order(self, offline_runtime, kras_factory, no_network):
        dossier, trace = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )
        assert [s.title for s in dossier.sections] == [
            "Target information",
            "Disease information",
            "Competitive landscape",
            "Conclusion",
        ]
        assert all(s.sources for s in dossier.sections)
        assert not is_degraded(trace)

    def test_known_drugs_title_interpolated(self, offline_runtime, kras_factory):
        dossier, _ = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )
        landscape = dossier.sections[2]
        assert any(c.title == "Known drugs targeting KRAS" for c in landscape.children)

    def test_trace_completeness(self, offline_runtime, kras_factory):
        dossier, trace = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )
        trace_refs = trace.all_refs()
        for ref in dossier.all_refs():
            assert (ref.source_name, ref.locator) in trace_refs

    def test_collection_hygiene(self, offline_runtime, kras_factory):
        generate_dossier("KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory)
        assert offline_runtime.store.live_collections() == []
        assert offline_runtime.store.total_chunks() == 0

    def test_grounded_sections_cite_context_only(self, offline_runtime, kras_factory):
        dossier, trace = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )
        assert not any("stripped citation" in w for w in trace.warnings)

    def test_deterministic_json(self):
        from dossier.config import RunConfig, build_runtime, make_context_factory

        outputs = []
        for _ in range(2):
            runtime = build_runtime(RunConfig())
            factory = make_context_factory(runtime, "KRAS", "pancreatic cancer")
            dossier, _ = generate_dossier("KRAS", "pancreatic cancer", runtime.plan, factory)
            outputs.append(dossier_to_json(dossier))
        assert outputs[0] == outputs[1]

    def test_schema_validation(self, offline_runtime, kras_factory):
        jsonschema = pytest.importorskip("jsonschema")
        dossier, _ = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )
        schema = json.loads(resource_path("schema", "dossier.schema.json").read_text())
        jsonschema.validate(json.loads(dossier_to_json(dossier)), schema)

    def test_recipe_isolation_with_injected_failure(self, offline_runtime, kras_factory):
        baseline, _ = generate_dossier(
            "KRAS", "pancreatic cancer", offline_runtime.plan, kras_factory
        )

        from dossier.config import RunConfig, build_runtime, make_context_factory

        runtime2 = build_runtime(RunConfig())
        factory2 = make_context_factory(runtime2, "KRAS", "pancreatic cancer")

        def broken_factory2(trace):
            ctx = factory2(trace)
            spec_obj = ctx.registry.get("guidelines")
            object.__setattr__(spec_obj, "handler",
                               lambda _ctx, _args: (_ for _ in ()).throw(ToolError("injected")))
            return ctx

        degraded, trace = generate_dossier(
            "KRAS", "pancreatic cancer", runtime2.plan, broken_factory2
        )
        assert is_degraded(trace)

        # only the guidelines section changed
        for base_top, new_top in zip(baseline.sections, degraded.sections):
            for base_child, new_child in zip(base_top.children, new_top.children):
                if base_child.id == "guidelines":
                    assert new_child.blocks[0].payload["text"].startswith("Data unavailable")
                else:
                    assert base_child.blocks == new_child.blocks
