"""Command-line entry points.

Exit codes: 0 success, 1 failure, 2 delivered-but-degraded (placeholder
sections present), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent.recipes import generate_dossier, is_degraded
from .biodata.cassette import BiodataError, CassetteStore, LiveTransport, RecordingTransport, ReplayTransport
from .biodata.clients import BioClient
from .config import (
    ConfigError,
    build_judge,
    build_runtime,
    load_config,
    make_context_factory,
    resource_path,
    serialize_config,
)
from .core import DossierError, assemble_sources_appendix, dossier_to_json
from .docgen import render_pdf, render_pptx
from .evalharness import (
    aggregate,
    emit_report,
    judge_all,
    load_questions,
    parse_modes,
    run_modes,
)
from .retrieval import create_collection, drop_collection, grounded_answer, load_corpus_jsonl, retrieve

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DEGRADED = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> _Parser:
    parser = _Parser(prog="dossier", description="Automatic target dossier pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate the dossier deliverables")
    gen.add_argument("--gene", required=True)
    gen.add_argument("--disease", required=True)
    _common_flags(gen)

    ask = sub.add_parser("ask", help="answer one question in a chosen mode")
    ask.add_argument("--question", required=True)
    ask.add_argument("--mode", default="advanced", choices=["none", "naive", "advanced"])
    ask.add_argument("--corpus", help="JSONL corpus to ground on instead of a PubMed search")
    ask.add_argument("--gene")
    _common_flags(ask)

    ev = sub.add_parser("eval", help="run the three-mode comparison harness")
    ev.add_argument("--questions", help="JSONL question file (default: bundled 22-question set)")
    ev.add_argument("--modes", default="none,naive,advanced")
    ev.add_argument("--corpus", help="JSONL corpus file (default: bundled fixture corpus)")
    _common_flags(ev)

    rec = sub.add_parser("record-fixtures", help="record live responses into cassettes")
    rec.add_argument("--manifest", required=True, help="JSON request manifest")
    rec.add_argument("--fixtures-dir", required=True)
    rec.add_argument("--config")

    val = sub.add_parser("validate-config", help="load and validate a config file")
    val.add_argument("--config")

    return parser


def _common_flags(sub_parser):
    sub_parser.add_argument("--config")
    sub_parser.add_argument("--out")
    sub_parser.add_argument("--plan")
    sub_parser.add_argument("--offline", action="store_true",
                            help="force offline fixture replay regardless of config")


def _load_config(args):
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "offline", False):
        cfg.values["offline"] = True
    if getattr(args, "out", None):
        cfg.values["out_dir"] = args.out
    if getattr(args, "plan", None):
        cfg.values["plan"] = args.plan
    cfg.validate()
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    factory = make_context_factory(runtime, args.gene, args.disease)
    dossier, trace = generate_dossier(args.gene, args.disease, runtime.plan, factory)

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "dossier.json").write_text(dossier_to_json(dossier), encoding="utf-8")
    (out / "trace.json").write_text(trace.to_json(), encoding="utf-8")
    appendix = assemble_sources_appendix(dossier)
    sources = [
        {"source_name": r.source_name, "locator": r.locator, "detail": r.detail,
         "retrieved_at": r.retrieved_at}
        for r in appendix.sources
    ]
    (out / "sources.json").write_text(
        json.dumps(sources, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "dossier.pdf").write_bytes(render_pdf(dossier).data)
    (out / "dossier.pptx").write_bytes(render_pptx(dossier).data)

    print(f"wrote dossier.pdf, dossier.pptx, dossier.json, trace.json, sources.json to {out}")
    if is_degraded(trace):
        print("warning: one or more sections degraded to placeholders", file=sys.stderr)
        for w in trace.warnings:
            print(f"  {w}", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_ask(args) -> int:
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    question = args.question
    mode = args.mode

    if mode == "none":
        answer = grounded_answer(question, [], "none", runtime.chat, clock=runtime.clock,
                                 gene=args.gene)
    else:
        if args.corpus:
            docs = load_corpus_jsonl(args.corpus)
        else:
            docs, _, warnings = runtime.clients.pubmed_corpus(
                question,
                max_docs=int(cfg.get("corpus", "max_docs")),
                max_fulltext=int(cfg.get("corpus", "max_fulltext")),
            )
            for w in warnings:
                print(f"warning: {w}", file=sys.stderr)
        if not docs:
            print("error: no documents to ground on", file=sys.stderr)
            return EXIT_FAILURE
        chunking = "fixed" if mode == "naive" else "semantic"
        collection = create_collection(docs, runtime.embedder, runtime.store,
                                       clock=runtime.clock, chunking=chunking)
        try:
            if mode == "naive":
                hits = retrieve(question, collection, runtime.embedder, reranker=None,
                                k_sparse=0, rerank_required=False)
            else:
                hits = retrieve(question, collection, runtime.embedder, runtime.reranker)
            answer = grounded_answer(question, hits, mode, runtime.chat,
                                     clock=runtime.clock, gene=args.gene)
        finally:
            drop_collection(runtime.store, collection)

    print(answer.text)
    print()
    if answer.citations:
        print("Citations:")
        for ref in sorted(answer.citations):
            print(f"  - {ref.source_name}: {ref.locator}")
    else:
        print("Citations: none")
    for warning in answer.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    modes = parse_modes(args.modes)
    questions_path = args.questions or resource_path("eval", "questions.jsonl")
    corpus_path = args.corpus or resource_path("eval", "corpus.jsonl")
    questions = load_questions(questions_path)
    corpus = load_corpus_jsonl(corpus_path)

    answers = run_modes(questions, modes, corpus, runtime.chat, runtime.embedder,
                        runtime.reranker, runtime.store, clock=runtime.clock,
                        top_n=int(cfg.get("retrieval", "top_n")))
    scores, flagged = judge_all(answers, build_judge(cfg))
    stats, warnings = aggregate(scores)
    for w in warnings + flagged:
        print(f"warning: {w}", file=sys.stderr)
    paths = emit_report(stats, answers, cfg.out_dir, flagged)
    print(
        f"{len(answers)} answers over {len(questions)} questions x {len(modes)} modes; "
        f"report: {paths['report']}, box plots: {paths['boxplots']}, "
        f"transcripts: {paths['transcripts']}"
    )
    return EXIT_OK


def cmd_record_fixtures(args) -> int:
    cfg = load_config(args.config) if args.config else load_config()
    if cfg.offline:
        print("error: record-fixtures needs a live config (offline=false); refusing",
              file=sys.stderr)
        return EXIT_FAILURE
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    if not isinstance(manifest, list):
        print("error: manifest must be a JSON list of requests", file=sys.stderr)
        return EXIT_FAILURE

    store = CassetteStore(args.fixtures_dir)
    transport = RecordingTransport(LiveTransport(), store)
    clients = BioClient(transport, replay_transport=ReplayTransport(store), clock=cfg.clock)
    failures = []
    for i, entry in enumerate(manifest):
        try:
            if "corpus_query" in entry:
                clients.pubmed_corpus(entry["corpus_query"],
                                      max_docs=int(entry.get("max_docs", 20)),
                                      max_fulltext=int(entry.get("max_fulltext", 2)))
            else:
                clients.fetch_record(entry["source"], entry.get("query", {}))
        except (DossierError, KeyError) as exc:
            failures.append(f"manifest[{i}]: {exc}")
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    recorded = sorted(p.name for p in Path(args.fixtures_dir).glob("*.jsonl"))
    print(f"cassette files: {', '.join(recorded) or 'none'}")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_validate_config(args) -> int:
    cfg = load_config(args.config) if args.config else load_config()
    sys.stdout.write(serialize_config(cfg))
    print(f"config OK (offline={cfg.offline}, fixtures={cfg.fixtures_dir})", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "ask": cmd_ask,
    "eval": cmd_eval,
    "record-fixtures": cmd_record_fixtures,
    "validate-config": cmd_validate_config,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"dossier: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except DossierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
