"""Three-mode answer comparison as a reusable harness.

Runs a question set through the bare model, a naive retrieval pipeline
(dense only, fixed-size chunks, no reranking), and the full pipeline; a
judge model scores every answer on a five-metric rubric; aggregation
reports medians, quartiles, and the fraction of scores at 4 or above.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .core import ChartModel, DossierError
from .docgen import render_charts_pdf
from .modelgw import ChatRequest
from .retrieval import (
    SourceDocument,
    create_collection,
    drop_collection,
    grounded_answer,
    retrieve,
)

MODES = ("none", "naive", "advanced")
METRICS = ("faithfulness", "relevance", "quality", "completeness", "correctness")

JUDGE_PROMPT_V1 = """TASK: judge
Score the answer to the question on five metrics: faithfulness, relevance,
quality, completeness, correctness. Each score is an integer from 1 to 5.
QUESTION:
{question}
ANSWER:
{answer}
RUBRIC: reply with strict JSON only, shaped
{{"faithfulness": {{"score": <1-5>, "rationale": "<one sentence>"}}, ...}}
covering every metric exactly once."""


class EvalError(DossierError):
    pass


@dataclass(frozen=True)
class JudgeScore:
    question_id: str
    mode: str
    metric: str
    score: int
    rationale: str = ""

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise EvalError(f"score must be 1..5, got {self.score}")
        if self.mode not in MODES:
            raise EvalError(f"unknown mode {self.mode!r}")
        if self.metric not in METRICS:
            raise EvalError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class ModeStats:
    metric: str
    mode: str
    median: float
    q1: float
    q3: float
    fraction_ge4: float
    n: int

    def __post_init__(self):
        if not self.q1 <= self.median <= self.q3:
            raise EvalError("quartiles must bracket the median")
        if not 0.0 <= self.fraction_ge4 <= 1.0:
            raise EvalError("fraction must lie in [0, 1]")


@dataclass
class ModeAnswer:
    question_id: str
    question: str
    mode: str
    text: str
    citations: list[str]
    error: str | None = None


def load_questions(path: str | Path) -> list[dict]:
    questions = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        q = json.loads(line)
        questions.append({"id": str(q["id"]), "question": q["question"]})
    return questions


def run_modes(
    questions: list[dict],
    modes: list[str],
    corpus: list[SourceDocument],
    chat,
    embedder,
    reranker,
    store,
    clock=None,
    top_n: int = 5,
) -> list[ModeAnswer]:
    """One answer per (question, mode); per-question failures are recorded
    and the run continues."""
    for mode in modes:
        if mode not in MODES:
            raise EvalError(f"unknown mode {mode!r}")
    answers: list[ModeAnswer] = []
    for q in questions:
        for mode in modes:
            try:
                answers.append(
                    _answer_one(q, mode, corpus, chat, embedder, reranker, store, clock, top_n)
                )
            except DossierError as exc:
                answers.append(
                    ModeAnswer(q["id"], q["question"], mode, "", [], error=str(exc))
                )
    return answers


def _answer_one(q, mode, corpus, chat, embedder, reranker, store, clock, top_n) -> ModeAnswer:
    if mode == "none":
        answer = grounded_answer(q["question"], [], "none", chat, clock=clock)
        return ModeAnswer(q["id"], q["question"], mode, answer.text, [])

    chunking = "fixed" if mode == "naive" else "semantic"
    collection = create_collection(corpus, embedder, store, clock=clock, chunking=chunking)
    try:
        if mode == "naive":
            hits = retrieve(q["question"], collection, embedder, reranker=None,
                            k_sparse=0, top_n=top_n, rerank_required=False)
        else:
            hits = retrieve(q["question"], collection, embedder, reranker=reranker, top_n=top_n)
        answer = grounded_answer(q["question"], hits, mode, chat, clock=clock)
    finally:
        drop_collection(store, collection)
    return ModeAnswer(
        q["id"], q["question"], mode, answer.text, sorted(answer.pmid_citations())
    )


# --- judging ------------------------------------------------------------------

def _parse_judge_json(text: str) -> dict[str, tuple[int, str]]:
    decoder = json.JSONDecoder()
    idx = text.find("{")
    obj = None
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text, idx)
            break
        except json.JSONDecodeError:
            idx = text.find("{", idx + 1)
    if not isinstance(obj, dict):
        raise EvalError("judge reply is not JSON")
    out = {}
    for metric in METRICS:
        if metric not in obj:
            raise EvalError(f"judge reply missing metric {metric!r}")
        cell = obj[metric]
        if isinstance(cell, dict):
            score, rationale = cell.get("score"), str(cell.get("rationale", ""))
        else:
            score, rationale = cell, ""
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
            raise EvalError(f"judge score for {metric} out of range: {score!r}")
        out[metric] = (score, rationale)
    return out


def judge(
    question: str,
    answer: ModeAnswer,
    judge_chat,
    prompt_template: str = JUDGE_PROMPT_V1,
    max_retries: int = 1,
) -> list[JudgeScore]:
    """One score per rubric metric; an out-of-range or unparseable reply is
    re-requested once, then the question is flagged via EvalError."""
    prompt = prompt_template.format(question=question, answer=answer.text)
    last_error = None
    for attempt in range(max_retries + 1):
        suffix = "" if attempt == 0 else f"\nYour previous reply was invalid ({last_error}); reply with valid JSON."
        response = judge_chat.chat(
            ChatRequest(messages=(("user", prompt + suffix),), temperature=0.0, max_tokens=512)
        )
        try:
            parsed = _parse_judge_json(response.text)
        except EvalError as exc:
            last_error = exc
            continue
        return [
            JudgeScore(answer.question_id, answer.mode, metric, score, rationale)
            for metric, (score, rationale) in parsed.items()
        ]
    raise EvalError(f"judge failed after retry: {last_error}")


def judge_all(answers: list[ModeAnswer], judge_chat, prompt_template: str = JUDGE_PROMPT_V1):
    """Scores every non-errored answer; returns (scores, flagged ids)."""
    scores: list[JudgeScore] = []
    flagged: list[str] = []
    for answer in answers:
        if answer.error is not None:
            flagged.append(f"{answer.question_id}/{answer.mode}: {answer.error}")
            continue
        try:
            scores.extend(judge(answer.question, answer, judge_chat, prompt_template))
        except EvalError as exc:
            flagged.append(f"{answer.question_id}/{answer.mode}: {exc}")
    return scores, flagged


# --- aggregation -----------------------------------------------------------------

def _median(sorted_values: list[float]) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def _quartiles(sorted_values: list[float]) -> tuple[float, float]:
    """Median-of-halves, exclusive: an odd-length median is in neither half."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0]), float(sorted_values[0])
    half = n // 2
    return _median(sorted_values[:half]), _median(sorted_values[n - half:])


def aggregate(scores: list[JudgeScore]) -> tuple[list[ModeStats], list[str]]:
    groups: dict[tuple[str, str], list[int]] = {}
    for s in scores:
        groups.setdefault((s.metric, s.mode), []).append(s.score)
    stats = []
    warnings = []
    for metric in METRICS:
        for mode in MODES:
            values = sorted(groups.get((metric, mode), []))
            if not values:
                warnings.append(f"no scores for ({metric}, {mode}); group omitted")
                continue
            q1, q3 = _quartiles(values)
            stats.append(
                ModeStats(
                    metric=metric,
                    mode=mode,
                    median=_median(values),
                    q1=q1,
                    q3=q3,
                    fraction_ge4=sum(1 for v in values if v >= 4) / len(values),
                    n=len(values),
                )
            )
    return stats, warnings


# --- report ---------------------------------------------------------------------

def emit_report(
    stats: list[ModeStats],
    answers: list[ModeAnswer],
    out_dir: str | Path,
    flagged: list[str] | None = None,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = {
        "metrics": list(METRICS),
        "modes": list(MODES),
        "stats": [
            {
                "metric": s.metric,
                "mode": s.mode,
                "median": s.median,
                "q1": s.q1,
                "q3": s.q3,
                "fraction_ge4": s.fraction_ge4,
                "n": s.n,
            }
            for s in stats
        ],
        "flagged": list(flagged or []),
        "answers": [
            {
                "question_id": a.question_id,
                "mode": a.mode,
                "text": a.text,
                "citations": a.citations,
                "error": a.error,
            }
            for a in answers
        ],
    }
    report_path = out / "eval_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    by_metric: dict[str, dict[str, ModeStats]] = {}
    for s in stats:
        by_metric.setdefault(s.metric, {})[s.mode] = s
    charts = []
    for metric in METRICS:
        cells = by_metric.get(metric, {})
        modes = [m for m in MODES if m in cells]
        if not modes:
            continue
        model = ChartModel(
            kind="box",
            labels=tuple(modes),
            values=tuple(cells[m].median for m in modes),
            spans=tuple((cells[m].q1, cells[m].q3) for m in modes),
            y_title="score",
        )
        charts.append((metric, model))
    boxplot_path = out / "eval_boxplots.pdf"
    boxplot_path.write_bytes(render_charts_pdf("Answer quality by mode", charts).data)

    transcript_path = out / "transcripts.md"
    transcript_path.write_text(_transcripts_md(answers), encoding="utf-8")
    return {"report": report_path, "boxplots": boxplot_path, "transcripts": transcript_path}


def _transcripts_md(answers: list[ModeAnswer]) -> str:
    by_question: dict[str, list[ModeAnswer]] = {}
    order: list[str] = []
    for a in answers:
        if a.question_id not in by_question:
            order.append(a.question_id)
        by_question.setdefault(a.question_id, []).append(a)
    lines = ["# Answer transcripts", ""]
    for qid in order:
        group = by_question[qid]
        lines.append(f"## {qid}: {group[0].question}")
        lines.append("")
        for a in sorted(group, key=lambda x: MODES.index(x.mode)):
            if a.error is not None:
                lines.append(f"**{a.mode}**: _failed: {a.error}_")
            else:
                cites = f" (citations: {', '.join(a.citations)})" if a.citations else ""
                lines.append(f"**{a.mode}**: {a.text}{cites}")
            lines.append("")
    return "\n".join(lines)


def report_round_trips(path: str | Path) -> bool:
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n" == text


def question_set_size(path: str | Path) -> int:
    return len(load_questions(path))


_MODE_RE = re.compile(r"^[a-z]+(,[a-z]+)*$")


def parse_modes(spec: str) -> list[str]:
    if not _MODE_RE.match(spec):
        raise EvalError(f"bad --modes value: {spec!r}")
    modes = spec.split(",")
    for m in modes:
        if m not in MODES:
            raise EvalError(f"unknown mode {m!r}; choose from {', '.join(MODES)}")
    return modes
