"""Model gateway: chat, embedding, and rerank behind small wire contracts.

No model runs in-process.  Live clients speak the widely deployed HTTP JSON
shapes (chat-completions / embeddings / rerank); the mocks are pure
functions of their inputs so the whole pipeline is offline-testable and
bitwise repeatable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from dataclasses import dataclass, field

import requests

from .core import DossierError

CHAT_ROLES = ("system", "user", "assistant")

MOCK_EMBED_DIM = 256


class ModelGatewayError(DossierError):
    """Transport failure or malformed model response."""


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.1
    max_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ModelGatewayError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ModelGatewayError("max_tokens must be positive")
        roles = [r for r, _ in self.messages]
        if any(r not in CHAT_ROLES for r in roles):
            raise ModelGatewayError(f"roles must be one of {CHAT_ROLES}")
        if "user" not in roles:
            raise ModelGatewayError("at least one user message required")

    def prompt_text(self) -> str:
        return "\n".join(content for _, content in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    def __post_init__(self):
        if any(not math.isfinite(v) for v in self.values):
            raise ModelGatewayError("embedding values must be finite")


@dataclass(frozen=True)
class RerankScore:
    passage_index: int
    score: float


def cosine(u, v) -> float:
    """Cosine similarity of two equal-dimension non-zero vectors."""
    if len(u) != len(v):
        raise ModelGatewayError("cosine: dimension mismatch")
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        raise ModelGatewayError("cosine: zero vector")
    return dot / (nu * nv)


# --- retry ----------------------------------------------------------------

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.25


def _with_retry(call, sleep=time.sleep):
    """3 attempts, exponential backoff from 250 ms, only transport/5xx."""
    last = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            return call()
        except (requests.ConnectionError, requests.Timeout) as exc:
            last = exc
        except requests.HTTPError as exc:
            status = exc.response.status_code if exc.response is not None else 0
            if status < 500:
                raise ModelGatewayError(f"endpoint rejected request: {exc}") from exc
            last = exc
        if attempt < RETRY_ATTEMPTS - 1:
            sleep(RETRY_BASE_DELAY * (2**attempt))
    raise ModelGatewayError(f"transport failed after {RETRY_ATTEMPTS} attempts: {last}")


def _resolve_key(api_key_env: str | None) -> dict[str, str]:
    if not api_key_env:
        return {}
    value = os.environ.get(api_key_env, "")
    return {"Authorization": f"Bearer {value}"} if value else {}


# --- live clients ----------------------------------------------------------

@dataclass
class HttpChatClient:
    endpoint: str
    model: str
    timeout_ms: int = 60000
    api_key_env: str | None = None
    session: requests.Session = field(default_factory=requests.Session)
    sleep: object = time.sleep

    def chat(self, req: ChatRequest) -> ChatResponse:
        body = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }

        def call():
            resp = self.session.post(
                self.endpoint,
                json=body,
                headers=_resolve_key(self.api_key_env),
                timeout=self.timeout_ms / 1000,
            )
            resp.raise_for_status()
            return resp.json()

        data = _with_retry(call, self.sleep)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ModelGatewayError(f"malformed chat response: {exc}") from exc
        if not text:
            raise ModelGatewayError("empty completion")
        usage = data.get("usage", {})
        return ChatResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


@dataclass
class HttpEmbeddingClient:
    endpoint: str
    model: str
    dim: int
    timeout_ms: int = 60000
    api_key_env: str | None = None
    session: requests.Session = field(default_factory=requests.Session)
    sleep: object = time.sleep

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        _check_embed_inputs(texts)

        def call():
            resp = self.session.post(
                self.endpoint,
                json={"model": self.model, "input": list(texts)},
                headers=_resolve_key(self.api_key_env),
                timeout=self.timeout_ms / 1000,
            )
            resp.raise_for_status()
            return resp.json()

        data = _with_retry(call, self.sleep)
        rows = sorted(data.get("data", []), key=lambda r: r.get("index", 0))
        if len(rows) != len(texts):
            raise ModelGatewayError(
                f"embedding count mismatch: sent {len(texts)}, got {len(rows)}"
            )
        vectors = [EmbeddingVector(tuple(r["embedding"]), self.model) for r in rows]
        dims = {len(v.values) for v in vectors}
        if dims and dims != {self.dim}:
            raise ModelGatewayError(
                f"embedding dimension mismatch: configured {self.dim}, got {sorted(dims)}"
            )
        return vectors


@dataclass
class HttpRerankClient:
    endpoint: str
    model: str
    timeout_ms: int = 60000
    api_key_env: str | None = None
    session: requests.Session = field(default_factory=requests.Session)
    sleep: object = time.sleep

    def rerank(self, query: str, passages: list[str]) -> list[RerankScore]:
        if not passages:
            raise ModelGatewayError("rerank requires at least one passage")

        def call():
            resp = self.session.post(
                self.endpoint,
                json={"model": self.model, "query": query, "documents": list(passages)},
                headers=_resolve_key(self.api_key_env),
                timeout=self.timeout_ms / 1000,
            )
            resp.raise_for_status()
            return resp.json()

        data = _with_retry(call, self.sleep)
        scores = [
            RerankScore(int(r["index"]), float(r["relevance_score"]))
            for r in data.get("results", [])
        ]
        if len(scores) != len(passages):
            raise ModelGatewayError("reranker returned wrong passage count")
        return _sort_scores(scores)


def _check_embed_inputs(texts):
    if not texts:
        raise ModelGatewayError("embed requires a non-empty batch")
    if any(not t for t in texts):
        raise ModelGatewayError("embed inputs must be non-empty strings")


def _sort_scores(scores: list[RerankScore]) -> list[RerankScore]:
    # descending score, ties broken by ascending passage index
    return sorted(scores, key=lambda s: (-s.score, s.passage_index))


# --- deterministic mocks ---------------------------------------------------

def _token_index(token: str, dim: int = MOCK_EMBED_DIM) -> int:
    """Documented hash rule of the mock embedder: first 4 bytes of
    SHA-256(token), big-endian, modulo the dimension."""
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % dim


class MockEmbeddingClient:
    """Whitespace-tokenize, hash each token to one of ``dim`` axes,
    accumulate counts, L2-normalize.  Pure function of the text."""

    def __init__(self, dim: int = MOCK_EMBED_DIM):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        _check_embed_inputs(texts)
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for token in text.split():
                vec[_token_index(token, self.dim)] += 1.0
            norm = math.sqrt(sum(v * v for v in vec))
            if norm > 0:
                vec = [v / norm for v in vec]
            else:
                vec[0] = 1.0
            out.append(EmbeddingVector(tuple(vec), "mock-embed"))
        return out


class MockRerankClient:
    """Score = count of distinct lowercased query tokens present in the
    passage.  Ties keep input order."""

    def rerank(self, query: str, passages: list[str]) -> list[RerankScore]:
        if not passages:
            raise ModelGatewayError("rerank requires at least one passage")
        q_tokens = set(re.findall(r"[a-z0-9]+", query.lower()))
        scores = []
        for i, passage in enumerate(passages):
            p_tokens = set(re.findall(r"[a-z0-9]+", passage.lower()))
            scores.append(RerankScore(i, float(len(q_tokens & p_tokens))))
        return _sort_scores(scores)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedChatClient:
    """Replays a fixed list of completions in order; for loop transcripts."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self.requests: list[ChatRequest] = []

    def chat(self, req: ChatRequest) -> ChatResponse:
        self.requests.append(req)
        if not self._responses:
            raise ModelGatewayError("scripted chat exhausted")
        text = self._responses.pop(0)
        return ChatResponse(
            text=text,
            prompt_tokens=len(req.prompt_text().split()),
            completion_tokens=len(text.split()),
        )


class MockChatClient:
    """Deterministic offline stand-in for the generation model.

    Resolution order: a canned completion keyed by the SHA-256 of the full
    prompt text, then rule-based synthesis keyed on the ``TASK:`` marker the
    prompt templates carry.  Identical prompts always produce identical
    output.
    """

    def __init__(self, canned: dict[str, str] | None = None):
        self.canned = dict(canned or {})
        self.calls = 0

    def chat(self, req: ChatRequest) -> ChatResponse:
        self.calls += 1
        prompt = req.prompt_text()
        text = self.canned.get(prompt_hash(prompt))
        if text is None:
            text = self._synthesize(prompt)
        if not text:
            raise ModelGatewayError("empty completion")
        return ChatResponse(
            text=text,
            prompt_tokens=len(prompt.split()),
            completion_tokens=len(text.split()),
        )

    # Rule-based synthesis.  Prompts are built by dossier.agent templates and
    # always begin with a TASK marker line.
    def _synthesize(self, prompt: str) -> str:
        task = ""
        m = re.search(r"^TASK:\s*(\w+)", prompt, re.MULTILINE)
        if m:
            task = m.group(1)
        handler = getattr(self, f"_task_{task}", None)
        if handler is None:
            return "Acknowledged."
        return handler(prompt)

    @staticmethod
    def _field(prompt: str, name: str) -> str:
        m = re.search(rf"^{name}:\s*(.+)$", prompt, re.MULTILINE)
        return m.group(1).strip() if m else ""

    def _task_answer(self, prompt: str) -> str:
        gene = self._field(prompt, "GENE")
        question = self._field(prompt, "QUESTION")
        pmids = re.findall(r"\[PMID:(\d+)\]", prompt)
        seen: list[str] = []
        for p in pmids:
            if p not in seen:
                seen.append(p)
        subject = gene or (question.split()[0] if question else "the topic")
        if not seen:
            return (
                f"{subject} is discussed here in general terms; no retrieved "
                "literature was provided for this answer."
            )
        sentences = [
            f"Retrieved literature describes the role of {subject} in this "
            f"context [PMID:{seen[0]}]."
        ]
        if len(seen) > 1:
            sentences.append(
                f"Further evidence supports these observations [PMID:{seen[1]}]."
            )
        return " ".join(sentences)

    def _task_summarize(self, prompt: str) -> str:
        m = re.search(r"^SOURCE TEXT:\n(.*)", prompt, re.DOTALL | re.MULTILINE)
        body = m.group(1).strip() if m else prompt
        parts = re.split(r"(?<=[.!?])\s+", body)
        return " ".join(parts[:2]).strip() or body[:200]

    def _task_conclusion(self, prompt: str) -> str:
        gene = self._field(prompt, "GENE") or "the target"
        disease = self._field(prompt, "DISEASE") or "the disease"
        return (
            f"The evidence assembled in this dossier positions {gene} as a "
            f"well-characterized candidate in {disease}. Its interaction "
            f"partners, mutation profile, and pathway context support further "
            f"evaluation, balanced against the delivery challenges noted in "
            f"the SWOT analysis."
        )

    def _task_agent(self, prompt: str) -> str:
        gene = self._field(prompt, "GENE") or "the target"
        disease = self._field(prompt, "DISEASE") or "the disease"
        observations = prompt.count("OBSERVATION:")
        if "swot" in prompt.lower() and observations == 0:
            call = {
                "tool": "literature_answer",
                "args": {"question": f"{gene} as a therapeutic target in {disease}"},
            }
            return json.dumps(call)
        if "swot" in prompt.lower():
            grid = {
                "strengths": [
                    f"{gene} is a clinically validated driver of {disease}",
                    "Strong genetic and functional evidence from multiple databases",
                ],
                "weaknesses": [
                    f"Direct inhibition of {gene} has historically been difficult",
                    "Resistance mechanisms emerge under targeted therapy",
                ],
                "opportunities": [
                    "New covalent and allele-selective chemistries are maturing",
                    f"Combination regimens could broaden the {disease} population",
                ],
                "threats": [
                    "Competitive programs are already in the clinic",
                    "Tumor heterogeneity may limit single-agent response",
                ],
            }
            return json.dumps({"final": json.dumps(grid)})
        return json.dumps({"final": "Done."})

    def _task_judge(self, prompt: str) -> str:
        m = re.search(r"^ANSWER:\n(.*?)\n(?:RUBRIC|END)", prompt, re.DOTALL | re.MULTILINE)
        answer = m.group(1) if m else ""
        citations = len(re.findall(r"\[PMID:\d+\]", answer))
        words = len(answer.split())
        # monotone in citation count, mildly in length, clamped to 1..5
        base = 2 + min(citations, 2) + (1 if words >= 40 else 0)
        score = max(1, min(5, base))
        metrics = ["faithfulness", "relevance", "quality", "completeness", "correctness"]
        return json.dumps(
            {m: {"score": score, "rationale": f"heuristic: {citations} citations, {words} words"} for m in metrics}
        )
