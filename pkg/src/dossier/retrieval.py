"""Grounded retrieval engine.

Per query: build a temporary collection from PubMed/PMC documents (abstracts
embedded whole, full texts semantically chunked), run dense + sparse legs,
fuse with reciprocal rank fusion, rerank, and answer with inline PMID
citations validated against the context that was actually in the prompt.
Collections are dropped when the job finishes; the store never accumulates.
"""

from __future__ import annotations

import json
import math
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .core import Clock, DossierError, GroundedAnswer, validate_answer
from .modelgw import ChatRequest, EmbeddingVector, cosine

DEFAULT_CHUNK_BUFFER = 1
DEFAULT_CHUNK_PERCENTILE = 95.0
DEFAULT_BM25_K1 = 1.5
DEFAULT_BM25_B = 0.75
DEFAULT_RRF_K = 60
DEFAULT_K_DENSE = 20
DEFAULT_K_SPARSE = 20
DEFAULT_TOP_N = 5
DEFAULT_RERANK_TOP_M = 20
FIXED_CHUNK_CHARS = 800

ANSWER_MODES = ("none", "naive", "advanced")


class RetrievalError(DossierError):
    pass


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    kind: str  # "abstract" | "fulltext"
    text: str
    title: str = ""

    def __post_init__(self):
        if not self.doc_id:
            raise RetrievalError("document id must be non-empty")
        if self.kind not in ("abstract", "fulltext"):
            raise RetrievalError(f"unknown document kind: {self.kind!r}")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    vector: EmbeddingVector
    ordinal: int


@dataclass(frozen=True)
class SparseIndex:
    df: dict
    tfs: tuple[dict, ...]  # one term->count map per chunk, chunk order
    lengths: tuple[int, ...]
    avgdl: float


@dataclass(frozen=True)
class Collection:
    collection_id: str
    chunks: tuple[Chunk, ...]
    sparse_index: SparseIndex
    created_at: str


@dataclass(frozen=True)
class RetrievalHit:
    chunk: Chunk
    dense_rank: int | None
    sparse_rank: int | None
    fused_score: float
    rerank_score: float | None = None


# --- sentence splitting ----------------------------------------------------

_BOUNDARY = re.compile(r"([.!?]) (?=[A-Z0-9])")


def split_sentences(text: str) -> list[str]:
    """Whitespace-normalize, then split after . ! ? followed by a space and
    an uppercase letter or digit.  A period closing a single uppercase
    letter ("E. coli") is treated as an abbreviation, not a boundary."""
    norm = re.sub(r"\s+", " ", text.strip())
    if not norm:
        return []
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(norm):
        end = m.start(1)
        if norm[end] == ".":
            token_start = norm.rfind(" ", 0, end) + 1
            token = norm[token_start:end]
            if len(token) == 1 and token.isupper():
                continue
        sentences.append(norm[start : end + 1])
        start = end + 2
    if start < len(norm):
        sentences.append(norm[start:])
    return sentences


def percentile(values: list[float], p: float) -> float:
    """Linear-interpolation percentile over the sorted values."""
    if not values:
        raise RetrievalError("percentile of empty list")
    s = sorted(values)
    if len(s) == 1:
        return s[0]
    rank = p / 100.0 * (len(s) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    frac = rank - lo
    return s[lo] * (1 - frac) + s[hi] * frac


# --- chunking ----------------------------------------------------------------

def semantic_chunk_texts(
    sentences: list[str],
    embedder,
    buffer: int = DEFAULT_CHUNK_BUFFER,
    breakpoint_percentile: float = DEFAULT_CHUNK_PERCENTILE,
) -> list[str]:
    """Group consecutive sentences, breaking where the cosine distance
    between buffered-window embeddings exceeds the given percentile of all
    consecutive distances in the document."""
    if not 0 < breakpoint_percentile < 100:
        raise RetrievalError("breakpoint percentile must be in (0, 100)")
    n = len(sentences)
    if n <= 1:
        return [" ".join(sentences)] if sentences else []
    windows = [
        " ".join(sentences[max(0, i - buffer) : i + buffer + 1]) for i in range(n)
    ]
    vectors = embedder.embed(windows)
    distances = [
        1.0 - cosine(vectors[i].values, vectors[i + 1].values) for i in range(n - 1)
    ]
    threshold = percentile(distances, breakpoint_percentile)
    groups: list[list[str]] = [[sentences[0]]]
    for i in range(1, n):
        if distances[i - 1] > threshold:
            groups.append([])
        groups[-1].append(sentences[i])
    return [" ".join(g) for g in groups]


def fixed_chunk_texts(sentences: list[str], max_chars: int = FIXED_CHUNK_CHARS) -> list[str]:
    """Pack whole sentences into chunks of at most ``max_chars`` (a sentence
    longer than the limit still becomes its own chunk)."""
    chunks: list[str] = []
    current = ""
    for sentence in sentences:
        candidate = f"{current} {sentence}".strip()
        if current and len(candidate) > max_chars:
            chunks.append(current)
            current = sentence
        else:
            current = candidate
    if current:
        chunks.append(current)
    return chunks


def semantic_chunk(
    doc: SourceDocument,
    embedder,
    buffer: int = DEFAULT_CHUNK_BUFFER,
    breakpoint_percentile: float = DEFAULT_CHUNK_PERCENTILE,
) -> list[Chunk]:
    """Chunk one document and embed the resulting chunk texts."""
    sentences = split_sentences(doc.text)
    if not sentences:
        raise RetrievalError(f"document {doc.doc_id} has no sentences")
    texts = semantic_chunk_texts(sentences, embedder, buffer, breakpoint_percentile)
    return _build_chunks(doc, texts, embedder)


def _build_chunks(doc: SourceDocument, texts: list[str], embedder) -> list[Chunk]:
    vectors = embedder.embed(texts)
    return [
        Chunk(
            chunk_id=f"{doc.doc_id}:{ordinal:04d}",
            doc_id=doc.doc_id,
            text=text,
            vector=vector,
            ordinal=ordinal,
        )
        for ordinal, (text, vector) in enumerate(zip(texts, vectors))
    ]


# --- sparse index and BM25 ---------------------------------------------------

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def build_sparse_index(chunks: list[Chunk]) -> SparseIndex:
    tfs = []
    df: dict[str, int] = {}
    lengths = []
    for chunk in chunks:
        tokens = tokenize(chunk.text)
        tf: dict[str, int] = {}
        for t in tokens:
            tf[t] = tf.get(t, 0) + 1
        for t in tf:
            df[t] = df.get(t, 0) + 1
        tfs.append(tf)
        lengths.append(len(tokens))
    avgdl = sum(lengths) / len(lengths) if lengths else 0.0
    return SparseIndex(df=df, tfs=tuple(tfs), lengths=tuple(lengths), avgdl=avgdl)


def bm25_rank(
    query: str,
    collection: Collection,
    k1: float = DEFAULT_BM25_K1,
    b: float = DEFAULT_BM25_B,
) -> list[tuple[Chunk, float]]:
    """Okapi BM25 over the collection's sparse index.  Chunks matching no
    query term are omitted; ties break by ascending chunk id."""
    index = collection.sparse_index
    n_docs = len(collection.chunks)
    terms = tokenize(query)
    scored = []
    for chunk, tf, length in zip(collection.chunks, index.tfs, index.lengths):
        score = 0.0
        matched = False
        for t in terms:
            f = tf.get(t, 0)
            if f == 0:
                continue
            matched = True
            df = index.df.get(t, 0)
            idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
            denom = f + k1 * (1.0 - b + b * length / index.avgdl)
            score += idf * f * (k1 + 1.0) / denom
        if matched:
            scored.append((chunk, score))
    scored.sort(key=lambda cs: (-cs[1], cs[0].chunk_id))
    return scored


def rrf_fuse(rankings: list[list[str]], k: int = DEFAULT_RRF_K) -> list[tuple[str, float]]:
    """Reciprocal rank fusion: score(d) = sum over legs of 1/(k + rank),
    ranks starting at 1.  Ties break by ascending id."""
    if k < 1:
        raise RetrievalError("rrf k must be >= 1")
    scores: dict[str, float] = {}
    for ranking in rankings:
        for rank, doc_id in enumerate(ranking, start=1):
            scores[doc_id] = scores.get(doc_id, 0.0) + 1.0 / (k + rank)
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


# --- collection lifecycle -----------------------------------------------------

class CollectionStore:
    """In-process directory of temporary collections.

    The directory itself is the only synchronized structure; collections are
    immutable once added.  ``spill_dir`` optionally mirrors chunk text to
    disk (private, unstable format).
    """

    def __init__(self, spill_dir: str | Path | None = None):
        self._lock = threading.RLock()
        self._collections: dict[str, Collection] = {}
        self._counter = 0
        self._spill_dir = Path(spill_dir) if spill_dir else None

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"col-{self._counter:04d}"

    def add(self, collection: Collection) -> None:
        with self._lock:
            if collection.collection_id in self._collections:
                raise RetrievalError(f"collection {collection.collection_id} already exists")
            self._collections[collection.collection_id] = collection
        if self._spill_dir:
            self._spill_dir.mkdir(parents=True, exist_ok=True)
            payload = [{"chunk_id": c.chunk_id, "text": c.text} for c in collection.chunks]
            path = self._spill_dir / f"{collection.collection_id}.json"
            path.write_text(json.dumps(payload), encoding="utf-8")

    def get(self, collection_id: str) -> Collection:
        with self._lock:
            try:
                return self._collections[collection_id]
            except KeyError:
                raise RetrievalError(f"no such collection: {collection_id}") from None

    def drop(self, collection_id: str) -> None:
        with self._lock:
            self._collections.pop(collection_id, None)
        if self._spill_dir:
            path = self._spill_dir / f"{collection_id}.json"
            if path.exists():
                path.unlink()

    def live_collections(self) -> list[str]:
        with self._lock:
            return sorted(self._collections)

    def total_chunks(self) -> int:
        with self._lock:
            return sum(len(c.chunks) for c in self._collections.values())


def create_collection(
    docs: list[SourceDocument],
    embedder,
    store: CollectionStore,
    clock: Clock | None = None,
    chunking: str = "semantic",
    buffer: int = DEFAULT_CHUNK_BUFFER,
    breakpoint_percentile: float = DEFAULT_CHUNK_PERCENTILE,
) -> Collection:
    """Embed documents into a new temporary collection.

    Abstracts are short and embed whole; full texts are chunked first.  On
    any embedding failure nothing is registered with the store.
    """
    if not docs:
        raise RetrievalError("no documents to ground on")
    seen_ids = set()
    for doc in docs:
        if doc.doc_id in seen_ids:
            raise RetrievalError(f"duplicate document id: {doc.doc_id}")
        seen_ids.add(doc.doc_id)
    if chunking not in ("semantic", "fixed"):
        raise RetrievalError(f"unknown chunking mode: {chunking!r}")

    clock = clock or Clock()
    chunks: list[Chunk] = []
    for doc in docs:
        sentences = split_sentences(doc.text)
        if not sentences:
            raise RetrievalError(f"document {doc.doc_id} has no sentences")
        if doc.kind == "abstract":
            texts = [" ".join(sentences)]
        elif chunking == "semantic":
            texts = semantic_chunk_texts(sentences, embedder, buffer, breakpoint_percentile)
        else:
            texts = fixed_chunk_texts(sentences)
        chunks.extend(_build_chunks(doc, texts, embedder))

    collection = Collection(
        collection_id=store.next_id(),
        chunks=tuple(chunks),
        sparse_index=build_sparse_index(chunks),
        created_at=clock.now().isoformat(),
    )
    store.add(collection)
    return collection


def drop_collection(store: CollectionStore, collection: Collection | str) -> None:
    collection_id = collection if isinstance(collection, str) else collection.collection_id
    store.drop(collection_id)


# --- retrieval ---------------------------------------------------------------

def retrieve(
    query: str,
    collection: Collection,
    embedder,
    reranker=None,
    k_dense: int = DEFAULT_K_DENSE,
    k_sparse: int = DEFAULT_K_SPARSE,
    top_n: int = DEFAULT_TOP_N,
    rerank_top_m: int = DEFAULT_RERANK_TOP_M,
    rerank_required: bool = True,
) -> list[RetrievalHit]:
    """Hybrid retrieval: dense and sparse legs fused with RRF, then the top
    fused candidates reranked; the final list is top_n by rerank score."""
    if not collection.chunks:
        raise RetrievalError("collection is empty")
    by_id = {c.chunk_id: c for c in collection.chunks}

    query_vec = embedder.embed([query])[0]
    dense_scored = sorted(
        ((c, cosine(query_vec.values, c.vector.values)) for c in collection.chunks),
        key=lambda cs: (-cs[1], cs[0].chunk_id),
    )
    dense_ids = [c.chunk_id for c, _ in dense_scored[:k_dense]]
    sparse_ids = [c.chunk_id for c, _ in bm25_rank(query, collection)[:k_sparse]]

    fused = rrf_fuse([dense_ids, sparse_ids])
    candidates = fused[:rerank_top_m]
    dense_rank = {cid: i + 1 for i, cid in enumerate(dense_ids)}
    sparse_rank = {cid: i + 1 for i, cid in enumerate(sparse_ids)}

    order: list[tuple[str, float, float | None]]
    if reranker is None:
        order = [(cid, fscore, None) for cid, fscore in candidates]
    else:
        passages = [by_id[cid].text for cid, _ in candidates]
        try:
            scores = reranker.rerank(query, passages)
        except DossierError:
            if rerank_required:
                raise
            order = [(cid, fscore, None) for cid, fscore in candidates]
        else:
            order = [
                (candidates[s.passage_index][0], candidates[s.passage_index][1], s.score)
                for s in scores
            ]

    hits = []
    for cid, fscore, rscore in order[:top_n]:
        hits.append(
            RetrievalHit(
                chunk=by_id[cid],
                dense_rank=dense_rank.get(cid),
                sparse_rank=sparse_rank.get(cid),
                fused_score=fscore,
                rerank_score=rscore,
            )
        )
    return hits


# --- grounded generation -------------------------------------------------------

ANSWER_PROMPT = """TASK: answer
QUESTION: {question}
{gene_line}You are drafting one paragraph for a drug-discovery dossier.
{context_instruction}
{context}
Answer the question in flowing prose."""

CONTEXT_INSTRUCTION = (
    "Use only the numbered context passages below and cite each supporting "
    "passage inline with its identifier in the form [PMID:<id>]. Do not cite "
    "anything that is not listed."
)

NO_CONTEXT_INSTRUCTION = "No retrieved context is available; answer from general knowledge."


def grounded_answer(
    query: str,
    hits: list[RetrievalHit],
    mode: str,
    chat_client,
    clock: Clock | None = None,
    gene: str | None = None,
    temperature: float = 0.1,
    max_tokens: int = 1024,
) -> GroundedAnswer:
    """Ask the generation model with the hit texts as tagged context, then
    validate that every inline citation was actually in that context."""
    if mode not in ANSWER_MODES:
        raise RetrievalError(f"unknown answer mode: {mode!r}")
    if mode == "none":
        hits = []
    elif not hits:
        raise RetrievalError("insufficient context: no retrieval hits")

    context_ids = {h.chunk.doc_id for h in hits}
    if hits:
        context_lines = "\n".join(f"[PMID:{h.chunk.doc_id}] {h.chunk.text}" for h in hits)
        instruction = CONTEXT_INSTRUCTION
    else:
        context_lines = ""
        instruction = NO_CONTEXT_INSTRUCTION
    prompt = ANSWER_PROMPT.format(
        question=query,
        gene_line=f"GENE: {gene}\n" if gene else "",
        context_instruction=instruction,
        context=context_lines,
    )
    response = chat_client.chat(
        ChatRequest(
            messages=(("user", prompt),),
            temperature=temperature,
            max_tokens=max_tokens,
        )
    )
    return validate_answer(response.text, context_ids, clock=clock)


# --- corpus fixture format ------------------------------------------------------

def load_corpus_jsonl(path: str | Path) -> list[SourceDocument]:
    """Corpus fixture format: JSON lines, one SourceDocument per line."""
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        docs.append(
            SourceDocument(
                doc_id=str(d["doc_id"]),
                kind=d["kind"],
                text=d["text"],
                title=d.get("title", ""),
            )
        )
    return docs
