"""Local statistics behind the dossier's analytical sections: pathway
over-representation (hypergeometric + BH) and product-limit survival."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from ..core import DossierError


class StatsError(DossierError):
    pass


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeom_sf(k: int, N: int, K: int, n: int) -> float:
    """P(X >= k) for X ~ Hypergeometric(N, K, n): the chance that at least k
    of the n drawn items fall inside the K marked ones.

    Summed in log space with a max shift, so tail terms far below the peak
    cannot underflow the accumulation.
    """
    if K > N or n > N:
        raise StatsError(f"K={K} and n={n} must not exceed N={N}")
    if not 0 <= k <= min(K, n):
        raise StatsError(f"k={k} outside [0, min(K={K}, n={n})]")
    if k == 0:
        return 1.0
    log_denom = _log_choose(N, n)
    log_terms = []
    for j in range(k, min(K, n) + 1):
        if n - j > N - K:
            continue
        log_terms.append(_log_choose(K, j) + _log_choose(N - K, n - j) - log_denom)
    if not log_terms:
        return 0.0
    peak = max(log_terms)
    total = sum(math.exp(t - peak) for t in log_terms)
    return min(1.0, math.exp(peak) * total)


def bh_adjust(pvals: list[float]) -> list[float]:
    """Benjamini-Hochberg step-up: q_(i) = min over j >= i of p_(j) * m / j,
    capped at 1, returned in input order."""
    if any(not 0.0 <= p <= 1.0 for p in pvals):
        raise StatsError("p-values must lie in [0, 1]")
    m = len(pvals)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: pvals[i])
    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        # ratio first: m/rank is exactly 1.0 at the top rank, so rounding can
        # never push the adjusted value below the raw p
        running = min(running, pvals[i] * (m / rank))
        adjusted[i] = running
    return adjusted


@dataclass(frozen=True)
class GeneSetLibrary:
    name: str
    terms: dict  # term -> frozenset of gene symbols

    def __post_init__(self):
        for term, genes in self.terms.items():
            if not genes:
                raise StatsError(f"gene set {term!r} is empty")

    @property
    def universe(self) -> frozenset:
        u: set[str] = set()
        for genes in self.terms.values():
            u |= genes
        return frozenset(u)


def parse_gmt(text: str, name: str) -> GeneSetLibrary:
    """GMT format: term<TAB>description<TAB>gene1<TAB>gene2..., one term per
    line.  Gene symbols are normalized to uppercase."""
    terms = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise StatsError(f"line {lineno}: GMT line needs term, description, genes")
        term = fields[0].strip()
        genes = frozenset(g.strip().upper() for g in fields[2:] if g.strip())
        if not genes:
            raise StatsError(f"line {lineno}: gene set {term!r} has no genes")
        terms[term] = genes
    return GeneSetLibrary(name=name, terms=terms)


def load_gmt(path: str | Path, name: str | None = None) -> GeneSetLibrary:
    path = Path(path)
    return parse_gmt(path.read_text(encoding="utf-8"), name or path.stem)


@dataclass(frozen=True)
class EnrichmentResult:
    term: str
    overlap: int
    term_size: int
    p_value: float
    adjusted_p: float


def enrich(
    genes: set[str],
    lib: GeneSetLibrary,
    max_terms: int = 10,
) -> tuple[list[EnrichmentResult], list[str]]:
    """Over-representation of the query genes in each library term.

    The universe is the union of the library's genes; the query is
    intersected with it before testing.  One result per term with nonzero
    overlap, BH-adjusted across all tested terms, ordered by p then term.
    """
    if not genes:
        raise StatsError("query gene set is empty")
    universe = lib.universe
    query = {g.upper() for g in genes} & universe
    if not query:
        return [], [f"none of the {len(genes)} query genes appear in library {lib.name!r}"]

    tested: list[tuple[str, int, int, float]] = []
    for term in sorted(lib.terms):
        term_genes = lib.terms[term]
        overlap = len(query & term_genes)
        if overlap == 0:
            continue
        p = hypergeom_sf(overlap, len(universe), len(term_genes), len(query))
        tested.append((term, overlap, len(term_genes), p))

    adjusted = bh_adjust([t[3] for t in tested])
    results = [
        EnrichmentResult(term, overlap, size, p, q)
        for (term, overlap, size, p), q in zip(tested, adjusted)
    ]
    results.sort(key=lambda r: (r.p_value, r.term))
    return results[:max_terms], []


@dataclass(frozen=True)
class SurvivalCurve:
    # ordered (time, survival probability, at-risk count); starts at t=0, S=1
    points: tuple[tuple[float, float, int], ...]

    def __post_init__(self):
        if not self.points or self.points[0][:2] != (0.0, 1.0):
            raise StatsError("survival curve must start at (0, 1.0)")
        probs = [p for _, p, _ in self.points]
        if any(b > a for a, b in zip(probs, probs[1:])):
            raise StatsError("survival must be non-increasing")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise StatsError("survival probabilities must lie in [0, 1]")

    def survival_at(self, t: float) -> float:
        prob = 1.0
        for time, p, _ in self.points:
            if time <= t:
                prob = p
            else:
                break
        return prob


def km_estimate(observations: list[tuple[float, bool]]) -> SurvivalCurve:
    """Product-limit estimator over (time, event) observations; censored
    observations (event=False) only shrink the risk set."""
    if not observations:
        raise StatsError("at least one observation required")
    if any(t <= 0 for t, _ in observations):
        raise StatsError("observation times must be positive")

    event_times = sorted({t for t, event in observations if event})
    points = [(0.0, 1.0, len(observations))]
    survival = 1.0
    for t in event_times:
        at_risk = sum(1 for time, _ in observations if time >= t)
        deaths = sum(1 for time, event in observations if event and time == t)
        survival *= 1.0 - deaths / at_risk
        points.append((t, survival, at_risk))
    return SurvivalCurve(points=tuple(points))
