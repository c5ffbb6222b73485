"""Hybrid lexical + dense search over the graph's relation vocabulary.

Predicted relation names coming out of an LLM often drop the domain prefix
("actor.film" for "film.actor.film"); token-level BM25 plus embedding
similarity is what absorbs that gap. Scores from both legs are min-max
normalized and fused with equal weight by default.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider, _TOKEN_RE
from .models import RelationId, ScoredRelation

BM25_K1 = 0.9
BM25_B = 0.4


def tokenize_relation(relation: RelationId) -> list[str]:
    """Lowercase tokens split on dots, underscores, and other separators."""
    return _TOKEN_RE.findall(relation.lower())


@dataclass
class RelationCorpus:
    """Relation vocabulary with precomputed BM25 statistics and embeddings."""

    relations: list[RelationId]
    tokens: list[list[str]]
    doc_freq: Counter
    embeddings: np.ndarray
    provider: EmbeddingProvider = field(repr=False)
    avg_doc_len: float = 0.0

    @classmethod
    def build(
        cls, relations: list[RelationId], provider: EmbeddingProvider
    ) -> "RelationCorpus":
        unique: list[RelationId] = []
        seen: set[str] = set()
        for rel in relations:
            if rel not in seen:
                seen.add(rel)
                unique.append(rel)
        if not unique:
            raise ValueError("relation corpus must be non-empty")
        tokens = [tokenize_relation(r) for r in unique]
        doc_freq: Counter = Counter()
        for toks in tokens:
            doc_freq.update(set(toks))
        avg_len = sum(len(t) for t in tokens) / len(tokens)
        embeddings = provider.embed(unique)
        return cls(
            relations=unique,
            tokens=tokens,
            doc_freq=doc_freq,
            embeddings=embeddings,
            provider=provider,
            avg_doc_len=avg_len,
        )

    def __len__(self) -> int:
        return len(self.relations)


def bm25_scores(
    corpus: RelationCorpus, query_tokens: list[str]
) -> list[tuple[RelationId, float]]:
    """Okapi BM25 (k1=0.9, b=0.4) of the query against every relation.

    IDF uses the positive Lucene form ln(1 + (N - df + 0.5) / (df + 0.5));
    relations sharing no token with the query score exactly 0.
    """
    if not len(corpus):
        raise ValueError("relation corpus must be non-empty")
    n_docs = len(corpus)
    scores: list[tuple[RelationId, float]] = []
    for rel, toks in zip(corpus.relations, corpus.tokens):
        tf = Counter(toks)
        norm = BM25_K1 * (1.0 - BM25_B + BM25_B * len(toks) / (corpus.avg_doc_len or 1.0))
        score = 0.0
        for term in query_tokens:
            freq = tf.get(term, 0)
            if not freq:
                continue
            df = corpus.doc_freq[term]
            idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
            score += idf * freq * (BM25_K1 + 1.0) / (freq + norm)
        scores.append((rel, score))
    return scores


def dense_scores(
    corpus: RelationCorpus,
    query_text: str,
    provider: EmbeddingProvider | None = None,
) -> list[tuple[RelationId, float]]:
    """Cosine similarity of the embedded query against every relation."""
    provider = provider or corpus.provider
    if provider.fingerprint != corpus.provider.fingerprint:
        raise ValueError(
            f"provider mismatch: corpus built with {corpus.provider.fingerprint}, "
            f"queried with {provider.fingerprint}"
        )
    query_vec = provider.embed_one(query_text)
    sims = corpus.embeddings @ query_vec  # rows are L2-normalized
    return list(zip(corpus.relations, (float(s) for s in sims)))


def minmax_normalize(values: list[float]) -> list[float]:
    """Scale to [0,1]; an all-equal list normalizes to all zeros."""
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def hybrid_top_n(
    corpus: RelationCorpus,
    query: str,
    n: int = 5,
    lexical_weight: float = 0.5,
) -> list[ScoredRelation]:
    """Top-n relations by fused (min-max normalized) BM25 + cosine score.

    Ties break lexicographically by relation id.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not len(corpus):
        raise ValueError("relation corpus must be non-empty")
    lexical = minmax_normalize([s for _, s in bm25_scores(corpus, tokenize_relation(query))])
    dense = minmax_normalize([s for _, s in dense_scores(corpus, query)])
    fused = [
        (rel, lexical_weight * lex + (1.0 - lexical_weight) * den)
        for rel, lex, den in zip(corpus.relations, lexical, dense)
    ]
    fused.sort(key=lambda pair: (-pair[1], pair[0]))
    return [ScoredRelation(rel, score) for rel, score in fused[: min(n, len(fused))]]
