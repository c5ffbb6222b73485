"""Text embedding providers plus the exact-search helpers built on them.

Two providers share one interface: a remote HTTP service fronting a real
sentence encoder, and a seeded feature-hashing embedder so every test and
offline run is deterministic. All vectors are L2-normalized at embed time,
which reduces cosine similarity to a dot product downstream.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np
import requests

_TOKEN_RE = re.compile(r"[0-9a-z]+")


class ProviderError(Exception):
    """Embedding provider failed after retries."""


class EmbeddingProvider:
    """Interface: embed() is a pure function of (provider config, text)."""

    dimension: int
    fingerprint: str

    def embed(self, texts: list[str]) -> np.ndarray:
        raise NotImplementedError

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed([text])[0]


def _l2_normalize(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


class HashingEmbedder(EmbeddingProvider):
    """Deterministic fallback embedder: hashed word and character features.

    Tokens and their character trigrams are hashed into signed buckets, so
    related surface forms ("performance.actor" / "performance.film") land
    near each other while unrelated text does not.
    """

    def __init__(self, dimension: int = 64, seed: int = 0):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension
        self.seed = seed
        self.fingerprint = f"hashing-v1:dim={dimension}:seed={seed}"
        self._key = f"kgreflect:{seed}".encode()

    def _bucket(self, feature: str) -> tuple[int, float]:
        digest = hashlib.blake2b(feature.encode(), key=self._key, digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        sign = 1.0 if value & 1 else -1.0
        return (value >> 1) % self.dimension, sign

    def _features(self, text: str) -> list[str]:
        tokens = _TOKEN_RE.findall(text.lower())
        feats = [f"w:{t}" for t in tokens]
        for tok in tokens:
            padded = f"^{tok}$"
            feats.extend(f"c:{padded[i:i + 3]}" for i in range(len(padded) - 2))
        return feats

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be non-empty")
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            for feature in self._features(text):
                idx, sign = self._bucket(feature)
                out[row, idx] += sign
        return _l2_normalize(out)


class RemoteEmbedder(EmbeddingProvider):
    """Client for an embedding service: POST {texts:[...]} -> {vectors:[[..]]}."""

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        name: str | None = None,
        max_retries: int = 2,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.dimension = dimension
        self.max_retries = max_retries
        self.timeout = timeout
        self.fingerprint = f"remote:{name or endpoint}:dim={dimension}"
        self._session = session or requests.Session()

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be non-empty")
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = self._session.post(
                    self.endpoint, json={"texts": texts}, timeout=self.timeout
                )
                if resp.status_code != 200:
                    raise ProviderError(f"embedding service HTTP {resp.status_code}")
                vectors = np.asarray(resp.json()["vectors"], dtype=np.float64)
                if vectors.shape != (len(texts), self.dimension):
                    raise ProviderError(
                        f"expected shape {(len(texts), self.dimension)}, "
                        f"got {vectors.shape}"
                    )
                return _l2_normalize(vectors)
            except (requests.RequestException, ValueError, KeyError, ProviderError) as exc:
                last_error = exc
        raise ProviderError(f"embedding failed after retries: {last_error}")


def cosine_knn(
    query: np.ndarray, corpus: np.ndarray, k: int
) -> list[tuple[int, float]]:
    """Exact top-k by cosine similarity; ties broken by ascending index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    corpus = np.atleast_2d(np.asarray(corpus, dtype=np.float64))
    query = np.asarray(query, dtype=np.float64)
    if corpus.shape[1] != query.shape[0]:
        raise ValueError(
            f"dimension mismatch: query {query.shape[0]}, corpus {corpus.shape[1]}"
        )
    qnorm = np.linalg.norm(query) or 1.0
    norms = np.linalg.norm(corpus, axis=1)
    norms[norms == 0.0] = 1.0
    scores = corpus @ query / (norms * qnorm)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(i, float(scores[i])) for i in order[: min(k, len(scores))]]


@dataclass
class KMeansResult:
    assignments: np.ndarray  # shape (n,), cluster index per vector
    centroids: np.ndarray  # shape (n_clusters, dim)
    inertia_history: list[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else 0.0


def _plusplus_init(
    vectors: np.ndarray, n_clusters: int, rng: np.random.Generator
) -> np.ndarray:
    n = len(vectors)
    centers = [int(rng.integers(n))]
    dist_sq = np.sum((vectors - vectors[centers[0]]) ** 2, axis=1)
    for _ in range(1, n_clusters):
        total = float(dist_sq.sum())
        if total <= 0.0:
            # all remaining points coincide with a center; pick any unused index
            unused = [i for i in range(n) if i not in centers]
            centers.append(unused[0] if unused else int(rng.integers(n)))
        else:
            choice = int(rng.choice(n, p=dist_sq / total))
            centers.append(choice)
        dist_sq = np.minimum(
            dist_sq, np.sum((vectors - vectors[centers[-1]]) ** 2, axis=1)
        )
    return vectors[centers].copy()


def kmeans(
    vectors: np.ndarray, n_clusters: int, seed: int, max_iter: int = 100
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding; deterministic per seed.

    Stops when assignments are stable or after ``max_iter`` iterations.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if n_clusters < 1:
        raise ValueError("n_clusters must be >= 1")
    if n_clusters > len(vectors):
        raise ValueError(
            f"n_clusters ({n_clusters}) exceeds number of vectors ({len(vectors)})"
        )
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(vectors, n_clusters, rng)
    assignments = np.full(len(vectors), -1, dtype=np.int64)
    history: list[float] = []

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # squared distances to every centroid, shape (n, k)
        dists = ((vectors[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignments = dists.argmin(axis=1)
        history.append(float(dists[np.arange(len(vectors)), new_assignments].sum()))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        for c in range(n_clusters):
            members = vectors[assignments == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                # adopt the point currently farthest from its own centroid
                worst = int(dists[np.arange(len(vectors)), assignments].argmax())
                centroids[c] = vectors[worst]
    return KMeansResult(
        assignments=assignments,
        centroids=centroids,
        inertia_history=history,
        n_iter=n_iter,
    )
