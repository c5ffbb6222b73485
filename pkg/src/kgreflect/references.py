"""Build and query the base of solved cases used as in-context guidance.

Building clusters the candidate questions and draws the same number from
each cluster, so the base spans the question space instead of oversampling
dense regions. Query time is plain cosine KNN over the stored question
embeddings; embeddings are persisted so the base is never re-embedded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider, cosine_knn, kmeans
from .models import Reference

SCHEMA_VERSION = 1


class FingerprintError(ValueError):
    """Query-time provider differs from the one the base was built with."""


@dataclass
class ReferenceBase:
    references: list[Reference]
    embeddings: np.ndarray  # one row per reference question
    fingerprint: str
    build_params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.references) != len(self.embeddings):
            raise ValueError("one embedding per reference required")

    def __len__(self) -> int:
        return len(self.references)


def build_reference_base(
    cases: list[Reference],
    target_size: int = 100,
    n_clusters: int = 10,
    seed: int = 0,
    provider: EmbeddingProvider | None = None,
) -> ReferenceBase:
    """Cluster case questions and sample an equal quota from each cluster.

    Clusters smaller than the quota contribute all members; the deficit is
    drawn uniformly from the remaining pool. Deterministic for a fixed seed.
    """
    if provider is None:
        raise ValueError("an embedding provider is required")
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    if target_size > len(cases):
        raise ValueError(
            f"cannot draw {target_size} references from {len(cases)} cases"
        )
    if n_clusters < 1 or n_clusters > len(cases):
        raise ValueError("n_clusters must be in [1, n_cases]")
    if target_size % n_clusters:
        raise ValueError(
            f"n_clusters ({n_clusters}) must divide target_size ({target_size})"
        )

    embeddings = provider.embed([c.question for c in cases])
    clustering = kmeans(embeddings, n_clusters, seed=seed)
    quota = target_size // n_clusters
    rng = np.random.default_rng(seed)

    selected: set[int] = set()
    for cluster in range(n_clusters):
        members = [i for i in range(len(cases)) if clustering.assignments[i] == cluster]
        if len(members) <= quota:
            selected.update(members)
        else:
            drawn = rng.choice(len(members), size=quota, replace=False)
            selected.update(members[i] for i in drawn)

    pool = [i for i in range(len(cases)) if i not in selected]
    deficit = target_size - len(selected)
    if deficit:
        backfill = rng.choice(len(pool), size=deficit, replace=False)
        selected.update(pool[i] for i in backfill)

    order = sorted(selected)
    return ReferenceBase(
        references=[cases[i] for i in order],
        embeddings=embeddings[order],
        fingerprint=provider.fingerprint,
        build_params={
            "target_size": target_size,
            "n_clusters": n_clusters,
            "seed": seed,
        },
    )


def query_references(
    base: ReferenceBase,
    question: str,
    k: int = 4,
    provider: EmbeddingProvider | None = None,
) -> list[Reference]:
    """The k stored references most similar to the question, best first."""
    if provider is None:
        raise ValueError("an embedding provider is required")
    if provider.fingerprint != base.fingerprint:
        raise FingerprintError(
            f"base built with {base.fingerprint}, queried with {provider.fingerprint}"
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = provider.embed_one(question)
    hits = cosine_knn(query_vec, base.embeddings, k)
    return [base.references[i] for i, _ in hits]


def save_reference_base(base: ReferenceBase, path: str) -> None:
    header = {
        "schema": SCHEMA_VERSION,
        "kind": "reference-base",
        "fingerprint": base.fingerprint,
        "dimension": int(base.embeddings.shape[1]) if len(base) else 0,
        **base.build_params,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ref, emb in zip(base.references, base.embeddings):
            record = ref.to_dict()
            record["embedding"] = [float(x) for x in emb]
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_reference_base(path: str) -> ReferenceBase:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty reference base file")
    header = json.loads(lines[0])
    if header.get("kind") != "reference-base":
        raise ValueError(f"{path}: not a reference base file")
    references: list[Reference] = []
    vectors: list[list[float]] = []
    for line in lines[1:]:
        record = json.loads(line)
        references.append(Reference.from_dict(record))
        vectors.append(record["embedding"])
    embeddings = (
        np.asarray(vectors, dtype=np.float64)
        if vectors
        else np.zeros((0, header.get("dimension", 0)))
    )
    params = {
        key: header[key]
        for key in ("target_size", "n_clusters", "seed")
        if key in header
    }
    return ReferenceBase(
        references=references,
        embeddings=embeddings,
        fingerprint=header["fingerprint"],
        build_params=params,
    )


def load_cases(path: str) -> list[Reference]:
    """Read solved cases from JSON Lines (question / paths / answers)."""
    cases: list[Reference] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("kind") == "reference-base" or "question" not in record:
                continue  # tolerate a header line
            try:
                cases.append(Reference.from_dict(record))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad reference record: {exc}")
    return cases
