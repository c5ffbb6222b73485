"""Core domain objects shared across the pipeline.

Entity and relation identifiers are plain strings compared by exact
equality: Freebase-style MIDs ("m.0cg8r04"), dotted relation paths
("film.actor.film"), or readable names in toy graphs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

EntityId = str
RelationId = str

ARROW = " -> "


@dataclass(frozen=True, order=True)
class Triple:
    """One directed edge (head, relation, tail) of the knowledge graph."""

    head: EntityId
    relation: RelationId
    tail: EntityId

    def __post_init__(self) -> None:
        if not (self.head and self.relation and self.tail):
            raise ValueError(f"triple fields must be non-empty: {self!r}")

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.head, self.relation, self.tail)


@dataclass(frozen=True)
class ReasoningPath:
    """A start entity followed by one or more predicted relation names."""

    start: EntityId
    relations: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.start:
            raise ValueError("reasoning path needs a start entity")
        if not self.relations or any(not r for r in self.relations):
            raise ValueError("reasoning path needs non-empty relations")

    def to_arrow(self) -> str:
        return ARROW.join((self.start,) + self.relations)

    @classmethod
    def from_arrow(cls, text: str) -> "ReasoningPath":
        parts = [p.strip() for p in text.split("->")]
        parts = [p for p in parts if p]
        if len(parts) < 2:
            raise ValueError(f"not an arrow-joined path: {text!r}")
        return cls(start=parts[0], relations=tuple(parts[1:]))


@dataclass(frozen=True)
class TripletSequence:
    """An ordered chain of KG triples; each tail is the next head."""

    triples: tuple[Triple, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.triples, self.triples[1:]):
            if a.tail != b.head:
                raise ValueError(f"sequence not chain-connected at {a} -> {b}")

    def __len__(self) -> int:
        return len(self.triples)

    def __bool__(self) -> bool:
        return bool(self.triples)

    def tail_entity(self) -> EntityId | None:
        return self.triples[-1].tail if self.triples else None

    def is_prefix_of(self, other: "TripletSequence") -> bool:
        return self.triples == other.triples[: len(self.triples)]


@dataclass(frozen=True)
class ScoredRelation:
    relation: RelationId
    score: float


@dataclass
class Reference:
    """A solved case injected into prompts as guidance."""

    question: str
    reasoning_paths: list[str]  # arrow-joined "entity -> rel -> rel" strings
    answers: list[str]

    def __post_init__(self) -> None:
        if not self.question:
            raise ValueError("reference question must be non-empty")
        if not self.reasoning_paths:
            raise ValueError("reference needs at least one reasoning path")
        if not self.answers:
            raise ValueError("reference needs at least one answer")

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "paths": list(self.reasoning_paths),
            "answers": list(self.answers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Reference":
        return cls(
            question=data["question"],
            reasoning_paths=list(data["paths"]),
            answers=list(data["answers"]),
        )


@dataclass
class Question:
    """A question plus its topic entities (provided with the dataset)."""

    text: str
    topic_entities: list[EntityId]
    labels: dict[EntityId, str] = field(default_factory=dict)
    gold_answers: list[str] | None = None
    qid: str | None = None
    level: str | None = None  # generalization level, when the dataset has one

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("question text must be non-empty")
        if not self.topic_entities:
            raise ValueError("question needs at least one topic entity")

    def label_of(self, entity: EntityId) -> str:
        return self.labels.get(entity, entity)


class Verdict(enum.Enum):
    HAVE_ANSWER = "HAVE_ANSWER"
    NO_ANSWER = "NO_ANSWER"


@dataclass
class Judgement:
    """Outcome of the sequence judge over a batch of triplet sequences.

    ``pruned`` holds one (possibly empty) sequence per input sequence; each
    is a contiguous subsequence of its original that, when non-empty, starts
    at the original's first triplet.
    """

    verdict: Verdict
    pruned: list[TripletSequence]
    judge_message: str = ""


@dataclass
class Answer:
    values: list[str]
    grounded: bool
    raw_text: str = ""

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("answer values must be non-empty")


class InstantiationStatus(enum.Enum):
    FULL = "fully_instantiated"
    PARTIAL = "partial"


@dataclass
class InstantiationResult:
    """Per-path outcome of walking the graph along a reasoning path.

    ``frontier_candidates`` maps an arrow-joined instantiated prefix (ending
    with the relation that reached the frontier, or just the start entity at
    depth 0) to the frontier entities' outgoing relations.
    """

    path: ReasoningPath
    sequences: list[TripletSequence]
    depth_reached: int
    status: InstantiationStatus
    error_messages: list[str] = field(default_factory=list)
    frontier_candidates: dict[str, list[RelationId]] = field(default_factory=dict)

    @property
    def fully_instantiated(self) -> bool:
        return self.status is InstantiationStatus.FULL
