"""Knowledge-graph access: in-memory triple store and SPARQL endpoint client.

Both backends answer the same two traversal queries (outgoing relations of
an entity, successor entities along a relation) so the pipeline can swap
them freely. Traversal follows outgoing edges only; inverse edges must be
materialized in the data if needed.

Triple files are 3-column TSV (head, relation, tail). Lines starting with
``#`` are comments. Two directive forms are recognized:

    @label<TAB>entity<TAB>display string
    @cvt<TAB>entity
"""

from __future__ import annotations

import re
import urllib.parse
from dataclasses import dataclass, field
from typing import Iterable, Protocol

import requests

from .models import EntityId, RelationId, Triple

# Freebase machine ids look like "m.0cg8r04" / "g.11b7k2p".
_MID_RE = re.compile(r"^[mg]\.[0-9a-z_]+$")


class GraphError(Exception):
    """Triple file could not be parsed."""


class BackendError(Exception):
    """A remote graph backend failed; carries endpoint and query."""

    def __init__(self, message: str, endpoint: str = "", query: str = ""):
        super().__init__(message)
        self.endpoint = endpoint
        self.query = query


class GraphBackend(Protocol):
    """Read interface shared by the in-memory store and the SPARQL client."""

    def one_hop_relations(self, entity: EntityId) -> set[RelationId]: ...

    def successors(self, entity: EntityId, relation: RelationId) -> list[EntityId]: ...

    def is_cvt(self, entity: EntityId) -> bool: ...

    def label(self, entity: EntityId) -> str | None: ...


@dataclass
class TripleStore:
    """Immutable-after-load triple set with an outgoing-edge index."""

    triples: set[Triple] = field(default_factory=set)
    labels: dict[EntityId, str] = field(default_factory=dict)
    cvt_marks: set[EntityId] = field(default_factory=set)
    _index: dict[EntityId, dict[RelationId, set[EntityId]]] = field(default_factory=dict)

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[Triple],
        labels: dict[EntityId, str] | None = None,
        cvt_marks: set[EntityId] | None = None,
    ) -> "TripleStore":
        store = cls(labels=dict(labels or {}), cvt_marks=set(cvt_marks or ()))
        for t in triples:
            store._add(t)
        return store

    def _add(self, triple: Triple) -> None:
        if triple in self.triples:
            return
        self.triples.add(triple)
        self._index.setdefault(triple.head, {}).setdefault(triple.relation, set()).add(
            triple.tail
        )

    def one_hop_relations(self, entity: EntityId) -> set[RelationId]:
        """Relations r with (entity, r, ·) in the store; empty if unknown."""
        return set(self._index.get(entity, {}))

    def successors(self, entity: EntityId, relation: RelationId) -> list[EntityId]:
        """All tails of (entity, relation, ·), sorted lexicographically."""
        return sorted(self._index.get(entity, {}).get(relation, ()))

    def is_cvt(self, entity: EntityId) -> bool:
        """Explicit marks win; otherwise an unlabeled machine id counts as CVT."""
        if entity in self.cvt_marks:
            return True
        return bool(_MID_RE.match(entity)) and entity not in self.labels

    def label(self, entity: EntityId) -> str | None:
        return self.labels.get(entity)

    def relations(self) -> list[RelationId]:
        """Distinct relation vocabulary, sorted."""
        return sorted({t.relation for t in self.triples})

    def entities(self) -> list[EntityId]:
        seen = {t.head for t in self.triples} | {t.tail for t in self.triples}
        return sorted(seen)


def load_triples(text: str) -> TripleStore:
    """Parse TSV triple text into a store. Empty input yields an empty store."""
    store = TripleStore()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if fields[0] == "@label":
            if len(fields) != 3:
                raise GraphError(f"line {lineno}: @label needs entity and text")
            store.labels[fields[1]] = fields[2]
            continue
        if fields[0] == "@cvt":
            if len(fields) != 2:
                raise GraphError(f"line {lineno}: @cvt needs exactly one entity")
            store.cvt_marks.add(fields[1])
            continue
        if len(fields) != 3:
            raise GraphError(
                f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
            )
        head, relation, tail = (f.strip() for f in fields)
        if not (head and relation and tail):
            raise GraphError(f"line {lineno}: empty field in triple")
        store._add(Triple(head, relation, tail))
    return store


def load_triples_file(path: str) -> TripleStore:
    with open(path, encoding="utf-8") as fh:
        return load_triples(fh.read())


def dump_triples(store: TripleStore) -> str:
    """Serialize a store back to TSV; load_triples(dump_triples(s)) == s."""
    lines = [f"{t.head}\t{t.relation}\t{t.tail}" for t in sorted(store.triples)]
    lines += [f"@label\t{e}\t{store.labels[e]}" for e in sorted(store.labels)]
    lines += [f"@cvt\t{e}" for e in sorted(store.cvt_marks)]
    return "\n".join(lines) + ("\n" if lines else "")


class SparqlGraph:
    """SPARQL 1.1 client answering the same queries as :class:`TripleStore`.

    Identifiers are mapped to IRIs by appending the percent-encoded id to a
    namespace prefix (Freebase convention), and stripped back on results.
    """

    def __init__(
        self,
        endpoint: str,
        namespace: str = "http://rdf.freebase.com/ns/",
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.namespace = namespace
        self.timeout = timeout
        self._session = session or requests.Session()

    def _iri(self, ident: str) -> str:
        return self.namespace + urllib.parse.quote(ident, safe="._~-")

    def _from_iri(self, iri: str) -> str:
        if iri.startswith(self.namespace):
            iri = iri[len(self.namespace):]
        return urllib.parse.unquote(iri)

    def _select(self, query: str, var: str) -> list[str]:
        try:
            resp = self._session.get(
                self.endpoint,
                params={"query": query},
                headers={"Accept": "application/sparql-results+json"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError(f"sparql request failed: {exc}", self.endpoint, query)
        if resp.status_code != 200:
            raise BackendError(
                f"sparql endpoint returned HTTP {resp.status_code}",
                self.endpoint,
                query,
            )
        try:
            bindings = resp.json()["results"]["bindings"]
        except (ValueError, KeyError) as exc:
            raise BackendError(f"malformed sparql response: {exc}", self.endpoint, query)
        return [b[var]["value"] for b in bindings if var in b]

    def one_hop_relations(self, entity: EntityId) -> set[RelationId]:
        query = f"SELECT DISTINCT ?r WHERE {{ <{self._iri(entity)}> ?r ?t . }}"
        return {self._from_iri(v) for v in self._select(query, "r")}

    def successors(self, entity: EntityId, relation: RelationId) -> list[EntityId]:
        query = (
            f"SELECT DISTINCT ?t WHERE {{ <{self._iri(entity)}> "
            f"<{self._iri(relation)}> ?t . }}"
        )
        return sorted(self._from_iri(v) for v in self._select(query, "t"))

    def label(self, entity: EntityId) -> str | None:
        query = (
            "SELECT ?l WHERE { "
            f"<{self._iri(entity)}> <http://www.w3.org/2000/01/rdf-schema#label> ?l . "
            "} LIMIT 1"
        )
        values = self._select(query, "l")
        return values[0] if values else None

    def is_cvt(self, entity: EntityId) -> bool:
        return bool(_MID_RE.match(entity)) and self.label(entity) is None
