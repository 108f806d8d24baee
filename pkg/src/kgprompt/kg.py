"""Knowledge-graph store: TSV loading, neighborhoods, and entity linking.

File formats
------------
triples TSV   one triple per line, ``subject_id <TAB> relation_id <TAB> object``
              where object is ``E:<entity_id>`` for an entity reference or
              ``L:<datatype>:<value>`` for a literal (datatype one of
              plain/time/quantity). ``#``-prefixed lines are comments.
entities TSV  ``entity_id <TAB> canonical_name <TAB> alias1|alias2|...``
              (aliases optional; an empty name field marks an unnamed entity).
relations TSV ``relation_id <TAB> relation_name``; optional, picked up as
              ``relations.tsv`` next to the entities file when not given.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from .errors import GraphLoadError
from .text import normalize_tokens

logger = logging.getLogger(__name__)

EntityId = str
RelationId = str

LITERAL_DATATYPES = ("plain", "time", "quantity")


@dataclass(frozen=True)
class Entity:
    """A graph node: opaque id, optional canonical name, alternative names."""

    id: EntityId
    name: str | None = None
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Relation:
    id: RelationId
    name: str


@dataclass(frozen=True)
class EntityRef:
    """Triple object pointing at another entity."""

    entity_id: EntityId


@dataclass(frozen=True)
class Literal:
    """Triple object holding a typed literal value."""

    value: str
    datatype: str = "plain"


ObjectTerm = Union[EntityRef, Literal]


@dataclass(frozen=True)
class Triple:
    subject: EntityId
    relation: RelationId
    object: ObjectTerm

    def object_entity_id(self) -> EntityId | None:
        """The object's entity id, or None for literal objects."""
        return self.object.entity_id if isinstance(self.object, EntityRef) else None


@dataclass
class KnowledgeGraph:
    """Immutable-after-build triple store with an incidence index.

    ``triples`` keeps ingestion order, which is the tie-break and output
    order everywhere else in the pipeline. ``adjacency`` maps an entity id
    to the ascending indices of triples it is incident to, whether as
    subject or as entity-valued object.
    """

    entities: dict[EntityId, Entity] = field(default_factory=dict)
    relations: dict[RelationId, Relation] = field(default_factory=dict)
    triples: list[Triple] = field(default_factory=list)
    adjacency: dict[EntityId, list[int]] = field(default_factory=dict)

    def entity_name(self, entity_id: EntityId) -> str | None:
        entity = self.entities.get(entity_id)
        return entity.name if entity is not None else None


def build_graph(
    entities: Iterable[Entity],
    relations: Iterable[Relation],
    triples: Iterable[Triple],
) -> KnowledgeGraph:
    """Assemble a validated graph from already-parsed parts.

    Exact duplicate triples are dropped (first occurrence wins). Relations
    referenced by triples but not declared get their id as a display name.
    Raises GraphLoadError on duplicate entity/relation ids or on triples
    referencing unknown entities.
    """
    graph = KnowledgeGraph()
    for entity in entities:
        if entity.id in graph.entities:
            raise GraphLoadError(f"duplicate entity id: {entity.id}")
        graph.entities[entity.id] = entity
    for relation in relations:
        if relation.id in graph.relations:
            raise GraphLoadError(f"duplicate relation id: {relation.id}")
        graph.relations[relation.id] = relation

    seen: set[Triple] = set()
    for triple in triples:
        if triple in seen:
            continue
        seen.add(triple)
        if triple.subject not in graph.entities:
            raise GraphLoadError(f"triple references unknown subject entity: {triple.subject}")
        object_id = triple.object_entity_id()
        if object_id is not None and object_id not in graph.entities:
            raise GraphLoadError(f"triple references unknown object entity: {object_id}")
        if triple.relation not in graph.relations:
            graph.relations[triple.relation] = Relation(triple.relation, triple.relation)
        index = len(graph.triples)
        graph.triples.append(triple)
        for incident in {triple.subject, object_id} - {None}:
            graph.adjacency.setdefault(incident, []).append(index)
    return graph


def _data_lines(path: Path):
    """Yield (line_number, stripped_line), skipping blanks and # comments."""
    with path.open("r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield number, line


def _parse_object(token: str, path: Path, line_number: int) -> ObjectTerm:
    if token.startswith("E:"):
        entity_id = token[2:]
        if not entity_id:
            raise GraphLoadError(f"{path}:{line_number}: empty entity id in object")
        return EntityRef(entity_id)
    if token.startswith("L:"):
        parts = token.split(":", 2)
        if len(parts) != 3:
            raise GraphLoadError(
                f"{path}:{line_number}: literal object must be L:<datatype>:<value>"
            )
        _, datatype, value = parts
        if datatype not in LITERAL_DATATYPES:
            raise GraphLoadError(
                f"{path}:{line_number}: unknown literal datatype {datatype!r}"
                f" (expected one of {', '.join(LITERAL_DATATYPES)})"
            )
        if not value:
            raise GraphLoadError(f"{path}:{line_number}: empty literal value")
        return Literal(value, datatype)
    raise GraphLoadError(
        f"{path}:{line_number}: object must start with 'E:' or 'L:', got {token!r}"
    )


def _load_entities(path: Path) -> list[Entity]:
    entities = []
    for number, line in _data_lines(path):
        columns = line.split("\t")
        if len(columns) not in (2, 3):
            raise GraphLoadError(
                f"{path}:{number}: expected 2 or 3 tab-separated columns, got {len(columns)}"
            )
        entity_id = columns[0].strip()
        if not entity_id:
            raise GraphLoadError(f"{path}:{number}: empty entity id")
        name = columns[1].strip() or None
        aliases: list[str] = []
        if len(columns) == 3:
            for alias in columns[2].split("|"):
                alias = alias.strip()
                if alias and alias != name and alias not in aliases:
                    aliases.append(alias)
        entities.append(Entity(entity_id, name, tuple(aliases)))
    return entities


def _load_relations(path: Path) -> list[Relation]:
    relations = []
    for number, line in _data_lines(path):
        columns = line.split("\t")
        if len(columns) != 2:
            raise GraphLoadError(
                f"{path}:{number}: expected 2 tab-separated columns, got {len(columns)}"
            )
        relation_id, name = columns[0].strip(), columns[1].strip()
        if not relation_id or not name:
            raise GraphLoadError(f"{path}:{number}: empty relation id or name")
        relations.append(Relation(relation_id, name))
    return relations


def _load_triples(path: Path) -> list[Triple]:
    triples = []
    for number, line in _data_lines(path):
        columns = line.split("\t")
        if len(columns) != 3:
            raise GraphLoadError(
                f"{path}:{number}: expected 3 tab-separated columns, got {len(columns)}"
            )
        subject, relation, object_token = (column.strip() for column in columns)
        if not subject or not relation:
            raise GraphLoadError(f"{path}:{number}: empty subject or relation id")
        triples.append(Triple(subject, relation, _parse_object(object_token, path, number)))
    return triples


def load_graph(
    triples_path: str | Path,
    entities_path: str | Path,
    relations_path: str | Path | None = None,
) -> KnowledgeGraph:
    """Load and validate a knowledge graph from TSV files.

    When ``relations_path`` is not given, a ``relations.tsv`` sitting next to
    the entities file is used if present; relation ids without a declared
    name fall back to the id itself.
    """
    triples_path = Path(triples_path)
    entities_path = Path(entities_path)
    if relations_path is None:
        candidate = entities_path.parent / "relations.tsv"
        relations_path = candidate if candidate.is_file() else None
    relations = _load_relations(Path(relations_path)) if relations_path else []
    return build_graph(_load_entities(entities_path), relations, _load_triples(triples_path))


def neighborhood(
    graph: KnowledgeGraph, seeds: Iterable[EntityId], hops: int = 1
) -> list[Triple]:
    """Triples within ``hops`` of any seed entity, in ingestion order.

    1 hop collects every triple incident to a seed (subject or object side);
    2 hops additionally collects triples incident to any entity appearing in
    the 1-hop set. Literal objects have no adjacency and are never expanded.
    Seeds missing from the graph are logged and skipped.
    """
    if hops not in (1, 2):
        raise ValueError(f"hops must be 1 or 2, got {hops}")
    present = []
    for seed in sorted(set(seeds)):
        if seed in graph.entities:
            present.append(seed)
        else:
            logger.warning("seed entity %s not in graph; skipping", seed)

    indices: set[int] = set()
    for seed in present:
        indices.update(graph.adjacency.get(seed, ()))
    if hops == 2:
        frontier: set[EntityId] = set()
        for index in indices:
            triple = graph.triples[index]
            frontier.add(triple.subject)
            object_id = triple.object_entity_id()
            if object_id is not None:
                frontier.add(object_id)
        for entity_id in frontier:
            indices.update(graph.adjacency.get(entity_id, ()))
    return [graph.triples[index] for index in sorted(indices)]


def relation_frequency(graph: KnowledgeGraph) -> dict[RelationId, int]:
    """Number of triples per relation over the whole graph."""
    return dict(Counter(triple.relation for triple in graph.triples))


def link_entities(graph: KnowledgeGraph, question: str) -> set[EntityId]:
    """Exact surface-form entity linking over normalized tokens.

    Matches every entity whose canonical name or alias occurs as a contiguous
    token sequence in the normalized question, longest match first. Shorter
    matches nested inside an already-accepted longer match are suppressed
    ("York" inside an accepted "New York").
    """
    question_tokens = normalize_tokens(question)
    if not question_tokens:
        return set()

    occurrences: list[tuple[int, int, int, EntityId]] = []  # (length, start, end, id)
    for entity in graph.entities.values():
        surfaces = ([entity.name] if entity.name else []) + list(entity.aliases)
        for surface in surfaces:
            pattern = normalize_tokens(surface)
            if not pattern:
                continue
            width = len(pattern)
            for start in range(len(question_tokens) - width + 1):
                if question_tokens[start : start + width] == pattern:
                    occurrences.append((width, start, start + width, entity.id))

    occurrences.sort(key=lambda item: (-item[0], item[1], item[3]))
    accepted_spans: list[tuple[int, int]] = []
    linked: set[EntityId] = set()
    for width, start, end, entity_id in occurrences:
        nested = any(
            span_start <= start and end <= span_end and width < span_end - span_start
            for span_start, span_end in accepted_spans
        )
        if nested:
            continue
        accepted_spans.append((start, end))
        linked.add(entity_id)
    return linked
