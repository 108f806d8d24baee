"""Linear triple verbalization: (subject, relation, object) as one string."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .kg import EntityRef, KnowledgeGraph, Triple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerbalizedTriple:
    text: str
    source: Triple


def _entity_text(graph: KnowledgeGraph, entity_id: str) -> str:
    name = graph.entities[entity_id].name
    if name is None:
        logger.warning("entity %s has no name; rendering raw id", entity_id)
        return entity_id
    return name


def verbalize(triple: Triple, graph: KnowledgeGraph) -> VerbalizedTriple:
    """Render a triple as ``(<subject>, <relation>, <object>)``.

    Entity references render their canonical name (raw id when unnamed);
    plain literals render their value as-is; time and quantity literals get
    a ``time: `` / ``quantity: `` prefix. Pure function of its inputs.
    """
    subject = _entity_text(graph, triple.subject)
    relation = graph.relations[triple.relation].name
    obj = triple.object
    if isinstance(obj, EntityRef):
        object_text = _entity_text(graph, obj.entity_id)
    elif obj.datatype == "plain":
        object_text = obj.value
    else:
        object_text = f"{obj.datatype}: {obj.value}"
    return VerbalizedTriple(f"({subject}, {relation}, {object_text})", triple)
