"""Scoring: generation accuracy with aliases, EM, token F1, MRR, Top-K.

Generation accuracy asks whether any gold answer name or alias occurs as a
contiguous token subsequence of the normalized generation — token-level
containment, so "york" never matches inside "new york city". EM and F1
follow the usual extractive-QA convention over the same normalization
(articles are kept). Retrieval metrics reduce a ranking to the rank of the
first answer-bearing triple.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .text import normalize_text, normalize_tokens

TOP_K_LEVELS = (1, 10, 30)


@dataclass(frozen=True)
class AnswerEntity:
    name: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnswerSet:
    """Gold answers: every name and alias counts as a correct surface."""

    entities: tuple[AnswerEntity, ...]

    def surfaces(self) -> list[str]:
        out = []
        for entity in self.entities:
            out.append(entity.name)
            out.extend(entity.aliases)
        return out


@dataclass(frozen=True)
class GenScores:
    accuracy: int
    em: int
    f1: float


@dataclass(frozen=True)
class RetrievalScores:
    mrr: float
    top_k_hits: Mapping[int, int]
    first_hit_rank: int | None = None


def _contains_subsequence(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    width = len(needle)
    if width == 0 or width > len(haystack):
        return False
    needle = list(needle)
    return any(list(haystack[i : i + width]) == needle for i in range(len(haystack) - width + 1))


def _token_f1(predicted: list[str], gold: list[str]) -> float:
    if not predicted or not gold:
        return 0.0
    overlap = sum((Counter(predicted) & Counter(gold)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(predicted)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def score_generation(generated: str, answers: AnswerSet) -> GenScores:
    """Score one generation against every answer surface; best surface wins."""
    generated_tokens = normalize_tokens(generated)
    accuracy = 0
    em = 0
    f1 = 0.0
    for surface in answers.surfaces():
        surface_tokens = normalize_tokens(surface)
        if not surface_tokens:
            continue
        if _contains_subsequence(generated_tokens, surface_tokens):
            accuracy = 1
        if generated_tokens == surface_tokens:
            em = 1
        f1 = max(f1, _token_f1(generated_tokens, surface_tokens))
    return GenScores(accuracy, em, f1)


def score_retrieval(first_hit_rank: int | None) -> RetrievalScores:
    """Reciprocal rank and Top-K hit flags for a first answer-bearing rank."""
    if first_hit_rank is not None and first_hit_rank < 1:
        raise ValueError(f"rank must be >= 1 when present, got {first_hit_rank}")
    mrr = 0.0 if first_hit_rank is None else 1.0 / first_hit_rank
    hits = {
        k: int(first_hit_rank is not None and first_hit_rank <= k) for k in TOP_K_LEVELS
    }
    return RetrievalScores(mrr, hits, first_hit_rank)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _group_report(
    group: list[tuple[GenScores, RetrievalScores | None, str]]
) -> dict:
    report: dict = {"count": len(group)}
    retrieval = [scores for _, scores, _ in group if scores is not None]
    report["retrieval_count"] = len(retrieval)
    if group:
        report["accuracy"] = _mean([gen.accuracy for gen, _, _ in group])
        report["em"] = _mean([gen.em for gen, _, _ in group])
        report["f1"] = _mean([gen.f1 for gen, _, _ in group])
    if retrieval:
        report["mrr"] = _mean([scores.mrr for scores in retrieval])
        # string keys so the in-memory report equals its JSON round-trip
        report["top_k"] = {
            str(k): _mean([scores.top_k_hits[k] for scores in retrieval]) for k in TOP_K_LEVELS
        }
    return report


def aggregate(
    per_example: Iterable[tuple[GenScores, RetrievalScores | None, str | None]]
) -> dict:
    """Mean metrics overall and per question category.

    Examples without retrieval scores (methods that retrieve nothing) only
    contribute to the generation means. Empty groups render their metrics as
    absent rather than zero; categories are ordered lexicographically, with
    untagged examples grouped under "uncategorized".
    """
    rows = [
        (gen, retrieval, category if category else "uncategorized")
        for gen, retrieval, category in per_example
    ]
    by_category = {}
    for category in sorted({category for _, _, category in rows}):
        by_category[category] = _group_report(
            [row for row in rows if row[2] == category]
        )
    return {"overall": _group_report(rows), "by_category": by_category}
