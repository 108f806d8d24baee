"""Acceptance suite: every criterion prints one PASS line when it holds.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import dataclasses
import json
import random
import string
import time

import pytest

from oracles import oracle_rank

from kgprompt.embed import EmbedderConfig
from kgprompt.errors import PromptTooLongError
from kgprompt.kg import (
    Entity,
    EntityRef,
    Literal,
    Relation,
    Triple,
    build_graph,
    load_graph,
    neighborhood,
)
from kgprompt.llm import ProviderConfig
from kgprompt.metrics import (
    AnswerEntity,
    AnswerSet,
    score_generation,
    score_retrieval,
)
from kgprompt.pipeline import RunConfig, load_config, run
from kgprompt.prompts import PromptSpec, render_prompt
from kgprompt.retrieve import (
    Popular,
    Random,
    ScoredTriple,
    Similarity,
    rank_candidates,
    top_k,
)
from kgprompt.verbalize import verbalize

WORDS = [
    "harbor", "records", "silver", "night", "quiet", "amber", "static", "born",
    "city", "label", "genre", "folk", "jazz", "guitar", "spouse", "death",
    "place", "author", "of", "the", "york", "new", "time", "d'arte", "+20",
]

ALEX_RESPONSE = (
    "Alex Chilton died on March 17, 2010 in New Orleans, Louisiana"
    " due to a myocardial infarction."
)
ALEX_UPDATED_RESPONSE = (
    "Alex Chilton died in Los Angeles, California on September 1, 2000"
    " from pancreatic cancer."
)


def random_graph_and_question(rng, max_candidates):
    entities = [
        Entity(f"Q{i}", " ".join(rng.sample(WORDS, rng.randint(1, 3))))
        for i in range(rng.randint(1, 12))
    ]
    relations = [
        Relation(f"P{i}", " ".join(rng.sample(WORDS, rng.randint(1, 2))))
        for i in range(rng.randint(1, 5))
    ]
    triples, seen = [], set()
    for _ in range(rng.randint(0, max_candidates)):
        subject = rng.choice(entities).id
        relation = rng.choice(relations).id
        if rng.random() < 0.2:
            obj = Literal(str(rng.randint(0, 999)), rng.choice(("plain", "time", "quantity")))
        else:
            obj = EntityRef(rng.choice(entities).id)
        triple = Triple(subject, relation, obj)
        if triple not in seen:
            seen.add(triple)
            triples.append(triple)
    graph = build_graph(entities, relations, triples)
    question = " ".join(rng.choices(WORDS, k=rng.randint(0, 10)))
    return graph, question


def fixture_run_config(data_dir, out_dir, script):
    return RunConfig(
        method="kaping",
        k=10,
        provider=ProviderConfig(script=script),
        triples_path=str(data_dir / "triples.tsv"),
        entities_path=str(data_dir / "entities.tsv"),
        dataset_path=str(data_dir / "dataset.jsonl"),
        output_dir=str(out_dir),
    )


def test_criterion_01_retrieval_oracle_equivalence():
    rng = random.Random(20240817)
    dimension = 256
    config = EmbedderConfig(dimension=dimension)
    started = time.monotonic()
    for _ in range(200):
        graph, question = random_graph_and_question(rng, max_candidates=50)
        ranked = rank_candidates(Similarity(config), question, graph.triples, graph)
        texts = [verbalize(t, graph).text for t in graph.triples]
        expected = oracle_rank(question, texts, dimension)
        assert [s.verbalized for s in ranked] == [texts[i] for i in expected]
        assert [s.rank for s in ranked] == list(range(1, len(texts) + 1))
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    print(f"\nACCEPTANCE 1 retrieval-oracle-equivalence: PASS ({elapsed:.2f}s for 200 graphs)")


def test_criterion_02_case_study_prompt_byte_exact(alex_dir, tmp_path):
    golden = (alex_dir / "golden_prompt.txt").read_text(encoding="utf-8")
    graph = load_graph(alex_dir / "triples.tsv", alex_dir / "entities.tsv")
    question = "Where did Alex Chilton die?"
    ranked = rank_candidates(Similarity(EmbedderConfig()), question, graph.triples, graph)
    rendered = render_prompt(PromptSpec(), top_k(ranked, 10), question)
    assert rendered.text == golden

    script = {"(Alex Chilton, place of death, New Orleans)": ALEX_RESPONSE}
    result = run(fixture_run_config(alex_dir, tmp_path, script))
    assert result["report"]["overall"]["accuracy"] == 1.0
    record = json.loads((tmp_path / "predictions.jsonl").read_text().splitlines()[0])
    assert record["prompt"] == golden
    print("\nACCEPTANCE 2 case-study-prompt-byte-exact: PASS")


def test_criterion_03_knowledge_update_flips_answer(alex_dir, alex_updated_dir, tmp_path):
    original_script = {"(Alex Chilton, place of death, New Orleans)": ALEX_RESPONSE}
    updated_script = {"(Alex Chilton, place of death, Los Angeles)": ALEX_UPDATED_RESPONSE}

    original = run(fixture_run_config(alex_dir, tmp_path / "orig", original_script))
    updated = run(fixture_run_config(alex_updated_dir, tmp_path / "upd", updated_script))

    original_record = json.loads(
        (tmp_path / "orig" / "predictions.jsonl").read_text().splitlines()[0]
    )
    updated_record = json.loads(
        (tmp_path / "upd" / "predictions.jsonl").read_text().splitlines()[0]
    )
    assert original_record["prompt"] != updated_record["prompt"]
    assert "(Alex Chilton, place of death, Los Angeles)" in updated_record["prompt"]
    assert "New Orleans" in original_record["generation"]
    assert "Los Angeles" in updated_record["generation"]
    assert original["report"]["overall"]["accuracy"] == 1.0
    assert updated["report"]["overall"]["accuracy"] == 1.0
    print("\nACCEPTANCE 3 knowledge-update-flips-answer: PASS")


# (generated text, answer entities as (name, aliases), accuracy, em, f1)
GENERATION_CASES = [
    (ALEX_RESPONSE, [("New Orleans", ())], 1, 0, 2 / 9),
    ("new orleans", [("New Orleans", ())], 1, 1, 1.0),
    ("orleans france", [("New Orleans", ())], 0, 0, 0.5),
    ("York", [("New York", ())], 0, 0, 2 / 3),
    ("I think the answer is NYC.", [("New York City", ("NYC", "New York"))], 1, 0, 2 / 7),
    ("The Bard wrote it", [("William Shakespeare", ("Shakespeare", "The Bard"))], 1, 0, 2 / 3),
    ("shakespeare", [("William Shakespeare", ("Shakespeare", "The Bard"))], 1, 1, 1.0),
    ("", [("New Orleans", ())], 0, 0, 0.0),
    ("UNKNOWN", [("New Orleans", ())], 0, 0, 0.0),
    ("new  orleans!!", [("New Orleans", ())], 1, 1, 1.0),
    ("la nouvelle orléans", [("New Orleans", ("La Nouvelle-Orléans",))], 1, 1, 1.0),
    ("Orleans", [("Orleans", ())], 1, 1, 1.0),
    ("the capital is Paris France", [("Paris", ())], 1, 0, 1 / 3),
    ("Probably Harbor City.", [("Westfall", ()), ("Harbor City", ())], 1, 0, 0.8),
    ("york york", [("York", ())], 1, 0, 2 / 3),
    ("a b c d", [("b c", ())], 1, 0, 2 / 3),
    ("a b c d", [("a c", ())], 0, 0, 2 / 3),
    ("Jane Austen", [("Jane Austen", ())], 1, 1, 1.0),
    ("Jane Austen wrote Lady Susan", [("Jane Austen", ())], 1, 0, 4 / 7),
    ("!!!", [("New Orleans", ())], 0, 0, 0.0),
    ("new orleans", [("New Orleans", ("!!!",))], 1, 1, 1.0),
]

# (first hit rank, mrr, hits at 1/10/30)
RETRIEVAL_CASES = [
    (1, 1.0, (1, 1, 1)),
    (2, 0.5, (0, 1, 1)),
    (4, 0.25, (0, 1, 1)),
    (10, 0.1, (0, 1, 1)),
    (11, 1 / 11, (0, 0, 1)),
    (30, 1 / 30, (0, 0, 1)),
    (31, 1 / 31, (0, 0, 0)),
    (None, 0.0, (0, 0, 0)),
]


def test_criterion_04_metric_hand_suite():
    assert len(GENERATION_CASES) + len(RETRIEVAL_CASES) >= 20
    for generated, gold, accuracy, em, f1 in GENERATION_CASES:
        answers = AnswerSet(tuple(AnswerEntity(n, tuple(a)) for n, a in gold))
        scores = score_generation(generated, answers)
        assert scores.accuracy == accuracy, (generated, gold)
        assert scores.em == em, (generated, gold)
        assert scores.f1 == pytest.approx(f1, abs=1e-9), (generated, gold)
    for rank, mrr, (hit1, hit10, hit30) in RETRIEVAL_CASES:
        scores = score_retrieval(rank)
        assert scores.mrr == pytest.approx(mrr, abs=1e-9), rank
        assert scores.top_k_hits == {1: hit1, 10: hit10, 30: hit30}, rank
    total = len(GENERATION_CASES) + len(RETRIEVAL_CASES)
    print(f"\nACCEPTANCE 4 metric-hand-suite: PASS ({total} hand-computed cases)")


def _random_surface(rng):
    words = [
        "".join(rng.choices(string.ascii_lowercase, k=rng.randint(1, 6)))
        for _ in range(rng.randint(1, 3))
    ]
    return " ".join(words)


def test_criterion_05_metric_property_invariants():
    rng = random.Random(998877)

    for _ in range(1000):
        rank = None if rng.random() < 0.2 else rng.randint(1, 60)
        scores = score_retrieval(rank)
        hits = scores.top_k_hits
        assert hits[1] <= hits[10] <= hits[30]
        if rank is None:
            assert scores.mrr == 0.0
        else:
            assert scores.mrr == pytest.approx(1.0 / rank, abs=1e-9)

    for _ in range(1000):
        surface = _random_surface(rng)
        answers = AnswerSet((AnswerEntity(surface),))
        prefix = _random_surface(rng) if rng.random() < 0.5 else ""
        core = surface if rng.random() < 0.5 else _random_surface(rng)
        generated = f"{prefix} {core}".strip()
        suffix = _random_surface(rng)
        before = score_generation(generated, answers)
        after = score_generation(f"{generated} {suffix}", answers)
        if before.accuracy == 1:
            assert after.accuracy == 1, (generated, suffix, surface)

    for _ in range(1000):
        surface = _random_surface(rng)
        answers = AnswerSet((AnswerEntity(surface),))
        if rng.random() < 0.5:
            generated = surface.upper() if rng.random() < 0.5 else f"  {surface}!!"
        else:
            generated = _random_surface(rng)
        scores = score_generation(generated, answers)
        assert 0.0 <= scores.f1 <= 1.0
        if scores.em == 1:
            assert scores.f1 == pytest.approx(1.0, abs=1e-9)
    print("\nACCEPTANCE 5 metric-property-invariants: PASS (3 x 1000 cases)")


def test_criterion_06_determinism(toy_dir, tmp_path):
    base = load_config(toy_dir / "config.json")
    for method in ("kaping", "random_knowledge"):
        for name in ("one", "two"):
            run(
                dataclasses.replace(
                    base, method=method, output_dir=str(tmp_path / method / name)
                )
            )
        first = (tmp_path / method / "one" / "predictions.jsonl").read_bytes()
        second = (tmp_path / method / "two" / "predictions.jsonl").read_bytes()
        assert first == second

    rng = random.Random(321)
    for _ in range(20):
        graph, question = random_graph_and_question(rng, max_candidates=20)
        same_a = rank_candidates(Random(5), question, graph.triples, graph)
        same_b = rank_candidates(Random(5), question, graph.triples, graph)
        other = rank_candidates(Random(6), question, graph.triples, graph)
        assert same_a == same_b
        assert sorted((s.triple for s in same_a), key=repr) == sorted(
            (s.triple for s in other), key=repr
        )
    print("\nACCEPTANCE 6 determinism: PASS (byte-identical reruns)")


def test_criterion_07_baseline_ordering():
    entities = [Entity(f"Q{i}", f"node {i}") for i in range(5)]
    relations = [Relation("P19", "born in"), Relation("P20", "died in")]
    triples = [
        Triple("Q0", "P19", EntityRef("Q1")),
        Triple("Q1", "P20", EntityRef("Q2")),
        Triple("Q2", "P19", EntityRef("Q3")),
        Triple("Q3", "P19", EntityRef("Q4")),
    ]
    graph = build_graph(entities, relations, triples)
    ranked = rank_candidates(Popular(), "q", graph.triples, graph)
    assert [s.triple.relation for s in ranked] == ["P19", "P19", "P19", "P20"]

    rng = random.Random(54321)
    for _ in range(100):
        random_graph, question = random_graph_and_question(rng, max_candidates=25)
        candidates = random_graph.triples[:: rng.randint(1, 3)]
        for strategy in (Popular(), Random(rng.randint(0, 99))):
            result = rank_candidates(strategy, question, candidates, random_graph)
            assert {s.triple for s in result} <= set(candidates)
            assert len(result) == len(candidates)
    print("\nACCEPTANCE 7 baseline-ordering: PASS")


def test_criterion_08_hop_monotonicity():
    rng = random.Random(1357)
    for _ in range(100):
        graph, _question = random_graph_and_question(rng, max_candidates=30)
        entity_ids = list(graph.entities)
        seed_sets = [{entity_id} for entity_id in entity_ids]
        seed_sets += [
            set(rng.sample(entity_ids, rng.randint(0, min(4, len(entity_ids)))))
            for _ in range(5)
        ]
        for seeds in seed_sets:
            one_hop = neighborhood(graph, seeds, 1)
            two_hop = neighborhood(graph, seeds, 2)
            assert set(one_hop) <= set(two_hop)
    print("\nACCEPTANCE 8 hop-monotonicity: PASS (100 graphs)")


def test_criterion_09_truncation_monotonicity():
    rng = random.Random(2468)
    for _ in range(200):
        count = rng.randint(0, 15)
        ranked = [
            ScoredTriple(
                Triple("S", "r", Literal(str(i))),
                "(" + " ".join(rng.choices(WORDS, k=rng.randint(1, 6))) + ")",
                float(count - i),
                i + 1,
            )
            for i in range(count)
        ]
        smaller = rng.randint(3, 60)
        larger = rng.randint(smaller, 90)
        question = " ".join(rng.choices(WORDS, k=rng.randint(1, 5)))
        try:
            at_smaller = render_prompt(
                PromptSpec(max_input_tokens=smaller), ranked, question
            ).included_triples
        except PromptTooLongError:
            continue
        at_larger = render_prompt(
            PromptSpec(max_input_tokens=larger), ranked, question
        ).included_triples
        assert set(at_smaller) <= set(at_larger)
        assert at_smaller == tuple(ranked[: len(at_smaller)])
        assert at_larger == tuple(ranked[: len(at_larger)])
    print("\nACCEPTANCE 9 truncation-monotonicity: PASS (200 cases)")


def test_criterion_10_toy_benchmark_ordering(toy_dir, tmp_path):
    base = load_config(toy_dir / "config.json")
    started = time.monotonic()
    accuracy = {}
    for method in ("kaping", "random_knowledge", "no_knowledge"):
        config = dataclasses.replace(base, method=method, output_dir=str(tmp_path / method))
        accuracy[method] = run(config)["report"]["overall"]["accuracy"]
    elapsed = time.monotonic() - started
    assert accuracy["kaping"] > accuracy["random_knowledge"]
    assert accuracy["kaping"] > accuracy["no_knowledge"]
    assert accuracy["random_knowledge"] > accuracy["no_knowledge"]
    assert elapsed < 5.0
    print(
        "\nACCEPTANCE 10 toy-benchmark-ordering: PASS "
        f"(kaping={accuracy['kaping']:.2f} > random={accuracy['random_knowledge']:.2f}"
        f" > none={accuracy['no_knowledge']:.2f}, {elapsed:.2f}s)"
    )
