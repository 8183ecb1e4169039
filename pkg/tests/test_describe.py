from __future__ import annotations

import json

import pytest

from helpers import StubBackend, class_vocab, keyword_documents, make_taxonomy
from tagcraft import (
    Document,
    SamplePlan,
    SamplingStrategy,
    Stage,
    bootstrap_category,
    bootstrap_taxonomy,
    contrast_taxonomy,
    sample_bootstrap,
)
from tagcraft.errors import ContrastDroppedAllError, DescriptorParseError, NoDocumentsError


def _docs(n: int, text: str = "login failed again") -> list[Document]:
    return [Document(id=str(i), text=f"{text} {i}") for i in range(n)]


# -- sampling -------------------------------------------------------------------


def test_first_n_takes_prefix() -> None:
    docs = _docs(100)
    plan = SamplePlan(SamplingStrategy.FIRST_N, 20)
    assert sample_bootstrap(docs, plan) == docs[:20]


def test_sample_clamps_to_available() -> None:
    docs = _docs(10)
    plan = SamplePlan(SamplingStrategy.FIRST_N, 20)
    assert sample_bootstrap(docs, plan) == docs


def test_seeded_random_is_deterministic() -> None:
    docs = _docs(100)
    plan = SamplePlan(SamplingStrategy.SEEDED_RANDOM, 20, seed=7)
    first = sample_bootstrap(docs, plan)
    second = sample_bootstrap(docs, plan)
    assert first == second
    assert len(first) == 20
    assert len({d.id for d in first}) == 20


def test_sample_requires_documents() -> None:
    with pytest.raises(NoDocumentsError):
        sample_bootstrap([], SamplePlan(SamplingStrategy.FIRST_N, 5))


# -- bootstrap --------------------------------------------------------------------


def test_bootstrap_category_with_mock(mock_backend) -> None:
    docs = [Document(id=str(i), text="login password error") for i in range(20)]
    descriptor = bootstrap_category(docs, mock_backend)
    description = descriptor.topic_description.lower()
    assert "login" in description and "password" in description
    assert descriptor.topic_name


def test_bootstrap_single_sample_still_produces_descriptor(mock_backend) -> None:
    descriptor = bootstrap_category([Document(id="1", text="printer jam tray")], mock_backend)
    assert "printer" in descriptor.topic_description.lower()


def test_bootstrap_prose_only_backend_fails_after_retries() -> None:
    backend = StubBackend(completions=["I cannot comply."])
    with pytest.raises(DescriptorParseError):
        bootstrap_category(_docs(3), backend)
    assert len(backend.prompts) == 3


def test_bootstrap_taxonomy_returns_mapping(mock_backend) -> None:
    vocab = class_vocab(3)
    docs = keyword_documents(vocab, per_class=25, seed=3)
    plan = SamplePlan(SamplingStrategy.SEEDED_RANDOM, 20, seed=5)
    taxonomy, mapping = bootstrap_taxonomy(docs, list(vocab), plan, mock_backend)
    assert set(mapping) == set(vocab)
    assert set(mapping.values()) == set(taxonomy.names())
    for category in taxonomy.categories:
        assert category.history[0].stage is Stage.BOOTSTRAP


def test_bootstrap_taxonomy_suffixes_colliding_names() -> None:
    same = '{"topic_name": "Clone", "topic_description": "identical."}'
    backend = StubBackend(completions=[same, same])
    docs = [
        Document(id="a", text="x", gold_label="L1"),
        Document(id="b", text="y", gold_label="L2"),
    ]
    plan = SamplePlan(SamplingStrategy.FIRST_N, 1)
    taxonomy, mapping = bootstrap_taxonomy(docs, ["L1", "L2"], plan, backend)
    assert taxonomy.names() == ("Clone", "Clone_2")
    assert mapping == {"L1": "Clone", "L2": "Clone_2"}


def test_bootstrap_taxonomy_missing_label_raises(mock_backend) -> None:
    with pytest.raises(NoDocumentsError):
        bootstrap_taxonomy(
            _docs(3), ["Ghost"], SamplePlan(SamplingStrategy.FIRST_N, 1), mock_backend
        )


# -- contrast ---------------------------------------------------------------------


def test_contrast_rewrites_all_without_touching_names(mock_backend) -> None:
    taxonomy = make_taxonomy(
        [("Alpha", "Covers aqua1, aqua2."), ("Beta", "Covers brick1."), ("Gamma", "Covers cedar1.")]
    )
    result = contrast_taxonomy(taxonomy, mock_backend)
    assert result.names() == taxonomy.names()
    for category in result.categories:
        assert category.history[-1].stage is Stage.CONTRAST
        assert len(category.history) == 2
    assert "Beta" in result.categories[0].descriptor.topic_description


def test_contrast_requires_two_categories(mock_backend) -> None:
    taxonomy = make_taxonomy([("Solo", "only one")])
    with pytest.raises(ValueError):
        contrast_taxonomy(taxonomy, mock_backend)


def test_contrast_ignores_unknown_reply_names() -> None:
    reply = json.dumps(
        [
            {"topic_name": "Alpha", "topic_description": "rewritten alpha."},
            {"topic_name": "Intruder", "topic_description": "should be dropped."},
        ]
    )
    backend = StubBackend(completions=[reply])
    taxonomy = make_taxonomy([("Alpha", "a"), ("Beta", "b")])
    result = contrast_taxonomy(taxonomy, backend)
    assert result.names() == ("Alpha", "Beta")
    assert result.categories[0].descriptor.topic_description == "rewritten alpha."
    # Beta was absent from the reply and keeps its prior descriptor.
    assert result.categories[1].descriptor.topic_description == "b"
    assert len(result.categories[1].history) == 1


def test_contrast_matching_is_case_insensitive() -> None:
    reply = '{"topic_name": "alpha", "topic_description": "lowercase reply."}'
    backend = StubBackend(completions=[reply])
    taxonomy = make_taxonomy([("Alpha", "a"), ("Beta", "b")])
    result = contrast_taxonomy(taxonomy, backend)
    assert result.categories[0].name == "Alpha"
    assert result.categories[0].descriptor.topic_description == "lowercase reply."


def test_contrast_dropping_all_raises() -> None:
    backend = StubBackend(
        completions=['{"topic_name": "Nobody", "topic_description": "unknown."}']
    )
    taxonomy = make_taxonomy([("Alpha", "a"), ("Beta", "b")])
    with pytest.raises(ContrastDroppedAllError):
        contrast_taxonomy(taxonomy, backend)


def test_contrast_batches_large_taxonomies() -> None:
    names = [f"Cat_{i}" for i in range(25)]

    def echo_descriptors(request):
        from tagcraft.extraction import extract_descriptor_set

        return json.dumps(
            [
                {"topic_name": d.topic_name, "topic_description": d.topic_description + " v2"}
                for d in extract_descriptor_set(request.user_text)
            ]
        )

    backend = StubBackend(completions=[echo_descriptors])
    taxonomy = make_taxonomy([(n, f"about {n}") for n in names])
    result = contrast_taxonomy(taxonomy, backend, batch_size=12)
    assert len(backend.prompts) == 3  # 12 + 12 + 1
    for prompt in backend.prompts:
        assert f"All categories: {', '.join(names)}" in prompt
    assert result.names() == tuple(names)
    for category in result.categories:
        assert category.descriptor.topic_description.endswith(" v2")
        assert len(category.history) == 2
