from __future__ import annotations

import pytest

from helpers import class_vocab, keyword_documents
from tagcraft.datasets import (
    AGNEWS_LABELS,
    DBPEDIA_LABELS,
    load_agnews,
    load_dbpedia,
    load_generic_csv,
    split_seen_unseen,
)
from tagcraft.errors import FileIOError, InsufficientDocsError, MalformedRowError, SchemaError


def _write(tmp_path, name: str, content: str):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return path


# -- AG News ---------------------------------------------------------------------


def test_agnews_row_maps_index_to_label(tmp_path) -> None:
    path = _write(tmp_path, "ag.csv", '"3","Wall St. Bears","Short-sellers circle."\n')
    docs = load_agnews(path)
    assert len(docs) == 1
    assert docs[0].gold_label == "Business"
    assert docs[0].text == "Wall St. Bears Short-sellers circle."


def test_agnews_index_zero_is_malformed(tmp_path) -> None:
    path = _write(tmp_path, "ag.csv", '"0","title","body"\n')
    with pytest.raises(MalformedRowError) as exc:
        load_agnews(path)
    assert exc.value.line == 1


def test_agnews_quoted_commas_stay_one_field(tmp_path) -> None:
    path = _write(tmp_path, "ag.csv", '"2","One, two, three","And a, b."\n')
    docs = load_agnews(path)
    assert docs[0].gold_label == "Sports"
    assert docs[0].text == "One, two, three And a, b."


def test_agnews_all_four_labels(tmp_path) -> None:
    rows = "\n".join(f'"{i}","t{i}","d{i}"' for i in range(1, 5))
    docs = load_agnews(_write(tmp_path, "ag.csv", rows + "\n"))
    assert [d.gold_label for d in docs] == list(AGNEWS_LABELS)


def test_missing_file_is_io_failure(tmp_path) -> None:
    with pytest.raises(FileIOError):
        load_agnews(tmp_path / "absent.csv")


# -- DBpedia ---------------------------------------------------------------------


def test_dbpedia_highest_index_maps(tmp_path) -> None:
    path = _write(tmp_path, "db.csv", '"14","Some Book","An 1890 novel."\n')
    docs = load_dbpedia(path)
    assert docs[0].gold_label == "WrittenWork"
    assert len(DBPEDIA_LABELS) == 14


def test_dbpedia_index_out_of_range(tmp_path) -> None:
    path = _write(tmp_path, "db.csv", '"15","x","y"\n')
    with pytest.raises(MalformedRowError):
        load_dbpedia(path)


def test_header_detected_and_loads_identically(tmp_path) -> None:
    body = '"1","Acme Corp","A company."\n"7","Tall Tower","A building."\n'
    plain = load_dbpedia(_write(tmp_path, "plain.csv", body))
    headered = load_dbpedia(_write(tmp_path, "headered.csv", "class,title,abstract\n" + body))
    assert plain == headered


def test_nonnumeric_index_on_data_row_is_malformed(tmp_path) -> None:
    body = '"1","ok","row"\n"oops","bad","row"\n'
    with pytest.raises(MalformedRowError) as exc:
        load_dbpedia(_write(tmp_path, "bad.csv", body))
    assert exc.value.line == 2


# -- generic CSV -------------------------------------------------------------------


def test_generic_csv_requires_header(tmp_path) -> None:
    path = _write(tmp_path, "g.csv", "foo,bar\nx,y\n")
    with pytest.raises(SchemaError):
        load_generic_csv(path)


def test_generic_csv_loads_text_and_label(tmp_path) -> None:
    path = _write(tmp_path, "g.csv", "text,label\nhello world,Greeting\n")
    docs = load_generic_csv(path)
    assert docs[0].text == "hello world"
    assert docs[0].gold_label == "Greeting"


def test_generic_csv_empty_cell_is_malformed(tmp_path) -> None:
    path = _write(tmp_path, "g.csv", "text,label\n,Greeting\n")
    with pytest.raises(MalformedRowError):
        load_generic_csv(path)


# -- seen/unseen split ----------------------------------------------------------------


def _split(docs, seed=0, **kwargs):
    defaults = dict(
        seen_labels=["ClassA", "ClassB", "ClassC"],
        unseen_labels=["ClassD"],
        n_bootstrap=20,
        m_validate=25,
        test_per_class=100,
        seed=seed,
    )
    defaults.update(kwargs)
    return split_seen_unseen(docs, **defaults)


def test_split_exact_sizes_and_disjointness() -> None:
    docs = keyword_documents(class_vocab(4), per_class=160, seed=1)
    split = _split(docs)
    for label in ("ClassA", "ClassB", "ClassC"):
        assert len(split.seen_train[label]) == 20
        assert len(split.seen_validate[label]) == 25
        assert len(split.seen_test[label]) == 100
        ids = (
            {d.id for d in split.seen_train[label]}
            | {d.id for d in split.seen_validate[label]}
            | {d.id for d in split.seen_test[label]}
        )
        assert len(ids) == 145
    assert len(split.unseen_test["ClassD"]) == 100
    assert len(split.unseen_bootstrap["ClassD"]) == 20
    assert not (
        {d.id for d in split.unseen_test["ClassD"]}
        & {d.id for d in split.unseen_bootstrap["ClassD"]}
    )


def test_split_same_seed_is_identical() -> None:
    docs = keyword_documents(class_vocab(4), per_class=160, seed=1)
    assert _split(docs, seed=9) == _split(docs, seed=9)


def test_split_different_seed_differs() -> None:
    docs = keyword_documents(class_vocab(4), per_class=160, seed=1)
    assert _split(docs, seed=1) != _split(docs, seed=2)


def test_split_insufficient_docs_names_class_and_counts() -> None:
    docs = keyword_documents(class_vocab(4), per_class=100, seed=1)  # < 145 needed
    with pytest.raises(InsufficientDocsError) as exc:
        _split(docs)
    assert exc.value.needed == 145
    assert exc.value.available == 100


def test_split_unseen_bootstrap_is_best_effort() -> None:
    docs = keyword_documents(class_vocab(4), per_class=160, seed=1)
    docs = [d for d in docs if not (d.gold_label == "ClassD" and int(d.id.split("-")[1]) >= 105)]
    split = _split(docs)
    assert len(split.unseen_test["ClassD"]) == 100
    assert len(split.unseen_bootstrap["ClassD"]) == 5
