"""Dataset loading and the seen/unseen split protocol."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import FileIOError, InsufficientDocsError, MalformedRowError, SchemaError
from .model import Document, group_by_label

AGNEWS_LABELS = ("World", "Sports", "Business", "Sci/Tech")

DBPEDIA_LABELS = (
    "Company",
    "EducationalInstitution",
    "Artist",
    "Athlete",
    "OfficeHolder",
    "MeanOfTransportation",
    "Building",
    "NaturalPlace",
    "Village",
    "Animal",
    "Plant",
    "Album",
    "Film",
    "WrittenWork",
)


def _read_rows(path: str | Path) -> list[tuple[int, list[str]]]:
    try:
        with Path(path).open("r", encoding="utf-8", newline="") as handle:
            return [(line, row) for line, row in enumerate(csv.reader(handle), start=1) if row]
    except OSError as err:
        raise FileIOError(f"cannot read dataset {path}: {err}") from err


def _load_indexed_csv(path: str | Path, labels: Sequence[str]) -> list[Document]:
    """Shared loader for the class-index CSV layout (index, title, body...).

    A first row whose index column is not an integer is treated as a header
    and skipped; document ids number the data rows so files with and without
    a header load identically.
    """
    rows = _read_rows(path)
    documents: list[Document] = []
    for position, (line, row) in enumerate(rows):
        if position == 0:
            try:
                int(row[0])
            except ValueError:
                continue  # header row
        if len(row) < 2:
            raise MalformedRowError(line, f"expected at least 2 columns, got {len(row)}")
        try:
            index = int(row[0])
        except ValueError as err:
            raise MalformedRowError(line, f"class index {row[0]!r} is not an integer") from err
        if not 1 <= index <= len(labels):
            raise MalformedRowError(
                line, f"class index {index} outside 1..{len(labels)}"
            )
        text = " ".join(cell.strip() for cell in row[1:] if cell.strip())
        if not text:
            raise MalformedRowError(line, "empty document text")
        documents.append(
            Document(id=f"r{len(documents) + 1}", text=text, gold_label=labels[index - 1])
        )
    return documents


def load_agnews(path: str | Path) -> list[Document]:
    """Load the standard AG News CSV (class index 1-4, title, description);
    text is the title and description joined, labels mapped to
    World / Sports / Business / Sci/Tech.
    """
    return _load_indexed_csv(path, AGNEWS_LABELS)


def load_dbpedia(path: str | Path) -> list[Document]:
    """Load the standard DBpedia CSV (class index 1-14, title, abstract)."""
    return _load_indexed_csv(path, DBPEDIA_LABELS)


def load_generic_csv(path: str | Path) -> list[Document]:
    """Load a headered CSV with ``text`` and ``label`` columns, so private
    ticketing-style corpora run through the same harness.
    """
    try:
        with Path(path).open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            fields = [name.strip().lower() for name in reader.fieldnames or []]
            if "text" not in fields or "label" not in fields:
                raise SchemaError(
                    f"{path}: generic CSV requires 'text' and 'label' header columns"
                )
            key_map = {name.strip().lower(): name for name in reader.fieldnames or []}
            documents: list[Document] = []
            for line, row in enumerate(reader, start=2):
                text = (row.get(key_map["text"]) or "").strip()
                label = (row.get(key_map["label"]) or "").strip()
                if not text or not label:
                    raise MalformedRowError(line, "empty text or label")
                documents.append(
                    Document(id=f"r{len(documents) + 1}", text=text, gold_label=label)
                )
            return documents
    except OSError as err:
        raise FileIOError(f"cannot read dataset {path}: {err}") from err


@dataclass(frozen=True)
class SplitSet:
    """Disjoint per-class document buckets for one experiment."""

    seen_train: Mapping[str, tuple[Document, ...]]
    seen_validate: Mapping[str, tuple[Document, ...]]
    seen_test: Mapping[str, tuple[Document, ...]]
    unseen_test: Mapping[str, tuple[Document, ...]]
    unseen_bootstrap: Mapping[str, tuple[Document, ...]]


def split_seen_unseen(
    documents: Iterable[Document],
    *,
    seen_labels: Sequence[str],
    unseen_labels: Sequence[str],
    n_bootstrap: int,
    m_validate: int,
    test_per_class: int,
    seed: int,
) -> SplitSet:
    """Produce the disjoint seeded splits: per seen class n_bootstrap train,
    m_validate validation, and test_per_class test documents; per unseen
    class test_per_class test documents plus up to n_bootstrap exemplars
    (used only when the class is introduced with exemplars).

    Raises:
        InsufficientDocsError: when a class cannot fill its buckets.
    """
    grouped = group_by_label(documents)
    seen_train: dict[str, tuple[Document, ...]] = {}
    seen_validate: dict[str, tuple[Document, ...]] = {}
    seen_test: dict[str, tuple[Document, ...]] = {}
    unseen_test: dict[str, tuple[Document, ...]] = {}
    unseen_bootstrap: dict[str, tuple[Document, ...]] = {}

    for label in seen_labels:
        pool = list(grouped.get(label, []))
        needed = n_bootstrap + m_validate + test_per_class
        if len(pool) < needed:
            raise InsufficientDocsError(label, needed, len(pool))
        random.Random(f"{seed}:{label}").shuffle(pool)
        seen_train[label] = tuple(pool[:n_bootstrap])
        seen_validate[label] = tuple(pool[n_bootstrap : n_bootstrap + m_validate])
        seen_test[label] = tuple(
            pool[n_bootstrap + m_validate : n_bootstrap + m_validate + test_per_class]
        )
    for label in unseen_labels:
        pool = list(grouped.get(label, []))
        if len(pool) < test_per_class:
            raise InsufficientDocsError(label, test_per_class, len(pool))
        random.Random(f"{seed}:{label}").shuffle(pool)
        unseen_test[label] = tuple(pool[:test_per_class])
        unseen_bootstrap[label] = tuple(pool[test_per_class : test_per_class + n_bootstrap])
    return SplitSet(
        seen_train=seen_train,
        seen_validate=seen_validate,
        seen_test=seen_test,
        unseen_test=unseen_test,
        unseen_bootstrap=unseen_bootstrap,
    )
