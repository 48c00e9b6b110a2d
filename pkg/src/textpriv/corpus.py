"""Corpus loading, filtering, dataset variants, and a synthetic generator.

Documents carry the text plus the three attacked attributes (author,
gender, age) and a topic used for filtering.  Ages are attacked through
fixed bins, not raw years.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .lm import tokenize

UNKNOWN_TOPIC = "indUnk"
STUDENT_TOPIC = "Student"

# (exclusive low, inclusive high, label)
AGE_BINS = (
    (13, 23, "14-23"),
    (23, 24, "24"),
    (24, 26, "25-26"),
    (26, 33, "27-33"),
    (33, 48, "34-48"),
)


@dataclass(slots=True)
class LabeledDocument:
    text: str
    author: str
    gender: str
    age: int
    topic: str
    doc_id: str | None = None


def save_jsonl(docs: list[LabeledDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(asdict(doc), ensure_ascii=False) + "\n")


def load_jsonl(path, error_report: list | None = None) -> list[LabeledDocument]:
    """Parse a line-delimited corpus, tolerating a sprinkling of bad lines.

    Malformed lines are collected as (line number, message) pairs into
    error_report when given.  More than 1% malformed lines means the file
    itself is suspect, and that raises instead.
    """
    docs = []
    errors: list[tuple[int, str]] = []
    total = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                raw = json.loads(line)
                docs.append(
                    LabeledDocument(
                        text=raw["text"],
                        author=str(raw["author"]),
                        gender=raw["gender"],
                        age=int(raw["age"]),
                        topic=raw["topic"],
                        doc_id=raw.get("doc_id"),
                    )
                )
            except KeyError as exc:
                errors.append((lineno, f"missing field {exc}"))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                errors.append((lineno, str(exc)))
    if errors and len(errors) > 0.01 * total:
        lineno, message = errors[0]
        raise ValueError(
            f"{path}: {len(errors)} of {total} lines are malformed "
            f"(first at line {lineno}: {message})"
        )
    if error_report is not None:
        error_report.extend(errors)
    return docs


def bin_age(age: int) -> str:
    for low, high, label in AGE_BINS:
        if low < age <= high:
            return label
    raise ValueError(f"age {age} is outside the supported range (13, 48]")


def top_by_count(values, n: int) -> list:
    """The n most frequent values; ties go to the smaller string."""
    counts = Counter(str(v) for v in values)
    ranked = sorted(counts, key=lambda v: (-counts[v], v))
    return ranked[:n]


def filter_pipeline(
    docs: list[LabeledDocument], *, top_topics: int = 15, max_tokens: int = 256
) -> tuple[list[LabeledDocument], dict]:
    """Four-stage cleanup; returns survivors plus per-stage counts.

    1. drop the unknown-topic marker, 2. drop students, 3. keep only the
    top_topics most frequent remaining topics, 4. drop documents longer
    than max_tokens under the shared tokenizer.
    """
    stats = {"input": len(docs)}
    docs = [d for d in docs if d.topic != UNKNOWN_TOPIC]
    stats["after_unknown_topic"] = len(docs)
    docs = [d for d in docs if d.topic != STUDENT_TOPIC]
    stats["after_student"] = len(docs)
    keep = set(top_by_count((d.topic for d in docs), top_topics))
    docs = [d for d in docs if d.topic in keep]
    stats["after_top_topics"] = len(docs)
    docs = [d for d in docs if len(tokenize(d.text)) <= max_tokens]
    stats["after_length"] = len(docs)
    return docs, stats


def select_author10(docs: list[LabeledDocument], n: int = 10) -> list[LabeledDocument]:
    """All documents of the n most prolific authors, original order kept."""
    keep = set(top_by_count((d.author for d in docs), n))
    return [d for d in docs if d.author in keep]


def select_topic10(
    docs: list[LabeledDocument], n: int = 10, sample_ratio: float = 0.1, seed: int = 42
) -> list[LabeledDocument]:
    """A seeded uniform sample from the n most frequent topics."""
    if not 0 < sample_ratio <= 1:
        raise ValueError(f"sample_ratio must be in (0, 1], got {sample_ratio}")
    keep = set(top_by_count((d.topic for d in docs), n))
    pool = [d for d in docs if d.topic in keep]
    take = int(sample_ratio * len(pool))
    idx = np.random.default_rng(seed).permutation(len(pool))[:take]
    idx.sort()
    return [pool[i] for i in idx]


def split_indices(n: int, ratio: float = 0.9, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Shuffled train/holdout index split; the first int(ratio*n) train."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(ratio * n)
    return perm[:cut], perm[cut:]


def split_docs(
    docs: list[LabeledDocument], ratio: float = 0.9, seed: int = 42
) -> tuple[list[LabeledDocument], list[LabeledDocument]]:
    train_idx, val_idx = split_indices(len(docs), ratio, seed)
    return [docs[i] for i in train_idx], [docs[i] for i in val_idx]


def generate_synthetic(
    n_docs: int, n_authors: int, signal_strength: float, seed: int = 42
) -> list[LabeledDocument]:
    """Documents mixing a shared vocabulary with per-author words.

    Each token comes from the author's private 15-word pool with
    probability signal_strength, otherwise from a 60-word shared pool.
    Authors rotate round-robin so classes stay balanced; each author has
    a fixed gender, age, and topic.
    """
    if n_docs < 1:
        raise ValueError(f"n_docs must be >= 1, got {n_docs}")
    if n_authors < 2:
        raise ValueError(f"n_authors must be >= 2, got {n_authors}")
    if not 0 <= signal_strength <= 1:
        raise ValueError(f"signal_strength must be in [0, 1], got {signal_strength}")
    shared = [f"w{i:02d}" for i in range(60)]
    private = [[f"a{a}x{j}" for j in range(15)] for a in range(n_authors)]
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_docs):
        a = i % n_authors
        length = int(rng.integers(30, 61))
        words = []
        for _ in range(length):
            if rng.random() < signal_strength:
                words.append(private[a][int(rng.integers(len(private[a])))])
            else:
                words.append(shared[int(rng.integers(len(shared)))])
        docs.append(
            LabeledDocument(
                text=" ".join(words) + ".",
                author=f"auth{a}",
                gender="female" if a % 2 else "male",
                age=14 + (7 * a) % 35,
                topic=f"topic{a % 5}",
                doc_id=f"syn{i:04d}",
            )
        )
    return docs
