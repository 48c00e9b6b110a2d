"""Utility metrics: lexical overlap, semantic similarity, fluency.

All text-facing functions run the shared tokenizer first, so casing and
spacing differences between an original and its rewrite do not count
against similarity.
"""

from __future__ import annotations

import math
from collections import Counter
from hashlib import blake2b

import numpy as np

from .lm import NgramLm, Vocabulary, tokenize

EMBED_DIM = 512


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU over n-gram orders 1..max_n.

    A precision whose numerator is zero, or whose denominator is zero
    because the candidate is shorter than n, is replaced by
    1 / (2 * candidate_length).  Brevity penalty applies only when the
    candidate is strictly shorter than the reference.  An empty candidate
    scores 0.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        return 0.0
    smoothed = 1.0 / (2.0 * len(cand))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        total = len(cand) - n + 1
        matched = 0
        if total > 0 and len(ref) >= n:
            ref_counts = _ngrams(ref, n)
            matched = sum(min(c, ref_counts[g]) for g, c in _ngrams(cand, n).items())
        precision = matched / total if matched else smoothed
        log_sum += math.log(precision)
    score = math.exp(log_sum / max_n)
    if len(cand) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(cand))
    return score


def _bucket(gram: tuple[str, ...]) -> int:
    digest = blake2b(" ".join(gram).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % EMBED_DIM


def embed(text: str) -> np.ndarray:
    """L2-normalized bag of hashed word unigrams and bigrams.

    Deterministic across processes (keyed on blake2b, not the salted
    builtin hash).  Empty or punctuation-free-and-wordless text maps to
    the zero vector.
    """
    tokens = tokenize(text)
    vec = np.zeros(EMBED_DIM)
    for n in (1, 2):
        for gram, count in _ngrams(tokens, n).items():
            vec[_bucket(gram)] += count
    norm = np.linalg.norm(vec)
    if norm == 0:
        return vec
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero whenever either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_texts(original: str, rewritten: str) -> float:
    return cosine(embed(original), embed(rewritten))


def perplexity(text: str, lm: NgramLm) -> float:
    """exp of the mean negative log probability, EOS step included."""
    ids = lm.vocab.encode(text)
    if not ids:
        raise ValueError("cannot score an empty tokenization")
    total = 0.0
    context: list[int] = []
    for target in ids + [Vocabulary.EOS_ID]:
        total += float(lm.next_logits(context)[target])
        context.append(target)
    return math.exp(-total / (len(ids) + 1))


def utility_report(originals: list[str], rewrites: list[str], lm: NgramLm | None = None) -> dict:
    """Per-pair and mean utility numbers for aligned original/rewrite lists.

    Perplexity is scored on the rewrites only; a rewrite with an empty
    tokenization gets None and is left out of the mean.
    """
    if len(originals) != len(rewrites):
        raise ValueError(f"got {len(originals)} originals but {len(rewrites)} rewrites")
    if not originals:
        raise ValueError("nothing to score")
    cs = [cosine_texts(o, r) for o, r in zip(originals, rewrites)]
    bl = [bleu(r, o) for o, r in zip(originals, rewrites)]
    report = {
        "cosine": cs,
        "bleu": bl,
        "cosine_mean": float(np.mean(cs)),
        "bleu_mean": float(np.mean(bl)),
        # Similarity comes from one embedder here; the field exists so
        # reports stay comparable if an ensemble mean lands later.
        "models_averaged": 1,
    }
    if lm is not None:
        ppl = [perplexity(r, lm) if tokenize(r) else None for r in rewrites]
        scored = [p for p in ppl if p is not None]
        report["perplexity"] = ppl
        report["perplexity_mean"] = float(np.mean(scored)) if scored else None
    return report
