"""Attribute-inference attacks and the privacy/utility gain score.

The attacker is a logistic regression over TF-IDF-weighted character
n-gram counts.  Two threat models: a static attacker trains on original
text and is evaluated on privatized text; an adaptive attacker trains on
privatized text as well, and its score is averaged over several
train/holdout splits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sklearn.feature_extraction.text import HashingVectorizer, TfidfTransformer
from sklearn.linear_model import LogisticRegression

from .corpus import split_indices

N_FEATURES = 2**18


def featurize(texts: list[str]):
    """Sparse counts of character 3- to 5-grams, hashed into 2^18 columns."""
    vectorizer = HashingVectorizer(
        analyzer="char",
        ngram_range=(3, 5),
        n_features=N_FEATURES,
        alternate_sign=False,
        norm=None,
    )
    return vectorizer.transform(texts)


@dataclass
class AttackModel:
    """TF-IDF weighting fit on the training split, then logistic regression."""

    max_iter: int = 1000
    _tfidf: TfidfTransformer = field(init=False, repr=False)
    _clf: LogisticRegression = field(init=False, repr=False)

    def fit(self, texts: list[str], labels: list[str]) -> "AttackModel":
        if len(texts) != len(labels):
            raise ValueError(f"got {len(texts)} texts but {len(labels)} labels")
        if len(set(labels)) < 2:
            raise ValueError("need at least two classes to train an attacker")
        counts = featurize(texts)
        self._tfidf = TfidfTransformer().fit(counts)
        self._clf = LogisticRegression(max_iter=self.max_iter)
        self._clf.fit(self._tfidf.transform(counts), labels)
        return self

    def predict(self, texts: list[str]) -> list[str]:
        return list(self._clf.predict(self._tfidf.transform(featurize(texts))))


def macro_f1(y_true: list[str], y_pred: list[str]) -> float:
    """Unweighted mean F1 over the classes present in y_true.

    A class the attacker never predicts correctly and never predicts at
    all contributes 0, which keeps collapsed attackers at a low score
    instead of an undefined one.
    """
    if len(y_true) != len(y_pred):
        raise ValueError(f"got {len(y_true)} labels but {len(y_pred)} predictions")
    if not y_true:
        raise ValueError("cannot score an empty evaluation set")
    scores = []
    for cls in sorted(set(y_true)):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return sum(scores) / len(scores)


def static_attack(
    train_texts: list[str],
    train_labels: list[str],
    eval_texts: list[str],
    eval_labels: list[str],
) -> float:
    model = AttackModel().fit(train_texts, train_labels)
    return macro_f1(eval_labels, model.predict(eval_texts))


def adaptive_attack_runs(
    texts: list[str],
    labels: list[str],
    *,
    ratio: float = 0.9,
    seed: int = 42,
    runs: int = 3,
) -> list[float]:
    """One macro F1 per split: run r uses split seed `seed + r`."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if len(texts) != len(labels):
        raise ValueError(f"got {len(texts)} texts but {len(labels)} labels")
    scores = []
    for r in range(runs):
        train_idx, val_idx = split_indices(len(texts), ratio, seed + r)
        scores.append(
            static_attack(
                [texts[i] for i in train_idx],
                [labels[i] for i in train_idx],
                [texts[i] for i in val_idx],
                [labels[i] for i in val_idx],
            )
        )
    return scores


def adaptive_attack(
    texts: list[str],
    labels: list[str],
    *,
    ratio: float = 0.9,
    seed: int = 42,
    runs: int = 3,
) -> float:
    """Train and evaluate on the same (privatized) corpus, averaged over
    `runs` different splits."""
    scores = adaptive_attack_runs(texts, labels, ratio=ratio, seed=seed, runs=runs)
    return sum(scores) / len(scores)


def relative_gain(
    cosine_priv: float, f1_priv: float, f1_base: float, cosine_base: float = 1.0
) -> float:
    """Utility retained minus privacy lost, both relative to the baseline.

    The utility baseline is the original text against itself, so
    cosine_base is 1 by construction and kept only as an explicit knob.
    """
    if cosine_base <= 0:
        raise ValueError(f"cosine_base must be positive, got {cosine_base}")
    if f1_base <= 0:
        raise ValueError(f"f1_base must be positive, got {f1_base}")
    return cosine_priv / cosine_base - f1_priv / f1_base


def cumulative_gain(gains) -> float:
    gains = list(gains)
    if not gains:
        raise ValueError("no gains to accumulate")
    return float(sum(gains))
