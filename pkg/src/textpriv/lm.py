"""Toy word-level n-gram language model and the logits-provider contract.

A provider is anything with a `vocab` (Vocabulary), a `vocab_size`, and a
`next_logits(context_ids) -> np.ndarray` method returning one float per
vocabulary id.  The rewriter only talks to providers, so the local n-gram
model, a canned fixture, and a remote model server are interchangeable.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict

import numpy as np

TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased words and single punctuation marks, in order."""
    return TOKEN_RE.findall(text.lower())


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)


class Vocabulary:
    """Token <-> id table with three reserved ids.

    Id 0 pads contexts on the left (BOS), id 1 terminates sequences (EOS),
    id 2 stands in for out-of-vocabulary tokens (UNK).  Real tokens start
    at id 3.
    """

    BOS_ID = 0
    EOS_ID = 1
    UNK_ID = 2
    RESERVED = ("<bos>", "<eos>", "<unk>")

    def __init__(self, tokens: list[str]):
        for tok in tokens:
            if tok in self.RESERVED:
                raise ValueError(f"token {tok!r} collides with a reserved token")
        self._tokens = list(self.RESERVED) + list(tokens)
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._ids) != len(self._tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @classmethod
    def from_corpus(cls, texts) -> "Vocabulary":
        """Reserved ids followed by the sorted unique tokens of the corpus."""
        seen = set()
        for text in texts:
            seen.update(tokenize(text))
        return cls(sorted(seen))

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_for(self, token: str) -> int:
        return self._ids.get(token, self.UNK_ID)

    def token_for(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._tokens):
            raise ValueError(f"token id {token_id} out of range for vocabulary of {len(self)}")
        return self._tokens[token_id]

    def encode(self, text: str) -> list[int]:
        return [self.id_for(tok) for tok in tokenize(text)]

    def decode(self, token_ids: list[int]) -> str:
        """Space-joined tokens; reserved ids are dropped, not rendered."""
        kept = [self.token_for(i) for i in token_ids if i >= len(self.RESERVED)]
        return detokenize(kept)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self._tokens, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = json.load(fh)
        if not isinstance(tokens, list) or tokens[: len(cls.RESERVED)] != list(cls.RESERVED):
            raise ValueError(f"{path} is not a vocabulary manifest")
        return cls(tokens[len(cls.RESERVED) :])


class NgramLm:
    """Order-n model with add-alpha smoothing over the full vocabulary.

    next_logits returns exact log probabilities:
        log (count(ctx, i) + alpha) / (total(ctx) + alpha * V)
    Contexts are the last n-1 ids, padded on the left with BOS; EOS is
    counted as a regular target at the end of every training sequence.
    """

    def __init__(self, vocab: Vocabulary, order: int = 3, alpha: float = 0.1):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.vocab = vocab
        self.order = order
        self.alpha = alpha
        self._counts: dict[tuple[int, ...], dict[int, int]] = {}
        self._totals: dict[tuple[int, ...], int] = {}
        self._fitted = False

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def fit(self, texts) -> "NgramLm":
        counts: dict[tuple[int, ...], dict[int, int]] = defaultdict(lambda: defaultdict(int))
        pad = [Vocabulary.BOS_ID] * (self.order - 1)
        for text in texts:
            seq = pad + self.vocab.encode(text) + [Vocabulary.EOS_ID]
            for t in range(self.order - 1, len(seq)):
                ctx = tuple(seq[t - self.order + 1 : t])
                counts[ctx][seq[t]] += 1
        self._counts = {ctx: dict(succ) for ctx, succ in counts.items()}
        self._totals = {ctx: sum(succ.values()) for ctx, succ in self._counts.items()}
        self._fitted = True
        return self

    def _context_key(self, context_ids) -> tuple[int, ...]:
        ids = list(context_ids)
        for i in ids:
            if not 0 <= i < self.vocab_size:
                raise ValueError(f"context id {i} out of range for vocabulary of {self.vocab_size}")
        if self.order == 1:
            return ()
        padded = [Vocabulary.BOS_ID] * (self.order - 1) + ids
        return tuple(padded[-(self.order - 1) :])

    def next_logits(self, context_ids) -> np.ndarray:
        if not self._fitted:
            raise ValueError("model is not fitted")
        ctx = self._context_key(context_ids)
        vec = np.full(self.vocab_size, self.alpha)
        for tid, c in self._counts.get(ctx, {}).items():
            vec[tid] += c
        total = self._totals.get(ctx, 0) + self.alpha * self.vocab_size
        return np.log(vec / total)


class LocalProvider:
    """Serve logits straight from an in-process NgramLm."""

    def __init__(self, lm: NgramLm):
        self.lm = lm
        self.vocab = lm.vocab

    @property
    def vocab_size(self) -> int:
        return self.lm.vocab_size

    def next_logits(self, context_ids) -> np.ndarray:
        return self.lm.next_logits(context_ids)


class FixtureProvider:
    """Canned logits keyed by the full context, for tests and offline runs.

    Fixture layout (JSON):
        {"vocab": [...non-reserved tokens...],
         "default_logits": [v floats],
         "table": {"<space-joined context ids>": [v floats], ...}}
    Unknown contexts fall back to default_logits.
    """

    def __init__(self, vocab: Vocabulary, default_logits, table: dict[str, list[float]]):
        self.vocab = vocab
        self._default = np.asarray(default_logits, dtype=np.float64)
        if self._default.shape != (len(vocab),):
            raise ValueError("default_logits length does not match the vocabulary")
        self._table = {}
        for key, row in table.items():
            arr = np.asarray(row, dtype=np.float64)
            if arr.shape != (len(vocab),):
                raise ValueError(f"logits row for context {key!r} does not match the vocabulary")
            self._table[key] = arr

    @classmethod
    def from_file(cls, path) -> "FixtureProvider":
        with open(path, encoding="utf-8") as fh:
            layout = json.load(fh)
        vocab = Vocabulary(layout["vocab"])
        return cls(vocab, layout["default_logits"], layout.get("table", {}))

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @staticmethod
    def context_key(context_ids) -> str:
        return " ".join(str(int(i)) for i in context_ids)

    def next_logits(self, context_ids) -> np.ndarray:
        row = self._table.get(self.context_key(context_ids), self._default)
        return row.copy()
