"""Logit sources the bridge can serve: canned fixtures or a seq2seq model.

Both kinds answer next_logits(context) where context is a list of token
ids or a raw string, and expose vocab_size.  Ids 0/1/2 are reserved for
BOS/EOS/UNK and real tokens start at id 3; a string context is lowercased
and split into words and single punctuation marks before lookup.
"""

from __future__ import annotations

import json
import re

RESERVED = ("<bos>", "<eos>", "<unk>")
BOS_ID, EOS_ID, UNK_ID = 0, 1, 2

TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def write_manifest(tokens: list[str], path) -> None:
    """Token table, one entry per id, reserved prefix included."""
    if list(tokens[: len(RESERVED)]) != list(RESERVED):
        raise ValueError("manifest must start with the reserved tokens")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(tokens), fh, ensure_ascii=False)


class EchoProvider:
    """Replay canned logits keyed by the full context id sequence.

    Fixture layout (JSON):
        {"vocab": [...non-reserved tokens...],
         "default_logits": [vocab_size floats],
         "table": {"<space-joined context ids>": [...], ...}}
    Contexts absent from the table fall back to default_logits.
    """

    def __init__(self, layout: dict):
        tokens = layout["vocab"]
        if any(t in RESERVED for t in tokens):
            raise ValueError("fixture vocab must not repeat the reserved tokens")
        self._tokens = list(tokens)
        self._ids = {tok: i + len(RESERVED) for i, tok in enumerate(self._tokens)}
        size = len(RESERVED) + len(self._tokens)
        self._default = [float(v) for v in layout["default_logits"]]
        if len(self._default) != size:
            raise ValueError("default_logits length does not match the vocabulary")
        self._table = {}
        for key, row in layout.get("table", {}).items():
            row = [float(v) for v in row]
            if len(row) != size:
                raise ValueError(f"logits row for context {key!r} does not match the vocabulary")
            self._table[key] = row

    @classmethod
    def from_file(cls, path) -> "EchoProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @property
    def vocab_size(self) -> int:
        return len(RESERVED) + len(self._tokens)

    def manifest_tokens(self) -> list[str]:
        return list(RESERVED) + self._tokens

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(tok, UNK_ID) for tok in TOKEN_RE.findall(text.lower())]

    def next_logits(self, context) -> list[float]:
        if isinstance(context, str):
            context = self.encode(context)
        key = " ".join(str(int(i)) for i in context)
        return list(self._table.get(key, self._default))


class ModelProvider:
    """Raw final-position logits from a seq2seq checkpoint.

    A string context is the encoder input with an empty decoder prefix.
    An id-list context is split at the first EOS id: everything up to and
    including it feeds the encoder, the rest becomes the decoder prefix
    after the model's decoder start token.  Values are returned as plain
    floats; no clipping, scaling, or sampling happens on this side.
    """

    def __init__(self, checkpoint: str):
        # Imported lazily so echo-only deployments need no ML stack.
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint)
        self.model.eval()

    @property
    def vocab_size(self) -> int:
        return int(self.model.config.vocab_size)

    def _split_context(self, ids: list[int]) -> tuple[list[int], list[int]]:
        eos = self.tokenizer.eos_token_id
        start = self.model.config.decoder_start_token_id
        if eos in ids:
            cut = ids.index(eos) + 1
            return ids[:cut], [start] + ids[cut:]
        return ids, [start]

    def next_logits(self, context) -> list[float]:
        torch = self._torch
        if isinstance(context, str):
            encoder_ids = self.tokenizer(context).input_ids
            decoder_ids = [self.model.config.decoder_start_token_id]
        else:
            encoder_ids, decoder_ids = self._split_context([int(i) for i in context])
        if not encoder_ids:
            raise ValueError("empty encoder context")
        with torch.no_grad():
            out = self.model(
                input_ids=torch.tensor([encoder_ids]),
                decoder_input_ids=torch.tensor([decoder_ids]),
            )
        return [float(v) for v in out.logits[0, -1]]
