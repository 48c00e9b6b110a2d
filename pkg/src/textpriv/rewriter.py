"""Privatized rewriting: prompt construction and the generation loop."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from hashlib import blake2b

import numpy as np

from .lm import LocalProvider, NgramLm, Vocabulary
from .mechanism import SamplerConfig, select_token

PROMPT_PREFIX = "Document: "
PROMPT_SUFFIX = " Paraphrase of Document: "

DEFAULT_MAX_NEW_TOKENS = 64


def build_prompt(text: str) -> str:
    return f"{PROMPT_PREFIX}{text}{PROMPT_SUFFIX}"


def derive_seed(seed: int, index: int) -> int:
    """Stable per-document seed, independent of processing order."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    digest = blake2b(index.to_bytes(8, "little"), digest_size=8).digest()
    return seed ^ int.from_bytes(digest, "little")


@dataclass(slots=True)
class RewriteRecord:
    index: int
    original: str
    rewritten: str
    strategy: str
    epsilon: float | None
    top_k: int | None
    seed: int
    # Sequence-level budget under basic composition: (tokens emitted) * epsilon.
    # Reported, not claimed as a guarantee; None when the strategy has no epsilon.
    composed_epsilon: float | None = None
    error: str | None = None
    prompt: str = ""
    token_ids: list[int] = field(default_factory=list)


def save_records(records: list[RewriteRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(asdict(rec), ensure_ascii=False) + "\n")


def load_records(path) -> list[RewriteRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(RewriteRecord(**json.loads(line)))
    return records


def generate_ids(
    text: str,
    provider,
    config: SamplerConfig,
    rng: np.random.Generator,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
) -> list[int]:
    """Sample token ids until EOS or the max_new_tokens cap.

    The terminating EOS is not included in the result; reserved ids that
    get sampled along the way are kept (decode drops them later) because
    each one still spent a draw of the budget.
    """
    if max_new_tokens < 1:
        raise ValueError(f"max_new_tokens must be >= 1, got {max_new_tokens}")
    context = provider.vocab.encode(build_prompt(text))
    generated: list[int] = []
    for _ in range(max_new_tokens):
        logits = provider.next_logits(context + generated)
        if logits.shape != (provider.vocab_size,):
            raise ValueError("provider returned logits of the wrong length")
        token_id = select_token(logits, config, rng)
        if token_id == Vocabulary.EOS_ID:
            break
        generated.append(token_id)
    return generated


def composed_epsilon(emitted: int, config: SamplerConfig) -> float | None:
    """Sequence-level epsilon under basic composition, None without an epsilon."""
    if emitted < 0:
        raise ValueError(f"emitted count must be non-negative, got {emitted}")
    if config.epsilon is None:
        return None
    return emitted * config.epsilon


def rewrite(
    text: str,
    provider,
    config: SamplerConfig,
    rng: np.random.Generator,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
) -> str:
    """Generate a paraphrase one sampled token at a time."""
    return provider.vocab.decode(generate_ids(text, provider, config, rng, max_new_tokens))


def rewrite_corpus(
    texts: list[str],
    provider,
    config: SamplerConfig,
    *,
    seed: int = 42,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    progress=None,
) -> list[RewriteRecord]:
    """Rewrite every text with its own derived RNG stream.

    `provider` is either a single provider shared by all documents, or a
    callable mapping one document's text to a provider for it.  Optional
    `progress` is called with (done, total) after each document.
    """
    records = []
    per_document = callable(provider)
    for index, text in enumerate(texts):
        rng = np.random.default_rng(derive_seed(seed, index))
        try:
            doc_provider = provider(text) if per_document else provider
            ids = generate_ids(text, doc_provider, config, rng, max_new_tokens)
            rewritten = doc_provider.vocab.decode(ids)
            composed = composed_epsilon(len(ids), config)
            error = None
        except Exception as exc:
            # One bad document must not sink the run; the record carries
            # the failure and callers decide what a partial run is worth.
            ids = []
            rewritten = ""
            composed = None
            error = str(exc) or type(exc).__name__
        records.append(
            RewriteRecord(
                index=index,
                original=text,
                rewritten=rewritten,
                strategy=config.strategy,
                epsilon=config.epsilon,
                top_k=config.top_k,
                seed=seed,
                composed_epsilon=composed,
                error=error,
                prompt=build_prompt(text),
                token_ids=ids,
            )
        )
        if progress is not None:
            progress(index + 1, len(texts))
    return records


class LocalProviderFactory:
    """Per-document conditioning for the toy model.

    An n-gram model has no encoder, so conditioning on the source
    document is done by fitting each document's model on its own
    prompt-plus-completion string.  The vocabulary is built once over
    the whole corpus (prompt words included) so every document sees the
    same id space and logits stay comparable across documents.
    """

    def __init__(self, texts, *, order: int = 3, alpha: float = 0.1):
        self.vocab = Vocabulary.from_corpus(build_prompt(t) for t in texts)
        self.order = order
        self.alpha = alpha

    def __call__(self, text: str) -> LocalProvider:
        lm = NgramLm(self.vocab, self.order, self.alpha).fit([build_prompt(text) + text])
        return LocalProvider(lm)
