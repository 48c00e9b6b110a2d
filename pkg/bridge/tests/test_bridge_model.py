"""Smoke test for the seq2seq-backed provider.

Runs only when the optional model stack and a cached checkpoint are both
available; otherwise the whole module is skipped.  The contract under
test is small on purpose: logits come back as plain floats, one per
vocabulary entry, and id-list contexts split into encoder and decoder
halves at the first EOS.
"""

import os

import pytest

pytest.importorskip("torch")
pytest.importorskip("transformers")

CHECKPOINT = os.environ.get("BRIDGE_TEST_CHECKPOINT", "google/flan-t5-small")


@pytest.fixture(scope="module")
def provider():
    from logits_bridge.providers import ModelProvider

    try:
        return ModelProvider(CHECKPOINT)
    except Exception as exc:
        pytest.skip(f"checkpoint {CHECKPOINT} unavailable: {exc}")


def test_string_context_logits_shape(provider):
    logits = provider.next_logits("hello world")
    assert len(logits) == provider.vocab_size
    assert all(isinstance(v, float) for v in logits[:5])


def test_id_context_splits_at_eos(provider):
    eos = provider.tokenizer.eos_token_id
    encoder, decoder = provider._split_context([5, 6, eos, 9])
    assert encoder == [5, 6, eos]
    assert decoder[0] == provider.model.config.decoder_start_token_id
    assert decoder[1:] == [9]


def test_empty_encoder_context_rejected(provider):
    with pytest.raises(ValueError):
        provider.next_logits("")
