import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textpriv.lm import (
    FixtureProvider,
    LocalProvider,
    NgramLm,
    Vocabulary,
    detokenize,
    tokenize,
)

words = st.lists(st.sampled_from(["a", "b", "c", "dog", "run"]), min_size=1, max_size=8)


def test_tokenize_hand_cases():
    assert tokenize("Hello, world!") == ["hello", ",", "world", "!"]
    assert tokenize("it's FINE...") == ["it", "'", "s", "fine", ".", ".", "."]
    assert tokenize("  ") == []
    assert tokenize("a2x8 w03") == ["a2x8", "w03"]


def test_detokenize_joins_with_single_spaces():
    assert detokenize(["a", ",", "b"]) == "a , b"
    assert detokenize([]) == ""


def test_vocabulary_reserved_ids():
    vocab = Vocabulary(["b", "a"])
    assert Vocabulary.BOS_ID == 0
    assert Vocabulary.EOS_ID == 1
    assert Vocabulary.UNK_ID == 2
    assert vocab.token_for(0) == "<bos>"
    assert vocab.id_for("b") == 3
    assert vocab.id_for("a") == 4
    assert len(vocab) == 5


def test_vocabulary_from_corpus_sorts_tokens():
    vocab = Vocabulary.from_corpus(["b a", "c a"])
    assert [vocab.token_for(i) for i in (3, 4, 5)] == ["a", "b", "c"]


def test_vocabulary_unknown_maps_to_unk():
    vocab = Vocabulary(["a"])
    assert vocab.id_for("zzz") == Vocabulary.UNK_ID
    assert vocab.encode("a zzz") == [3, 2]


def test_vocabulary_decode_drops_reserved():
    vocab = Vocabulary(["a", "b"])
    assert vocab.decode([0, 3, 2, 4, 1]) == "a b"


def test_vocabulary_rejects_bad_ids_and_tokens():
    vocab = Vocabulary(["a"])
    with pytest.raises(ValueError):
        vocab.token_for(4)
    with pytest.raises(ValueError):
        vocab.token_for(-1)
    with pytest.raises(ValueError):
        Vocabulary(["<eos>"])
    with pytest.raises(ValueError):
        Vocabulary(["a", "a"])


def test_vocabulary_manifest_round_trip(tmp_path):
    vocab = Vocabulary.from_corpus(["the cat sat", "a cat ran"])
    path = tmp_path / "vocab.json"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert len(loaded) == len(vocab)
    assert all(loaded.token_for(i) == vocab.token_for(i) for i in range(len(vocab)))


def test_vocabulary_manifest_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(["x", "y"]))
    with pytest.raises(ValueError):
        Vocabulary.load(path)


def test_bigram_hand_counts():
    # Corpus "a b" twice, order 2, alpha 1.  Vocabulary is 5 ids
    # (three reserved plus a, b).  Context [a] was seen twice, always
    # followed by b: p(b|a) = (2+1)/(2+5) = 3/7.
    vocab = Vocabulary.from_corpus(["a b"])
    lm = NgramLm(vocab, order=2, alpha=1.0).fit(["a b", "a b"])
    a, b = vocab.id_for("a"), vocab.id_for("b")
    logits = lm.next_logits([a])
    assert logits[b] == pytest.approx(math.log(3 / 7), abs=1e-12)
    assert logits[a] == pytest.approx(math.log(1 / 7), abs=1e-12)
    # After b the only observed continuation is end-of-sequence.
    assert lm.next_logits([b])[Vocabulary.EOS_ID] == pytest.approx(math.log(3 / 7), abs=1e-12)
    # BOS context: both sequences started with a.
    assert lm.next_logits([])[a] == pytest.approx(math.log(3 / 7), abs=1e-12)


def test_unigram_ignores_context():
    vocab = Vocabulary.from_corpus(["a b"])
    lm = NgramLm(vocab, order=1, alpha=0.5).fit(["a b"])
    # Totals: a once, b once, eos once; V = 5.
    expected = math.log((1 + 0.5) / (3 + 0.5 * 5))
    assert lm.next_logits([])[vocab.id_for("a")] == pytest.approx(expected, abs=1e-12)
    assert np.allclose(lm.next_logits([]), lm.next_logits([vocab.id_for("b")]))


def test_trigram_pads_with_bos():
    vocab = Vocabulary.from_corpus(["a"])
    lm = NgramLm(vocab, order=3, alpha=0.1).fit(["a"])
    a = vocab.id_for("a")
    # Context () means (BOS, BOS), whose only observed successor is a.
    assert np.argmax(lm.next_logits([])) == a
    assert np.argmax(lm.next_logits([a])) == Vocabulary.EOS_ID


def test_context_longer_than_order_uses_the_tail():
    vocab = Vocabulary.from_corpus(["x y z"])
    lm = NgramLm(vocab, order=2, alpha=0.1).fit(["x y z"])
    y = vocab.id_for("y")
    long_ctx = lm.next_logits([vocab.id_for("x"), y])
    short_ctx = lm.next_logits([y])
    assert np.array_equal(long_ctx, short_ctx)


@given(texts=st.lists(words.map(" ".join), min_size=1, max_size=4), order=st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_next_logits_normalize(texts, order):
    vocab = Vocabulary.from_corpus(texts)
    lm = NgramLm(vocab, order=order, alpha=0.1).fit(texts)
    ids = vocab.encode(texts[0])
    for cut in range(len(ids) + 1):
        logits = lm.next_logits(ids[:cut])
        assert abs(np.exp(logits).sum() - 1.0) < 1e-9


def test_ngram_validation():
    vocab = Vocabulary(["a"])
    with pytest.raises(ValueError):
        NgramLm(vocab, order=0)
    with pytest.raises(ValueError):
        NgramLm(vocab, alpha=0.0)
    with pytest.raises(ValueError):
        NgramLm(vocab).next_logits([])
    lm = NgramLm(vocab).fit(["a"])
    with pytest.raises(ValueError):
        lm.next_logits([99])


def test_local_provider_passthrough():
    vocab = Vocabulary.from_corpus(["a b"])
    lm = NgramLm(vocab, order=2).fit(["a b"])
    provider = LocalProvider(lm)
    assert provider.vocab_size == len(vocab)
    assert np.array_equal(provider.next_logits([3]), lm.next_logits([3]))


def test_fixture_provider_lookup(tmp_path):
    layout = {
        "vocab": ["x", "y"],
        "default_logits": [-9.0, -1.0, -9.0, -2.0, -3.0],
        "table": {"3 4": [-9.0, -8.0, -9.0, -0.5, -1.5]},
    }
    path = tmp_path / "fix.json"
    path.write_text(json.dumps(layout))
    provider = FixtureProvider.from_file(path)
    assert provider.vocab_size == 5
    assert provider.next_logits([3, 4])[3] == -0.5
    # Unknown context falls back to the default row.
    assert provider.next_logits([4, 3])[1] == -1.0
    assert provider.next_logits([])[1] == -1.0


def test_fixture_provider_rejects_bad_rows():
    vocab = Vocabulary(["x"])
    with pytest.raises(ValueError):
        FixtureProvider(vocab, [0.0, 0.0], {})
    with pytest.raises(ValueError):
        FixtureProvider(vocab, [0.0] * 4, {"1": [0.0]})
