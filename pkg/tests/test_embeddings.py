import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtagger.corpus import Sentence, Token
from qtagger.embeddings import (EmbeddingTable, ngram_average, sentence_windows,
                                validate_window, window_indices)


def make_table(words, dim=4, seed=0):
    return EmbeddingTable(words, dim=dim, rng_seed=seed)


def sentence_of(words):
    return Sentence(tuple(Token(w, 0) for w in words))


def test_embed_known_word_has_dim():
    t = make_table(["alpha", "beta"], dim=128)
    assert t.embed("alpha").shape == (128,)


def test_embed_unknown_word_uses_unk_vector():
    t = make_table(["alpha"])
    assert np.array_equal(t.embed("zzz"), t.unk_vector)


def test_embed_is_deterministic():
    t = make_table(["alpha"])
    assert np.array_equal(t.embed("alpha"), t.embed("alpha"))
    t2 = make_table(["alpha"])
    assert np.array_equal(t.matrix, t2.matrix)


def test_embed_is_case_insensitive():
    t = make_table(["alpha"])
    assert np.array_equal(t.embed("Alpha"), t.embed("alpha"))


def test_frozen_table_rejects_writes():
    t = make_table(["alpha"])
    t.freeze()
    with pytest.raises(ValueError):
        t.matrix[0, 0] = 1.0


def test_window_must_be_odd():
    for bad in (0, 2, -1, 4):
        with pytest.raises(ValueError):
            validate_window(bad)
    assert validate_window(1) == 1 and validate_window(5) == 5


def test_ngram_average_n1_equals_word_vector():
    t = make_table(["a", "b", "c"])
    s = sentence_of(["a", "b", "c"])
    for i, w in enumerate(["a", "b", "c"]):
        assert np.array_equal(ngram_average(s, i, 1, t), t.embed(w))


def test_ngram_average_boundary_uses_inbounds_count():
    t = make_table(["a", "b", "c", "d", "e"])
    s = sentence_of(["a", "b", "c", "d", "e"])
    # left edge: window of 3 truncates to tokens 0 and 1, divisor 2
    expected = (t.embed("a") + t.embed("b")) / 2.0
    assert np.allclose(ngram_average(s, 0, 3, t), expected, atol=1e-15)
    # right edge symmetric
    expected = (t.embed("d") + t.embed("e")) / 2.0
    assert np.allclose(ngram_average(s, 4, 3, t), expected, atol=1e-15)


def test_ngram_average_interior_hand_value():
    # vectors (1,0), (0,1), (1,1) in dim 2 -> mean (2/3, 2/3)
    t = make_table(["a", "b", "c"], dim=2)
    t.matrix[0] = [1.0, 0.0]
    t.matrix[1] = [0.0, 1.0]
    t.matrix[2] = [1.0, 1.0]
    s = sentence_of(["a", "b", "c"])
    assert np.allclose(ngram_average(s, 1, 3, t), [2.0 / 3.0, 2.0 / 3.0], atol=1e-15)


def test_ngram_average_index_out_of_range():
    t = make_table(["a"])
    s = sentence_of(["a"])
    with pytest.raises(IndexError):
        ngram_average(s, 1, 3, t)
    with pytest.raises(IndexError):
        window_indices(1, -1, 3)


def test_identical_vectors_average_to_themselves():
    t = make_table(["a", "b", "c"], dim=3)
    t.matrix[:3] = [0.5, -1.0, 2.0]
    s = sentence_of(["a", "b", "c"])
    for n in (1, 3, 5):
        for i in range(3):
            assert np.allclose(ngram_average(s, i, n, t), [0.5, -1.0, 2.0], atol=1e-15)


def test_full_window_depends_only_on_window_words():
    # same 3-word window embedded in different sentences -> same average
    t = make_table(["a", "b", "c", "x", "y"])
    s1 = sentence_of(["x", "a", "b", "c", "y"])
    s2 = sentence_of(["y", "a", "b", "c", "x"])
    assert np.array_equal(ngram_average(s1, 2, 3, t), ngram_average(s2, 2, 3, t))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 9), st.sampled_from([1, 3, 5]), st.integers(0, 2 ** 31 - 1))
def test_average_within_componentwise_bounds(i, n, seed):
    rng = np.random.default_rng(seed)
    words = [f"w{k}" for k in range(10)]
    t = make_table(words, dim=3, seed=seed % 1000)
    s = sentence_of(list(rng.permutation(words)))
    v = ngram_average(s, i, n, t)
    rows = np.stack([t.embed(s.tokens[j].surface)
                     for j in window_indices(len(s), i, n)])
    assert np.all(v >= rows.min(axis=0) - 1e-12)
    assert np.all(v <= rows.max(axis=0) + 1e-12)


def test_sentence_windows_shape():
    t = make_table(["a", "b", "c"])
    s = sentence_of(["a", "b", "c"])
    assert sentence_windows(s, 3, t).shape == (3, t.dim)
