import pytest
from hypothesis import given, strategies as st

import oracles
from figcap.text_core import TokenizerConfig, as_tokens, ngrams, token_spans, tokenize

token_lists = st.lists(st.sampled_from("abcdef"), max_size=12)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("The cat, sat.", ["the", "cat", "sat"]),
        ("", []),
        ("PP-OCRv3 30}", ["pp", "ocrv3", "30"]),
        ("σ-noise vs. α=0.5", ["σ", "noise", "vs", "α", "0", "5"]),
        ("snake_case", ["snake", "case"]),
    ],
)
def test_tokenize_examples(text, expected):
    assert list(tokenize(text).tokens) == expected


def test_tokenize_cross_checked_with_oracle_splitter():
    text = "PP-OCRv3 30}"
    assert list(tokenize(text).tokens) == oracles.split_words(text)


def test_tokenizer_variants():
    assert list(tokenize("Fig 3a", TokenizerConfig(lowercase=False)).tokens) == ["Fig", "3a"]
    assert list(tokenize("Fig 3a x2", TokenizerConfig(keep_digits=False)).tokens) == ["fig", "a", "x"]


def test_source_text_kept():
    assert tokenize("A b").source_text == "A b"


@given(st.text())
def test_tokenize_matches_char_loop_oracle(text):
    assert list(tokenize(text).tokens) == oracles.split_words(text)


@given(st.text())
def test_no_empty_tokens_and_idempotent(text):
    seq = tokenize(text)
    assert all(seq.tokens)
    assert tokenize(seq.detokenize()).tokens == seq.tokens


@given(st.text())
def test_spans_line_up_with_tokens(text):
    spans = token_spans(text)
    assert [text[a:b].lower() for a, b in spans] == list(tokenize(text).tokens)


def test_ngram_examples():
    assert dict(ngrams(["a", "b", "a", "b"], 2).counts) == {("a", "b"): 2, ("b", "a"): 1}
    assert dict(ngrams(["a"], 2).counts) == {}
    assert dict(ngrams(["a", "b", "c"], 1).counts) == {("a",): 1, ("b",): 1, ("c",): 1}


def test_ngram_order_zero_rejected():
    with pytest.raises(ValueError):
        ngrams(["a"], 0)


@given(token_lists, st.integers(1, 5))
def test_ngram_total(tokens, n):
    assert ngrams(tokens, n).total == max(0, len(tokens) - n + 1)


@given(token_lists, st.integers(1, 5), st.randoms())
def test_ngram_total_permutation_invariant(tokens, n, rnd):
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    assert ngrams(shuffled, n).total == ngrams(tokens, n).total


def test_ngrams_permutation_sensitive():
    assert ngrams(["a", "b", "c"], 2).counts != ngrams(["c", "b", "a"], 2).counts


def test_as_tokens_accepts_strings_and_lists():
    assert as_tokens("A b").tokens == ("a", "b")
    assert as_tokens(["x", "y"]).tokens == ("x", "y")
