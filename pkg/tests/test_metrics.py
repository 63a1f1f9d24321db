import math
import random

import pytest
from hypothesis import given, strategies as st

import oracles
from figcap.errors import NormalizationError
from figcap.metrics import (
    IDENTITY,
    LENGTH_RATIO,
    MetricReport,
    Normalizer,
    bleu4,
    evaluate_corpus,
    format_table,
    rouge_n,
    rouge_n_normalized,
    score_pair,
)

small = st.lists(st.sampled_from("abcdef"), max_size=12)


def test_rouge_identity():
    s = rouge_n("the cat sat", "the cat sat", 2)
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)


def test_rouge_hand_counted():
    s = rouge_n("the cat sat on the mat", "the cat sat", 2)
    assert s.precision == pytest.approx(2 / 5, abs=1e-12)
    assert s.recall == 1.0
    assert s.f1 == pytest.approx(4 / 7, abs=1e-12)
    assert oracles.rouge(oracles.split_words("the cat sat on the mat"), oracles.split_words("the cat sat"), 2)[2] == pytest.approx(4 / 7)


def test_rouge_disjoint():
    s = rouge_n("x y", "a b", 1)
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)


def test_rouge_empty_sides():
    assert rouge_n("", "a b", 1).f1 == 0.0
    assert rouge_n("a", "a", 2).f1 == 0.0


def test_rouge_order_zero():
    with pytest.raises(ValueError):
        rouge_n("a", "a", 0)


def test_rouge_clipping():
    # candidate repeats "the" 3 times but reference has it once
    s = rouge_n("the the the", "the cat", 1)
    assert s.precision == pytest.approx(1 / 3)
    assert s.recall == pytest.approx(1 / 2)


@given(small, small, st.integers(1, 3))
def test_rouge_matches_oracle(a, b, n):
    got = rouge_n(a, b, n)
    want = oracles.rouge(a, b, n)
    assert got.precision == pytest.approx(want[0], abs=1e-9)
    assert got.recall == pytest.approx(want[1], abs=1e-9)
    assert got.f1 == pytest.approx(want[2], abs=1e-9)


@given(small, small, st.integers(1, 3))
def test_rouge_f1_symmetric_and_bounded(a, b, n):
    ab, ba = rouge_n(a, b, n), rouge_n(b, a, n)
    assert ab.f1 == pytest.approx(ba.f1, abs=1e-12)
    assert ab.precision == ba.recall
    for v in (ab.precision, ab.recall, ab.f1):
        assert 0.0 <= v <= 1.0


@given(small, st.integers(1, 3))
def test_rouge_self_is_one(a, n):
    if len(a) >= n:
        assert rouge_n(a, a, n).f1 == 1.0


def test_normalized_identity_equals_f1():
    a, b = "the cat sat on the mat", "a cat sat"
    assert rouge_n_normalized(a, b, 2, IDENTITY) == rouge_n(a, b, 2).f1


def test_normalized_length_ratio_hand_value():
    v = rouge_n_normalized("the cat sat", "the cat sat on the mat", 2, LENGTH_RATIO)
    assert v == pytest.approx(8 / 7, abs=1e-12)


def test_normalized_length_ratio_identical():
    assert rouge_n_normalized("a b c d", "a b c d", 2, "length-ratio") == 1.0


def test_normalized_empty_reference_raises():
    with pytest.raises(NormalizationError):
        rouge_n_normalized("a b", "", 2, LENGTH_RATIO)
    assert rouge_n_normalized("a b", "", 2, IDENTITY) == 0.0


def test_normalized_empty_candidate_floors_length():
    assert rouge_n_normalized("", "a b", 1, LENGTH_RATIO) == 0.0


def test_unknown_normalizer():
    with pytest.raises(ValueError):
        Normalizer("softmax")


@given(small, small, st.integers(1, 3), st.sampled_from(["identity", "length-ratio"]))
def test_normalized_matches_oracle(a, b, n, kind):
    if kind == "length-ratio" and not b:
        return
    assert rouge_n_normalized(a, b, n, kind) == pytest.approx(oracles.rouge_norm(a, b, n, kind), abs=1e-9)
    assert rouge_n_normalized(a, b, n, kind) >= 0.0


@given(st.lists(small, min_size=1, max_size=5), small)
def test_identity_argmax_agrees_with_f1(cands, ref):
    by_norm = max(range(len(cands)), key=lambda i: (rouge_n_normalized(cands[i], ref, 2, IDENTITY), -i))
    by_f1 = max(range(len(cands)), key=lambda i: (rouge_n(cands[i], ref, 2).f1, -i))
    assert by_norm == by_f1


def test_bleu_perfect_and_empty():
    assert bleu4("a b c d e", "a b c d e") == 1.0
    assert bleu4("", "a b c") == 0.0


def test_bleu_frozen_value():
    # frozen from tests/oracles.bleu: all precisions 1, brevity penalty exp(1 - 6/4)
    assert bleu4("the cat sat on", "the cat sat on the mat") == pytest.approx(0.6065306597126334, abs=1e-9)


def test_bleu_smoothing_on_higher_orders():
    # unigram match only; orders 2..4 get add-one smoothing
    got = bleu4("cat dog", "dog cat")
    want = math.exp((math.log(2 / 2) + math.log(1 / 2) + math.log(1 / 1) + math.log(1 / 1)) / 4)
    assert got == pytest.approx(want, abs=1e-12)


def test_bleu_zero_unigram_match():
    assert bleu4("x y z w", "a b c d") == 0.0


@given(small, small)
def test_bleu_matches_oracle_and_bounded(a, b):
    got = bleu4(a, b)
    assert got == pytest.approx(oracles.bleu(a, b), abs=1e-9)
    assert 0.0 <= got <= 1.0


@given(small)
def test_bleu_self_is_one(a):
    if len(a) >= 4:
        assert bleu4(a, a) == 1.0


def test_corpus_identical_texts():
    rep = evaluate_corpus([("a b c d", "a b c d"), ("x y z w v", "x y z w v")], IDENTITY)
    assert rep.values() == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_corpus_single_pair_equals_pair():
    pair = ("the cat sat on", "the cat sat on the mat")
    assert evaluate_corpus([pair], LENGTH_RATIO) == score_pair(*pair, LENGTH_RATIO)


def test_corpus_two_pairs_oracle_mean():
    pairs = [("the cat sat on", "the cat sat on the mat"), ("a b c", "a c b d")]
    rep = evaluate_corpus(pairs, "length-ratio")
    toks = [(oracles.split_words(c), oracles.split_words(r)) for c, r in pairs]
    want = [
        sum(oracles.bleu(c, r) for c, r in toks) / 2,
        sum(oracles.rouge(c, r, 1)[2] for c, r in toks) / 2,
        sum(oracles.rouge(c, r, 2)[2] for c, r in toks) / 2,
        sum(oracles.rouge_norm(c, r, 1, "length-ratio") for c, r in toks) / 2,
        sum(oracles.rouge_norm(c, r, 2, "length-ratio") for c, r in toks) / 2,
    ]
    assert rep.values() == pytest.approx(want, abs=1e-12)


def test_corpus_empty_rejected():
    with pytest.raises(ValueError):
        evaluate_corpus([], IDENTITY)


def test_corpus_parallel_bit_identical():
    rng = random.Random(3)
    pairs = [(" ".join(rng.choices("abcde", k=8)), " ".join(rng.choices("abcde", k=7))) for _ in range(50)]
    assert evaluate_corpus(pairs, jobs=1) == evaluate_corpus(pairs, jobs=4)


def test_corpus_permutation_tolerance():
    rng = random.Random(5)
    pairs = [(" ".join(rng.choices("abcde", k=8)), " ".join(rng.choices("abcde", k=7))) for _ in range(50)]
    shuffled = list(pairs)
    rng.shuffle(shuffled)
    a, b = evaluate_corpus(pairs), evaluate_corpus(shuffled)
    assert a.values() == pytest.approx(b.values(), abs=1e-9)


def test_report_dict_roundtrip_and_table():
    rep = MetricReport(0.11, 0.46, 0.28, 2.18, 3.806)
    assert MetricReport.from_dict(rep.to_dict()) == rep
    table = format_table([("Base", rep)])
    lines = table.splitlines()
    assert lines[0].split() == ["Method", "Blue4", "R-1", "R-2", "R-1-n", "R-2-n"]
    assert lines[2].split() == ["Base", "0.110", "0.460", "0.280", "2.180", "3.806"]
