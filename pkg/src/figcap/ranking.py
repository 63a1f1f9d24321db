"""Candidate ranking losses for contrastive summarization training.

Per-token log-probabilities are supplied by an external model; this module
only does the arithmetic on top of them:

* ``length_norm_logprob``: sum of token log-probs divided by ``|S| ** alpha``
* ``contrastive_loss``: pairwise hinge with a margin that grows with rank gap
* ``cross_entropy``: token-mean negative log-likelihood of the reference
* ``multitask_loss``: ``l_xent + gamma * l_ctr``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from figcap.errors import FormatError
from figcap.jsonl import Source, iter_jsonl, source_name
from figcap.metrics import LENGTH_RATIO, Normalizer, get_normalizer, rouge_n_normalized
from figcap.text_core import DEFAULT_TOKENIZER, TokenizerConfig, TokenSequence, tokenize


def _check_logprobs(values, what):
    for v in values:
        if not (v <= 0.0 and math.isfinite(v)):
            raise ValueError(f"{what} must be finite and <= 0, got {v!r}")


@dataclass(frozen=True)
class ScoredCandidate:
    text: str
    tokens: TokenSequence
    token_logprobs: tuple[float, ...]

    def __post_init__(self):
        if len(self.token_logprobs) != len(self.tokens):
            raise ValueError(
                f"candidate {self.text!r}: {len(self.token_logprobs)} logprobs for {len(self.tokens)} tokens"
            )
        _check_logprobs(self.token_logprobs, "token_logprobs")

    @classmethod
    def from_text(cls, text: str, logprobs: Sequence[float], tokenizer: TokenizerConfig = DEFAULT_TOKENIZER):
        return cls(text, tokenize(text, tokenizer), tuple(float(x) for x in logprobs))


@dataclass(frozen=True)
class CandidateSet:
    reference: TokenSequence
    candidates: tuple[ScoredCandidate, ...]

    def __post_init__(self):
        if len(self.candidates) < 1:
            raise ValueError("a candidate set needs at least one candidate")


@dataclass(frozen=True)
class LossConfig:
    # lambda/gamma are placeholders from common contrastive-summarization setups
    alpha: float = 1.0
    margin: float = 0.001
    gamma: float = 100.0
    norm: Normalizer = field(default_factory=lambda: LENGTH_RATIO)
    metric_n: int = 2

    def __post_init__(self):
        for name in ("alpha", "margin", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class MultitaskLoss:
    l_mul: float
    l_xent: float
    l_ctr: float
    f_values: tuple[float, ...]  # in rank order (best first)
    rank_order: tuple[int, ...]  # original candidate indices, best first


def length_norm_logprob(cand: ScoredCandidate | Sequence[float], alpha: float) -> float:
    logprobs = cand.token_logprobs if isinstance(cand, ScoredCandidate) else tuple(cand)
    if not logprobs:
        raise ValueError("length normalization needs at least one token")
    return math.fsum(logprobs) / len(logprobs) ** alpha


def metric_order(cset: CandidateSet, n: int = 2, norm: Normalizer | str = LENGTH_RATIO) -> tuple[list[int], list[float]]:
    """Candidate indices sorted best-first by normalized ROUGE, with their scores.

    Python's sort is stable, so ties keep the original candidate order.
    """
    norm = get_normalizer(norm)
    scores = [rouge_n_normalized(c.tokens, cset.reference, n, norm) for c in cset.candidates]
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    return order, [scores[i] for i in order]


def order_by_metric(cset: CandidateSet, n: int = 2, norm: Normalizer | str = LENGTH_RATIO) -> CandidateSet:
    order, _ = metric_order(cset, n, norm)
    return CandidateSet(cset.reference, tuple(cset.candidates[i] for i in order))


def contrastive_loss(f_values: Sequence[float], margin: float) -> float:
    f = list(f_values)
    if not f:
        raise ValueError("contrastive loss needs at least one candidate")
    total = 0.0
    for i in range(len(f)):
        for j in range(i + 1, len(f)):
            total += max(0.0, f[j] - f[i] + (j - i) * margin)
    return total


def contrastive_loss_gradient(f_values: Sequence[float], margin: float) -> list[float]:
    """Subgradient of ``contrastive_loss`` w.r.t. each f-value.

    A hinge exactly at zero counts as inactive.
    """
    f = list(f_values)
    if not f:
        raise ValueError("contrastive loss needs at least one candidate")
    grad = [0.0] * len(f)
    for i in range(len(f)):
        for j in range(i + 1, len(f)):
            if f[j] - f[i] + (j - i) * margin > 0:
                grad[j] += 1.0
                grad[i] -= 1.0
    return grad


def cross_entropy(reference_logprobs: Sequence[float]) -> float:
    lp = list(reference_logprobs)
    if not lp:
        raise ValueError("cross entropy needs at least one reference token")
    _check_logprobs(lp, "reference_logprobs")
    return 0.0 - math.fsum(lp) / len(lp)


def multitask_loss(cset: CandidateSet, reference_logprobs: Sequence[float], config: LossConfig = LossConfig()) -> MultitaskLoss:
    order, _ = metric_order(cset, config.metric_n, config.norm)
    f = [length_norm_logprob(cset.candidates[i], config.alpha) for i in order]
    l_ctr = contrastive_loss(f, config.margin)
    l_xent = cross_entropy(reference_logprobs)
    return MultitaskLoss(l_xent + config.gamma * l_ctr, l_xent, l_ctr, tuple(f), tuple(order))


@dataclass(frozen=True)
class CandidateRecord:
    id: str
    cset: CandidateSet
    reference_logprobs: tuple[float, ...]


def load_candidate_sets(source: Source, tokenizer: TokenizerConfig = DEFAULT_TOKENIZER):
    """Stream candidate-set records from JSON Lines.

    Each line: ``{"id", "reference", "reference_logprobs", "candidates": [{"text", "logprobs"}]}``.
    Candidate logprobs must be aligned one-per-token with our tokenization of ``text``.
    """
    seen = set()
    name = source_name(source)
    for lineno, obj in iter_jsonl(source):
        try:
            rid = obj["id"]
            ref_text = obj["reference"]
            ref_lp = tuple(float(x) for x in obj["reference_logprobs"])
            cands = tuple(
                ScoredCandidate.from_text(c["text"], c["logprobs"], tokenizer) for c in obj["candidates"]
            )
            if not isinstance(rid, str) or not rid or not isinstance(ref_text, str):
                raise ValueError("'id' and 'reference' must be nonempty strings")
            cset = CandidateSet(tokenize(ref_text, tokenizer), cands)
            _check_logprobs(ref_lp, "reference_logprobs")
            if not ref_lp:
                raise ValueError("reference_logprobs is empty")
        except (KeyError, TypeError, ValueError) as exc:
            detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            raise FormatError(f"bad candidate set: {detail}", line=lineno, path=name) from None
        if rid in seen:
            raise FormatError(f"duplicate id {rid!r}", line=lineno, path=name)
        seen.add(rid)
        yield CandidateRecord(rid, cset, ref_lp)
