"""Caption quality metrics: ROUGE-N, normalized ROUGE-N and smoothed BLEU-4.

All metrics are single-reference and sentence-level. Corpus numbers are
arithmetic means of per-pair scores, which is how per-figure leaderboards
average them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

from figcap.errors import NormalizationError
from figcap.text_core import TextLike, TokenizerConfig, DEFAULT_TOKENIZER, as_tokens, ngrams

NORMALIZER_KINDS = ("identity", "length-ratio")


@dataclass(frozen=True)
class PairScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Normalizer:
    """Transform applied to ROUGE F1 to obtain the ``-n`` columns.

    ``identity`` leaves F1 unchanged. ``length-ratio`` divides F1 by
    ``max(|candidate|, 1) / |reference|``, rewarding short candidates that
    still cover the reference n-grams.
    """

    kind: str = "length-ratio"

    def __post_init__(self):
        if self.kind not in NORMALIZER_KINDS:
            raise ValueError(f"unknown normalizer {self.kind!r}; expected one of {NORMALIZER_KINDS}")

    def apply(self, f1: float, cand_len: int, ref_len: int) -> float:
        if self.kind == "identity":
            return f1
        if ref_len == 0:
            raise NormalizationError("length-ratio normalization is undefined for an empty reference")
        ratio = max(cand_len, 1) / ref_len
        return f1 / ratio


IDENTITY = Normalizer("identity")
LENGTH_RATIO = Normalizer("length-ratio")


def get_normalizer(name: str | Normalizer) -> Normalizer:
    if isinstance(name, Normalizer):
        return name
    return Normalizer(name)


@dataclass(frozen=True)
class MetricReport:
    bleu4: float
    rouge1_f1: float
    rouge2_f1: float
    rouge1_norm: float
    rouge2_norm: float

    COLUMNS = ("Blue4", "R-1", "R-2", "R-1-n", "R-2-n")

    def values(self) -> tuple[float, ...]:
        return (self.bleu4, self.rouge1_f1, self.rouge2_f1, self.rouge1_norm, self.rouge2_norm)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(**{k: float(d[k]) for k in ("bleu4", "rouge1_f1", "rouge2_f1", "rouge1_norm", "rouge2_norm")})


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_n(candidate: TextLike, reference: TextLike, n: int = 2) -> PairScore:
    cand = ngrams(as_tokens(candidate), n)
    ref = ngrams(as_tokens(reference), n)
    overlap = sum(min(c, ref.counts[g]) for g, c in cand.counts.items())
    cand_total, ref_total = cand.total, ref.total
    p = overlap / cand_total if cand_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    return PairScore(p, r, _f1(p, r))


def rouge_n_normalized(
    candidate: TextLike,
    reference: TextLike,
    n: int = 2,
    norm: Normalizer | str = LENGTH_RATIO,
) -> float:
    cand, ref = as_tokens(candidate), as_tokens(reference)
    norm = get_normalizer(norm)
    # Check normalizability before scoring so an empty reference always raises.
    if norm.kind == "length-ratio" and len(ref) == 0:
        raise NormalizationError("length-ratio normalization is undefined for an empty reference")
    return norm.apply(rouge_n(cand, ref, n).f1, len(cand), len(ref))


def bleu4(candidate: TextLike, reference: TextLike) -> float:
    """Sentence BLEU-4 with add-one smoothing on zero-match orders n >= 2."""
    cand, ref = as_tokens(candidate), as_tokens(reference)
    if len(cand) == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        c = ngrams(cand, n)
        r = ngrams(ref, n)
        matches = sum(min(cnt, r.counts[g]) for g, cnt in c.counts.items())
        total = c.total
        if matches == 0:
            if n == 1:
                return 0.0
            matches, total = 1, total + 1
        log_sum += math.log(matches / total)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return min(1.0, bp * math.exp(log_sum / 4))


def score_pair(
    candidate: TextLike,
    reference: TextLike,
    norm: Normalizer | str = LENGTH_RATIO,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> MetricReport:
    cand, ref = as_tokens(candidate, tokenizer), as_tokens(reference, tokenizer)
    return MetricReport(
        bleu4=bleu4(cand, ref),
        rouge1_f1=rouge_n(cand, ref, 1).f1,
        rouge2_f1=rouge_n(cand, ref, 2).f1,
        rouge1_norm=rouge_n_normalized(cand, ref, 1, norm),
        rouge2_norm=rouge_n_normalized(cand, ref, 2, norm),
    )


def mean_report(reports: Sequence[MetricReport]) -> MetricReport:
    if not reports:
        raise ValueError("cannot average an empty list of reports")
    k = len(reports)
    cols = zip(*(rep.values() for rep in reports))
    # plain left-to-right sum: fixed reduction order keeps reports bit-reproducible
    return MetricReport(*(sum(col) / k for col in cols))


def evaluate_corpus(
    pairs: Sequence[tuple[TextLike, TextLike]],
    norm: Normalizer | str = LENGTH_RATIO,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
    jobs: int = 1,
) -> MetricReport:
    if not pairs:
        raise ValueError("evaluate_corpus needs at least one (candidate, reference) pair")
    norm = get_normalizer(norm)

    def one(pair):
        return score_pair(pair[0], pair[1], norm, tokenizer)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, pairs))
    else:
        reports = [one(p) for p in pairs]
    return mean_report(reports)


def format_table(rows: Sequence[tuple[str, MetricReport]], decimals: int = 3) -> str:
    """Render reports as an aligned text table in leaderboard column order."""
    header = ("Method",) + MetricReport.COLUMNS
    body = [(label,) + tuple(f"{v:.{decimals}f}" for v in rep.values()) for label, rep in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)
