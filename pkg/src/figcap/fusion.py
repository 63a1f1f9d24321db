"""Consensus fusion over captions produced by several models.

For one figure with N candidate captions, row ``i`` of the pairwise matrix
holds the normalized ROUGE of every other caption scored against caption
``i`` as the reference. A candidate's consensus score is its row sum divided
by N, and the highest-scoring candidate wins (lowest index on ties). This is
minimum-Bayes-risk selection with ROUGE as the utility.

Duplicate captions are not collapsed; identical outputs from several models
reinforce each other.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from figcap.errors import AlignmentError
from figcap.jsonl import Source, read_captions, write_jsonl
from figcap.metrics import LENGTH_RATIO, Normalizer, get_normalizer, rouge_n_normalized
from figcap.text_core import DEFAULT_TOKENIZER, TokenizerConfig, tokenize


@dataclass(frozen=True)
class FusionInput:
    id: str
    candidates: tuple[tuple[str, str], ...]  # (model_name, caption)

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"{self.id}: fusion needs at least one candidate")
        names = [name for name, _ in self.candidates]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.id}: model names must be unique, got {names}")

    @property
    def texts(self) -> list[str]:
        return [text for _, text in self.candidates]


@dataclass(frozen=True)
class FusionResult:
    id: str
    chosen_index: int
    chosen_text: str
    scores: tuple[float, ...]
    score_matrix: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "chosen_index": self.chosen_index,
            "chosen_text": self.chosen_text,
            "scores": list(self.scores),
        }


def pairwise_matrix(
    candidates: Sequence[str],
    n: int = 2,
    norm: Normalizer | str = LENGTH_RATIO,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> list[list[float]]:
    """``m[i][j]`` = normalized ROUGE-n of caption j against caption i; zero diagonal."""
    if not candidates:
        raise ValueError("pairwise_matrix needs at least one caption")
    norm = get_normalizer(norm)
    toks = [tokenize(c, tokenizer) for c in candidates]
    size = len(toks)
    return [
        [0.0 if i == j else rouge_n_normalized(toks[j], toks[i], n, norm) for j in range(size)]
        for i in range(size)
    ]


def consensus_select(
    item: FusionInput,
    n: int = 2,
    norm: Normalizer | str = LENGTH_RATIO,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> FusionResult:
    texts = item.texts
    matrix = pairwise_matrix(texts, n, norm, tokenizer)
    size = len(texts)
    # fsum is order-independent, so equal score multisets tie exactly.
    # Divisor N (not N-1) is a positive rescale and leaves the argmax unchanged.
    scores = [math.fsum(row) / size for row in matrix]
    best = max(range(size), key=lambda i: (scores[i], -i))
    return FusionResult(
        item.id,
        best,
        texts[best],
        tuple(scores),
        tuple(tuple(row) for row in matrix),
    )


def _model_names(paths: Sequence[Source]) -> list[str]:
    names = []
    for k, p in enumerate(paths):
        base = Path(p).stem if isinstance(p, (str, os.PathLike)) else f"model{k}"
        name, dup = base, 1
        while name in names:
            name, dup = f"{base}#{dup}", dup + 1
        names.append(name)
    return names


def align_streams(streams: Sequence[Source]) -> list[FusionInput]:
    """Load N caption files and align them by id, in the first file's order."""
    if not streams:
        raise ValueError("need at least one caption stream")
    tables = [read_captions(s) for s in streams]
    names = _model_names(streams)
    first = tables[0]
    for k, table in enumerate(tables[1:], start=1):
        for rid in first:
            if rid not in table:
                raise AlignmentError(f"id {rid!r} missing from stream {names[k]}", rid)
        for rid in table:
            if rid not in first:
                raise AlignmentError(f"id {rid!r} in stream {names[k]} but not in {names[0]}", rid)
    return [FusionInput(rid, tuple((names[k], t[rid]) for k, t in enumerate(tables))) for rid in first]


def fuse_corpus(
    streams: Sequence[Source],
    n: int = 2,
    norm: Normalizer | str = LENGTH_RATIO,
    out: Source | None = None,
    jobs: int = 1,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> list[FusionResult]:
    items = align_streams(streams)
    norm = get_normalizer(norm)

    def one(item):
        return consensus_select(item, n, norm, tokenizer)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(it) for it in items]
    if out is not None:
        write_jsonl((r.to_dict() for r in results), out)
    return results
