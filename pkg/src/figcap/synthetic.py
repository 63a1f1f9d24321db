"""Synthetic corpora for experiments and tests."""

from __future__ import annotations

import random
from pathlib import Path

from figcap.jsonl import write_jsonl
from figcap.pipeline import FigureRecord

WORDS = (
    "accuracy loss curve epoch model baseline training validation error rate layer "
    "attention encoder decoder token caption figure plot bar line axis score rouge "
    "bleu dataset sample image text ocr mention paragraph summary length noise "
    "gradient margin rank candidate fusion method result table value mean variance "
    "precision recall network depth width batch step learning schedule"
).split()


def fusion_corpus(n_ids: int = 100, n_models: int = 4, length: int | None = None, seed: int = 0, gold_model: int = 0):
    """Gold captions plus one output table per model.

    Model ``gold_model`` always emits the gold caption. Every other model
    substitutes fresh words at two non-adjacent positions of its own, so it
    keeps most gold bigrams but fewer bigrams in common with its peers.
    """
    rng = random.Random(seed)
    n_corrupt = n_models - 1
    if length is None:
        length = max(12, 4 * n_corrupt)
    slots = list(range(0, length, 2))
    if len(slots) < 2 * n_corrupt:
        raise ValueError("caption too short for the requested number of corrupted models")
    refs = {}
    outputs = [dict() for _ in range(n_models)]
    for k in range(n_ids):
        rid = f"fig-{k:04d}"
        gold = rng.sample(WORDS, length)
        refs[rid] = " ".join(gold)
        positions = rng.sample(slots, 2 * n_corrupt)
        corrupt_rank = 0
        for m in range(n_models):
            if m == gold_model:
                outputs[m][rid] = refs[rid]
                continue
            words = list(gold)
            for p in positions[2 * corrupt_rank : 2 * corrupt_rank + 2]:
                words[p] = f"noise{m}x{p}"
            corrupt_rank += 1
            outputs[m][rid] = " ".join(words)
    return refs, outputs


def write_fusion_corpus(directory, **kwargs) -> tuple[Path, list[Path]]:
    directory = Path(directory)
    refs, outputs = fusion_corpus(**kwargs)
    ref_path = directory / "references.jsonl"
    write_jsonl(({"id": k, "caption": v} for k, v in refs.items()), ref_path)
    model_paths = []
    for m, table in enumerate(outputs):
        path = directory / f"model{m}.jsonl"
        write_jsonl(({"id": k, "caption": v} for k, v in table.items()), path)
        model_paths.append(path)
    return ref_path, model_paths


def _sentence(rng, ref: str | None) -> str:
    words = rng.sample(WORDS, rng.randint(3, 9))
    if ref:
        words.insert(rng.randint(0, len(words)), ref)
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice([".", ".", ".", "!", "?"])


def figure_records(n: int = 100, seed: int = 0) -> list[FigureRecord]:
    rng = random.Random(seed)
    records = []
    for k in range(n):
        fig = rng.randint(1, 9)
        kind = rng.choice(["Figure", "Fig.", "Table"])
        other = fig % 9 + 1
        mentions = [_sentence(rng, f"{kind} {fig}") for _ in range(rng.randint(1, 3))]
        paragraph = " ".join(
            _sentence(rng, rng.choice([f"{kind} {fig}", f"Figure {other}", None])) for _ in range(rng.randint(2, 6))
        )
        ocr = rng.sample(WORDS, rng.randint(0, 5))
        records.append(
            FigureRecord(
                id=f"rec-{k:05d}",
                ocr_official=ocr,
                mentions=mentions,
                paragraph=paragraph,
                caption=_sentence(rng, None) if rng.random() < 0.8 else None,
                ocr_alt=[w.upper() for w in ocr] if rng.random() < 0.5 else None,
            )
        )
    return records
