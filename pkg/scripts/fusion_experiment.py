"""Synthetic consensus-fusion experiment.

Builds a corpus where one model copies the gold caption and the others
corrupt it, scores every model and the fused output, and prints a table.

    python scripts/fusion_experiment.py --ids 200 --models 8 --workdir runs/fusion
"""

import argparse
import contextlib
import io
import tempfile
from pathlib import Path

from figcap.cli import main as figcap


def run(workdir: Path, ids: int, models: int, seed: int, normalizer: str) -> int:
    from figcap.synthetic import write_fusion_corpus

    ref, model_paths = write_fusion_corpus(workdir, n_ids=ids, n_models=models, seed=seed, gold_model=models // 2)
    fused = workdir / "fused.jsonl"
    scores = []
    with contextlib.redirect_stdout(io.StringIO()):
        figcap(["fuse", *map(str, model_paths), "--out", str(fused), "--normalizer", normalizer])
        for path in [*model_paths, fused]:
            out = workdir / f"{path.stem}.score.json"
            figcap(["score", str(path), str(ref), "--out", str(out), "--normalizer", normalizer])
            scores.append(str(out))
    return figcap(["report", *scores])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ids", type=int, default=100)
    ap.add_argument("--models", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--normalizer", default="length-ratio", choices=["identity", "length-ratio"])
    ap.add_argument("--workdir")
    args = ap.parse_args()
    if args.workdir:
        Path(args.workdir).mkdir(parents=True, exist_ok=True)
        raise SystemExit(run(Path(args.workdir), args.ids, args.models, args.seed, args.normalizer))
    with tempfile.TemporaryDirectory() as tmp:
        raise SystemExit(run(Path(tmp), args.ids, args.models, args.seed, args.normalizer))
