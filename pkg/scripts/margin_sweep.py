"""Sweep the contrastive margin and weight over random candidate sets.

Log-probabilities are drawn at random, so this only shows how the loss
terms scale with the hyperparameters, not anything about a real model.
"""

import argparse
import random

from figcap.ranking import CandidateSet, LossConfig, ScoredCandidate, multitask_loss
from figcap.synthetic import WORDS
from figcap.text_core import tokenize


def random_sets(n_sets, n_cands, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(n_sets):
        ref = rng.sample(WORDS, 10)
        cands = []
        for _ in range(n_cands):
            words = [w if rng.random() < 0.7 else rng.choice(WORDS) for w in ref[: rng.randint(4, 10)]]
            cands.append(ScoredCandidate.from_text(" ".join(words), [-rng.expovariate(1.0) for _ in words]))
        out.append((CandidateSet(tokenize(" ".join(ref)), tuple(cands)), [-rng.expovariate(2.0) for _ in ref]))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sets", type=int, default=200)
    ap.add_argument("--candidates", type=int, default=4)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    data = random_sets(args.sets, args.candidates, args.seed)
    print(f"{'margin':>8} {'gamma':>7} {'l_xent':>8} {'l_ctr':>8} {'l_mul':>9}")
    for margin in (0.0, 0.001, 0.01, 0.1):
        for gamma in (1.0, 100.0):
            cfg = LossConfig(alpha=args.alpha, margin=margin, gamma=gamma)
            rows = [multitask_loss(cs, ref_lp, cfg) for cs, ref_lp in data]
            k = len(rows)
            print(
                f"{margin:8.3f} {gamma:7.1f} {sum(r.l_xent for r in rows) / k:8.4f} "
                f"{sum(r.l_ctr for r in rows) / k:8.4f} {sum(r.l_mul for r in rows) / k:9.4f}"
            )


if __name__ == "__main__":
    main()
