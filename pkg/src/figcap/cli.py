"""Command-line frontend: ``figcap {ingest,refine,score,fuse,rank,report}``.

Settings resolve as flags > environment (``FIGCAP_<NAME>``) > ``--config``
JSON file > built-in defaults. The effective configuration is echoed to
stderr at the start of every run and embedded in JSON reports.

Exit codes: 0 success, 1 I/O error, 2 format or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from figcap.errors import AlignmentError, FigcapError, FormatError, NoReferenceError
from figcap.fusion import fuse_corpus
from figcap.jsonl import read_captions, write_jsonl
from figcap.metrics import MetricReport, evaluate_corpus, format_table, get_normalizer
from figcap.pipeline import MERGE_POLICIES, assemble_input, most_mentioned_figure, parse_corpus
from figcap.ranking import LossConfig, load_candidate_sets, multitask_loss
from figcap.refiner import RefinerEndpoint, refine_corpus
from figcap.text_core import TokenizerConfig

log = logging.getLogger("figcap")

EXIT_OK, EXIT_IO, EXIT_FORMAT = 0, 1, 2
ENV_PREFIX = "FIGCAP_"


@dataclass
class RunConfig:
    normalizer: str = "length-ratio"
    metric_n: int = 2
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    lowercase: bool = True
    keep_digits: bool = True
    alpha: float = 1.0
    margin: float = 0.001
    gamma: float = 100.0
    merge_policy: str = "prefer-alt"
    char_budget: int = 2000
    token_budget: int = 1024
    mode: str = "rule"
    refiner_url: str = "http://localhost:8000/v1"
    refiner_model: str = "llama-2-7b-chat"
    refiner_token_env: str = "FIGCAP_REFINER_TOKEN"
    refiner_timeout: float = 30.0
    refiner_max_in_flight: int = 4
    refiner_log: Optional[str] = None
    decimals: int = 3

    @property
    def tokenizer(self) -> TokenizerConfig:
        return TokenizerConfig(lowercase=self.lowercase, keep_digits=self.keep_digits)

    @property
    def loss(self) -> LossConfig:
        return LossConfig(self.alpha, self.margin, self.gamma, get_normalizer(self.normalizer), self.metric_n)

    @property
    def endpoint(self) -> RefinerEndpoint:
        return RefinerEndpoint(
            base_url=self.refiner_url,
            model=self.refiner_model,
            token_env=self.refiner_token_env,
            timeout=self.refiner_timeout,
            max_in_flight=self.refiner_max_in_flight,
            log_path=self.refiner_log,
        )


def _coerce(name: str, raw, kind):
    if raw is None:
        return None
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        val = str(raw).strip().lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ValueError(f"{name}: cannot interpret {raw!r} as {kind.__name__}") from None


_FIELD_TYPES = {
    "normalizer": str, "metric_n": int, "jobs": int, "lowercase": bool, "keep_digits": bool,
    "alpha": float, "margin": float, "gamma": float, "merge_policy": str, "char_budget": int,
    "token_budget": int, "mode": str, "refiner_url": str, "refiner_model": str,
    "refiner_token_env": str, "refiner_timeout": float, "refiner_max_in_flight": int,
    "refiner_log": str, "decimals": int,
}


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"config file is not valid JSON ({exc.msg})", path=args.config) from None
        unknown = set(file_cfg) - set(_FIELD_TYPES)
        if unknown:
            raise FormatError(f"unknown config keys: {sorted(unknown)}", path=args.config)
        values.update(file_cfg)
    for name in _FIELD_TYPES:
        env_val = environ.get(ENV_PREFIX + name.upper())
        if env_val is not None:
            values[name] = env_val
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            values[name] = flag_val
    try:
        typed = {k: _coerce(k, v, _FIELD_TYPES[k]) for k, v in values.items()}
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    cfg = RunConfig(**typed)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    try:
        get_normalizer(cfg.normalizer)
        LossConfig(cfg.alpha, cfg.margin, cfg.gamma)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if cfg.metric_n < 1:
        raise FormatError("metric_n must be >= 1")
    if cfg.jobs < 1:
        raise FormatError("jobs must be >= 1")
    if cfg.merge_policy not in MERGE_POLICIES:
        raise FormatError(f"merge_policy must be one of {MERGE_POLICIES}")
    if cfg.mode not in ("rule", "external"):
        raise FormatError("mode must be 'rule' or 'external'")
    if cfg.char_budget < 1 or cfg.token_budget < 1:
        raise FormatError("budgets must be positive")


def _echo_config(command: str, cfg: RunConfig) -> dict:
    effective = {"command": command, **asdict(cfg)}
    print("# config " + json.dumps(effective, sort_keys=True), file=sys.stderr)
    return effective


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args, cfg: RunConfig) -> int:
    records = list(parse_corpus(args.corpus))
    total = len(records)
    resolved = 0
    with_alt = 0
    for rec in records:
        try:
            most_mentioned_figure(rec.mentions)
            resolved += 1
        except NoReferenceError:
            pass
        if rec.ocr_alt:
            with_alt += 1

    def pct(k):
        return f"{100.0 * k / total:.1f}%" if total else "n/a"

    print(f"records: {total}")
    print(f"figure-ref coverage: {pct(resolved)} ({resolved}/{total})")
    print(f"ocr-alt coverage: {pct(with_alt)} ({with_alt}/{total})")
    if args.out:
        write_jsonl((r.to_dict() for r in records), args.out)
    return EXIT_OK


def cmd_refine(args, cfg: RunConfig) -> int:
    records = list(parse_corpus(args.corpus))
    results = refine_corpus(records, cfg.mode, cfg.char_budget, cfg.endpoint, cfg.jobs)
    write_jsonl((res.to_dict(rec.id) for rec, res in zip(records, results)), args.out)
    if args.inputs_out:
        rows = []
        for rec, res in zip(records, results):
            assembled = assemble_input(rec, res, cfg.token_budget, cfg.merge_policy, cfg.tokenizer)
            rows.append({"id": rec.id, "text": assembled.text, "truncated": assembled.truncated})
        write_jsonl(rows, args.inputs_out)
    counts = {}
    for res in results:
        counts[res.provenance] = counts.get(res.provenance, 0) + 1
    print(json.dumps({"records": len(results), "provenance": counts}, sort_keys=True))
    return EXIT_OK


def _aligned_pairs(pred_path, ref_path):
    preds = read_captions(pred_path)
    refs = read_captions(ref_path)
    for rid in preds:
        if rid not in refs:
            raise AlignmentError(f"id {rid!r} in predictions but not in references", rid)
    for rid in refs:
        if rid not in preds:
            raise AlignmentError(f"id {rid!r} in references but not in predictions", rid)
    return [(preds[rid], refs[rid]) for rid in refs]


def cmd_score(args, cfg: RunConfig) -> int:
    pairs = _aligned_pairs(args.predictions, args.references)
    if not pairs:
        raise FormatError("no records to score")
    report = evaluate_corpus(pairs, cfg.normalizer, cfg.tokenizer, cfg.jobs)
    label = args.label or Path(args.predictions).stem
    print(format_table([(label, report)], cfg.decimals))
    payload = {
        "label": label,
        **report.to_dict(),
        "pairs": len(pairs),
        "bleu": "sentence-level, add-one smoothed (n>=2), averaged over pairs",
        "config": {"normalizer": cfg.normalizer, "lowercase": cfg.lowercase, "keep_digits": cfg.keep_digits},
    }
    text = json.dumps(payload, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_fuse(args, cfg: RunConfig) -> int:
    results = fuse_corpus(args.files, cfg.metric_n, cfg.normalizer, args.out, cfg.jobs, cfg.tokenizer)
    picks = [0] * len(args.files)
    for r in results:
        picks[r.chosen_index] += 1
    print(json.dumps({"ids": len(results), "picks_per_model": picks}))
    return EXIT_OK


def cmd_rank(args, cfg: RunConfig) -> int:
    loss_cfg = cfg.loss
    rows = []
    for rec in load_candidate_sets(args.candidates, cfg.tokenizer):
        res = multitask_loss(rec.cset, rec.reference_logprobs, loss_cfg)
        rows.append(
            {
                "id": rec.id,
                "l_mul": res.l_mul,
                "l_xent": res.l_xent,
                "l_ctr": res.l_ctr,
                "f_values": list(res.f_values),
                "rank_order": list(res.rank_order),
            }
        )
    write_jsonl(rows, args.out)
    k = len(rows)
    means = {key: (sum(r[key] for r in rows) / k if k else None) for key in ("l_mul", "l_xent", "l_ctr")}
    print(json.dumps({"records": k, "mean": means}, sort_keys=True))
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    if args.labels and len(args.labels) != len(args.scores):
        raise FormatError(f"got {len(args.labels)} labels for {len(args.scores)} score files")
    rows = []
    for k, path in enumerate(args.scores):
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
                report = MetricReport.from_dict(obj)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"not a score report ({exc})", path=path) from None
        label = args.labels[k] if args.labels else obj.get("label") or Path(path).stem
        rows.append((label, report))
    print(format_table(rows, cfg.decimals))
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "refine": cmd_refine,
    "score": cmd_score,
    "fuse": cmd_fuse,
    "rank": cmd_rank,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file with default settings")
    shared.add_argument("--normalizer", choices=["identity", "length-ratio"])
    shared.add_argument("--metric-n", dest="metric_n", type=int, help="ROUGE order for fusion/ranking")
    shared.add_argument("--jobs", type=int, help="worker threads (default: CPU count)")
    shared.add_argument("--case-sensitive", dest="lowercase", action="store_const", const=False)
    shared.add_argument("--drop-digits", dest="keep_digits", action="store_const", const=False)
    shared.add_argument("--decimals", type=int, help="digits printed in tables")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="figcap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[shared], help="validate a corpus and print coverage stats")
    p.add_argument("corpus")
    p.add_argument("--out", help="write the validated corpus here")

    p = sub.add_parser("refine", parents=[shared], help="refine paragraphs to the most-mentioned figure")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--inputs-out", help="also write assembled OCR+mention+paragraph inputs")
    p.add_argument("--mode", choices=["rule", "external"])
    p.add_argument("--budget", dest="char_budget", type=int, help="max characters per refined paragraph")
    p.add_argument("--token-budget", dest="token_budget", type=int)
    p.add_argument("--merge-policy", dest="merge_policy", choices=list(MERGE_POLICIES))
    p.add_argument("--refiner-url", dest="refiner_url")
    p.add_argument("--refiner-model", dest="refiner_model")
    p.add_argument("--refiner-token-env", dest="refiner_token_env", help="name of env var holding the auth token")
    p.add_argument("--refiner-timeout", dest="refiner_timeout", type=float)
    p.add_argument("--max-in-flight", dest="refiner_max_in_flight", type=int)
    p.add_argument("--refiner-log", dest="refiner_log", help="append request/response pairs here")

    p = sub.add_parser("score", parents=[shared], help="score predictions against references")
    p.add_argument("predictions")
    p.add_argument("references")
    p.add_argument("--label")
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("fuse", parents=[shared], help="consensus-select one caption per id across model files")
    p.add_argument("files", nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", parents=[shared], help="contrastive + cross-entropy losses per candidate set")
    p.add_argument("candidates")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, help="length penalty exponent")
    p.add_argument("--margin", type=float, help="margin per rank step")
    p.add_argument("--gamma", type=float, help="weight of the contrastive term")

    p = sub.add_parser("report", parents=[shared], help="combine score reports into one table")
    p.add_argument("scores", nargs="+")
    p.add_argument("--labels", nargs="+")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        _echo_config(args.command, cfg)
        return COMMANDS[args.command](args, cfg)
    except FigcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
