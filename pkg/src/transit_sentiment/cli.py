"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 a stage failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .aggregate import (
    DEFAULT_STATIONS,
    MILE_M,
    aggregate_monthly,
    aggregate_stations,
    load_stations,
    write_geojson,
    write_monthly_csv,
    write_station_csv,
)
from .classify import DEFAULT_EXEMPLARS, DEFAULT_K, classify_batch, category_shares, load_exemplars
from .client import ChatCompletionClient, ClassifierClientConfig, ReplayClient
from .config import validate_config
from .errors import (
    AuthFailure,
    ConfigInvalid,
    EndpointUnreachable,
    FileUnreadable,
    IdSetMismatch,
    InsufficientExemplars,
    InvalidMix,
    KOutOfRange,
    LexiconError,
    MalformedRecord,
    RateLimited,
    StageFailed,
    TransitSentimentError,
)
from .evaluate import evaluate, load_labels
from .ingest import DEFAULT_KEYWORDS, ingest, load_keywords, load_posts, write_posts
from .lexicon import DEFAULT_LEXICON, load_lexicon
from .pipeline import run_pipeline
from .records import AnalyzedPost, read_analyzed, write_analyzed
from .sentiment import RuleConfig, score_texts
from .synth import generate_synthetic_corpus, write_truth

EXIT_OK, EXIT_INVALID, EXIT_STAGE = 0, 1, 2

VALIDATION_ERRORS = (
    ConfigInvalid,
    FileUnreadable,
    MalformedRecord,
    LexiconError,
    KOutOfRange,
    InsufficientExemplars,
    InvalidMix,
    IdSetMismatch,
)
STAGE_ERRORS = (StageFailed, EndpointUnreachable, AuthFailure, RateLimited)


def _rules(pairs: list[str]) -> RuleConfig:
    values = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigInvalid([f"--rule {item!r} is not key=value"])
        values[key.strip()] = value.strip()
    try:
        rules = RuleConfig.from_mapping(values)
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid([str(exc)]) from None
    if rules.problems():
        raise ConfigInvalid(rules.problems())
    return rules


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=1, ensure_ascii=False))


def cmd_ingest(args) -> int:
    errors = [] if args.skip_malformed else None
    raw = load_posts(args.input, errors=errors)
    keywords = None if args.no_keywords else load_keywords(args.keywords)
    posts, manifest = ingest(raw, args.input, keywords, args.sample, args.seed if args.sample else None)
    meta = {"stage": "ingest", "corpus": manifest.to_dict(), "malformed_skipped": len(errors or [])}
    write_posts(args.output, posts, meta)
    for err in errors or []:
        print(f"skipped: {err}", file=sys.stderr)
    _print_json(manifest.to_dict())
    return EXIT_OK


def cmd_lexicon_validate(args) -> int:
    lex = load_lexicon(args.path)
    _print_json({"path": str(args.path), "entries": lex.entry_count, "digest": lex.source_digest})
    return EXIT_OK


def cmd_score(args) -> int:
    posts = load_posts(args.input)
    lexicon = load_lexicon(args.lexicon)
    rules = _rules(args.rule)
    results = score_texts([p.text for p in posts], lexicon, rules, args.workers)
    meta = {"stage": "score", "lexicon_digest": lexicon.source_digest, "rules": rules.as_dict()}
    write_analyzed(args.output, [AnalyzedPost.from_result(p, r) for p, r in zip(posts, results)], meta)
    tally = {}
    for r in results:
        tally[r.polarity.value] = tally.get(r.polarity.value, 0) + 1
    _print_json({"scored": len(results), "polarity": tally})
    return EXIT_OK


def cmd_classify(args) -> int:
    scored = read_analyzed(args.input)
    pool = load_exemplars(args.exemplars)
    client = None
    if args.mode == "remote":
        if args.replay_log:
            client = ReplayClient.from_audit_log(args.replay_log)
        else:
            cfg = ClassifierClientConfig(
                **{k: v for k, v in (("endpoint_url", args.endpoint), ("model_name", args.model)) if v},
                max_concurrent_requests=args.max_concurrent,
            )
            if cfg.problems():
                raise ConfigInvalid(cfg.problems())
            client = ChatCompletionClient(cfg)
    result = classify_batch(
        [s.post for s in scored],
        mode=args.mode,
        client=client,
        pool=pool,
        k=args.k,
        max_concurrent=args.max_concurrent,
        audit_log=args.audit_log,
    )
    labels = dict(result.labels)
    write_analyzed(
        args.output,
        [s.with_category(labels[s.id]) for s in scored],
        {"stage": "classify", "mode": args.mode, "k": args.k},
    )
    for pid, err in result.errors.items():
        print(f"unlabeled {pid}: {err}", file=sys.stderr)
    hist = result.histogram
    _print_json({"histogram": hist, "percent": {k: round(v, 1) for k, v in category_shares(hist).items()}})
    if args.mode == "remote" and scored and result.unlabeled == len(scored):
        return EXIT_STAGE
    return EXIT_OK


def cmd_evaluate(args) -> int:
    preds = load_labels(args.predictions)
    truth = load_labels(args.truth)
    if args.restrict:
        truth = {i: truth[i] for i in preds if i in truth}
    report = evaluate(preds, truth)
    if args.output:
        Path(args.output).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(report.table())
    return EXIT_OK


def cmd_aggregate(args) -> int:
    posts = read_analyzed(args.input)
    stations = load_stations(args.stations)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_station = aggregate_stations(posts, stations, args.radius, args.multi_assign)
    date_range = (args.date_start, args.date_end) if args.date_start and args.date_end else None
    months = aggregate_monthly(posts, date_range)
    meta = {"stage": "aggregate", "radius_m": args.radius, "multi_assign": args.multi_assign}
    write_geojson(out / "stations.geojson", per_station, stations, meta)
    write_station_csv(out / "stations.csv", per_station, stations, meta)
    write_monthly_csv(out / "monthly.csv", months, meta)
    _print_json({
        "posts": len(posts),
        "geo_tagged": sum(1 for p in posts if p.post.has_coordinates),
        "station_assignments": sum(a.post_count for a in per_station),
        "months": len(months),
    })
    return EXIT_OK


def cmd_run(args) -> int:
    overrides = list(args.set)
    if args.input:
        overrides.append(f"paths.input={args.input}")
    if args.output_dir:
        overrides.append(f"paths.output_dir={args.output_dir}")
    if args.seed is not None:
        overrides.append(f"sampling.seed={args.seed}")
    if args.mode:
        overrides.append(f"classifier.mode={args.mode}")
    cfg = validate_config(args.config, overrides)
    if args.dry_run:
        print(cfg.to_ini(), end="")
        return EXIT_OK
    progress = None if args.quiet else (lambda stage, status: print(f"[{stage}] {status}", file=sys.stderr))
    manifest = run_pipeline(cfg, resume=args.resume, progress=progress)
    _print_json({"output_dir": cfg.output_dir, "counts": manifest.counts, "stages": manifest.stage_status})
    return EXIT_OK


def cmd_config_validate(args) -> int:
    cfg = validate_config(args.config, args.set, require_input=not args.allow_missing_input)
    print(cfg.to_ini(), end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    posts, truth = generate_synthetic_corpus(
        args.n,
        args.seed,
        geo_fraction=args.geo_fraction,
        link_fraction=args.link_fraction,
        duplicate_fraction=args.duplicate_fraction,
    )
    write_posts(args.output, posts)
    if args.truth:
        write_truth(args.truth, truth)
    _print_json({"posts": len(posts), "output": str(args.output), "truth": args.truth})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transit-sentiment", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress and retries")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean, de-duplicate, keyword-filter and sample posts")
    p.add_argument("input", help="posts as JSONL or CSV")
    p.add_argument("-o", "--output", required=True, help="cleaned posts (.jsonl or .csv)")
    p.add_argument("--keywords", default=DEFAULT_KEYWORDS)
    p.add_argument("--no-keywords", action="store_true", help="skip the keyword filter")
    p.add_argument("--sample", type=int, help="keep a seeded random sample of this size")
    p.add_argument("--seed", type=int, default=2022)
    p.add_argument("--skip-malformed", action="store_true", help="report bad records and continue")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("lexicon", help="lexicon utilities")
    lsub = p.add_subparsers(dest="lexicon_command", required=True)
    q = lsub.add_parser("validate", help="check a lexicon file and print its digest")
    q.add_argument("path", nargs="?", default=DEFAULT_LEXICON)
    q.set_defaults(func=cmd_lexicon_validate)

    p = sub.add_parser("score", help="score posts for sentiment")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--lexicon", default=DEFAULT_LEXICON)
    p.add_argument("--rule", action="append", default=[], metavar="KEY=VALUE", help="override a scoring constant")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("classify", help="assign topic categories")
    p.add_argument("input", help="scored posts")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mode", choices=("local", "remote"), default="local")
    p.add_argument("--exemplars", default=DEFAULT_EXEMPLARS)
    p.add_argument("-k", type=int, default=DEFAULT_K, help="exemplars per category (1-10)")
    p.add_argument("--endpoint", help="chat-completion URL (token from $CHAT_API_TOKEN)")
    p.add_argument("--model")
    p.add_argument("--max-concurrent", type=int, default=4)
    p.add_argument("--audit-log", help="write raw responses here")
    p.add_argument("--replay-log", help="answer from a previous audit log instead of the endpoint")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="precision/recall/F1 against ground truth")
    p.add_argument("predictions", help="JSONL with id and category")
    p.add_argument("truth", help="JSONL with id and category")
    p.add_argument("-o", "--output", help="write the report as JSON")
    p.add_argument("--restrict", action="store_true", help="evaluate only ids present in predictions")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("aggregate", help="per-station and per-month summaries")
    p.add_argument("input", help="classified posts")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stations", default=DEFAULT_STATIONS)
    p.add_argument("--radius", type=float, default=MILE_M, help="meters (default one mile)")
    p.add_argument("--multi-assign", action="store_true", help="count a post at every station in range")
    p.add_argument("--date-start", help="YYYY-MM")
    p.add_argument("--date-end", help="YYYY-MM")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--input")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("local", "remote"))
    p.add_argument("--resume", action="store_true", help="skip stages already completed with this config")
    p.add_argument("--dry-run", action="store_true", help="print the effective config and stop")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("config", help="configuration utilities")
    csub = p.add_subparsers(dest="config_command", required=True)
    q = csub.add_parser("validate", help="report every problem, or echo the config with defaults")
    q.add_argument("config")
    q.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    q.add_argument("--allow-missing-input", action="store_true")
    q.set_defaults(func=cmd_config_validate)

    p = sub.add_parser("synth", help="write a synthetic labeled corpus")
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=2022)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--truth", help="write {id, category, sentiment} labels here")
    p.add_argument("--geo-fraction", type=float, default=0.85)
    p.add_argument("--link-fraction", type=float, default=0.1)
    p.add_argument("--duplicate-fraction", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except STAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in getattr(exc, "diagnostics", [])[:20]:
            print(f"  {line}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, ValueError, TransitSentimentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
