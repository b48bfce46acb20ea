"""Staged batch run: ingest -> score -> classify -> evaluate -> aggregate.

Each stage reads the previous stage's file from the output directory and
persists its own outputs before the next stage starts. Every output embeds the
stage name and config digest. A completed stage leaves a marker under
``.stages/`` listing output hashes, so ``resume=True`` can skip it when the
config is unchanged and the files are intact. The run manifest is written last.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .aggregate import aggregate_monthly, aggregate_stations, load_stations, write_geojson, write_monthly_csv, write_station_csv
from .classify import PROMPT_TEMPLATE_VERSION, classify_batch, load_exemplars
from .client import ChatCompletionClient, ReplayClient
from .config import PipelineConfig
from .errors import MalformedRecord, StageFailed, TransitSentimentError
from .evaluate import evaluate, load_labels
from .ingest import ingest, load_keywords, load_posts, write_posts
from .lexicon import load_lexicon
from .records import AnalyzedPost, read_analyzed, write_analyzed
from .sentiment import score_texts

log = logging.getLogger(__name__)

STAGES = ("ingest", "score", "classify", "evaluate", "aggregate")
OUTPUTS = {
    "ingest": ["posts.jsonl"],
    "score": ["scored.jsonl"],
    "classify": ["classified.jsonl"],
    "evaluate": ["evaluation.json"],
    "aggregate": ["stations.geojson", "stations.csv", "monthly.csv"],
}
MANIFEST_NAME = "run_manifest.json"
MARKER_DIR = ".stages"


@dataclass
class RunManifest:
    config: dict
    config_digest: str
    lexicon_digest: str
    prompt_template_version: str
    tool_version: str = __version__
    counts: dict[str, int] = field(default_factory=dict)
    timings_s: dict[str, float] = field(default_factory=dict)
    stage_status: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, list[str]] = field(default_factory=dict)

    # counts that must not grow as posts move through the filtering stages
    MONOTONE = ("raw", "after_link_strip", "ingested", "scored", "classified")

    def check(self) -> list[str]:
        seq = [(k, self.counts[k]) for k in self.MONOTONE if k in self.counts]
        return [f"{a}={x} < {b}={y}" for (a, x), (b, y) in zip(seq, seq[1:]) if y > x]

    def to_dict(self) -> dict:
        return asdict(self)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    def __init__(self, cfg: PipelineConfig, resume: bool):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.digest = cfg.digest()
        self.resume = resume
        self.lexicon = None

    def meta(self, stage: str) -> dict:
        return {"stage": stage, "config_digest": self.digest, "tool_version": __version__}

    def path(self, name: str) -> Path:
        return self.out / name

    def marker(self, stage: str) -> Path:
        return self.out / MARKER_DIR / f"{stage}.json"

    def completed(self, stage: str) -> dict | None:
        m = self.marker(stage)
        if not m.is_file():
            return None
        rec = json.loads(m.read_text(encoding="utf-8"))
        if rec.get("config_digest") != self.digest:
            return None
        for name, digest in rec["outputs"].items():
            p = self.path(name)
            if not p.is_file() or _sha256(p) != digest:
                return None
        return rec

    def finish(self, stage: str, counts: dict, outputs: list[str]) -> None:
        rec = {
            "stage": stage,
            "config_digest": self.digest,
            "counts": counts,
            "outputs": {name: _sha256(self.path(name)) for name in outputs},
        }
        m = self.marker(stage)
        m.parent.mkdir(parents=True, exist_ok=True)
        m.write_text(json.dumps(rec, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    # stages return (counts, output names)

    def ingest(self):
        cfg = self.cfg
        errors: list[MalformedRecord] | None = [] if cfg.skip_malformed else None
        try:
            raw = load_posts(cfg.input, errors=errors)
        except MalformedRecord as exc:
            raise StageFailed("ingest", str(exc), [str(exc)]) from exc
        keywords = load_keywords(cfg.keywords) if cfg.keywords else None
        posts, manifest = ingest(raw, cfg.input, keywords, cfg.sample_n, cfg.seed if cfg.sample_n else None)
        manifest.check()
        meta = {**self.meta("ingest"), "corpus": manifest.to_dict(), "malformed_skipped": len(errors or [])}
        if errors:
            meta["diagnostics"] = [str(e) for e in errors[:100]]
        write_posts(self.path("posts.jsonl"), posts, meta)
        counts = {
            "raw": manifest.raw_count + len(errors or []),
            "malformed_skipped": len(errors or []),
            "after_link_strip": manifest.count_after_strip,
            "ingested": manifest.post_count,
        }
        return counts, OUTPUTS["ingest"]

    def score(self):
        posts = load_posts(self.path("posts.jsonl"))
        results = score_texts([p.text for p in posts], self.lexicon, self.cfg.rules, self.cfg.workers)
        scored = [AnalyzedPost.from_result(p, r) for p, r in zip(posts, results)]
        meta = {**self.meta("score"), "lexicon_digest": self.lexicon.source_digest, "rules": self.cfg.rules.as_dict()}
        write_analyzed(self.path("scored.jsonl"), scored, meta)
        return {"scored": len(scored), "no_signal": sum(r.no_signal for r in results)}, OUTPUTS["score"]

    def classify(self):
        cfg = self.cfg
        scored = read_analyzed(self.path("scored.jsonl"))
        pool = load_exemplars(cfg.exemplars)
        outputs = list(OUTPUTS["classify"])
        client, audit = None, None
        if cfg.mode == "remote":
            client = ReplayClient.from_audit_log(cfg.replay_log) if cfg.replay_log else ChatCompletionClient(cfg.client)
            audit = self.path("audit.jsonl")
            outputs.append("audit.jsonl")
        result = classify_batch(
            [s.post for s in scored],
            mode=cfg.mode,
            client=client,
            pool=pool,
            k=cfg.k,
            max_concurrent=cfg.client.max_concurrent_requests,
            audit_log=audit,
        )
        if cfg.mode == "remote" and result.errors and len(result.errors) == len(scored):
            first = next(iter(result.errors.values()))
            raise StageFailed("classify", f"every request failed ({first})", [f"{k}: {v}" for k, v in list(result.errors.items())[:100]])
        labels = dict(result.labels)
        labeled = [s.with_category(labels[s.id]) for s in scored]
        meta = {**self.meta("classify"), "mode": cfg.mode, "prompt_template_version": PROMPT_TEMPLATE_VERSION, "k": cfg.k}
        if result.errors:
            meta["diagnostics"] = [f"{k}: {v}" for k, v in list(result.errors.items())[:100]]
        write_analyzed(self.path("classified.jsonl"), labeled, meta)
        counts = {"classified": len(labeled), "unlabeled": result.unlabeled}
        counts.update({f"category_{k}": v for k, v in result.histogram.items()})
        return counts, outputs

    def evaluate(self):
        doc: dict = {"_meta": self.meta("evaluate")}
        counts = {"evaluated": 0}
        if self.cfg.truth:
            preds = {a.id: a.category for a in read_analyzed(self.path("classified.jsonl"))}
            truth_all = load_labels(self.cfg.truth)
            missing = set(preds) - set(truth_all)
            if missing:
                raise StageFailed("evaluate", f"{len(missing)} classified posts have no ground truth", sorted(missing)[:100])
            # ingest may have dropped posts; score only what reached this stage
            truth = {i: truth_all[i] for i in preds}
            report = evaluate(preds, truth)
            doc["report"] = report.to_dict()
            counts["evaluated"] = report.n_evaluated
        else:
            doc["skipped"] = "no ground-truth file configured"
        self.path("evaluation.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        return counts, OUTPUTS["evaluate"]

    def aggregate(self):
        cfg = self.cfg
        posts = read_analyzed(self.path("classified.jsonl"))
        stations = load_stations(cfg.stations)
        per_station = aggregate_stations(posts, stations, cfg.radius_m, cfg.multi_assign)
        months = aggregate_monthly(posts, cfg.date_range)
        meta = {**self.meta("aggregate"), "radius_m": cfg.radius_m, "multi_assign": cfg.multi_assign}
        write_geojson(self.path("stations.geojson"), per_station, stations, meta)
        write_station_csv(self.path("stations.csv"), per_station, stations, meta)
        write_monthly_csv(self.path("monthly.csv"), months, meta)
        counts = {
            "geo_tagged": sum(1 for p in posts if p.post.has_coordinates),
            "station_assignments": sum(a.post_count for a in per_station),
            "months": len(months),
        }
        return counts, OUTPUTS["aggregate"]


def run_pipeline(
    cfg: PipelineConfig,
    resume: bool = False,
    progress: Callable[[str, str], None] | None = None,
) -> RunManifest:
    """Run every stage in order and write the manifest; see module docstring."""
    run = _Run(cfg, resume)
    run.out.mkdir(parents=True, exist_ok=True)
    try:
        run.lexicon = load_lexicon(cfg.lexicon)
    except (TransitSentimentError, OSError) as exc:
        raise StageFailed("score", f"cannot load lexicon: {exc}") from exc

    manifest = RunManifest(
        config=cfg.snapshot(),
        config_digest=run.digest,
        lexicon_digest=run.lexicon.source_digest,
        prompt_template_version=PROMPT_TEMPLATE_VERSION,
    )
    upstream_reran = False
    for stage in STAGES:
        done = run.completed(stage) if resume and not upstream_reran else None
        if done is not None:
            manifest.counts.update(done["counts"])
            manifest.outputs[stage] = sorted(done["outputs"])
            manifest.stage_status[stage] = "resumed"
            manifest.timings_s[stage] = 0.0
            if progress:
                progress(stage, "resumed")
            continue
        if progress:
            progress(stage, "running")
        t0 = time.perf_counter()
        try:
            counts, outputs = getattr(run, stage)()
        except StageFailed:
            raise
        except (TransitSentimentError, OSError, ValueError, KeyError) as exc:
            raise StageFailed(stage, f"{type(exc).__name__}: {exc}") from exc
        run.finish(stage, counts, outputs)
        upstream_reran = True
        manifest.counts.update(counts)
        manifest.outputs[stage] = outputs
        manifest.stage_status[stage] = "ran"
        manifest.timings_s[stage] = round(time.perf_counter() - t0, 6)

    problems = manifest.check()
    if problems:
        raise StageFailed("manifest", "stage counts are not monotone", problems)
    run.path(MANIFEST_NAME).write_text(json.dumps(manifest.to_dict(), indent=1) + "\n", encoding="utf-8")
    return manifest
