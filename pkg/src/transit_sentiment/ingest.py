"""Post ingestion: load, strip links, de-duplicate, filter and sample."""

from __future__ import annotations

import csv
import json
import logging
import random
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from . import datafiles
from .errors import EmptyKeywordList, FileUnreadable, InvalidCoordinate, MalformedRecord

log = logging.getLogger(__name__)

POST_FIELDS = ("id", "author_id", "text", "posted_at", "lat", "lon")
DEFAULT_KEYWORDS = "builtin:keywords.txt"
SAMPLER = "python random.Random(seed) [MT19937] .sample over indices, input order kept"

# http(s) URLs and bare t.co short links
URL_RE = re.compile(r"(?:https?://|\bt\.co/)\S*", re.IGNORECASE)


@dataclass(frozen=True)
class Post:
    id: str
    author_id: str
    text: str
    posted_at: datetime
    lat: float | None = None
    lon: float | None = None

    @property
    def has_coordinates(self) -> bool:
        return self.lat is not None and self.lon is not None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "author_id": self.author_id,
            "text": self.text,
            "posted_at": format_timestamp(self.posted_at),
            "lat": self.lat,
            "lon": self.lon,
        }


@dataclass
class CorpusManifest:
    source_path: str
    raw_count: int = 0
    links_stripped: int = 0
    empty_after_strip: int = 0
    duplicates_removed: int = 0
    keyword_dropped: int = 0
    sample_dropped: int = 0
    post_count: int = 0
    sample_seed: int | None = None
    sampler: str | None = None
    date_range: list[str | None] = field(default_factory=lambda: [None, None])

    @property
    def count_after_strip(self) -> int:
        return self.raw_count - self.empty_after_strip

    def check(self) -> None:
        assert self.post_count <= self.raw_count
        assert (
            self.duplicates_removed + self.keyword_dropped + self.sample_dropped + self.post_count
            == self.count_after_strip
        )

    def to_dict(self) -> dict:
        return asdict(self)


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 to an aware UTC datetime truncated to whole seconds."""
    value = value.strip()
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _coord(raw, line: int, name: str) -> float | None:
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        return None
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise MalformedRecord(line, f"{name} is not a number: {raw!r}") from None
    if value != value:
        raise MalformedRecord(line, f"{name} is NaN")
    return value


def record_to_post(rec: dict, line: int) -> Post:
    missing = [k for k in ("id", "author_id", "text", "posted_at") if rec.get(k) in (None, "")]
    if missing:
        raise MalformedRecord(line, f"missing field(s): {', '.join(missing)}")
    text = str(rec["text"])
    if not text.strip():
        raise MalformedRecord(line, "empty text")
    try:
        posted_at = parse_timestamp(str(rec["posted_at"]))
    except ValueError as exc:
        raise MalformedRecord(line, f"bad posted_at: {exc}") from None
    lat = _coord(rec.get("lat"), line, "lat")
    lon = _coord(rec.get("lon"), line, "lon")
    if (lat is None) != (lon is None):
        raise MalformedRecord(line, "lat and lon must be given together")
    if lat is not None and not (-90 <= lat <= 90 and -180 <= lon <= 180):
        raise InvalidCoordinate(line, f"coordinate ({lat}, {lon}) out of range")
    return Post(str(rec["id"]), str(rec["author_id"]), text, posted_at, lat, lon)


def _iter_records(path: Path, fmt: str) -> Iterator[tuple[int, dict | MalformedRecord]]:
    """Yield ``(line, record)``; unparsable lines yield the error instead."""
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "jsonl":
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield line_no, MalformedRecord(line_no, f"invalid JSON: {exc.msg}")
                    continue
                if not isinstance(rec, dict):
                    yield line_no, MalformedRecord(line_no, "record is not an object")
                    continue
                if "_meta" in rec:
                    continue
                yield line_no, rec
        elif fmt == "csv":
            reader = csv.DictReader(fh)
            for row in reader:
                yield reader.line_num, row
        else:
            raise ValueError(f"unknown format {fmt!r} (expected jsonl or csv)")


def infer_format(path: str | Path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "jsonl"


def load_posts(
    path: str | Path,
    fmt: str | None = None,
    errors: list[MalformedRecord] | None = None,
) -> list[Post]:
    """Read posts in file order.

    Bad records raise :class:`MalformedRecord` (or its subclass
    :class:`InvalidCoordinate`) carrying the line number. Pass a list as
    ``errors`` to collect the diagnostics and skip bad records instead.
    """
    path = Path(path)
    fmt = fmt or infer_format(path)
    if not path.is_file():
        raise FileUnreadable(f"cannot read {path}")
    posts: list[Post] = []
    seen: set[str] = set()
    try:
        for line_no, rec in _iter_records(path, fmt):
            try:
                if isinstance(rec, MalformedRecord):
                    raise rec
                post = record_to_post(rec, line_no)
                if post.id in seen:
                    raise MalformedRecord(line_no, f"duplicate id {post.id!r}")
            except MalformedRecord as exc:
                if errors is None:
                    raise
                log.warning("skipping record: %s", exc)
                errors.append(exc)
                continue
            seen.add(post.id)
            posts.append(post)
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    return posts


def write_posts(path: str | Path, posts: Iterable[Post], meta: dict | None = None) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=POST_FIELDS, lineterminator="\n")
            writer.writeheader()
            for p in posts:
                writer.writerow({k: ("" if v is None else v) for k, v in p.to_record().items()})
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta:
            fh.write(json.dumps({"_meta": meta}, ensure_ascii=False) + "\n")
        for p in posts:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")


def strip_links(text: str) -> str:
    if not URL_RE.search(text):
        return text
    return " ".join(URL_RE.sub(" ", text).split())


def _dedupe_key(post: Post) -> tuple[str, str]:
    return post.author_id, " ".join(post.text.casefold().split())


def dedupe(posts: Sequence[Post]) -> list[Post]:
    """Keep the earliest post per (author, normalized text); order preserved."""
    best: dict[tuple[str, str], int] = {}
    for i, post in enumerate(posts):
        key = _dedupe_key(post)
        j = best.get(key)
        if j is None or post.posted_at < posts[j].posted_at:
            best[key] = i
    keep = set(best.values())
    return [p for i, p in enumerate(posts) if i in keep]


def load_keywords(path: str | Path = DEFAULT_KEYWORDS) -> list[str]:
    lines = datafiles.read_text(path).splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def filter_keywords(posts: Sequence[Post], keywords: Sequence[str]) -> list[Post]:
    needles = [k.casefold() for k in keywords if k.strip()]
    if not needles:
        raise EmptyKeywordList("at least one keyword is required")
    return [p for p in posts if any(k in p.text.casefold() for k in needles)]


def sample(posts: Sequence[Post], n: int, seed: int) -> list[Post]:
    """Seeded sample without replacement; survivors keep their input order."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if n >= len(posts):
        return list(posts)
    picked = sorted(random.Random(seed).sample(range(len(posts)), n))
    return [posts[i] for i in picked]


def ingest(
    posts: Sequence[Post],
    source_path: str = "",
    keywords: Sequence[str] | None = None,
    sample_n: int | None = None,
    seed: int | None = None,
) -> tuple[list[Post], CorpusManifest]:
    """Run the cleaning chain and account for every dropped post."""
    manifest = CorpusManifest(source_path=str(source_path), raw_count=len(posts))

    cleaned: list[Post] = []
    for p in posts:
        text = strip_links(p.text)
        if text != p.text:
            manifest.links_stripped += 1
        if not text:
            manifest.empty_after_strip += 1
            continue
        cleaned.append(p if text == p.text else Post(p.id, p.author_id, text, p.posted_at, p.lat, p.lon))

    unique = dedupe(cleaned)
    manifest.duplicates_removed = len(cleaned) - len(unique)

    kept = unique
    if keywords:
        kept = filter_keywords(unique, keywords)
        manifest.keyword_dropped = len(unique) - len(kept)

    if sample_n is not None:
        if seed is None:
            raise ValueError("sampling requires a seed")
        sampled = sample(kept, sample_n, seed)
        manifest.sample_dropped = len(kept) - len(sampled)
        manifest.sample_seed = seed
        manifest.sampler = SAMPLER
        kept = sampled

    manifest.post_count = len(kept)
    if kept:
        manifest.date_range = [
            format_timestamp(min(p.posted_at for p in kept)),
            format_timestamp(max(p.posted_at for p in kept)),
        ]
    manifest.check()
    return kept, manifest
