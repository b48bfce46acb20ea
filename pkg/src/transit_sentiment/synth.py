"""Deterministic synthetic corpus with known topic and sentiment labels.

Every post is ``<keyword prefix> <sentiment tail>. <topic phrase> <noise>``.
Topic phrases carry no lexicon hits, so the sentiment label is decided by the
tail alone; the tail comes first so nothing in the phrase can negate it.
"""

from __future__ import annotations

import json
import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .aggregate import EARTH_RADIUS_M, Station, load_stations
from .classify import CATEGORIES, TopicCategory
from .errors import InvalidMix
from .ingest import Post
from .sentiment import Polarity, analyze

# category shares reported for the 36,000-post analysis sample
REFERENCE_COUNTS = {
    TopicCategory.SERVICE_MAINTENANCE: 1667,
    TopicCategory.SCHEDULE: 6050,
    TopicCategory.SAFETY_SECURITY: 7708,
    TopicCategory.OTHER: 20575,
}
DEFAULT_CATEGORY_MIX = {
    TopicCategory.SERVICE_MAINTENANCE: 0.046,
    TopicCategory.SCHEDULE: 0.168,
    TopicCategory.SAFETY_SECURITY: 0.215,
    TopicCategory.OTHER: 0.571,
}
DEFAULT_SENTIMENT_MIX = {Polarity.POSITIVE: 0.30, Polarity.NEUTRAL: 0.37, Polarity.NEGATIVE: 0.33}

TOPIC_PHRASES: dict[TopicCategory, list[str]] = {
    TopicCategory.SERVICE_MAINTENANCE: [
        "the escalator at {st} is out of order again",
        "the elevator at {st} has been out of service all week",
        "trash piled up on the platform at {st}",
        "water dripping from the ceiling at {st}",
        "the air conditioning in this car quit halfway through the ride",
        "the floor of this car is covered in garbage",
        "the station bathroom at {st} is closed for repairs",
        "turnstiles at {st} are jammed again",
        "the seats in this car are sticky and stained",
        "rats running along the tracks at {st}",
        "the heater in the car is blasting in july",
        "someone spilled soda all over the car floor",
        "the stairs at {st} have cracked tiles",
        "the lights in the car keep flickering",
        "paint peeling off the walls at {st}",
    ],
    TopicCategory.SCHEDULE: [
        "the {line} train is running late again",
        "waited twenty minutes for the {line} train at {st}",
        "the {line} train skipped {st} without notice",
        "signal issues holding up the {line} line",
        "weekend reroute on the {line} line again",
        "the express {line} train is running local",
        "countdown clock at {st} says next {line} train in 18 minutes",
        "the {line} train sat between stations for half an hour",
        "zero {line} trains running downtown this morning",
        "the {line} is running on a reduced schedule",
        "the {line} train has not come in 25 minutes",
        "{line} train held because of a train ahead of us",
    ],
    TopicCategory.SAFETY_SECURITY: [
        "a man was yelling at passengers on the {line} train",
        "police officers searching bags at {st}",
        "a guy was pushed onto the tracks at {st}",
        "two men started punching each other in the car",
        "someone had a purse snatched on the platform at {st}",
        "a woman was followed through the car by a stranger on the {line} train",
        "a man with a knife on the platform at {st}",
        "cops handcuffed a guy at {st}",
        "somebody set off a smoke canister in the {line} train",
        "a man pulled a blade on a rider at {st}",
        "a guy was swinging a metal pipe on the {line} train",
        "an unattended bag got the platform at {st} evacuated",
    ],
    TopicCategory.OTHER: [
        "grabbing pizza near {st} before the game",
        "heading to the museum with my kids",
        "the street musicians at {st} are doing jazz covers",
        "reading a book on my commute",
        "meeting my cousins in midtown tonight",
        "new mural going up near {st}",
        "watching the sunset from the {line} train",
        "on my way to the concert in brooklyn",
        "the mets are at citi field tonight",
        "selling my old bike, dm me",
        "got a new phone today",
        "voting day is next tuesday",
    ],
}

SENTIMENT_TAILS: dict[Polarity, list[str]] = {
    Polarity.POSITIVE: ["love it", "great job", "thank you", "so happy", "awesome", "nice work"],
    Polarity.NEUTRAL: ["psa", "heads up", "update", "right now", "as of 8am", "saw this"],
    Polarity.NEGATIVE: ["this is awful", "terrible", "so frustrating", "hate this", "worst", "ugh disgusting"],
}

KEYWORD_PREFIXES = ["@MTA", "#MTA", "NYC subway:", "@NYCTSubway @MTA", "New York subway -"]
NO_KEYWORD_PREFIXES = ["", "so"]
LINES = list("1234567ACEBDFMGJZLNQRW")

# Staten Island, well over a mile from every registry station
FAR_CENTER = (40.600, -74.140)

YEAR_START = datetime(2022, 1, 1, tzinfo=timezone.utc)
YEAR_SECONDS = 365 * 24 * 3600


def apportion(mix: Mapping, n: int) -> dict:
    """Largest-remainder integer counts summing to ``n``; ties go to mix order."""
    total = sum(mix.values())
    if abs(total - 1.0) > 1e-9 or any(v < 0 for v in mix.values()):
        raise InvalidMix(f"mix proportions must be >= 0 and sum to 1 (sum={total})")
    quotas = {k: v * n for k, v in mix.items()}
    counts = {k: math.floor(q + 1e-9) for k, q in quotas.items()}
    short = n - sum(counts.values())
    order = sorted(mix, key=lambda k: (-(quotas[k] - counts[k]), list(mix).index(k)))
    for k in order[:short]:
        counts[k] += 1
    return counts


def _offset(lat: float, lon: float, meters: float, bearing: float) -> tuple[float, float]:
    d = meters / EARTH_RADIUS_M
    phi, lmb = math.radians(lat), math.radians(lon)
    phi2 = math.asin(math.sin(phi) * math.cos(d) + math.cos(phi) * math.sin(d) * math.cos(bearing))
    lmb2 = lmb + math.atan2(math.sin(bearing) * math.sin(d) * math.cos(phi), math.cos(d) - math.sin(phi) * math.sin(phi2))
    return round(math.degrees(phi2), 6), round(math.degrees(lmb2), 6)


def _text_name(station: Station) -> str:
    # names like "Grand Central" carry lexicon hits and would leak sentiment
    return station.name if analyze(station.name).compound == 0 else "the station"


def generate_synthetic_corpus(
    n: int,
    seed: int,
    category_mix: Mapping[TopicCategory, float] | None = None,
    sentiment_mix: Mapping[Polarity, float] | None = None,
    stations: Sequence[Station] | None = None,
    geo_fraction: float = 0.85,
    link_fraction: float = 0.1,
    far_fraction: float = 0.03,
    keyword_fraction: float = 0.97,
    duplicate_fraction: float = 0.0,
) -> tuple[list[Post], list[dict]]:
    """Return ``(posts, truth)``; truth rows are ``{id, category, sentiment}``.

    Geo-tagged posts sit within 1200 m of the station named in the text,
    except a ``far_fraction`` share placed out of range of every station.
    Category and sentiment counts are exact (largest remainder). Duplicates,
    when requested, are extra re-posts by the same author with a later
    timestamp and are labeled like their originals.
    """
    category_mix = dict(category_mix or DEFAULT_CATEGORY_MIX)
    sentiment_mix = dict(sentiment_mix or DEFAULT_SENTIMENT_MIX)
    cat_counts = apportion(category_mix, n)
    sent_counts = apportion(sentiment_mix, n)
    stations = list(stations) if stations is not None else load_stations()
    names = {st.id: _text_name(st) for st in stations}
    rng = random.Random(seed)

    cats = [c for c in category_mix for _ in range(cat_counts[c])]
    sents = [s for s in sentiment_mix for _ in range(sent_counts[s])]
    rng.shuffle(cats)
    rng.shuffle(sents)

    n_authors = max(1, n // 3)
    seen: set[tuple[str, str]] = set()
    posts: list[Post] = []
    truth: list[dict] = []
    for i, (cat, sent) in enumerate(zip(cats, sents)):
        station = rng.choice(stations)
        while True:
            prefix = rng.choice(KEYWORD_PREFIXES if rng.random() < keyword_fraction else NO_KEYWORD_PREFIXES)
            tail = rng.choice(SENTIMENT_TAILS[sent])
            phrase = rng.choice(TOPIC_PHRASES[cat]).format(st=names[station.id], line=rng.choice(LINES))
            text = f"{prefix} {tail}. {phrase} (car {rng.randrange(1000, 10000)})".strip()
            if rng.random() < link_fraction:
                text += f" https://t.co/{rng.randrange(16**8):08x}"
            author = f"u{rng.randrange(n_authors):05d}"
            key = (author, " ".join(text.casefold().split()))
            if key not in seen:
                seen.add(key)
                break
        posted_at = YEAR_START + timedelta(seconds=rng.randrange(YEAR_SECONDS))
        lat = lon = None
        if rng.random() < geo_fraction:
            if rng.random() < far_fraction:
                lat, lon = _offset(*FAR_CENTER, rng.uniform(0, 1500), rng.uniform(0, 2 * math.pi))
            else:
                lat, lon = _offset(station.lat, station.lon, rng.uniform(0, 1200), rng.uniform(0, 2 * math.pi))
        pid = f"syn{seed}-{i:06d}"
        posts.append(Post(pid, author, text, posted_at, lat, lon))
        truth.append({"id": pid, "category": cat.value, "sentiment": sent.value})

    n_dup = round(n * duplicate_fraction)
    for j, src in enumerate(rng.sample(range(n), n_dup) if n_dup else []):
        orig = posts[src]
        pid = f"syn{seed}-d{j:05d}"
        later = orig.posted_at + timedelta(minutes=rng.randrange(1, 240))
        posts.append(Post(pid, orig.author_id, orig.text, later, orig.lat, orig.lon))
        truth.append({**truth[src], "id": pid})
    return posts, truth


def write_truth(path: str | Path, truth: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in truth:
            fh.write(json.dumps(row) + "\n")


def exemplar_records() -> list[dict]:
    """Exemplar pool derived from the topic phrases (fixed station and line)."""
    out = []
    for cat in CATEGORIES:
        for k, phrase in enumerate(TOPIC_PHRASES[cat]):
            text = phrase.format(st=["Union Sq", "Canal St", "Fulton St", "125 St"][k % 4], line="A")
            out.append({"text": text[0].upper() + text[1:], "category": cat.value})
    return out
