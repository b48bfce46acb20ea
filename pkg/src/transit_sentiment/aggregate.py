"""Spatial (per station) and temporal (per month) roll-ups of analyzed posts."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import datafiles
from .classify import CATEGORIES, UNLABELED
from .errors import InvalidCoordinate
from .records import AnalyzedPost
from .sentiment import Polarity

EARTH_RADIUS_M = 6_371_000.0
MILE_M = 1609.34
DEFAULT_STATIONS = "builtin:stations.csv"
POLARITIES = (Polarity.POSITIVE, Polarity.NEUTRAL, Polarity.NEGATIVE)
CATEGORY_KEYS = tuple(c.value for c in CATEGORIES) + (UNLABELED,)


@dataclass(frozen=True)
class Station:
    id: str
    name: str
    lat: float
    lon: float

    def __post_init__(self):
        _check_coord(self.lat, self.lon)


def _check_coord(lat: float, lon: float) -> None:
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise InvalidCoordinate(0, f"coordinate ({lat}, {lon}) out of range")


def load_stations(path: str | Path = DEFAULT_STATIONS) -> list[Station]:
    """Station registry CSV with columns id,name,lat,lon; returned sorted by id."""
    path = str(path)
    text = datafiles.read_text(path)
    stations = [
        Station(row["id"], row["name"], float(row["lat"]), float(row["lon"]))
        for row in csv.DictReader(text.splitlines())
    ]
    ids = [s.id for s in stations]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate station ids in registry")
    return sorted(stations, key=lambda s: s.id)


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between (lat, lon) pairs in degrees."""
    (lat1, lon1), (lat2, lon2) = a, b
    _check_coord(lat1, lon1)
    _check_coord(lat2, lon2)
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


class StationIndex:
    """Vectorised prefilter over a registry; final distances use :func:`haversine`."""

    def __init__(self, stations: Sequence[Station]):
        self.stations = sorted(stations, key=lambda s: s.id)
        self._lat = np.radians([s.lat for s in self.stations])
        self._lon = np.radians([s.lon for s in self.stations])

    def candidates(self, lat: float, lon: float, radius: float) -> list[tuple[float, Station]]:
        if not self.stations:
            return []
        phi = math.radians(lat)
        h = (
            np.sin((self._lat - phi) / 2) ** 2
            + np.cos(phi) * np.cos(self._lat) * np.sin((self._lon - math.radians(lon)) / 2) ** 2
        )
        approx = 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))
        # 1 m slack so the exact scalar check decides boundary cases
        near = np.nonzero(approx <= radius + 1.0)[0]
        out = []
        for i in near:
            s = self.stations[i]
            d = haversine((lat, lon), (s.lat, s.lon))
            if d <= radius:
                out.append((d, s))
        return out

    def nearest(self, lat: float, lon: float, radius: float) -> Station | None:
        best = None
        for d, s in self.candidates(lat, lon, radius):
            if best is None or d < best[0]:  # stations are in id order, so ties keep the lower id
                best = (d, s)
        return best[1] if best else None


def map_to_station(post, stations: Sequence[Station] | StationIndex, radius: float = MILE_M) -> str | None:
    """Id of the nearest station within ``radius`` meters, or None."""
    p = post.post if isinstance(post, AnalyzedPost) else post
    if p.lat is None or p.lon is None:
        return None
    index = stations if isinstance(stations, StationIndex) else StationIndex(stations)
    s = index.nearest(p.lat, p.lon, radius)
    return s.id if s else None


def stations_within(post, stations: Sequence[Station] | StationIndex, radius: float = MILE_M) -> list[str]:
    p = post.post if isinstance(post, AnalyzedPost) else post
    if p.lat is None or p.lon is None:
        return []
    index = stations if isinstance(stations, StationIndex) else StationIndex(stations)
    return [s.id for _, s in index.candidates(p.lat, p.lon, radius)]


@dataclass
class StationAggregate:
    station_id: str
    post_count: int = 0
    cumulative_abs_compound: float = 0.0
    sum_compound: float = 0.0
    per_category: dict[str, list] = field(default_factory=lambda: {k: [0, 0.0] for k in CATEGORY_KEYS})
    per_polarity: dict[str, int] = field(default_factory=lambda: {p.value: 0 for p in POLARITIES})

    @property
    def mean_compound(self) -> float | None:
        return self.sum_compound / self.post_count if self.post_count else None

    def merge(self, other: "StationAggregate") -> "StationAggregate":
        """Combine two partial aggregates of the same station."""
        if other.station_id != self.station_id:
            raise ValueError("cannot merge aggregates of different stations")
        out = StationAggregate(self.station_id)
        out.post_count = self.post_count + other.post_count
        out.cumulative_abs_compound = self.cumulative_abs_compound + other.cumulative_abs_compound
        out.sum_compound = self.sum_compound + other.sum_compound
        for k in CATEGORY_KEYS:
            a, b = self.per_category[k], other.per_category[k]
            out.per_category[k] = [a[0] + b[0], a[1] + b[1]]
        for k in out.per_polarity:
            out.per_polarity[k] = self.per_polarity[k] + other.per_polarity[k]
        return out

    def properties(self) -> dict:
        return {
            "station_id": self.station_id,
            "post_count": self.post_count,
            "cumulative_abs_compound": self.cumulative_abs_compound,
            "mean_compound": self.mean_compound,
            "per_category": {k: {"count": v[0], "cumulative_abs_compound": v[1]} for k, v in self.per_category.items()},
            "per_polarity": dict(self.per_polarity),
        }


def _build(station_id: str, members: list[AnalyzedPost]) -> StationAggregate:
    # fsum keeps the totals independent of post order
    agg = StationAggregate(station_id)
    agg.post_count = len(members)
    agg.cumulative_abs_compound = math.fsum(abs(m.compound) for m in members)
    agg.sum_compound = math.fsum(m.compound for m in members)
    for k in CATEGORY_KEYS:
        vals = [abs(m.compound) for m in members if (m.category or UNLABELED) == k]
        agg.per_category[k] = [len(vals), math.fsum(vals)]
    for m in members:
        agg.per_polarity[m.polarity.value] += 1
    return agg


def assign_stations(
    posts: Iterable[AnalyzedPost],
    stations: Sequence[Station],
    radius: float = MILE_M,
    multi_assign: bool = False,
) -> dict[str, list[str]]:
    """post id -> assigned station ids (empty when none in range)."""
    index = StationIndex(stations)
    out = {}
    for p in posts:
        if multi_assign:
            out[p.id] = stations_within(p, index, radius)
        else:
            sid = map_to_station(p, index, radius)
            out[p.id] = [sid] if sid else []
    return out


def aggregate_stations(
    posts: Sequence[AnalyzedPost],
    stations: Sequence[Station],
    radius: float = MILE_M,
    multi_assign: bool = False,
) -> list[StationAggregate]:
    """One aggregate per registry station (id order), zero-filled when empty."""
    assignment = assign_stations(posts, stations, radius, multi_assign)
    members: dict[str, list[AnalyzedPost]] = {s.id: [] for s in stations}
    for p in posts:
        for sid in assignment[p.id]:
            members[sid].append(p)
    return [_build(sid, members[sid]) for sid in sorted(members)]


@dataclass
class MonthlyAggregate:
    year_month: str
    counts: dict[str, int]
    shares: dict[str, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def shares_defined(self) -> bool:
        return self.total > 0


def _month_key(ts: datetime) -> tuple[int, int]:
    ts = ts.astimezone(timezone.utc)
    return ts.year, ts.month


def _parse_month(value) -> tuple[int, int]:
    if isinstance(value, datetime):
        return _month_key(value)
    y, m = str(value)[:7].split("-")
    return int(y), int(m)


def _month_range(start: tuple[int, int], end: tuple[int, int]) -> list[tuple[int, int]]:
    out = []
    y, m = start
    while (y, m) <= end:
        out.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def aggregate_monthly(posts: Sequence[AnalyzedPost], date_range=None) -> list[MonthlyAggregate]:
    """Polarity counts and percentage shares per UTC calendar month.

    ``date_range`` is an inclusive ``(start, end)`` pair of datetimes or
    ``YYYY-MM`` strings; by default it spans the posts. Posts outside the range
    are ignored. Empty months are emitted with zero counts and zero shares.
    """
    keys = [_month_key(p.post.posted_at) for p in posts]
    if date_range is None:
        if not posts:
            return []
        start, end = min(keys), max(keys)
    else:
        start, end = _parse_month(date_range[0]), _parse_month(date_range[1])
    buckets = {k: {p.value: 0 for p in POLARITIES} for k in _month_range(start, end)}
    for key, p in zip(keys, posts):
        if key in buckets:
            buckets[key][p.polarity.value] += 1
    out = []
    for (y, m), counts in buckets.items():
        total = sum(counts.values())
        shares = {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}
        out.append(MonthlyAggregate(f"{y:04d}-{m:02d}", counts, shares))
    return out


# writers

def write_geojson(path, aggregates: Sequence[StationAggregate], stations: Sequence[Station], meta: dict | None = None):
    by_id = {s.id: s for s in stations}
    features = []
    for agg in aggregates:
        s = by_id[agg.station_id]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [s.lon, s.lat]},
                "properties": {"name": s.name, **agg.properties()},
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    if meta:
        doc["metadata"] = meta
    Path(path).write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def _meta_comment(meta: dict | None) -> str:
    if not meta:
        return ""
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"


def write_station_csv(path, aggregates: Sequence[StationAggregate], stations: Sequence[Station], meta: dict | None = None):
    by_id = {s.id: s for s in stations}
    cols = ["station_id", "name", "lat", "lon", "post_count", "cumulative_abs_compound", "mean_compound"]
    cols += [f"n_{k}" for k in CATEGORY_KEYS] + [f"abs_{k}" for k in CATEGORY_KEYS]
    cols += [f"n_{p.value.lower()}" for p in POLARITIES]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_meta_comment(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for a in aggregates:
            s = by_id[a.station_id]
            row = [s.id, s.name, s.lat, s.lon, a.post_count, a.cumulative_abs_compound, a.mean_compound if a.post_count else ""]
            row += [a.per_category[k][0] for k in CATEGORY_KEYS] + [a.per_category[k][1] for k in CATEGORY_KEYS]
            row += [a.per_polarity[p.value] for p in POLARITIES]
            w.writerow(row)


def write_monthly_csv(path, months: Sequence[MonthlyAggregate], meta: dict | None = None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_meta_comment(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year_month", "n_pos", "n_neu", "n_neg", "pct_pos", "pct_neu", "pct_neg"])
        for m in months:
            c, s = m.counts, m.shares
            w.writerow([
                m.year_month, c["Positive"], c["Neutral"], c["Negative"],
                f"{s['Positive']:.6f}", f"{s['Neutral']:.6f}", f"{s['Negative']:.6f}",
            ])
