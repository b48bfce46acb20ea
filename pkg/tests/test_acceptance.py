"""Acceptance gate: criteria 1-10, one summary line each at the end of the run.

Tolerances are fixed here and must not be loosened to make a check pass.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

import pytest

from transit_sentiment.aggregate import (
    MILE_M,
    Station,
    StationIndex,
    aggregate_monthly,
    aggregate_stations,
    assign_stations,
    haversine,
    load_stations,
    map_to_station,
)
from transit_sentiment.classify import CATEGORIES, build_prompt, category_shares, classify_batch, load_exemplars
from transit_sentiment.config import validate_config
from transit_sentiment.errors import KOutOfRange
from transit_sentiment.evaluate import ConfusionCounts, confusion, evaluate, f1
from transit_sentiment.ingest import write_posts
from transit_sentiment.pipeline import MANIFEST_NAME, OUTPUTS, run_pipeline
from transit_sentiment.records import AnalyzedPost
from transit_sentiment.sentiment import Polarity, analyze, classify_polarity, normalize
from transit_sentiment.synth import REFERENCE_COUNTS, generate_synthetic_corpus, write_truth

FIXTURES = Path(__file__).parent / "fixtures"

CRITERIA = {
    1: "normalization point checks and properties",
    2: "golden corpus matches the reference scorer within 1e-4",
    3: "reference example replay: compounds within 0.05 and labels exact",
    4: "strict +/-0.1 polarity thresholds",
    5: "confusion counts vs brute force; f1(0.9456, 0.9420)",
    6: "category distribution replay: histogram and one-decimal percentages",
    7: "prompt protocol: k=5 gives 20 exemplars, deterministic, k range",
    8: "geospatial radius audit, nearest-station oracle, haversine points",
    9: "mass conservation for stations and months",
    10: "byte-identical stage outputs across two local runs",
}

COMPOUND_TOL = 1e-4
EXAMPLE_TOL = 0.05
HAVERSINE_912_TOL = 2.0
QUARTER_CIRCLE_TOL = 1.0
SHARE_SUM_TOL = 1e-6

REFERENCE_EXAMPLES = json.loads((FIXTURES / "reference_examples.json").read_text(encoding="utf-8"))
GOLDEN = [json.loads(line) for line in (FIXTURES / "golden_sentiment.jsonl").read_text(encoding="utf-8").splitlines()]


# 1

@pytest.mark.criterion(1)
def test_c1_normalize_points():
    assert normalize(0, 15) == 0.0
    assert abs(normalize(4, 15) - 0.7184) <= COMPOUND_TOL
    assert abs(normalize(-4, 15) + 0.7184) <= COMPOUND_TOL


@pytest.mark.criterion(1)
def test_c1_normalize_monotone_and_bounded():
    rng = random.Random(1)
    xs = sorted({rng.uniform(-1000.0, 1000.0) for _ in range(10_000)})
    assert len(xs) == 10_000
    ys = [normalize(x, 15) for x in xs]
    assert all(abs(y) < 1 for y in ys)
    assert all(a < b for a, b in zip(ys, ys[1:]))


# 2

@pytest.mark.criterion(2)
def test_c2_golden_corpus():
    assert len(GOLDEN) == 100
    worst = max(abs(analyze(row["text"]).compound - row["compound"]) for row in GOLDEN)
    assert worst <= COMPOUND_TOL, f"max deviation {worst:.2e}"


# 3

@pytest.mark.criterion(3)
@pytest.mark.parametrize("row", range(len(REFERENCE_EXAMPLES)))
def test_c3_example_compound(row):
    rec = REFERENCE_EXAMPLES[row]
    got = analyze(rec["text"]).compound
    assert abs(got - rec["expected_compound"]) <= EXAMPLE_TOL, f"compound {got:.4f} vs table {rec['expected_compound']}"


@pytest.mark.criterion(3)
@pytest.mark.parametrize("row", range(len(REFERENCE_EXAMPLES)))
def test_c3_example_polarity(row):
    rec = REFERENCE_EXAMPLES[row]
    assert analyze(rec["text"]).polarity.value == rec["expected_polarity"]


# 4

@pytest.mark.criterion(4)
def test_c4_thresholds():
    assert classify_polarity(0.1) is Polarity.NEUTRAL
    assert classify_polarity(-0.1) is Polarity.NEUTRAL
    assert classify_polarity(math.nextafter(0.1, 1.0)) is Polarity.POSITIVE
    assert classify_polarity(math.nextafter(-0.1, -1.0)) is Polarity.NEGATIVE
    assert classify_polarity(0.1 + 1e-9) is Polarity.POSITIVE


# 5

def _brute_force(pred: dict, truth: dict) -> dict:
    out = {}
    for c in CATEGORIES:
        tp = fp = fn = tn = 0
        for i in truth:
            p, t = pred[i] == c.value, truth[i] == c.value
            if p and t:
                tp += 1
            elif p:
                fp += 1
            elif t:
                fn += 1
            else:
                tn += 1
        out[c] = (tp, fp, fn, tn)
    return out


@pytest.mark.criterion(5)
def test_c5_confusion_matches_brute_force():
    rng = random.Random(5)
    labels = [c.value for c in CATEGORIES]
    for _ in range(100):
        truth = {f"p{i}": rng.choice(labels) for i in range(50)}
        pred = {i: rng.choice(labels) for i in truth}
        oracle = _brute_force(pred, truth)
        got = confusion(pred, truth)
        for c in CATEGORIES:
            assert got[c] == ConfusionCounts(*oracle[c])
        report = evaluate(pred, truth)
        for c in CATEGORIES:
            tp, fp, fn, _ = oracle[c]
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            assert report.per_category[c].precision == p
            assert report.per_category[c].recall == r
            assert report.per_category[c].f1 == (2 * p * r / (p + r) if p + r else 0.0)


@pytest.mark.criterion(5)
def test_c5_f1_of_published_inputs():
    assert abs(f1(0.9456, 0.9420) - 0.9438) <= COMPOUND_TOL


# 6

@pytest.fixture(scope="module")
def distribution_batch():
    mix = {c: n / 36000 for c, n in REFERENCE_COUNTS.items()}
    posts, truth = generate_synthetic_corpus(36000, 2022, category_mix=mix)
    result = classify_batch(posts, mode="local", pool=load_exemplars())
    return result, truth


@pytest.mark.criterion(6)
def test_c6_distribution_histogram(distribution_batch):
    result, truth = distribution_batch
    expected = {c.value: REFERENCE_COUNTS[c] for c in CATEGORIES}
    truth_hist = {c.value: sum(1 for t in truth if t["category"] == c.value) for c in CATEGORIES}
    assert truth_hist == expected
    hist = result.histogram
    assert hist.pop("Unlabeled") == 0
    assert hist == expected


PUBLISHED_PERCENT = {"ServiceMaintenance": "4.6", "Schedule": "16.8", "SafetySecurity": "21.5", "Other": "57.1"}


@pytest.mark.criterion(6)
@pytest.mark.parametrize("category", list(PUBLISHED_PERCENT))
def test_c6_distribution_percentages(distribution_batch, category):
    result, _ = distribution_batch
    shares = category_shares(result.histogram)
    assert f"{shares[category]:.1f}" == PUBLISHED_PERCENT[category], f"{shares[category]:.4f}%"


# 7

@pytest.mark.criterion(7)
def test_c7_prompt_protocol():
    pool = load_exemplars()
    spec = build_prompt(pool, "the 7 train is late", k=5)
    assert len(spec.exemplars) == 20
    for c in CATEGORIES:
        assert sum(1 for e in spec.exemplars if e.category is c) == 5
    shuffled = list(pool)
    random.Random(7).shuffle(shuffled)
    again = build_prompt(shuffled, "the 7 train is late", k=5)
    assert spec.render().encode("utf-8") == again.render().encode("utf-8")
    assert spec.messages() == again.messages()
    for k in (0, 11):
        with pytest.raises(KOutOfRange):
            build_prompt(pool, "x", k=k)
    for k in (1, 10):
        assert len(build_prompt(pool, "x", k=k).exemplars) == 4 * k


# 8

HAVERSINE_POINTS = [
    ((40.7580, -73.9855), (40.7580, -73.9855), 0.0, 0.0),
    ((40.7580, -73.9855), (40.7527, -73.9772), 912.0, HAVERSINE_912_TOL),
    ((0.0, 0.0), (0.0, 90.0), 10_007_543.0, QUARTER_CIRCLE_TOL),
]


@pytest.mark.criterion(8)
@pytest.mark.parametrize("a,b,expected,tol", HAVERSINE_POINTS, ids=["same-point", "midtown-912m", "quarter-circle"])
def test_c8_haversine_points(a, b, expected, tol):
    got = haversine(a, b)
    assert abs(got - expected) <= tol, f"{got:.2f} m"


def _scored_corpus(n: int, seed: int) -> list[AnalyzedPost]:
    posts, truth = generate_synthetic_corpus(n, seed)
    labels = {t["id"]: t["category"] for t in truth}
    return [AnalyzedPost.from_result(p, analyze(p.text)).with_category(labels[p.id]) for p in posts]


@pytest.mark.criterion(8)
def test_c8_assignments_within_radius():
    stations = load_stations()
    by_id = {s.id: s for s in stations}
    posts = _scored_corpus(2000, 8)
    assignment = assign_stations(posts, stations)
    audited = 0
    for p in posts:
        for sid in assignment[p.id]:
            s = by_id[sid]
            assert haversine((p.post.lat, p.post.lon), (s.lat, s.lon)) <= MILE_M
            audited += 1
    assert audited > 1000


@pytest.mark.criterion(8)
def test_c8_nearest_station_matches_all_pairs():
    rng = random.Random(88)
    stations = [Station(f"T{i:02d}", f"t{i}", rng.uniform(40.60, 40.85), rng.uniform(-74.05, -73.85)) for i in range(50)]
    index = StationIndex(stations)
    hits = 0
    for _ in range(1000):
        pt = (rng.uniform(40.58, 40.87), rng.uniform(-74.07, -73.83))
        dists = sorted((haversine(pt, (s.lat, s.lon)), s.id) for s in stations)
        expected = dists[0][1] if dists[0][0] <= MILE_M else None
        post = type("P", (), {"lat": pt[0], "lon": pt[1]})()
        assert map_to_station(post, index) == expected
        hits += expected is not None
    assert 100 < hits < 1000


# 9

@pytest.mark.criterion(9)
def test_c9_mass_conservation():
    stations = load_stations()
    posts = _scored_corpus(3000, 9)
    assignment = assign_stations(posts, stations)
    assigned = sum(1 for p in posts if p.post.has_coordinates and assignment[p.id])
    aggs = aggregate_stations(posts, stations)
    assert sum(a.post_count for a in aggs) == assigned
    assert assigned < sum(1 for p in posts if p.post.has_coordinates)
    months = aggregate_monthly(posts)
    assert sum(m.total for m in months) == len(posts)
    for m in months:
        assert m.shares_defined
        assert abs(sum(m.shares.values()) - 100.0) <= SHARE_SUM_TOL


# 10

@pytest.mark.criterion(10)
def test_c10_pipeline_determinism(tmp_path):
    posts, truth = generate_synthetic_corpus(1000, 10, duplicate_fraction=0.02)
    write_posts(tmp_path / "posts.jsonl", posts)
    write_truth(tmp_path / "truth.jsonl", truth)
    ini = tmp_path / "run.ini"
    ini.write_text("[paths]\ninput = posts.jsonl\ntruth = truth.jsonl\n[sampling]\nseed = 10\n", encoding="utf-8")
    outputs = [name for names in OUTPUTS.values() for name in names]
    runs = []
    for name in ("a", "b"):
        cfg = validate_config(ini, [f"paths.output_dir={tmp_path / name}"])
        manifest = run_pipeline(cfg)
        runs.append((tmp_path / name, manifest))
    (a, ma), (b, mb) = runs
    for name in outputs:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    da, db = ma.to_dict(), mb.to_dict()
    for d in (da, db):
        d.pop("timings_s")
        d["config"].pop("output_dir")
    assert da == db
    assert (a / MANIFEST_NAME).is_file()
