from __future__ import annotations

from collections import Counter

import pytest

from transit_sentiment.aggregate import haversine, load_stations
from transit_sentiment.classify import LocalClassifier, TopicCategory, load_exemplars
from transit_sentiment.errors import InvalidMix
from transit_sentiment.ingest import ingest, load_keywords, strip_links
from transit_sentiment.sentiment import analyze
from transit_sentiment.synth import (
    DEFAULT_CATEGORY_MIX,
    TOPIC_PHRASES,
    apportion,
    exemplar_records,
    generate_synthetic_corpus,
)


def test_reference_mix_counts():
    _, truth = generate_synthetic_corpus(1000, 1)
    counts = Counter(t["category"] for t in truth)
    assert [counts[c.value] for c in TopicCategory] == [46, 168, 215, 571]


def test_empty_and_deterministic():
    assert generate_synthetic_corpus(0, 1) == ([], [])
    assert generate_synthetic_corpus(200, 3) == generate_synthetic_corpus(200, 3)
    assert generate_synthetic_corpus(200, 3) != generate_synthetic_corpus(200, 4)


def test_invalid_mix():
    with pytest.raises(InvalidMix):
        generate_synthetic_corpus(10, 1, category_mix={TopicCategory.OTHER: 0.5})


def test_apportion_sums():
    assert apportion({"a": 1 / 3, "b": 1 / 3, "c": 1 / 3}, 10) == {"a": 4, "b": 3, "c": 3}
    assert sum(apportion(DEFAULT_CATEGORY_MIX, 36000).values()) == 36000


def test_topic_phrases_carry_no_sentiment():
    for phrases in TOPIC_PHRASES.values():
        for p in phrases:
            assert analyze(p.format(st="Union Sq", line="A")).compound == 0.0, p


def test_labels_recoverable():
    posts, truth = generate_synthetic_corpus(2000, 11)
    clf = LocalClassifier(load_exemplars())
    for p, t in zip(posts, truth):
        text = strip_links(p.text)
        assert clf.classify(text).value == t["category"]
        assert analyze(text).polarity.value == t["sentiment"]


def test_geography():
    stations = load_stations()
    posts, _ = generate_synthetic_corpus(1000, 5)
    geo = [p for p in posts if p.has_coordinates]
    assert 0.75 < len(geo) / len(posts) < 0.95
    nearest = [min(haversine((p.lat, p.lon), (s.lat, s.lon)) for s in stations) for p in geo]
    assert sum(d > 1609.34 for d in nearest) > 0
    assert sum(d <= 1200.5 for d in nearest) > 0.9 * len(geo)


def test_duplicates_and_keywords_exercise_ingest():
    posts, truth = generate_synthetic_corpus(500, 2, duplicate_fraction=0.1)
    assert len(posts) == len(truth) == 550
    kept, manifest = ingest(posts, "synthetic", load_keywords())
    assert manifest.duplicates_removed == 50
    assert 0 < manifest.keyword_dropped < 50
    assert manifest.links_stripped > 0


def test_exemplar_file_matches_generator():
    pool = load_exemplars()
    assert [(e.text, e.category.value) for e in pool] == [(r["text"], r["category"]) for r in exemplar_records()]
    per = Counter(e.category for e in pool)
    assert all(per[c] >= 10 for c in TopicCategory)
