from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from transit_sentiment.errors import EmptyKeywordList, FileUnreadable, InvalidCoordinate, MalformedRecord
from transit_sentiment.ingest import (
    Post,
    dedupe,
    filter_keywords,
    ingest,
    load_keywords,
    load_posts,
    sample,
    strip_links,
    write_posts,
)

T0 = datetime(2022, 4, 1, 12, 0, tzinfo=timezone.utc)


def post(i, text="MTA is late", author="a", minutes=0, lat=None, lon=None):
    return Post(f"p{i}", author, text, T0 + timedelta(minutes=minutes), lat, lon)


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def rec(i, **kw):
    base = {"id": f"p{i}", "author_id": "a", "text": f"post {i}", "posted_at": "2022-04-01T12:00:00Z"}
    base.update(kw)
    return base


def test_load_three_in_order(tmp_path):
    p = tmp_path / "posts.jsonl"
    write_jsonl(p, [rec(3), rec(1), rec(2)])
    assert [x.id for x in load_posts(p)] == ["p3", "p1", "p2"]


def test_latitude_out_of_range(tmp_path):
    p = tmp_path / "posts.jsonl"
    write_jsonl(p, [rec(1), rec(2, lat=95.0, lon=-73.9)])
    with pytest.raises(InvalidCoordinate) as info:
        load_posts(p)
    assert info.value.line == 2


def test_empty_file(tmp_path):
    p = tmp_path / "posts.jsonl"
    p.write_text("", encoding="utf-8")
    posts = load_posts(p)
    assert posts == []
    _, manifest = ingest(posts, str(p))
    assert manifest.post_count == 0


def test_missing_file(tmp_path):
    with pytest.raises(FileUnreadable):
        load_posts(tmp_path / "nope.jsonl")


def test_malformed_collected(tmp_path):
    p = tmp_path / "posts.jsonl"
    p.write_text(json.dumps(rec(1)) + "\n{oops\n" + json.dumps(rec(1)) + "\n" + json.dumps(rec(3, text="")) + "\n")
    with pytest.raises(MalformedRecord):
        load_posts(p)
    errors = []
    assert [x.id for x in load_posts(p, errors=errors)] == ["p1"]
    assert [e.line for e in errors] == [2, 3, 4]


def test_csv_round_trip(tmp_path):
    posts = [post(1, lat=40.75, lon=-73.98), post(2, text='comma, "quote"\nnewline', minutes=5)]
    p = tmp_path / "posts.csv"
    write_posts(p, posts)
    assert load_posts(p) == posts


def test_jsonl_round_trip_with_meta(tmp_path):
    posts = [post(1, text="ünïcode 🚇 ok", lat=-0.5, lon=179.9), post(2, minutes=61)]
    p = tmp_path / "posts.jsonl"
    write_posts(p, posts, meta={"stage": "ingest"})
    assert load_posts(p) == posts


def test_timestamps_truncated_to_seconds(tmp_path):
    p = tmp_path / "posts.jsonl"
    write_jsonl(p, [rec(1, posted_at="2022-04-01T08:00:00.750-04:00")])
    assert load_posts(p)[0].posted_at == datetime(2022, 4, 1, 12, 0, tzinfo=timezone.utc)


@pytest.mark.parametrize(
    "text,expected",
    [
        ("delayed again https://t.co/abc12 ugh", "delayed again ugh"),
        ("no links here", "no links here"),
        ("https://t.co/abc12", ""),
        ("see t.co/xyz now", "see now"),
    ],
)
def test_strip_links(text, expected):
    assert strip_links(text) == expected


@given(st.text())
def test_strip_links_never_grows(text):
    out = strip_links(text)
    assert len(out) <= len(text)
    if "http" not in text.lower() and "t.co/" not in text.lower():
        assert out == text


def test_dedupe_rules():
    same = [post(1, minutes=5), post(2, minutes=0)]
    assert [p.id for p in dedupe(same)] == ["p2"]
    authors = [post(1, author="a"), post(2, author="b")]
    assert dedupe(authors) == authors
    assert dedupe([]) == []


def _brute_dedupe(posts):
    keep = []
    for p in posts:
        rivals = [q for q in posts if q.author_id == p.author_id and " ".join(q.text.casefold().split()) == " ".join(p.text.casefold().split())]
        first = min(rivals, key=lambda q: (q.posted_at, posts.index(q)))
        if first is p:
            keep.append(p)
    return keep


posts_strategy = st.lists(
    st.tuples(st.sampled_from("abc"), st.sampled_from(["MTA late", "mta  LATE", "subway ok"]), st.integers(0, 5)),
    max_size=25,
).map(lambda rows: [post(i, text=t, author=a, minutes=m) for i, (a, t, m) in enumerate(rows)])


@given(posts_strategy)
def test_dedupe_idempotent_and_matches_brute_force(posts):
    once = dedupe(posts)
    assert dedupe(once) == once
    assert once == _brute_dedupe(posts)


def test_filter_keywords():
    posts = [post(1, "MTA is late"), post(2, "the bus was fine"), post(3, "NYC Subway station closed")]
    kept = filter_keywords(posts, ["MTA", "subway"])
    assert [p.id for p in kept] == ["p1", "p3"]
    with pytest.raises(EmptyKeywordList):
        filter_keywords(posts, [])


def test_builtin_keywords():
    assert "MTA" in load_keywords()


def test_sample_rules():
    posts = [post(i, text=f"t{i}") for i in range(100)]
    assert sample(posts, 100, 1) == posts
    a, b = sample(posts, 10, 42), sample(posts, 10, 42)
    assert a == b and len({p.id for p in a}) == 10
    assert [p.id for p in a] == sorted((p.id for p in a), key=lambda s: int(s[1:]))
    with pytest.raises(ValueError):
        sample(posts, 0, 1)


def test_sample_full_scale():
    posts = [post(i, text=f"t{i}") for i in range(102_530)]
    picked = sample(posts, 36_000, 2022)
    assert len({p.id for p in picked}) == 36_000


def test_same_seed_same_file(tmp_path):
    posts = [post(i, text=f"MTA {i}") for i in range(500)]
    for name in ("a.jsonl", "b.jsonl"):
        kept, manifest = ingest(posts, "x", ["MTA"], 50, 7)
        write_posts(tmp_path / name, kept, {"corpus": manifest.to_dict()})
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_ingest_accounting_and_verbatim_text():
    text = "the train and the platform are packed!!! https://t.co/zz"
    posts = [
        post(1, text=text),
        post(2, text=text, minutes=3),
        post(3, text="https://t.co/only"),
        post(4, text="nothing relevant"),
        post(5, text="MTA again"),
    ]
    kept, m = ingest(posts, "src", ["train", "MTA"])
    m.check()
    assert kept[0].text == "the train and the platform are packed!!!"
    assert (m.raw_count, m.links_stripped, m.empty_after_strip, m.duplicates_removed, m.keyword_dropped) == (5, 3, 1, 1, 1)
    assert m.post_count == 2
    assert m.date_range == ["2022-04-01T12:00:00Z", "2022-04-01T12:00:00Z"]


def test_sampling_requires_seed():
    with pytest.raises(ValueError):
        ingest([post(1)], "x", None, 1, None)
