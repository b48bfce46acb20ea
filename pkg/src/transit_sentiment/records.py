"""Scored / labeled post records and their JSONL form."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .ingest import Post, record_to_post
from .sentiment import Polarity, SentimentResult


@dataclass(frozen=True)
class AnalyzedPost:
    post: Post
    compound: float
    pos: float
    neu: float
    neg: float
    polarity: Polarity
    category: str | None = None

    @classmethod
    def from_result(cls, post: Post, result: SentimentResult) -> "AnalyzedPost":
        return cls(post, result.compound, result.pos_share, result.neu_share, result.neg_share, result.polarity)

    def with_category(self, category: str) -> "AnalyzedPost":
        return replace(self, category=category)

    @property
    def id(self) -> str:
        return self.post.id

    def to_record(self) -> dict:
        rec = self.post.to_record()
        rec.update(compound=self.compound, pos=self.pos, neu=self.neu, neg=self.neg, polarity=self.polarity.value)
        if self.category is not None:
            rec["category"] = self.category
        return rec

    @classmethod
    def from_record(cls, rec: dict, line: int = 0) -> "AnalyzedPost":
        return cls(
            post=record_to_post(rec, line),
            compound=float(rec["compound"]),
            pos=float(rec["pos"]),
            neu=float(rec["neu"]),
            neg=float(rec["neg"]),
            polarity=Polarity(rec["polarity"]),
            category=rec.get("category"),
        )


def write_analyzed(path: str | Path, items: Iterable[AnalyzedPost], meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta:
            fh.write(json.dumps({"_meta": meta}, ensure_ascii=False) + "\n")
        for item in items:
            fh.write(json.dumps(item.to_record(), ensure_ascii=False) + "\n")


def read_analyzed(path: str | Path) -> list[AnalyzedPost]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "_meta" in rec:
                continue
            out.append(AnalyzedPost.from_record(rec, line_no))
    return out


def read_meta(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.strip():
        rec = json.loads(first)
        if "_meta" in rec:
            return rec["_meta"]
    return None
