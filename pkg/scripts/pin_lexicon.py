"""Produce the packaged lexicon from an upstream ``vader_lexicon.txt``.

The upstream file (vaderSentiment 3.3.2, MIT licensed) contains a handful of
entries that the strict loader rejects. The transformation below is
behaviour-preserving for every token the scorer can actually reach:

* tokens with internal whitespace are dropped (a whitespace tokenizer never
  produces them);
* exact duplicate tokens keep the LAST occurrence (upstream loads into a dict);
* case variants collapse onto the lowercase entry (upstream lookups lowercase
  the token first, so the uppercase rows were unreachable).

Usage::

    python scripts/pin_lexicon.py UPSTREAM.txt src/transit_sentiment/data/vader_lexicon.txt
"""

from __future__ import annotations

import sys
from pathlib import Path


def pin(src: Path, dst: Path) -> dict[str, int]:
    rows: dict[str, str] = {}
    stats = {"whitespace": 0, "duplicate": 0, "case_variant": 0}
    lines = src.read_text(encoding="utf-8").splitlines()
    for line in lines:
        if not line.strip():
            continue
        token = line.split("\t", 1)[0]
        if len(token.split()) != 1:
            stats["whitespace"] += 1
            continue
        if token in rows:
            stats["duplicate"] += 1
        rows[token] = line

    folded: dict[str, str] = {}
    for token, line in rows.items():
        key = token.lower()
        if key != token:
            if key in rows:
                stats["case_variant"] += 1
                continue
            line = key + line[len(token):]
        folded[key] = line

    dst.write_text("\n".join(folded.values()) + "\n", encoding="utf-8")
    return stats


if __name__ == "__main__":
    print(pin(Path(sys.argv[1]), Path(sys.argv[2])))
