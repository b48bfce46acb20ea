"""Sentiment lexicon: token -> mean human-rated valence in [-4, 4]."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping

from . import datafiles
from .errors import DuplicateToken, EmptyLexicon, MalformedLine, ValenceOutOfRange

VALENCE_MIN = -4.0
VALENCE_MAX = 4.0

DEFAULT_LEXICON = "builtin:vader_lexicon.txt"


@dataclass(frozen=True)
class LexiconEntry:
    token: str
    mean_valence: float
    std_dev: float = 0.0
    raw_ratings: tuple[int, ...] = ()

    def to_line(self) -> str:
        return "\t".join(
            [self.token, repr(self.mean_valence), repr(self.std_dev), json.dumps(list(self.raw_ratings))]
        )


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, LexiconEntry]
    source_digest: str
    _valences: Mapping[str, float] = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_entries(cls, entries: list[LexiconEntry]) -> "Lexicon":
        if not entries:
            raise EmptyLexicon("lexicon has no entries")
        table = {e.token: e for e in entries}
        return cls(
            entries=table,
            source_digest=_digest(entries),
            _valences={t: e.mean_valence for t, e in table.items()},
        )

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._valences

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, token: str) -> float | None:
        return self._valences.get(token.lower())


def _digest(entries: list[LexiconEntry]) -> str:
    h = hashlib.sha256()
    for e in entries:
        h.update(e.to_line().encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _parse_line(line: str, line_no: int) -> LexiconEntry:
    parts = line.split("\t")
    if len(parts) < 2:
        raise MalformedLine(line_no, "expected token TAB mean [TAB stddev TAB ratings]")
    token = parts[0]
    if not token or len(token.split()) != 1 or token != token.strip():
        raise MalformedLine(line_no, f"token {token!r} is empty or contains whitespace")
    try:
        mean = float(parts[1])
        std = float(parts[2]) if len(parts) > 2 and parts[2] else 0.0
        ratings = tuple(int(r) for r in json.loads(parts[3])) if len(parts) > 3 and parts[3] else ()
    except (ValueError, TypeError) as exc:
        raise MalformedLine(line_no, str(exc)) from None
    if not VALENCE_MIN <= mean <= VALENCE_MAX:
        raise ValenceOutOfRange(token, mean)
    if std < 0:
        raise MalformedLine(line_no, "negative standard deviation")
    return LexiconEntry(token.lower(), mean, std, ratings)


def parse_lexicon(text: str) -> Lexicon:
    entries: list[LexiconEntry] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        entry = _parse_line(line, line_no)
        if entry.token in seen:
            raise DuplicateToken(entry.token, line_no)
        seen.add(entry.token)
        entries.append(entry)
    return Lexicon.from_entries(entries)


def load_lexicon(path: str | Path = DEFAULT_LEXICON) -> Lexicon:
    """Load a tab-separated lexicon file.

    ``path`` may be ``builtin:<name>`` to read a file shipped in the package
    data directory. Tokens are case-folded on load, so two rows differing only
    by case count as duplicates.
    """
    path = str(path)
    text = datafiles.read_text(path)
    return parse_lexicon(text)


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    return load_lexicon(DEFAULT_LEXICON)


def dump_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    lines = [e.to_line() for e in lexicon.entries.values()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def lookup(lexicon: Lexicon, token: str) -> float | None:
    return lexicon.get(token)
