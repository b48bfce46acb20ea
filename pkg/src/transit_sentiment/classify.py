"""Topic classification of posts into the four transit categories.

Two routes:

* ``remote`` sends a few-shot prompt (k labeled exemplars per category) to a
  chat-completion endpoint and decodes the answer with :func:`parse_label`;
* ``local`` is an offline nearest-exemplar vote over term-frequency vectors.
  It exists so tests and CI run without a network; it is scaffolding, not a
  substitute for the language-model classifier.
"""

from __future__ import annotations

import json
import logging
import math
import re
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from . import datafiles
from .errors import InsufficientExemplars, KOutOfRange, TransitSentimentError, UnparsableLabel

log = logging.getLogger(__name__)

PROMPT_TEMPLATE_VERSION = "fewshot-v1"
K_MIN, K_MAX = 1, 10
DEFAULT_K = 5
UNLABELED = "Unlabeled"
DEFAULT_EXEMPLARS = "builtin:exemplars.jsonl"


class TopicCategory(str, Enum):
    SERVICE_MAINTENANCE = "ServiceMaintenance"
    SCHEDULE = "Schedule"
    SAFETY_SECURITY = "SafetySecurity"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


CATEGORIES: tuple[TopicCategory, ...] = tuple(TopicCategory)

_DISPLAY = {
    TopicCategory.SERVICE_MAINTENANCE: "Service and Maintenance",
    TopicCategory.SCHEDULE: "Schedule",
    TopicCategory.SAFETY_SECURITY: "Safety and Security",
    TopicCategory.OTHER: "Other",
}

_DESCRIPTIONS = {
    TopicCategory.SERVICE_MAINTENANCE: "upkeep of trains and stations: cleanliness, smells, trash, "
    "broken escalators, elevators or doors, heating and air conditioning, repairs",
    TopicCategory.SCHEDULE: "timing of trains: delays, waits, skipped stops, reroutes, "
    "frequency, punctuality and service changes",
    TopicCategory.SAFETY_SECURITY: "personal safety of riders: crime, assaults, fights, "
    "harassment, police presence, threatening behaviour, accidents",
    TopicCategory.OTHER: "anything that fits none of the categories above",
}

_ALIASES = {
    "service/maintenance": TopicCategory.SERVICE_MAINTENANCE,
    "service & maintenance": TopicCategory.SERVICE_MAINTENANCE,
    "safety/security": TopicCategory.SAFETY_SECURITY,
    "safety & security": TopicCategory.SAFETY_SECURITY,
    "others": TopicCategory.OTHER,
}
_LABELS = {
    **{c.value.casefold(): c for c in CATEGORIES},
    **{_DISPLAY[c].casefold(): c for c in CATEGORIES},
    **_ALIASES,
}
_TRIM = string.whitespace + string.punctuation.replace("&", "").replace("/", "") + "“”‘’"


def render_label(category: TopicCategory) -> str:
    return category.display_name


def parse_label(response_text: str) -> TopicCategory:
    """Decode a model answer such as ``"  schedule."`` into a category."""
    text = " ".join(response_text.split()).strip(_TRIM)
    if text.casefold().startswith("category:"):
        text = text[len("category:"):].strip(_TRIM)
    key = text.casefold()
    if key in _LABELS:
        return _LABELS[key]
    raise UnparsableLabel(response_text)


@dataclass(frozen=True)
class FewShotExemplar:
    text: str
    category: TopicCategory

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("exemplar text must be non-empty")


def load_exemplars(path: str | Path = DEFAULT_EXEMPLARS) -> list[FewShotExemplar]:
    path = str(path)
    raw = datafiles.read_text(path)
    pool = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            pool.append(FewShotExemplar(rec["text"], parse_label(rec["category"])))
        except (KeyError, UnparsableLabel, ValueError) as exc:
            raise ValueError(f"{path}:{line_no}: bad exemplar ({exc})") from None
    return pool


SYSTEM_INSTRUCTION = (
    "You label short social-media posts about a city subway system with exactly one "
    "topic category. Reply with the category name only."
)


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    exemplars: tuple[FewShotExemplar, ...]
    exemplars_per_category: int
    target_text: str
    categories: tuple[TopicCategory, ...] = CATEGORIES
    version: str = PROMPT_TEMPLATE_VERSION

    def user_message(self) -> str:
        lines = ["Categories:"]
        lines += [f"- {c.display_name}: {c.description}" for c in self.categories]
        lines += ["", "Labeled examples:"]
        for ex in self.exemplars:
            lines += [f"Post: {ex.text}", f"Category: {ex.category.display_name}", ""]
        names = ", ".join(c.display_name for c in self.categories)
        lines += [
            f"Classify the next post. Answer with exactly one of: {names}.",
            f"Post: {self.target_text}",
            "Category:",
        ]
        return "\n".join(lines)

    def messages(self) -> list[dict]:
        return [
            {"role": "system", "content": self.instruction},
            {"role": "user", "content": self.user_message()},
        ]

    def render(self) -> str:
        return f"{self.instruction}\n\n{self.user_message()}"


def select_exemplars(
    pool: Iterable[FewShotExemplar], k: int, categories: Sequence[TopicCategory] = CATEGORIES
) -> tuple[FewShotExemplar, ...]:
    """k exemplars per category in category order; within a category sorted by text."""
    if not K_MIN <= k <= K_MAX:
        raise KOutOfRange(f"k={k} outside [{K_MIN}, {K_MAX}]")
    by_cat: dict[TopicCategory, set[str]] = {c: set() for c in categories}
    for ex in pool:
        if ex.category in by_cat:
            by_cat[ex.category].add(ex.text)
    chosen: list[FewShotExemplar] = []
    for c in categories:
        texts = sorted(by_cat[c])
        if len(texts) < k:
            raise InsufficientExemplars(c, len(texts), k)
        chosen += [FewShotExemplar(t, c) for t in texts[:k]]
    return tuple(chosen)


def build_prompt(
    exemplars: Iterable[FewShotExemplar],
    target_text: str,
    k: int = DEFAULT_K,
    categories: Sequence[TopicCategory] = CATEGORIES,
) -> PromptSpec:
    return PromptSpec(
        instruction=SYSTEM_INSTRUCTION,
        exemplars=select_exemplars(exemplars, k, categories),
        exemplars_per_category=k,
        target_text=target_text,
        categories=tuple(categories),
    )


# offline fallback

_TERM_RE = re.compile(r"[0-9a-z]+(?:'[a-z]+)?")


def term_vector(text: str) -> Counter:
    return Counter(_TERM_RE.findall(text.casefold()))


def cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b[t] for t, v in a.items() if t in b)
    if not dot:
        return 0.0
    return dot / (math.sqrt(sum(v * v for v in a.values())) * math.sqrt(sum(v * v for v in b.values())))


class LocalClassifier:
    """Nearest-exemplar vote; ties go to the earlier category in canonical order."""

    def __init__(self, pool: Iterable[FewShotExemplar]):
        self.vectors: dict[TopicCategory, list[Counter]] = {c: [] for c in CATEGORIES}
        for ex in pool:
            self.vectors[ex.category].append(term_vector(ex.text))
        empty = [c for c, vecs in self.vectors.items() if not vecs]
        if empty:
            raise InsufficientExemplars(empty[0], 0, 1)

    def scores(self, text: str) -> dict[TopicCategory, float]:
        vec = term_vector(text)
        return {c: max(cosine(vec, v) for v in vecs) for c, vecs in self.vectors.items()}

    def classify(self, text: str) -> TopicCategory:
        best, best_score = TopicCategory.OTHER, 0.0
        for c, s in self.scores(text).items():
            if s > best_score:
                best, best_score = c, s
        return best


def classify_local(post, exemplar_pool: Iterable[FewShotExemplar]) -> TopicCategory:
    text = post if isinstance(post, str) else post.text
    return LocalClassifier(exemplar_pool).classify(text)


# remote route

class CompletionClient(Protocol):
    def complete(self, messages: list[dict], key: str | None = None) -> str: ...


def classify_remote(
    client: CompletionClient,
    post,
    exemplars: Iterable[FewShotExemplar],
    k: int = DEFAULT_K,
    audit: Callable[[str, str], None] | None = None,
) -> TopicCategory:
    prompt = build_prompt(exemplars, post.text, k)
    raw = client.complete(prompt.messages(), key=post.id)
    log.debug("post %s raw response %r", post.id, raw)
    if audit is not None:
        audit(post.id, raw)
    return parse_label(raw)


@dataclass
class BatchResult:
    labels: list[tuple[str, str]]
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def histogram(self) -> dict[str, int]:
        counts = {c.value: 0 for c in CATEGORIES}
        counts[UNLABELED] = 0
        for _, label in self.labels:
            counts[label] += 1
        return counts

    @property
    def unlabeled(self) -> int:
        return self.histogram[UNLABELED]


def category_shares(histogram: dict[str, int]) -> dict[str, float]:
    """Percentages over labeled posts only."""
    total = sum(v for k, v in histogram.items() if k != UNLABELED)
    return {c.value: (100.0 * histogram.get(c.value, 0) / total if total else 0.0) for c in CATEGORIES}


def classify_batch(
    posts: Sequence,
    mode: str = "local",
    client: CompletionClient | None = None,
    pool: Sequence[FewShotExemplar] | None = None,
    k: int = DEFAULT_K,
    max_concurrent: int = 1,
    audit_log: str | Path | None = None,
) -> BatchResult:
    """Label every post; failures become ``Unlabeled`` and are reported in ``errors``."""
    if pool is None:
        pool = load_exemplars()
    if mode == "local":
        clf = LocalClassifier(pool)
        return BatchResult([(p.id, clf.classify(p.text).value) for p in posts])
    if mode != "remote":
        raise ValueError(f"unknown mode {mode!r}")
    if client is None:
        raise ValueError("remote mode needs a client")
    select_exemplars(pool, k)  # fail fast before any request

    raw: dict[str, str] = {}

    def one(post) -> tuple[str, str, str | None]:
        try:
            cat = classify_remote(client, post, pool, k, audit=raw.__setitem__)
            return post.id, cat.value, None
        except TransitSentimentError as exc:
            log.warning("post %s left unlabeled: %s", post.id, exc)
            return post.id, UNLABELED, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, max_concurrent)) as ex:
        results = list(ex.map(one, posts))

    if audit_log is not None:
        with open(audit_log, "w", encoding="utf-8") as fh:
            for post in posts:
                if post.id in raw:
                    rec = {"id": post.id, "prompt_version": PROMPT_TEMPLATE_VERSION, "response": raw[post.id]}
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    return BatchResult(
        labels=[(pid, label) for pid, label, _ in results],
        errors={pid: err for pid, _, err in results if err},
    )
