"""Lexicon and rule based sentiment scoring for short social-media text.

Each token's lexicon valence is adjusted for emphasis (ALL CAPS), preceding
degree modifiers, negation and a few idioms. The adjusted valences are summed,
amplified by trailing ``!``/``?`` emphasis and squashed into (-1, 1) with
``x / sqrt(x**2 + alpha)``.

The rule constants reproduce the widely used reference scorer bit for bit,
including two of its quirks that downstream numbers depend on:

* a token that occurs more than once is scored in the context of its FIRST
  occurrence;
* at window distance three, a token directly preceded by "so" or "this" is
  boosted by 1.25 even without a preceding "never".
"""

from __future__ import annotations

import math
import string
import unicodedata
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Iterable, Sequence

from .errors import CompoundOutOfRange
from .lexicon import Lexicon, default_lexicon

POSITIVE_THRESHOLD = 0.1
NEGATIVE_THRESHOLD = -0.1


class Polarity(str, Enum):
    POSITIVE = "Positive"
    NEUTRAL = "Neutral"
    NEGATIVE = "Negative"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RuleConfig:
    alpha: float = 15.0
    booster_increment: float = 0.293
    caps_scalar: float = 0.733
    negation_scalar: float = -0.74
    exclamation_step: float = 0.292
    exclamation_cap: int = 4
    question_mark_steps: tuple[float, float] = (0.18, 0.96)
    negation_window: int = 3
    distance_damping: tuple[float, ...] = (1.0, 0.95, 0.9)
    contrast_weights: tuple[float, float] = (0.5, 1.5)

    def problems(self) -> list[str]:
        out = []
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            out.append(f"alpha must be > 0 (got {self.alpha})")
        if self.negation_window < 1:
            out.append(f"negation_window must be >= 1 (got {self.negation_window})")
        if len(self.distance_damping) != self.negation_window:
            out.append("distance_damping needs one factor per negation_window position")
        if any(not 0 < d <= 1 for d in self.distance_damping):
            out.append("distance_damping factors must lie in (0, 1]")
        if self.exclamation_cap < 0:
            out.append("exclamation_cap must be >= 0")
        if len(self.question_mark_steps) != 2 or len(self.contrast_weights) != 2:
            out.append("question_mark_steps and contrast_weights are pairs")
        return out

    def validate(self) -> "RuleConfig":
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @classmethod
    def from_mapping(cls, values: dict) -> "RuleConfig":
        """Build from string/number values, e.g. a config-file section."""
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key not in types:
                raise KeyError(f"unknown rule setting {key!r}")
            if "tuple" in str(types[key]):
                items = raw if isinstance(raw, (list, tuple)) else str(raw).replace(",", " ").split()
                kwargs[key] = tuple(float(x) for x in items)
            elif types[key] in ("int", int):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


DEFAULT_RULES = RuleConfig()

NEGATIONS = frozenset(
    """aint arent cannot cant couldnt darent didnt doesnt ain't aren't can't couldn't
    daren't didn't doesn't dont hadnt hasnt havent isnt mightnt mustnt neither don't
    hadn't hasn't haven't isn't mightn't mustn't neednt needn't never none nope nor not
    nothing nowhere oughtnt shant shouldnt uhuh wasnt werent oughtn't shan't shouldn't
    uh-uh wasn't weren't without wont wouldnt won't wouldn't rarely seldom despite""".split()
)

BOOSTERS = frozenset(
    """absolutely amazingly awfully completely considerably decidedly deeply effing
    enormously entirely especially exceptionally extremely fabulously flipping flippin
    fricking frickin frigging friggin fully fucking greatly hella highly hugely
    incredibly intensely majorly more most particularly purely quite really remarkably
    so substantially thoroughly totally tremendously uber unbelievably unusually utterly
    very""".split()
)
DAMPENERS = frozenset(
    ["almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of",
     "less", "little", "marginally", "occasionally", "partly", "scarcely", "slightly",
     "somewhat", "sort of", "sorta", "sortof", "sort-of"]
)
DEGREE_MODIFIERS = BOOSTERS | DAMPENERS

IDIOMS = {
    "the shit": 3.0,
    "the bomb": 3.0,
    "bad ass": 1.5,
    "yeah right": -2.0,
    "cut the mustard": 2.0,
    "kiss of death": -1.5,
    "hand to mouth": -2.0,
}

# edge punctuation stripped from a word when what remains is a plain word
EDGE_PUNCTUATION = (
    ".", "!", "?", ",", ";", ":", "-", "'", '"',
    "!!", "!!!", "??", "???", "?!?", "!?!", "?!?!", "!?!?",
)
_ASCII_PUNCT = frozenset(string.punctuation)

NEVER_SO_BOOST = 1.5
SO_THIS_BOOST = 1.25


@dataclass(frozen=True)
class SentimentResult:
    compound: float
    pos_share: float
    neu_share: float
    neg_share: float
    polarity: Polarity
    no_signal: bool = False
    shares_defined: bool = True

    def as_dict(self) -> dict:
        return {
            "compound": self.compound,
            "pos": self.pos_share,
            "neu": self.neu_share,
            "neg": self.neg_share,
            "polarity": self.polarity.value,
        }


def _plain_word(s: str) -> bool:
    return len(s) > 1 and not any(ch in _ASCII_PUNCT for ch in s)


def _strip_edges(word: str) -> str:
    for p in EDGE_PUNCTUATION:
        if word.startswith(p) and _plain_word(word[len(p):]):
            return word[len(p):]
        if word.endswith(p) and _plain_word(word[: -len(p)]):
            return word[: -len(p)]
    return word


def tokenize(text: str) -> list[str]:
    """Split on whitespace, keeping emoticons and contractions intact.

    Single-character tokens are dropped. A run of edge punctuation from
    ``EDGE_PUNCTUATION`` is removed only when the rest is a plain word, so
    ``"stinky."`` becomes ``"stinky"`` while ``":)"`` and ``"can't"`` survive.
    Casing is preserved.
    """
    text = unicodedata.normalize("NFC", text)
    return [_strip_edges(w) for w in text.split() if len(w) > 1]


def is_negation(word: str) -> bool:
    low = word.lower()
    return low in NEGATIONS or "n't" in low


def cap_differential(tokens: Sequence[str]) -> bool:
    """True when some, but not all, tokens are ALL CAPS."""
    n_caps = sum(1 for t in tokens if t.isupper())
    return 0 < n_caps < len(tokens)


def _modifier_scalar(word: str, valence: float, cap_diff: bool, rules: RuleConfig) -> float:
    low = word.lower()
    if low in BOOSTERS:
        scalar = rules.booster_increment
    elif low in DAMPENERS:
        scalar = -rules.booster_increment
    else:
        return 0.0
    if valence < 0:
        scalar = -scalar
    if word.isupper() and cap_diff:
        scalar += rules.caps_scalar if valence > 0 else -rules.caps_scalar
    return scalar


def _apply_negation(valence: float, tokens: Sequence[str], distance: int, i: int, rules: RuleConfig) -> float:
    if distance == 2:
        if tokens[i - 2] == "never" and tokens[i - 1] in ("so", "this"):
            return valence * NEVER_SO_BOOST
    elif distance == 3:
        if (tokens[i - 3] == "never" and tokens[i - 2] in ("so", "this")) or tokens[i - 1] in ("so", "this"):
            return valence * SO_THIS_BOOST
    if is_negation(tokens[i - distance]):
        return valence * rules.negation_scalar
    return valence


def _apply_idioms(valence: float, tokens: Sequence[str], i: int, rules: RuleConfig) -> float:
    w = tokens
    before = [
        f"{w[i-1]} {w[i]}",
        f"{w[i-2]} {w[i-1]} {w[i]}",
        f"{w[i-2]} {w[i-1]}",
        f"{w[i-3]} {w[i-2]} {w[i-1]}",
        f"{w[i-3]} {w[i-2]}",
    ]
    for seq in before:
        if seq in IDIOMS:
            valence = IDIOMS[seq]
            break
    if len(w) - 1 > i and f"{w[i]} {w[i+1]}" in IDIOMS:
        valence = IDIOMS[f"{w[i]} {w[i+1]}"]
    if len(w) - 1 > i + 1 and f"{w[i]} {w[i+1]} {w[i+2]}" in IDIOMS:
        valence = IDIOMS[f"{w[i]} {w[i+1]} {w[i+2]}"]
    # two-word dampeners such as "kind of"
    if f"{w[i-3]} {w[i-2]}" in DEGREE_MODIFIERS or f"{w[i-2]} {w[i-1]}" in DEGREE_MODIFIERS:
        valence -= rules.booster_increment
    return valence


def _apply_least(valence: float, tokens: Sequence[str], i: int, lexicon: Lexicon, rules: RuleConfig) -> float:
    if i == 0:
        return valence
    prev = tokens[i - 1].lower()
    if prev != "least" or prev in lexicon:
        return valence
    if i > 1 and tokens[i - 2].lower() in ("at", "very"):
        return valence
    return valence * rules.negation_scalar


def token_valence(
    tokens: Sequence[str],
    index: int,
    lexicon: Lexicon | None = None,
    rules: RuleConfig = DEFAULT_RULES,
    cap_diff: bool | None = None,
) -> float:
    """Context-adjusted valence of ``tokens[index]`` (0 when not in the lexicon)."""
    if not 0 <= index < len(tokens):
        raise IndexError(f"token index {index} out of range for {len(tokens)} tokens")
    lexicon = lexicon or default_lexicon()
    token = tokens[index]
    valence = lexicon.get(token)
    if valence is None:
        return 0.0
    if cap_diff is None:
        cap_diff = cap_differential(tokens)

    if token.isupper() and cap_diff:
        valence += rules.caps_scalar if valence > 0 else -rules.caps_scalar

    for distance in range(1, rules.negation_window + 1):
        if index < distance:
            break
        prev = tokens[index - distance]
        if prev.lower() in lexicon:
            continue
        scalar = _modifier_scalar(prev, valence, cap_diff, rules)
        if scalar:
            scalar *= rules.distance_damping[distance - 1]
        valence += scalar
        valence = _apply_negation(valence, tokens, distance, index, rules)
        if distance == 3:
            valence = _apply_idioms(valence, tokens, index, rules)

    return _apply_least(valence, tokens, index, lexicon, rules)


def normalize(x: float, alpha: float = 15.0) -> float:
    """Map an unbounded valence sum into [-1, 1]."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if math.isinf(x):
        return math.copysign(1.0, x)
    score = x / math.sqrt(x * x + alpha)
    return max(-1.0, min(1.0, score))


def classify_polarity(compound: float) -> Polarity:
    """Strict thresholds: exactly +/-0.1 is Neutral."""
    if not -1.0 <= compound <= 1.0:
        raise CompoundOutOfRange(f"compound {compound} outside [-1, 1]")
    if compound > POSITIVE_THRESHOLD:
        return Polarity.POSITIVE
    if compound < NEGATIVE_THRESHOLD:
        return Polarity.NEGATIVE
    return Polarity.NEUTRAL


def punctuation_emphasis(text: str, rules: RuleConfig = DEFAULT_RULES) -> float:
    bangs = min(text.count("!"), rules.exclamation_cap)
    amp = bangs * rules.exclamation_step
    questions = text.count("?")
    if questions > 1:
        per_mark, flat = rules.question_mark_steps
        amp += questions * per_mark if questions <= 3 else flat
    return amp


def token_valences(tokens: Sequence[str], lexicon: Lexicon, rules: RuleConfig = DEFAULT_RULES) -> list[float]:
    """Per-token valences after contrast ("but") reweighting."""
    cap_diff = cap_differential(tokens)
    first_seen: dict[str, int] = {}
    lowered = [t.lower() for t in tokens]
    out: list[float] = []
    for i, token in enumerate(tokens):
        j = first_seen.setdefault(token, i)
        low = lowered[j]
        if low in DEGREE_MODIFIERS or (low == "kind" and j + 1 < len(tokens) and lowered[j + 1] == "of"):
            out.append(0.0)
            continue
        out.append(token_valence(tokens, j, lexicon, rules, cap_diff))

    if "but" in lowered:
        pivot = lowered.index("but")
        before, after = rules.contrast_weights
        out = [v * before if k < pivot else v * after if k > pivot else v for k, v in enumerate(out)]
    return out


def analyze(text: str, lexicon: Lexicon | None = None, rules: RuleConfig = DEFAULT_RULES) -> SentimentResult:
    lexicon = lexicon or default_lexicon()
    text = unicodedata.normalize("NFC", text)
    tokens = tokenize(text)
    if not tokens:
        return SentimentResult(0.0, 0.0, 0.0, 0.0, Polarity.NEUTRAL, no_signal=True, shares_defined=False)

    valences = token_valences(tokens, lexicon, rules)
    total = math.fsum(valences)
    emphasis = punctuation_emphasis(text, rules)
    if total > 0:
        total += emphasis
    elif total < 0:
        total -= emphasis
    compound = normalize(total, rules.alpha)

    # each token contributes mass |v| + 1; neutral tokens contribute 1
    pos_mass = sum(v + 1 for v in valences if v > 0)
    neg_mass = sum(1 - v for v in valences if v < 0)
    neutral = sum(1 for v in valences if v == 0)
    if pos_mass > neg_mass:
        pos_mass += emphasis
    elif pos_mass < neg_mass:
        neg_mass += emphasis
    mass = pos_mass + neg_mass + neutral

    return SentimentResult(
        compound=compound,
        pos_share=pos_mass / mass,
        neu_share=neutral / mass,
        neg_share=neg_mass / mass,
        polarity=classify_polarity(compound),
        no_signal=not any(valences),
    )


def _analyze_star(args):
    return analyze(*args)


def score_texts(
    texts: Iterable[str],
    lexicon: Lexicon | None = None,
    rules: RuleConfig = DEFAULT_RULES,
    workers: int = 1,
) -> list[SentimentResult]:
    """Score many texts; results always come back in input order."""
    lexicon = lexicon or default_lexicon()
    texts = list(texts)
    if workers <= 1 or len(texts) < 1000:
        return [analyze(t, lexicon, rules) for t in texts]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_analyze_star, ((t, lexicon, rules) for t in texts), chunksize=256))
