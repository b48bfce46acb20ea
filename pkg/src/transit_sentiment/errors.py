"""Exception hierarchy shared by every stage."""

from __future__ import annotations


class TransitSentimentError(Exception):
    """Base class for all package errors."""


# ingest

class FileUnreadable(TransitSentimentError):
    pass


class MalformedRecord(TransitSentimentError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvalidCoordinate(MalformedRecord):
    def __init__(self, line: int, reason: str = "coordinate out of range"):
        super().__init__(line, reason)


class EmptyKeywordList(TransitSentimentError):
    pass


class InvalidMix(TransitSentimentError):
    pass


# lexicon

class LexiconError(TransitSentimentError):
    pass


class MalformedLine(LexiconError):
    def __init__(self, line_no: int, reason: str = "malformed line"):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class ValenceOutOfRange(LexiconError):
    def __init__(self, token: str, value: float):
        super().__init__(f"valence {value} for {token!r} outside [-4, 4]")
        self.token = token


class DuplicateToken(LexiconError):
    def __init__(self, token: str, line_no: int):
        super().__init__(f"line {line_no}: duplicate token {token!r}")
        self.token = token


class EmptyLexicon(LexiconError):
    pass


# sentiment

class CompoundOutOfRange(TransitSentimentError, ValueError):
    pass


# classify

class KOutOfRange(TransitSentimentError, ValueError):
    pass


class InsufficientExemplars(TransitSentimentError):
    def __init__(self, category, have: int, need: int):
        super().__init__(f"{category}: {have} exemplars, need {need}")
        self.category = category


class UnparsableLabel(TransitSentimentError):
    def __init__(self, raw_text: str):
        super().__init__(f"cannot map model output to a category: {raw_text!r}")
        self.raw_text = raw_text


class EndpointUnreachable(TransitSentimentError):
    pass


class AuthFailure(TransitSentimentError):
    pass


class RateLimited(TransitSentimentError):
    pass


# evaluate

class IdSetMismatch(TransitSentimentError):
    def __init__(self, missing_pred: set, missing_truth: set):
        super().__init__(
            f"{len(missing_pred)} ids lack predictions, {len(missing_truth)} lack ground truth"
        )
        self.missing_pred = missing_pred
        self.missing_truth = missing_truth


# cli / pipeline

class ConfigInvalid(TransitSentimentError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


class StageFailed(TransitSentimentError):
    def __init__(self, stage: str, message: str, diagnostics: list[str] | None = None):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage
        self.diagnostics = diagnostics or []
