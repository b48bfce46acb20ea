"""Pipeline configuration: one INI file, every key overridable.

Sections and keys (defaults in ``DEFAULTS``)::

    [paths]      input, truth, lexicon, exemplars, stations, keywords, output_dir
    [ingest]     skip_malformed
    [sampling]   n, seed
    [rules]      any RuleConfig field (alpha, booster_increment, ...)
    [score]      workers
    [classifier] mode, k, replay_log, endpoint_url, model_name,
                 auth_token_env_var, max_retries, request_timeout,
                 max_concurrent_requests, temperature, backoff_base,
                 backoff_cap, requests_per_second
    [aggregate]  radius_m, multi_assign, date_start, date_end

Secrets never live in the file: the classifier reads its token from the
environment variable named by ``auth_token_env_var``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

from . import datafiles
from .aggregate import DEFAULT_STATIONS, MILE_M
from .classify import DEFAULT_EXEMPLARS, DEFAULT_K, K_MAX, K_MIN
from .client import ClassifierClientConfig
from .errors import ConfigInvalid
from .ingest import DEFAULT_KEYWORDS
from .lexicon import DEFAULT_LEXICON
from .sentiment import RuleConfig

DEFAULTS: dict[str, dict[str, str]] = {
    "paths": {
        "input": "",
        "truth": "",
        "lexicon": DEFAULT_LEXICON,
        "exemplars": DEFAULT_EXEMPLARS,
        "stations": DEFAULT_STATIONS,
        "keywords": DEFAULT_KEYWORDS,
        "output_dir": "out",
    },
    "ingest": {"skip_malformed": "false"},
    "sampling": {"n": "", "seed": "2022"},
    "rules": {},
    "score": {"workers": "1"},
    "classifier": {
        "mode": "local",
        "k": str(DEFAULT_K),
        "replay_log": "",
        **{f.name: "" for f in fields(ClassifierClientConfig)},
    },
    "aggregate": {"radius_m": str(MILE_M), "multi_assign": "false", "date_start": "", "date_end": ""},
}
RULE_KEYS = {f.name for f in fields(RuleConfig)}
MODES = ("local", "remote")


@dataclass
class PipelineConfig:
    input: str
    output_dir: str = "out"
    truth: str = ""
    lexicon: str = DEFAULT_LEXICON
    exemplars: str = DEFAULT_EXEMPLARS
    stations: str = DEFAULT_STATIONS
    keywords: str = DEFAULT_KEYWORDS
    skip_malformed: bool = False
    sample_n: int | None = None
    seed: int = 2022
    rules: RuleConfig = field(default_factory=RuleConfig)
    workers: int = 1
    mode: str = "local"
    k: int = DEFAULT_K
    replay_log: str = ""
    client: ClassifierClientConfig = field(default_factory=ClassifierClientConfig)
    radius_m: float = MILE_M
    multi_assign: bool = False
    date_start: str = ""
    date_end: str = ""

    def snapshot(self) -> dict:
        out = asdict(self)
        out["rules"] = self.rules.as_dict()
        return out

    def digest(self) -> str:
        """Hash of everything that affects results (the output location does not)."""
        snap = self.snapshot()
        snap.pop("output_dir")
        blob = json.dumps(snap, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    @property
    def date_range(self) -> tuple[str, str] | None:
        if self.date_start and self.date_end:
            return self.date_start, self.date_end
        return None

    def to_ini(self) -> str:
        """Render as a config file with every default filled in."""
        snap = self.snapshot()
        sections = {
            "paths": {k: snap[k] for k in ("input", "truth", "lexicon", "exemplars", "stations", "keywords", "output_dir")},
            "ingest": {"skip_malformed": snap["skip_malformed"]},
            "sampling": {"n": snap["sample_n"], "seed": snap["seed"]},
            "rules": snap["rules"],
            "score": {"workers": snap["workers"]},
            "classifier": {"mode": snap["mode"], "k": snap["k"], "replay_log": snap["replay_log"], **snap["client"]},
            "aggregate": {k: snap[k] for k in ("radius_m", "multi_assign", "date_start", "date_end")},
        }
        lines = []
        for name, values in sections.items():
            lines.append(f"[{name}]")
            for key, value in values.items():
                if isinstance(value, list):
                    value = ", ".join(str(v) for v in value)
                elif isinstance(value, bool):
                    value = str(value).lower()
                elif value is None:
                    value = ""
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


def parse_override(text: str) -> tuple[str, str, str]:
    """``section.key=value`` -> (section, key, value)."""
    name, sep, value = text.partition("=")
    section, dot, key = name.strip().partition(".")
    if not sep or not dot or not section or not key:
        raise ConfigInvalid([f"override {text!r} is not of the form section.key=value"])
    return section, key, value.strip()


def read_config(path: str | Path | None, overrides: Iterable[str] = ()) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigInvalid([f"config file {p} does not exist"])
        try:
            parser.read_string(p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigInvalid([f"cannot parse {p}: {exc}"]) from None
        base = p.parent
        for key in ("input", "truth", "lexicon", "exemplars", "stations", "keywords", "output_dir"):
            value = parser["paths"][key]
            if value and not value.startswith(datafiles.PREFIX) and not Path(value).is_absolute():
                parser["paths"][key] = str(base / value)
        replay = parser["classifier"]["replay_log"]
        if replay and not Path(replay).is_absolute():
            parser["classifier"]["replay_log"] = str(base / replay)
    for item in overrides:
        section, key, value = parse_override(item)
        if not parser.has_section(section):
            parser.add_section(section)
        parser[section][key] = value
    return parser


def _bool(raw: str, where: str, problems: list[str]) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("", "0", "false", "no", "off"):
        return False
    problems.append(f"{where}: expected a boolean, got {raw!r}")
    return False


def _num(raw: str, kind, where: str, problems: list[str], default=None):
    if raw.strip() == "":
        return default
    try:
        return kind(raw)
    except ValueError:
        problems.append(f"{where}: expected {kind.__name__}, got {raw!r}")
        return default


def build_config(parser: configparser.ConfigParser, require_input: bool = True) -> PipelineConfig:
    """Turn parsed sections into a validated config, collecting every problem."""
    problems: list[str] = []
    known = {**DEFAULTS, "rules": dict.fromkeys(RULE_KEYS)}
    for section in parser.sections():
        if section not in known:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in known[section]:
                problems.append(f"unknown key {section}.{key}")

    paths = parser["paths"]
    cfg = PipelineConfig(input=paths["input"])
    for key in ("output_dir", "truth", "lexicon", "exemplars", "stations", "keywords"):
        setattr(cfg, key, paths[key])
    cfg.skip_malformed = _bool(parser["ingest"]["skip_malformed"], "ingest.skip_malformed", problems)

    sampling = parser["sampling"]
    cfg.sample_n = _num(sampling["n"], int, "sampling.n", problems)
    cfg.seed = _num(sampling["seed"], int, "sampling.seed", problems, 2022)
    if cfg.sample_n is not None and cfg.sample_n < 1:
        problems.append(f"sampling.n must be >= 1 (got {cfg.sample_n})")

    rule_values = {k: v for k, v in parser["rules"].items() if k in RULE_KEYS}
    try:
        cfg.rules = RuleConfig.from_mapping(rule_values)
        problems.extend(f"rules.{p} (sentiment scoring contract)" for p in cfg.rules.problems())
    except (TypeError, ValueError) as exc:
        problems.append(f"rules: {exc}")

    cfg.workers = _num(parser["score"]["workers"], int, "score.workers", problems, 1)
    if cfg.workers < 1:
        problems.append(f"score.workers must be >= 1 (got {cfg.workers})")

    clf = parser["classifier"]
    cfg.mode = clf["mode"].strip()
    if cfg.mode not in MODES:
        problems.append(f"classifier.mode must be one of {MODES} (got {cfg.mode!r})")
    cfg.k = _num(clf["k"], int, "classifier.k", problems, DEFAULT_K)
    if not K_MIN <= cfg.k <= K_MAX:
        problems.append(f"classifier.k must lie in [{K_MIN}, {K_MAX}] exemplars per category (got {cfg.k})")
    cfg.replay_log = clf["replay_log"]
    client_kwargs = {}
    for f in fields(ClassifierClientConfig):
        raw = clf.get(f.name, "")
        if raw == "":
            continue
        if f.name in ("endpoint_url", "model_name", "auth_token_env_var"):
            client_kwargs[f.name] = raw
        else:
            kind = int if f.name in ("max_retries", "max_concurrent_requests") else float
            value = _num(raw, kind, f"classifier.{f.name}", problems)
            if value is not None:
                client_kwargs[f.name] = value
    cfg.client = ClassifierClientConfig(**client_kwargs)
    problems.extend(f"classifier.{p}" for p in cfg.client.problems())

    agg = parser["aggregate"]
    cfg.radius_m = _num(agg["radius_m"], float, "aggregate.radius_m", problems, MILE_M)
    if not cfg.radius_m > 0:
        problems.append(f"aggregate.radius_m must be > 0 (got {cfg.radius_m})")
    cfg.multi_assign = _bool(agg["multi_assign"], "aggregate.multi_assign", problems)
    cfg.date_start, cfg.date_end = agg["date_start"], agg["date_end"]
    if bool(cfg.date_start) != bool(cfg.date_end):
        problems.append("aggregate.date_start and aggregate.date_end must be given together")

    if require_input and not cfg.input:
        problems.append("paths.input is required")
    for key in ("input", "truth", "lexicon", "exemplars", "stations", "keywords"):
        value = getattr(cfg, key)
        if value and not datafiles.exists(value):
            problems.append(f"paths.{key}: file {value} does not exist")
    if cfg.replay_log and not Path(cfg.replay_log).is_file():
        problems.append(f"classifier.replay_log: file {cfg.replay_log} does not exist")

    if problems:
        raise ConfigInvalid(problems)
    return cfg


def validate_config(path: str | Path | None, overrides: Iterable[str] = (), require_input: bool = True) -> PipelineConfig:
    return build_config(read_config(path, overrides), require_input)
