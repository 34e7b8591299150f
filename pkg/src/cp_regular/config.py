"""Scenario configuration files.

One scenario per file, flat ``key = value`` lines, ``#`` starts a comment.
List values are comma separated::

    scenario = clash_time
    lam = 1.5
    n_grid = 1000, 10000, 100000   # vertex counts
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

SCENARIOS = (
    "main_theorem",
    "calibrate_lambdas",
    "clash_time",
    "surviving_types",
    "duality",
    "growth_concentration",
    "oracle_validation",
    "local_limit",
)


class ConfigError(ValueError):
    """Raised for unreadable or out-of-range configuration."""


def _num(kind):
    def parse(text: str):
        try:
            x = kind(float(text)) if kind is int and "e" in text.lower() else kind(text)
        except ValueError:
            raise ConfigError(f"expected {kind.__name__}, got {text!r}") from None
        if kind is int and float(text) != x:
            raise ConfigError(f"expected an integer, got {text!r}")
        if kind is float and not math.isfinite(x):
            raise ConfigError(f"expected a finite number, got {text!r}")
        return x
    return parse


def _list(kind):
    item = _num(kind)

    def parse(text: str):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ConfigError("empty list")
        return tuple(item(p) for p in parts)
    return parse


_positive = (lambda x: x > 0, "must be positive")
_nonneg = (lambda x: x >= 0, "must be non-negative")
_unit = (lambda x: 0 < x < 1, "must lie in (0, 1)")

# key -> (parser, check or None)
KEYS = {
    "scenario": (str, (lambda s: s in SCENARIOS, f"must be one of {', '.join(SCENARIOS)}")),
    "d": (_num(int), (lambda x: x >= 3, "must be at least 3")),
    "seed": (_num(int), _nonneg),
    "threads": (_num(int), _positive),
    "out": (str, None),
    "replicas": (_num(int), _positive),
    "horizon": (_num(float), _positive),
    "lam": (_num(float), _nonneg),
    "lam_grid": (_list(float), (lambda xs: all(x >= 0 for x in xs), "entries must be non-negative")),
    "n_grid": (_list(int), (lambda xs: all(x >= 2 for x in xs), "entries must be at least 2")),
    "t_grid": (_list(float), (lambda xs: all(x > 0 for x in xs), "entries must be positive")),
    "epsilon": (_num(float), _unit),
    # main theorem
    "lam_weak": (_num(float), _nonneg),
    "lam_strong": (_num(float), _nonneg),
    "t_cond": (_num(float), _positive),
    "min_survivors": (_num(int), _positive),
    "max_replicas": (_num(int), _positive),
    "certify_size": (_num(int), _positive),
    "c_weak": (_num(float), _positive),
    "c_strong": (_num(float), _positive),
    "c_horizon_weak": (_num(float), _positive),
    "c_horizon_strong": (_num(float), _positive),
    "c_replicas": (_num(int), (lambda x: x >= 1000, "must be at least 1000")),
    "c_horizon": (_num(float), _positive),
    # calibration
    "tree_horizon": (_num(float), _positive),
    "tree_replicas": (_num(int), _positive),
    # surviving types
    "k": (_num(int), _positive),
    "survival_replicas": (_num(int), _positive),
    # growth / tails
    "delta": (_num(float), _unit),
    "tail_replicas": (_num(int), _positive),
    "budget": (_num(int), _positive),
    "n_max": (_num(int), (lambda x: 1 <= x <= 4, "must lie in 1..4")),
    # local limit
    "radius": (_num(int), _nonneg),
    "samples": (_num(int), _positive),
}


@dataclass
class ScenarioConfig:
    scenario: str
    d: int = 3
    seed: int = 0
    threads: int = 1
    out: str = "results"
    values: dict = field(default_factory=dict)
    source: str = ""

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, *keys: str):
        missing = [k for k in keys if k not in self.values]
        if missing:
            raise ConfigError(f"scenario {self.scenario} needs: {', '.join(missing)}")

    def echo(self) -> dict:
        out = {"scenario": self.scenario, "d": self.d, "seed": self.seed, "threads": self.threads, "out": self.out}
        out.update({k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.values.items())})
        return out


def parse_config(text: str) -> ScenarioConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, check = KEYS[key]
        try:
            parsed = parser(value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        if check is not None and not check[0](parsed):
            raise ConfigError(f"line {lineno}: {key} {check[1]}")
        raw[key] = parsed
    if "scenario" not in raw:
        raise ConfigError("missing 'scenario'")
    common = {k: raw.pop(k) for k in ("scenario", "d", "seed", "threads", "out") if k in raw}
    return ScenarioConfig(values=raw, source=text, **common)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
