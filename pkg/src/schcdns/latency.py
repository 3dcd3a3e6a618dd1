"""Latency distributions, written as ``constant:v``, ``uniform:lo,hi`` or
``empirical:path``. Values are milliseconds; an ``ms`` or ``s`` suffix is
accepted on numbers."""

import bisect
import statistics
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

ATLAS_FIXTURE = "atlas_dns.txt"


def _number(text):
    text = text.strip()
    scale = 1.0
    if text.endswith("ms"):
        text = text[:-2]
    elif text.endswith("s"):
        text, scale = text[:-1], 1000.0
    try:
        value = float(text) * scale
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if value < 0:
        raise ConfigError(f"latency must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class Constant:
    value: float

    def sample(self, rng):
        return self.value

    @property
    def mean(self):
        return self.value

    def __str__(self):
        return f"constant:{self.value:g}"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ConfigError(f"uniform bounds must satisfy 0 <= lo <= hi, got {self.lo},{self.hi}")

    def sample(self, rng):
        return rng.uniform(self.lo, self.hi)

    @property
    def mean(self):
        return (self.lo + self.hi) / 2

    def __str__(self):
        return f"uniform:{self.lo:g},{self.hi:g}"


@dataclass(frozen=True)
class Empirical:
    """Draws uniformly from a fixed list of observed values."""

    values: tuple
    source: str = "<inline>"

    def __post_init__(self):
        if not self.values:
            raise ConfigError(f"empirical distribution {self.source} has no samples")
        if min(self.values) < 0:
            raise ConfigError(f"empirical distribution {self.source} has negative samples")
        object.__setattr__(self, "values", tuple(sorted(self.values)))

    def sample(self, rng):
        return self.values[rng.randrange(len(self.values))]

    @property
    def mean(self):
        return statistics.fmean(self.values)

    @property
    def median(self):
        return statistics.median(self.values)

    def fraction_below(self, x):
        return bisect.bisect_right(self.values, x) / len(self.values)

    def __str__(self):
        return f"empirical:{self.source}"

    @classmethod
    def from_file(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read samples from {path}: {exc}") from None
        return cls(tuple(_parse_samples(text, path)), str(path))

    @classmethod
    def atlas(cls):
        """The shipped wide-area DNS response-time fixture (median 200 ms)."""
        text = resources.files("schcdns").joinpath("data", ATLAS_FIXTURE).read_text()
        return cls(tuple(_parse_samples(text, ATLAS_FIXTURE)), f"<{ATLAS_FIXTURE}>")


def _parse_samples(text, where):
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for item in line.replace(",", " ").split():
            try:
                out.append(_number(item))
            except ConfigError as exc:
                raise ConfigError(f"{where}:{lineno}: {exc}") from None
    return out


def parse_distribution(spec, base_dir=None):
    kind, sep, args = spec.strip().partition(":")
    if not sep:
        raise ConfigError(f"distribution {spec!r} must look like kind:args")
    kind = kind.strip().lower()
    if kind == "constant":
        return Constant(_number(args))
    if kind == "uniform":
        parts = args.split(",")
        if len(parts) != 2:
            raise ConfigError(f"uniform needs lo,hi: {spec!r}")
        return Uniform(_number(parts[0]), _number(parts[1]))
    if kind == "empirical":
        args = args.strip()
        if args in ("atlas", "@atlas"):
            return Empirical.atlas()
        path = Path(args)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return Empirical.from_file(path)
    raise ConfigError(f"unknown distribution kind {kind!r}")
