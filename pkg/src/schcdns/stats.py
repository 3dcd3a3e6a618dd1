"""Empirical CDF, nearest-rank percentiles and plot-data files."""

import csv
import math
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

from .errors import BadP, EmptyInput


class CdfPoint(NamedTuple):
    value_ms: float
    cdf: float


def cdf(values):
    """One step per distinct value: ``(v, count(x <= v) / n)``."""
    values = sorted(values)
    if not values:
        raise EmptyInput("cdf of no values")
    n = len(values)
    out = []
    for i, v in enumerate(values, 1):
        if i < n and values[i] == v:
            continue
        out.append(CdfPoint(v, i / n))
    return out


def percentile(values, p):
    """Nearest-rank percentile: the ceil(p*n/100)-th smallest value."""
    if not 0 < p <= 100:
        raise BadP(f"percentile must be in (0, 100], got {p}")
    values = sorted(values)
    if not values:
        raise EmptyInput("percentile of no values")
    rank = math.ceil(Fraction(str(p)) * len(values) / 100)
    return values[max(rank, 1) - 1]


def median(values):
    return percentile(values, 50)


def mean(values):
    values = list(values)
    if not values:
        raise EmptyInput("mean of no values")
    return math.fsum(values) / len(values)


def summarize(values):
    return {"n": len(values), "mean": mean(values), "median": median(values),
            "p99": percentile(values, 99), "min": min(values), "max": max(values)}


def emit_plot_data(series, path):
    """Write ``value_ms,cdf`` rows. Floats use repr so reading back is exact."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value_ms", "cdf"])
        for point in series:
            w.writerow([repr(float(point[0])), repr(float(point[1]))])
    return path


def read_plot_data(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["value_ms", "cdf"]:
        raise ValueError(f"{path}: not a value_ms,cdf file")
    return [CdfPoint(float(v), float(c)) for v, c in rows[1:]]
