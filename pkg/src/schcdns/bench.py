"""Scenario runs, sample CSV files and summaries."""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .clock import WallClock
from .errors import ConfigError
from .resolver import ContextResolver, HttpFetcher, RuleCache, TimingSample, UdpDns
from .sim import ClassATimingModel, LatencyModel, run_batch
from .stats import summarize

CSV_COLUMNS = ("scenario", "seed", "t0", "t1", "t0p", "t1p", "t0pp", "t1pp", "t0ppp", "t1ppp",
               "outcome")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int
    n: int = 1000
    model: ClassATimingModel = field(default_factory=ClassATimingModel)
    latency: LatencyModel = field(default_factory=LatencyModel)
    seed: int = 0
    output: str = None
    batches: int = 1
    jobs: int = 1

    def __post_init__(self):
        if self.scenario not in (1, 2, 3, 4):
            raise ConfigError(f"scenario must be 1-4, got {self.scenario!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.batches <= self.n:
            raise ConfigError(f"batches must be in 1..n, got {self.batches}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def _fmt(v):
    # repr keeps the float exact so a file reads back to identical samples
    return "" if v is None else repr(float(v))


def write_samples(samples, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in samples:
        w.writerow([s.scenario, s.seed] + [_fmt(getattr(s, t)) for t in TimingSample.TIMES]
                   + [s.outcome])


def samples_to_csv(samples):
    buf = io.StringIO()
    write_samples(samples, buf)
    return buf.getvalue()


def read_samples(fh):
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ConfigError(f"not a sample CSV (header {header!r})")
    out = []
    for row in reader:
        if not row:
            continue
        values = dict(zip(CSV_COLUMNS, row))
        times = {t: (float(values[t]) if values[t] != "" else None) for t in TimingSample.TIMES}
        out.append(TimingSample(scenario=int(values["scenario"]), seed=int(values["seed"]),
                                outcome=values["outcome"], **times))
    return out


def load_samples(path):
    with Path(path).open(newline="") as fh:
        return read_samples(fh)


def _batch_sizes(n, batches):
    base, extra = divmod(n, batches)
    return [base + (1 if i < extra else 0) for i in range(batches)]


def _run_one(args):
    n, model, latency, scenario, seed = args
    return run_batch(n, model, latency, scenario, seed)


def run_scenario(cfg):
    """Run ``cfg.n`` simulated exchanges; returns the TimingSamples.

    With ``batches > 1`` the run is split into batches seeded ``seed``,
    ``seed + 1``, ...; each batch has its own server (so its own cache) and
    results are concatenated in seed order whatever ``jobs`` is.
    """
    work = [(size, cfg.model, cfg.latency, cfg.scenario, cfg.seed + i)
            for i, size in enumerate(_batch_sizes(cfg.n, cfg.batches))]
    if cfg.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, work))
    else:
        results = [_run_one(w) for w in work]
    samples = [s for batch in results for s in batch]
    if cfg.output:
        with Path(cfg.output).open("w", newline="") as fh:
            write_samples(samples, fh)
    return samples


def metric_values(samples, metric):
    getter = {
        "srt": lambda s: s.srt,
        "rtt": lambda s: s.rtt,
        "dns": lambda s: s.dns_rtt,
        "http": lambda s: s.http_rtt,
    }.get(metric)
    if getter is None:
        raise ConfigError(f"unknown metric {metric!r} (srt, rtt, dns, http)")
    return [v for v in map(getter, samples) if v is not None]


def summary_line(samples):
    scenario = samples[0].scenario if samples else 0
    parts = [f"scenario={scenario}", f"n={len(samples)}"]
    for metric in ("srt", "rtt"):
        values = metric_values(samples, metric)
        if values:
            s = summarize(values)
            parts += [f"{metric}_mean={s['mean']:.3f}", f"{metric}_median={s['median']:.3f}",
                      f"{metric}_p99={s['p99']:.3f}"]
    missed = sum(1 for s in samples if s.t1 is None and s.t0 is not None)
    parts.append(f"missed={missed}")
    return " ".join(parts)


def build_live_resolver(cfg):
    """ContextResolver on wall time against real DNS and HTTP services."""
    clock = WallClock()
    return ContextResolver(
        UdpDns(cfg.resolver, cfg.zone, cfg.dns_timeout, cfg.retries),
        HttpFetcher(),
        RuleCache(clock, cfg.ttl, cfg.capacity),
        clock,
        cfg.registry,
        cfg.rule_id_width,
        cfg.dns_failure_policy,
    )


def run_live(resolver, n, rule=None, deveui=None, scenario=0):
    """Push *n* compressed uplinks through a live resolver.

    Only server-side timestamps exist in a live run (t0/t1 stay empty).
    Failed uplinks are kept as samples with a ``failed:<error>`` outcome.
    """
    from .errors import SchcDnsError
    from .resolver import UplinkFrame
    from .schc import Direction, compress
    from .sim import DEVICE_EUI, device_datagram, device_rule

    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rule = rule or device_rule()
    deveui = deveui or DEVICE_EUI
    payload = compress(rule, device_datagram(b"\x01\x02"), Direction.UP).to_bytes()
    samples = []
    origin = resolver.clock.now()
    for i in range(n):
        try:
            _, sample = resolver.handle_uplink(UplinkFrame(deveui, payload))
        except SchcDnsError as exc:
            sample = exc.sample
        sample.scenario, sample.seed = scenario, i
        samples.append(sample.shifted(origin))
    return samples
