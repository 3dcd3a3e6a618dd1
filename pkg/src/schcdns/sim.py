"""Class-A LoRaWAN exchange timing on a virtual clock.

One exchange: the device sends an uplink; the application server (the real
:class:`~schcdns.resolver.ContextResolver` or a local reference pipeline,
running on virtual time) produces a response; the gateway can only send that
response in the receive windows of a *later* uplink, because the downlink
must already be queued when the gateway hears the uplink. So the device
sends a poll uplink once its RX2 window has closed, and the response is
delivered when the poll's configured receive window opens.

With the defaults (100 ms airtime, RX2 2 s after the uplink, lasting twice
the airtime, immediate poll, delivery in RX2)::

    uplink 100 | RX wait 2000 + RX2 200 | poll 100 | RX2 delay 2000  => 4400 ms
"""

import heapq
import itertools
import random
from dataclasses import dataclass, field, replace

from . import dns
from .clock import VirtualClock
from .errors import ConfigError, NxDomain, ResponseMissedWindow
from .latency import Constant, Empirical
from .registry import RuleDocument, RuleStore
from .resolver import (
    ContextResolver,
    LocalPipeline,
    RuleCache,
    TimingSample,
    UplinkFrame,
)
from .schc import (
    CDA,
    MO,
    Context,
    Direction,
    FieldDescriptor,
    FieldId,
    Rule,
    build_datagram,
    compress,
    serialize_ipv6_udp,
    serialize_rule,
)

DUTY_CYCLE_WINDOW_MS = 3_600_000
EU868_DUTY_CYCLE = 0.01
SCENARIOS = (1, 2, 3, 4)


@dataclass(frozen=True)
class ClassATimingModel:
    airtime_ms: float = 100.0
    rx1_delay_ms: float = 1000.0
    rx2_delay_ms: float = 2000.0
    rx2_len_ms: float = None  # defaults to 2 x airtime
    poll_delay_ms: float = 0.0
    delivery_window: str = "rx2"
    spreading_factor: str = "SF7"
    enforce_duty_cycle: bool = False
    duty_cycle: float = EU868_DUTY_CYCLE

    def __post_init__(self):
        if self.rx2_len_ms is None:
            object.__setattr__(self, "rx2_len_ms", 2 * self.airtime_ms)
        for name in ("airtime_ms", "rx1_delay_ms", "rx2_delay_ms", "rx2_len_ms"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.poll_delay_ms < 0:
            raise ConfigError(f"poll_delay_ms must be >= 0, got {self.poll_delay_ms}")
        if not self.rx1_delay_ms < self.rx2_delay_ms:
            raise ConfigError("rx1_delay_ms must be smaller than rx2_delay_ms")
        if self.delivery_window not in ("rx1", "rx2"):
            raise ConfigError(f"delivery_window must be rx1 or rx2, got {self.delivery_window!r}")
        if not 0 < self.duty_cycle <= 1:
            raise ConfigError("duty_cycle must be in (0, 1]")

    @property
    def rx_len_ms(self):
        """Both receive windows stay open this long."""
        return self.rx2_len_ms

    def window_delay(self, window):
        return self.rx1_delay_ms if window == "rx1" else self.rx2_delay_ms

    def off_time_ms(self):
        """Silence required after one uplink to respect the duty cycle."""
        return self.airtime_ms * (1 / self.duty_cycle - 1)


@dataclass(frozen=True)
class LatencyModel:
    """Per-leg latency distributions of the application server (ms)."""

    dns: object = field(default_factory=lambda: Constant(10.0))
    http: object = field(default_factory=lambda: Constant(600.0))
    base_processing: object = field(default_factory=lambda: Constant(35.0))
    decompression: object = field(default_factory=lambda: Constant(5.0))

    @classmethod
    def atlas(cls):
        """Default calibration with wide-area DNS times from the shipped fixture."""
        return cls(dns=Empirical.atlas())


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # uplink_start/end, rx_open/close, enqueue_downlink, downlink_delivered
    uplink: int  # 0 = data uplink, 1 = poll uplink
    window: str = None


@dataclass
class ExchangeTrace:
    events: list
    sample: TimingSample
    missed: ResponseMissedWindow = None

    def windows(self, uplink):
        """``{"rx1": (open, close), "rx2": (open, close)}`` for one uplink."""
        out = {}
        for e in self.events:
            if e.uplink == uplink and e.kind in ("rx_open", "rx_close"):
                lo, hi = out.get(e.window, (None, None))
                out[e.window] = (e.time, hi) if e.kind == "rx_open" else (lo, e.time)
        return out

    def first(self, kind, uplink=None):
        for e in self.events:
            if e.kind == kind and (uplink is None or e.uplink == uplink):
                return e
        return None

    def delivered_in_window(self):
        """None if nothing was delivered, else whether delivery fell in an open window."""
        d = self.first("downlink_delivered")
        if d is None:
            return None
        return any(lo <= d.time < hi for lo, hi in self.windows(d.uplink).values())


class EventLoop:
    """Discrete-event scheduler on a :class:`VirtualClock`."""

    def __init__(self, clock):
        self.clock = clock
        self._queue = []
        self._seq = itertools.count()

    def at(self, time, action):
        if time < self.clock.now():
            raise ValueError(f"cannot schedule in the past ({time} < {self.clock.now()})")
        heapq.heappush(self._queue, (time, next(self._seq), action))

    def run(self):
        while self._queue:
            time, _, action = heapq.heappop(self._queue)
            self.clock.set(time)
            action()


class _Costs:
    """Charges base processing and decompression to the server's virtual clock."""

    def __init__(self, clock, latency, rng, decompress):
        self.clock, self.latency, self.rng, self._decompress = clock, latency, rng, decompress

    def processing(self):
        self.clock.advance(self.latency.base_processing.sample(self.rng))

    def decompression(self):
        if self._decompress:
            self.clock.advance(self.latency.decompression.sample(self.rng))


class SimulatedDns:
    """Answers from a zone table and charges a DNS latency draw."""

    def __init__(self, zone, dns_zone, clock, dist, rng):
        self.zone, self.dns_zone, self.clock, self.dist, self.rng = zone, dns_zone, clock, dist, rng
        self.queries = 0

    def lookup(self, deveui, rule_id):
        self.queries += 1
        self.clock.advance(self.dist.sample(self.rng))
        name = dns.owner_name(deveui, rule_id, self.dns_zone)
        record = self.zone.get(name)
        if record is None:
            raise NxDomain(f"{name} does not exist")
        return record


class SimulatedFetcher:
    """Serves rule bodies straight from a RuleStore and charges an HTTP draw."""

    def __init__(self, store, clock, dist, rng):
        self.store, self.clock, self.dist, self.rng = store, clock, dist, rng
        self.fetches = 0

    def fetch(self, url):
        self.fetches += 1
        self.clock.advance(self.dist.sample(self.rng))
        deveui, rule_id = url.rstrip("/").rsplit("/", 2)[-2:]
        return self.store.get_rule(deveui, int(rule_id)).body


DEVICE_EUI = "70b3d54996ed3b21"
SIM_ZONE = "schc.example."
SIM_REGISTRY = "http://rules.schc.example"
_DEVICE_ADDR = (0x20010DB800000000, 0x1, 0x20010DB800000001, 0x2)
_DEVICE_PORT = 8720


def device_rule(rule_id=1, revision=0):
    """All-elided rule matching the simulated device's packets.

    *revision* lands in the (ignored) target of the computed payload-length
    field: a new revision changes the rule's bytes and digest without
    changing how packets compress.
    """
    values = {
        FieldId.VERSION: 6, FieldId.TRAFFIC_CLASS: 0, FieldId.FLOW_LABEL: 0,
        FieldId.NEXT_HEADER: 17, FieldId.HOP_LIMIT: 64,
        FieldId.SRC_PREFIX: _DEVICE_ADDR[0], FieldId.SRC_IID: _DEVICE_ADDR[1],
        FieldId.DST_PREFIX: _DEVICE_ADDR[2], FieldId.DST_IID: _DEVICE_ADDR[3],
        FieldId.SRC_PORT: _DEVICE_PORT, FieldId.DST_PORT: _DEVICE_PORT,
    }
    entries = []
    for fid in FieldId:
        if fid in values:
            entries.append(FieldDescriptor(fid, fid.width, 1, Direction.BI, values[fid],
                                           MO.EQUAL, CDA.NOT_SENT))
        else:
            tv = revision & 0xFFFF if fid is FieldId.PAYLOAD_LENGTH and revision else None
            entries.append(FieldDescriptor(fid, fid.width, 1, Direction.BI, tv,
                                           MO.IGNORE, CDA.COMPUTE))
    return Rule(rule_id, tuple(entries))


def device_datagram(payload):
    return build_datagram(*_DEVICE_ADDR, _DEVICE_PORT, _DEVICE_PORT, payload=payload)


class ScenarioHarness:
    """The application-server side of one scenario, on virtual time.

    * 1 - payload sent uncompressed, no decompression
    * 2 - SCHC with a locally stored rule
    * 3 - remote resolution; the rule changes before every exchange so each
      one downloads it again
    * 4 - remote resolution with the rule already cached (DNS check only)
    """

    def __init__(self, scenario, latency, rng, clock):
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of 1-4, got {scenario!r}")
        self.scenario = scenario
        self.latency = latency
        self.rng = rng
        self.clock = clock
        self.revision = 0
        costs = _Costs(clock, latency, rng, decompress=scenario >= 2)
        rule = device_rule()
        self.rule = rule
        if scenario == 1:
            self.pipeline = LocalPipeline(None, clock, costs, scenario)
        elif scenario == 2:
            self.pipeline = LocalPipeline(Context(DEVICE_EUI, (rule,)), clock, costs, scenario)
        else:
            self.zone = dns.ZoneTable()
            self.store = RuleStore(zone=self.zone, dns_zone=SIM_ZONE, base_url=SIM_REGISTRY)
            self.store.put_rule(RuleDocument(DEVICE_EUI, rule.rule_id,
                                             serialize_rule(DEVICE_EUI, rule)))
            self.dns = SimulatedDns(self.zone, SIM_ZONE, clock, latency.dns, rng)
            self.fetcher = SimulatedFetcher(self.store, clock, latency.http, rng)
            self.pipeline = ContextResolver(
                self.dns, self.fetcher, RuleCache(clock), clock, SIM_REGISTRY,
                costs=costs, scenario=scenario)
            if scenario == 4:
                self.pipeline.cache.add(DEVICE_EUI, rule)

    def prepare(self):
        """Per-exchange setup done before the uplink (not timed)."""
        if self.scenario == 3 and self.revision > 0:
            rule = device_rule(revision=self.revision)
            self.store.put_rule(RuleDocument(DEVICE_EUI, rule.rule_id,
                                             serialize_rule(DEVICE_EUI, rule)))
        elif self.scenario == 4:
            # long batches outlive the cache TTL; the scenario is "rule cached"
            self.pipeline.cache.add(DEVICE_EUI, self.rule)
        self.revision += 1

    def uplink_frame(self, payload=b"\x01\x02"):
        h = device_datagram(payload)
        if self.scenario == 1:
            return UplinkFrame(DEVICE_EUI, serialize_ipv6_udp(h))
        return UplinkFrame(DEVICE_EUI, compress(self.rule, h, Direction.UP).to_bytes())

    def handle(self, frame):
        return self.pipeline.handle_uplink(frame)


def _poll_start(model, uplink_end, rx2_close):
    start = rx2_close + model.poll_delay_ms
    if model.enforce_duty_cycle:
        start = max(start, uplink_end + model.off_time_ms())
    return start


def run_exchange(model, harness, loop, start):
    """Simulate one exchange beginning at absolute time *start*."""
    events = []
    state = {"sample": None, "enqueued": None}
    air = model.airtime_ms

    def log(kind, uplink, window=None):
        events.append(Event(loop.clock.now(), kind, uplink, window))

    def open_windows(uplink, uplink_end):
        for window in ("rx1", "rx2"):
            t_open = uplink_end + model.window_delay(window)
            loop.at(t_open, lambda w=window: log("rx_open", uplink, w))
            loop.at(t_open + model.rx_len_ms, lambda w=window: log("rx_close", uplink, w))

    def uplink_end():
        log("uplink_end", 0)
        t_end = loop.clock.now()
        open_windows(0, t_end)
        # the server runs on its own clock from the moment the gateway hears us
        harness.clock.set(max(harness.clock.now(), t_end))
        _, sample = harness.handle(frame)
        state["sample"] = sample
        loop.at(sample.t1p, enqueue)
        rx2_close = t_end + model.rx2_delay_ms + model.rx_len_ms
        poll = _poll_start(model, t_end, rx2_close)
        loop.at(poll, poll_start)

    def enqueue():
        log("enqueue_downlink", 0)
        state["enqueued"] = loop.clock.now()

    def poll_start():
        log("uplink_start", 1)
        loop.at(loop.clock.now() + air, poll_end)

    def poll_end():
        log("uplink_end", 1)
        t_end = loop.clock.now()
        open_windows(1, t_end)
        enqueued = state["enqueued"]
        if enqueued is not None and enqueued < t_end:
            deliver_at = t_end + model.window_delay(model.delivery_window)
            loop.at(deliver_at, lambda: log("downlink_delivered", 1, model.delivery_window))

    harness.prepare()
    frame = harness.uplink_frame()
    loop.at(start, lambda: log("uplink_start", 0))
    loop.at(start + air, uplink_end)
    loop.run()

    events.sort(key=lambda e: (e.time, e.uplink))
    sample = state["sample"]
    sample.t0 = start
    delivered = next((e for e in events if e.kind == "downlink_delivered"), None)
    trace = ExchangeTrace(events, sample)
    if delivered is None:
        poll_end_t = next(e.time for e in events if e.kind == "uplink_end" and e.uplink == 1)
        trace.missed = ResponseMissedWindow(
            f"response queued at {sample.t1p - start:.1f} ms, after the poll uplink "
            f"reached the gateway at {poll_end_t - start:.1f} ms")
    else:
        sample.t1 = delivered.time
    return trace


def _normalize(trace, start):
    trace.sample = trace.sample.shifted(start)
    trace.events = [replace(e, time=e.time - start) for e in trace.events]
    return trace


def simulate_exchange(model, latency, scenario, seed):
    """One exchange from a fresh server (scenario 4 starts with a warm cache).

    Timestamps in the returned trace are relative to the uplink start.
    """
    rng = random.Random(seed)
    clock = VirtualClock()
    harness = ScenarioHarness(scenario, latency, rng, VirtualClock())
    trace = run_exchange(model, harness, EventLoop(clock), 0.0)
    trace.sample.seed = seed
    return _normalize(trace, 0.0)


def run_batch(n, model, latency, scenario, seed, traces=False):
    """*n* consecutive exchanges against one server; deterministic per seed.

    Returns the list of TimingSamples (relative timestamps), or the list of
    ExchangeTraces when *traces* is true.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = random.Random(seed)
    clock = VirtualClock()
    harness = ScenarioHarness(scenario, latency, rng, VirtualClock())
    loop = EventLoop(clock)
    out = []
    start = 0.0
    for _ in range(n):
        trace = run_exchange(model, harness, loop, start)
        trace.sample.seed = seed
        end = max(e.time for e in trace.events)
        if model.enforce_duty_cycle:
            poll_start = trace.first("uplink_start", 1).time
            end = max(end, poll_start + model.airtime_ms + model.off_time_ms())
        out.append(_normalize(trace, start))
        start = end
    return out if traces else [t.sample for t in out]


@dataclass(frozen=True)
class DutyCycleReport:
    ok: bool
    worst_airtime_ms: float
    window_start_ms: float
    limit_ms: float


def duty_cycle_check(model, schedule):
    """Sliding one-hour airtime check.

    *schedule* lists uplink start times (ms); each lasts ``model.airtime_ms``.
    An ``(start, duration)`` pair may be given instead of a bare start.
    """
    if not schedule:
        raise ConfigError("schedule must not be empty")
    tx = sorted((s, model.airtime_ms) if not isinstance(s, tuple) else s for s in schedule)
    limit = DUTY_CYCLE_WINDOW_MS * model.duty_cycle
    worst, worst_start = 0.0, tx[0][0]
    for anchor, _ in tx:
        end = anchor + DUTY_CYCLE_WINDOW_MS
        used = sum(max(0.0, min(s + d, end) - max(s, anchor)) for s, d in tx)
        if used > worst:
            worst, worst_start = used, anchor
    return DutyCycleReport(worst <= limit + 1e-9, worst, worst_start, limit)


def rtt_formula(model):
    """Closed-form device RTT when the response makes the poll cycle."""
    return (model.airtime_ms + model.rx2_delay_ms + model.rx_len_ms + model.poll_delay_ms
            + model.airtime_ms + model.window_delay(model.delivery_window))


def pipeline_budget(model):
    """Longest server response time that still makes the poll uplink."""
    return model.rx2_delay_ms + model.rx_len_ms + model.poll_delay_ms + model.airtime_ms

