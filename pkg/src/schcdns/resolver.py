"""Application-server side of dynamic context resolution.

For each uplink the server extracts ``(DevEUI, RuleID)``, always asks DNS for
the rule's current digest, looks the digest up in its rule cache, downloads
the rule over HTTP on a miss (checking the body against the digest), then
decompresses the packet and builds a short acknowledgement.
"""

import enum
import logging
import struct
import threading
import urllib.error
import urllib.request
from collections import OrderedDict
from dataclasses import dataclass, fields
from typing import NamedTuple

from . import dns
from .clock import WallClock
from .errors import (
    DecompressError,
    DigestMismatch,
    DnsFailure,
    EmptyPayload,
    FetchFailure,
    SchcDnsError,
)
from .registry import canonical_digest
from .schc import (
    CompressedPacket,
    Direction,
    FieldId,
    decompress,
    parse_rule_file,
    serialize_rule,
)

log = logging.getLogger(__name__)

DEFAULT_CACHE_TTL_S = 3600
DEFAULT_CAPACITY = 10_000

SERVE_STALE = "serve-stale"
FAIL_CLOSED = "fail-closed"


class DeviceTuple(NamedTuple):
    deveui: str
    rule_id: int


@dataclass(frozen=True)
class UplinkFrame:
    """What the network server hands over: device id metadata + LoRa payload."""

    deveui: str
    payload: bytes


class Outcome(enum.Enum):
    FRESH_HIT = "fresh_hit"
    REFETCHED = "refetched"
    INITIAL_FETCH = "initial_fetch"
    DEGRADED = "degraded"
    FAILED = "failed"
    LOCAL = "local"  # scenarios 1 and 2: no remote resolution


@dataclass
class TimingSample:
    """Timestamps (ms) of one exchange; ``p`` marks primes (t0p = t0')."""

    scenario: int = 0
    seed: int = 0
    t0: float = None
    t1: float = None
    t0p: float = None
    t1p: float = None
    t0pp: float = None
    t1pp: float = None
    t0ppp: float = None
    t1ppp: float = None
    outcome: str = ""

    TIMES = ("t0", "t1", "t0p", "t1p", "t0pp", "t1pp", "t0ppp", "t1ppp")

    @property
    def srt(self):
        return self.t1p - self.t0p

    @property
    def rtt(self):
        return None if self.t1 is None else self.t1 - self.t0

    @property
    def dns_rtt(self):
        return None if self.t0pp is None else self.t1pp - self.t0pp

    @property
    def http_rtt(self):
        return None if self.t0ppp is None else self.t1ppp - self.t0ppp

    def shifted(self, offset):
        """Copy with every present timestamp moved by ``-offset``."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for name in self.TIMES:
            if values[name] is not None:
                values[name] -= offset
        return TimingSample(**values)

    def check_order(self):
        """Raise AssertionError unless the server-side timestamps nest."""
        assert self.t0p <= self.t1p
        if self.t0pp is not None:
            assert self.t0p <= self.t0pp <= self.t1pp <= self.t1p
        if self.t0ppp is not None:
            assert self.t1pp is None or self.t1pp <= self.t0ppp
            assert self.t0ppp <= self.t1ppp <= self.t1p
        if self.t0 is not None and self.t1 is not None:
            assert self.t0 <= self.t0p and self.t1p <= self.t1


def extract_tuple(frame, rule_id_width=8):
    if not frame.payload or len(frame.payload) * 8 < rule_id_width:
        raise EmptyPayload(f"payload of device {frame.deveui} carries no rule id")
    deveui = dns.normalize_deveui(frame.deveui)
    head = int.from_bytes(frame.payload[:(rule_id_width + 7) // 8], "big")
    return DeviceTuple(deveui, head >> (-rule_id_width % 8))


@dataclass(frozen=True)
class CacheEntry:
    digest: str
    rule: object
    deveui: str
    inserted_at: float  # clock ms
    ttl: float  # seconds

    def expires_at(self):
        return self.inserted_at + self.ttl * 1000.0

    def valid(self):
        return canonical_digest(serialize_rule(self.deveui, self.rule)) == self.digest


class RuleCache:
    """Digest -> CacheEntry with TTL expiry and least-recently-used eviction.

    Lookups and inserts share one lock; each is O(1).
    """

    def __init__(self, clock=None, ttl=DEFAULT_CACHE_TTL_S, capacity=DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("cache capacity must be >= 1")
        self.clock = clock or WallClock()
        self.ttl = ttl
        self.capacity = capacity
        self._entries = OrderedDict()
        self._lock = threading.Lock()

    def lookup(self, digest):
        with self._lock:
            entry = self._entries.get(digest)
            if entry is None:
                return None
            if self.clock.now() > entry.expires_at():
                del self._entries[digest]
                return None
            self._entries.move_to_end(digest)
            return entry

    def insert(self, entry):
        if not entry.valid():
            raise ValueError(f"cache entry digest {entry.digest[:12]} does not match its rule")
        with self._lock:
            self._entries.pop(entry.digest, None)
            self._entries[entry.digest] = entry
            while len(self._entries) > self.capacity:
                evicted, _ = self._entries.popitem(last=False)
                log.debug("evicted %s", evicted[:12])

    def add(self, deveui, rule, digest=None):
        """Build, insert and return an entry stamped with the current time."""
        digest = digest or canonical_digest(serialize_rule(deveui, rule))
        entry = CacheEntry(digest, rule, deveui, self.clock.now(), self.ttl)
        self.insert(entry)
        return entry

    def clear(self):
        with self._lock:
            self._entries.clear()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, digest):
        return self.lookup(digest) is not None


class UdpDns:
    """DNS backend that queries a resolver or authoritative server over UDP."""

    def __init__(self, server, zone, timeout=2.0, retries=0):
        self.server = server
        self.zone = zone
        self.timeout = timeout
        self.retries = retries

    def lookup(self, deveui, rule_id):
        record, _ = dns.resolve(deveui, rule_id, self.server, self.zone, self.timeout,
                                self.retries)
        return record


class HttpFetcher:
    def __init__(self, timeout=5.0):
        self.timeout = timeout

    def fetch(self, url):
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise FetchFailure(f"GET {url}: {exc}") from exc


class NoCost:
    """Real runs: processing takes whatever time it takes."""

    def processing(self):
        pass

    def decompression(self):
        pass


def build_ack(tuple_, header, outcome):
    """Minimal downlink acknowledgement (10 bytes).

    ``0xAC | rule id (16) | outcome code (8) | UDP src port | UDP dst port |
    UDP payload length``
    """
    code = list(Outcome).index(outcome)
    sport = header[FieldId.SRC_PORT] if header is not None else 0
    dport = header[FieldId.DST_PORT] if header is not None else 0
    size = len(header.payload) if header is not None else 0
    return struct.pack("!BHBHHH", 0xAC, tuple_.rule_id, code, sport, dport, size)


class ContextResolver:
    """Per-uplink pipeline: tuple, DNS (always), cache, HTTP on miss, decompress."""

    def __init__(self, dns_backend, fetcher, cache=None, clock=None, registry_url=None,
                 rule_id_width=8, dns_failure_policy=SERVE_STALE, costs=None, scenario=0):
        if dns_failure_policy not in (SERVE_STALE, FAIL_CLOSED):
            raise ValueError(f"unknown DNS failure policy {dns_failure_policy!r}")
        self.dns = dns_backend
        self.fetcher = fetcher
        self.clock = clock or WallClock()
        self.cache = cache if cache is not None else RuleCache(self.clock)
        self.registry_url = registry_url.rstrip("/") if registry_url else None
        self.rule_id_width = rule_id_width
        self.dns_failure_policy = dns_failure_policy
        self.costs = costs or NoCost()
        self.scenario = scenario
        self.dns_queries = 0
        self.http_fetches = 0
        self._last_digest = {}  # tuple -> digest last seen in DNS

    def rule_url(self, tuple_, record):
        if record is not None and record.url:
            return record.url
        if not self.registry_url:
            raise FetchFailure(f"no URL for {tuple_}: record has none and no registry configured")
        return f"{self.registry_url}/{tuple_.deveui}/{tuple_.rule_id}"

    def _fetch(self, tuple_, record, sample):
        url = self.rule_url(tuple_, record)
        sample.t0ppp = self.clock.now()
        self.http_fetches += 1
        try:
            body = self.fetcher.fetch(url)
        finally:
            sample.t1ppp = self.clock.now()
        actual = canonical_digest(body)
        if actual != record.digest:
            raise DigestMismatch(
                f"{url}: body hashes to {actual[:12]}, DNS says {record.digest[:12]}")
        try:
            ctx = parse_rule_file(body)
        except ValueError as exc:
            raise FetchFailure(f"{url}: body is not a rule document: {exc}") from exc
        rule = ctx.rule(tuple_.rule_id)
        if ctx.deveui != tuple_.deveui or rule is None:
            raise FetchFailure(f"{url}: body does not describe {tuple_}")
        return self.cache.add(tuple_.deveui, rule, record.digest)

    def handle_uplink(self, frame):
        """Return ``(ack payload, TimingSample)``.

        Errors propagate with the partially-filled sample attached as
        ``exc.sample`` (outcome ``failed``).
        """
        sample = TimingSample(scenario=self.scenario)
        sample.t0p = self.clock.now()
        try:
            return self._handle(frame, sample)
        except SchcDnsError as exc:
            sample.outcome = f"{Outcome.FAILED.value}:{type(exc).__name__}"
            sample.t1p = self.clock.now()
            exc.sample = sample
            raise

    def _handle(self, frame, sample):
        tuple_ = extract_tuple(frame, self.rule_id_width)

        sample.t0pp = self.clock.now()
        self.dns_queries += 1
        try:
            record = self.dns.lookup(tuple_.deveui, tuple_.rule_id)
            dns_error = None
        except (SchcDnsError, OSError) as exc:
            record, dns_error = None, exc
        sample.t1pp = self.clock.now()

        if dns_error is not None:
            last = self._last_digest.get(tuple_)
            entry = self.cache.lookup(last) if last else None
            if entry is None or self.dns_failure_policy == FAIL_CLOSED:
                raise DnsFailure(f"{tuple_}: {dns_error}") from dns_error
            outcome = Outcome.DEGRADED
        else:
            entry = self.cache.lookup(record.digest)
            if entry is not None:
                outcome = Outcome.FRESH_HIT
            else:
                seen = tuple_ in self._last_digest
                entry = self._fetch(tuple_, record, sample)
                outcome = Outcome.REFETCHED if seen else Outcome.INITIAL_FETCH
            self._last_digest[tuple_] = record.digest

        self.costs.decompression()
        try:
            packet = CompressedPacket.from_bytes(frame.payload, entry.rule, Direction.UP)
            header = decompress(entry.rule, packet, Direction.UP)
        except ValueError as exc:
            raise DecompressError(f"{tuple_}: {exc}") from exc

        self.costs.processing()
        ack = build_ack(tuple_, header, outcome)
        sample.outcome = outcome.value
        sample.t1p = self.clock.now()
        return ack, sample


class LocalPipeline:
    """Reference pipelines without remote resolution.

    With *context* None the payload is taken as-is (no SCHC); otherwise the
    rule comes from the locally stored context.
    """

    def __init__(self, context=None, clock=None, costs=None, scenario=0, rule_id_width=8):
        self.context = context
        self.clock = clock or WallClock()
        self.costs = costs or NoCost()
        self.scenario = scenario
        self.rule_id_width = context.rule_id_width if context is not None else rule_id_width

    def handle_uplink(self, frame):
        sample = TimingSample(scenario=self.scenario, outcome=Outcome.LOCAL.value)
        sample.t0p = self.clock.now()
        if not frame.payload:
            raise EmptyPayload(f"empty payload from {frame.deveui}")
        header = None
        if self.context is None:
            tuple_ = DeviceTuple(dns.normalize_deveui(frame.deveui), 0)
        else:
            tuple_ = extract_tuple(frame, self.rule_id_width)
            rule = self.context.rule(tuple_.rule_id)
            if rule is None:
                raise DecompressError(f"no local rule {tuple_.rule_id}")
            self.costs.decompression()
            try:
                packet = CompressedPacket.from_bytes(frame.payload, rule, Direction.UP)
                header = decompress(rule, packet, Direction.UP)
            except ValueError as exc:
                raise DecompressError(f"{tuple_}: {exc}") from exc
        self.costs.processing()
        ack = build_ack(tuple_, header, Outcome.LOCAL)
        sample.t1p = self.clock.now()
        return ack, sample
