import pytest
from hypothesis import given
from hypothesis import strategies as st

from schcdns.clock import VirtualClock
from schcdns.dns import ContextRecord, ZoneTable, owner_name
from schcdns.errors import (
    DecompressError,
    DigestMismatch,
    DnsFailure,
    DnsTimeout,
    EmptyPayload,
    FetchFailure,
    NxDomain,
)
from schcdns.registry import RegistryServer, RuleDocument, RuleStore, canonical_digest
from schcdns.resolver import (
    FAIL_CLOSED,
    CacheEntry,
    ContextResolver,
    DeviceTuple,
    HttpFetcher,
    LocalPipeline,
    Outcome,
    RuleCache,
    UplinkFrame,
    build_ack,
    extract_tuple,
)
from schcdns.schc import Context, Direction, compress, serialize_rule
from schcdns.sim import DEVICE_EUI, device_datagram, device_rule

ZONE = "schc.example."
REGISTRY = "http://reg.example"


class ZoneDns:
    """In-process DNS backend with a switch to simulate outages."""

    def __init__(self, zone, clock, cost=10):
        self.zone, self.clock, self.cost = zone, clock, cost
        self.down = False

    def lookup(self, deveui, rule_id):
        self.clock.advance(self.cost)
        if self.down:
            raise DnsTimeout("down")
        name = owner_name(deveui, rule_id, ZONE)
        rec = self.zone.get(name)
        if rec is None:
            raise NxDomain(name)
        return rec


class StoreFetcher:
    def __init__(self, store, clock, cost=600, tamper=False):
        self.store, self.clock, self.cost, self.tamper = store, clock, cost, tamper
        self.urls = []

    def fetch(self, url):
        self.urls.append(url)
        self.clock.advance(self.cost)
        deveui, rule_id = url.rsplit("/", 2)[-2:]
        data = self.store.get_rule(deveui, int(rule_id)).body
        return data.replace(b"rule 1", b"rule 1 ") if self.tamper else data


class Bench:
    def __init__(self, policy="serve-stale", base_url=None):
        self.clock = VirtualClock()
        self.zone = ZoneTable()
        self.store = RuleStore(zone=self.zone, dns_zone=ZONE, base_url=base_url)
        self.dns = ZoneDns(self.zone, self.clock)
        self.fetcher = StoreFetcher(self.store, self.clock)
        self.resolver = ContextResolver(self.dns, self.fetcher, RuleCache(self.clock),
                                        self.clock, REGISTRY, dns_failure_policy=policy)

    def put(self, revision=0):
        rule = device_rule(revision=revision)
        return self.store.put_rule(RuleDocument(DEVICE_EUI, 1, serialize_rule(DEVICE_EUI, rule)))

    def uplink(self, payload=b"hi"):
        data = compress(device_rule(), device_datagram(payload), Direction.UP).to_bytes()
        return self.resolver.handle_uplink(UplinkFrame(DEVICE_EUI, data))


def bits_slice(data, width):
    return int("".join(f"{b:08b}" for b in data)[:width], 2)


class TestExtractTuple:
    def test_first_byte(self):
        frame = UplinkFrame(DEVICE_EUI.upper(), b"\x07\xff")
        assert extract_tuple(frame) == DeviceTuple(DEVICE_EUI, 7)

    def test_empty(self):
        with pytest.raises(EmptyPayload):
            extract_tuple(UplinkFrame(DEVICE_EUI, b""))

    def test_too_short_for_width(self):
        with pytest.raises(EmptyPayload):
            extract_tuple(UplinkFrame(DEVICE_EUI, b"\x01"), rule_id_width=12)

    def test_width_4(self):
        assert extract_tuple(UplinkFrame(DEVICE_EUI, b"\xa7"), 4).rule_id == 0xA

    @given(st.binary(min_size=4, max_size=8), st.integers(1, 32))
    def test_matches_bit_slicer(self, payload, width):
        frame = UplinkFrame(DEVICE_EUI, payload)
        assert extract_tuple(frame, width).rule_id == bits_slice(payload, width)


class TestCache:
    def entry(self, clock, revision=0, ttl=10):
        rule = device_rule(revision=revision)
        digest = canonical_digest(serialize_rule(DEVICE_EUI, rule))
        return CacheEntry(digest, rule, DEVICE_EUI, clock.now(), ttl)

    def test_empty_lookup(self):
        assert RuleCache(VirtualClock()).lookup("0" * 64) is None

    def test_insert_lookup(self):
        clock = VirtualClock()
        cache = RuleCache(clock)
        e = self.entry(clock)
        cache.insert(e)
        assert cache.lookup(e.digest) == e

    def test_expiry_boundary(self):
        clock = VirtualClock()
        cache = RuleCache(clock, ttl=10)
        e = cache.add(DEVICE_EUI, device_rule())
        clock.advance(10_000)
        assert cache.lookup(e.digest) is not None
        clock.advance(1_000)
        assert cache.lookup(e.digest) is None

    def test_lru_eviction(self):
        clock = VirtualClock()
        cache = RuleCache(clock, capacity=2)
        a, b, c = (self.entry(clock, r) for r in range(3))
        cache.insert(a)
        cache.insert(b)
        assert cache.lookup(a.digest)  # b becomes least recently used
        cache.insert(c)
        assert a.digest in cache and c.digest in cache and b.digest not in cache

    def test_reinsert_refreshes(self):
        clock = VirtualClock()
        cache = RuleCache(clock, ttl=10)
        cache.add(DEVICE_EUI, device_rule())
        clock.advance(8_000)
        e = cache.add(DEVICE_EUI, device_rule())
        clock.advance(8_000)
        assert cache.lookup(e.digest) is not None

    def test_mismatched_entry_rejected(self):
        clock = VirtualClock()
        bad = CacheEntry("0" * 64, device_rule(), DEVICE_EUI, 0.0, 10)
        with pytest.raises(ValueError):
            RuleCache(clock).insert(bad)


class TestHandleUplink:
    def test_initial_then_hit(self):
        bench = Bench()
        bench.put()
        ack, s = bench.uplink()
        assert s.outcome == Outcome.INITIAL_FETCH.value
        assert None not in (s.t0p, s.t1p, s.t0pp, s.t1pp, s.t0ppp, s.t1ppp)
        assert (s.dns_rtt, s.http_rtt) == (10, 600)
        _, s = bench.uplink()
        assert s.outcome == Outcome.FRESH_HIT.value
        assert s.t0ppp is None and s.t1ppp is None
        assert (bench.resolver.dns_queries, bench.resolver.http_fetches) == (2, 1)

    def test_update_refetches(self):
        bench = Bench()
        bench.put()
        bench.uplink()
        new = bench.put(1)
        _, s = bench.uplink()
        assert s.outcome == Outcome.REFETCHED.value
        assert bench.resolver.http_fetches == 2
        assert new in bench.resolver.cache

    def test_revert_uses_cache(self):
        bench = Bench()
        bench.put(0)
        bench.uplink()
        bench.put(1)
        bench.uplink()
        bench.put(0)
        _, s = bench.uplink()
        assert s.outcome == Outcome.FRESH_HIT.value and bench.resolver.http_fetches == 2

    def test_ack(self):
        bench = Bench()
        bench.put()
        ack, _ = bench.uplink(b"hello")
        assert len(ack) == 10 and ack[0] == 0xAC
        assert int.from_bytes(ack[1:3], "big") == 1
        assert int.from_bytes(ack[8:10], "big") == 5

    def test_tampered_body(self):
        bench = Bench()
        bench.put()
        bench.fetcher.tamper = True
        with pytest.raises(DigestMismatch) as info:
            bench.uplink()
        assert info.value.sample.outcome.startswith("failed")
        assert len(bench.resolver.cache) == 0

    def test_unknown_tuple(self):
        bench = Bench()
        with pytest.raises(DnsFailure):
            bench.uplink()
        assert bench.resolver.dns_queries == 1 and bench.resolver.http_fetches == 0

    def test_serve_stale(self):
        bench = Bench()
        bench.put()
        bench.uplink()
        bench.dns.down = True
        _, s = bench.uplink()
        assert s.outcome == Outcome.DEGRADED.value
        assert bench.resolver.dns_queries == 2

    def test_fail_closed(self):
        bench = Bench(policy=FAIL_CLOSED)
        bench.put()
        bench.uplink()
        bench.dns.down = True
        with pytest.raises(DnsFailure):
            bench.uplink()

    def test_stale_without_entry_fails(self):
        bench = Bench()
        bench.put()
        bench.dns.down = True
        with pytest.raises(DnsFailure):
            bench.uplink()

    def test_stale_after_expiry_fails(self):
        bench = Bench()
        bench.put()
        bench.uplink()
        bench.clock.advance(3_601_000)
        bench.dns.down = True
        with pytest.raises(DnsFailure):
            bench.uplink()

    def test_url_precedence(self):
        bench = Bench(base_url="http://other.example")
        bench.put()
        bench.uplink()
        assert bench.fetcher.urls == [f"http://other.example/{DEVICE_EUI}/1"]
        bench = Bench()
        bench.put()
        bench.uplink()
        assert bench.fetcher.urls == [f"{REGISTRY}/{DEVICE_EUI}/1"]

    def test_no_url_anywhere(self):
        bench = Bench()
        bench.resolver.registry_url = None
        bench.put()
        with pytest.raises(FetchFailure):
            bench.uplink()

    def test_bad_frames(self):
        bench = Bench()
        bench.put()
        with pytest.raises(EmptyPayload):
            bench.resolver.handle_uplink(UplinkFrame(DEVICE_EUI, b""))
        # rule 1 exists but the frame names rule 2
        with pytest.raises(DnsFailure):
            bench.resolver.handle_uplink(UplinkFrame(DEVICE_EUI, b"\x02"))

    def test_ordering_and_decomposition(self):
        bench = Bench()
        bench.put()
        for revision in range(1, 6):
            _, s = bench.uplink()
            s.check_order()
            assert s.srt >= s.dns_rtt + (s.http_rtt or 0)
            bench.put(revision)


class TestLocalPipeline:
    def test_uncompressed(self):
        _, s = LocalPipeline(clock=VirtualClock()).handle_uplink(UplinkFrame(DEVICE_EUI, b"x"))
        assert s.outcome == "local" and s.t0pp is None

    def test_local_rule(self):
        rule = device_rule()
        pipe = LocalPipeline(Context(DEVICE_EUI, (rule,)), VirtualClock())
        data = compress(rule, device_datagram(b"abc"), Direction.UP).to_bytes()
        ack, _ = pipe.handle_uplink(UplinkFrame(DEVICE_EUI, data))
        assert int.from_bytes(ack[8:10], "big") == 3

    def test_missing_local_rule(self):
        pipe = LocalPipeline(Context(DEVICE_EUI, (device_rule(),)), VirtualClock())
        with pytest.raises(DecompressError):
            pipe.handle_uplink(UplinkFrame(DEVICE_EUI, b"\x05"))


class TestLiveEndToEnd:
    def test_http_fetcher_against_registry(self):
        store = RuleStore()
        store.put_rule(RuleDocument(DEVICE_EUI, 1, serialize_rule(DEVICE_EUI, device_rule())))
        with RegistryServer(store) as server:
            data = HttpFetcher().fetch(f"{server.base_url}/{DEVICE_EUI}/1")
            assert data == store.get_rule(DEVICE_EUI, 1).body
            with pytest.raises(FetchFailure):
                HttpFetcher().fetch(f"{server.base_url}/{DEVICE_EUI}/9")

    def test_build_ack_without_header(self):
        ack = build_ack(DeviceTuple(DEVICE_EUI, 3), None, Outcome.LOCAL)
        assert ack[:3] == b"\xac\x00\x03" and ack[4:] == bytes(6)


def test_record_digest_matches_store():
    zone = ZoneTable()
    store = RuleStore(zone=zone, dns_zone=ZONE)
    digest = store.put_rule(RuleDocument(DEVICE_EUI, 1,
                                         serialize_rule(DEVICE_EUI, device_rule())))
    assert zone.get(owner_name(DEVICE_EUI, 1, ZONE)) == ContextRecord(digest)
