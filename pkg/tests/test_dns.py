import hashlib
import os
import struct
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from schcdns.clock import VirtualClock
from schcdns.dns import (
    AuthoritativeServer,
    ContextRecord,
    ZoneTable,
    decode_txt,
    encode_txt,
    format_zone_file,
    owner_name,
    parse_zone_file,
    resolve,
    write_zone_file,
)
from schcdns.dns.client import record_from_answer
from schcdns.dns.server import build_response
from schcdns.dns.wire import (
    RCODE_NXDOMAIN,
    TYPE_TXT,
    Message,
    Question,
    ResourceRecord,
    decode_character_strings,
    decode_name,
    encode_character_strings,
    encode_name,
    split_name,
)
from schcdns.errors import (
    BadDigestLength,
    ConfigError,
    DnsProtocolError,
    DnsTimeout,
    LabelTooLong,
    MalformedRecord,
    MissingDigest,
    MissingVersion,
    NxDomain,
)
from schcdns.latency import Constant

DEV = "70b3d54996ed3b21"
ZONE = "schc.example."
DIGEST = hashlib.sha256(b"rule").hexdigest()


def record(url=None, ttl=60):
    return ContextRecord(DIGEST, url, ttl)


@pytest.fixture
def responder():
    zone = ZoneTable({owner_name(DEV, 7, ZONE): record("http://reg.example/x")})
    with AuthoritativeServer(zone) as server:
        yield server


class TestOwnerName:
    def test_grammar(self):
        assert owner_name(DEV, 7, ZONE) == "7.70b3d54996ed3b21._schc.schc.example."

    def test_uppercase_deveui_lowered(self):
        assert owner_name(DEV.upper(), 7, ZONE) == owner_name(DEV, 7, ZONE)

    def test_zone_without_trailing_dot(self):
        assert owner_name(DEV, 0, "schc.example") == "0.70b3d54996ed3b21._schc.schc.example."

    @pytest.mark.parametrize("zone", ["", "."])
    def test_empty_zone(self, zone):
        with pytest.raises(LabelTooLong):
            owner_name(DEV, 7, zone)

    def test_long_label(self):
        with pytest.raises(LabelTooLong):
            owner_name(DEV, 7, "a" * 64 + ".example.")

    def test_long_name(self):
        zone = ".".join(["a" * 60] * 4) + "."
        with pytest.raises(LabelTooLong):
            owner_name(DEV, 7, zone)

    @pytest.mark.parametrize("deveui", ["70b3d54996ed3b2", "70b3d54996ed3b2g", ""])
    def test_bad_deveui(self, deveui):
        with pytest.raises(ValueError):
            owner_name(deveui, 7, ZONE)

    def test_bytes_deveui(self):
        assert owner_name(bytes.fromhex(DEV), 1, ZONE).startswith("1." + DEV)


class TestTxt:
    def test_digest_only(self):
        assert encode_txt(record()) == f"v=schc1;h={DIGEST}"

    def test_with_url_order(self):
        assert encode_txt(record("http://r.example/a/1")) == (
            f"v=schc1;h={DIGEST};u=http://r.example/a/1")

    def test_unknown_key_ignored(self):
        assert decode_txt(f"v=schc1;x=1;h={DIGEST}") == record()

    def test_short_digest(self):
        with pytest.raises(BadDigestLength):
            decode_txt(f"v=schc1;h={DIGEST[:63]}")

    def test_missing_version(self):
        with pytest.raises(MissingVersion):
            decode_txt(f"h={DIGEST}")

    def test_missing_digest(self):
        with pytest.raises(MissingDigest):
            decode_txt("v=schc1")

    def test_wrong_version(self):
        with pytest.raises(MalformedRecord):
            decode_txt(f"v=schc2;h={DIGEST}")

    def test_relative_url_rejected(self):
        with pytest.raises(MalformedRecord):
            ContextRecord(DIGEST, "/70b3d54996ed3b21/7")

    def test_split_strings_join(self):
        rec = record("http://r.example/" + "p" * 300)
        rdata = encode_character_strings(encode_txt(rec))
        strings = decode_character_strings(rdata)
        assert len(strings) == 2 and all(len(s) <= 255 for s in strings)
        assert decode_txt(strings) == rec

    @given(st.binary(min_size=32, max_size=32),
           st.one_of(st.none(), st.from_regex(r"https?://[a-z]{1,20}\.example(/[a-z0-9]{0,30})?",
                                              fullmatch=True)),
           st.integers(0, 2**31 - 1))
    def test_round_trip(self, raw, url, ttl):
        rec = ContextRecord(raw.hex(), url, ttl)
        assert decode_txt(encode_txt(rec), ttl=ttl) == rec


class TestWire:
    def test_query_matches_hand_encoding(self):
        name = owner_name(DEV, 7, ZONE)
        wire = Message(id=0x1234, rd=True, questions=[Question(name)]).encode()
        expected = struct.pack("!HHHHHH", 0x1234, 0x0100, 1, 0, 0, 0)
        for label in name.rstrip(".").split("."):
            expected += bytes([len(label)]) + label.encode()
        expected += b"\x00" + struct.pack("!HH", 16, 1)
        assert wire == expected

    def test_round_trip(self):
        name = owner_name(DEV, 7, ZONE)
        msg = Message(id=9, qr=True, aa=True, questions=[Question(name)],
                      answers=[ResourceRecord(name, TYPE_TXT, 1, 60,
                                              encode_character_strings("abc"))])
        assert Message.decode(msg.encode()) == msg

    def test_compression_pointer(self):
        # name "a.example." at offset 12, then a pointer back to it
        data = bytes(12) + b"\x01a\x07example\x00" + b"\x01b\xc0\x0c"
        assert decode_name(data, 12) == ("a.example.", 23)
        assert decode_name(data, 23) == ("b.a.example.", 27)

    def test_pointer_loop_rejected(self):
        data = bytes(12) + b"\xc0\x0c"
        with pytest.raises(DnsProtocolError):
            decode_name(data, 12)

    def test_truncated_header(self):
        with pytest.raises(DnsProtocolError):
            Message.decode(b"\x00\x01\x00")

    def test_split_and_encode(self):
        assert split_name("a.b.") == ["a", "b"]
        assert encode_name("a.b.") == b"\x01a\x01b\x00"


class TestResponse:
    def test_answer_and_nxdomain(self):
        name = owner_name(DEV, 7, ZONE)
        zone = ZoneTable({name: record()})
        resp = build_response(Message(id=1, questions=[Question(name)]), zone)
        assert resp.aa and record_from_answer(resp, name) == record()
        other = owner_name(DEV, 8, ZONE)
        resp = build_response(Message(id=2, questions=[Question(other)]), zone)
        assert resp.rcode == RCODE_NXDOMAIN
        with pytest.raises(NxDomain):
            record_from_answer(resp, other)

    def test_case_insensitive_lookup(self):
        name = owner_name(DEV, 7, ZONE)
        zone = ZoneTable({name: record()})
        assert zone.get(name.upper()) == record()


class TestLoopback:
    def test_resolve(self, responder):
        rec, rtt = resolve(DEV, 7, responder.address, ZONE)
        assert rec == record("http://reg.example/x")
        assert rtt > 0
        assert responder.queries == 1

    def test_unknown_tuple(self, responder):
        with pytest.raises(NxDomain):
            resolve(DEV, 8, responder.address, ZONE)

    def test_one_query_per_call(self, responder):
        for _ in range(5):
            resolve(DEV, 7, responder.address, ZONE)
        assert responder.queries == 5

    @pytest.mark.parametrize("delay_ms", [10, 200])
    def test_injected_delay(self, delay_ms):
        zone = ZoneTable({owner_name(DEV, 7, ZONE): record()})
        with AuthoritativeServer(zone, delay=Constant(delay_ms)) as server:
            _, rtt = resolve(DEV, 7, server.address, ZONE)
        assert delay_ms <= rtt < delay_ms + 50

    def test_timeout_and_retries(self):
        zone = ZoneTable({owner_name(DEV, 7, ZONE): record()})
        with AuthoritativeServer(zone, delay=Constant(300)) as server:
            with pytest.raises(DnsTimeout):
                resolve(DEV, 7, server.address, ZONE, timeout=0.05, retries=1)
            time.sleep(0.7)
            assert server.queries == 2

    def test_update_visible(self, responder):
        new = ContextRecord(hashlib.sha256(b"v2").hexdigest())
        responder.zone.publish(owner_name(DEV, 7, ZONE), new)
        assert resolve(DEV, 7, responder.address, ZONE)[0] == new


class TestZoneFile:
    def test_round_trip(self):
        records = {owner_name(DEV, 7, ZONE): record("http://r.example/a"),
                   owner_name(DEV, 1, ZONE): record(ttl=5)}
        assert parse_zone_file(format_zone_file(records)) == records

    def test_bad_line(self):
        with pytest.raises(ConfigError):
            parse_zone_file("name 60 A 1.2.3.4\n")

    def test_reload_on_change(self, tmp_path):
        path = tmp_path / "zone.txt"
        name = owner_name(DEV, 7, ZONE)
        write_zone_file(path, {name: record()})
        with AuthoritativeServer(ZoneTable(), zone_file=path) as server:
            assert resolve(DEV, 7, server.address, ZONE)[0].digest == DIGEST
            new = hashlib.sha256(b"v2").hexdigest()
            write_zone_file(path, {name: ContextRecord(new)})
            st_ = path.stat()
            os.utime(path, ns=(st_.st_atime_ns, st_.st_mtime_ns + 1_000_000))
            assert resolve(DEV, 7, server.address, ZONE)[0].digest == new


class TestVirtualClockRtt:
    def test_rtt_uses_supplied_clock(self, responder):
        clock = VirtualClock()
        _, rtt = resolve(DEV, 7, responder.address, ZONE, clock=clock)
        assert rtt == 0
