"""Embedded authoritative DNS responder for the testbed.

Answers TXT queries from a :class:`ZoneTable`, returns NXDOMAIN for names it
does not hold, and can delay each answer by a draw from a latency
distribution to stand in for slower (cold-cache, wide-area) resolution.
"""

import logging
import os
import random
import shlex
import socketserver
import tempfile
import threading
import time
from pathlib import Path

from ..errors import BindFailure, ConfigError
from .records import DEFAULT_TTL, ContextRecord, decode_txt, encode_txt
from .wire import (
    CLASS_IN,
    RCODE_FORMERR,
    RCODE_NOTIMP,
    RCODE_NXDOMAIN,
    RCODE_REFUSED,
    TYPE_TXT,
    Message,
    ResourceRecord,
    encode_character_strings,
)

log = logging.getLogger(__name__)


class ZoneTable:
    """Owner name -> ContextRecord.

    Every update swaps in a new dict, so a reader always sees one consistent
    snapshot (never an old digest paired with a new URL).
    """

    def __init__(self, records=None):
        self._records = {}
        self._lock = threading.Lock()
        self.serial = 0
        if records:
            self.replace_all(records)

    @staticmethod
    def _key(name):
        name = name.lower()
        return name if name.endswith(".") else name + "."

    def get(self, name):
        return self._records.get(self._key(name))

    def snapshot(self):
        return dict(self._records)

    def publish(self, name, record):
        with self._lock:
            records = dict(self._records)
            records[self._key(name)] = record
            self._records = records
            self.serial += 1

    def remove(self, name):
        with self._lock:
            records = dict(self._records)
            records.pop(self._key(name), None)
            self._records = records
            self.serial += 1

    def replace_all(self, records):
        fresh = {self._key(n): r for n, r in records.items()}
        with self._lock:
            self._records = fresh
            self.serial += 1

    def __len__(self):
        return len(self._records)

    def __contains__(self, name):
        return self._key(name) in self._records


def parse_zone_file(text):
    """Parse ``name TTL TXT "payload"`` lines into a name -> record dict."""
    records = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        try:
            parts = shlex.split(stripped)
        except ValueError as exc:
            raise ConfigError(f"zone line {lineno}: {exc}") from None
        if len(parts) < 4 or parts[2].upper() != "TXT":
            raise ConfigError(f'zone line {lineno}: expected name TTL TXT "payload"')
        name, ttl = parts[0], parts[1]
        if not ttl.isdigit():
            raise ConfigError(f"zone line {lineno}: bad TTL {ttl!r}")
        try:
            records[ZoneTable._key(name)] = decode_txt(parts[3:], ttl=int(ttl))
        except ValueError as exc:
            raise ConfigError(f"zone line {lineno}: {exc}") from None
    return records


def format_zone_file(records):
    lines = [f'{name} {rec.ttl} TXT "{encode_txt(rec)}"' for name, rec in sorted(records.items())]
    return "".join(line + "\n" for line in lines)


def load_zone_file(path):
    return ZoneTable(parse_zone_file(Path(path).read_text()))


def write_zone_file(path, records):
    """Atomically replace *path* with the formatted zone."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(format_zone_file(records))
    os.replace(tmp, path)


def build_response(query, zone):
    resp = Message(id=query.id, qr=True, opcode=query.opcode, aa=True, rd=query.rd,
                   questions=list(query.questions))
    if query.opcode != 0:
        resp.rcode = RCODE_NOTIMP
        return resp
    if len(query.questions) != 1:
        resp.rcode = RCODE_FORMERR
        return resp
    q = query.questions[0]
    if q.qclass != CLASS_IN:
        resp.rcode = RCODE_REFUSED
        return resp
    record = zone.get(q.name)
    if record is None:
        resp.rcode = RCODE_NXDOMAIN
    elif q.qtype == TYPE_TXT:
        rdata = encode_character_strings(encode_txt(record))
        resp.answers.append(ResourceRecord(q.name, TYPE_TXT, CLASS_IN, record.ttl, rdata))
    return resp


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        data, sock = self.request
        server = self.server.owner
        server._count()
        try:
            query = Message.decode(data)
        except ValueError:
            if len(data) >= 2:
                sock.sendto(Message(id=int.from_bytes(data[:2], "big"), qr=True,
                                    rcode=RCODE_FORMERR).encode(), self.client_address)
            return
        if query.qr:
            return
        server._maybe_reload()
        resp = build_response(query, server.zone)
        delay = server._draw_delay()
        if delay > 0:
            time.sleep(delay / 1000.0)
        sock.sendto(resp.encode(), self.client_address)


class _UDPServer(socketserver.ThreadingUDPServer):
    daemon_threads = True
    allow_reuse_address = True


class AuthoritativeServer:
    """Threaded UDP responder. Use as a context manager or call start/stop."""

    def __init__(self, zone, host="127.0.0.1", port=0, delay=None, seed=0, zone_file=None):
        self.zone = zone
        self.delay = delay
        self.zone_file = Path(zone_file) if zone_file else None
        self._zone_mtime = None
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self.queries = 0
        try:
            self._server = _UDPServer((host, port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind DNS responder to {host}:{port}: {exc}") from exc
        self._server.owner = self
        self._thread = None
        if self.zone_file is not None:
            self._maybe_reload()

    @property
    def address(self):
        return self._server.server_address[:2]

    def _count(self):
        with self._lock:
            self.queries += 1

    def _draw_delay(self):
        if self.delay is None:
            return 0.0
        with self._lock:
            return self.delay.sample(self._rng)

    def _maybe_reload(self):
        if self.zone_file is None:
            return
        try:
            mtime = self.zone_file.stat().st_mtime_ns
        except FileNotFoundError:
            return
        if mtime != self._zone_mtime:
            self._zone_mtime = mtime
            self.zone.replace_all(parse_zone_file(self.zone_file.read_text()))
            log.info("reloaded %d records from %s", len(self.zone), self.zone_file)

    def start(self):
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self._server.serve_forever()

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve_authoritative(zone, bind=("127.0.0.1", 0), delay=None, seed=0):
    """Start a responder in a background thread and return it."""
    return AuthoritativeServer(zone, bind[0], bind[1], delay=delay, seed=seed).start()


__all__ = [
    "AuthoritativeServer", "ContextRecord", "DEFAULT_TTL", "ZoneTable", "build_response",
    "format_zone_file", "load_zone_file", "parse_zone_file", "serve_authoritative",
    "write_zone_file",
]
