"""Stub resolver: one TXT query over UDP, measured round trip."""

import secrets
import socket

from ..clock import WallClock
from ..errors import DnsProtocolError, DnsTimeout, MalformedRecord, NxDomain
from .records import VERSION_TAG, decode_txt, owner_name
from .wire import CLASS_IN, RCODE_NOERROR, RCODE_NXDOMAIN, TYPE_TXT, Message, Question

DEFAULT_PORT = 53


def query_txt(name, server, timeout=2.0, clock=None):
    """Send one TXT query for *name* to *server* ``(host, port)``.

    Returns ``(answer message, t_sent, t_received)`` in clock milliseconds.
    Replies with the wrong id or question are discarded; only the timeout
    ends the wait.
    """
    clock = clock or WallClock()
    qid = secrets.randbits(16)
    query = Message(id=qid, rd=True, questions=[Question(name, TYPE_TXT, CLASS_IN)])
    family = socket.AF_INET6 if ":" in server[0] else socket.AF_INET
    with socket.socket(family, socket.SOCK_DGRAM) as sock:
        sock.connect(server)
        t_sent = clock.now()
        sock.send(query.encode())
        deadline = t_sent + timeout * 1000.0
        while True:
            remaining = (deadline - clock.now()) / 1000.0
            if remaining <= 0:
                raise DnsTimeout(f"no answer for {name} from {server[0]}:{server[1]}")
            sock.settimeout(remaining)
            try:
                data = sock.recv(4096)
            except socket.timeout:
                raise DnsTimeout(f"no answer for {name} from {server[0]}:{server[1]}") from None
            except ConnectionRefusedError:
                raise DnsTimeout(f"{server[0]}:{server[1]} refused the query") from None
            t_received = clock.now()
            try:
                resp = Message.decode(data)
            except DnsProtocolError:
                continue
            if (resp.id == qid and resp.qr and len(resp.questions) == 1
                    and resp.questions[0].name.lower() == name.lower()):
                return resp, t_sent, t_received


def record_from_answer(resp, name):
    if resp.rcode == RCODE_NXDOMAIN:
        raise NxDomain(f"{name} does not exist")
    if resp.rcode != RCODE_NOERROR:
        raise DnsProtocolError(f"{name}: server answered rcode {resp.rcode}")
    candidates = []
    for rr in resp.answers:
        if rr.rtype == TYPE_TXT and rr.name.lower() == name.lower():
            text = "".join(rr.txt_strings())
            if text.startswith(f"v={VERSION_TAG}") or "v=" not in text:
                candidates.append((text, rr.ttl))
    if not candidates:
        raise MalformedRecord(f"{name} has no schc TXT record")
    text, ttl = candidates[0]
    return decode_txt(text, ttl=ttl)


def resolve(deveui, rule_id, server, zone, timeout=2.0, retries=0, clock=None):
    """Look up the context record of ``(deveui, rule_id)``.

    Sends exactly ``1 + retries`` queries at most; retries happen only on
    timeout. Returns ``(ContextRecord, rtt_ms)``.
    """
    name = owner_name(deveui, rule_id, zone)
    attempt = 0
    while True:
        try:
            resp, t0, t1 = query_txt(name, server, timeout, clock)
            break
        except DnsTimeout:
            if attempt >= retries:
                raise
            attempt += 1
    return record_from_answer(resp, name), t1 - t0
