"""Minimal DNS message codec (RFC 1035 section 4) for TXT lookups.

Covers what the resolver and the embedded responder exchange: one question,
answer records with TXT rdata, and name compression on decode.
"""

import struct
from dataclasses import dataclass, field

from ..errors import DnsProtocolError, LabelTooLong

TYPE_TXT = 16
CLASS_IN = 1

RCODE_NOERROR = 0
RCODE_FORMERR = 1
RCODE_SERVFAIL = 2
RCODE_NXDOMAIN = 3
RCODE_NOTIMP = 4
RCODE_REFUSED = 5

_HEADER = struct.Struct("!HHHHHH")
_QTAIL = struct.Struct("!HH")
_RRTAIL = struct.Struct("!HHIH")


@dataclass(frozen=True)
class Question:
    name: str  # dotted, with trailing dot
    qtype: int = TYPE_TXT
    qclass: int = CLASS_IN


@dataclass(frozen=True)
class ResourceRecord:
    name: str
    rtype: int
    rclass: int
    ttl: int
    rdata: bytes

    def txt_strings(self):
        if self.rtype != TYPE_TXT:
            raise DnsProtocolError(f"record type {self.rtype} is not TXT")
        return decode_character_strings(self.rdata)


@dataclass
class Message:
    id: int
    qr: bool = False
    opcode: int = 0
    aa: bool = False
    tc: bool = False
    rd: bool = False
    ra: bool = False
    rcode: int = 0
    questions: list = field(default_factory=list)
    answers: list = field(default_factory=list)
    authority: list = field(default_factory=list)
    additional: list = field(default_factory=list)

    @property
    def flags(self):
        return ((self.qr << 15) | (self.opcode << 11) | (self.aa << 10) | (self.tc << 9)
                | (self.rd << 8) | (self.ra << 7) | self.rcode)

    def encode(self):
        out = bytearray(_HEADER.pack(self.id, self.flags, len(self.questions), len(self.answers),
                                     len(self.authority), len(self.additional)))
        for q in self.questions:
            out += encode_name(q.name) + _QTAIL.pack(q.qtype, q.qclass)
        for rr in self.answers + self.authority + self.additional:
            out += encode_name(rr.name)
            out += _RRTAIL.pack(rr.rtype, rr.rclass, rr.ttl, len(rr.rdata)) + rr.rdata
        return bytes(out)

    @classmethod
    def decode(cls, data):
        if len(data) < _HEADER.size:
            raise DnsProtocolError("message shorter than the 12-byte header")
        mid, flags, qd, an, ns, ar = _HEADER.unpack_from(data)
        msg = cls(
            id=mid,
            qr=bool(flags >> 15),
            opcode=(flags >> 11) & 0xF,
            aa=bool(flags & 0x400),
            tc=bool(flags & 0x200),
            rd=bool(flags & 0x100),
            ra=bool(flags & 0x80),
            rcode=flags & 0xF,
        )
        pos = _HEADER.size
        try:
            for _ in range(qd):
                name, pos = decode_name(data, pos)
                qtype, qclass = _QTAIL.unpack_from(data, pos)
                pos += _QTAIL.size
                msg.questions.append(Question(name, qtype, qclass))
            for section, count in ((msg.answers, an), (msg.authority, ns), (msg.additional, ar)):
                for _ in range(count):
                    name, pos = decode_name(data, pos)
                    rtype, rclass, ttl, rdlen = _RRTAIL.unpack_from(data, pos)
                    pos += _RRTAIL.size
                    if pos + rdlen > len(data):
                        raise DnsProtocolError("rdata runs past end of message")
                    section.append(ResourceRecord(name, rtype, rclass, ttl, data[pos:pos + rdlen]))
                    pos += rdlen
        except struct.error:
            raise DnsProtocolError("truncated message") from None
        return msg


def split_name(name):
    """Labels of a dotted name; validates label and total lengths."""
    if name in ("", "."):
        if name == "":
            raise LabelTooLong("empty name")
        return []
    labels = name[:-1].split(".") if name.endswith(".") else name.split(".")
    wire = 1
    for label in labels:
        raw = label.encode("ascii")
        if not raw:
            raise LabelTooLong(f"empty label in {name!r}")
        if len(raw) > 63:
            raise LabelTooLong(f"label {label[:20]!r}... is {len(raw)} octets (max 63)")
        wire += len(raw) + 1
    if wire > 255:
        raise LabelTooLong(f"name is {wire} octets on the wire (max 255)")
    return labels


def encode_name(name):
    out = bytearray()
    for label in split_name(name):
        raw = label.encode("ascii")
        out.append(len(raw))
        out += raw
    out.append(0)
    return bytes(out)


def decode_name(data, pos):
    labels = []
    end = None
    jumps = 0
    while True:
        if pos >= len(data):
            raise DnsProtocolError("name runs past end of message")
        length = data[pos]
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(data):
                raise DnsProtocolError("truncated compression pointer")
            if end is None:
                end = pos + 2
            jumps += 1
            if jumps > 32:
                raise DnsProtocolError("compression pointer loop")
            pos = ((length & 0x3F) << 8) | data[pos + 1]
            continue
        if length & 0xC0:
            raise DnsProtocolError(f"unsupported label type {length:#x}")
        pos += 1
        if length == 0:
            break
        label = data[pos:pos + length]
        if len(label) != length:
            raise DnsProtocolError("label runs past end of message")
        try:
            labels.append(label.decode("ascii"))
        except UnicodeDecodeError:
            raise DnsProtocolError("non-ASCII label") from None
        pos += length
    return ".".join(labels) + ".", (end if end is not None else pos)


def encode_character_strings(text):
    """TXT rdata: *text* split into length-prefixed chunks of <= 255 octets."""
    raw = text.encode("ascii")
    out = bytearray()
    for i in range(0, max(len(raw), 1), 255):
        chunk = raw[i:i + 255]
        out.append(len(chunk))
        out += chunk
    return bytes(out)


def decode_character_strings(rdata):
    strings = []
    pos = 0
    while pos < len(rdata):
        n = rdata[pos]
        chunk = rdata[pos + 1:pos + 1 + n]
        if len(chunk) != n:
            raise DnsProtocolError("TXT character-string runs past rdata")
        strings.append(chunk.decode("ascii", "replace"))
        pos += 1 + n
    return strings
