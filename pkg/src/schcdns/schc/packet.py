"""Fixed-layout IPv6 + UDP header codec and the UDP-over-IPv6 checksum."""

from dataclasses import dataclass, field, replace
from types import MappingProxyType

from .. import kernels
from ..errors import InconsistentWidths, NotIPv6, TruncatedDatagram
from .fields import (
    HEADER_BYTES,
    HEADER_FIELDS,
    HEADER_WIDTHS,
    UDP_HEADER_BYTES,
    UDP_NEXT_HEADER,
    FieldId,
)


@dataclass(frozen=True)
class HeaderFields:
    """All 14 header field values (as unsigned ints) plus the UDP payload."""

    values: MappingProxyType
    payload: bytes = field(default=b"")

    def __post_init__(self):
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        object.__setattr__(self, "payload", bytes(self.payload))

    def __getitem__(self, fid):
        return self.values[fid]

    def __eq__(self, other):
        if not isinstance(other, HeaderFields):
            return NotImplemented
        return dict(self.values) == dict(other.values) and self.payload == other.payload

    def __hash__(self):
        return hash((tuple(sorted((f.label, v) for f, v in self.values.items())), self.payload))

    def with_values(self, **changes):
        """Copy with some fields replaced, keyed by ``FieldId`` member name."""
        values = dict(self.values)
        for name, value in changes.items():
            values[FieldId[name.upper()]] = value
        return replace(self, values=values)

    def with_payload(self, payload):
        return replace(self, payload=payload)

    def check_widths(self):
        missing = [f.label for f in HEADER_FIELDS if f not in self.values]
        if missing:
            raise InconsistentWidths(f"missing fields: {', '.join(missing)}")
        for fid in HEADER_FIELDS:
            v = self.values[fid]
            if not isinstance(v, int) or v < 0 or v >> fid.width:
                raise InconsistentWidths(f"{fid.label}={v!r} does not fit in {fid.width} bits")

    def consistent(self):
        """True when the length and checksum fields agree with the payload."""
        n = UDP_HEADER_BYTES + len(self.payload)
        return (self.values[FieldId.PAYLOAD_LENGTH] == n
                and self.values[FieldId.UDP_LENGTH] == n
                and self.values[FieldId.UDP_CHECKSUM] == udp_checksum(self))


def parse_ipv6_udp(datagram):
    if len(datagram) < HEADER_BYTES:
        raise TruncatedDatagram(f"{len(datagram)} bytes, need at least {HEADER_BYTES}")
    values = kernels.unpack_fields(datagram, 0, HEADER_WIDTHS)
    if values[0] != 6:
        raise NotIPv6(f"version nibble is {values[0]}")
    return HeaderFields(dict(zip(HEADER_FIELDS, values)), bytes(datagram[HEADER_BYTES:]))


def serialize_ipv6_udp(h):
    h.check_widths()
    header, _ = kernels.pack_fields([h.values[f] for f in HEADER_FIELDS], HEADER_WIDTHS)
    return header + h.payload


def udp_checksum(h):
    """UDP checksum over the IPv6 pseudo-header, UDP header and payload.

    The stored checksum field of *h* is ignored. A zero result is returned as
    0xFFFF, since zero means "no checksum" on the wire.
    """
    v = h.values
    udp_len = v[FieldId.UDP_LENGTH]
    pseudo, _ = kernels.pack_fields(
        [v[FieldId.SRC_PREFIX], v[FieldId.SRC_IID], v[FieldId.DST_PREFIX], v[FieldId.DST_IID],
         udp_len, UDP_NEXT_HEADER,
         v[FieldId.SRC_PORT], v[FieldId.DST_PORT], udp_len, 0],
        [64, 64, 64, 64, 32, 32, 16, 16, 16, 16],
    )
    total = kernels.ones_complement_sum(pseudo + h.payload)
    result = ~total & 0xFFFF
    return result or 0xFFFF


def build_datagram(src_prefix, src_iid, dst_prefix, dst_iid, src_port, dst_port,
                   payload=b"", hop_limit=64, traffic_class=0, flow_label=0):
    """Self-consistent HeaderFields (lengths and checksum filled in)."""
    n = UDP_HEADER_BYTES + len(payload)
    values = {
        FieldId.VERSION: 6,
        FieldId.TRAFFIC_CLASS: traffic_class,
        FieldId.FLOW_LABEL: flow_label,
        FieldId.PAYLOAD_LENGTH: n,
        FieldId.NEXT_HEADER: UDP_NEXT_HEADER,
        FieldId.HOP_LIMIT: hop_limit,
        FieldId.SRC_PREFIX: src_prefix,
        FieldId.SRC_IID: src_iid,
        FieldId.DST_PREFIX: dst_prefix,
        FieldId.DST_IID: dst_iid,
        FieldId.SRC_PORT: src_port,
        FieldId.DST_PORT: dst_port,
        FieldId.UDP_LENGTH: n,
        FieldId.UDP_CHECKSUM: 0,
    }
    h = HeaderFields(values, payload)
    values[FieldId.UDP_CHECKSUM] = udp_checksum(h)
    return HeaderFields(values, payload)
