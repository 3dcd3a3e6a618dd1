"""IPv6/UDP header fields and their nominal widths."""

import enum


class FieldId(enum.Enum):
    """Header fields in wire order. Value is ``(rule-file name, width in bits)``."""

    VERSION = ("ipv6.version", 4)
    TRAFFIC_CLASS = ("ipv6.traffic_class", 8)
    FLOW_LABEL = ("ipv6.flow_label", 20)
    PAYLOAD_LENGTH = ("ipv6.payload_length", 16)
    NEXT_HEADER = ("ipv6.next_header", 8)
    HOP_LIMIT = ("ipv6.hop_limit", 8)
    SRC_PREFIX = ("ipv6.src_prefix", 64)
    SRC_IID = ("ipv6.src_iid", 64)
    DST_PREFIX = ("ipv6.dst_prefix", 64)
    DST_IID = ("ipv6.dst_iid", 64)
    SRC_PORT = ("udp.src_port", 16)
    DST_PORT = ("udp.dst_port", 16)
    UDP_LENGTH = ("udp.length", 16)
    UDP_CHECKSUM = ("udp.checksum", 16)

    @property
    def label(self):
        return self.value[0]

    @property
    def width(self):
        return self.value[1]

    @classmethod
    def from_label(cls, label):
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown field {label!r}") from None


_BY_LABEL = {f.label: f for f in FieldId}

HEADER_FIELDS = tuple(FieldId)
HEADER_WIDTHS = tuple(f.width for f in HEADER_FIELDS)
HEADER_BYTES = sum(HEADER_WIDTHS) // 8  # 48
UDP_HEADER_BYTES = 8
UDP_NEXT_HEADER = 17

# fields whose value can be rebuilt from the rest of the packet
COMPUTABLE = frozenset({FieldId.PAYLOAD_LENGTH, FieldId.UDP_LENGTH, FieldId.UDP_CHECKSUM})
