"""SCHC rule model and IPv6/UDP header compression."""

from .engine import (
    Bits,
    CompressedPacket,
    compress,
    decompress,
    field_matches,
    peek_rule_id,
    recompute,
    select_rule,
)
from .fields import COMPUTABLE, HEADER_BYTES, HEADER_FIELDS, FieldId
from .packet import HeaderFields, build_datagram, parse_ipv6_udp, serialize_ipv6_udp, udp_checksum
from .rule import CDA, MO, Context, Direction, FieldDescriptor, Rule, mapping_index_width
from .ruleformat import parse_rule_file, serialize_context, serialize_rule

__all__ = [
    "Bits", "CDA", "COMPUTABLE", "CompressedPacket", "Context", "Direction", "FieldDescriptor",
    "FieldId", "HEADER_BYTES", "HEADER_FIELDS", "HeaderFields", "MO", "Rule", "build_datagram",
    "compress", "decompress", "field_matches", "mapping_index_width", "parse_ipv6_udp",
    "parse_rule_file", "peek_rule_id", "recompute", "select_rule", "serialize_context",
    "serialize_ipv6_udp", "serialize_rule", "udp_checksum",
]
