"""Rule matching, compression and decompression."""

from dataclasses import dataclass
from typing import NamedTuple

from .. import kernels
from ..errors import (
    ResidueOverflow,
    ResidueUnderflow,
    RuleIdMismatch,
    RuleMismatch,
    WidthMismatch,
)
from .fields import HEADER_FIELDS, UDP_HEADER_BYTES, FieldId
from .packet import HeaderFields, udp_checksum
from .rule import CDA, MO


class Bits(NamedTuple):
    """An MSB-first bit string held as an unsigned int of known width."""

    value: int
    width: int

    def __str__(self):
        return format(self.value, f"0{self.width}b") if self.width else ""

    def chunks(self, size=64):
        """Split into pieces of at most *size* bits, most significant first."""
        out = []
        remaining = self.width
        while remaining > 0:
            take = min(size, remaining)
            remaining -= take
            out.append(Bits((self.value >> remaining) & ((1 << take) - 1), take))
        return out


EMPTY = Bits(0, 0)


@dataclass(frozen=True)
class CompressedPacket:
    rule_id: int
    residue: Bits
    payload: bytes = b""
    rule_id_width: int = 8

    @property
    def header_bytes(self):
        """Bytes taken by rule id + residue after padding."""
        return (self.rule_id_width + self.residue.width + 7) // 8

    def to_bytes(self):
        pieces = [Bits(self.rule_id, self.rule_id_width)] + self.residue.chunks()
        head, _ = kernels.pack_fields([p.value for p in pieces], [p.width for p in pieces])
        return head + self.payload

    @classmethod
    def from_bytes(cls, data, rule, direction):
        """Split *data* using *rule*'s residue layout for *direction*."""
        w = rule.rule_id_width
        if len(data) * 8 < w:
            raise ResidueUnderflow("packet shorter than the rule id")
        (rule_id,) = kernels.unpack_fields(data, 0, [w])
        if rule_id != rule.rule_id:
            raise RuleIdMismatch(f"packet rule id {rule_id} != rule {rule.rule_id}")
        rwidth = rule.residue_width(direction)
        if len(data) * 8 < w + rwidth:
            raise ResidueUnderflow(f"need {w + rwidth} bits, packet has {len(data) * 8}")
        widths = [c.width for c in Bits(0, rwidth).chunks()]
        value = 0
        for piece, width in zip(kernels.unpack_fields(data, w, widths), widths):
            value = (value << width) | piece
        head = (w + rwidth + 7) // 8
        return cls(rule_id, Bits(value, rwidth), bytes(data[head:]), w)


def peek_rule_id(data, width=8):
    if len(data) * 8 < width:
        raise ResidueUnderflow("packet shorter than the rule id")
    return kernels.unpack_fields(data, 0, [width])[0]


def field_matches(d, value):
    if value < 0 or value >> d.field_length:
        raise WidthMismatch(f"{d.field_id.label}: {value:#x} wider than {d.field_length} bits")
    mo = d.mo
    if mo is MO.IGNORE:
        return True
    if mo is MO.EQUAL:
        return value == d.target_value
    if mo is MO.MSB:
        shift = d.field_length - d.msb_length
        return value >> shift == d.target_value >> shift
    return value in d.target_value


def _rule_matches(rule, h, direction):
    return all(field_matches(d, h.values[d.field_id]) for d in rule.for_direction(direction))


def select_rule(ctx, h, direction):
    """Lowest-id rule of *ctx* whose descriptors all match *h*, or None."""
    for rule in ctx.rules:  # sorted by id
        if _rule_matches(rule, h, direction):
            return rule
    return None


def compress(rule, h, direction):
    acc = 0
    width = 0
    for d in rule.for_direction(direction):
        value = h.values[d.field_id]
        if not field_matches(d, value):
            raise RuleMismatch(
                f"rule {rule.rule_id}: {d.field_id.label}={value:#x} fails {d.mo.value}")
        cda = d.cda
        if cda is CDA.VALUE_SENT:
            acc = (acc << d.field_length) | value
            width += d.field_length
        elif cda is CDA.LSB:
            n = d.field_length - d.msb_length
            acc = (acc << n) | (value & ((1 << n) - 1))
            width += n
        elif cda is CDA.MAPPING_SENT:
            n = d.residue_width
            acc = (acc << n) | d.target_value.index(value)
            width += n
    return CompressedPacket(rule.rule_id, Bits(acc, width), h.payload, rule.rule_id_width)


def decompress(rule, p, direction):
    if p.rule_id != rule.rule_id:
        raise RuleIdMismatch(f"packet rule id {p.rule_id} != rule {rule.rule_id}")
    descriptors = rule.for_direction(direction)
    expected = sum(d.residue_width for d in descriptors)
    if p.residue.width < expected:
        raise ResidueUnderflow(f"residue has {p.residue.width} bits, rule needs {expected}")
    if p.residue.width > expected:
        raise ResidueOverflow(f"residue has {p.residue.width} bits, rule needs {expected}")

    values = {}
    computed = []
    pos = p.residue.width
    residue = p.residue.value
    for d in descriptors:
        n = d.residue_width
        pos -= n
        piece = (residue >> pos) & ((1 << n) - 1)
        cda = d.cda
        if cda is CDA.NOT_SENT:
            values[d.field_id] = d.target_value
        elif cda is CDA.VALUE_SENT:
            values[d.field_id] = piece
        elif cda is CDA.LSB:
            keep = d.field_length - d.msb_length
            values[d.field_id] = (d.target_value >> keep << keep) | piece
        elif cda is CDA.MAPPING_SENT:
            if piece >= len(d.target_value):
                raise ResidueOverflow(
                    f"{d.field_id.label}: mapping index {piece} beyond {len(d.target_value)} entries")
            values[d.field_id] = d.target_value[piece]
        else:
            computed.append(d.field_id)
            values[d.field_id] = 0

    n = UDP_HEADER_BYTES + len(p.payload)
    for fid in computed:
        if fid is not FieldId.UDP_CHECKSUM:
            values[fid] = n
    h = HeaderFields({f: values[f] for f in HEADER_FIELDS}, p.payload)
    if FieldId.UDP_CHECKSUM in computed:
        values[FieldId.UDP_CHECKSUM] = udp_checksum(h)
        h = HeaderFields({f: values[f] for f in HEADER_FIELDS}, p.payload)
    return h


def recompute(rule, h, direction):
    """*h* with the rule's compute fields rebuilt from the packet contents."""
    computed = {d.field_id for d in rule.for_direction(direction) if d.cda is CDA.COMPUTE}
    if not computed:
        return h
    values = dict(h.values)
    n = UDP_HEADER_BYTES + len(h.payload)
    for fid in computed - {FieldId.UDP_CHECKSUM}:
        values[fid] = n
    h = HeaderFields(values, h.payload)
    if FieldId.UDP_CHECKSUM in computed:
        values[FieldId.UDP_CHECKSUM] = udp_checksum(h)
        h = HeaderFields(values, h.payload)
    return h
