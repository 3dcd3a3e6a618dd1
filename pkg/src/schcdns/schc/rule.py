"""SCHC rule model: field descriptors, rules and per-device contexts."""

import enum
from dataclasses import dataclass

from ..errors import DuplicateRuleId, IllegalPairing, InvalidDescriptor
from .fields import COMPUTABLE, HEADER_FIELDS, FieldId

DEFAULT_RULE_ID_WIDTH = 8


class Direction(enum.Enum):
    UP = "up"
    DOWN = "down"
    BI = "bi"


class MO(enum.Enum):
    """Matching operators."""

    EQUAL = "equal"
    IGNORE = "ignore"
    MSB = "msb"
    MATCH_MAPPING = "match-mapping"


class CDA(enum.Enum):
    """Compression/decompression actions."""

    NOT_SENT = "not-sent"
    VALUE_SENT = "value-sent"
    LSB = "lsb"
    MAPPING_SENT = "mapping-sent"
    COMPUTE = "compute"


LEGAL_PAIRS = {
    MO.EQUAL: {CDA.NOT_SENT},
    MO.IGNORE: {CDA.VALUE_SENT, CDA.COMPUTE},
    MO.MSB: {CDA.LSB},
    MO.MATCH_MAPPING: {CDA.MAPPING_SENT},
}


def mapping_index_width(n):
    """Bits needed to index an n-entry mapping list (at least 1)."""
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class FieldDescriptor:
    field_id: FieldId
    field_length: int
    field_position: int
    direction: Direction
    target_value: object  # int, tuple of ints (match-mapping) or None
    mo: MO
    cda: CDA
    msb_length: int = None

    def __post_init__(self):
        fid = self.field_id
        if self.field_length != fid.width:
            raise InvalidDescriptor(
                f"{fid.label}: length {self.field_length} != nominal width {fid.width}")
        if self.field_position < 1:
            raise InvalidDescriptor(f"{fid.label}: position must be >= 1")
        if self.cda not in LEGAL_PAIRS[self.mo]:
            raise IllegalPairing(f"{fid.label}: {self.mo.value} cannot pair with {self.cda.value}")
        if self.cda is CDA.COMPUTE and fid not in COMPUTABLE:
            raise IllegalPairing(f"{fid.label}: compute is not defined for this field")

        tv = self.target_value
        if self.mo is MO.MATCH_MAPPING:
            if not isinstance(tv, tuple) or not tv:
                raise InvalidDescriptor(f"{fid.label}: match-mapping needs a non-empty list")
            for v in tv:
                self._check_fits(v)
            if len(set(tv)) != len(tv):
                raise InvalidDescriptor(f"{fid.label}: duplicate mapping entries")
        else:
            if isinstance(tv, tuple):
                raise InvalidDescriptor(f"{fid.label}: list target only valid for match-mapping")
            if tv is None and self.mo is not MO.IGNORE:
                raise InvalidDescriptor(f"{fid.label}: {self.mo.value} needs a target value")
            if tv is not None:
                self._check_fits(tv)

        if self.mo is MO.MSB:
            n = self.msb_length
            if n is None or not 0 < n <= self.field_length:
                raise InvalidDescriptor(f"{fid.label}: msb({n}) outside 1..{self.field_length}")
        elif self.msb_length is not None:
            raise InvalidDescriptor(f"{fid.label}: msb length given for {self.mo.value}")

    def _check_fits(self, v):
        if not isinstance(v, int) or v < 0 or v >> self.field_length:
            raise InvalidDescriptor(
                f"{self.field_id.label}: target {v!r} does not fit in {self.field_length} bits")

    def applies_to(self, direction):
        return self.direction is Direction.BI or self.direction is direction

    @property
    def residue_width(self):
        if self.cda is CDA.VALUE_SENT:
            return self.field_length
        if self.cda is CDA.LSB:
            return self.field_length - self.msb_length
        if self.cda is CDA.MAPPING_SENT:
            return mapping_index_width(len(self.target_value))
        return 0


@dataclass(frozen=True)
class Rule:
    rule_id: int
    entries: tuple
    rule_id_width: int = DEFAULT_RULE_ID_WIDTH

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.rule_id_width < 1:
            raise InvalidDescriptor("rule id width must be positive")
        if not 0 <= self.rule_id < 1 << self.rule_id_width:
            raise InvalidDescriptor(
                f"rule id {self.rule_id} does not fit in {self.rule_id_width} bits")
        for direction in (Direction.UP, Direction.DOWN):
            seen = {}
            for d in self.for_direction(direction):
                key = (d.field_id, d.field_position)
                if key in seen:
                    raise InvalidDescriptor(
                        f"rule {self.rule_id}: {d.field_id.label} pos {d.field_position} "
                        f"appears twice for direction {direction.value}")
                seen[key] = d
            missing = [f.label for f in HEADER_FIELDS if (f, 1) not in seen]
            if missing:
                raise InvalidDescriptor(
                    f"rule {self.rule_id}: direction {direction.value} does not cover "
                    + ", ".join(missing))

    def for_direction(self, direction):
        return [d for d in self.entries if d.applies_to(direction)]

    def residue_width(self, direction):
        return sum(d.residue_width for d in self.for_direction(direction))


@dataclass(frozen=True)
class Context:
    deveui: str
    rules: tuple
    rule_id_width: int = DEFAULT_RULE_ID_WIDTH

    def __post_init__(self):
        deveui = self.deveui.lower()
        if len(deveui) != 16 or any(c not in "0123456789abcdef" for c in deveui):
            raise InvalidDescriptor(f"DevEUI must be 16 hex digits, got {self.deveui!r}")
        object.__setattr__(self, "deveui", deveui)
        rules = tuple(sorted(self.rules, key=lambda r: r.rule_id))
        ids = [r.rule_id for r in rules]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise DuplicateRuleId(f"duplicate rule ids: {dupes}")
        for r in rules:
            if r.rule_id_width != self.rule_id_width:
                raise InvalidDescriptor(
                    f"rule {r.rule_id} width {r.rule_id_width} != context width {self.rule_id_width}")
        object.__setattr__(self, "rules", rules)

    def rule(self, rule_id):
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        return None
