"""Random rule/header generators shared by the property and acceptance tests."""

import random

from schcdns.schc import (
    CDA,
    COMPUTABLE,
    HEADER_FIELDS,
    MO,
    Direction,
    FieldDescriptor,
    HeaderFields,
    Rule,
)

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"

# 48-byte header + b"hello", built independently with struct (see test_packet)
HAND_DATAGRAM = bytes.fromhex(
    "60000000000d114020010db800000000000000000000000120010db80000000100000000000000022210"
    "2210000d1c6c68656c6c6f"
)
HAND_CHECKSUM = 0x1C6C


def _random_descriptor(rng, fid, direction):
    w = fid.width
    choices = ["equal", "ignore", "msb", "mapping"]
    if fid in COMPUTABLE:
        choices.append("compute")
    kind = rng.choice(choices)
    if kind == "equal":
        return FieldDescriptor(fid, w, 1, direction, rng.getrandbits(w), MO.EQUAL, CDA.NOT_SENT)
    if kind == "ignore":
        tv = rng.getrandbits(w) if rng.random() < 0.3 else None
        return FieldDescriptor(fid, w, 1, direction, tv, MO.IGNORE, CDA.VALUE_SENT)
    if kind == "msb":
        return FieldDescriptor(fid, w, 1, direction, rng.getrandbits(w), MO.MSB, CDA.LSB,
                               msb_length=rng.randint(1, w))
    if kind == "mapping":
        k = rng.randint(1, min(6, 1 << w))
        values = set()
        while len(values) < k:
            values.add(rng.getrandbits(w))
        return FieldDescriptor(fid, w, 1, direction, tuple(values), MO.MATCH_MAPPING,
                               CDA.MAPPING_SENT)
    return FieldDescriptor(fid, w, 1, direction, None, MO.IGNORE, CDA.COMPUTE)


def random_rule(rng, rule_id=None, width=8):
    entries = []
    for fid in HEADER_FIELDS:
        if rng.random() < 0.2:
            entries.append(_random_descriptor(rng, fid, Direction.UP))
            entries.append(_random_descriptor(rng, fid, Direction.DOWN))
        else:
            entries.append(_random_descriptor(rng, fid, Direction.BI))
    if rule_id is None:
        rule_id = rng.randrange(1 << width)
    return Rule(rule_id, tuple(entries), width)


def matching_value(rng, d):
    w = d.field_length
    if d.mo is MO.EQUAL:
        return d.target_value
    if d.mo is MO.MSB:
        low = w - d.msb_length
        return (d.target_value >> low << low) | rng.getrandbits(low) if low else d.target_value
    if d.mo is MO.MATCH_MAPPING:
        return rng.choice(d.target_value)
    return rng.getrandbits(w)


def matching_header(rng, rule, direction=Direction.UP, max_payload=200):
    values = {}
    for d in rule.for_direction(direction):
        values[d.field_id] = matching_value(rng, d)
    payload = rng.randbytes(rng.randint(0, max_payload))
    return HeaderFields(values, payload)


def random_triple(rng, direction=Direction.UP):
    rule = random_rule(rng)
    return rule, matching_header(rng, rule, direction), direction


def seeded(seed):
    return random.Random(seed)
