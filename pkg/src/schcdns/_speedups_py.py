"""Pure-Python bit codec and checksum kernels.

Used when the compiled ``_speedups`` extension is unavailable. Both versions
must produce identical results; ``tests/test_kernels.py`` checks them against
each other.
"""


def ones_complement_sum(data):
    """Fold *data* (big-endian 16-bit words, odd tail zero-padded) into a
    16-bit one's-complement sum. The result is not complemented."""
    if len(data) % 2:
        data = bytes(data) + b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def pack_fields(values, widths):
    """Concatenate ``values[i]`` as ``widths[i]``-bit MSB-first fields.

    Returns ``(data, nbits)`` where *data* is zero-padded to a byte boundary.
    """
    acc = 0
    nbits = 0
    for value, width in zip(values, widths):
        if value < 0 or value >> width:
            raise ValueError(f"value {value:#x} does not fit in {width} bits")
        acc = (acc << width) | value
        nbits += width
    pad = -nbits % 8
    return (acc << pad).to_bytes((nbits + pad) // 8, "big"), nbits


def unpack_fields(data, bit_offset, widths):
    """Read consecutive MSB-first fields of the given widths starting at
    *bit_offset*. Raises ``IndexError`` if *data* is too short."""
    need = bit_offset + sum(widths)
    if need > len(data) * 8:
        raise IndexError(f"need {need} bits, have {len(data) * 8}")
    acc = int.from_bytes(data, "big")
    pos = len(data) * 8 - bit_offset
    out = []
    for width in widths:
        pos -= width
        out.append((acc >> pos) & ((1 << width) - 1))
    return out
