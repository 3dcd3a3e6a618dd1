# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled bit codec and checksum kernels (see _speedups_py for reference)."""

from libc.stdint cimport uint64_t, uint32_t


def ones_complement_sum(const unsigned char[:] data):
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t total = 0
    for i in range(0, n - 1, 2):
        total += (<uint64_t>data[i] << 8) | data[i + 1]
    if n % 2:
        total += <uint64_t>data[n - 1] << 8
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def pack_fields(values, widths):
    cdef Py_ssize_t count = len(widths)
    cdef Py_ssize_t nbits = 0
    cdef Py_ssize_t k, pos
    cdef int w, take, room
    cdef uint64_t v
    for k in range(count):
        w = widths[k]
        if w < 0 or w > 64:
            raise ValueError(f"field width {w} outside 0..64")
        nbits += w
    cdef bytearray out = bytearray((nbits + 7) // 8)
    cdef unsigned char[:] buf = out
    pos = 0
    for k in range(count):
        w = widths[k]
        pyv = values[k]
        if pyv < 0 or (w < 64 and pyv >> w) or (w == 64 and pyv >> 64):
            raise ValueError(f"value {pyv:#x} does not fit in {w} bits")
        v = pyv
        while w > 0:
            room = 8 - (pos & 7)
            take = room if room < w else w
            buf[pos >> 3] |= <unsigned char>(((v >> (w - take)) & ((1 << take) - 1)) << (room - take))
            pos += take
            w -= take
    return bytes(out), nbits


def unpack_fields(const unsigned char[:] data, Py_ssize_t bit_offset, widths):
    cdef Py_ssize_t total = bit_offset
    cdef Py_ssize_t k, pos
    cdef int w, take, room
    cdef uint64_t v
    for k in range(len(widths)):
        w = widths[k]
        if w < 0 or w > 64:
            raise ValueError(f"field width {w} outside 0..64")
        total += w
    if total > data.shape[0] * 8:
        raise IndexError(f"need {total} bits, have {data.shape[0] * 8}")
    out = []
    pos = bit_offset
    for k in range(len(widths)):
        w = widths[k]
        v = 0
        while w > 0:
            room = 8 - (pos & 7)
            take = room if room < w else w
            v = (v << take) | ((data[pos >> 3] >> (room - take)) & ((1 << take) - 1))
            pos += take
            w -= take
        out.append(v)
    return out
