"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Also times whole compress/decompress round trips through whichever kernel
``schcdns.kernels`` selected at import.
"""

import argparse
import random
import timeit

from schcdns import _speedups_py as pure
from schcdns import kernels
from schcdns.schc import Direction, compress, decompress
from schcdns.sim import device_datagram, device_rule

try:
    from schcdns import _speedups as compiled
except ImportError:
    compiled = None


def workloads(rng):
    datagram = rng.randbytes(1280)
    widths = [4, 8, 20, 16, 8, 8, 64, 64, 64, 64, 16, 16, 16, 16]
    values = [rng.getrandbits(w) for w in widths]
    packed, _ = pure.pack_fields(values, widths)
    return {
        "ones_complement_sum(1280 B)": lambda m: m.ones_complement_sum(datagram),
        "pack_fields(14 header fields)": lambda m: m.pack_fields(values, widths),
        "unpack_fields(14 header fields)": lambda m: m.unpack_fields(packed, 0, widths),
    }


def best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()

    rng = random.Random(0)
    print(f"selected implementation: {kernels.IMPLEMENTATION}")
    print(f"{'kernel':34} {'pure us':>10} {'compiled us':>12} {'speedup':>8}")
    for name, call in workloads(rng).items():
        t_pure = best(lambda: call(pure), args.number, args.repeat)
        if compiled is None:
            print(f"{name:34} {t_pure:10.2f} {'n/a':>12} {'':>8}")
            continue
        assert call(pure) == call(compiled), name
        t_comp = best(lambda: call(compiled), args.number, args.repeat)
        print(f"{name:34} {t_pure:10.2f} {t_comp:12.2f} {t_pure / t_comp:7.1f}x")

    rule = device_rule()
    h = device_datagram(rng.randbytes(40))
    t_rt = best(lambda: decompress(rule, compress(rule, h, Direction.UP), Direction.UP),
                args.number // 4, args.repeat)
    print(f"compress+decompress round trip: {t_rt:.1f} us ({kernels.IMPLEMENTATION} kernels)")


if __name__ == "__main__":
    main()
