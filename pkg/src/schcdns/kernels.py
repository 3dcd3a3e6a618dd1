"""Select the compiled kernels when built, else the pure-Python ones.

Set ``SCHCDNS_PURE=1`` to force the fallback (used by the benchmark and the
equivalence tests).
"""

import os

from . import _speedups_py as pure

compiled = None
if os.environ.get("SCHCDNS_PURE") != "1":
    try:
        from . import _speedups as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else pure

IMPLEMENTATION = "compiled" if compiled is not None else "pure"

ones_complement_sum = _impl.ones_complement_sum
pack_fields = _impl.pack_fields
unpack_fields = _impl.unpack_fields
