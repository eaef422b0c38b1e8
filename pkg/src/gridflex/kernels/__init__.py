"""Minute-scan kernels with a compiled core and a pure-numpy fallback.

The compiled extension (`gridflex.kernels._core`, built from Cython) is used
when importable; otherwise the numpy implementation takes over. Set
``GRIDFLEX_PURE_KERNELS=1`` to force the fallback. Both backends return
identical results: kernels only search indices, they never do float
arithmetic whose rounding could differ.
"""

import os

from . import pure as _pure

if os.environ.get("GRIDFLEX_PURE_KERNELS") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND
overload_runs = _impl.overload_runs
latest_free_run = _impl.latest_free_run
free_minutes_desc = _impl.free_minutes_desc

__all__ = ["BACKEND", "overload_runs", "latest_free_run", "free_minutes_desc"]
