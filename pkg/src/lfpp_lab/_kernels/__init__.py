"""Kernel selection: compiled extension if available, pure Python otherwise.

Set LFPP_LAB_PURE=1 to force the fallback (used by the benchmark and by
tests that pin the two implementations against each other).
"""
from __future__ import annotations

import os
import warnings

if os.environ.get("LFPP_LAB_PURE") == "1":
    from . import pure as backend
else:
    try:
        from . import _gridpath as backend  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        from . import pure as backend

        warnings.warn(
            "lfpp_lab compiled kernel unavailable; using the pure-Python "
            "fallback (large campaigns will be slow). Build with "
            "`pip install -e . --no-build-isolation`.",
            RuntimeWarning,
            stacklevel=2,
        )

dijkstra = backend.dijkstra
IMPL = backend.IMPL


def load_pure():
    """Explicit handle on the fallback, for cross-implementation tests."""
    from . import pure

    return pure
