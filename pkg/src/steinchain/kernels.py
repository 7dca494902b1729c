"""Kernel backend selection.

The compiled core (``steinchain._core``) is used when it imports; otherwise
the pure-Python implementations in ``steinchain._fallback`` are used.  Set
``STEINCHAIN_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
if not os.environ.get("STEINCHAIN_PURE_PYTHON"):
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

closed_form_table = _impl.closed_form_table
gth_hitting_table = _impl.gth_hitting_table
deviation_scan = _impl.deviation_scan
simulate_hitting = _impl.simulate_hitting

__all__ = [
    "BACKEND",
    "closed_form_table",
    "gth_hitting_table",
    "deviation_scan",
    "simulate_hitting",
]
