"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
pure numpy implementation is used. COOPSURFACE_BACKEND=pure|compiled forces
the choice (forcing "compiled" raises if the extension is missing, rather
than silently degrading).
"""

import importlib
import os

from . import pure

_requested = os.environ.get("COOPSURFACE_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "pure", "compiled", ""):
    raise ImportError(f"unknown COOPSURFACE_BACKEND value: {_requested!r}")

_core = None
if _requested in ("auto", "compiled", ""):
    try:
        _core = importlib.import_module("._core", __name__)
    except ImportError:
        if _requested == "compiled":
            raise

if _core is not None:
    BACKEND = "compiled"
    _impl = _core
else:
    BACKEND = "pure"
    _impl = pure

damped_coupling_sum = _impl.damped_coupling_sum
assemble_coupling = _impl.assemble_coupling
pair_xx_coupling = _impl.pair_xx_coupling
scattered_sum = _impl.scattered_sum
momentum_expectation = _impl.momentum_expectation

__all__ = [
    "BACKEND",
    "damped_coupling_sum",
    "assemble_coupling",
    "pair_xx_coupling",
    "scattered_sum",
    "momentum_expectation",
    "pure",
]
