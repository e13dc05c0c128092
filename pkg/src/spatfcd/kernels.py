"""Hot-kernel dispatch: compiled extension when built, numpy otherwise.

`BACKEND` names the active implementation ("compiled" or "python"); both
expose identical semantics and are cross-checked by the kernel parity tests.
Set SPATFCD_KERNELS=python to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SPATFCD_KERNELS") == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built; numpy fallback
        _impl = _kernels_py
        BACKEND = "python"


def _as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def map_to_cycle(t, cycle: float) -> np.ndarray:
    return _impl.map_to_cycle(_as_f64(t), float(cycle))


def ks_uniform(mapped, cycle: float) -> float:
    """KS sup-deviation vs the uniform distribution; sorts its input."""
    arr = np.sort(_as_f64(mapped))
    return float(_impl.ks_uniform(arr, float(cycle)))


def modal_dispersion(mapped, cycle: float) -> float:
    return float(_impl.modal_dispersion(_as_f64(mapped), float(cycle)))


def backends() -> dict[str, object]:
    """All importable kernel backends, for parity tests and benchmarks."""
    found: dict[str, object] = {"python": _kernels_py}
    try:
        from . import _kernels
        found["compiled"] = _kernels
    except ImportError:
        pass
    return found
