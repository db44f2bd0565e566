"""Backend selection for the numerical kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``QFE_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the NumPy fallback is used.
"""

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("QFE_PURE_PYTHON", "0") in ("", "0"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_active = BACKENDS[BACKEND]
likelihood_surface = _active.likelihood_surface
delta2_batch = _active.delta2_batch


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend '{name}' unavailable; have {sorted(BACKENDS)}") from None
