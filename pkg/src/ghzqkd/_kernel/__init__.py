"""Per-round quantum simulation kernel.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Set ``GHZQKD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _rounds_py as python_backend
from ._rounds_py import (  # noqa: F401  column layout
    B1, B2, B3, EVE_ANCILLA, EVE_B, EVE_INTERCEPT, EVE_NONE, EVE_O, LOST, N_OUT,
    N_UNIFORMS, NOISE, O1, O2, O3,
)

compiled_backend = None
if not os.environ.get("GHZQKD_PURE_PYTHON"):
    try:
        from . import _rounds as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

BACKEND = "compiled" if compiled_backend is not None else "python"
simulate_rounds = (compiled_backend or python_backend).simulate_rounds


def get_backend(name: str | None = None):
    """Return ``simulate_rounds`` for ``"compiled"``, ``"python"`` or the default."""
    if name in (None, "auto"):
        return simulate_rounds
    if name == "python":
        return python_backend.simulate_rounds
    if name == "compiled":
        if compiled_backend is None:
            raise RuntimeError("compiled kernel is not available; reinstall with Cython")
        return compiled_backend.simulate_rounds
    raise ValueError(f"unknown kernel backend {name!r}")
