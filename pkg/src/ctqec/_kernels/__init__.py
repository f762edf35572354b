"""Weight-model kernels: compiled extension when available, else pure Python.

Set ``CTQEC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _weights_py as python_backend

compiled_backend = None
if not os.environ.get("CTQEC_PURE_PYTHON"):
    try:
        from . import _weights as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

CONSTANT = python_backend.CONSTANT
OPTIMAL = python_backend.OPTIMAL
APPROX = python_backend.APPROX
DEGENERATE = python_backend.DEGENERATE

weight_rhs = backend.weight_rhs
rk4_weights = backend.rk4_weights
discrete_weight_map = backend.discrete_weight_map
weight_update_into = backend.weight_update_into

__all__ = [
    "BACKEND", "CONSTANT", "OPTIMAL", "APPROX", "DEGENERATE",
    "weight_rhs", "rk4_weights", "discrete_weight_map", "weight_update_into",
    "python_backend", "compiled_backend",
]
