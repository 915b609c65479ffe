"""Select the compiled RK4 kernel when available, else the numpy fallback.

Set ``TRAPDYN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _rk4_py

python_rk4 = _rk4_py.rk4_integrate

try:
    if os.environ.get("TRAPDYN_PURE_PYTHON"):
        raise ImportError("pure-Python kernel requested")
    from ._rk4 import rk4_integrate as compiled_rk4
except ImportError:
    compiled_rk4 = None

rk4_integrate = compiled_rk4 if compiled_rk4 is not None else python_rk4
BACKEND = "cython" if compiled_rk4 is not None else "python"


def triplet_weights(sys):
    """Triplet arrays for the kernels, with off-diagonal weights doubled."""
    idx = sys.q_index
    qi, qj, qk = idx[:, 0].copy(), idx[:, 1].copy(), idx[:, 2].copy()
    qw = sys.q_value * (1.0 + (qj != qk))
    return qi, qj, qk, qw
