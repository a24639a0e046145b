"""Hot inner-loop kernels: plant integration, FL law, covariance update and
the small Lyapunov solve.

The compiled Cython extension is used when it imports; otherwise, or when the
environment variable ``DEEPOBIKE_PURE_PYTHON`` is set to ``1``, the pure
Python implementation is selected. ``BACKEND`` names the active one.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("DEEPOBIKE_PURE_PYTHON", "0") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

bicycle_rhs = _impl.bicycle_rhs
bicycle_rk4 = _impl.bicycle_rk4
fl_input = _impl.fl_input
cov_rank_one = _impl.cov_rank_one
dlyap_small = _impl.dlyap_small
SING_MARGIN = python.SING_MARGIN

__all__ = ["BACKEND", "bicycle_rhs", "bicycle_rk4", "fl_input", "cov_rank_one", "dlyap_small",
           "compiled", "python", "SING_MARGIN"]
