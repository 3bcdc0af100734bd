"""Hot-loop kernels with a numba path and a pure-numpy path.

The active backend is picked once from ``IDLEGRAD_NO_NUMBA`` (see
:mod:`idlegrad._accel`). Both implementations stay importable as
``kernels.numpy_impl`` and ``kernels.numba_impl`` so tests and the benchmark
can compare them directly.
"""
from .. import _accel
from . import _numpy as numpy_impl

if _accel.HAVE_NUMBA:
    from . import _numba as numba_impl
else:  # pragma: no cover
    numba_impl = None

_impl = numba_impl if _accel.USE_NUMBA else numpy_impl

softplus = _impl.softplus
sigmoid = _impl.sigmoid
logistic_gradients = _impl.logistic_gradients
logistic_local_values = _impl.logistic_local_values
logistic_cross_values = _impl.logistic_cross_values
project_rows = _impl.project_rows
consensus_step = _impl.consensus_step

BACKEND = _accel.backend_name()
