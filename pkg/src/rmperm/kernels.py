"""Backend dispatch for the resampling hot kernels.

Two interchangeable implementations exist:

* ``numba`` -- explicit loops compiled with ``@njit`` (``_kernels_loops``),
* ``numpy`` -- batch-vectorized pure numpy (``_kernels_vec``).

Selection happens once at import time through the ``RMPERM_BACKEND``
environment variable: ``numba`` (require numba, fail if unavailable),
``numpy`` (force the fallback), or unset/empty (numba when importable,
numpy otherwise). Both backends implement identical signatures and agree
numerically to rounding; ``benchmarks/bench_backends.py`` times them
against each other.
"""

from __future__ import annotations

import os

_ENV_VAR = "RMPERM_BACKEND"
_VALID = ("", "numba", "numpy")


def _select_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested not in _VALID:
        raise ImportError(
            f"{_ENV_VAR} must be one of 'numba' or 'numpy' (or unset), got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _select_backend()

if BACKEND == "numba":
    from . import _kernels_loops as _impl
else:
    from . import _kernels_vec as _impl

mean_and_sigma = _impl.mean_and_sigma
wts_quadform = _impl.wts_quadform
ats_quantities = _impl.ats_quantities
wts_single = _impl.wts_single
ats_single = _impl.ats_single
batch_wts_values = _impl.batch_wts_values
batch_wts_gather = _impl.batch_wts_gather
batch_ats_values = _impl.batch_ats_values
batch_ats_gather = _impl.batch_ats_gather
batch_mean_sigma_gather = _impl.batch_mean_sigma_gather

__all__ = [
    "BACKEND",
    "ats_quantities",
    "ats_single",
    "batch_ats_gather",
    "batch_ats_values",
    "batch_mean_sigma_gather",
    "batch_wts_gather",
    "batch_wts_values",
    "mean_and_sigma",
    "wts_quadform",
    "wts_single",
]
