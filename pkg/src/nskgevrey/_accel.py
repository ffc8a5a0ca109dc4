"""Numba switch.

Set ``NSKGEVREY_NUMBA=0`` in the environment to force the pure-numpy kernels.
``NSKGEVREY_THREADS`` caps the worker threads used by numba and scipy.fft.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

HAVE_NUMBA = numba is not None
ENABLED = HAVE_NUMBA and os.environ.get("NSKGEVREY_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def thread_count():
    raw = os.environ.get("NSKGEVREY_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"NSKGEVREY_THREADS must be >= 1, got {raw!r}")
    return n


def njit(fn):
    """Compile ``fn`` with numba when available; return it untouched otherwise.

    Compilation happens regardless of ``ENABLED`` so the benchmark can time both
    paths; dispatch between them is done by the callers in ``kernels``.
    """
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, fastmath=False)(fn)


if HAVE_NUMBA and "NSKGEVREY_THREADS" in os.environ:
    numba.set_num_threads(min(thread_count(), numba.config.NUMBA_NUM_THREADS))
