"""Process-wide knobs read from the environment."""
from __future__ import annotations

import os
from contextlib import contextmanager

from threadpoolctl import threadpool_limits

from .exceptions import ConfigurationError

THREADS_ENV = "WAVEGEN_THREADS"


def thread_count() -> int:
    """Worker threads allowed by ``WAVEGEN_THREADS`` (default 1).

    One thread is the reproducible mode: BLAS reductions then run in a
    fixed order and training is bitwise repeatable.
    """
    raw = os.environ.get(THREADS_ENV, "1").strip()
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {n}")
    return n


@contextmanager
def limited_threads(n: int | None = None):
    with threadpool_limits(limits=n or thread_count()):
        yield
