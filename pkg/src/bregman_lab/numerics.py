"""Numeric and determinism helpers shared across modules.

Summation that feeds algebraic identity checks goes through ``math.fsum``
(exactly rounded), so identities hold to near machine precision independently
of how many terms are averaged.  Randomness is always derived from explicit
seeds, and the optional thread pool maps work by index so results do not
depend on the worker count.
"""

import logging
import math
import os
import threading
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "BREGMAN_LAB_THREADS"

logger = logging.getLogger("bregman_lab")


class WarningCounters:
    """Thread-safe counters for non-fatal numeric events.

    Every increment emits a structured log line, so silent corrections are
    impossible; reports embed the final tallies.
    """

    NAMES = ("drift_reprojections", "not_found_in_box", "no_convergence")

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {name: 0 for name in self.NAMES}

    def increment(self, name: str, message: str) -> None:
        with self._lock:
            self._counts[name] += 1
            count = self._counts[name]
        logger.warning("%s (#%d): %s", name, count, message)

    def as_dict(self) -> dict:
        with self._lock:
            return dict(self._counts)


def fsum_dot(a, b):
    """Exactly rounded inner product of two arrays of equal shape."""
    prod = np.asarray(a, dtype=float) * np.asarray(b, dtype=float)
    return math.fsum(prod.ravel().tolist())


def fsum_array(values):
    """Exactly rounded sum of a 1-d array or iterable of floats."""
    arr = np.asarray(values, dtype=float)
    return math.fsum(arr.ravel().tolist())


def column_fsums(arr):
    """Exactly rounded per-column sums of a 2-d array."""
    arr = np.asarray(arr, dtype=float)
    return np.array([math.fsum(arr[:, j].tolist()) for j in range(arr.shape[1])])


def thread_count():
    """Worker cap taken from the BREGMAN_LAB_THREADS environment variable."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def indexed_map(fn, count):
    """Evaluate fn(0..count-1), possibly on a thread pool, results in index order.

    Each call must be pure given its index; the returned list is identical for
    any worker count, so downstream reductions are reproducible bit for bit.
    """
    workers = thread_count()
    if workers == 1 or count < 2:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def spawn_rngs(seed, count):
    """Independent per-index generators derived deterministically from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.default_rng(c) for c in children]


def derive_rng(seed, label):
    """Generator for a named sub-purpose, stable across runs and platforms."""
    tag = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag)]))


def derive_seed(seed, label):
    """Integer sub-seed for a named purpose, suitable for forwarding."""
    tag = zlib.crc32(label.encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), int(tag)]).generate_state(1)[0])
