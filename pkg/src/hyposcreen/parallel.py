"""Deterministic bounded worker pool.

Work items must be pure functions of their arguments; results are gathered in
input order, so output is byte-identical whether the pool runs one worker or
several.  The pool width is bounded by the ``HYPOSCREEN_THREADS`` environment
variable (default 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "HYPOSCREEN_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_VAR, "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def parallel_map(fn, items):
    """Map ``fn`` over ``items``, preserving input order in the result list."""
    items = list(items)
    n_workers = min(worker_count(), max(1, len(items)))
    if n_workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))
