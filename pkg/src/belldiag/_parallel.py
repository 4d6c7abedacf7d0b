from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """Worker cap from ``BELLDIAG_THREADS``; results never depend on it."""
    try:
        return max(1, int(os.environ.get("BELLDIAG_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map; uses threads when ``BELLDIAG_THREADS`` > 1."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
