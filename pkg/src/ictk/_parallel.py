import os
from concurrent.futures import ThreadPoolExecutor


def n_threads() -> int:
    """Worker cap from ``ICTK_THREADS`` (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get("ICTK_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map; results do not depend on the worker count."""
    items = list(items)
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
