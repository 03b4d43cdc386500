import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "BSTRAIGHT_THREADS"


def worker_count(workers=None) -> int:
    if workers is None:
        workers = os.environ.get(ENV_THREADS, "1")
    try:
        return max(1, int(workers))
    except ValueError:
        return 1


def parallel_map(fn, items, workers=None) -> list:
    """Ordered map; output order never depends on the worker count."""
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
