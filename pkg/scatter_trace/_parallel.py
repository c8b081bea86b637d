import os
import logging
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_VARIABLE = 'SCATTER_TRACE_THREADS'

def worker_count():
    raw = os.environ.get(THREADS_VARIABLE)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f'{THREADS_VARIABLE} must be a positive integer; received {raw!r}.')
    if count < 1:
        raise ConfigError(f'{THREADS_VARIABLE} must be a positive integer; received {raw!r}.')
    return count

def thread_map(func, iterable):
    """Ordered map over ``iterable``; results come back in input order.

    numpy and scipy release the GIL in their compiled kernels, which is where
    the per-item work of every caller is spent.
    """
    items = list(iterable)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    logger.debug('Mapping %s over %d items with %d threads', getattr(func, '__name__', func),
                 len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
