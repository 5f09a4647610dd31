# python3

import os
import logging

from typing import (
    Any,
    Callable,
    List,
    Sequence,
)

import multiprocessing as mp

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


class ProcFunc:
    """
    Run a picklable top-level function over work items in spawned worker processes.

    Results come back in item order, never in completion order, so callers can
    assemble output by index.
    """

    def __init__(
        self,
        workers: int = 1,
        ctx: Any = None,
    ) -> None:
        if ctx is None:
            ctx = mp.get_context("spawn")
        self.ctx = ctx
        self.workers = max(1, int(workers))

    def orderedMap(
        self,
        f: Callable[[Any], Any],
        items: Sequence[Any],
    ) -> List[Any]:
        if self.workers == 1 or len(items) <= 1:
            return [f(item) for item in items]

        n = min(self.workers, len(items))
        msg = f"start {n} worker processes for {len(items)} work items"
        log.debug(msg)

        with self.ctx.Pool(processes=n) as pool:
            # Pool.map keeps the input order
            return list(pool.map(f, items, chunksize=1))
