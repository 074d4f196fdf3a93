"""
Process pool execution for benchmark cells and sweep runs.

Worker counts are capped by available memory. Jobs lost when a worker
process dies (BrokenProcessPool) are rerun one at a time in the parent
process; any other exception propagates.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from concurrent.futures.process import BrokenProcessPool
from typing import Callable, Sequence, TypeVar

import psutil
from tqdm import tqdm

from gnn.checkpoint import Architecture
from graph.models import Graph

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MEMORY_HEADROOM = 0.8
# Live float arrays per (row x width) cell of a train-mode forward and backward
TAPE_FACTOR = 8


def estimate_job_bytes(graph: Graph, arch: Architecture, hidden_dim: int, heads: int = 1) -> int:
    """Rough peak memory of training or adapting one model on graph."""
    n = graph.n_nodes
    width = graph.feature_dim + hidden_dim + graph.n_classes
    floats = TAPE_FACTOR * n * width
    if arch is Architecture.GAT:
        edges = 2 * graph.n_edges + n
        floats += TAPE_FACTOR * heads * (edges * (hidden_dim + 2) + n * width)
    return int(8 * floats)


def memory_capped_workers(jobs: int, bytes_per_job: int, available: int | None = None) -> int:
    """
    Largest worker count <= jobs whose estimated footprint fits in memory.

    Args:
        jobs: Requested worker count.
        bytes_per_job: Estimated peak bytes of one job.
        available: Available bytes (default: psutil's current estimate).
    """
    if jobs <= 1 or bytes_per_job <= 0:
        return max(1, jobs)
    if available is None:
        available = psutil.virtual_memory().available
    fit = max(1, int(available * MEMORY_HEADROOM) // bytes_per_job)
    if fit < jobs:
        logger.warning(
            f"Capping workers at {fit} of {jobs}: ~{bytes_per_job / 2**20:.0f} MiB per job, "
            f"{available / 2**20:.0f} MiB available"
        )
    return min(jobs, fit)


def run_jobs(
    fn: Callable[[T], R],
    items: Sequence[T],
    jobs: int = 1,
    progress: bool = False,
    desc: str = "jobs"
) -> list[R]:
    """
    fn(item) for every item, with results in input order.

    With jobs > 1 the items run in a process pool; fn and the items must be
    picklable.
    """
    results: list = [None] * len(items)
    bar = tqdm(total=len(items), desc=desc, disable=not progress)

    if jobs <= 1 or len(items) <= 1:
        for i, item in enumerate(items):
            results[i] = fn(item)
            bar.update(1)
        bar.close()
        return results

    lost: list[int] = []
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        futures = {}
        for i, item in enumerate(items):
            try:
                futures[pool.submit(fn, item)] = i
            except BrokenProcessPool:
                lost.extend(range(i, len(items)))
                break
        for future in as_completed(futures):
            i = futures[future]
            try:
                results[i] = future.result()
            except BrokenProcessPool:
                lost.append(i)
                continue
            bar.update(1)

    if lost:
        logger.warning(f"{len(lost)} job(s) lost with a dead worker process; rerunning them serially")
        for i in sorted(lost):
            results[i] = fn(items[i])
            bar.update(1)
    bar.close()
    return results
