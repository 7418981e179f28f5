import logging
import queue
import threading
from typing import Callable, Dict, List, Sequence, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

J = TypeVar("J")
R = TypeVar("R")


def run_jobs(
    jobs: Sequence[J],
    work: Callable[[J], R],
    worker_threads: int = 1,
    desc: str = "",
    progress: bool = False,
) -> List[R]:
    """Run ``work`` over ``jobs`` on a worker pool and return results in job order.

    Workers pull ``(index, job)`` pairs from a shared queue; results are keyed by
    index and merged in order so the output never depends on thread timing. The
    first failing job (lowest index) re-raises on the calling thread.
    """
    bar = tqdm(total=len(jobs), desc=desc, disable=not progress, leave=False)
    if worker_threads <= 1 or len(jobs) <= 1:
        results = []
        for job in jobs:
            results.append(work(job))
            bar.update(1)
        bar.close()
        return results

    job_queue: "queue.Queue" = queue.Queue()
    for index, job in enumerate(jobs):
        job_queue.put((index, job))
    results: Dict[int, R] = {}
    errors: Dict[int, BaseException] = {}
    lock = threading.Lock()

    def _worker():
        while True:
            try:
                index, job = job_queue.get_nowait()
            except queue.Empty:
                return
            try:
                result = work(job)
                with lock:
                    results[index] = result
                    bar.update(1)
            except Exception as e:
                logger.debug("job %d failed: %s", index, e)
                with lock:
                    errors[index] = e
            finally:
                job_queue.task_done()

    workers = [threading.Thread(target=_worker, daemon=True) for _ in range(min(worker_threads, len(jobs)))]
    for worker in workers:
        worker.start()
    for worker in workers:
        worker.join()
    bar.close()

    if errors:
        raise errors[min(errors)]
    return [results[i] for i in range(len(jobs))]
