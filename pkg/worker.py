"""
Ordered worker pool for embarrassingly parallel lab workloads.

Path chunks, ball evaluations, chaos-level evolves and sweep children are all
submitted as ordered task lists. Results always come back in submission order,
so every reduction downstream sees the same sequence whatever the worker count.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from logging_config import get_logger
from settings import get_settings

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """
    Map a top-level function over tasks, in-process or across processes.

    With one worker nothing is forked; the pool simply loops. The function
    must be importable at module level so it can be pickled.
    """

    def __init__(self, workers: Optional[int] = None) -> None:
        """
        Initialize the pool.

        Args:
            workers: Number of worker processes. Defaults to MORREYLAB_WORKERS.
        """
        self.workers = max(1, workers if workers is not None else get_settings().workers)

    def map_ordered(self, fn: Callable[[T], R], tasks: Sequence[T]) -> List[R]:
        """Apply fn to every task and return results in task order."""
        if not tasks:
            return []
        if self.workers <= 1 or len(tasks) == 1:
            return [fn(task) for task in tasks]

        started = time.perf_counter()
        with ProcessPoolExecutor(max_workers=min(self.workers, len(tasks))) as executor:
            results = list(executor.map(fn, tasks))
        logger.debug(
            "Pool map finished",
            extra={
                "tasks": len(tasks),
                "workers": self.workers,
                "elapsed_s": round(time.perf_counter() - started, 3),
            },
        )
        return results

    def __repr__(self) -> str:
        return f"WorkerPool(workers={self.workers})"


@dataclass
class JobOutcome:
    """Outcome of one isolated job (a sweep child, typically)."""

    job_id: str
    success: bool
    value: Any = None
    error: Optional[str] = None
    error_code: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "job_id": self.job_id,
            "success": self.success,
            "error": self.error,
            "error_code": self.error_code,
        }


def run_job(job_id: str, fn: Callable[[], Any]) -> JobOutcome:
    """
    Run one job, converting failures into a recorded outcome.

    Data and precondition errors are expected failures; anything else is
    logged with a traceback. Neither stops the caller's loop.
    """
    try:
        return JobOutcome(job_id=job_id, success=True, value=fn())
    except (ValueError, TypeError, KeyError) as exc:
        logger.error("Data error in job %s: %s", job_id, exc)
        return JobOutcome(
            job_id=job_id,
            success=False,
            error=f"{type(exc).__name__}: {exc}",
            error_code="data_error",
        )
    except ArithmeticError as exc:
        logger.error("Numerical error in job %s: %s", job_id, exc)
        return JobOutcome(
            job_id=job_id,
            success=False,
            error=f"{type(exc).__name__}: {exc}",
            error_code="numerical_error",
        )
    except Exception as exc:  # noqa: BLE001
        logger.exception("Unexpected error in job %s: %s", job_id, exc)
        return JobOutcome(
            job_id=job_id,
            success=False,
            error=f"{type(exc).__name__}: {exc}",
            error_code="unexpected_error",
        )
