import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Generic, TypeVar

T = TypeVar("T")
U = TypeVar("U")


@dataclass
class RunPoolConfig:
    """Configuration for running independent experiments concurrently."""

    max_workers: int = 4  # Number of concurrent threads
    timeout: float | None = None  # Timeout per run in seconds


@dataclass
class RunPoolResult(Generic[T]):
    """Outcome of a pool of runs. ``results[i]`` belongs to ``items[i]`` (None if it failed)."""

    results: list[T | None]
    failed_indices: list[int]
    errors: list[Exception]
    total_time: float
    successful_count: int
    failed_count: int


class RunPool:
    """
    Runs independent experiments (seeds, ablation variants) on a thread pool.

    Every run must own its random streams and parameters; results are collected in
    submission order so the outcome does not depend on the worker count.
    """

    def __init__(self, config: RunPoolConfig, logger: logging.Logger):
        self.config = config
        self.logger = logger

    def process(
        self, items: list[T], run_func: Callable[[T], U], item_name: str = "runs"
    ) -> RunPoolResult[U]:
        start_time = time.time()
        self.logger.info(
            f"Starting {len(items)} {item_name} with max_workers={self.config.max_workers}"
        )

        results: list[U | None] = [None] * len(items)
        failures: list[tuple[int, Exception]] = []
        completed_count = 0

        with ThreadPoolExecutor(max_workers=self.config.max_workers) as executor:
            future_to_index = {executor.submit(run_func, item): idx for idx, item in enumerate(items)}

            for future in as_completed(future_to_index):
                idx = future_to_index[future]
                try:
                    results[idx] = future.result(timeout=self.config.timeout)
                except Exception as e:
                    self.logger.error(f"Run {idx + 1}/{len(items)} failed: {e}")
                    failures.append((idx, e))
                completed_count += 1
                if completed_count % max(1, len(items) // 10) == 0:  # Log progress every 10%
                    progress_pct = (completed_count * 100) // len(items)
                    self.logger.info(
                        f"Progress: {completed_count}/{len(items)} {item_name} completed ({progress_pct}%)"
                    )

        total_time = time.time() - start_time
        failures.sort(key=lambda pair: pair[0])
        failed_indices = [idx for idx, _ in failures]
        errors = [e for _, e in failures]
        self.logger.info(
            f"{item_name} finished in {total_time:.2f}s: "
            f"{len(items) - len(failed_indices)} successful, {len(failed_indices)} failed"
        )
        return RunPoolResult(
            results=results,
            failed_indices=failed_indices,
            errors=errors,
            total_time=total_time,
            successful_count=len(items) - len(failed_indices),
            failed_count=len(failed_indices),
        )
