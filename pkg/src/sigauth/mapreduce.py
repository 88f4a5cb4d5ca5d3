"""In-process partitioned map-reduce for covariance accumulation.

The executor evaluates independent mappers (concurrently when asked) and then
reduces their outputs in ascending partition-index order on the caller's
thread.  The fixed reduce order makes runs bit-stable: floating-point
summation order never depends on mapper completion order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyPartitionError,
    InsufficientSamplesError,
    MapReduceError,
    SplitTooFineError,
)


@dataclass(frozen=True, eq=False)
class PartialStats:
    """Mergeable first/second-moment accumulator: n, sum(x), sum(x x^T)."""

    n: int
    sum: np.ndarray        # (D,)
    sum_outer: np.ndarray  # (D, D)

    @property
    def dim(self) -> int:
        return self.sum.shape[0]

    @staticmethod
    def identity(dim: int) -> "PartialStats":
        return PartialStats(0, np.zeros(dim), np.zeros((dim, dim)))


@dataclass(frozen=True, eq=False)
class Partition:
    index: int
    rows: np.ndarray  # (m, D)


def _as_rows(matrix) -> np.ndarray:
    # Accept FeatureMatrix or plain 2-D arrays.
    rows = getattr(matrix, "values", matrix)
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D row matrix")
    return rows


def round_robin_indices(n: int, parts: int) -> list[np.ndarray]:
    """Split row indices 0..n-1 into ``parts`` round-robin groups."""
    return [np.arange(p, n, parts) for p in range(parts)]


def partition_rows(matrix, workers: int) -> list[Partition]:
    """Assign rows round-robin to ``workers`` nonempty partitions."""
    rows = _as_rows(matrix)
    n = rows.shape[0]
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    if n < 1:
        raise ValueError("cannot partition an empty matrix")
    if workers > n:
        raise SplitTooFineError(
            "cannot split %d rows across %d partitions" % (n, workers)
        )
    return [
        Partition(index=p, rows=rows[idx])
        for p, idx in enumerate(round_robin_indices(n, workers))
    ]


def covariance_mapper(partition: Partition) -> PartialStats:
    """Accumulate count, sum and outer-product sum over one partition."""
    rows = partition.rows
    if rows.shape[0] == 0:
        raise EmptyPartitionError("partition %d is empty" % partition.index)
    outer = rows.T @ rows
    outer = (outer + outer.T) / 2.0  # keep the accumulator exactly symmetric
    return PartialStats(n=rows.shape[0], sum=rows.sum(axis=0), sum_outer=outer)


def covariance_reducer(a: PartialStats, b: PartialStats) -> PartialStats:
    """Merge two accumulators componentwise (commutative monoid, identity n=0)."""
    if a.dim != b.dim:
        raise DimensionMismatchError(
            "cannot reduce stats of dim %d with dim %d" % (a.dim, b.dim)
        )
    return PartialStats(n=a.n + b.n, sum=a.sum + b.sum, sum_outer=a.sum_outer + b.sum_outer)


def run_mapreduce(partitions, mapper, reducer, identity, max_workers: int | None = None):
    """Map every partition (possibly concurrently), then reduce in index order.

    The result is independent of mapper completion order; errors propagate
    tagged with the lowest failing partition index.
    """
    partitions = sorted(partitions, key=lambda p: p.index)
    if not partitions:
        raise ValueError("need at least one partition")

    if max_workers is None:
        max_workers = len(partitions)

    outputs: list = [None] * len(partitions)
    failures: dict[int, Exception] = {}
    if max_workers <= 1 or len(partitions) == 1:
        for slot, part in enumerate(partitions):
            try:
                outputs[slot] = mapper(part)
            except Exception as exc:  # noqa: BLE001 - tagged and re-raised below
                failures[part.index] = exc
                break
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {
                slot: pool.submit(mapper, part) for slot, part in enumerate(partitions)
            }
            for slot, fut in futures.items():
                try:
                    outputs[slot] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures[partitions[slot].index] = exc

    if failures:
        index = min(failures)
        raise MapReduceError(
            "mapper failed on partition %d: %s" % (index, failures[index]),
            partition_index=index,
        ) from failures[index]

    result = identity
    for slot, out in enumerate(outputs):
        try:
            result = reducer(result, out)
        except Exception as exc:  # noqa: BLE001
            index = partitions[slot].index
            raise MapReduceError(
                "reducer failed merging partition %d: %s" % (index, exc),
                partition_index=index,
            ) from exc
    return result


def finalize_covariance(stats: PartialStats) -> np.ndarray:
    """Turn an accumulator into the sample covariance (n-1 denominator)."""
    if stats.n < 2:
        raise InsufficientSamplesError(
            "covariance needs at least 2 rows, got %d" % stats.n
        )
    mu = stats.sum / stats.n
    cov = (stats.sum_outer - stats.n * np.outer(mu, mu)) / (stats.n - 1)
    return (cov + cov.T) / 2.0


def covariance_stats(matrix, workers: int = 1) -> PartialStats:
    """Partition, map and reduce a feature matrix into one PartialStats."""
    parts = partition_rows(matrix, workers)
    dim = parts[0].rows.shape[1]
    return run_mapreduce(
        parts,
        covariance_mapper,
        covariance_reducer,
        PartialStats.identity(dim),
        max_workers=workers,
    )
