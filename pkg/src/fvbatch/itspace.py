"""Cartesian-product iteration spaces and loop execution strategies.

An IndexSpace is the cross product of half-open integer ranges.  Kernels
traverse one either sequentially (in declared order) or with an unordered
parallel strategy that may split the space across worker threads; bodies
must then be race-free across distinct tuples.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Sequence

from .errors import ContractViolationError, EmptyReductionError

WORKER_ENV_VAR = "FVBATCH_WORKERS"


class StrategyKind(Enum):
    SEQUENTIAL = "seq"
    PARALLEL_UNORDERED = "par"


@dataclass(frozen=True)
class ExecutionStrategy:
    """How a loop over an index space is driven.

    SEQUENTIAL visits tuples in the declared order.  PARALLEL_UNORDERED may
    visit them in any order, concurrently, each exactly once.
    """

    kind: StrategyKind
    worker_hint: int | None = None

    @property
    def label(self) -> str:
        return self.kind.value

    def workers(self) -> int:
        if self.worker_hint is not None:
            return max(1, self.worker_hint)
        env = os.environ.get(WORKER_ENV_VAR)
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1


SEQUENTIAL = ExecutionStrategy(StrategyKind.SEQUENTIAL)
PARALLEL = ExecutionStrategy(StrategyKind.PARALLEL_UNORDERED)


def strategy_from_label(label: str, worker_hint: int | None = None) -> ExecutionStrategy:
    for kind in StrategyKind:
        if kind.value == label:
            return ExecutionStrategy(kind, worker_hint)
    raise ContractViolationError(f"unknown strategy label {label!r}")


@dataclass(frozen=True)
class IndexSpace:
    """Cross product of half-open ranges [lo, hi).

    `order` is a permutation of range positions from fastest-varying to
    slowest; it permutes the visit sequence, never the visited set.  The
    default order makes the first range the fastest (x-fastest).
    """

    ranges: tuple[tuple[int, int], ...]
    order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.ranges))):
            raise ContractViolationError(
                f"order {self.order} is not a permutation of the {len(self.ranges)} ranges"
            )

    @property
    def cardinality(self) -> int:
        return math.prod(hi - lo for lo, hi in self.ranges)

    def extents(self) -> tuple[int, ...]:
        return tuple(hi - lo for lo, hi in self.ranges)

    def tuple_at(self, linear: int) -> tuple[int, ...]:
        """Unrank: the tuple visited at position `linear` of the enumeration."""
        if not 0 <= linear < self.cardinality:
            raise ContractViolationError(f"linear index {linear} outside [0, {self.cardinality})")
        out = [0] * len(self.ranges)
        for pos in self.order:
            lo, hi = self.ranges[pos]
            linear, digit = divmod(linear, hi - lo)
            out[pos] = lo + digit
        return tuple(out)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        n = self.cardinality
        for linear in range(n):
            yield self.tuple_at(linear)

    def reordered(self, order: Sequence[int]) -> "IndexSpace":
        return IndexSpace(self.ranges, tuple(order))


def cartesian(ranges: Sequence[tuple[int, int]], order: Sequence[int] | None = None) -> IndexSpace:
    """Build the product space of half-open ranges; empty ranges are allowed."""
    rs = []
    for lo, hi in ranges:
        if lo > hi:
            raise ContractViolationError(f"range [{lo}, {hi}) has lo > hi")
        rs.append((int(lo), int(hi)))
    if order is None:
        order = tuple(range(len(rs)))
    return IndexSpace(tuple(rs), tuple(order))


def _chunk_bounds(n: int, workers: int) -> list[tuple[int, int]]:
    chunks = min(workers, n)
    base, extra = divmod(n, chunks)
    bounds = []
    start = 0
    for i in range(chunks):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def for_each(space: IndexSpace, strategy: ExecutionStrategy, body: Callable[[tuple[int, ...]], None]) -> None:
    """Invoke `body` exactly once per tuple; returns after all invocations complete.

    Under PARALLEL_UNORDERED the body must be data-race-free across distinct
    tuples.  A body failure aborts the traversal and propagates.
    """
    n = space.cardinality
    if n == 0:
        return
    if strategy.kind is StrategyKind.SEQUENTIAL:
        for linear in range(n):
            body(space.tuple_at(linear))
        return

    bounds = _chunk_bounds(n, strategy.workers())
    if len(bounds) == 1:
        for linear in range(n):
            body(space.tuple_at(linear))
        return

    def run_chunk(lo_hi):
        lo, hi = lo_hi
        for linear in range(lo, hi):
            body(space.tuple_at(linear))

    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        for future in [pool.submit(run_chunk, b) for b in bounds]:
            future.result()


def reduce_max(space: IndexSpace, strategy: ExecutionStrategy, value: Callable[[tuple[int, ...]], float]) -> float:
    """Maximum of `value` over all tuples; strategy cannot change the result."""
    n = space.cardinality
    if n == 0:
        raise EmptyReductionError("reduce_max over an empty index space")
    if strategy.kind is StrategyKind.SEQUENTIAL:
        best = -math.inf
        for linear in range(n):
            v = value(space.tuple_at(linear))
            if v > best:
                best = v
        return best

    bounds = _chunk_bounds(n, strategy.workers())

    def chunk_max(lo_hi):
        lo, hi = lo_hi
        best = -math.inf
        for linear in range(lo, hi):
            v = value(space.tuple_at(linear))
            if v > best:
                best = v
        return best

    if len(bounds) == 1:
        return chunk_max(bounds[0])
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        return max(pool.map(chunk_max, bounds))
