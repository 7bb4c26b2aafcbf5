"""Operation counters and stage timers used by the bench report."""
from __future__ import annotations

import time
from collections import Counter
from contextlib import contextmanager

_counts: Counter = Counter()


def count(name: str, n: int = 1) -> None:
    _counts[name] += n


def snapshot() -> dict[str, int]:
    return dict(_counts)


def reset() -> None:
    _counts.clear()


@contextmanager
def counting():
    """Yield a dict that receives the counts incremented inside the block."""
    before = Counter(_counts)
    out: dict[str, int] = {}
    try:
        yield out
    finally:
        after = Counter(_counts)
        after.subtract(before)
        out.update({k: v for k, v in after.items() if v})


class StageTimer:
    def __init__(self) -> None:
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0
