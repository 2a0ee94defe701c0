"""EDF + fair-first (bucket) RB allocation within one scheduling unit."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Demand:
    block_id: int
    ue_id: int
    deadline_s: float          # latest transmission start that still meets the budget
    generation_time_s: float
    rbs_total: int
    credit: int = 0            # RBs received in earlier SUs

    @property
    def remaining(self) -> int:
        return self.rbs_total - self.credit


def bucket_size(rbs_total: int, bucket_fraction: float) -> int:
    return math.ceil(round(bucket_fraction * rbs_total, 9))


def edf_order(demands: list[Demand], now_s: float = 0.0) -> list[Demand]:
    """Least slack first; ties by generation time, UE id, block id."""
    return sorted(demands, key=lambda d: (d.deadline_s - now_s, d.generation_time_s,
                                          d.ue_id, d.block_id))


def allocate_edf_ff(demands: list[Demand], capacity: int, bucket_fraction: float,
                    now_s: float = 0.0) -> list[tuple[int, int]]:
    """Split ``capacity`` RBs of one SU among ``demands``.

    Pass 1 walks the EDF order giving each block up to its bucket
    (``bucket_fraction`` of its own RB need); pass 2 spends what is left on
    the same order without the bucket cap. Returns ``(block_id, rbs)`` pairs
    with rbs > 0, in EDF order.
    """
    order = edf_order(demands, now_s)
    grant = [0] * len(order)
    left = capacity
    for i, d in enumerate(order):
        if left == 0:
            break
        g = min(bucket_size(d.rbs_total, bucket_fraction), d.remaining, left)
        grant[i] = g
        left -= g
    for i, d in enumerate(order):
        if left == 0:
            break
        g = min(d.remaining - grant[i], left)
        grant[i] += g
        left -= g
    return [(d.block_id, g) for d, g in zip(order, grant) if g > 0]
