"""Uplink scheduling: RB allocation discipline, SPS policies, adaptive estimator, dropping."""

from __future__ import annotations

from typing import Iterable

from ..traffic import DROPPED, GRANTED, QUEUED, DataBlock
from .allocation import Demand, allocate_edf_ff, bucket_size, edf_order
from .asps import AspsEstimatorState, CycleObservation, asps_update_estimates, initial_estimates
from .policies import (POLICIES, AdaptiveSPS, BaselineSPS, Occasion, Policy, SchedulerView,
                       SchedulingRequest, SmartSPS, make_policy, predict_cycle, slot_occasions)


def apply_dropping(queued: Iterable[DataBlock], now_su: int, enabled: bool) -> list[int]:
    """Drop every unsent block whose activation slot, guard interval included, is over."""
    if not enabled:
        return []
    dropped = []
    for b in queued:
        if b.state in (QUEUED, GRANTED) and b.deadline_su <= now_su:
            b.state = DROPPED
            dropped.append(b.id)
    return dropped


__all__ = [
    "Demand", "allocate_edf_ff", "bucket_size", "edf_order",
    "AspsEstimatorState", "CycleObservation", "asps_update_estimates", "initial_estimates",
    "POLICIES", "AdaptiveSPS", "BaselineSPS", "Occasion", "Policy", "SchedulerView",
    "SchedulingRequest", "SmartSPS", "make_policy", "predict_cycle", "slot_occasions",
    "apply_dropping",
]
