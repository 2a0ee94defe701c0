"""Semi-persistent uplink scheduling policies.

At every PUCCH opportunity a policy turns the scheduling requests into PUSCH
*occasions*: pre-allocated SUs in which a UE may start sending one queued
block. The engine binds occasions to blocks and splits RBs with
:func:`~iiot_sps.scheduler.allocation.allocate_edf_ff`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..airframe import FrameParams, ResourceGrid
from .asps import AspsEstimatorState, CycleObservation, asps_update_estimates, initial_estimates


@dataclass(frozen=True)
class SchedulingRequest:
    ue_id: int
    pucch_cycle_index: int
    queued_blocks: tuple[int, ...] = ()


@dataclass(frozen=True, order=True)
class Occasion:
    su: int
    ue_id: int
    expiry_su: int          # continuation allowed while su < expiry_su
    pred_slot: int          # slot index within the cycle the policy predicted
    cycle: int


@dataclass
class SchedulerView:
    """What the gNB knows about the factory; the smart policy also reads ``true_*``."""

    frame: FrameParams
    grid: ResourceGrid
    lines: list[list[int]]
    machine_index: dict[int, int]          # machine id -> index in its line
    ues_by_machine: dict[int, list[int]]   # schedulable UEs only
    ue_machine: dict[int, int]
    ue_kind: dict[int, str]
    period_sus: int
    aperiodic_mid_sus: int                 # (t_min + t_max)/2 in SUs, rounded up
    cycle_sus: int
    t_ip_sym: float
    n_lines: int
    machines_per_line: int
    true_tau_sus: int
    true_n_on: int

    def slot_ues(self, machine_idx: int) -> list[int]:
        out = []
        for line in self.lines:
            out.extend(self.ues_by_machine.get(line[machine_idx % len(line)], ()))
        return sorted(out)


def slot_occasions(view: SchedulerView, ue_ids, slot_start: int, tau_sus: int, expiry: int,
                   cycle_end: int, pred_slot: int, cycle: int) -> list[Occasion]:
    """Occasions for the UEs of one (predicted) activation slot.

    Periodic UEs get the SU right after each predicted generation; aperiodic
    UEs get the SU after the mid-window instant plus the last two SUs of the
    activation period.
    """
    grid = view.grid
    out = []
    limit = min(expiry, cycle_end)
    for ue in ue_ids:
        if view.ue_kind[ue] == "periodic":
            sus = [slot_start + k * view.period_sus + 1
                   for k in range(math.ceil(tau_sus / view.period_sus))]
        else:
            sus = [slot_start + view.aperiodic_mid_sus + 1,
                   slot_start + tau_sus - 2, slot_start + tau_sus - 1]
        seen = set()
        for su in sus:
            su = grid.first_data_su(su)
            if su < limit and su not in seen:
                seen.add(su)
                out.append(Occasion(su, ue, limit, pred_slot, cycle))
    return out


def predict_cycle(view: SchedulerView, cycle: int, start_su: int, machine_idx: int,
                  tau_sus: int, n_slots: int) -> list[Occasion]:
    period = tau_sus + 2
    cycle_end = start_su + view.cycle_sus
    out = []
    for j in range(n_slots):
        s0 = start_su + j * period
        if s0 >= cycle_end:
            break
        out.extend(slot_occasions(view, view.slot_ues(machine_idx + j), s0, tau_sus,
                                  s0 + period, cycle_end, j, cycle))
    return sorted(out)


class Policy:
    name = "base"

    def __init__(self, view: SchedulerView):
        self.view = view

    def requesters_machine_index(self, requests: list[SchedulingRequest]) -> int | None:
        idx = {self.view.machine_index[self.view.ue_machine[r.ue_id]] for r in requests}
        return max(idx) if idx else None

    def plan(self, cycle: int, start_su: int, requests: list[SchedulingRequest]) -> list[Occasion]:
        raise NotImplementedError

    def observe(self, cycle: int, start_su: int, outcomes: list[tuple[Occasion, bool]]) -> None:
        """Feedback on which occasions of the finished cycle carried data."""


class BaselineSPS(Policy):
    """Serves only UEs that sent the PUCCH: their backlog plus one activation period."""

    name = "BSPS"

    def plan(self, cycle, start_su, requests):
        v = self.view
        cycle_end = start_su + v.cycle_sus
        expiry = start_su + slot_sus_from(v)
        first = v.grid.first_data_su(start_su)
        out = []
        for r in sorted(requests, key=lambda r: r.ue_id):
            out.extend(Occasion(first, r.ue_id, expiry, 0, cycle) for _ in r.queued_blocks)
            out.extend(slot_occasions(v, [r.ue_id], start_su, v.true_tau_sus, expiry,
                                      cycle_end, 0, cycle))
        return sorted(out)


class SmartSPS(Policy):
    """Knows the full activation model and pre-allocates the whole cycle."""

    name = "SSPS"

    def plan(self, cycle, start_su, requests):
        v = self.view
        first_slot = cycle * v.true_n_on
        return predict_cycle(v, cycle, start_su, first_slot % v.machines_per_line,
                             v.true_tau_sus, v.true_n_on)


class AdaptiveSPS(Policy):
    """Like the smart scheduler, but with activation period and count learned online."""

    name = "ASPS"

    def __init__(self, view: SchedulerView):
        super().__init__(view)
        self.est: AspsEstimatorState = initial_estimates(view.t_ip_sym, view.n_lines)
        self._pending_obs: CycleObservation | None = None
        self._last_index: int | None = None
        self._observed_index: int | None = None
        self.estimates: list[AspsEstimatorState] = []

    def observe(self, cycle, start_su, outcomes):
        first = [(o.su - start_su, used) for o, used in outcomes if o.pred_slot == 0]
        self._pending_obs = CycleObservation(
            cycle=cycle, machine_index=self._observed_index,
            su_tx=tuple(sorted({s for s, used in first if used})),
            su_notx=tuple(sorted({s for s, used in first if not used})))

    def plan(self, cycle, start_su, requests):
        v = self.view
        idx = self.requesters_machine_index(requests)
        if self._pending_obs is not None:
            self.est = asps_update_estimates(
                self.est, self._pending_obs, idx, t_ip_sym=v.t_ip_sym,
                machines_per_line=v.machines_per_line, n_os=v.frame.symbols_per_su)
            self._pending_obs = None
        self._observed_index = idx
        if idx is None:
            # nobody requested: assume the activation sequence moved on by n_on_hat
            idx = ((self._last_index or 0) + self.est.n_on_hat) % v.machines_per_line
        self._last_index = idx
        self.estimates.append(self.est)
        return predict_cycle(v, cycle, start_su, idx, self.est.tau_on_hat_sus(v.frame.symbols_per_su),
                             self.est.n_on_hat)


def slot_sus_from(view: SchedulerView) -> int:
    return view.true_tau_sus + 2


POLICIES = {"BSPS": BaselineSPS, "SSPS": SmartSPS, "ASPS": AdaptiveSPS}


def make_policy(kind: str, view: SchedulerView) -> Policy:
    return POLICIES[kind](view)
