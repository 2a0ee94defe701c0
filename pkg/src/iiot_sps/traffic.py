"""Correlated machine activations and per-UE packet arrivals (periodic and aperiodic)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .airframe import FrameParams, slot_sus
from .rng import substream

QUEUED, GRANTED, TRANSMITTED, DROPPED, LOST = "queued", "granted", "transmitted", "dropped", "lost"


@dataclass(frozen=True)
class ActivationSlot:
    slot_index: int
    start_su: int
    tau_sus: int                       # active SUs; the 2 guard SUs follow
    active_machine_per_line: dict[int, int]
    su_duration_s: float

    @property
    def end_su(self) -> int:
        return self.start_su + self.tau_sus

    @property
    def guard_end_su(self) -> int:
        return self.end_su + 2

    @property
    def start_time_s(self) -> float:
        return self.start_su * self.su_duration_s

    @property
    def end_time_s(self) -> float:
        return self.end_su * self.su_duration_s


@dataclass(slots=True)
class DataBlock:
    id: int
    ue_id: int
    generation_time_s: float
    payload_bytes: int
    pdu_bytes: int
    slot_index: int
    state: str = QUEUED
    ready_su: int = 0          # earliest SU that may carry it
    deadline_su: int = 0       # first SU after its slot's guard interval
    rbs_needed: int = 0
    credit: int = 0            # RBs already received
    completion_su: int = -1


def build_activation_schedule(cfg, lines: list[list[int]], frame: FrameParams,
                              ) -> list[ActivationSlot]:
    """Slots tiling [0, T_S): slot j activates index j mod machines_per_line on every line."""
    tau = frame.sus(cfg.tau_on_s)
    period = slot_sus(cfg.tau_on_s, frame)
    total = frame.sus(cfg.sim_time_s)
    su = frame.su_duration_s
    slots = []
    for j in range(math.ceil(total / period)):
        active = {k: line[j % len(line)] for k, line in enumerate(lines)}
        slots.append(ActivationSlot(j, j * period, tau, active, su))
    return slots


def activate_ues(slot: ActivationSlot, topology, p: float,
                 rng: np.random.Generator | Mapping[int, np.random.Generator]) -> set[int]:
    """UEs of the slot's active machines, each kept independently with probability p.

    ``rng`` is either one generator (drawn in UE-id order) or a per-UE mapping.
    """
    machines = set(slot.active_machine_per_line.values())
    out = set()
    for ue in topology.ues:
        if ue.machine_id not in machines:
            continue
        g = rng[ue.id] if isinstance(rng, Mapping) else rng
        if g.random() < p:
            out.add(ue.id)
    return out


def _block(ue_id, t, slot, block_bytes, header):
    return DataBlock(id=-1, ue_id=ue_id, generation_time_s=t, payload_bytes=block_bytes,
                     pdu_bytes=block_bytes + header, slot_index=slot.slot_index)


def gen_periodic(ue_id: int, slot: ActivationSlot, tau_s: float, block_bytes: int,
                 header_bytes: int = 72) -> list[DataBlock]:
    if tau_s <= 0:
        raise ValueError("tau_s > 0 required")
    tau_on = slot.tau_sus * slot.su_duration_s
    n = math.ceil(round(tau_on / tau_s, 9))
    return [_block(ue_id, slot.start_time_s + k * tau_s, slot, block_bytes, header_bytes)
            for k in range(n)]


def gen_aperiodic(ue_id: int, slot: ActivationSlot, t_min: float, t_max: float,
                  block_bytes: int, rng: np.random.Generator,
                  header_bytes: int = 72) -> list[DataBlock]:
    """First block in [t_min, (t_min+t_max)/2]; a second one t_min..t_max later if still active."""
    tau_on = slot.tau_sus * slot.su_duration_s
    if not 0 < t_min < t_max <= tau_on + 1e-12:
        raise ValueError("0 < t_min < t_max <= tau_on required")
    first = rng.uniform(t_min, (t_min + t_max) / 2)
    second = first + rng.uniform(t_min, t_max)
    out = [_block(ue_id, slot.start_time_s + first, slot, block_bytes, header_bytes)]
    if second < tau_on:
        out.append(_block(ue_id, slot.start_time_s + second, slot, block_bytes, header_bytes))
    return out


@dataclass
class TrafficTimeline:
    blocks: list[DataBlock]
    active_ues: list[set[int]] = field(default_factory=list)   # per slot


def generate_traffic(cfg, topology, slots: list[ActivationSlot], frame: FrameParams,
                     block_bytes: int) -> TrafficTimeline:
    """All blocks of a run, ids assigned in (generation time, UE id) order.

    Every UE owns one named substream used for its activation coin and its
    aperiodic draws, in slot order.
    """
    rngs = {ue.id: substream(cfg.rng_seed, "traffic", ue.id) for ue in topology.ues}
    kinds = {ue.id: ue.traffic_kind for ue in topology.ues}
    su = frame.su_duration_s
    t_p = cfg.t_p_symbols * frame.symbol_duration_s
    horizon = cfg.sim_time_s
    blocks: list[DataBlock] = []
    active_per_slot = []
    for slot in slots:
        active = activate_ues(slot, topology, cfg.ue_activation_prob, rngs)
        active_per_slot.append(active)
        for ue_id in sorted(active):
            if kinds[ue_id] == "periodic":
                new = gen_periodic(ue_id, slot, cfg.periodic_period_s, block_bytes, cfg.header_bytes)
            else:
                new = gen_aperiodic(ue_id, slot, cfg.aperiodic_tmin_s, cfg.aperiodic_tmax_s,
                                    block_bytes, rngs[ue_id], cfg.header_bytes)
            for b in new:
                if b.generation_time_s >= horizon:
                    continue
                b.ready_su = math.ceil((b.generation_time_s + t_p) / su - 1e-9)
                b.deadline_su = slot.guard_end_su
                blocks.append(b)
    blocks.sort(key=lambda b: (b.generation_time_s, b.ue_id))
    for i, b in enumerate(blocks):
        b.id = i
    return TrafficTimeline(blocks, active_per_slot)


def arrival_trace_csv(blocks: Iterable[DataBlock]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block_id", "ue_id", "time_s", "bytes"])
    for b in blocks:
        w.writerow([b.id, b.ue_id, repr(b.generation_time_s), b.pdu_bytes])
    return buf.getvalue()
