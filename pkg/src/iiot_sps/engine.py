"""SU-lattice simulation of one scenario and end-to-end latency accounting."""

from __future__ import annotations

import bisect
import csv
import heapq
import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import scenario as scn
from .airframe import (FrameParams, ResourceGrid, SuPurpose, compute_t_ip, frame_from_config,
                       layout_control_plane, rbs_needed)
from .channel import LinkState, build_link_table
from .deployment import Topology, build_topology
from .scheduler import (Demand, Occasion, Policy, SchedulerView, SchedulingRequest,
                        allocate_edf_ff, bucket_size, make_policy)
from .traffic import (DROPPED, GRANTED, LOST, QUEUED, TRANSMITTED, ActivationSlot, DataBlock,
                      build_activation_schedule, generate_traffic)

URLLC_BUDGET_S = 1e-3


@dataclass(frozen=True)
class LatencyRecord:
    block_id: int
    ue_id: int
    t_p_s: float
    t_ran_s: float
    t_tx_s: float
    tau_p_s: float
    t_fh_s: float
    tau_fh_s: float
    t_gnb_s: float
    t_cn_s: float

    @property
    def total_s(self) -> float:
        return (self.t_p_s + self.t_ran_s + self.t_tx_s + self.tau_p_s + self.t_fh_s
                + self.tau_fh_s + self.t_gnb_s + self.t_cn_s)


@dataclass(frozen=True)
class Grant:
    block_id: int
    ue_id: int
    su_index: int
    rb_indices: range
    issue_cycle: int


@dataclass
class RunMetrics:
    mean_e2e_s: float | None
    flat_mean_e2e_s: float | None
    p99_e2e_s: float | None
    delivered_count: int
    dropped_count: int
    loss_ratio: float | None
    generated_count: int = 0
    queued_at_end: int = 0
    lost_link_count: int = 0
    per_ue_mean_s: dict[int, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["per_ue_mean_s"] = {str(k): v for k, v in sorted(self.per_ue_mean_s.items())}
        return d


def fixed_latency_terms(cfg, frame: FrameParams) -> dict[str, float]:
    sym = frame.symbol_duration_s
    return {
        "t_p_s": cfg.t_p_symbols * sym,
        "t_tx_s": cfg.t_tx_symbols * sym,
        "tau_p_s": cfg.tau_p_s,
        "t_fh_s": cfg.t_fh_s,
        "tau_fh_s": cfg.tau_fh_s,
        "t_gnb_s": cfg.t_gnb_symbols * sym,
        "t_cn_s": cfg.t_cn_s,
    }


def latency_floor_s(cfg, frame: FrameParams) -> float:
    """L for a block sent in the SU right after its PDU is ready (T_RAN = 0)."""
    return LatencyRecord(-1, -1, t_ran_s=0.0, **fixed_latency_terms(cfg, frame)).total_s


def compute_latency(block: DataBlock, tx_start_s: float, cfg, frame: FrameParams) -> LatencyRecord:
    terms = fixed_latency_terms(cfg, frame)
    t_ran = tx_start_s - (block.generation_time_s + terms["t_p_s"])
    if t_ran < -1e-12:
        raise AssertionError(f"block {block.id}: negative T_RAN {t_ran}")
    return LatencyRecord(block.id, block.ue_id, t_ran_s=max(t_ran, 0.0), **terms)


def aggregate(records: list[LatencyRecord], dropped: int, cfg=None, *, generated: int = 0,
              queued: int = 0, lost_link: int = 0) -> RunMetrics:
    """Per-UE mean first, then the mean across UEs; loss over delivered + dropped."""
    per_ue: dict[int, list[float]] = {}
    for r in records:
        per_ue.setdefault(r.ue_id, []).append(r.total_s)
    ue_means = {u: float(np.mean(v)) for u, v in per_ue.items()}
    flat = [r.total_s for r in records]
    n = len(records)
    return RunMetrics(
        mean_e2e_s=float(np.mean(list(ue_means.values()))) if n else None,
        flat_mean_e2e_s=float(np.mean(flat)) if n else None,
        p99_e2e_s=float(np.percentile(flat, 99)) if n else None,
        delivered_count=n,
        dropped_count=dropped,
        loss_ratio=dropped / (n + dropped) if n + dropped else None,
        generated_count=generated,
        queued_at_end=queued,
        lost_link_count=lost_link,
        per_ue_mean_s=ue_means,
        config=cfg.as_dict() if cfg is not None else {},
        seed=cfg.rng_seed if cfg is not None else 0,
    )


@dataclass
class SimulationResult:
    metrics: RunMetrics
    records: list[LatencyRecord]
    blocks: list[DataBlock]
    grants: list[Grant]
    occasions: dict[int, list[Occasion]]        # per cycle, as planned
    outcomes: dict[int, list[tuple[Occasion, bool]]]
    topology: Topology
    links: list[LinkState]
    slots: list[ActivationSlot]
    grid: ResourceGrid
    frame: FrameParams
    policy: Policy


def build_view(cfg, frame: FrameParams, topo: Topology, links: list[LinkState],
               grid: ResourceGrid) -> SchedulerView:
    ok = {l.ue_id for l in links if l.adequate}
    by_machine: dict[int, list[int]] = {}
    for ue in topo.ues:
        if ue.id in ok:
            by_machine.setdefault(ue.machine_id, []).append(ue.id)
    tau_sus = frame.sus(cfg.tau_on_s)
    cycle_sus = (tau_sus + 2) * cfg.n_on
    return SchedulerView(
        frame=frame, grid=grid, lines=topo.lines,
        machine_index={m.id: m.index_in_line for m in topo.machines},
        ues_by_machine=by_machine,
        ue_machine={ue.id: ue.machine_id for ue in topo.ues},
        ue_kind={ue.id: ue.traffic_kind for ue in topo.ues},
        period_sus=frame.sus(cfg.periodic_period_s),
        aperiodic_mid_sus=math.ceil(round(
            (cfg.aperiodic_tmin_s + cfg.aperiodic_tmax_s) / 2 / frame.su_duration_s, 9)),
        cycle_sus=cycle_sus,
        t_ip_sym=float(cycle_sus * frame.symbols_per_su),
        n_lines=cfg.n_lines, machines_per_line=cfg.machines_per_line,
        true_tau_sus=tau_sus, true_n_on=cfg.n_on,
    )


def simulate(cfg) -> SimulationResult:
    """Run one replica and keep every intermediate artefact."""
    scn.validate(cfg)
    frame = frame_from_config(cfg)
    topo = build_topology(cfg)
    links = build_link_table(cfg, topo)
    slots = build_activation_schedule(cfg, topo.lines, frame)
    t_ip = compute_t_ip(cfg.tau_on_s, cfg.n_on, frame)
    grid = layout_control_plane(t_ip, frame, cfg.tau_on_s)
    timeline = generate_traffic(cfg, topo, slots, frame, scn.derive_block_size_bytes(cfg))
    blocks = timeline.blocks
    for b in blocks:
        link = links[b.ue_id]
        if link.adequate:
            b.rbs_needed = rbs_needed(b.pdu_bytes, link.modulation_bits_per_symbol, frame)
        else:
            b.state = LOST

    view = build_view(cfg, frame, topo, links, grid)
    policy = make_policy(cfg.scheduler_kind, view)
    terms = fixed_latency_terms(cfg, frame)
    slack_budget = URLLC_BUDGET_S - (sum(terms.values()) - terms["t_p_s"])
    su_s = frame.su_duration_s
    cycle_sus = view.cycle_sus
    total_sus = frame.sus(cfg.sim_time_s)
    capacity = frame.data_rbs_per_su
    adequate = {l.ue_id for l in links if l.adequate}

    # pending: ready, unsent blocks per UE; unbound: the subset no occasion holds.
    # Block ids follow (generation time, UE) order, which is also EDF order
    # because every deadline is generation time plus the same budget.
    pending: dict[int, deque[int]] = {ue.id: deque() for ue in topo.ues}
    unbound: dict[int, list[int]] = {ue.id: [] for ue in topo.ues}
    bound: dict[int, int] = {}              # block id -> expiry SU
    bound_order: list[int] = []
    expiry_heap: list[tuple[int, int]] = []
    occ_heap: list[int] = []
    occ_by_su: dict[int, list[Occasion]] = {}
    occasions: dict[int, list[Occasion]] = {}
    outcomes: dict[int, list[tuple[Occasion, bool]]] = {}
    grants: list[Grant] = []
    records: list[LatencyRecord] = []
    arr = drp = 0
    n_blocks = len(blocks)

    def discard(seq: list[int], bid: int) -> None:
        i = bisect.bisect_left(seq, bid)
        if i < len(seq) and seq[i] == bid:
            del seq[i]

    def release(b: DataBlock) -> None:
        q = pending[b.ue_id]
        if q and q[0] == b.id:
            q.popleft()
        else:
            q.remove(b.id)
        if bound.pop(b.id, None) is not None:
            discard(bound_order, b.id)
        else:
            discard(unbound[b.ue_id], b.id)

    s = 0
    while s < total_sus:
        while arr < n_blocks and blocks[arr].ready_su <= s:
            b = blocks[arr]
            if b.state == QUEUED:
                pending[b.ue_id].append(b.id)
                unbound[b.ue_id].append(b.id)
            arr += 1
        if cfg.dropping_enabled:
            while drp < n_blocks and blocks[drp].deadline_su <= s:
                b = blocks[drp]
                if b.state in (QUEUED, GRANTED):
                    if drp < arr:
                        release(b)
                    b.state = DROPPED
                drp += 1

        if s % cycle_sus == 0:
            c = s // cycle_sus
            if c > 0:
                policy.observe(c - 1, s - cycle_sus, outcomes.get(c - 1, []))
            slot_idx = c * cfg.n_on
            active = timeline.active_ues[slot_idx] if slot_idx < len(slots) else set()
            requests = [SchedulingRequest(u, c, tuple(pending[u]))
                        for u in sorted(active & adequate)]
            plan = policy.plan(c, s, requests)
            occasions[c] = plan
            outcomes[c] = []
            for o in plan:
                if o.su not in occ_by_su:
                    occ_by_su[o.su] = []
                    heapq.heappush(occ_heap, o.su)
                occ_by_su[o.su].append(o)

        purpose = grid.purpose(s)
        while expiry_heap and expiry_heap[0][0] <= s:
            exp, bid = heapq.heappop(expiry_heap)
            if bound.get(bid) == exp:
                del bound[bid]
                discard(bound_order, bid)
                bisect.insort(unbound[blocks[bid].ue_id], bid)
                blocks[bid].state = QUEUED
        if s in occ_by_su:
            if purpose not in (SuPurpose.DATA, SuPurpose.GUARD):
                raise AssertionError(f"occasion planned in {purpose.value} SU {s}")
            for o in occ_by_su.pop(s):
                free = unbound[o.ue_id]
                used = bool(free) and o.expiry_su > s
                if used:
                    bid = free.pop(0)
                    bound[bid] = o.expiry_su
                    bisect.insort(bound_order, bid)
                    heapq.heappush(expiry_heap, (o.expiry_su, bid))
                    blocks[bid].state = GRANTED
                outcomes[o.cycle].append((o, used))
        while occ_heap and occ_heap[0] <= s:
            heapq.heappop(occ_heap)

        if bound and purpose in (SuPurpose.DATA, SuPurpose.GUARD):
            guard = purpose == SuPurpose.GUARD
            now = s * su_s
            demands = []
            reach = 0
            # only the EDF prefix whose first-pass shares fill the SU can get RBs
            for bid in bound_order:
                if guard and bound[bid] > s + 2:
                    continue
                b = blocks[bid]
                d = Demand(bid, b.ue_id, b.generation_time_s + slack_budget,
                           b.generation_time_s, b.rbs_needed, b.credit)
                demands.append(d)
                reach += min(bucket_size(d.rbs_total, cfg.bucket_fraction), d.remaining)
                if reach >= capacity:
                    break
            for bid, g in allocate_edf_ff(demands, capacity, cfg.bucket_fraction, now):
                b = blocks[bid]
                if s < b.ready_su:
                    raise AssertionError(f"block {bid} granted before it was ready")
                rbs = grid.allocate(s, g, b.ue_id, bid)
                grants.append(Grant(bid, b.ue_id, s, rbs, s // cycle_sus))
                b.credit += g
                if b.credit >= b.rbs_needed:
                    b.state = TRANSMITTED
                    b.completion_su = s
                    release(b)
                    records.append(compute_latency(b, s * su_s, cfg, frame))

        if bound:
            s += 1
        else:
            nxt = (s // cycle_sus + 1) * cycle_sus
            if occ_heap:
                nxt = min(nxt, occ_heap[0])
            s = max(nxt, s + 1)

    dropped = lost = queued = 0
    for b in blocks:
        if b.state in (QUEUED, GRANTED):
            if cfg.dropping_enabled and b.deadline_su <= total_sus:
                b.state = DROPPED
            else:
                queued += 1
        if b.state == DROPPED:
            dropped += 1
        elif b.state == LOST:
            lost += 1
    if len(records) + dropped + lost + queued != n_blocks:
        raise AssertionError("block conservation violated")
    metrics = aggregate(records, dropped + lost, cfg, generated=n_blocks, queued=queued,
                        lost_link=lost)
    return SimulationResult(metrics, records, blocks, grants, occasions, outcomes, topo, links,
                            slots, grid, frame, policy)


def run(cfg) -> RunMetrics:
    return simulate(cfg).metrics


def grant_log_csv(grants: list[Grant]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", "su", "rb_first", "rb_count", "ue_id", "block_id"])
    for g in grants:
        w.writerow([g.issue_cycle, g.su_index, g.rb_indices.start, len(g.rb_indices), g.ue_id,
                    g.block_id])
    return buf.getvalue()
