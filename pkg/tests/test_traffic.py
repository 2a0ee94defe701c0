import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iiot_sps.airframe import frame_from_config, make_frame
from iiot_sps.deployment import build_topology
from iiot_sps.scenario import ScenarioConfig, derive_block_size_bytes
from iiot_sps.traffic import (ActivationSlot, activate_ues, arrival_trace_csv,
                              build_activation_schedule, gen_aperiodic, gen_periodic,
                              generate_traffic)

FRAME = make_frame()
SLOT = ActivationSlot(3, 198, 64, {0: 3}, FRAME.su_duration_s)


def test_schedule_tiles_with_two_su_gaps():
    cfg = ScenarioConfig(sim_time_s=0.5)
    topo = build_topology(cfg)
    slots = build_activation_schedule(cfg, topo.lines, frame_from_config(cfg))
    assert slots[0].start_su == 0
    for a, b in zip(slots, slots[1:]):
        assert b.start_su - a.end_su == 2
        assert a.guard_end_su == b.start_su
    # one machine per line, walking down every line in order
    for s in slots:
        assert s.active_machine_per_line == {k: line[s.slot_index % 4]
                                             for k, line in enumerate(topo.lines)}


def test_periodic_offsets():
    blocks = gen_periodic(7, SLOT, 2e-3, 688)
    assert [round(b.generation_time_s - SLOT.start_time_s, 9) for b in blocks] == [0, 2e-3, 4e-3, 6e-3]
    assert all(b.pdu_bytes == 760 for b in blocks)
    assert len(gen_periodic(7, SLOT, 9e-3, 688)) == 1


def test_aperiodic_first_offset_interval():
    rng = np.random.default_rng(1)
    firsts = np.array([gen_aperiodic(0, SLOT, 2e-3, 6e-3, 688, rng)[0].generation_time_s
                       - SLOT.start_time_s for _ in range(10_000)])
    assert firsts.min() >= 2e-3 and firsts.max() <= 4e-3
    hist, _ = np.histogram(firsts, bins=10, range=(2e-3, 4e-3))
    assert np.abs(hist / len(firsts) - 0.1).max() < 0.015


@settings(max_examples=200)
@given(st.floats(0.5e-3, 7e-3), st.floats(0.1e-3, 4e-3), st.integers(0, 2**32 - 1))
def test_aperiodic_cap_two_blocks(t_min, width, seed):
    t_max = min(t_min + width, 8e-3)
    if t_max <= t_min:
        return
    blocks = gen_aperiodic(0, SLOT, t_min, t_max, 100, np.random.default_rng(seed))
    assert 1 <= len(blocks) <= 2
    assert all(b.generation_time_s < SLOT.end_time_s for b in blocks)
    if len(blocks) == 2:
        gap = blocks[1].generation_time_s - blocks[0].generation_time_s
        assert t_min - 1e-12 <= gap <= t_max + 1e-12


def test_aperiodic_rejects_window_beyond_activation():
    with pytest.raises(ValueError):
        gen_aperiodic(0, SLOT, 2e-3, 9e-3, 100, np.random.default_rng(0))


def test_activation_probability():
    cfg = ScenarioConfig(num_ues=200)
    topo = build_topology(cfg)
    slot = ActivationSlot(0, 0, 64, {k: line[0] for k, line in enumerate(topo.lines)},
                          FRAME.su_duration_s)
    eligible = {u.id for u in topo.ues if u.machine_id in slot.active_machine_per_line.values()}
    rng = np.random.default_rng(0)
    assert activate_ues(slot, topo, 1.0, rng) == eligible
    assert activate_ues(slot, topo, 0.0, rng) == set()
    hits = sum(len(activate_ues(slot, topo, 0.5, rng)) for _ in range(10_000 // len(eligible) + 1))
    trials = (10_000 // len(eligible) + 1) * len(eligible)
    assert hits / trials == pytest.approx(0.5, abs=0.02)


def test_generate_traffic_ordering_and_deadlines():
    cfg = ScenarioConfig(sim_time_s=0.3, traffic_mix=0.5)
    frame = frame_from_config(cfg)
    topo = build_topology(cfg)
    slots = build_activation_schedule(cfg, topo.lines, frame)
    tl = generate_traffic(cfg, topo, slots, frame, derive_block_size_bytes(cfg))
    keys = [(b.generation_time_s, b.ue_id) for b in tl.blocks]
    assert keys == sorted(keys)
    assert [b.id for b in tl.blocks] == list(range(len(tl.blocks)))
    per_ue_slot = {}
    for b in tl.blocks:
        slot = slots[b.slot_index]
        assert slot.start_time_s <= b.generation_time_s < slot.end_time_s
        assert b.deadline_su == slot.guard_end_su
        assert b.ready_su * frame.su_duration_s >= b.generation_time_s + frame.su_duration_s - 1e-12
        per_ue_slot[(b.ue_id, b.slot_index)] = per_ue_slot.get((b.ue_id, b.slot_index), 0) + 1
    kinds = {u.id: u.traffic_kind for u in topo.ues}
    assert all(n <= 2 for (ue, _), n in per_ue_slot.items() if kinds[ue] == "aperiodic")
    assert arrival_trace_csv(tl.blocks[:2]).startswith("block_id,ue_id,time_s,bytes\n")
