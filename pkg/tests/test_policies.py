import pytest

from iiot_sps.airframe import SuPurpose, compute_t_ip, frame_from_config, layout_control_plane
from iiot_sps.channel import build_link_table
from iiot_sps.deployment import build_topology
from iiot_sps.engine import build_view
from iiot_sps.scenario import preset_config
from iiot_sps.scheduler import (SchedulingRequest, apply_dropping, make_policy, predict_cycle,
                                slot_occasions)
from iiot_sps.traffic import DROPPED, QUEUED, DataBlock


@pytest.fixture(scope="module")
def view():
    cfg = preset_config("augmented_reality", num_ues=60, traffic_mix=0.5)
    frame = frame_from_config(cfg)
    topo = build_topology(cfg)
    grid = layout_control_plane(compute_t_ip(cfg.tau_on_s, cfg.n_on, frame), frame, cfg.tau_on_s)
    return build_view(cfg, frame, topo, build_link_table(cfg, topo), grid)


def _ue(view, kind):
    return next(u for u, k in sorted(view.ue_kind.items()) if k == kind)


def test_periodic_occasions_follow_generations(view):
    ue = _ue(view, "periodic")
    occ = slot_occasions(view, [ue], 66, 64, 132, 330, 1, 0)
    assert [o.su for o in occ] == [67, 83, 99, 115]
    assert all(o.expiry_su == 132 for o in occ)


def test_periodic_occasion_skips_control_sus(view):
    ue = _ue(view, "periodic")
    assert slot_occasions(view, [ue], 0, 64, 66, 330, 0, 0)[0].su == 3


def test_aperiodic_gets_three_sus(view):
    ue = _ue(view, "aperiodic")
    occ = slot_occasions(view, [ue], 66, 64, 132, 330, 1, 0)
    # mid-window instant (2+6)/2 ms = 32 SUs, then the last two SUs of the activation period
    assert [o.su for o in occ] == [66 + 33, 66 + 62, 66 + 63]


def test_ssps_plans_whole_cycle_outside_control(view):
    plan = make_policy("SSPS", view).plan(0, 0, [])
    assert {o.pred_slot for o in plan} == set(range(5))
    assert all(view.grid.purpose(o.su) in (SuPurpose.DATA, SuPurpose.GUARD) for o in plan)
    assert all(o.su < o.expiry_su <= 330 for o in plan)
    assert plan == predict_cycle(view, 0, 0, 0, 64, 5)


def test_ssps_walks_activation_index(view):
    plan = make_policy("SSPS", view).plan(1, 330, [])
    first_slot_ues = {o.ue_id for o in plan if o.pred_slot == 0}
    assert first_slot_ues == set(view.slot_ues(5 % 4))


def test_bsps_serves_requesters_only(view):
    ue = _ue(view, "periodic")
    plan = make_policy("BSPS", view).plan(2, 660, [SchedulingRequest(ue, 2, (10, 11))])
    assert {o.ue_id for o in plan} == {ue}
    backlog = [o for o in plan if o.su == 663]
    assert len(backlog) == 3    # two queued blocks plus the predicted one at slot start
    assert all(o.expiry_su == 660 + 66 for o in plan)
    assert make_policy("BSPS", view).plan(0, 0, []) == []


def test_asps_starts_from_initial_guess(view):
    pol = make_policy("ASPS", view)
    plan = pol.plan(0, 0, [])
    assert pol.estimates[0].n_on_hat == 4
    assert max(o.pred_slot for o in plan) <= 3


def test_apply_dropping():
    blocks = [DataBlock(i, 0, 0.0, 1, 1, 0, deadline_su=d) for i, d in enumerate((10, 20))]
    assert apply_dropping(blocks, 15, True) == [0]
    assert blocks[0].state == DROPPED and blocks[1].state == QUEUED
    assert apply_dropping(blocks, 100, False) == []
