import math

import numpy as np
import pytest

from iiot_sps.channel import (InfScenario, build_link_table, classify_inf_scenario,
                              los_probability, median_path_loss_db, modulation_order,
                              noise_power_dbm, path_loss_db, snr_db)
from iiot_sps.deployment import build_topology
from iiot_sps.scenario import ScenarioConfig, preset_config

FC = 3.5e9
DH = InfScenario("InF-DH", True, True, 2.0, 2.0)
DL = InfScenario("InF-DL", True, False, 2.0, 2.0)
SL = InfScenario("InF-SL", False, False, 2.0, 2.0)


def test_classification():
    assert classify_inf_scenario(preset_config("augmented_reality")).kind == "InF-DH"
    assert classify_inf_scenario(ScenarioConfig(inter_machine_distance_m=10.0)).kind == "InF-SH"
    assert classify_inf_scenario(ScenarioConfig(floor_height_m=1.5)).kind == "InF-DL"


def test_path_loss_hand_evaluations():
    # 31.84 + 21.5 log10(10) + 19 log10(3.5)
    assert median_path_loss_db(DH, True, 10.0, FC) == pytest.approx(63.677293, abs=1e-5)
    # 33.63 + 21.9 + 20 log10(3.5)
    assert median_path_loss_db(DH, False, 10.0, FC) == pytest.approx(66.411361, abs=1e-5)
    # InF-DL is floored by InF-SL NLOS, 33 + 25.5 + 20 log10(3.5)
    assert median_path_loss_db(DL, False, 10.0, FC) == pytest.approx(69.381361, abs=1e-5)


@pytest.mark.parametrize("scen", [DH, DL, SL])
@pytest.mark.parametrize("d", [1.0, 3.0, 10.0, 50.0, 600.0])
def test_nlos_never_below_los(scen, d):
    assert median_path_loss_db(scen, False, d, FC) >= median_path_loss_db(scen, True, d, FC)


def test_path_loss_range_enforced():
    with pytest.raises(ValueError, match="outside"):
        median_path_loss_db(DH, True, 0.5, FC)


def test_los_probability_hand_evaluation():
    # k = -d_clutter / ln(1 - r) scaled by (h_BS - h_UE) / (h_c - h_UE)
    assert los_probability(DH, 5.0, 4.0, 1.0) == pytest.approx(0.465997, abs=1e-6)
    assert los_probability(SL, 5.0, 4.0, 1.0) == pytest.approx(0.572433, abs=1e-6)
    assert los_probability(DH, 5.0, 4.0, 2.0) == 1.0
    assert los_probability(DH, 0.0, 4.0, 1.0) == 1.0


def test_shadowing_statistics():
    rng = np.random.default_rng(0)
    draws = [path_loss_db(DH, True, 10.0, FC, rng)[1] for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(0.0, abs=0.1)
    assert np.std(draws) == pytest.approx(4.3, rel=0.03)
    assert path_loss_db(DH, True, 10.0, FC)[1] == 0.0


def test_snr_oracle():
    cfg = ScenarioConfig()
    # kTB over 720 kHz at 290 K is -115.4 dBm
    assert noise_power_dbm(cfg, 1) == pytest.approx(-115.40, abs=0.01)
    assert snr_db(cfg, 100.0, 1) == pytest.approx(38.40, abs=0.01)
    assert snr_db(cfg, 100.0, 10) == pytest.approx(38.40 - 10, abs=0.01)


@pytest.mark.parametrize("snr, bits", [(-6, None), (-5, 2), (9.9, 2), (10, 4), (19.9, 4),
                                       (20, 6), (60, 6)])
def test_modulation_thresholds(snr, bits):
    assert modulation_order(snr) == bits


def test_link_table_is_per_ue_and_seeded():
    cfg = ScenarioConfig(num_ues=30, rng_seed=3)
    topo = build_topology(cfg)
    a = build_link_table(cfg, topo)
    assert [l.ue_id for l in a] == list(range(30))
    assert a == build_link_table(cfg, topo)
    for link in a:
        assert link.adequate == (link.modulation_bits_per_symbol is not None)
        assert link.distance_3d_m >= link.distance_2d_m
        assert math.isfinite(link.snr_db)
