from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from iiot_sps.airframe import (ResourceGrid, SuPurpose, compute_t_ip, layout_control_plane,
                               make_frame, rb_capacity_bits, rbs_needed, slot_sus)

FRAME = make_frame(60e3, 60e6)


def test_su_duration_exact():
    assert FRAME.su_duration == Fraction(1, 8000)
    assert FRAME.su_duration_s == 0.125e-3
    assert FRAME.symbol_duration == Fraction(1, 56000)


@pytest.mark.parametrize("n_on, expected", [(5, 41.25e-3), (4, 33e-3), (8, 66e-3)])
def test_t_ip_values(n_on, expected):
    assert compute_t_ip(8e-3, n_on, FRAME) == expected


def test_slot_is_activation_plus_two_sus():
    assert slot_sus(8e-3, FRAME) == 66


def test_rb_counts_per_bandwidth():
    assert FRAME.n_rb == 84
    assert make_frame(60e3, 120e6).n_rb == 167
    assert FRAME.data_rbs_per_su == 83


def test_rbs_needed_oracle():
    # 760 B PDU: 6080 bits; QPSK RB carries 12*4*2 = 96 bits -> 64 RBs; 64QAM 288 bits -> 22
    assert rb_capacity_bits(2, FRAME) == 96
    assert rbs_needed(760, 2, FRAME) == 64
    assert rbs_needed(760, 6, FRAME) == 22
    assert rbs_needed(760, 4, FRAME) == 32


@given(st.integers(1, 5000), st.sampled_from([2, 4, 6]))
def test_rbs_needed_is_minimal(pdu, bits):
    n = rbs_needed(pdu, bits, FRAME)
    cap = rb_capacity_bits(bits, FRAME)
    assert n * cap >= 8 * pdu > (n - 1) * cap


def test_control_plane_layout():
    grid = layout_control_plane(compute_t_ip(8e-3, 5, FRAME), FRAME, 8e-3)
    assert grid.cycle_sus == 330
    assert [grid.purpose(s) for s in range(3)] == [SuPurpose.PUCCH, SuPurpose.PROCESSING,
                                                   SuPurpose.PDCCH]
    assert grid.purpose(3) is SuPurpose.DATA
    assert [grid.purpose(s) for s in (64, 65, 66)] == [SuPurpose.GUARD, SuPurpose.GUARD,
                                                       SuPurpose.DATA]
    assert grid.purpose(330) is SuPurpose.PUCCH
    assert grid.first_data_su(330) == 333


def test_grid_rejects_overlap_and_control_sus():
    grid = layout_control_plane(compute_t_ip(8e-3, 5, FRAME), FRAME, 8e-3)
    assert grid.allocate(10, 40, 1, 1) == range(1, 41)
    assert grid.allocate(10, 43, 2, 2) == range(41, 84)
    with pytest.raises(ValueError, match="over-allocated"):
        grid.allocate(10, 1, 3, 3)
    with pytest.raises(ValueError, match="not a data SU"):
        grid.allocate(0, 1, 3, 3)


@given(st.lists(st.integers(1, 30), max_size=10))
def test_grid_allocations_are_disjoint(sizes):
    grid = ResourceGrid(FRAME, [SuPurpose.DATA])
    taken = set()
    for i, n in enumerate(sizes):
        try:
            rbs = grid.allocate(0, n, i, i)
        except ValueError:
            assert sum(sizes[:i + 1]) > FRAME.data_rbs_per_su
            break
        assert taken.isdisjoint(rbs) and 0 not in rbs
        taken.update(rbs)
