import random

from hypothesis import given, strategies as st

from iiot_sps.scheduler import Demand, allocate_edf_ff, bucket_size, edf_order

from oracles import brute_force_edf_ff


def test_service_order_by_slack():
    ds = [Demand(0, 0, 0.3e-3, 0, 5), Demand(1, 1, 0.9e-3, 0, 5), Demand(2, 2, 0.5e-3, 0, 5)]
    assert [d.block_id for d in edf_order(ds)] == [0, 2, 1]


def test_two_pass_example():
    ds = [Demand(0, 0, 1e-3, 0, 60), Demand(1, 1, 2e-3, 0, 60)]
    assert bucket_size(60, 0.4) == 24
    assert allocate_edf_ff(ds, 83, 0.4) == [(0, 59), (1, 24)]


def test_single_block_ample_capacity():
    assert allocate_edf_ff([Demand(5, 1, 1e-3, 0, 22)], 83, 0.4) == [(5, 22)]


def test_credit_reduces_need():
    assert allocate_edf_ff([Demand(5, 1, 1e-3, 0, 22, credit=20)], 83, 0.4) == [(5, 2)]


def test_ties_by_generation_then_ue():
    ds = [Demand(0, 3, 1e-3, 0.2, 50), Demand(1, 1, 1e-3, 0.1, 50), Demand(2, 0, 1e-3, 0.1, 50)]
    assert [d.block_id for d in edf_order(ds)] == [2, 1, 0]


def test_matches_brute_force_on_random_instances():
    rng = random.Random(1234)
    for _ in range(1000):
        n = rng.randint(0, 6)
        ds = [Demand(i, rng.randint(0, 3), rng.choice([1e-3, 2e-3, 3e-3]), rng.random(),
                     rbs := rng.randint(1, 30), rng.randint(0, rbs - 1)) for i in range(n)]
        cap = rng.randint(0, 20)
        frac = rng.choice([0.1, 0.25, 0.4, 0.5, 1.0])
        assert allocate_edf_ff(ds, cap, frac) == brute_force_edf_ff(ds, cap, frac)


demand_lists = st.lists(st.tuples(st.integers(1, 60), st.integers(0, 59), st.floats(0, 1e-2)),
                        max_size=8)


@given(demand_lists, st.integers(0, 200), st.sampled_from([0.2, 0.4, 0.7, 1.0]))
def test_capacity_and_bucket_guarantee(raw, cap, frac):
    ds = [Demand(i, i, dl, 0.0, total, min(credit, total - 1))
          for i, (total, credit, dl) in enumerate(raw)]
    grants = dict(allocate_edf_ff(ds, cap, frac))
    assert sum(grants.values()) <= cap
    for d in ds:
        assert grants.get(d.block_id, 0) <= d.remaining
    demand = sum(d.remaining for d in ds)
    assert sum(grants.values()) == min(cap, demand)
    # a block above its bucket implies every block got its full bucket share
    over = [d for d in ds if grants.get(d.block_id, 0) > min(bucket_size(d.rbs_total, frac), d.remaining)]
    if over:
        for d in ds:
            assert grants.get(d.block_id, 0) >= min(bucket_size(d.rbs_total, frac), d.remaining)
