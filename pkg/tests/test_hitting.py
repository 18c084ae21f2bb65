import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brute import brute_tau
from levylab.grid_rng import Path, SeedSpec, make_grid, sample_paths
from levylab.hitting import (crossing_events, first_hits, tau_estimate,
                             zero_crossing_intervals)
from levylab.transform import iterate_array, iterate_transforms


def path_of(values):
    return Path(make_grid(1.0, len(values) - 1), np.asarray(values, float))


def test_zero_crossings_basic():
    np.testing.assert_array_equal(zero_crossing_intervals(path_of([0, 1, -1, 2])), [0, 1, 2])


def test_zero_crossings_positive_path():
    assert zero_crossing_intervals(path_of([1, 2, 3, 1.5])).size == 0


def test_zero_crossings_last_interval_only():
    p = path_of([0, -1, 1, -1, 1])
    np.testing.assert_array_equal(zero_crossing_intervals(p, 1 - p.grid.dt), [3])


def test_zero_crossings_rejects_from_time():
    with pytest.raises(ValueError):
        zero_crossing_intervals(path_of([0, 1]), 1.0)


# beta^0 = [0, .5, 1.2, 1.5] gives beta^1 = [0, -.5, .2, .5] and beta^2 = [0, .5, -.2, .1]
HAND_BASE = [0.0, 0.5, 1.2, 1.5]


def test_hand_stack_iterates():
    stack = iterate_transforms(path_of(HAND_BASE), 2)
    np.testing.assert_allclose(stack.values[1], [0, -0.5, 0.2, 0.5])
    np.testing.assert_allclose(stack.values[2], [0, 0.5, -0.2, 0.1])


def test_hand_stack_hit_first_order():
    # beta^1 crosses on [1/3, 2/3]; |beta^0| >= .5 there beats 0.5 * sqrt(1/3)
    stack = iterate_transforms(path_of(HAND_BASE), 1)
    res = tau_estimate(stack, 0.5, 0.5)
    assert res.hit and not res.censored
    assert res.n_star == 1
    assert res.tau_hat == pytest.approx(2 / 3)
    assert brute_tau(stack.values.tolist(), 0.5, 0.5) == (True, pytest.approx(2 / 3), 1)


def test_hand_stack_censored_then_hit_with_depth():
    stack1 = iterate_transforms(path_of(HAND_BASE), 1)
    res = tau_estimate(stack1, 0.5, 1.0)
    assert res.censored and not res.hit and res.n_star is None
    # one more iterate crosses on the final interval where the barrier is 0
    stack2 = iterate_transforms(path_of(HAND_BASE), 2)
    res = tau_estimate(stack2, 0.5, 1.0)
    assert res.hit and res.n_star == 2 and res.tau_hat == 1.0


def test_huge_barrier_leaves_only_final_interval():
    g = make_grid(1.0, 256)
    base = sample_paths(g, SeedSpec(5, "barrier"), range(200))
    values, _ = iterate_array(base, 4)
    hits = 0
    for b in range(200):
        v = values[b]
        res = tau_estimate(iterate_transforms(Path(g, base[b]), 4), 0.3, 1e6)
        expected_n = next((n for n in range(1, 5)
                           if v[n, -2] * v[n, -1] <= 0 and np.all(v[:n, -2:] != 0)), None)
        assert res.hit == (expected_n is not None)
        assert res.n_star == expected_n
        if res.hit:
            assert res.tau_hat == 1.0
            hits += 1
    assert hits > 0


def test_r_next_to_horizon_scans_final_interval():
    p = path_of([0, 1, 2, 3, -1.0])
    stack = iterate_transforms(p, 1)
    r = 1 - p.grid.dt
    # beta^1 = [0, -1, 0, 1, -3] crosses on the last interval; beta^0 = 3, -1 is nonzero
    res = tau_estimate(stack, r, 5.0)
    assert res.hit and res.n_star == 1 and res.tau_hat == 1.0


def test_errors():
    stack0 = iterate_transforms(path_of(HAND_BASE), 0)
    with pytest.raises(ValueError):
        tau_estimate(stack0, 0.5, 1.0)
    stack = iterate_transforms(path_of(HAND_BASE), 1)
    for r, C in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)]:
        with pytest.raises(ValueError):
            tau_estimate(stack, r, C)
    g2 = make_grid(2.0, 3)
    with pytest.raises(ValueError):
        tau_estimate(iterate_transforms(Path(g2, np.array(HAND_BASE)), 1), 0.5, 1.0)


small_values = st.lists(st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 1)),
                        min_size=2, max_size=16)


@settings(max_examples=300, deadline=None)
@given(small_values, st.integers(1, 4), st.floats(0.01, 0.99), st.floats(0.05, 4))
def test_matches_brute_force(vals, depth, r, C):
    p = path_of([0.0] + vals)
    stack = iterate_transforms(p, depth)
    res = tau_estimate(stack, r, C)
    hit, tau_hat, n_star = brute_tau(stack.values.tolist(), r, C)
    assert res.hit == hit and res.n_star == n_star
    assert res.tau_hat == pytest.approx(tau_hat)
    if res.hit:
        assert r < res.tau_hat <= 1.0 and 1 <= res.n_star <= depth


@settings(max_examples=100, deadline=None)
@given(small_values, st.floats(0.01, 0.99), st.floats(0.05, 3), st.floats(0.05, 3))
def test_monotone_in_depth_and_C(vals, r, C1, C2):
    p = path_of([0.0] + vals)
    values, _ = iterate_array(p.values, 6)
    events = crossing_events(values)
    lo, hi = sorted((C1, C2))
    res_lo = first_hits(events, p.grid, r, lo, range(1, 7))
    res_hi = first_hits(events, p.grid, r, hi, range(1, 7))
    prev_hit, prev_i = False, np.inf
    for N in range(1, 7):
        hit, i, _ = res_lo[N]
        assert hit[0] >= prev_hit
        if hit[0]:
            assert i[0] <= prev_i
            prev_i = i[0]
        prev_hit = hit[0]
        assert res_hi[N][0][0] <= res_lo[N][0][0]


def test_batch_agrees_with_single(seeds):
    g = make_grid(1.0, 64)
    base = sample_paths(g, seeds, range(50))
    values, _ = iterate_array(base, 4)
    got = first_hits(crossing_events(values), g, 0.4, 0.8, [4])[4]
    for b in range(50):
        res = tau_estimate(iterate_transforms(Path(g, base[b]), 4), 0.4, 0.8)
        assert got[0][b] == res.hit
        if res.hit:
            assert g.times[got[1][b] + 1] == res.tau_hat and got[2][b] == res.n_star
