import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levylab.estimators import mean_local_time
from levylab.grid_rng import Path, SeedSpec, make_grid, sample_paths
from levylab.transform import (iterate_array, iterate_transforms, levy_transform_integral,
                               levy_transform_tanaka, local_time_occupation,
                               rebuild_from_signs, sign_conv, sign_product)


def path_of(values, horizon=1.0):
    return Path(make_grid(horizon, len(values) - 1), np.asarray(values, float))


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
paths_st = st.lists(finite, min_size=1, max_size=40).map(lambda v: path_of([0.0] + v))


@pytest.mark.parametrize("x,expected", [(3.2, 1), (0.0, -1), (-0.0001, -1), (-0.0, -1)])
def test_sign_conv(x, expected):
    assert sign_conv(x) == expected


def test_sign_conv_array():
    np.testing.assert_array_equal(sign_conv(np.array([2.0, 0.0, -1.0])), [1, -1, -1])


@pytest.mark.parametrize("values,expected", [
    ([0, 1, 2], [0, -1, 0]),
    ([0, 1, -1, 2], [0, -1, -3, -6]),
    ([0, 0, 0], [0, 0, 0]),
])
def test_levy_integral_left_sums(values, expected):
    np.testing.assert_array_equal(levy_transform_integral(path_of(values)).values, expected)


def test_iterate_depth_zero():
    stack = iterate_transforms(path_of([0, 1, 2]), 0)
    assert stack.depth == 0 and stack.iterates == []
    assert stack.signs.shape == (0, 2)


def test_iterate_depth_two():
    stack = iterate_transforms(path_of([0, 1, 2]), 2)
    np.testing.assert_array_equal(stack.iterates[0].values, [0, -1, 0])
    np.testing.assert_array_equal(stack.iterates[1].values, [0, 1, 0])
    np.testing.assert_array_equal(stack.signs, [[-1, 1], [-1, -1]])


def test_sign_product_small():
    stack = iterate_transforms(path_of([0, 1, 2]), 2)
    np.testing.assert_array_equal(sign_product(stack, 0).h, [1, 1])
    np.testing.assert_array_equal(sign_product(stack, 1).h, [-1, 1])
    np.testing.assert_array_equal(sign_product(stack, 2).h, [1, -1])
    with pytest.raises(ValueError):
        sign_product(stack, 3)


@settings(max_examples=200)
@given(paths_st, st.integers(0, 6))
def test_rebuild_identity(p, depth):
    stack = iterate_transforms(p, depth)
    for n in range(depth + 1):
        h = sign_product(stack, n).h
        assert set(np.unique(h)) <= {-1, 1}
        np.testing.assert_allclose(rebuild_from_signs(stack, n).values, stack.values[n],
                                   rtol=0, atol=1e-12)
        # carried increments make the regrouping exact, not just close
        if n:
            np.testing.assert_array_equal(rebuild_from_signs(stack, n).values, stack.values[n])


@settings(max_examples=200)
@given(paths_st, st.integers(1, 6))
def test_increments_flip_only(p, depth):
    stack = iterate_transforms(p, depth)
    base_inc = np.diff(stack.values[0])
    carried = np.stack([sign_product(stack, n).h * base_inc for n in range(depth + 1)])
    # the carried increments differ from the base ones by exact sign flips only
    np.testing.assert_array_equal((carried**2).sum(axis=-1), (base_inc**2).sum())
    inc = np.diff(stack.values, axis=-1)
    np.testing.assert_allclose(inc, carried, rtol=0, atol=1e-12)
    # the stack agrees with repeated single transforms up to cumsum regrouping
    q = p
    for n in range(1, depth + 1):
        q = levy_transform_integral(q)
        np.testing.assert_allclose(q.values, stack.values[n], atol=1e-9)
        q = Path(q.grid, stack.values[n])


def test_batch_matches_single(seeds):
    g = make_grid(1.0, 100)
    base = sample_paths(g, seeds, range(5))
    values, signs = iterate_array(base, 4)
    for b in range(5):
        stack = iterate_transforms(Path(g, base[b]), 4)
        np.testing.assert_array_equal(values[b], stack.values)
        np.testing.assert_array_equal(signs[b], stack.signs)


def test_local_time_single_visit():
    p = path_of([0, 1, 2, 3, 4.0])
    lt = local_time_occupation(p, 0.5)
    dt = p.grid.dt
    np.testing.assert_allclose(lt.L, [0] + [dt / 1.0] * 4)
    assert lt.L[-1] == pytest.approx(dt / (2 * 0.5))


def test_local_time_all_zero():
    p = path_of([0.0] * 9, horizon=2.0)
    lt = local_time_occupation(p, 0.1)
    assert lt.L[-1] == pytest.approx(2.0 / 0.2)
    assert lt.L[0] == 0


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_local_time_rejects_bandwidth(eps):
    with pytest.raises(ValueError):
        local_time_occupation(path_of([0, 1.0]), eps)
    with pytest.raises(ValueError):
        levy_transform_tanaka(path_of([0, 1.0]), eps)


@given(paths_st, st.floats(1e-3, 5))
def test_local_time_nondecreasing(p, eps):
    L = local_time_occupation(p, eps).L
    assert L[0] == 0 and np.all(np.diff(L) >= 0)


def test_tanaka_all_zero():
    p = path_of([0.0] * 5)
    eps = 0.1
    dt = p.grid.dt
    np.testing.assert_allclose(levy_transform_tanaka(p, eps).values,
                               -np.arange(5) * dt / (2 * eps))


def test_tanaka_positive_path():
    p = path_of([0, 0.5, 0.7, 0.6, 0.9])
    eps = 0.1
    out = levy_transform_tanaka(p, eps).values
    expected = p.values - p.grid.dt / (2 * eps)
    np.testing.assert_allclose(out[1:], expected[1:])


@pytest.mark.slow
def test_local_time_mean_matches_abs_terminal():
    # E L_1 = E|B_1| = sqrt(2/pi); the brute-force E|B_1| below uses plain normals
    g = make_grid(1.0, 2**16)
    L1 = mean_local_time(10_000, g, SeedSpec(11, "local-time"), eps=math.sqrt(g.dt))
    brute = np.abs(np.random.default_rng(5).standard_normal(10**6)).mean()
    assert brute == pytest.approx(math.sqrt(2 / math.pi), abs=3e-3)
    assert L1.value == pytest.approx(math.sqrt(2 / math.pi), rel=0.10)
