import math

import numpy as np
import pytest

from onoma.allocation import (InfeasibleError, PowerVector,
                              SortedUserChannels, fpa, grpa, make_allocator,
                              optimal_search, sort_users)
from onoma.link import rate, sinr_noma


def test_sort_users_basic():
    ch = sort_users([0.5, 0.2, 0.9])
    assert ch.gains == (0.2, 0.5, 0.9)
    assert ch.original_indices == (1, 0, 2)


def test_sort_users_tie_break_by_id():
    ch = sort_users([0.3, 0.3])
    assert ch.original_indices == (0, 1)


def test_sort_users_single():
    ch = sort_users([7e-6])
    assert ch.gains == (7e-6,)
    assert ch.original_indices == (0,)


def test_sort_users_empty():
    with pytest.raises(ValueError):
        sort_users([])


def test_sorted_channels_invariants():
    with pytest.raises(ValueError):
        SortedUserChannels(gains=(0.5, 0.2), original_indices=(0, 1))
    with pytest.raises(ValueError):
        SortedUserChannels(gains=(0.0, 0.0), original_indices=(0, 1))
    with pytest.raises(ValueError):
        SortedUserChannels(gains=(0.1, 0.2), original_indices=(0, 2))


def test_fpa_two_users():
    pv = fpa(0.5, 2, 1.0)
    assert pv.powers[0] == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert pv.powers[1] == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_fpa_single_user_takes_budget():
    assert fpa(0.3, 1, 5.0).powers == (5.0,)


def test_fpa_three_users():
    pv = fpa(0.5, 3, 1.0)
    for got, want in zip(pv.powers, (4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0)):
        assert got == pytest.approx(want, rel=1e-12)


def test_fpa_recurrence_exact():
    pv = fpa(0.37, 5, 2.5)
    for i in range(1, 5):
        assert pv.powers[i] == pv.powers[i - 1] * 0.37  # exact float product


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.2, -0.1])
def test_fpa_alpha_domain(alpha):
    with pytest.raises(ValueError):
        fpa(alpha, 2, 1.0)


def test_fpa_other_domains():
    with pytest.raises(ValueError):
        fpa(0.5, 0, 1.0)
    with pytest.raises(ValueError):
        fpa(0.5, 2, 0.0)


def test_fpa_ignores_gain_values():
    # FPA depends only on (alpha, N, total): same output for any gains
    alloc = make_allocator("fpa", alpha=0.4)
    a = alloc(sort_users([0.1, 0.9, 0.5]), 1e-3, 2.0)
    b = alloc(sort_users([5.0, 0.01, 1.0]), 1e-3, 2.0)
    assert a.powers == b.powers


def test_grpa_two_users():
    pv = grpa(sort_users([1.0, 2.0]), 1.0)
    assert pv.powers[0] == pytest.approx(0.8, rel=1e-12)
    assert pv.powers[1] == pytest.approx(0.2, rel=1e-12)


def test_grpa_equal_gains_equal_powers():
    for c in (1e-6, 0.3, 7.0):
        pv = grpa(sort_users([c, c, c]), 1.0)
        for p in pv.powers:
            assert abs(p - 1.0 / 3.0) <= 1e-12


def test_grpa_three_users():
    # unnormalized [1, 1/4, 1/256], so powers are [256, 64, 1] / 321
    pv = grpa(sort_users([1.0, 2.0, 4.0]), 1.0)
    for got, want in zip(pv.powers, (256.0 / 321.0, 64.0 / 321.0, 1.0 / 321.0)):
        assert got == pytest.approx(want, rel=1e-12)


def test_grpa_recurrence_holds_after_scaling():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        gains = np.sort(rng.uniform(0.05, 3.0, n))
        total = float(rng.uniform(0.1, 10.0))
        ch = sort_users(gains)
        pv = grpa(ch, total)
        h1 = ch.gains[0]
        for i in range(2, n + 1):
            expected = (h1 / ch.gains[i - 1]) ** i * pv.powers[i - 2]
            assert pv.powers[i - 1] == pytest.approx(expected, rel=1e-12)


def test_grpa_zero_gain_rejected():
    with pytest.raises(ValueError):
        grpa(sort_users([0.0, 1.0]), 1.0)


def test_grpa_single_user():
    assert grpa(sort_users([0.5]), 3.0).powers == (3.0,)


def test_order_compliance():
    pv = fpa(0.7, 4, 1.0)
    assert all(a > b for a, b in zip(pv.powers, pv.powers[1:]))
    pv = grpa(sort_users([0.2, 0.5, 1.1]), 1.0)
    assert all(a > b for a, b in zip(pv.powers, pv.powers[1:]))


def test_conservation_randomized():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        total = float(rng.uniform(1e-3, 50.0))
        alpha = float(rng.uniform(0.05, 0.95))
        assert abs(math.fsum(fpa(alpha, n, total).powers) - total) \
            <= 1e-12 * total
        gains = np.sort(rng.uniform(0.05, 5.0, n))
        assert abs(math.fsum(grpa(sort_users(gains), total).powers) - total) \
            <= 1e-12 * total


def test_power_vector_invariants():
    with pytest.raises(ValueError):
        PowerVector(powers=(0.5, 0.0), total=0.5)
    with pytest.raises(ValueError):
        PowerVector(powers=(0.2, 0.8), total=1.0)  # increasing
    with pytest.raises(ValueError):
        PowerVector(powers=(0.6, 0.3), total=1.0)  # wrong sum


def test_optimal_search_single_user():
    for objective in ("sum_rate", "max_min_rate", "coverage"):
        pv = optimal_search(sort_users([0.7]), 0.01, 2.0, objective=objective)
        assert pv.powers == (2.0,)


def _objective_oracle(p1, p2, h1, h2, noise, objective):
    # independent inline SINR/rate arithmetic
    s1 = p1 * h1 * h1 / (h1 * h1 * p2 + noise)
    s2 = p2 * h2 * h2 / noise
    r1 = 0.5 * math.log2(1 + s1)
    r2 = 0.5 * math.log2(1 + s2)
    return r1 + r2 if objective == "sum_rate" else min(r1, r2)


def test_optimal_search_matches_finer_grid_oracle():
    rng = np.random.default_rng(23)
    for trial in range(10):
        h1 = float(rng.uniform(0.1, 1.0))
        h2 = float(h1 * rng.uniform(1.0, 4.0))
        noise = float(rng.uniform(1e-3, 0.5))
        total = float(rng.uniform(0.5, 2.0))
        objective = "sum_rate" if trial % 2 else "max_min_rate"
        ch = sort_users([h1, h2])
        pv = optimal_search(ch, noise, total, objective=objective,
                            grid_points=101)
        # brute force at 100x resolution, restricted to the coarse points
        best = None
        for k in range(5100, 10000, 100):
            p1 = k / 10000 * total
            p2 = (10000 - k) / 10000 * total
            obj = _objective_oracle(p1, p2, h1, h2, noise, objective)
            key = (obj, (p1, p2))
            if best is None or key > best:
                best = key
        assert pv.powers[0] == pytest.approx(best[1][0], rel=1e-12)
        assert pv.powers[1] == pytest.approx(best[1][1], rel=1e-12)


def test_optimal_search_max_min_equal_gains_near_bisection_root():
    h, noise, total = 0.8, 0.05, 1.0
    grid_points = 101
    pv = optimal_search(sort_users([h, h]), noise, total,
                        objective="max_min_rate", grid_points=grid_points)

    # bisection on the rate-equality condition r1(p1) = r2(p1)
    def gap(p1):
        s1 = p1 * h * h / (h * h * (total - p1) + noise)
        s2 = (total - p1) * h * h / noise
        return math.log2(1 + s1) - math.log2(1 + s2)

    lo, hi = total / 2 + 1e-9, total - 1e-9
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    p_star = 0.5 * (lo + hi)
    step = total / (grid_points - 1)
    assert abs(pv.powers[0] - p_star) <= step


def test_optimal_search_dominates_fpa_and_grpa():
    rng = np.random.default_rng(31)
    for _ in range(20):
        h1 = float(rng.uniform(0.1, 1.0))
        h2 = float(h1 * rng.uniform(1.2, 5.0))
        noise = float(rng.uniform(1e-3, 0.3))
        total = 1.0
        ch = sort_users([h1, h2])
        pv = optimal_search(ch, noise, total, objective="sum_rate",
                            grid_points=101)
        obj_opt = sum(rate(sinr_noma(i, pv, ch.gains[i], noise))
                      for i in range(2))
        for cand in (fpa(0.3, 2, total), grpa(ch, total)):
            obj_cand = sum(rate(sinr_noma(i, cand, ch.gains[i], noise))
                           for i in range(2))
            assert obj_opt >= obj_cand - 1e-12


def test_optimal_search_respects_min_rates():
    ch = sort_users([0.5, 1.0])
    noise, total = 0.01, 1.0
    floor = 0.8
    pv = optimal_search(ch, noise, total, objective="sum_rate",
                        min_rates=[floor, floor], grid_points=101)
    for i in range(2):
        assert rate(sinr_noma(i, pv, ch.gains[i], noise)) >= floor


def test_optimal_search_infeasible():
    with pytest.raises(InfeasibleError):
        optimal_search(sort_users([0.5, 1.0]), 0.01, 1.0,
                       objective="sum_rate", min_rates=[50.0, 50.0],
                       grid_points=101)


def test_optimal_search_three_users_runs_and_conserves():
    ch = sort_users([0.2, 0.5, 1.0])
    pv = optimal_search(ch, 0.01, 1.0, objective="max_min_rate",
                        grid_points=51)
    assert len(pv) == 3
    assert abs(math.fsum(pv.powers) - 1.0) <= 1e-12
    assert all(a > b for a, b in zip(pv.powers, pv.powers[1:]))


def test_optimal_search_deterministic():
    ch = sort_users([0.4, 0.4])  # tie-heavy instance
    a = optimal_search(ch, 0.02, 1.0, objective="max_min_rate")
    b = optimal_search(ch, 0.02, 1.0, objective="max_min_rate")
    assert a.powers == b.powers


def test_optimal_search_validates():
    ch = sort_users([0.5, 1.0])
    with pytest.raises(ValueError):
        optimal_search(ch, 0.01, 1.0, grid_points=1)
    with pytest.raises(ValueError):
        optimal_search(ch, 0.01, 1.0, objective="nope")
    with pytest.raises(ValueError):
        optimal_search(ch, -1.0, 1.0)


def test_make_allocator_unknown():
    with pytest.raises(ValueError):
        make_allocator("water_filling")
