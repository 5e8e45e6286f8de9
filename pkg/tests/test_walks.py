import numpy as np
import pytest

from chargedpolymer.walks import (PolymerWalkState, advance, make_step_law,
                                  reset_window)


def test_srw_d2_covariance_is_half_identity():
    law = make_step_law("srw", 2)
    np.testing.assert_allclose(law.covariance, np.eye(2) / 2, atol=1e-15)


def test_lazy_srw_halves_the_covariance():
    law = make_step_law("lazy_srw", 2, 0.5)
    np.testing.assert_allclose(law.covariance, np.eye(2) / 4, atol=1e-15)


def test_probabilities_sum_to_one_and_are_positive():
    for law in (make_step_law("srw", 3), make_step_law("lazy_srw", 1, 0.3)):
        assert abs(law.probabilities.sum() - 1.0) < 1e-12
        assert np.all(law.probabilities > 0)


def test_non_centered_custom_support_is_rejected():
    with pytest.raises(ValueError, match="not centered"):
        make_step_law("custom", 1, custom_support=[((1,), 1.0)])


def test_singular_covariance_is_rejected():
    # steps only along the first axis of Z^2
    support = [((1, 0), 0.5), ((-1, 0), 0.5)]
    with pytest.raises(ValueError, match="[Ss]ingular"):
        make_step_law("custom", 2, custom_support=support)


def test_bad_probabilities_are_rejected():
    with pytest.raises(ValueError, match="sum"):
        make_step_law("custom", 1,
                      custom_support=[((1,), 0.4), ((-1,), 0.4)])


def test_custom_law_accepts_a_centered_asymmetric_support():
    support = [((2,), 0.1), ((-1,), 0.4), ((1,), 0.4), ((-2,), 0.1)]
    law = make_step_law("custom", 1, custom_support=support)
    assert law.covariance[0, 0] == pytest.approx(0.8 + 0.8)


def test_hand_path_local_times():
    # S_1 = 1, S_2 = 0, S_3 = 1: two visits to 1, one to 0
    st = PolymerWalkState(d=1)
    for step in [(1,), (-1,), (1,)]:
        st.apply_step(step)
    assert st.local_times == {(1,): 2, (0,): 1}
    assert st.self_intersections[2] == 5
    assert st.max_local_time == 2


def test_zero_steps_state_is_empty():
    st = PolymerWalkState(d=2, p_max=4)
    assert st.self_intersections == {2: 0, 3: 0, 4: 0}
    assert st.max_local_time == 0
    assert st.window_self_intersection == 0


def test_local_times_sum_to_n_on_random_paths():
    rng = np.random.default_rng(1)
    law = make_step_law("lazy_srw", 2, 0.4)
    st = PolymerWalkState(d=2)
    for _ in range(500):
        advance(st, law, rng)
    assert sum(st.local_times.values()) == 500


def test_incremental_silt_matches_recomputation_on_many_paths():
    rng = np.random.default_rng(7)
    for d, kind, lazy in [(1, "srw", 0.0), (2, "lazy_srw", 0.5),
                          (3, "srw", 0.0)]:
        law = make_step_law(kind, d, lazy)
        for _ in range(400):
            st = PolymerWalkState(d=d, p_max=4)
            for _ in range(int(rng.integers(1, 60))):
                advance(st, law, rng)
            assert st.self_intersections == st.recompute_self_intersections()


def test_pair_silt_at_least_n_with_equality_iff_no_revisit():
    rng = np.random.default_rng(3)
    law = make_step_law("srw", 3)
    for _ in range(200):
        st = PolymerWalkState(d=3)
        n = int(rng.integers(1, 40))
        for _ in range(n):
            advance(st, law, rng)
        assert st.self_intersections[2] >= n
        revisited = any(c > 1 for c in st.local_times.values())
        assert (st.self_intersections[2] == n) == (not revisited)


def test_reset_window_requires_current_time():
    st = PolymerWalkState(d=1)
    st.apply_step((1,))
    with pytest.raises(ValueError, match="current time"):
        reset_window(st, 0)


def test_window_counters_restart():
    st = PolymerWalkState(d=1)
    for step in [(1,), (1,)]:
        st.apply_step(step)
    reset_window(st, 2)
    assert st.window_self_intersection == 0
    # two returns to the same site inside the window
    st.apply_step((1,))
    st.apply_step((-1,))
    st.apply_step((1,))
    # window visits: 3 once, 2 once, 3 again -> counts {3: 2, 2: 1}
    assert st.window_self_intersection == 2 ** 2 + 1


def test_window_silt_matches_law_of_fresh_walk():
    """I over a window of length m has the law of I_m from the origin."""
    from chargedpolymer.stats import ks_two_sample
    rng = np.random.default_rng(11)
    law = make_step_law("lazy_srw", 2, 0.5)
    a, m, reps = 30, 40, 400
    windowed = []
    fresh = []
    for _ in range(reps):
        st = PolymerWalkState(d=2)
        for _ in range(a):
            advance(st, law, rng)
        reset_window(st, a)
        for _ in range(m):
            advance(st, law, rng)
        windowed.append(st.window_self_intersection)
        st2 = PolymerWalkState(d=2)
        for _ in range(m):
            advance(st2, law, rng)
        fresh.append(st2.self_intersections[2])
    _, p = ks_two_sample(np.array(windowed, float), np.array(fresh, float))
    assert p > 1e-3


def test_d2_maximum_local_time_diagnostic_reported():
    """99th percentile of N*_n / (log n)^2 stays bounded (report-only)."""
    from chargedpolymer import simulate
    for n in (2000, 8000):
        params = {"walk_kind": "lazy_srw", "d": 2, "lazy_weight": 0.5,
                  "n": n, "mode": "annealed", "charge_kind": "rademacher",
                  "gamma": None, "master_seed": 77}
        vals = simulate.run_replicas("silt_final", params, 300, 1)
        n_star = vals[:, 1]
        q99 = np.quantile(n_star / np.log(n) ** 2, 0.99)
        mean_ratio = np.mean(vals[:, 0] / (n * np.log(n)))
        print(f"n={n}: q99 N*/(log n)^2 = {q99:.3f}, "
              f"mean I/(n log n) = {mean_ratio:.3f}")
        assert np.isfinite(q99) and q99 < 10.0
        assert np.isfinite(mean_ratio) and mean_ratio < 10.0
