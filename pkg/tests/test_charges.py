import math

import numpy as np
import pytest

from chargedpolymer.charges import (ChargeEnvironment, ChargeLaw,
                                    TruncationSchedule, read_environment_csv,
                                    tau_subsequence, truncate_charges)


def _env(kind, seed, gamma=None):
    return ChargeEnvironment(law=ChargeLaw(kind, gamma=gamma), seed=seed)


def test_mean_and_variance_match_standardization_within_5_se():
    n = 1_000_000
    for kind, gamma in [("rademacher", None), ("gaussian", None),
                        ("student_like", 5.0), ("student_like", 3.0)]:
        q = _env(kind, 42, gamma).charges(n)
        se_mean = q.std(ddof=1) / math.sqrt(n)
        assert abs(q.mean()) < 5 * se_mean, kind
        v = np.var(q, ddof=1)
        se_var = math.sqrt(np.var((q - q.mean()) ** 2, ddof=1) / n)
        assert abs(v - 1.0) < 5 * se_var, kind


def test_student_like_moment_boundary_diagnostic():
    """E|q|^2.5 stabilizes for gamma=3; E|q|^3.5 keeps growing (report)."""
    law = ChargeLaw("student_like", gamma=3.0)
    env = ChargeEnvironment(law=law, seed=9)
    sizes = [10_000, 100_000, 1_000_000]
    fin = [np.mean(np.abs(env.charges(n)) ** 2.5) for n in sizes]
    inf = [np.mean(np.abs(env.charges(n)) ** 3.5) for n in sizes]
    print("E|q|^2.5:", fin, " closed form:", law.abs_moment(2.5))
    print("E|q|^3.5:", inf, " (diverges)")
    assert abs(fin[-1] - law.abs_moment(2.5)) / law.abs_moment(2.5) < 0.25
    assert law.abs_moment(3.5) == np.inf


def test_student_like_requires_gamma_above_two():
    with pytest.raises(ValueError, match="gamma > 2"):
        ChargeLaw("student_like", gamma=2.0)
    with pytest.raises(ValueError, match="gamma"):
        ChargeLaw("rademacher", gamma=3.0)


def test_regeneration_is_bitwise_and_extension_preserves_prefix():
    a = _env("gaussian", 123)
    b = _env("gaussian", 123)
    prefix = a.charges(1000).copy()
    long = b.charges(200_000)
    np.testing.assert_array_equal(prefix, long[:1000])
    np.testing.assert_array_equal(a.charges(200_000), long)


def test_two_consumers_of_one_environment_see_identical_values():
    env = _env("student_like", 7, gamma=3.0)
    first = env.charges(5000)
    second = env.charges(5000)
    assert first is second or np.array_equal(first, second)


def test_values_are_read_only():
    env = _env("rademacher", 1)
    q = env.charges(100)
    with pytest.raises(ValueError):
        q[0] = 99.0


def test_truncation_leaves_rademacher_untouched():
    env = _env("rademacher", 5)
    # 32**0.2 = 2, so the clip level is 2 and |q| = 1 always passes
    out = truncate_charges(env, 32, 0.2)
    np.testing.assert_array_equal(out, env.charges(32))


def test_truncation_level_example():
    from chargedpolymer.charges import truncation_level
    assert truncation_level(32, 0.2) == pytest.approx(2.0)


def test_truncation_recentering_is_zero_for_symmetric_laws():
    for kind, gamma in [("gaussian", None), ("student_like", 3.0)]:
        law = ChargeLaw(kind, gamma=gamma)
        assert law.truncated_mean(1.7) == 0.0


def test_truncation_clips_heavy_charges():
    env = _env("student_like", 17, gamma=3.0)
    n = 4096
    out = truncate_charges(env, n, 0.2)
    level = n ** 0.2
    q = env.charges(n)
    assert np.all(np.abs(out) <= level)
    clipped = np.abs(q) > level
    assert clipped.any()
    np.testing.assert_array_equal(out[clipped], 0.0)
    np.testing.assert_array_equal(out[~clipped], q[~clipped])


def test_beta_outside_range_is_rejected():
    env = _env("gaussian", 3)
    with pytest.raises(ValueError, match=r"\(0, 0.25\)"):
        truncate_charges(env, 100, 0.3)


def test_truncation_schedule_validates_jointly():
    TruncationSchedule(beta=0.2, alpha=0.75, gamma=3.0)
    with pytest.raises(ValueError, match="alpha"):
        TruncationSchedule(beta=0.2, alpha=0.6, gamma=3.0)  # needs > 2/3
    with pytest.raises(ValueError, match="beta"):
        TruncationSchedule(beta=0.25, alpha=0.75)


def test_tau_first_values():
    taus = tau_subsequence(0.6, 100)
    assert taus[0] == 3   # ceil(e)
    assert taus[1] == 5   # ceil(exp(2**0.6))


def test_tau_alpha_bounds_are_named():
    with pytest.raises(ValueError, match=r"\(0.5, 1\)"):
        tau_subsequence(0.4, 100)
    with pytest.raises(ValueError, match="gamma"):
        tau_subsequence(0.6, 100, gamma=3.0)  # needs alpha > 2/3


def test_tau_ratio_tends_to_one():
    taus = tau_subsequence(0.6, 10_000_000).astype(np.float64)
    ratios = taus[1:] / taus[:-1]
    # consecutive ratios fall toward 1 (strictly once the ceil jitter,
    # which shrinks like 1/tau, is below the analytic decrement) ...
    assert np.all(np.diff(ratios[25:]) < 0)
    assert ratios[-1] < 1.11 < ratios[0]
    assert np.all(np.diff(taus) > 0)
    # ... and drop below 1.05 once the analytic increment alpha*n^(alpha-1)
    # does; tau itself is astronomically large there, so work with log tau
    alpha = 0.6
    n = np.arange(1, 20_001, dtype=np.float64)
    log_ratio = (n + 1) ** alpha - n ** alpha
    below = n[np.exp(log_ratio) < 1.05]
    assert below.size and np.all(np.exp(log_ratio[n >= below[0]]) < 1.05)


def test_tau_gap_and_growth_bounds_with_fitted_constants():
    alpha = 0.75
    taus = tau_subsequence(alpha, 10**13).astype(np.float64)
    n = np.arange(1, len(taus) + 1)
    n = n[:40]
    taus = taus[:40]
    gaps = np.diff(taus)
    k1 = np.min(gaps / np.exp(n[:-1] ** alpha / 2.0))
    k2 = np.max(taus / np.exp(n ** alpha))
    print(f"fitted K1={k1:.4f}, K2={k2:.4f}")
    assert k1 > 0.0
    assert np.isfinite(k2)
    assert np.all(gaps >= k1 * np.exp(n[:-1] ** alpha / 2.0))
    assert np.all(taus <= k2 * np.exp(n ** alpha))


def test_environment_csv_round_trip(tmp_path):
    env = _env("gaussian", 31)
    path = tmp_path / "env.csv"
    env.export_csv(path, length=500)
    back = read_environment_csv(path)
    np.testing.assert_array_equal(back, env.charges(500))


def test_environment_npy_round_trip(tmp_path):
    env = _env("student_like", 8, gamma=4.0)
    path = tmp_path / "env.npy"
    env.export_npy(path, length=300)
    np.testing.assert_array_equal(np.load(path), env.charges(300))


def test_pinned_environment_rejects_extension():
    env = _env("gaussian", 2)
    vals = env.charges(100).copy()
    pinned = ChargeEnvironment.from_values(vals, ChargeLaw("gaussian"))
    np.testing.assert_array_equal(pinned.charges(100), vals)
    with pytest.raises(ValueError, match="pinned"):
        pinned.charges(101)
