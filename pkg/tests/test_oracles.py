import math

import numpy as np
import pytest

from chargedpolymer import simulate
from chargedpolymer.oracles import (MomentSpec, OracleTable, _PathEnumeration,
                                    annealed_second_moment,
                                    brute_quenched_moment, chi_identity_check,
                                    enumerate_slot_partitions,
                                    partition_decomposition_check,
                                    partition_moment, return_probabilities,
                                    sigma2, superpartition,
                                    weighted_tail_bound)
from chargedpolymer.walks import make_step_law


def test_d1_srw_small_return_probabilities():
    table = return_probabilities(make_step_law("srw", 1), 6)
    assert table.p0[2] == pytest.approx(0.5, abs=1e-14)
    assert table.p0[4] == pytest.approx(3.0 / 8.0, abs=1e-14)
    assert table.p0[1] == 0.0 and table.p0[3] == 0.0
    assert table.period == 2


def test_d2_srw_two_step_return():
    table = return_probabilities(make_step_law("srw", 2), 4)
    assert table.p0[2] == pytest.approx(0.25, abs=1e-14)


def test_convolution_matches_binomial_for_d1_srw():
    law = make_step_law("srw", 1)
    box = return_probabilities(law, 40, method="box")
    binom = return_probabilities(law, 40, method="axis")
    assert np.max(np.abs(box.p0 - binom.p0)) < 1e-12


def test_convolution_matches_axis_in_higher_dimensions():
    for kind, d, lazy, mm in (("srw", 2, 0.0, 14), ("lazy_srw", 2, 0.5, 12),
                              ("srw", 3, 0.0, 10), ("lazy_srw", 3, 0.25, 8)):
        law = make_step_law(kind, d, lazy)
        box = return_probabilities(law, mm, method="box")
        axis = return_probabilities(law, mm, method="axis")
        assert np.max(np.abs(box.p0 - axis.p0)) < 1e-13, (kind, d)


def test_memory_budget_rejection_names_feasible_maximum():
    law = make_step_law("srw", 3)
    with pytest.raises(MemoryError, match="feasible maximum"):
        return_probabilities(law, 500, method="box",
                             memory_budget=10_000_000)


def test_green_partial_monotone_and_tail_bound_shrinks():
    law = make_step_law("lazy_srw", 3, 0.5)
    t1 = return_probabilities(law, 200)
    t2 = return_probabilities(law, 800)
    assert t2.green_partial > t1.green_partial
    assert t2.tail_bound < t1.tail_bound


def test_return_probability_invariant_under_coordinate_permutation():
    sup = [((1, 0), 0.35), ((-1, 0), 0.35), ((0, 1), 0.15), ((0, -1), 0.15)]
    perm = [((0, 1), 0.35), ((0, -1), 0.35), ((1, 0), 0.15), ((-1, 0), 0.15)]
    a = return_probabilities(make_step_law("custom", 2, custom_support=sup), 12)
    b = return_probabilities(make_step_law("custom", 2, custom_support=perm), 12)
    np.testing.assert_allclose(a.p0, b.p0, atol=1e-15)


def test_sigma2_d2_closed_forms():
    srw = make_step_law("srw", 2)
    lazy = make_step_law("lazy_srw", 2, 0.5)
    assert sigma2(2, srw, None, "annealed_d2").value \
        == pytest.approx(1.0 / math.pi, rel=1e-12)
    assert sigma2(2, lazy, None, "annealed_d2").value \
        == pytest.approx(2.0 / math.pi, rel=1e-12)


def test_sigma2_d3_srw_summed_return_series():
    # Green's function of the simple cubic walk gives sum_{m>=1} P ~ 0.5164
    law = make_step_law("srw", 3)
    table = return_probabilities(law, 2000)
    res = sigma2(3, law, table, "fclt_given_s")
    assert res.value == pytest.approx(0.516386, abs=5e-4)
    assert res.certified_error is not None


def test_sigma2_variant_dimension_mismatch():
    law3 = make_step_law("srw", 3)
    table3 = return_probabilities(law3, 50)
    with pytest.raises(ValueError, match="d=2"):
        sigma2(3, law3, table3, "annealed_d2")
    with pytest.raises(ValueError, match="d>=3|d underlying|requires d>=3"):
        sigma2(2, make_step_law("srw", 2), None, "quenched_recentred_dge3")


def test_quenched_recentred_sigma2_below_summed_series():
    law = make_step_law("lazy_srw", 3, 0.5)
    table = return_probabilities(law, 2000)
    full = sigma2(3, law, table, "fclt_given_s").value
    recentred = sigma2(3, law, table, "quenched_recentred_dge3").value
    assert 0.0 < recentred < full


def test_chi_identity_for_transient_simple_walks():
    for d in (3, 4, 5):
        law = make_step_law("srw", d)
        table = return_probabilities(law, 600 if d == 3 else 300)
        res = chi_identity_check(table, tol=1e-6)
        assert res.passed, (d, res)


def test_chi_identity_synthetic_tables():
    law = make_step_law("srw", 3)
    # instantly escaping: no returns at all
    p0 = np.zeros(11); p0[0] = 1.0
    inst = OracleTable(law=law, max_m=10, p0=p0, period=1, green_partial=0.0,
                       tail_bound=0.0, chi=1.0, method="synthetic")
    res = chi_identity_check(inst)
    assert res.lhs == pytest.approx(0.0, abs=1e-12)
    assert res.rhs == 0.0 and res.passed

    # geometric returns summing to 1: chi = 1/2
    m = np.arange(0, 61)
    p0 = 0.5 ** m.astype(float); p0[0] = 1.0
    geo = OracleTable(law=law, max_m=60, p0=p0, period=1,
                      green_partial=float(p0[1:].sum()), tail_bound=0.0,
                      chi=1.0 / (1.0 + float(p0[1:].sum())),
                      method="synthetic")
    res = chi_identity_check(geo)
    assert res.lhs == pytest.approx(1.0, abs=1e-9)
    assert res.rhs == pytest.approx(1.0, abs=1e-12)
    assert res.passed


def test_annealed_second_moment_hand_values():
    table = return_probabilities(make_step_law("srw", 1), 10)
    # n=4: 3*P(S_1=0) + 2*P(S_2=0) + 1*P(S_3=0) = 2 * 1/2 = 1
    assert annealed_second_moment(table, 4) == pytest.approx(1.0, abs=1e-14)
    assert annealed_second_moment(table, 1) == 0.0
    with pytest.raises(ValueError, match="depth"):
        annealed_second_moment(table, 12)


def test_annealed_second_moment_d1_scaling_limit():
    law = make_step_law("srw", 1)
    target = (2.0 / 3.0) * math.sqrt(2.0 / math.pi)
    for n in (10_000, 100_000):
        table = return_probabilities(law, n - 1)
        val = annealed_second_moment(table, n) / n ** 1.5
        assert abs(val - target) / target < 0.05, n


def test_weighted_tail_bound_vanishes_at_full_depth():
    law = make_step_law("lazy_srw", 3, 0.5)
    table = return_probabilities(law, 300)
    assert weighted_tail_bound(table, 200, 199) == 0.0
    assert weighted_tail_bound(table, 200, 50) > 0.0


def test_brute_moment_single_pair_example():
    lazy1 = make_step_law("lazy_srw", 1, 0.5)
    spec = MomentSpec(p_vec=(1,), times=(1.0,), n=2, charges=(1.0, 1.0))
    # two ordered pairs, each with coincidence probability 1/2
    assert brute_quenched_moment(spec, lazy1) == pytest.approx(1.0, abs=1e-12)


def test_brute_moment_zero_charges():
    lazy1 = make_step_law("lazy_srw", 1, 0.5)
    spec = MomentSpec(p_vec=(2,), times=(1.0,), n=3, charges=(0.0,) * 3)
    assert brute_quenched_moment(spec, lazy1) == 0.0


def test_moment_spec_size_caps():
    with pytest.raises(ValueError, match="<= 4"):
        MomentSpec(p_vec=(3, 2), times=(0.5, 1.0), n=2, charges=(1.0,) * 2)
    with pytest.raises(ValueError, match="cap"):
        MomentSpec(p_vec=(1,), times=(2.0,), n=6, charges=(1.0,) * 12)
    with pytest.raises(ValueError, match="increasing"):
        MomentSpec(p_vec=(1, 1), times=(1.0, 0.5), n=4, charges=(1.0,) * 4)


def test_admissible_partition_counts():
    assert len(enumerate_slot_partitions((1,))) == 1
    assert len(enumerate_slot_partitions((2,))) == 7       # 15 - 5 - 5 + 2
    assert len(enumerate_slot_partitions((1, 1))) == 7


def test_no_partition_coblocks_a_slot():
    for p_vec in ((2,), (1, 1)):
        for part in enumerate_slot_partitions(p_vec):
            for block in part:
                labels = {(k, l) for (k, l, _) in block}
                assert len(labels) == len(block)


def test_superpartition_blocks_have_size_at_least_two():
    for p_vec in ((1,), (2,), (1, 1)):
        for part in enumerate_slot_partitions(p_vec):
            assert min(len(c) for c in superpartition(part)) >= 2


def test_decomposition_matches_brute_force():
    lazy1 = make_step_law("lazy_srw", 1, 0.5)
    rng = np.random.default_rng(2)
    for p_vec, times, n in [((1,), (1.0,), 6), ((2,), (1.0,), 5),
                            ((1, 1), (0.5, 1.0), 6)]:
        q = tuple(rng.standard_normal(10))
        spec = MomentSpec(p_vec=p_vec, times=times, n=n, charges=q)
        res = partition_decomposition_check(spec, lazy1)
        assert res.passed, (p_vec, res)
        assert abs(res.lhs - res.rhs) <= 1e-9 * max(1.0, abs(res.rhs))


def test_partition_moments_respect_time_bounds():
    """Blocks touching only the later slot may use later times."""
    lazy1 = make_step_law("lazy_srw", 1, 0.5)
    q = tuple(np.linspace(-1.0, 1.0, 8))
    spec = MomentSpec(p_vec=(1, 1), times=(0.25, 1.0), n=8, charges=q)
    parts = enumerate_slot_partitions((1, 1))
    paths = _PathEnumeration(lazy1, spec.horizon)
    total = sum(partition_moment(spec, lazy1, p, paths) for p in parts)
    assert total == pytest.approx(brute_quenched_moment(spec, lazy1, paths),
                                  abs=1e-12)


def test_brute_moment_against_monte_carlo():
    """E[(2 K_n)^p | q] by simulation matches the exact enumeration."""
    lazy1 = make_step_law("lazy_srw", 1, 0.5)
    rng = np.random.default_rng(5)
    q = tuple(rng.standard_normal(6))
    n = 6
    spec = MomentSpec(p_vec=(2,), times=(1.0,), n=n, charges=q)
    exact = brute_quenched_moment(spec, lazy1)
    reps = 200_000
    qv = np.asarray(q)
    vals = np.empty(reps)
    for r in range(reps):
        pos = np.cumsum(lazy1.sample_steps(rng, n)[:, 0])
        k_n = simulate.d1_energy_final(pos, qv)
        vals[r] = (2.0 * k_n) ** 2
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - exact) < 4.0 * se


def test_table_csv_and_summary(tmp_path):
    law = make_step_law("srw", 3)
    table = return_probabilities(law, 50)
    table.to_csv(tmp_path / "p0.csv")
    lines = (tmp_path / "p0.csv").read_text().strip().splitlines()
    assert lines[0] == "m,return_probability"
    assert len(lines) == 51
    summary = table.summary()
    assert summary["d"] == 3
    assert "sigma2_quenched_recentred_dge3" in summary
