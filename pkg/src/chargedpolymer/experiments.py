"""Experiment runners: configured Monte Carlo campaigns with verdicts.

Each runner turns an ``ExperimentConfig`` into a list of ``TestReport``s
plus headline values.  Reports whose ``passed`` is a boolean are gates
(they drive the CLI exit code); ``passed=None`` rows are report-only
diagnostics.  Every random number in a run derives from the master seed
and the explicit environment seeds, so reruns are bit-identical for any
worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import simulate, stats
from .charges import (ChargeEnvironment, ChargeLaw, check_alpha, check_beta,
                      tau_subsequence, truncation_level)
from .energy import quenched_mean
from .oracles import (annealed_second_moment, cached_table, chi_identity_check,
                      MomentSpec, partition_decomposition_check,
                      enumerate_slot_partitions, return_probabilities, sigma2)
from .stats import ReplicaEnsemble, TestReport, normalization_factor
from .walks import make_step_law

EXPERIMENTS = (
    "oracle_check", "annealed_clt", "quenched_clt_d2", "quenched_clt_dge3",
    "fclt_given_s", "d1_annealed", "d1_oscillation", "moment_decomposition",
    "truncation_drift",
)


class ConfigError(ValueError):
    """A configuration key violates its documented constraint."""


@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 2
    walk_kind: str = "lazy_srw"
    lazy_weight: float = 0.5
    n: int = 4096
    replicas: int = 1000
    t_grid: tuple = (1.0,)
    charge_kind: str = "rademacher"
    gamma: float | None = None
    beta: float = 0.2
    alpha: float = 0.75
    master_seed: int = 1
    env_seeds: tuple = (101, 102, 103)
    n_grid: tuple = ()
    max_m: int = 0
    workers: int = 1
    tolerances: dict = field(default_factory=dict)

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def charge_law(self) -> ChargeLaw:
        return ChargeLaw(kind=self.charge_kind, gamma=self.gamma)

    def step_law(self):
        lazy = self.lazy_weight if self.walk_kind == "lazy_srw" else 0.0
        return make_step_law(self.walk_kind, self.d, lazy)

    def walk_params(self, **extra) -> dict:
        base = {
            "walk_kind": self.walk_kind, "d": self.d,
            "lazy_weight": self.lazy_weight if self.walk_kind == "lazy_srw"
            else 0.0,
            "charge_kind": self.charge_kind, "gamma": self.gamma,
            "master_seed": self.master_seed,
        }
        base.update(extra)
        return base


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every constraint a runner relies on; name key and bound."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment={cfg.experiment!r} not one of {EXPERIMENTS}")
    if cfg.d < 1:
        raise ConfigError(f"d={cfg.d} must be >= 1")
    if cfg.walk_kind not in ("srw", "lazy_srw"):
        raise ConfigError(f"walk={cfg.walk_kind!r} must be srw or lazy_srw")
    if cfg.walk_kind == "lazy_srw" and not 0.0 < cfg.lazy_weight < 1.0:
        raise ConfigError(
            f"lazy_weight={cfg.lazy_weight} outside the open interval (0, 1)")
    if cfg.n < 2:
        raise ConfigError(f"n={cfg.n} must be >= 2")
    if cfg.replicas < 1:
        raise ConfigError(f"replicas={cfg.replicas} must be >= 1")
    if not cfg.t_grid or any(t <= 0 for t in cfg.t_grid) or \
            any(a >= b for a, b in zip(cfg.t_grid, cfg.t_grid[1:])):
        raise ConfigError(
            f"t_grid={cfg.t_grid} must be strictly increasing and positive")
    try:
        cfg.charge_law()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.experiment in ("truncation_drift",):
        try:
            check_beta(cfg.beta)
            check_alpha(cfg.alpha, cfg.charge_law().gamma_moment)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if cfg.workers < 1:
        raise ConfigError(f"workers={cfg.workers} must be >= 1")
    if cfg.experiment in ("d1_annealed", "d1_oscillation") and cfg.d != 1:
        raise ConfigError(f"experiment {cfg.experiment} requires d=1")
    if cfg.experiment == "quenched_clt_d2" and cfg.d != 2:
        raise ConfigError("experiment quenched_clt_d2 requires d=2")
    if cfg.experiment == "quenched_clt_dge3" and cfg.d < 3:
        raise ConfigError("experiment quenched_clt_dge3 requires d>=3")
    if cfg.d == 1 and cfg.charge_law().gamma_moment <= 6.0:
        # not fatal: the d=1 limit theory asks for a finite sixth moment
        import warnings
        warnings.warn(
            f"d=1 experiment with charge gamma={cfg.gamma}: the sixth "
            f"charge moment is infinite, limit approximations degrade",
            stacklevel=2)


@dataclass
class ExperimentResult:
    experiment: str
    reports: list
    values: dict
    gated_pass: bool
    sample_rows: list = field(default_factory=list)  # (replica, time, value)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "reports": [r.to_dict() for r in self.reports],
            "values": self.values,
            "gated_pass": self.gated_pass,
        }


def _finish(experiment: str, reports, values, sample_rows=None) -> ExperimentResult:
    gated = [r.passed for r in reports if r.passed is not None]
    return ExperimentResult(experiment=experiment, reports=reports,
                            values=values, gated_pass=all(gated) if gated
                            else True, sample_rows=sample_rows or [])


def _variance_with_se(x: np.ndarray) -> tuple:
    """(sample variance, large-sample SE of that estimate)."""
    r = len(x)
    v = float(np.var(x, ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    se = math.sqrt(max(m4 - v * v, 0.0) / r)
    return v, se


def _second_moment_with_se(x: np.ndarray) -> tuple:
    """(mean of squares, its SE); the estimator for centered limit laws."""
    r = len(x)
    sq = x * x
    v = float(sq.mean())
    se = math.sqrt(max(float(sq.var(ddof=1)), 0.0) / r)
    return v, se


# ---------------------------------------------------------------------------
# individual experiments
# ---------------------------------------------------------------------------

def run_oracle_check(cfg: ExperimentConfig) -> ExperimentResult:
    law = cfg.step_law()
    max_m = cfg.max_m or (2000 if cfg.d >= 3 else 4096)
    table = cached_table(law, max_m) if law.kind in ("srw", "lazy_srw") \
        else return_probabilities(law, max_m)
    reports = []
    values = dict(table.summary())

    # exact-method cross-check against dense-box convolution at small m
    # (box cost grows like m**d, so the depth shrinks with dimension)
    m_small = {1: 40, 2: 16, 3: 12}.get(cfg.d, 6)
    small = return_probabilities(law, m_small, method="box")
    gap = float(np.max(np.abs(small.p0 - table.p0[:m_small + 1])))
    reports.append(TestReport(
        name="convolution_cross_check", statistic=gap,
        passed=bool(gap <= 1e-12), tolerance="1e-12 absolute (exact gate)",
        sample_size=m_small, notes="dense-box convolution vs tabulation method"))

    if cfg.d >= 3:
        chi = chi_identity_check(table, tol=cfg.tol("chi_tol", 1e-6))
        reports.append(TestReport(
            name="chi_identity", statistic=chi.gap,
            passed=chi.passed,
            tolerance=f"1e-6 + tail bound ({chi.tolerance:.3e})",
            sample_size=table.max_m,
            details={"lhs": chi.lhs, "rhs": chi.rhs, "chi": table.chi}))
    n_grid = cfg.n_grid or tuple(
        n for n in (100, 1000, min(10000, max_m + 1)) if n - 1 <= max_m)
    values["annealed_second_moments"] = {
        str(n): annealed_second_moment(table, n) for n in n_grid}
    if cfg.d == 2:
        s2 = law.sigma2_local_clt()
        values["oracle_ratio"] = {
            str(n): annealed_second_moment(table, n) / (n * math.log(n) * s2)
            for n in n_grid}
    return _finish(cfg.experiment, reports, values)


def run_annealed_clt(cfg: ExperimentConfig) -> ExperimentResult:
    law = cfg.step_law()
    steps = tuple(max(int(math.floor(cfg.n * t)), 1) for t in cfg.t_grid)
    params = cfg.walk_params(n=cfg.n, checkpoint_steps=steps, mode="annealed")
    samples = simulate.run_replicas("energy_checkpoints", params,
                                    cfg.replicas, cfg.workers)
    table = cached_table(law, cfg.n - 1)
    oracle_var = annealed_second_moment(table, cfg.n)
    k_n = samples[:, -1]
    v, se = _variance_with_se(k_n)
    gate = cfg.tol("variance_se_gate", 4.0)
    reports = [TestReport(
        name="annealed_variance", statistic=v,
        passed=bool(abs(v - oracle_var) <= gate * se),
        tolerance=f"{gate} SE (statistical gate)",
        sample_size=cfg.replicas,
        details={"oracle": oracle_var, "se": se,
                 "deviation_in_se": abs(v - oracle_var) / se})]
    values = {"oracle_second_moment": oracle_var, "empirical_variance": v,
              "mean": float(k_n.mean())}
    rows = [(r, cfg.t_grid[c], float(samples[r, c]))
            for r in range(samples.shape[0]) for c in range(samples.shape[1])]
    return _finish(cfg.experiment, reports, values, rows)


def run_quenched_clt_dge3(cfg: ExperimentConfig) -> ExperimentResult:
    law = cfg.step_law()
    table = cached_table(law, cfg.n - 1)
    s2 = sigma2(cfg.d, law, table, "quenched_recentred_dge3")
    reports = []
    values = {"sigma2": s2.value, "sigma2_certified_error": s2.certified_error}
    rows = []
    ks_passes = 0
    var_ok = True
    p_min = cfg.tol("ks_p_min", 0.01)
    var_rel = cfg.tol("variance_rel_tol", 0.10)
    for ei, env_seed in enumerate(cfg.env_seeds):
        env = ChargeEnvironment(law=cfg.charge_law(), seed=env_seed)
        qm = quenched_mean(env, table, cfg.n)
        params = cfg.walk_params(n=cfg.n, checkpoint_steps=(cfg.n,),
                                 mode="quenched", env_seed=env_seed,
                                 stream_sub=ei)
        k_n = simulate.run_replicas("energy_checkpoints", params,
                                    cfg.replicas, cfg.workers)[:, 0]
        x = (k_n - qm.value) / math.sqrt(cfg.n)
        ks = stats.ks_gaussian(x, s2.value,
                               name=f"ks_env{env_seed}", p_min=p_min)
        ks_passes += bool(ks.passed)
        # the across-environment count below carries the gate; individual
        # KS rows stay informational
        ks.passed = None
        reports.append(ks)
        v, _ = _second_moment_with_se(x)
        ok = abs(v - s2.value) <= var_rel * s2.value
        var_ok &= ok
        reports.append(TestReport(
            name=f"variance_env{env_seed}", statistic=v, passed=bool(ok),
            tolerance=f"{var_rel:.0%} relative (asymptotic gate)",
            sample_size=cfg.replicas,
            notes="second moment about the exact quenched mean",
            details={"sigma2": s2.value,
                     "quenched_mean": qm.value,
                     "recentering_tail_bound": qm.tail_bound}))
        rows += [(r, 1.0, float(val)) for r, val in enumerate(x)]
    need = cfg.tol("ks_env_passes", 2)
    reports.append(TestReport(
        name="ks_environments_passing", statistic=float(ks_passes),
        passed=bool(ks_passes >= need),
        tolerance=f">= {need:g} of {len(cfg.env_seeds)} environments",
        sample_size=len(cfg.env_seeds)))
    return _finish(cfg.experiment, reports, values, rows)


def run_quenched_clt_d2(cfg: ExperimentConfig) -> ExperimentResult:
    law = cfg.step_law()
    s2_clt = law.sigma2_local_clt()
    table = cached_table(law, cfg.n - 1)
    n_grid = cfg.n_grid or (2 ** 12, 2 ** 14, 2 ** 16)
    n_grid = tuple(sorted(set(list(n_grid) + [cfg.n])))
    ratios = {n: annealed_second_moment(table, n) / (n * math.log(n))
              for n in n_grid if n - 1 <= table.max_m}
    gap_rel = {n: abs(r - s2_clt) / s2_clt for n, r in ratios.items()}
    grid_sorted = sorted(gap_rel)
    reports = [TestReport(
        name="oracle_ratio_gap", statistic=gap_rel[grid_sorted[-1]],
        passed=bool(max(gap_rel.values()) <= cfg.tol("oracle_rel_tol", 0.25)
                    and gap_rel[grid_sorted[-1]] < gap_rel[grid_sorted[0]]),
        tolerance="25% of sigma2 and shrinking along the n-grid "
                  "(asymptotic gate)",
        sample_size=len(grid_sorted),
        details={"sigma2": s2_clt,
                 "ratios": {str(n): ratios[n] for n in grid_sorted},
                 "relative_gaps": {str(n): gap_rel[n] for n in grid_sorted}})]
    values = {"sigma2": s2_clt,
              "oracle_ratio": {str(n): r for n, r in ratios.items()}}
    steps = tuple(max(int(math.floor(cfg.n * t)), 1) for t in cfg.t_grid)
    norm = normalization_factor("d2", cfg.n)
    oracle_var_n = ratios[cfg.n]
    # the average quenched variance sits below the annealed second moment
    # by exactly the mean squared quenched mean, sum_m (n-m) p_m^2, an
    # O(1/log n) effect; it is computed here so reports can show it
    m_idx = np.arange(1, cfg.n)
    mean_sq = float(np.dot(cfg.n - m_idx, table.p0[1:cfg.n] ** 2)) \
        / (cfg.n * math.log(cfg.n))
    values["expected_quenched_variance"] = oracle_var_n - mean_sq
    rows = []
    for ei, env_seed in enumerate(cfg.env_seeds):
        params = cfg.walk_params(n=cfg.n, checkpoint_steps=steps,
                                 mode="quenched", env_seed=env_seed,
                                 stream_sub=ei)
        samples = simulate.run_replicas("energy_checkpoints", params,
                                        cfg.replicas, cfg.workers) / norm
        ens = ReplicaEnsemble(mode="quenched", checkpoints=cfg.t_grid,
                              samples=samples, normalization="d2", n=cfg.n,
                              metadata={"env_seed": env_seed,
                                        "law": law.describe()})
        v, se = _variance_with_se(samples[:, -1])
        se_gate = cfg.tol("variance_se_gate", 4.0)
        rel_gate = cfg.tol("variance_rel_tol", 0.25)
        allowed = max(se_gate * se, rel_gate * oracle_var_n)
        reports.append(TestReport(
            name=f"variance_env{env_seed}", statistic=v,
            passed=bool(abs(v - oracle_var_n) <= allowed),
            tolerance=f"{se_gate} SE or {rel_gate:.0%} relative (the "
                      f"quenched-annealed gap closes only logarithmically)",
            sample_size=cfg.replicas,
            details={"oracle": oracle_var_n, "se": se,
                     "deviation_in_se": abs(v - oracle_var_n) / se,
                     "relative_deviation": abs(v - oracle_var_n)
                     / oracle_var_n,
                     "expected_quenched_variance": oracle_var_n - mean_sq,
                     "dev_from_expected_in_se":
                         abs(v - oracle_var_n + mean_sq) / se}))
        if len(cfg.t_grid) >= 2:
            fdd = stats.fdd_covariance(
                ens, s2_clt, rel_tol=cfg.tol("fdd_rel_tol", 0.25),
                se_gate=cfg.tol("fdd_se_gate", 5.0))
            fdd.name = f"fdd_covariance_env{env_seed}"
            reports.append(fdd)
        rows += [(r, cfg.t_grid[c], float(samples[r, c]))
                 for r in range(samples.shape[0])
                 for c in range(samples.shape[1])]
    return _finish(cfg.experiment, reports, values, rows)


def run_fclt_given_s(cfg: ExperimentConfig) -> ExperimentResult:
    law = cfg.step_law()
    if cfg.d == 2:
        s2 = law.sigma2_local_clt()
    else:
        table = cached_table(law, cfg.max_m or min(cfg.n - 1, 50_000))
        s2 = sigma2(cfg.d, law, table, "fclt_given_s").value
    t_grid = cfg.t_grid if len(cfg.t_grid) > 1 else (0.25, 0.5, 1.0)
    rep = stats.qv_convergence(
        cfg.walk_kind, cfg.d,
        cfg.lazy_weight if cfg.walk_kind == "lazy_srw" else 0.0,
        cfg.n, t_grid, cfg.replicas, s2, cfg.master_seed,
        rel_tol=cfg.tolerances.get("qv_rel_tol"),
        analytic_charges=cfg.charge_kind == "rademacher",
        charge_kind=cfg.charge_kind, workers=cfg.workers)
    values = {"sigma2": s2}
    if cfg.d == 2:
        table = cached_table(law, cfg.n - 1)
        values["oracle_ratio"] = annealed_second_moment(table, cfg.n) \
            / (cfg.n * math.log(cfg.n) * s2)
        rep.details["oracle_ratio"] = values["oracle_ratio"]
    return _finish(cfg.experiment, [rep], values)


def run_d1_annealed(cfg: ExperimentConfig) -> ExperimentResult:
    params = cfg.walk_params(n=cfg.n, checkpoint_steps=(cfg.n,),
                             mode="annealed")
    k_n = simulate.run_replicas("energy_checkpoints", params, cfg.replicas,
                                cfg.workers)[:, 0]
    x = k_n / normalization_factor("d1_sqrt", cfg.n)
    limit_params = {"m": cfg.n, "master_seed": cfg.master_seed}
    y = simulate.run_replicas("d1_limit_sample", limit_params, cfg.replicas,
                              cfg.workers)[:, 0]
    d, p = stats.ks_two_sample(x, y)
    p_min = cfg.tol("ks_p_min", 0.01)
    reports = [TestReport(
        name="two_sample_ks_vs_limit_sampler", statistic=d, p_value=p,
        passed=bool(p > p_min), tolerance=f"p > {p_min} (statistical gate)",
        sample_size=cfg.replicas)]
    second = float(np.mean(x * x))
    target = (2.0 / 3.0) * math.sqrt(2.0 / math.pi)
    rel = cfg.tol("second_moment_rel_tol", 0.05)
    table = cached_table(make_step_law("srw", 1), cfg.n - 1)
    oracle = annealed_second_moment(table, cfg.n) / cfg.n ** 1.5
    reports.append(TestReport(
        name="second_moment_vs_limit", statistic=second,
        passed=bool(abs(second - target) <= rel * target),
        tolerance=f"{rel:.0%} of (2/3) sqrt(2/pi) (asymptotic gate)",
        sample_size=cfg.replicas,
        details={"limit_constant": target, "finite_n_oracle": oracle,
                 "sampler_second_moment": float(np.mean(y * y))}))
    values = {"limit_constant": target, "oracle_second_moment_scaled": oracle}
    rows = [(r, 1.0, float(v)) for r, v in enumerate(x)]
    return _finish(cfg.experiment, reports, values, rows)


def run_d1_oscillation(cfg: ExperimentConfig) -> ExperimentResult:
    n_grid = cfg.n_grid or (1000, 31623, 1_000_000)
    reports = []
    exceeds = []
    envelope_rows = {}
    for ei, env_seed in enumerate(cfg.env_seeds):
        rep = stats.d1_quenched_oscillation(
            env_seed, n_grid, cfg.replicas,
            cfg.master_seed + ei, charge_kind=cfg.charge_kind,
            gamma=cfg.gamma, workers=cfg.workers)
        rep.name = f"oscillation_env{env_seed}"
        reports.append(rep)
        exceeds.append(rep.details["d1_exceeds_d2"])
        env_params = cfg.walk_params(
            n=max(n_grid), mode="quenched", env_seed=env_seed,
            walk_kind="srw", d=1, lazy_weight=0.0, stream_sub=9000 + ei)
        envelope = simulate.run_replicas("energy_envelope", env_params, 1, 1)
        envelope_rows[str(env_seed)] = float(envelope[0, 0])
    fraction = float(np.mean(exceeds))
    reports.append(TestReport(
        name="oscillation_fraction", statistic=fraction,
        passed=None,
        tolerance="report-only; comparison target is >= 0.8",
        sample_size=len(cfg.env_seeds),
        notes="fraction of environments where the d=1 grid drift exceeds "
              "the d=2 contrast",
        details={"per_env": exceeds, "lil_envelope": envelope_rows}))
    values = {"oscillation_fraction": fraction,
              "lil_envelope": envelope_rows}
    return _finish(cfg.experiment, reports, values)


def run_moment_decomposition(cfg: ExperimentConfig) -> ExperimentResult:
    law = make_step_law("lazy_srw", 1, cfg.lazy_weight)
    env = ChargeEnvironment(law=cfg.charge_law(), seed=cfg.env_seeds[0])
    q = tuple(float(v) for v in env.charges(10))
    cases = [((1,), (1.0,)), ((2,), (1.0,)), ((1, 1), (0.5, 1.0))]
    expected_counts = {(1,): 1, (2,): 7, (1, 1): 7}
    reports = []
    values = {}
    n = min(cfg.n, 6)
    for p_vec, times in cases:
        horizon_n = min(n, int(10 / times[-1]))
        spec = MomentSpec(p_vec=p_vec, times=times, n=horizon_n, charges=q)
        chk = partition_decomposition_check(spec, law,
                                            tol=cfg.tol("identity_tol", 1e-9))
        count_ok = len(enumerate_slot_partitions(p_vec)) \
            == expected_counts[p_vec]
        label = "p" + "_".join(str(p) for p in p_vec)
        reports.append(TestReport(
            name=f"decomposition_{label}", statistic=abs(chk.lhs - chk.rhs),
            passed=bool(chk.passed and count_ok),
            tolerance="1e-9 relative; partition count by inclusion-exclusion "
                      "(exact gate)",
            sample_size=chk.partition_count,
            details={"lhs": chk.lhs, "rhs": chk.rhs,
                     "partition_count": chk.partition_count,
                     "expected_count": expected_counts[p_vec],
                     "min_super_block": chk.min_super_block}))
        values[label] = {"moment": chk.rhs,
                         "partitions": chk.partition_count}
    return _finish(cfg.experiment, reports, values)


def run_truncation_drift(cfg: ExperimentConfig) -> ExperimentResult:
    taus = [int(t) for t in tau_subsequence(cfg.alpha, cfg.n,
                                            cfg.charge_law().gamma_moment)]
    # below ~1e2 steps the clipped-charge difference is zero for most
    # environments (no clipped charge meets a coincidence), so medians
    # degenerate; keep the grid in the scaling regime
    floor_n = int(cfg.tol("tau_floor", 100))
    taus = [t for t in taus if t >= floor_n]
    if len(taus) < 3:
        raise ConfigError(
            f"n={cfg.n} leaves fewer than 3 grid points for alpha={cfg.alpha}")
    env_seeds = cfg.env_seeds if len(cfg.env_seeds) >= cfg.replicas else \
        tuple(10_000 + i for i in range(cfg.replicas))
    medians = []
    for gi, tau in enumerate(taus):
        params = cfg.walk_params(
            n=tau, mode="quenched", env_seed_list=tuple(env_seeds),
            clip_level=truncation_level(tau, cfg.beta), stream_sub=gi)
        vals = simulate.run_replicas("energy_trajectory_max", params,
                                     len(env_seeds), cfg.workers)[:, 0]
        scale = math.sqrt(tau * math.log(tau))
        medians.append(float(np.median(vals) / scale))
    decreasing = sum(b < a for a, b in zip(medians, medians[1:]))
    trend_ok = medians[-1] < 0.5 * medians[0] if medians[0] > 0 else False
    reports = [TestReport(
        name="truncation_drift_trend", statistic=medians[-1],
        passed=bool(trend_ok),
        tolerance="median at largest tau < half of first (trend gate)",
        sample_size=len(env_seeds),
        notes=f"{decreasing}/{len(medians) - 1} consecutive decreases",
        details={"tau_grid": taus, "medians": medians,
                 "beta": cfg.beta, "alpha": cfg.alpha})]
    values = {"tau_grid": taus, "medians": medians}
    return _finish(cfg.experiment, reports, values)


_RUNNERS = {
    "oracle_check": run_oracle_check,
    "annealed_clt": run_annealed_clt,
    "quenched_clt_d2": run_quenched_clt_d2,
    "quenched_clt_dge3": run_quenched_clt_dge3,
    "fclt_given_s": run_fclt_given_s,
    "d1_annealed": run_d1_annealed,
    "d1_oscillation": run_d1_oscillation,
    "moment_decomposition": run_moment_decomposition,
    "truncation_drift": run_truncation_drift,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    validate_config(cfg)
    return _RUNNERS[cfg.experiment](cfg)
