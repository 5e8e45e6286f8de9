"""Vectorized replica engine for walk-energy Monte Carlo.

Replicas are embarrassingly parallel: replica r of a run draws every
random number from a Philox (counter-based) generator keyed by
``(master_seed, stream_tag, r)``, so results are bitwise identical for any
worker count or scheduling.  Chunks of replicas are fixed-size slices of
the replica index range and workers merge in task order.

Per replica the engine computes, in O(n log n) via one stable argsort of
packed lattice keys:

* the full energy trajectory K_1..K_n (incremental pair interactions),
* optionally a clipped-charge twin trajectory,
* visit ranks, from which self-intersection counts and maximum local
  times follow,
* the exact quadratic-variation split used by the given-path CLT checks.

The one-dimensional specializations use bincount instead of sorting.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .charges import ChargeLaw, ChargeEnvironment
from .walks import StepLaw, make_step_law

TAG_WALK = 1
TAG_CHARGE = 2
TAG_LIMIT_G = 3
TAG_LIMIT_WALK = 4

_CHUNK = 256   # fixed replica chunk; must not depend on the worker count


def stream_rng(master_seed: int, tag: int, index: int,
               sub: int = 0) -> np.random.Generator:
    """Independent Philox stream for one replica-scoped purpose.

    ``sub`` separates families of streams that share a tag (e.g. the same
    replica index at different grid sizes of one experiment).
    """
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=(int(tag), int(sub), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def sample_positions(law: StepLaw, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """S_1..S_n as an (n, d) int64 array."""
    return np.cumsum(law.sample_steps(rng, n), axis=0)


def pack_positions(positions: np.ndarray, bound: int) -> np.ndarray:
    """Pack (n, d) lattice points with |coord| <= bound into int64 keys."""
    d = positions.shape[1]
    bits = int(2 * bound + 1).bit_length()
    if d * bits > 63:
        raise ValueError(
            f"cannot pack d={d} coordinates of {bits} bits into int64")
    offs = positions.astype(np.int64) + bound
    key = offs[:, d - 1].copy()
    for j in range(d - 2, -1, -1):
        key <<= bits
        key |= offs[:, j]
    return key


@dataclass
class _Grouping:
    """Shared argsort layout: per-site visit order in one sorted pass."""

    order: np.ndarray        # stable sort permutation of the time axis
    start_pos: np.ndarray    # sorted-position of each element's group start
    ranks: np.ndarray        # previous-visit count per time (time order)
    group_sizes: np.ndarray  # final visit count per distinct site


def group_by_site(keys: np.ndarray) -> _Grouping:
    n = keys.shape[0]
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    new = np.empty(n, dtype=bool)
    new[0] = True
    np.not_equal(sk[1:], sk[:-1], out=new[1:])
    idx = np.arange(n, dtype=np.int64)
    start_pos = np.maximum.accumulate(np.where(new, idx, 0))
    ranks_sorted = idx - start_pos
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = ranks_sorted
    starts = idx[new]
    group_sizes = np.diff(np.append(starts, n))
    return _Grouping(order=order, start_pos=start_pos, ranks=ranks,
                     group_sizes=group_sizes)


def _segmented_exclusive_cumsum(values_sorted: np.ndarray,
                                start_pos: np.ndarray) -> np.ndarray:
    """Within-group exclusive prefix sums, groups delimited by start_pos."""
    csum = np.cumsum(values_sorted)
    base = np.where(start_pos > 0, csum[np.maximum(start_pos - 1, 0)], 0.0)
    return csum - values_sorted - base


def energy_trajectory(keys: np.ndarray, q: np.ndarray,
                      grouping: _Grouping | None = None) -> np.ndarray:
    """K_1..K_n: cumulative sum of q_k * (charge field at S_k before k)."""
    if grouping is None:
        grouping = group_by_site(keys)
    sq = q[grouping.order]
    w_before = _segmented_exclusive_cumsum(sq, grouping.start_pos)
    delta = np.empty_like(q)
    delta[grouping.order] = sq * w_before
    return np.cumsum(delta)


def silt_trajectory(grouping: _Grouping) -> np.ndarray:
    """I_1..I_n (pair self-intersections): I_k = k + 2 * previous visits."""
    n = grouping.ranks.shape[0]
    return np.arange(1, n + 1, dtype=np.int64) + 2 * np.cumsum(grouping.ranks)

def max_local_time_trajectory(grouping: _Grouping) -> np.ndarray:
    return np.maximum.accumulate(grouping.ranks + 1)

def silt_final(grouping: _Grouping, p: int = 2) -> int:
    return int(np.sum(grouping.group_sizes.astype(np.float64) ** p))


def qv_trajectories(keys: np.ndarray, q: np.ndarray) -> dict:
    """Exact quadratic-variation pieces along the path.

    Returns trajectories of the direct sum_k W_{k-1}(S_k)^2, the pair term
    (I_m - m)/2, the charge-variance excess R1 and the cross-pair term R2;
    direct = pair + R1 + R2 holds to rounding at every m.
    """
    g = group_by_site(keys)
    sq = q[g.order]
    w_before = _segmented_exclusive_cumsum(sq, g.start_pos)
    delta_sorted = sq * w_before
    r2_incr_sorted = 2.0 * _segmented_exclusive_cumsum(delta_sorted,
                                                       g.start_pos)
    r1_incr_sorted = _segmented_exclusive_cumsum(sq * sq - 1.0, g.start_pos)
    n = keys.shape[0]
    direct = np.empty(n); r1 = np.empty(n); r2 = np.empty(n)
    direct[g.order] = w_before * w_before
    r1[g.order] = r1_incr_sorted
    r2[g.order] = r2_incr_sorted
    pair = 0.5 * (silt_trajectory(g) - np.arange(1, n + 1))
    return {
        "direct": np.cumsum(direct),
        "pair": pair,
        "r1": np.cumsum(r1),
        "r2": np.cumsum(r2),
    }


def d1_energy_final(positions: np.ndarray, q: np.ndarray) -> float:
    """K_n for a 1-d path via bincount: (sum_x W(x)^2 - sum q^2) / 2."""
    lo = int(positions.min())
    w = np.bincount(positions - lo, weights=q)
    return 0.5 * float(w @ w - q @ q)

def d1_silt_final(positions: np.ndarray) -> int:
    lo = int(positions.min())
    counts = np.bincount(positions - lo)
    return int(counts.astype(np.float64) @ counts)


# ---------------------------------------------------------------------------
# replica jobs
# ---------------------------------------------------------------------------

_LAW_CACHE: dict = {}
_ENVQ_CACHE: dict = {}


def _law(params: dict) -> StepLaw:
    key = (params["walk_kind"], params["d"], params.get("lazy_weight", 0.0))
    if key not in _LAW_CACHE:
        _LAW_CACHE[key] = make_step_law(key[0], key[1], key[2])
    return _LAW_CACHE[key]


def _charge_law(params: dict) -> ChargeLaw:
    return ChargeLaw(kind=params["charge_kind"], gamma=params.get("gamma"))


def _env_charges(params: dict, n: int, env_seed: int) -> np.ndarray:
    key = (params["charge_kind"], params.get("gamma"), env_seed, n)
    if key not in _ENVQ_CACHE:
        env = ChargeEnvironment(law=_charge_law(params), seed=env_seed)
        _ENVQ_CACHE[key] = env.charges(n)
    return _ENVQ_CACHE[key]


def _replica_charges(params: dict, n: int, r: int) -> np.ndarray:
    if params["mode"] == "quenched":
        # either one shared environment or one environment per replica
        seed = params["env_seed_list"][r] if "env_seed_list" in params \
            else params["env_seed"]
        return _env_charges(params, n, seed)
    rng = stream_rng(params["master_seed"], TAG_CHARGE, r,
                     params.get("stream_sub", 0))
    return _charge_law(params).sample(rng, n)


def _walk_keys(params: dict, n: int, r: int):
    law = _law(params)
    rng = stream_rng(params["master_seed"], TAG_WALK, r,
                     params.get("stream_sub", 0))
    pos = sample_positions(law, n, rng)
    if law.d == 1:
        return pos[:, 0], None
    return None, pack_positions(pos, n * law.max_step_norm)


def _job_energy_checkpoints(params: dict, r: int) -> np.ndarray:
    """Energy at the requested step indices, one row per replica."""
    n = params["n"]
    idx = np.asarray(params["checkpoint_steps"], dtype=np.int64)
    q = _replica_charges(params, n, r)
    pos1d, keys = _walk_keys(params, n, r)
    if pos1d is not None:
        out = np.array([d1_energy_final(pos1d[:m], q[:m]) for m in idx])
        return out
    traj = energy_trajectory(keys, q)
    return traj[idx - 1]


def _job_energy_trajectory_max(params: dict, r: int) -> np.ndarray:
    """max_k |K_k - K_k^clipped| for the clipping level in params."""
    n = params["n"]
    level = params["clip_level"]
    q = _replica_charges(params, n, r)
    qc = np.where(np.abs(q) <= level, q, 0.0)
    pos1d, keys = _walk_keys(params, n, r)
    if keys is None:
        keys = pos1d.astype(np.int64)
    g = group_by_site(keys)
    full = energy_trajectory(keys, q, g)
    clipped = energy_trajectory(keys, qc, g)
    return np.array([np.max(np.abs(full - clipped))])


def _job_energy_envelope(params: dict, r: int) -> np.ndarray:
    """max over e^e < k <= n of |K_k| / (k^(3/2) log log k)^(1/2)."""
    n = params["n"]
    q = _replica_charges(params, n, r)
    pos1d, keys = _walk_keys(params, n, r)
    if keys is None:
        keys = pos1d.astype(np.int64)
    traj = energy_trajectory(keys, q)
    k = np.arange(1, n + 1, dtype=np.float64)
    ok = k > np.e ** np.e
    scale = np.sqrt(k[ok] ** 1.5 * np.log(np.log(k[ok])))
    return np.array([np.max(np.abs(traj[ok]) / scale)])


def _job_silt_final(params: dict, r: int) -> np.ndarray:
    """(I_n, N*_n) of a fresh walk."""
    n = params["n"]
    pos1d, keys = _walk_keys(params, n, r)
    if keys is None:
        keys = pos1d.astype(np.int64)
    g = group_by_site(keys)
    n_star = int(g.group_sizes.max())
    return np.array([silt_final(g), n_star], dtype=np.float64)


def _job_d1_limit_sample(params: dict, r: int) -> np.ndarray:
    from .stats import d1_annealed_limit_sampler
    rng = stream_rng(params["master_seed"], TAG_LIMIT_WALK, r)
    return np.array([d1_annealed_limit_sampler(params["m"], rng)])


def _job_qv_grid(params: dict, r: int) -> np.ndarray:
    """Quadratic variation at the step grid, scaled by s_n^2.

    ``analytic_charges`` integrates the charges out (pair term only, its
    conditional expectation); otherwise sampled charges drive all terms.
    """
    n = params["n"]
    idx = np.asarray(params["checkpoint_steps"], dtype=np.int64)
    pos1d, keys = _walk_keys(params, n, r)
    if keys is None:
        keys = pos1d.astype(np.int64)
    s2 = params["s_n2"]
    if params.get("analytic_charges", True):
        g = group_by_site(keys)
        pair = 0.5 * (silt_trajectory(g) - np.arange(1, n + 1))
        return pair[idx - 1] / s2
    q = _replica_charges(params, n, r)
    parts = qv_trajectories(keys, q)
    return parts["direct"][idx - 1] / s2


_JOBS = {
    "energy_checkpoints": _job_energy_checkpoints,
    "energy_trajectory_max": _job_energy_trajectory_max,
    "energy_envelope": _job_energy_envelope,
    "silt_final": _job_silt_final,
    "d1_limit_sample": _job_d1_limit_sample,
    "qv_grid": _job_qv_grid,
}


def _run_chunk(task) -> np.ndarray:
    job, params, r0, r1 = task
    fn = _JOBS[job]
    rows = [fn(params, r) for r in range(r0, r1)]
    return np.stack(rows)


def run_replicas(job: str, params: dict, replicas: int,
                 workers: int = 1) -> np.ndarray:
    """Run a replica job; results are identical for every worker count.

    Tasks are fixed 256-replica chunks merged in index order; replica r
    sees only streams keyed by (master_seed, tag, r).
    """
    tasks = [(job, params, r0, min(r0 + _CHUNK, replicas))
             for r0 in range(0, replicas, _CHUNK)]
    if workers <= 1 or len(tasks) == 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    return np.concatenate(parts, axis=0)
