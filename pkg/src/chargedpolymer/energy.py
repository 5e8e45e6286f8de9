"""Pair-interaction energy of a charged walk, maintained incrementally.

The energy of a walk S with charges q after n steps is

    K_n = sum over 1 <= i < j <= n of q_i q_j [S_i == S_j],

i.e. coincident visits interact through the product of their charges.
Keeping the charge-weighted occupation field W(x) = sum_{i<=n} q_i [S_i==x]
makes the update O(1) amortized: the step to site y contributes exactly
q_{n+1} * W_n(y).

Alongside K the state maintains, with one fixed read-before-write order:

* a truncated-charge twin K^trunc at a single clipping level,
* the exact decomposition of the predictable quadratic variation of the
  increments given the path,

      sum_{k<=m} W_{k-1}(S_k)^2
        = (I_m - m)/2  +  R1_m  +  R2_m,

  where I_m counts coincident ordered pairs, R1_m = sum_i (q_i^2 - 1) *
  (later visits to S_i), and R2_m doubles the charge cross-pairs at
  triple coincidences.  The identity holds path by path, in exact
  arithmetic for integer charges.

The quenched mean E[K_n | q] = sum_m P(S_m = 0) * sum_i q_i q_{i+m} is
computed from an oracle table and the charge autocorrelation (FFT), with a
certified bound on any tail truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charges import ChargeEnvironment, truncate_charges, truncation_level
from .oracles import OracleTable, weighted_tail_bound
from .walks import PolymerWalkState, StepLaw


class PolymerEnergyState:
    """Walk + charges + energy counters, advanced one step at a time.

    ``truncation=(level_n, beta)`` enables the clipped-charge twin energy
    at the single level b = level_n**beta.  ``checkpoint_schedule`` lists
    times at which (K, K_trunc, I, N*) snapshots are kept for windowed
    queries.  Single-threaded mutable state; share nothing.
    """

    def __init__(self, law: StepLaw, env: ChargeEnvironment,
                 truncation: tuple | None = None, p_max: int = 4,
                 checkpoint_schedule=()):
        self.law = law
        self.env = env
        self.walk = PolymerWalkState(law.d, p_max=p_max)
        self.energy = 0.0
        self.last_increment = 0.0
        self.charge_weighted: dict[tuple, float] = {}
        self.var_excess_field: dict[tuple, float] = {}
        self.cross_pair_field: dict[tuple, float] = {}
        self.var_excess_sum = 0.0
        self.cross_pair_sum = 0.0
        self.truncation = truncation
        if truncation is not None:
            level_n, beta = truncation
            self.truncation_cut = truncation_level(level_n, beta)
            self.energy_truncated = 0.0
            self.charge_weighted_truncated: dict[tuple, float] = {}
        else:
            self.truncation_cut = None
            self.energy_truncated = None
            self.charge_weighted_truncated = {}
        self.checkpoint_schedule = frozenset(int(k) for k in checkpoint_schedule)
        self.checkpoints: dict[int, dict] = {}
        if 0 in self.checkpoint_schedule:
            self._record()

    @property
    def step_count(self) -> int:
        return self.walk.step_count

    def _record(self) -> None:
        self.checkpoints[self.step_count] = {
            "energy": self.energy,
            "energy_truncated": self.energy_truncated,
            "self_intersection": self.walk.self_intersections[2],
            "max_local_time": self.walk.max_local_time,
        }

    def _charge(self, k: int) -> float:
        return float(self.env.charges(k)[k - 1])

    def apply_step_charge(self, step, c: float) -> "PolymerEnergyState":
        """Deterministic core update; read the old fields before writing."""
        self.walk.apply_step(step)
        y = self.walk.position
        w_old = self.charge_weighted.get(y, 0.0)
        delta = c * w_old
        self.energy += delta
        self.last_increment = delta
        self.cross_pair_sum += 2.0 * self.cross_pair_field.get(y, 0.0)
        self.var_excess_sum += self.var_excess_field.get(y, 0.0)
        self.cross_pair_field[y] = self.cross_pair_field.get(y, 0.0) + delta
        self.var_excess_field[y] = self.var_excess_field.get(y, 0.0) \
            + (c * c - 1.0)
        self.charge_weighted[y] = w_old + c
        if self.truncation_cut is not None:
            ct = c if abs(c) <= self.truncation_cut else 0.0
            wt_old = self.charge_weighted_truncated.get(y, 0.0)
            self.energy_truncated += ct * wt_old
            self.charge_weighted_truncated[y] = wt_old + ct
        if self.step_count in self.checkpoint_schedule:
            self._record()
        return self


def step_energy(state: PolymerEnergyState,
                rng: np.random.Generator) -> PolymerEnergyState:
    """Advance the walk one sampled step and fold in the next charge."""
    k = state.step_count + 1
    return state.apply_step_charge(state.law.sample_step(rng),
                                   state._charge(k))


@dataclass(frozen=True)
class QvDecomposition:
    quadratic_variation: float
    pair_term: float
    var_excess_term: float
    cross_term: float


def qv_decomposition(state: PolymerEnergyState, s_n: float) -> QvDecomposition:
    """Exact split of sum_k W_{k-1}(S_k)^2 scaled by s_n**-2.

    Valid for unit-variance charges; for +/-1 charges the variance-excess
    term vanishes identically.
    """
    m = state.step_count
    pair = 0.5 * (state.walk.self_intersections[2] - m)
    q = (pair + state.var_excess_sum + state.cross_pair_sum) / (s_n * s_n)
    return QvDecomposition(quadratic_variation=q, pair_term=pair,
                           var_excess_term=state.var_excess_sum,
                           cross_term=state.cross_pair_sum)


def windowed_energy(state: PolymerEnergyState, a: int, b: int) -> float:
    """K_b - K_a from recorded checkpoints."""
    for k in (a, b):
        if k not in state.checkpoints:
            raise ValueError(f"no checkpoint recorded at time {k}")
    return state.checkpoints[b]["energy"] - state.checkpoints[a]["energy"]


# ---------------------------------------------------------------------------
# replay / brute-force oracles (used by tests against the incremental path)
# ---------------------------------------------------------------------------

def brute_force_energy(positions: np.ndarray, charges: np.ndarray) -> float:
    """O(n^2) evaluation of the defining double sum over coincident pairs."""
    n = positions.shape[0]
    pos = positions.reshape(n, -1)
    total = 0.0
    for j in range(1, n):
        same = np.all(pos[:j] == pos[j], axis=1)
        total += charges[j] * np.dot(same, charges[:j])
    return float(total)


def direct_quadratic_variation(positions: np.ndarray, charges: np.ndarray,
                               s_n: float) -> float:
    """sum_k (sum_{i<k, S_i=S_k} q_i)^2 / s_n^2 straight from the definition."""
    n = positions.shape[0]
    pos = positions.reshape(n, -1)
    field: dict[tuple, float] = {}
    acc = 0.0
    for k in range(n):
        key = tuple(int(v) for v in pos[k])
        w = field.get(key, 0.0)
        acc += w * w
        field[key] = w + charges[k]
    return acc / (s_n * s_n)


def truncated_energy_path(positions: np.ndarray, charges: np.ndarray,
                          level: float) -> np.ndarray:
    """Replay K_k for charges clipped at ``level`` (no recentering term)."""
    clipped = np.where(np.abs(charges) <= level, charges, 0.0)
    field: dict[tuple, float] = {}
    n = positions.shape[0]
    pos = positions.reshape(n, -1)
    out = np.empty(n)
    acc = 0.0
    for k in range(n):
        key = tuple(int(v) for v in pos[k])
        w = field.get(key, 0.0)
        acc += clipped[k] * w
        field[key] = w + clipped[k]
        out[k] = acc
    return out


# ---------------------------------------------------------------------------
# quenched recentering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuenchedMeanResult:
    value: float
    tail_bound: float
    cutoff: int


def charge_autocorrelation(q: np.ndarray, max_lag: int) -> np.ndarray:
    """A[m] = sum_{i=1}^{n-m} q_i q_{i+m} for m = 1..max_lag (FFT above 4096)."""
    n = len(q)
    max_lag = min(max_lag, n - 1)
    if n <= 4096:
        full = np.correlate(q, q, mode="full")
        return full[n:n + max_lag]
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spec_sq = np.abs(np.fft.rfft(q, size)) ** 2
    acov = np.fft.irfft(spec_sq, size)
    return acov[1:max_lag + 1]


def quenched_mean(env: ChargeEnvironment, table: OracleTable, n: int,
                  cutoff: int | None = None,
                  require_transient: bool = True) -> QuenchedMeanResult:
    """E[K_n | q] = sum_{m=1}^{n-1} P(S_m=0) sum_i q_i q_{i+m}.

    Defaults to the full sum (zero tail) when the table is deep enough;
    otherwise the cutoff must keep the certified tail below 1e-6 sqrt(n).
    Only meaningful for transient walks (d >= 3); the d < 3 rejection can
    be lifted for formula-level testing.
    """
    if require_transient and table.d < 3:
        raise ValueError(
            f"quenched recentering requires a transient walk (d >= 3), "
            f"got d={table.d}")
    if cutoff is None:
        cutoff = min(n - 1, table.max_m)
    cutoff = min(cutoff, n - 1)
    if cutoff > table.max_m:
        raise ValueError(f"cutoff {cutoff} exceeds table depth {table.max_m}")
    tail = weighted_tail_bound(table, n, cutoff) if table.d >= 3 else 0.0
    if cutoff < n - 1 and table.d >= 3 and tail > 1e-6 * np.sqrt(n):
        raise ValueError(
            f"certified tail bound {tail:.3e} at cutoff {cutoff} exceeds "
            f"1e-6 sqrt(n); deepen the table or raise the cutoff")
    q = np.asarray(env.charges(n), dtype=np.float64)
    if n < 2 or cutoff < 1:
        return QuenchedMeanResult(0.0, tail, cutoff)
    acorr = charge_autocorrelation(q, cutoff)
    value = float(np.dot(table.p0[1:cutoff + 1], acorr))
    return QuenchedMeanResult(value=value, tail_bound=tail, cutoff=cutoff)
