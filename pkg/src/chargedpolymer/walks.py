"""Lattice random walks with exact visit-count bookkeeping.

A walk starts at the origin of Z^d and takes i.i.d. steps from a finite,
centered step distribution with non-singular covariance.  The state tracks,
in exact integer arithmetic and O(1) amortized per step:

* local times  N_n(x) = #{1 <= i <= n : S_i = x}   (the origin visit at
  time 0 is deliberately excluded everywhere),
* their maximum N*_n,
* p-fold self-intersection counts  sum_x N_n(x)**p  for p = 2..p_max,
* windowed variants N_{a,n}(x) and sum_x N_{a,n}(x)**2 restarted at a
  user-chosen time a.

The simple walk is periodic (returns only at even times); the lazy variant
mixes in a zero step and is the canonical aperiodic choice.  Asymptotic
variance formulas depend on the step law only through its covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_STEP_KINDS = ("srw", "lazy_srw", "custom")
_ATOL = 1e-12


@dataclass(frozen=True)
class StepLaw:
    """Validated finite-support step distribution on Z^d.

    ``support`` holds the distinct step vectors (n_points x d int array) and
    ``probabilities`` their weights; ``covariance`` is recomputed from the
    support on construction.  Instances are immutable and shareable.
    """

    d: int
    support: np.ndarray
    probabilities: np.ndarray
    covariance: np.ndarray
    lazy_weight: float
    kind: str = "custom"

    def __post_init__(self) -> None:
        pts = np.asarray(self.support)
        probs = np.asarray(self.probabilities)
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise ValueError("support must be an (n_points, d) array")
        if np.any(probs <= 0.0):
            raise ValueError("support probabilities must be positive")
        if abs(probs.sum() - 1.0) > _ATOL:
            raise ValueError(
                f"support probabilities sum to {probs.sum()!r}, not 1")
        mean = probs @ pts
        if np.max(np.abs(mean)) > _ATOL:
            raise ValueError(
                f"step law is not centered: mean step = {mean.tolist()}")
        cov = (pts.T * probs) @ pts
        if np.max(np.abs(cov - self.covariance)) > _ATOL:
            raise ValueError("stored covariance disagrees with support")
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals.min() <= _ATOL:
            raise ValueError(
                f"singular covariance (eigenvalues {eigvals.tolist()})")

    @property
    def max_step_norm(self) -> int:
        return int(np.max(np.abs(self.support)))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def sigma2_local_clt(self) -> float:
        """(2 pi sqrt(det Sigma))**-1, the d=2 Gaussian local-limit constant."""
        if self.d != 2:
            raise ValueError("local-CLT constant is a d=2 quantity")
        return float(1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(self.covariance))))

    def sample_steps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n steps as an (n, d) int64 array (one uniform per step)."""
        u = rng.random(n)
        idx = np.searchsorted(self.cumulative, u, side="right")
        idx = np.minimum(idx, len(self.probabilities) - 1)
        return self.support[idx]

    def sample_step(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_steps(rng, 1)[0]

    def describe(self) -> str:
        if self.kind == "lazy_srw":
            return f"lazy_srw(d={self.d}, lazy={self.lazy_weight:g})"
        if self.kind == "srw":
            return f"srw(d={self.d})"
        return f"custom(d={self.d}, {len(self.probabilities)} atoms)"


def make_step_law(kind: str, d: int, lazy_weight: float = 0.0,
                  custom_support=None) -> StepLaw:
    """Build and validate a step law.

    ``srw`` puts mass 1/(2d) on each +/- unit vector; ``lazy_srw`` mixes in
    a zero step with probability ``lazy_weight``; ``custom`` takes an
    explicit [(point, probability), ...] list which must be centered with
    non-singular covariance.
    """
    if kind not in _STEP_KINDS:
        raise ValueError(f"unknown step law kind {kind!r}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if kind == "custom":
        if not custom_support:
            raise ValueError("custom law requires custom_support")
        pts = np.asarray([p for p, _ in custom_support], dtype=np.int64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        probs = np.asarray([w for _, w in custom_support], dtype=np.float64)
        lazy = float(probs[np.all(pts == 0, axis=1)].sum())
    else:
        if not 0.0 <= lazy_weight < 1.0:
            raise ValueError(f"lazy_weight={lazy_weight!r} outside [0, 1)")
        if kind == "srw" and lazy_weight != 0.0:
            raise ValueError("plain srw takes lazy_weight = 0")
        if kind == "lazy_srw" and lazy_weight == 0.0:
            lazy_weight = 0.5
        pts = []
        probs = []
        if lazy_weight > 0.0:
            pts.append(np.zeros(d, dtype=np.int64))
            probs.append(lazy_weight)
        w = (1.0 - lazy_weight) / (2 * d)
        for i in range(d):
            for sgn in (1, -1):
                e = np.zeros(d, dtype=np.int64)
                e[i] = sgn
                pts.append(e)
                probs.append(w)
        pts = np.asarray(pts, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        lazy = lazy_weight
    probs = probs / probs.sum() if abs(probs.sum() - 1.0) <= _ATOL else probs
    cov = (pts.T * probs) @ pts.astype(np.float64)
    pts.flags.writeable = False
    probs.flags.writeable = False
    cov.flags.writeable = False
    return StepLaw(d=d, support=pts, probabilities=probs, covariance=cov,
                   lazy_weight=lazy, kind=kind)


class PolymerWalkState:
    """Mutable single-walk state with exact local-time functionals.

    Single-threaded by design: replicate the state (one per replica, one
    RNG stream each) rather than sharing it.
    """

    def __init__(self, d: int, p_max: int = 4):
        if p_max < 2:
            raise ValueError("p_max must be >= 2")
        self.d = d
        self.p_max = p_max
        self.step_count = 0
        self.position = (0,) * d
        self.local_times: dict[tuple, int] = {}
        self.max_local_time = 0
        self.self_intersections = {p: 0 for p in range(2, p_max + 1)}
        self.window_start = 0
        self.window_local_times: dict[tuple, int] = {}
        self.window_self_intersection = 0

    def apply_step(self, step) -> "PolymerWalkState":
        pos = tuple(int(a + b) for a, b in zip(self.position, step))
        self.position = pos
        self.step_count += 1
        m = self.local_times.get(pos, 0)
        self.local_times[pos] = m + 1
        if m + 1 > self.max_local_time:
            self.max_local_time = m + 1
        for p in self.self_intersections:
            self.self_intersections[p] += (m + 1) ** p - m ** p
        wm = self.window_local_times.get(pos, 0)
        self.window_local_times[pos] = wm + 1
        self.window_self_intersection += 2 * wm + 1
        return self

    def recompute_self_intersections(self) -> dict[int, int]:
        """O(range) recomputation from the local-time map (test oracle)."""
        return {p: sum(c ** p for c in self.local_times.values())
                for p in self.self_intersections}


def advance(state: PolymerWalkState, law: StepLaw,
            rng: np.random.Generator) -> PolymerWalkState:
    """Advance the walk by one sampled step, updating every counter."""
    if law.d != state.d:
        raise ValueError(f"law dimension {law.d} != state dimension {state.d}")
    return state.apply_step(law.sample_step(rng))


def reset_window(state: PolymerWalkState, a: int) -> PolymerWalkState:
    """Restart the windowed counters at the current time a = n."""
    if a != state.step_count:
        raise ValueError(
            f"window must be reset at the current time {state.step_count}, "
            f"got a={a}")
    state.window_start = a
    state.window_local_times = {}
    state.window_self_intersection = 0
    return state
