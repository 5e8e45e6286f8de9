"""Random charge sequences and their truncation machinery.

A charge environment is an i.i.d. sequence (q_1, q_2, ...) with mean 0 and
variance 1, materialized lazily from a seed so that the same environment can
be replayed bitwise across many walk replicas ("quenched" experiments).

Three unit-variance laws are provided:

* ``rademacher``    -- q = +/-1 with probability 1/2 each,
* ``gaussian``      -- standard normal,
* ``student_like``  -- symmetric Pareto tail with exponent ``gamma`` > 2,
  rescaled to unit variance; E|q|^r is finite exactly for r < gamma.

Truncation clips charges at a level b = n**beta and recenters; for the
symmetric laws above the recentering constant vanishes identically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

_CHARGE_KINDS = ("rademacher", "gaussian", "student_like")

# Charges are materialized in fixed-size blocks so that extending an
# environment never regenerates (and never perturbs) an existing prefix.
_BLOCK = 1 << 16

# Stream tags namespacing the Philox seed derivation (shared with simulate).
_TAG_CHARGE_BLOCK = 0xC0


@dataclass(frozen=True)
class ChargeLaw:
    """Distribution of a single charge: mean 0, variance 1.

    ``gamma`` is required for (and only for) ``student_like`` and must be
    greater than 2; ``gamma_moment`` reports the supremum of finite absolute
    moment orders (``inf`` for rademacher/gaussian).
    """

    kind: str
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _CHARGE_KINDS:
            raise ValueError(f"unknown charge law kind {self.kind!r}")
        if self.kind == "student_like":
            if self.gamma is None or not self.gamma > 2.0:
                raise ValueError(
                    f"student_like requires gamma > 2, got {self.gamma!r}")
        elif self.gamma is not None:
            raise ValueError(f"{self.kind} takes no gamma parameter")

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def gamma_moment(self) -> float:
        if self.kind == "student_like":
            return float(self.gamma)
        return np.inf

    @property
    def pareto_scale(self) -> float:
        """Lower edge c of the student_like support; variance-1 calibration."""
        if self.kind != "student_like":
            raise ValueError("pareto_scale only defined for student_like")
        return float(np.sqrt((self.gamma - 2.0) / self.gamma))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        c = self.pareto_scale
        u = rng.random(size)
        signs = rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        return signs * c * u ** (-1.0 / self.gamma)

    def density(self, x: np.ndarray) -> np.ndarray:
        """Closed-form density (student_like and gaussian only)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "gaussian":
            return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        if self.kind == "student_like":
            c = self.pareto_scale
            out = np.zeros_like(x)
            mask = np.abs(x) >= c
            out[mask] = 0.5 * self.gamma * c ** self.gamma \
                / np.abs(x[mask]) ** (self.gamma + 1.0)
            return out
        raise ValueError("rademacher has no density")

    def abs_moment(self, order: float) -> float:
        """E|q|^order in closed form; inf when order >= gamma."""
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "gaussian":
            from scipy.special import gamma as gamma_fn
            return float(2.0 ** (order / 2.0) * gamma_fn((order + 1) / 2.0)
                         / np.sqrt(np.pi))
        if order >= self.gamma:
            return np.inf
        c = self.pareto_scale
        return float(c ** order * self.gamma / (self.gamma - order))

    def truncated_mean(self, level: float) -> float:
        """E[q 1{|q| <= level}]; zero for every symmetric law.

        The numerical-integration route is kept for laws with a density so
        the recentering contract stays checkable.
        """
        if self.symmetric:
            return 0.0
        val, _ = integrate.quad(lambda x: x * float(self.density(x)),
                                -level, level, epsabs=1e-10, limit=200)
        return val

    def describe(self) -> str:
        if self.kind == "student_like":
            return f"student_like(gamma={self.gamma:g})"
        return self.kind


def _block_rng(seed: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(_TAG_CHARGE_BLOCK, block_index))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ChargeEnvironment:
    """A seeded, lazily materialized charge sequence q_1..q_length.

    Regenerating from ``(law, seed)`` reproduces identical values, and
    extending only appends: each block of 2**16 charges is generated from
    its own counter-derived stream, so prefixes are immutable.
    """

    law: ChargeLaw
    seed: int
    _values: np.ndarray = field(default_factory=lambda: np.empty(0),
                                repr=False)
    _frozen: bool = field(default=False, repr=False)

    @property
    def length(self) -> int:
        return int(self._values.shape[0])

    def charges(self, n: int) -> np.ndarray:
        """Return a read-only view of q_1..q_n, materializing as needed."""
        if n > self.length:
            if self._frozen:
                raise ValueError(
                    f"environment pinned at length {self.length}, "
                    f"cannot extend to {n}")
            first = self.length // _BLOCK
            last = (n - 1) // _BLOCK
            blocks = [self._values[:first * _BLOCK]]
            blocks += [self.law.sample(_block_rng(self.seed, b), _BLOCK)
                       for b in range(first, last + 1)]
            self._values = np.concatenate(blocks)
            self._values.flags.writeable = False
        return self._values[:n]

    @classmethod
    def from_values(cls, values: np.ndarray, law: ChargeLaw,
                    seed: int = -1) -> "ChargeEnvironment":
        """Pin an environment to explicit values (audit replay)."""
        vals = np.asarray(values, dtype=np.float64).copy()
        vals.flags.writeable = False
        return cls(law=law, seed=seed, _values=vals, _frozen=True)

    def export_csv(self, path, length: int | None = None) -> None:
        vals = self.charges(length) if length else self._values
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "value"])
            for i, v in enumerate(vals, start=1):
                writer.writerow([i, repr(float(v))])

    def export_npy(self, path, length: int | None = None) -> None:
        np.save(path, self.charges(length) if length else self._values)


def read_environment_csv(path) -> np.ndarray:
    """Load an exported (index, value) charge file back into an array."""
    idx, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["index", "value"]:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for row in reader:
            idx.append(int(row[0]))
            vals.append(float(row[1]))
    if idx != list(range(1, len(idx) + 1)):
        raise ValueError(f"{path}: indices are not contiguous from 1")
    return np.asarray(vals, dtype=np.float64)


@dataclass(frozen=True)
class TruncationSchedule:
    """Clipping exponent beta and sparse-grid exponent alpha.

    Constraints (both strict): 0 < beta < 1/4 and
    max(1/2, 2/gamma) < alpha < 1 for the charge law's gamma.
    """

    beta: float
    alpha: float
    gamma: float = np.inf

    def __post_init__(self) -> None:
        check_beta(self.beta)
        check_alpha(self.alpha, self.gamma)


def check_beta(beta: float) -> None:
    if not 0.0 < beta < 0.25:
        raise ValueError(f"beta={beta!r} outside the open interval (0, 0.25)")


def check_alpha(alpha: float, gamma: float = np.inf) -> None:
    lower = max(0.5, 2.0 / gamma)
    if not lower < alpha < 1.0:
        raise ValueError(
            f"alpha={alpha!r} outside the open interval ({lower}, 1) "
            f"required for gamma={gamma}")


def truncation_level(n: int, beta: float) -> float:
    check_beta(beta)
    return float(n) ** beta


def truncate_charges(env: ChargeEnvironment, n: int, beta: float,
                     length: int | None = None) -> np.ndarray:
    """Clip charges at b = n**beta and recenter.

    Returns q_i 1{|q_i| <= b} - E[q 1{|q| <= b}] for i = 1..length
    (length defaults to n).  The recentering constant is identically zero
    for the symmetric built-in laws.
    """
    b = truncation_level(n, beta)
    vals = env.charges(length if length is not None else n)
    clipped = np.where(np.abs(vals) <= b, vals, 0.0)
    c = env.law.truncated_mean(b)
    if c != 0.0:
        clipped = clipped - c
    return clipped


def tau_subsequence(alpha: float, n_max: int,
                    gamma: float = np.inf) -> np.ndarray:
    """Sparse time grid tau_m = ceil(exp(m**alpha)), capped at n_max.

    Strictly increasing by construction for alpha in (1/2, 1); consecutive
    ratios tend to 1 while gaps grow like exp(m**alpha / 2).
    """
    check_alpha(alpha, gamma)
    taus = []
    m = 1
    while True:
        t = int(np.ceil(np.exp(m ** alpha)))
        if t > n_max:
            break
        taus.append(t)
        m += 1
    out = np.asarray(taus, dtype=np.int64)
    if np.any(np.diff(out) <= 0):
        raise AssertionError("tau grid is not strictly increasing")
    return out
