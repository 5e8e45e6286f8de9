"""Exact, simulation-free reference quantities for the walk energy.

Everything here is computed without Monte Carlo:

* return probabilities P(S_m = 0) of a finite-support lattice walk,
  by exact convolution on a box that grows with m (general laws) or by
  an exact coordinate decomposition into binomially mixed one-dimensional
  walks (axis-step laws, which reach m ~ 1e5 in any dimension);
* the limit variances: (2 pi sqrt(det Sigma))**-1 in d=2, the summed
  return series in d>=3, and the recentred variant
  sum_m P(S_m=0) P(S_m!=0);
* the escape-probability identity (1-chi)/chi = sum_{m>=1} P(S_m=0),
  checked termwise through the geometric visit-count law;
* annealed second moments  E[K_n^2] = sum_{m<n} (n-m) P(S_m=0);
* brute-force quenched moments of the pair energy at tiny sizes, together
  with their decomposition over constrained set partitions of the index
  slots, verified against each other.

Tail controls in d>=3 use the certified bound P(S_m=0) <= C m**(-d/2)
with C fitted conservatively (max over the computed prefix, doubled), and
a sharper least-squares extrapolation of the local-limit expansion whose
residual is reported separately.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .walks import StepLaw

_TINY = 1e-300


# ---------------------------------------------------------------------------
# return probabilities
# ---------------------------------------------------------------------------

def _srw1d_p0(max_m: int) -> np.ndarray:
    """P(S_m = 0) of the 1-d simple walk, m = 0..max_m, via exact binomial."""
    m = np.arange(max_m + 1)
    out = np.zeros(max_m + 1)
    ev = m[m % 2 == 0]
    out[ev] = np.exp(special.gammaln(ev + 1.0)
                     - 2.0 * special.gammaln(ev / 2.0 + 1.0)
                     - ev * np.log(2.0))
    return out

def _binomial_mix(seq_a: np.ndarray, seq_b: np.ndarray, w: float,
                  log_fact: np.ndarray, width: float = 14.0) -> np.ndarray:
    """c[r] = sum_s C(r,s) w^s (1-w)^(r-s) a[s] b[r-s].

    The inner sum is windowed at ``width`` binomial standard deviations;
    the omitted binomial tail is below 1e-30, far under accumulation error.
    """
    max_m = len(seq_a) - 1
    out = np.empty(max_m + 1)
    out[0] = seq_a[0] * seq_b[0]
    logw, log1w = np.log(w), np.log1p(-w)
    for r in range(1, max_m + 1):
        mu = w * r
        half = width * math.sqrt(max(r * w * (1.0 - w), 1.0)) + 6.0
        lo = max(0, int(mu - half))
        hi = min(r, int(mu + half))
        s = np.arange(lo, hi + 1)
        pmf = np.exp(log_fact[r] - log_fact[s] - log_fact[r - s]
                     + s * logw + (r - s) * log1w)
        out[r] = np.dot(pmf, seq_a[s] * seq_b[r - s])
    return out

def _axis_p0(d: int, lazy: float, max_m: int) -> np.ndarray:
    """Exact P(S_m=0) for (lazy) simple walks by coordinate decomposition.

    Conditioned on how the m steps split across coordinates (multinomial),
    the coordinates are independent 1-d simple walks, so the d-dimensional
    return probability is a nested binomial mixture of exact binomials.
    Lazy steps join as a coordinate that always "returns".
    """
    log_fact = special.gammaln(np.arange(max_m + 1) + 1.0)
    b1 = _srw1d_p0(max_m)
    bd = b1
    for j in range(2, d + 1):
        bd = _binomial_mix(b1, bd, 1.0 / j, log_fact)
    if lazy > 0.0:
        bd = _binomial_mix(np.ones(max_m + 1), bd, lazy, log_fact)
    return bd

def _box_p0(law: StepLaw, max_m: int, memory_budget: int) -> np.ndarray:
    """Exact P(S_m=0) by iterated convolution on a box of radius m * norm.

    The box is sized so no probability mass ever reaches the boundary:
    there is no truncation error, only float accumulation.
    """
    radius = max_m * law.max_step_norm
    side = 2 * radius + 1
    need = 2 * 8 * side ** law.d
    if need > memory_budget:
        feas_side = int((memory_budget / 16.0) ** (1.0 / law.d))
        feasible = max((feas_side - 1) // (2 * law.max_step_norm), 0)
        raise MemoryError(
            f"box for max_m={max_m} in d={law.d} needs {need} bytes "
            f"(budget {memory_budget}); feasible maximum max_m={feasible}")
    p = np.zeros((side,) * law.d)
    origin = (radius,) * law.d
    p[origin] = 1.0
    out = np.zeros(max_m + 1)
    out[0] = 1.0
    moves = [(tuple(int(c) for c in pt), w)
             for pt, w in zip(law.support, law.probabilities)]
    for m in range(1, max_m + 1):
        q = np.zeros_like(p)
        for shift, w in moves:
            q += w * np.roll(p, shift=shift, axis=tuple(range(law.d)))
        p = q
        out[m] = p[origin]
    return out

def _detect_period(p0: np.ndarray) -> int:
    nz = np.nonzero(p0[1:] > 1e-18)[0] + 1
    if len(nz) == 0:
        return 1
    return int(np.gcd.reduce(nz))

def _class_tail(s: float, m_min: int, period: int) -> float:
    """sum of m**-s over m >= m_min with m a positive multiple of period."""
    j0 = (m_min + period - 1) // period
    return float(period ** (-s) * special.zeta(s, max(j0, 1)))


@dataclass(frozen=True)
class TailFit:
    """Least-squares local-limit expansion p0[m] ~ m**(-d/2)(c0 + c1/m + c2/m^2)."""

    coeffs: tuple
    residual: float          # max |data - fit| * m**(d/2 + 2) on the window
    window: tuple

    def tail_sum(self, d: int, m_min: int, period: int,
                 squared: bool = False) -> float:
        c0, c1, c2 = self.coeffs
        h = d / 2.0
        if squared:
            return (c0 * c0 * _class_tail(2 * h, m_min, period)
                    + 2 * c0 * c1 * _class_tail(2 * h + 1, m_min, period))
        return (c0 * _class_tail(h, m_min, period)
                + c1 * _class_tail(h + 1, m_min, period)
                + c2 * _class_tail(h + 2, m_min, period))

    def tail_error(self, d: int, m_min: int, period: int) -> float:
        return self.residual * _class_tail(d / 2.0 + 2.0, m_min, period)


def _fit_tail(p0: np.ndarray, d: int, period: int) -> TailFit | None:
    max_m = len(p0) - 1
    lo = max(8, max_m // 2)
    ms = np.arange(lo, max_m + 1)
    ms = ms[(ms % period == 0) & (p0[lo:max_m + 1][ms - lo] > _TINY)]
    if len(ms) < 8:
        return None
    z = p0[ms] * ms ** (d / 2.0)
    design = np.stack([np.ones_like(ms, dtype=float), 1.0 / ms,
                       1.0 / ms ** 2], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, z, rcond=None)
    resid = np.abs(design @ coeffs - z) * ms ** 2
    return TailFit(coeffs=tuple(float(c) for c in coeffs),
                   residual=float(resid.max()),
                   window=(int(ms[0]), int(ms[-1])))


@dataclass
class OracleTable:
    """Return probabilities of a step law with derived tail controls.

    ``p0[m]`` is P(S_m = 0) for m = 0..max_m (p0[0] = 1).  ``tail_bound``
    is the certified doubled-constant bound on sum_{m > max_m} P(S_m = 0)
    (d >= 3 only); ``chi`` estimates the escape probability 1/(1 + G) with
    G the summed return series including the fitted tail.
    """

    law: StepLaw
    max_m: int
    p0: np.ndarray
    period: int
    green_partial: float
    tail_bound: float | None
    chi: float
    method: str
    tail_fit: TailFit | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.law.d

    def certified_constant(self) -> float:
        """Doubled max of p0[m] * m**(d/2) over the computed prefix."""
        m = np.arange(1, self.max_m + 1)
        vals = self.p0[1:] * m ** (self.d / 2.0)
        return 2.0 * float(vals.max())

    def green_estimate(self) -> float:
        tail = self.tail_fit.tail_sum(self.d, self.max_m + 1, self.period) \
            if (self.tail_fit is not None and self.d >= 3) else 0.0
        return self.green_partial + tail

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("m,return_probability\n")
            for m in range(1, self.max_m + 1):
                fh.write(f"{m},{self.p0[m]!r}\n")

    def summary(self) -> dict:
        out = {
            "law": self.law.describe(),
            "d": self.d,
            "max_m": self.max_m,
            "period": self.period,
            "method": self.method,
            "green_partial": self.green_partial,
            "green_estimate": self.green_estimate(),
            "chi": self.chi,
            "tail_bound": self.tail_bound,
        }
        if self.d == 2:
            out["sigma2_local_clt"] = self.law.sigma2_local_clt()
        if self.d >= 3:
            for variant in ("fclt_given_s", "quenched_recentred_dge3"):
                res = sigma2(self.d, self.law, self, variant)
                out[f"sigma2_{variant}"] = res.value
                out[f"sigma2_{variant}_certified_error"] = res.certified_error
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def return_probabilities(law: StepLaw, max_m: int, method: str = "auto",
                         memory_budget: int = 1 << 30) -> OracleTable:
    """Tabulate P(S_m = 0) for m <= max_m.

    ``auto`` picks the exact coordinate decomposition for srw/lazy_srw
    (the d=1 simple walk reduces to the exact binomial) and falls back to
    dense-box convolution for custom laws.  ``box`` forces the convolution,
    which rejects requests whose box exceeds ``memory_budget`` bytes.
    """
    if max_m < 1:
        raise ValueError("max_m must be >= 1")
    if method == "auto":
        method = "axis" if law.kind in ("srw", "lazy_srw") else "box"
    if method == "axis":
        if law.kind not in ("srw", "lazy_srw"):
            raise ValueError("axis method requires an srw / lazy_srw law")
        p0 = _axis_p0(law.d, law.lazy_weight, max_m)
    elif method == "box":
        p0 = _box_p0(law, max_m, memory_budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    period = _detect_period(p0)
    green_partial = float(p0[1:].sum())
    fit = _fit_tail(p0, law.d, period)
    tail_bound = None
    if law.d >= 3:
        m = np.arange(1, max_m + 1)
        c_cert = 2.0 * float((p0[1:] * m ** (law.d / 2.0)).max())
        tail_bound = c_cert * _class_tail(law.d / 2.0, max_m + 1, period)
    green_est = green_partial
    if law.d >= 3 and fit is not None:
        green_est += fit.tail_sum(law.d, max_m + 1, period)
    chi = 1.0 / (1.0 + green_est)
    return OracleTable(law=law, max_m=max_m, p0=p0, period=period,
                       green_partial=green_partial, tail_bound=tail_bound,
                       chi=chi, method=method, tail_fit=fit)


_TABLE_CACHE: dict = {}

def cached_table(law: StepLaw, max_m: int) -> OracleTable:
    """Per-process cache, keyed by (kind, d, lazy, max_m); axis laws only."""
    if law.kind == "custom":
        return return_probabilities(law, max_m)
    key = (law.kind, law.d, law.lazy_weight, max_m)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = return_probabilities(law, max_m)
    return _TABLE_CACHE[key]


# ---------------------------------------------------------------------------
# variance formulas
# ---------------------------------------------------------------------------

_SIGMA2_VARIANTS = ("annealed_d2", "fclt_given_s", "quenched_recentred_dge3")


@dataclass(frozen=True)
class Sigma2Result:
    value: float
    certified_error: float | None = None
    tail_estimate: float = 0.0


def sigma2(d: int, law: StepLaw, table: OracleTable | None,
           variant: str) -> Sigma2Result:
    """Limit variance of the normalized energy, by regime.

    * ``annealed_d2`` and ``fclt_given_s`` in d=2: (2 pi sqrt(det Sigma))**-1.
    * ``fclt_given_s`` in d>=3: sum_{m>=1} P(S_m=0), partial sum plus the
      fitted tail, with the certified doubled-constant error.
    * ``quenched_recentred_dge3``: sum_m P(S_m=0) P(S_m!=0), same controls.
    """
    if variant not in _SIGMA2_VARIANTS:
        raise ValueError(f"unknown sigma2 variant {variant!r}")
    if variant == "annealed_d2":
        if d != 2:
            raise ValueError(f"variant annealed_d2 requires d=2, got d={d}")
        return Sigma2Result(value=law.sigma2_local_clt())
    if variant == "quenched_recentred_dge3" and d < 3:
        raise ValueError(
            f"variant quenched_recentred_dge3 requires d>=3, got d={d}")
    if variant == "fclt_given_s" and d == 2:
        return Sigma2Result(value=law.sigma2_local_clt())
    if d < 3:
        raise ValueError(f"variant {variant} undefined for d={d}")
    if table is None:
        raise ValueError("d>=3 variants require an oracle table for the law")
    p = table.p0[1:]
    if variant == "fclt_given_s":
        partial = float(p.sum())
        squared = False
    else:
        partial = float((p * (1.0 - p)).sum())
        squared = True
    tail = 0.0
    if table.tail_fit is not None:
        tail = table.tail_fit.tail_sum(table.d, table.max_m + 1, table.period)
        if squared:
            tail -= table.tail_fit.tail_sum(table.d, table.max_m + 1,
                                            table.period, squared=True)
    return Sigma2Result(value=partial + tail,
                        certified_error=table.tail_bound,
                        tail_estimate=tail)


@dataclass(frozen=True)
class ChiIdentityResult:
    lhs: float
    rhs: float
    passed: bool
    gap: float
    tolerance: float


def chi_identity_check(table: OracleTable, tol: float = 1e-6) -> ChiIdentityResult:
    """Check (sum_j j^2 chi^2 (1-chi)^(j-1) - 1) / 2 == sum_{m>=1} P(S_m=0).

    The left side is the second moment of the geometric total-visit count
    at the origin, summed termwise until terms fall below 1e-16; it
    simplifies to (1-chi)/chi.  The right side is the tabulated partial
    return series; agreement is required within tol + tail_bound.
    """
    chi = table.chi
    acc = 0.0
    term = chi * chi
    j = 1
    while (term * j * j > 1e-16 * max(acc, 1.0) or j < 4) and j < 10_000_000:
        acc += j * j * term
        term *= 1.0 - chi
        j += 1
    lhs = 0.5 * (acc - 1.0)
    rhs = table.green_partial
    tolerance = tol + (table.tail_bound or 0.0)
    gap = abs(lhs - rhs)
    return ChiIdentityResult(lhs=lhs, rhs=rhs, passed=bool(gap <= tolerance),
                             gap=gap, tolerance=tolerance)


def annealed_second_moment(table: OracleTable, n: int) -> float:
    """E[K_n^2] for unit-variance charges: sum_{m=1}^{n-1} (n-m) P(S_m=0)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n - 1 > table.max_m:
        raise ValueError(
            f"table depth {table.max_m} insufficient for n={n}")
    if n == 1:
        return 0.0
    m = np.arange(1, n)
    return float(np.dot(n - m, table.p0[1:n]))


def weighted_tail_bound(table: OracleTable, n: int, cutoff: int) -> float:
    """Certified bound on sum_{m=cutoff+1}^{n-1} (n-m) P(S_m=0)."""
    if cutoff >= n - 1:
        return 0.0
    c = table.certified_constant()
    m = np.arange(cutoff + 1, n, dtype=np.float64)
    return float(c * np.dot(n - m, m ** (-table.d / 2.0)))


# ---------------------------------------------------------------------------
# tiny-size quenched moments and their partition decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSpec:
    """Specification of a joint moment of the doubled pair energy.

    The moment of order ``p_vec`` at times ``times`` is the full sum over
    index pairs (i != i') per slot, weighted by the given charges and the
    joint probability that each slot's two walk positions coincide.  Sizes
    are capped so exhaustive path enumeration stays exact and fast.
    """

    p_vec: tuple
    times: tuple
    n: int
    charges: tuple

    def __post_init__(self) -> None:
        if len(self.p_vec) != len(self.times) or not self.p_vec:
            raise ValueError("p_vec and times must be equal-length, nonempty")
        if any(p < 1 for p in self.p_vec):
            raise ValueError("p_vec entries must be positive integers")
        if sum(self.p_vec) > 4:
            raise ValueError("|p_vec|_1 must be <= 4 for exact enumeration")
        if any(t <= 0 for t in self.times) or \
                any(a >= b for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing and positive")
        if self.horizon > 10:
            raise ValueError(
                f"n * t_N = {self.n * self.times[-1]} exceeds the "
                f"enumeration cap of 10")
        if len(self.charges) < self.horizon:
            raise ValueError("charges must cover the enumeration horizon")

    @property
    def horizon(self) -> int:
        return int(math.floor(self.n * self.times[-1]))

    @property
    def slot_horizons(self) -> list:
        return [int(math.floor(self.n * t)) for t in self.times]


class _PathEnumeration:
    """All step-law paths of a given length with their probabilities."""

    def __init__(self, law: StepLaw, length: int, max_paths: int = 2_000_000):
        n_atoms = len(law.probabilities)
        if n_atoms ** length > max_paths:
            raise ValueError(
                f"{n_atoms}^{length} paths exceed the enumeration cap")
        idx = np.array(list(itertools.product(range(n_atoms),
                                              repeat=length)), dtype=np.int64)
        steps = law.support[idx]                    # (paths, length, d)
        self.positions = np.cumsum(steps, axis=1)   # S_1..S_length
        self.probs = np.prod(law.probabilities[idx], axis=1)
        self.length = length
        self._joint_cache: dict = {}

    def joint_return_prob(self, pairs) -> float:
        """P( S_a = S_b for every (a, b) in pairs ), times 1-based."""
        key = tuple(sorted(set((min(a, b), max(a, b)) for a, b in pairs)))
        if key not in self._joint_cache:
            mask = np.ones(len(self.probs), dtype=bool)
            for a, b in key:
                if a == b:
                    continue
                mask &= np.all(self.positions[:, a - 1]
                               == self.positions[:, b - 1], axis=1)
            self._joint_cache[key] = float(self.probs[mask].sum())
        return self._joint_cache[key]


def brute_quenched_moment(spec: MomentSpec, law: StepLaw,
                          paths: _PathEnumeration | None = None) -> float:
    """Exhaustive evaluation of the joint moment over all index tuples."""
    if paths is None:
        paths = _PathEnumeration(law, spec.horizon)
    q = np.asarray(spec.charges, dtype=np.float64)
    slot_ranges = []
    for k, p in enumerate(spec.p_vec):
        mk = spec.slot_horizons[k]
        pairs = [(i, j) for i in range(1, mk + 1)
                 for j in range(1, mk + 1) if i != j]
        slot_ranges.extend([pairs] * p)
    total = 0.0
    for combo in itertools.product(*slot_ranges):
        weight = 1.0
        for i, j in combo:
            weight *= q[i - 1] * q[j - 1]
        if weight == 0.0:
            continue
        total += weight * paths.joint_return_prob(combo)
    return total


def _index_slots(p_vec) -> list:
    """The 2p formal slots (k, l, side) with side 0 = dot, 1 = double dot."""
    return [(k, l, side)
            for k, p in enumerate(p_vec) for l in range(p) for side in (0, 1)]


def enumerate_slot_partitions(p_vec) -> list:
    """All partitions of the slots never co-blocking a slot's two sides.

    Restricted-growth enumeration: element j may join any existing block
    that does not contain its partner (k, l, 1 - side), or open a new one.
    """
    slots = _index_slots(p_vec)
    partner = {(k, l, s): (k, l, 1 - s) for (k, l, s) in slots}
    results: list = []

    def grow(j: int, blocks: list) -> None:
        if j == len(slots):
            results.append([tuple(b) for b in blocks])
            return
        el = slots[j]
        for b in blocks:
            if partner[el] not in b:
                b.append(el)
                grow(j + 1, blocks)
                b.pop()
        blocks.append([el])
        grow(j + 1, blocks)
        blocks.pop()

    grow(0, [])
    return results


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def superpartition(partition) -> list:
    """Group blocks whose union contains both sides of some slot.

    Connected components under that adjacency; every component has at
    least two blocks because a slot's sides always sit in distinct blocks.
    """
    where = {}
    for bi, block in enumerate(partition):
        for el in block:
            where[el] = bi
    dsu = _DisjointSet(len(partition))
    for (k, l, s), bi in where.items():
        dsu.union(bi, where[(k, l, 1 - s)])
    comps: dict = {}
    for bi in range(len(partition)):
        comps.setdefault(dsu.find(bi), []).append(bi)
    return list(comps.values())


def partition_moment(spec: MomentSpec, law: StepLaw, partition,
                     paths: _PathEnumeration | None = None) -> float:
    """One partition's contribution: distinct block times, charge powers,
    and the joint probability that blocks in a common super-block coincide."""
    if paths is None:
        paths = _PathEnumeration(law, spec.horizon)
    q = np.asarray(spec.charges, dtype=np.float64)
    horizons = spec.slot_horizons
    bounds = [horizons[min(el[0] for el in block)] for block in partition]
    super_blocks = superpartition(partition)
    total = 0.0
    for assignment in itertools.product(*[range(1, b + 1) for b in bounds]):
        if len(set(assignment)) != len(assignment):
            continue
        weight = 1.0
        for block, a in zip(partition, assignment):
            weight *= q[a - 1] ** len(block)
        if weight == 0.0:
            continue
        pairs = []
        for comp in super_blocks:
            anchor = assignment[comp[0]]
            pairs.extend((anchor, assignment[bi]) for bi in comp[1:])
        total += weight * paths.joint_return_prob(pairs)
    return total


@dataclass(frozen=True)
class DecompositionCheck:
    lhs: float
    rhs: float
    partition_count: int
    min_super_block: int
    passed: bool


def partition_decomposition_check(spec: MomentSpec, law: StepLaw,
                                  tol: float = 1e-9) -> DecompositionCheck:
    """Verify that the partition contributions sum to the brute moment."""
    paths = _PathEnumeration(law, spec.horizon)
    rhs = brute_quenched_moment(spec, law, paths)
    partitions = enumerate_slot_partitions(spec.p_vec)
    lhs = 0.0
    min_super = math.inf
    for part in partitions:
        lhs += partition_moment(spec, law, part, paths)
        min_super = min(min_super,
                        min(len(c) for c in superpartition(part)))
    gap = abs(lhs - rhs)
    passed = gap <= tol * max(1.0, abs(rhs)) and min_super >= 2
    return DecompositionCheck(lhs=lhs, rhs=rhs,
                              partition_count=len(partitions),
                              min_super_block=int(min_super), passed=passed)
