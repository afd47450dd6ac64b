"""Dominating branching-process laws and breadth-first walk machinery.

The exploration of a hub-stripped graph is stochastically dominated by a
Galton-Watson process whose offspring law is a size-biased, truncated
transform of the degree counts.  This module builds those laws exactly (in
rational arithmetic), simulates the associated breadth-first random walk with
its harmonic functional, dyadic-scale occupation times and upcrossing
counters, and packages the Monte Carlo checks of the supermartingale bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from .degrees import DegreeSequence, Exponents, ThetaSequence, beta_profile, criticality

__all__ = [
    "ProgenyLaw",
    "TruncationError",
    "WalkTrace",
    "GWHeight",
    "progeny_law",
    "truncated_progeny_law",
    "mean_bound_check",
    "MeanBoundRow",
    "i2_lambda",
    "bf_walk",
    "walk_from_children",
    "gw_height",
    "height_from_children",
    "height_harmonic_check",
    "HeightHarmonicResult",
    "exit_time_estimate",
    "ExitTimeEstimate",
    "upcrossing_tail_check",
    "UpcrossingRow",
    "hitting_probability_check",
    "HittingBoundResult",
    "levy_concentration",
    "subcritical_path_tail",
    "PathTailBound",
    "scale_interval",
    "scale_of",
]


# ---------------------------------------------------------------------------
# Progeny laws
# ---------------------------------------------------------------------------

class TruncationError(ValueError):
    """The truncation level leaves no probability mass at zero children."""


@dataclass(frozen=True)
class ProgenyLaw:
    """Finite integer offspring distribution with exact and float views.

    ``pmf_exact`` is populated when the law was built in rational arithmetic
    (the construction from degree counts always is); synthetic float laws
    carry only the float view and are validated to sum to 1 within 1e-12.
    """

    ks: np.ndarray
    probs: np.ndarray
    pmf_exact: Mapping[int, Fraction] | None = None

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if ks.size == 0 or ks.size != probs.size:
            raise ValueError("ks and probs must be equal-length and non-empty")
        if (np.diff(ks) <= 0).any():
            raise ValueError("support must be strictly increasing")
        if (ks < 0).any():
            raise ValueError("support must be non-negative")
        if (probs < 0).any():
            raise ValueError("probabilities must be non-negative")
        if self.pmf_exact is not None:
            if sum(self.pmf_exact.values()) != 1:
                raise ValueError("exact pmf must sum to exactly 1")
        elif abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {probs.sum()!r}, not 1 within 1e-12")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", np.cumsum(probs))

    @classmethod
    def from_pmf(cls, pmf: Mapping[int, float | Fraction]) -> "ProgenyLaw":
        items = sorted((int(k), v) for k, v in pmf.items() if v != 0)
        if not items:
            raise ValueError("empty pmf")
        ks = np.array([k for k, _ in items], dtype=np.int64)
        exact = None
        if all(isinstance(v, (Fraction, int)) for _, v in items):
            exact = {k: Fraction(v) for k, v in items}
        probs = np.array([float(v) for _, v in items], dtype=np.float64)
        return cls(ks=ks, probs=probs, pmf_exact=exact)

    @property
    def pmf(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.ks, self.probs)}

    @property
    def support_max(self) -> int:
        return int(self.ks[-1])

    @property
    def mean(self) -> float:
        if self.pmf_exact is not None:
            return float(sum(k * p for k, p in self.pmf_exact.items()))
        return float((self.ks * self.probs).sum())

    @property
    def variance(self) -> float:
        if self.pmf_exact is not None:
            m = sum(k * p for k, p in self.pmf_exact.items())
            return float(sum((k - m) ** 2 * p for k, p in self.pmf_exact.items()))
        m = self.mean
        return float(((self.ks - m) ** 2 * self.probs).sum())

    def exact_mean(self) -> Fraction:
        if self.pmf_exact is None:
            raise ValueError("law was not built in exact arithmetic")
        return sum(k * p for k, p in self.pmf_exact.items())

    def tail(self, k: int) -> float:
        """P(xi >= k)."""
        idx = np.searchsorted(self.ks, k, side="left")
        return float(self.probs[idx:].sum())

    # -- sampling ------------------------------------------------------------

    def sample_one(self, rng: np.random.Generator) -> int:
        u = rng.random()
        idx = min(int(np.searchsorted(self._cum, u, side="right")), self.ks.size - 1)
        return int(self.ks[idx])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        idx = np.minimum(np.searchsorted(self._cum, u, side="right"), self.ks.size - 1)
        return self.ks[idx]

    def stream(self, rng: np.random.Generator) -> Iterator[int]:
        while True:
            yield self.sample_one(rng)

    # -- serialization: CSV "k,probability" ----------------------------------

    def to_csv(self) -> str:
        lines = ["k,probability"]
        lines.extend(f"{int(k)},{float(p):.12g}" for k, p in zip(self.ks, self.probs))
        return "\n".join(lines) + "\n"


def _default_t(d: DegreeSequence, exp: Exponents, eps: float) -> int:
    eps0 = (4.0 - exp.tau) / (exp.tau - 1.0)
    if not (0.0 < eps < eps0):
        raise ValueError(f"need 0 < eps < {eps0:.6g}, got {eps}")
    return math.ceil(float(d.n) ** (exp.rho + eps))


def progeny_law(d: DegreeSequence, exp: Exponents, eps: float,
                *, t: int | None = None) -> ProgenyLaw:
    """Size-biased offspring law dominating the exploration's children counts.

    p(k) = (k+1) n_{k+1} / (ell - 2t) for k >= 1 and
    p(0) = (n_1 - 2t) / (ell - 2t), with t = ceil(n**(rho+eps)) reserved for
    already-used half-edges.  Exact in rational arithmetic; ``t`` can be
    overridden for small hand-checked cases.
    """
    if t is None:
        t = _default_t(d, exp, eps)
    counts = d.n_k
    ell_lower = d.ell - 2 * t
    if ell_lower <= 0:
        raise TruncationError(f"ell - 2t = {ell_lower} <= 0: truncation infeasible")
    n1 = counts.get(1, 0)
    if n1 - 2 * t < 0:
        raise TruncationError(
            f"n_1 - 2t = {n1 - 2 * t} < 0: the zero-children mass would be negative")
    pmf: dict[int, Fraction] = {0: Fraction(n1 - 2 * t, ell_lower)}
    for degree, cnt in counts.items():
        if degree >= 2:
            pmf[degree - 1] = Fraction(degree * cnt, ell_lower)
    law = ProgenyLaw.from_pmf(pmf)  # raises if the mass does not sum to 1
    return law


def truncated_progeny_law(d: DegreeSequence, i: int, exp: Exponents, eps: float,
                          *, t: int | None = None) -> ProgenyLaw:
    """Dominating law with the i-1 largest degrees excluded from the support.

    p(k) = (k+1) #{j >= i: d_j = k+1} / L for 1 <= k <= d_i and
    p(0) = (n_1 - 2t)/L with L = ell - 2t - sum_{j<i} d_j.  Requires d_i >= 2
    (otherwise the construction does not normalize); i = 1 reduces to the
    untruncated law.
    """
    if i < 1:
        raise ValueError("need i >= 1")
    if i > d.n:
        raise ValueError("i exceeds the number of vertices")
    if t is None:
        t = _default_t(d, exp, eps)
    if i == 1:
        return progeny_law(d, exp, eps, t=t)
    deg = d.degrees
    di = int(deg[i - 1])
    if di < 2:
        raise ValueError(f"truncation at i={i} needs d_i >= 2, got d_i = {di}")
    excluded = int(deg[: i - 1].sum())
    L = d.ell - 2 * t - excluded
    if L <= 0:
        raise ValueError(f"normalizer L = {L} <= 0 at truncation index {i}")
    n1 = d.count_of(1)
    if n1 - 2 * t < 0:
        raise TruncationError(
            f"n_1 - 2t = {n1 - 2 * t} < 0: the zero-children mass would be negative")
    tail_deg = deg[i - 1:]
    ks_tail, cnts = np.unique(tail_deg, return_counts=True)
    pmf: dict[int, Fraction] = {0: Fraction(n1 - 2 * t, L)}
    for degree, cnt in zip(ks_tail, cnts):
        if degree >= 2:
            pmf[int(degree) - 1] = Fraction(int(degree) * int(cnt), L)
    if sum(pmf.values()) != 1:
        raise ValueError(
            f"truncated law at i={i} does not normalize; total = {sum(pmf.values())}")
    return ProgenyLaw.from_pmf(pmf)


@dataclass(frozen=True)
class MeanBoundRow:
    i: int
    mean: float
    bound: float
    satisfied: bool


def mean_bound_check(d: DegreeSequence, exp: Exponents, i_range: Sequence[int],
                     eps: float, *, t: int | None = None) -> list[MeanBoundRow]:
    """Exact truncated-law means against the drift bound 1 - beta_i * n**(-eta).

    The bound's constant is fixed at 1 and it only holds asymptotically for
    deep enough truncation, so rows are reported, not asserted.
    """
    i_range = sorted(set(int(i) for i in i_range))
    betas = beta_profile(d, exp, max(i_range))
    scale = float(d.n) ** (-exp.eta)
    rows = []
    for i in i_range:
        law = truncated_progeny_law(d, i, exp, eps, t=t)
        mean = law.mean
        bound = 1.0 - betas[i - 1] * scale
        rows.append(MeanBoundRow(i=i, mean=mean, bound=bound, satisfied=mean <= bound))
    return rows


def i2_lambda(theta: ThetaSequence, lam: float) -> int:
    """Smallest i with (1/mu) sum_{j<=i} theta_j**2 >= 5 lam (1 when lam <= 0)."""
    if lam <= 0:
        return 1
    partial = np.cumsum(theta.values**2) / theta.mu
    idx = np.nonzero(partial >= 5.0 * lam)[0]
    if idx.size == 0:
        raise ValueError(
            f"partial sums exhausted at {partial[-1]:.6g} before reaching {5.0 * lam:.6g}")
    return int(idx[0]) + 1


# ---------------------------------------------------------------------------
# Breadth-first walk and tree height
# ---------------------------------------------------------------------------

def scale_interval(l: int) -> tuple[int, int]:
    """The dyadic band I_l = [2**(l-1), 2**(l+1))."""
    return 2 ** (l - 1), 2 ** (l + 1)


def scale_of(value: int) -> int:
    """The scale assigned on entry: l with value in [2**(l-1), 2**l)."""
    if value < 1:
        raise ValueError("scale is defined for positive values only")
    return int(value).bit_length()


@dataclass(frozen=True)
class WalkTrace:
    """Breadth-first random walk path with scale and upcrossing bookkeeping.

    ``path`` holds s(0)..s(sigma) when absorbed (s(sigma) = 0) or the first
    max_steps values otherwise.  ``harmonic`` is the sum of 1/s(u) over
    u < sigma, ``scale_series`` labels each of those times with its dyadic
    scale, ``scale_time``/``visits`` aggregate occupation and entry counts
    per scale, and ``upcrossings`` counts strict below-a to at-least-b
    passages for each configured interval.
    """

    path: np.ndarray
    absorbed: bool
    sigma: int | None
    harmonic: float
    scale_series: np.ndarray
    scale_time: dict[int, int]
    visits: dict[int, int]
    upcrossings: dict[tuple[int, int], int]

    @property
    def max_value(self) -> int:
        return int(self.path.max())


def walk_from_children(children: Iterator[int] | Sequence[int], init: int,
                       max_steps: int,
                       intervals: Sequence[tuple[int, int]] = ()) -> WalkTrace:
    """Drive the walk s(u) = s(u-1) + zeta_u - 1 from a child-count stream."""
    if init < 1:
        raise ValueError("need init >= 1")
    for a, b in intervals:
        if not (1 <= a < b):
            raise ValueError(f"upcrossing interval needs 1 <= a < b, got ({a}, {b})")
    it = iter(children)
    s = init
    path = [s]
    harmonic = 0.0
    scale = scale_of(s)
    series = [scale]
    scale_time: dict[int, int] = {}
    visits: dict[int, int] = {scale: 1}
    armed = {ab: init < ab[0] for ab in intervals}
    ups = {ab: 0 for ab in intervals}
    lo, hi = scale_interval(scale)
    absorbed = False
    for _ in range(max_steps):
        harmonic += 1.0 / s
        scale_time[scale] = scale_time.get(scale, 0) + 1
        zeta = next(it)
        s += zeta - 1
        path.append(s)
        for ab in intervals:
            a, b = ab
            if armed[ab] and s >= b:
                ups[ab] += 1
                armed[ab] = False
            if s < a:
                armed[ab] = True
        if s == 0:
            absorbed = True
            break
        if not (lo <= s < hi):
            scale = scale_of(s)
            lo, hi = scale_interval(scale)
            visits[scale] = visits.get(scale, 0) + 1
        series.append(scale)
    else:
        series.pop()  # scale at the truncation point was never occupied
    return WalkTrace(
        path=np.array(path, dtype=np.int64),
        absorbed=absorbed,
        sigma=len(path) - 1 if absorbed else None,
        harmonic=harmonic,
        scale_series=np.array(series, dtype=np.int64),
        scale_time=scale_time,
        visits=visits,
        upcrossings=ups,
    )


def bf_walk(law: ProgenyLaw, init: int, seed: int, max_steps: int,
            intervals: Sequence[tuple[int, int]] = ()) -> WalkTrace:
    """Breadth-first random walk with i.i.d. child counts from ``law``.

    Draws one uniform per step from the seeded generator, in the same order
    as gw_height, so both reconstruct the same tree for a given seed.
    """
    rng = np.random.default_rng(seed)
    return walk_from_children(law.stream(rng), init, max_steps, intervals)


@dataclass(frozen=True)
class GWHeight:
    height: int
    extinct: bool
    generation_sizes: tuple[int, ...]


def height_from_children(children: Iterator[int] | Sequence[int], init: int,
                         max_gen: int) -> GWHeight:
    """Replay a child-count stream generation by generation (BFS order).

    The height counts nonempty generations, the root cohort included: a tree
    that dies immediately has height 1.
    """
    if init < 1:
        raise ValueError("need init >= 1")
    it = iter(children)
    sizes = [init]
    current = init
    for _ in range(max_gen):
        nxt = 0
        for _ in range(current):
            nxt += next(it)
        sizes.append(nxt)
        if nxt == 0:
            return GWHeight(height=len(sizes) - 1, extinct=True,
                            generation_sizes=tuple(sizes))
        current = nxt
    return GWHeight(height=len(sizes) - 1, extinct=False,
                    generation_sizes=tuple(sizes))


def gw_height(law: ProgenyLaw, init: int, seed: int, max_gen: int) -> GWHeight:
    """Simulate the branching process and report its extinction generation."""
    rng = np.random.default_rng(seed)
    return height_from_children(law.stream(rng), init, max_gen)


@dataclass(frozen=True)
class HeightHarmonicResult:
    trials: int
    used: int
    excluded: int
    violations: int
    max_ratio: float  # max over used trials of height / harmonic (bound: 3)


def height_harmonic_check(law: ProgenyLaw, seed: int, trials: int,
                          max_steps: int = 10**6) -> HeightHarmonicResult:
    """Verify height <= 3 H(sigma) on trees built from shared seed streams.

    Per trial the same derived seed drives bf_walk and gw_height, so the
    inequality is checked on one realized tree, not merely in distribution.
    Non-absorbed trials (sigma beyond max_steps) are excluded and counted.
    """
    if law.mean >= 1.0:
        raise ValueError("height check needs an absorbing walk; law mean must be < 1")
    root = np.random.SeedSequence(seed)
    violations = 0
    excluded = 0
    max_ratio = 0.0
    for child_seed in root.spawn(trials):
        walk = walk_from_children(law.stream(np.random.default_rng(child_seed)),
                                  init=1, max_steps=max_steps)
        if not walk.absorbed:
            excluded += 1
            continue
        tree = height_from_children(law.stream(np.random.default_rng(child_seed)),
                                    init=1, max_gen=walk.sigma + 1)
        ratio = tree.height / walk.harmonic
        if ratio > max_ratio:
            max_ratio = ratio
        if tree.height > 3.0 * walk.harmonic:
            violations += 1
    return HeightHarmonicResult(trials=trials, used=trials - excluded,
                                excluded=excluded, violations=violations,
                                max_ratio=max_ratio)


# ---------------------------------------------------------------------------
# Vectorized Monte Carlo checks
# ---------------------------------------------------------------------------

def _mc_se(p_hat: float, trials: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


@dataclass(frozen=True)
class HittingBoundResult:
    H: int
    trials: int
    empirical: float
    bound: float
    se: float
    within_bound: bool


def hitting_probability_check(law: ProgenyLaw, H: int, trials: int,
                              seed: int, max_rounds: int = 10**6) -> HittingBoundResult:
    """Empirical P(walk from 1 reaches >= H before 0) against the 1/H bound."""
    if H < 1:
        raise ValueError("need H >= 1")
    if trials < 1:
        raise ValueError("need trials >= 1")
    if law.mean >= 1.0:
        raise ValueError(
            f"supermartingale bound needs E[zeta] < 1, got mean {law.mean:.6g}")
    rng = np.random.default_rng(seed)
    states = np.ones(trials, dtype=np.int64)
    active = states < H  # H = 1 is hit immediately
    reached = np.count_nonzero(~active)
    for _ in range(max_rounds):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        states[idx] += law.sample(rng, idx.size) - 1
        hit = active & (states >= H)
        reached += int(np.count_nonzero(hit))
        active &= (states > 0) & (states < H)
    else:
        raise RuntimeError("hitting simulation did not settle within max_rounds")
    emp = reached / trials
    bound = 1.0 / H
    return HittingBoundResult(H=H, trials=trials, empirical=emp, bound=bound,
                              se=_mc_se(emp, trials),
                              within_bound=emp <= bound + 3.0 * _mc_se(emp, trials))


@dataclass(frozen=True)
class UpcrossingRow:
    k: int
    empirical: float
    bound: float
    se: float
    exceeds_bound: bool


def upcrossing_tail_check(law: ProgenyLaw, a: int, b: int, k_max: int,
                          trials: int, seed: int,
                          max_rounds: int = 10**6) -> list[UpcrossingRow]:
    """Empirical P(U(sigma, [a,b)) >= k) against the geometric bound ((a-1)/b)**k.

    An upcrossing is a strict passage from a value < a to a value >= b,
    scanned left to right over the absorbed walk started at 1.
    """
    if not (1 <= a < b):
        raise ValueError("need 1 <= a < b")
    if law.mean >= 1.0:
        raise ValueError(
            f"supermartingale hypothesis needs E[zeta] < 1, got mean {law.mean:.6g}")
    rng = np.random.default_rng(seed)
    states = np.ones(trials, dtype=np.int64)
    armed = np.full(trials, 1 < a)
    counts = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    for _ in range(max_rounds):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        states[idx] += law.sample(rng, idx.size) - 1
        s = states[idx]
        up = armed[idx] & (s >= b)
        counts[idx[up]] += 1
        armed[idx[up]] = False
        low = s < a
        armed[idx[low]] = True
        active[idx[s == 0]] = False
    else:
        raise RuntimeError("upcrossing simulation did not absorb within max_rounds")
    rows = []
    for k in range(1, k_max + 1):
        emp = float(np.count_nonzero(counts >= k)) / trials
        bound = ((a - 1) / b) ** k
        se = _mc_se(emp, trials)
        rows.append(UpcrossingRow(k=k, empirical=emp, bound=bound, se=se,
                                  exceeds_bound=emp > bound + 3.0 * se))
    return rows


@dataclass(frozen=True)
class ExitTimeEstimate:
    scale: int
    r_estimate: int
    bound: float
    per_start: dict[int, int]


def exit_time_estimate(law: ProgenyLaw, l: int, trials: int, seed: int,
                       tau: float, max_rounds: int = 10**5,
                       max_starts: int = 64) -> ExitTimeEstimate:
    """Median time to leave the dyadic band I_l, maximized over start points.

    The reported estimate plays the role of the band's relaxation time; the
    bound column is the comparison curve 2**((tau-2) l).
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    if l < 1:
        raise ValueError("need l >= 1")
    lo, hi = scale_interval(l)
    starts = list(range(lo, hi))
    if len(starts) > max_starts:
        starts = np.unique(np.linspace(lo, hi - 1, max_starts).astype(int)).tolist()
    rng = np.random.default_rng(seed)
    per_start: dict[int, int] = {}
    for x in starts:
        states = np.full(trials, x, dtype=np.int64)
        times = np.zeros(trials, dtype=np.int64)
        active = np.ones(trials, dtype=bool)
        for t in range(1, max_rounds + 1):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            states[idx] += law.sample(rng, idx.size) - 1
            s = states[idx]
            exited = (s < lo) | (s >= hi)
            times[idx[exited]] = t
            active[idx[exited]] = False
        times[active] = max_rounds  # censored; harmless for the median
        per_start[x] = int(np.quantile(times, 0.5, method="inverted_cdf"))
    r_est = max(per_start.values())
    return ExitTimeEstimate(scale=l, r_estimate=r_est,
                            bound=2.0 ** ((tau - 2.0) * l), per_start=per_start)


def levy_concentration(law: ProgenyLaw, t: int, L: int, trials: int, seed: int,
                       chunk: int = 1 << 20) -> float:
    """Concentration of the free walk at time t: max over x of P(s(t) in [x, x+L)).

    "Free" means no absorption at 0: s(t) = 1 + sum of t increments.  The sup
    is computed from a histogram of Monte Carlo values over windows of L
    consecutive integers.
    """
    if t < 1 or L < 1:
        raise ValueError("need t >= 1 and L >= 1")
    if trials < 1:
        raise ValueError("need trials >= 1")
    rng = np.random.default_rng(seed)
    values = np.empty(trials, dtype=np.int64)
    rows_per_chunk = max(1, chunk // max(t, 1))
    done = 0
    while done < trials:
        m = min(rows_per_chunk, trials - done)
        zeta = law.sample(rng, m * t).reshape(m, t)
        values[done:done + m] = 1 + zeta.sum(axis=1) - t
        done += m
    lo = int(values.min())
    counts = np.bincount(values - lo)
    window = np.convolve(counts, np.ones(L, dtype=np.int64), mode="full")
    return float(window.max()) / trials


@dataclass(frozen=True)
class PathTailBound:
    nu_prime: float
    bound: float
    cutoff_length: float


def subcritical_path_tail(d_sub: DegreeSequence, exp: Exponents, eps: float) -> PathTailBound:
    """Geometric tail bound on long paths in a subcritical (hub-removed) sequence.

    With nu' < 1 the expected number of paths longer than eps * n**eta is at
    most ell'**2 * nu'**(eps n**eta) / (1 - nu') up to an absolute constant
    (taken as 1 here).
    """
    if eps <= 0:
        raise ValueError("need eps > 0")
    nu_p = criticality(d_sub)
    if nu_p >= 1.0:
        raise ValueError(f"path-counting bound needs nu' < 1, got {nu_p:.6g}")
    ell_p = float(d_sub.ell)
    cutoff = eps * float(d_sub.n) ** exp.eta
    bound = ell_p**2 * nu_p**cutoff / (1.0 - nu_p)
    return PathTailBound(nu_prime=nu_p, bound=bound, cutoff_length=cutoff)
