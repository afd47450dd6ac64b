"""Heavy-tailed degree sequences and critical-window diagnostics.

Builds power-law degree sequences (deterministic quantile construction and
i.i.d. order statistics), tunes them into the critical window, and runs the
numerical checks on the limiting-weight sequence that the rest of the
laboratory relies on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import quad

__all__ = [
    "Exponents",
    "DegreeSequence",
    "ThetaSequence",
    "AssumptionCheck",
    "AssumptionReport",
    "RetuneResult",
    "RetuneError",
    "exponents_from_tau",
    "powerlaw_quantile_sequence",
    "iid_powerlaw_sequence",
    "criticality",
    "retune_to_criticality",
    "beta_profile",
    "kn_default",
    "check_assumptions",
    "psi_theta",
    "compactness_diagnostics",
    "CompactnessDiagnostics",
]


# ---------------------------------------------------------------------------
# Exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exponents:
    """Scaling exponents of the critical window for a power-law exponent tau.

    alpha = 1/(tau-1) governs hub degrees, rho = (tau-2)/(tau-1) component
    sizes, eta = (tau-3)/(tau-1) distances.  ``lam`` locates the window:
    criticality targets nu_n = 1 + lam * n**(-eta).
    """

    tau: float
    lam: float
    alpha: float
    rho: float
    eta: float

    def __post_init__(self):
        if not (3.0 < self.tau < 4.0):
            raise ValueError(f"tau must lie in the open interval (3, 4), got {self.tau}")


def exponents_from_tau(tau: float, lam: float = 0.0) -> Exponents:
    """Derive the scaling exponents from tau in (3, 4)."""
    if not (3.0 < tau < 4.0):
        raise ValueError(f"tau must lie in the open interval (3, 4), got {tau}")
    alpha = 1.0 / (tau - 1.0)
    rho = (tau - 2.0) / (tau - 1.0)
    eta = (tau - 3.0) / (tau - 1.0)
    return Exponents(tau=tau, lam=lam, alpha=alpha, rho=rho, eta=eta)


# ---------------------------------------------------------------------------
# Degree sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeSequence:
    """Non-increasing integer degree sequence with cached totals.

    ``degrees`` is stored sorted non-increasing; ``ell`` is the total degree
    (number of half-edges).  Vertex ids are the 0-based positions, so vertex 0
    has the largest degree.
    """

    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("degrees must be a non-empty 1-d integer sequence")
        if (d < 0).any():
            raise ValueError("degrees must be non-negative")
        if (np.diff(d) > 0).any():
            raise ValueError("degrees must be sorted non-increasing")
        object.__setattr__(self, "degrees", d)

    @classmethod
    def from_degrees(cls, degrees: Iterable[int]) -> "DegreeSequence":
        """Sort the given degrees non-increasing and wrap them."""
        d = np.sort(np.asarray(list(degrees), dtype=np.int64))[::-1].copy()
        return cls(d)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def ell(self) -> int:
        return int(self.degrees.sum())

    @property
    def n_k(self) -> dict[int, int]:
        """Map degree -> number of vertices with that degree."""
        ks, counts = np.unique(self.degrees, return_counts=True)
        return {int(k): int(c) for k, c in zip(ks, counts)}

    def count_of(self, k: int) -> int:
        return int((self.degrees == k).sum())

    # -- serialization: header line then one sorted degree per line ----------

    def to_text(self) -> str:
        lines = [f"# n={self.n} ell={self.ell}"]
        lines.extend(str(int(d)) for d in self.degrees)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DegreeSequence":
        values = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values.append(int(line))
        return cls.from_degrees(values)


def powerlaw_quantile_sequence(n: int, tau: float, c_f: float = 1.0) -> DegreeSequence:
    """Deterministic power-law sequence d_i = max(1, floor((c_f*n/i)**alpha)).

    The clamp at 1 keeps a positive density of degree-one vertices; if the
    total degree comes out odd, one extra half-edge is attached to vertex 0.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if c_f <= 0:
        raise ValueError("need c_f > 0")
    exp = exponents_from_tau(tau)
    i = np.arange(1, n + 1, dtype=np.float64)
    d = np.maximum(1, np.floor((c_f * n / i) ** exp.alpha)).astype(np.int64)
    if d.sum() % 2 == 1:
        d[0] += 1
    return DegreeSequence(d)


def iid_powerlaw_sequence(n: int, tau: float, c_f: float = 1.0, seed: int = 0) -> DegreeSequence:
    """Order statistics of an i.i.d. power-law sample, via Gamma ratios.

    Sample n+1 unit exponentials, form partial sums Gamma_i, and apply the
    clamped quantile rule with Gamma_{n+1}/Gamma_i in place of n/i.  The
    result is sorted and parity-fixed like the deterministic construction,
    and is a pure function of the seed.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    exp = exponents_from_tau(tau)
    rng = np.random.default_rng(seed)
    gamma = np.cumsum(rng.exponential(1.0, size=n + 1))
    ratio = gamma[-1] / gamma[:-1]
    d = np.maximum(1, np.floor((c_f * ratio) ** exp.alpha)).astype(np.int64)
    d = np.sort(d)[::-1].copy()
    if d.sum() % 2 == 1:
        d[0] += 1
    return DegreeSequence(d)


def criticality(d: DegreeSequence) -> float:
    """nu_n = sum d_i (d_i - 1) / sum d_i, computed from exact integer sums."""
    ell = d.ell
    if ell == 0:
        raise ValueError("criticality undefined for a sequence with total degree 0")
    q = int((d.degrees * (d.degrees - 1)).sum())
    return q / ell


# ---------------------------------------------------------------------------
# Retuning into the critical window
# ---------------------------------------------------------------------------

class RetuneError(ValueError):
    """Criticality target unreachable by 1<->2 conversions; carries best gap."""

    def __init__(self, message: str, best_gap: float, best_nu: float):
        super().__init__(message)
        self.best_gap = best_gap
        self.best_nu = best_nu


@dataclass(frozen=True)
class RetuneResult:
    sequence: DegreeSequence
    nu: float
    target: float
    conversions: int  # vertices moved 1->2 (negative: 2->1)


def _nu_after(q0: int, l0: int, j: int) -> Fraction:
    return Fraction(q0 + 2 * j, l0 + j)


def retune_to_criticality(d: DegreeSequence, exp: Exponents) -> RetuneResult:
    """Convert degree-1 vertices to degree-2 (or back) until nu_n hits the window.

    Conversions happen two at a time so the total degree stays even; each pair
    of conversions moves sum d(d-1) by 4 and sum d by 2, so nu moves in steps
    of roughly 2(2-nu)/ell.  Degrees >= 3 are never touched.  Raises
    RetuneError with the best achievable gap when the low-degree mass runs
    out before the target is met.
    """
    n = d.n
    target = 1.0 + exp.lam * float(n) ** (-exp.eta)
    q0 = int((d.degrees * (d.degrees - 1)).sum())
    l0 = d.ell
    n1 = d.count_of(1)
    n2 = d.count_of(2)

    # nu(j) = (q0 + 2j)/(l0 + j) is monotone in j (sign of 2 - nu0); solve for
    # the unconstrained even optimum, then compare the two even neighbours.
    if abs(2.0 - target) < 1e-15:
        raise ValueError("target nu == 2 is outside the tunable range")
    j_star = (target * l0 - q0) / (2.0 - target)
    lo = -(n2 - (n2 % 2))
    hi = n1 - (n1 % 2)
    candidates = set()
    for base in (math.floor(j_star / 2.0) * 2, math.ceil(j_star / 2.0) * 2):
        for off in (-2, 0, 2):
            candidates.add(min(hi, max(lo, base + off)))
    candidates.add(0)

    target_frac = Fraction(target).limit_denominator(10**15)
    best_j, best_gap = None, None
    for j in sorted(candidates):
        gap = abs(_nu_after(q0, l0, j) - target_frac)
        if best_gap is None or gap < best_gap:
            best_j, best_gap = j, gap

    # Unreachable if the optimum is clamped at a boundary and still further
    # from the target than one conversion step.
    step = abs(_nu_after(q0, l0, best_j) - _nu_after(q0, l0, best_j + (2 if best_j < hi else -2)))
    at_boundary = best_j in (lo, hi) and not (lo < round(j_star) < hi)
    if at_boundary and best_gap > step:
        nu_best = float(_nu_after(q0, l0, best_j))
        raise RetuneError(
            f"cannot reach nu target {target:.6g}: best achievable nu is {nu_best:.6g} "
            f"(gap {float(best_gap):.3g}) with {best_j} conversions",
            best_gap=float(best_gap),
            best_nu=nu_best,
        )

    if best_j == 0:
        return RetuneResult(sequence=d, nu=criticality(d), target=target, conversions=0)

    deg = d.degrees.copy()
    if best_j > 0:
        idx = np.where(deg == 1)[0][: best_j]
        deg[idx] = 2
    else:
        idx = np.where(deg == 2)[0][: -best_j]
        deg[idx] = 1
    out = DegreeSequence.from_degrees(deg)
    return RetuneResult(sequence=out, nu=criticality(out), target=target, conversions=best_j)


# ---------------------------------------------------------------------------
# Assumption diagnostics
# ---------------------------------------------------------------------------

def beta_profile(d: DegreeSequence, exp: Exponents, i_max: int) -> np.ndarray:
    """beta_i = n**(-2 alpha) * sum_{j<i} d_j**2 for i = 1..i_max (beta_1 = 0)."""
    if i_max > d.n:
        raise ValueError("i_max exceeds the number of vertices")
    scale = float(d.n) ** (-2.0 * exp.alpha)
    sq = d.degrees[: i_max - 1].astype(np.float64) ** 2
    out = np.zeros(i_max, dtype=np.float64)
    np.cumsum(sq * scale, out=out[1:])
    return out


def kn_default(n: int, exp: Exponents) -> int:
    """Default hub-count cut K_n: grows faster than (log n)^{1/(1-2 alpha)} but o(n^alpha)."""
    if n < 3:
        raise ValueError("need n >= 3")
    ln = math.log(n)
    lln = math.log(ln)
    grow = math.ceil(ln ** (1.0 / (1.0 - 2.0 * exp.alpha)) * lln)
    cap = math.floor(n**exp.alpha / ln)
    return max(1, min(grow, cap, n))


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    values: Mapping[str, float]
    threshold: float | None
    flag: str  # "pass" | "fail" | "inconclusive"
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "values": dict(self.values),
            "threshold": self.threshold,
            "flag": self.flag,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[AssumptionCheck, ...]

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps([c.to_dict() for c in self.checks], indent=indent)


def size_biased_tail_constant(d: DegreeSequence, tau: float) -> float:
    """min over 1 <= l <= d_1 of l**(tau-2) * P(size-biased degree >= l).

    P(D* >= l) equals the fraction of half-edges attached to vertices of
    degree >= l; with d sorted this is a prefix sum over the largest degrees.
    """
    deg = d.degrees
    ell = d.ell
    d1 = int(deg[0])
    if d1 == 0:
        return 0.0
    prefix = np.cumsum(deg)
    # number of vertices with degree >= l, l = 1..d1, via searchsorted on the
    # ascending view of the sorted-descending array
    asc = deg[::-1]
    ls = np.arange(1, d1 + 1, dtype=np.int64)
    count_ge = d.n - np.searchsorted(asc, ls, side="left")
    tail = prefix[count_ge - 1] / ell  # count_ge >= 1 because d_1 >= l
    return float(np.min(ls ** (tau - 2.0) * tail))


def check_assumptions(d: DegreeSequence, exp: Exponents, k_probe: int) -> AssumptionReport:
    """Numerically probe the standing assumptions on a single sequence.

    Asymptotic clauses cannot pass or fail at one n, so they are reported
    with flag "inconclusive" and their measured values; only structural
    violations (no degree-one vertices) are flagged as failures.
    """
    if k_probe > d.n:
        raise ValueError("k_probe exceeds the number of vertices")
    n = d.n
    deg = d.degrees.astype(np.float64)
    checks: list[AssumptionCheck] = []

    hub = {f"i={i+1}": float(deg[i] * n ** (-exp.alpha)) for i in range(min(k_probe, n))}
    checks.append(AssumptionCheck(
        name="high_degree_scaling", values=hub, threshold=None, flag="inconclusive",
        detail="n^-alpha d_i should stabilise to theta_i along n",
    ))

    checks.append(AssumptionCheck(
        name="moments",
        values={"ell_over_n": d.ell / n, "sum_d2_over_n": float((deg**2).sum() / n)},
        threshold=None, flag="inconclusive",
        detail="first and second empirical moments; converge along n",
    ))

    third = {}
    for K in (k_probe, 2 * k_probe):
        tail = float((deg[min(K, n):] ** 3).sum() * n ** (-3.0 * exp.alpha))
        third[f"K={K}"] = tail
    checks.append(AssumptionCheck(
        name="third_moment_tail", values=third, threshold=None, flag="inconclusive",
        detail="n^-3alpha sum_{i>K} d_i^3; should vanish as K grows with n",
    ))

    n1_frac = d.count_of(1) / n
    checks.append(AssumptionCheck(
        name="degree_one_density", values={"n1_over_n": n1_frac}, threshold=0.0,
        flag="pass" if n1_frac > 0 else "fail",
        detail="a positive density of degree-one vertices is required",
    ))

    c0 = size_biased_tail_constant(d, exp.tau)
    checks.append(AssumptionCheck(
        name="size_biased_tail_constant", values={"c0": c0}, threshold=0.0,
        flag="pass" if c0 > 0 else "fail",
        detail="min_l l^(tau-2) P(D* >= l) over 1 <= l <= d_1",
    ))

    kn = kn_default(n, exp)
    beta_kn = float(beta_profile(d, exp, kn)[-1]) if kn >= 1 else 0.0
    checks.append(AssumptionCheck(
        name="beta_growth", values={"K_n": float(kn), "beta_Kn": beta_kn,
                                    "beta_Kn_over_log_n": beta_kn / math.log(n)},
        threshold=None, flag="inconclusive",
        detail="beta_{K_n} should outgrow log n along n",
    ))

    kn_hi = max(kn, k_probe + 1)
    betas = beta_profile(d, exp, kn_hi)
    hub_sum = {}
    for eps in (0.1, 0.5, 1.0):
        i_range = np.arange(k_probe + 1, kn_hi + 1)  # i in (K, K_n], 1-based
        vals = deg[i_range - 1] * n ** (-exp.alpha) * np.exp(-eps * betas[i_range - 1])
        hub_sum[f"eps={eps}"] = float(vals.sum())
    checks.append(AssumptionCheck(
        name="hub_tail_sum", values=hub_sum, threshold=None, flag="inconclusive",
        detail="sum over i in (K, K_n) of (d_i/n^alpha) exp(-eps beta_i); small is good",
    ))

    return AssumptionReport(checks=tuple(checks))


# ---------------------------------------------------------------------------
# Limiting weight sequence and compactness diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaSequence:
    """Non-increasing positive weights with the limiting mean degree mu."""

    values: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("theta must be a non-empty 1-d sequence")
        if (v <= 0).any():
            raise ValueError("theta entries must be positive")
        if (np.diff(v) > 1e-12).any():
            raise ValueError("theta must be non-increasing")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_rule(cls, rule: Callable[[np.ndarray], np.ndarray], terms: int,
                  mu: float = 1.0) -> "ThetaSequence":
        i = np.arange(1, terms + 1, dtype=np.float64)
        return cls(values=rule(i), mu=mu)

    @classmethod
    def power(cls, exponent: float, terms: int, scale: float = 1.0,
              mu: float = 1.0) -> "ThetaSequence":
        """theta_i = scale * i**(-exponent)."""
        return cls.from_rule(lambda i: scale * i ** (-exponent), terms, mu=mu)

    @classmethod
    def from_degrees(cls, d: DegreeSequence, exp: Exponents, i_max: int) -> "ThetaSequence":
        vals = d.degrees[:i_max].astype(np.float64) * float(d.n) ** (-exp.alpha)
        return cls(values=vals, mu=d.ell / d.n)


def _psi_terms(theta: np.ndarray, u: float) -> np.ndarray:
    # x(e^-x - 1 + x) evaluated stably via expm1
    x = u * theta
    return theta * (np.expm1(-x) + x)


def psi_theta(theta: ThetaSequence, u: float, trunc: int) -> float:
    """Partial sum over i <= trunc of theta_i (e^{-u theta_i} - 1 + u theta_i)."""
    if u < 0:
        raise ValueError("need u >= 0")
    if trunc < 1:
        raise ValueError("need trunc >= 1")
    th = theta.values[:trunc]
    return float(_psi_terms(th, u).sum())


def _psi_truncated(theta_vals: np.ndarray, u: float, rel_tail: float = 1e-15) -> float:
    """Series sum with early stop once summands drop below rel_tail * running sum."""
    terms = _psi_terms(theta_vals, u)
    run = np.cumsum(terms)
    # terms are non-increasing in i (theta sorted), so a single cut suffices
    small = np.nonzero(terms[1:] < rel_tail * run[:-1])[0]
    if small.size:
        return float(run[small[0]])
    return float(run[-1])


@dataclass(frozen=True)
class CompactnessDiagnostics:
    inf_condition: float
    tail_sums: Mapping[float, float]
    integral_estimate: float
    integral_error: float
    u_max: float
    i_max: int


def compactness_diagnostics(theta: ThetaSequence, i_max: int, u_max: float,
                            tau: float,
                            eps_values: Sequence[float] = (0.1, 1.0)) -> CompactnessDiagnostics:
    """Numeric probes of the compactness criteria for the limiting weights.

    Reports (a) min over i < i_max of theta_{i+1}**(tau-2) * sum_{j<=i} theta_j,
    (b) the truncated sums sum_i theta_i exp(-eps * sum_{j<=i} theta_j^2), and
    (c) the quadrature estimate of the integral of 1/Psi over [1, u_max] with
    the series for Psi truncated at i_max terms.
    """
    if i_max < 2:
        raise ValueError("need i_max >= 2")
    th = theta.values[: min(i_max, theta.values.size)]
    cum = np.cumsum(th)
    if th.size < 2:
        # finite support: the implicit zero tail sends the infimum to zero
        inf_cond = 0.0
    else:
        inf_cond = float(np.min(th[1:] ** (tau - 2.0) * cum[:-1]))

    cum_sq = np.cumsum(th**2)
    tails = {float(e): float((th * np.exp(-e * cum_sq)).sum()) for e in eps_values}

    integral, err = quad(lambda u: 1.0 / _psi_truncated(th, u), 1.0, u_max,
                         epsrel=1e-6, limit=200)
    return CompactnessDiagnostics(
        inf_condition=inf_cond,
        tail_sums=tails,
        integral_estimate=float(integral),
        integral_error=float(err),
        u_max=float(u_max),
        i_max=int(th.size),
    )
