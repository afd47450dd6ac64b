"""Monte Carlo experiment harness: multi-n scaling studies and reports.

Every trial is a pure function of (master_seed, n, trial index): seeds are
derived with a 64-bit avalanche mixer, trials never share mutable state, and
the emitted JSON uses a fixed 12-significant-digit float format so identical
specs produce byte-identical output regardless of scheduling.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .degrees import DegreeSequence, Exponents, criticality, exponents_from_tau, \
    powerlaw_quantile_sequence, retune_to_criticality
from .explore import component_geometry, components
from .graph import critical_p, pair_half_edges, percolate_degrees, realize_percolated
from .explore import hub_removed_diameter

__all__ = [
    "ExperimentSpec",
    "TrialRecord",
    "ExperimentResult",
    "TightnessDiagnostic",
    "PercolationReport",
    "mix_seed",
    "run_experiment",
    "percolation_assumption_report",
    "tightness_diagnostic",
    "extract_rank_statistic",
    "dumps_12g",
]

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Avalanche-mix integers into a 64-bit seed; order-sensitive and collision-shy."""
    acc = 0x6A09E667F3BCC909  # fixed odd offset so mix_seed() != 0
    for p in parts:
        acc = _splitmix64(acc ^ (int(p) & _MASK64))
    return acc


# ---------------------------------------------------------------------------
# Deterministic 12-significant-digit JSON
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite float in output: {v}")
        return f"{v:.12g}"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, Mapping):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_fmt(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def dumps_12g(obj) -> str:
    """JSON with floats printed as %.12g; key order is insertion order."""
    return _fmt(obj)


# ---------------------------------------------------------------------------
# Experiment specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of a multi-n Monte Carlo study.

    mode "direct-critical" retunes the quantile sequence into the critical
    window and realizes it; mode "percolation" keeps the (supercritical)
    quantile sequence and percolates at the critical retention probability.
    ``c_f`` scales the power-law quantile; direct-critical runs need it small
    enough that 1<->2 conversions can reach the window (about 0.46 for
    tau = 3.5).
    """

    tau: float
    lam: float
    n_list: tuple[int, ...]
    trials: int
    master_seed: int
    mode: str = "direct-critical"
    eps: float = 0.1
    c_f: float = 1.0
    delta_grid: tuple[float, ...] = (0.5,)
    hub_count: int = 0
    component_ranks: tuple[int, ...] = (1, 2, 3)
    out_trials: str | None = None
    out_summary: str | None = None
    workers: int = 1
    mass_exact_limit: int = 100_000

    def __post_init__(self):
        if self.mode not in ("direct-critical", "percolation"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.n_list or list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError("n_list must be non-empty, ascending, without repeats")
        if self.trials < 1:
            raise ValueError("need trials >= 1")
        dg = list(self.delta_grid)
        if not dg or any(d <= 0 for d in dg) or dg != sorted(dg):
            raise ValueError("delta_grid must be positive ascending")
        if any(r < 1 for r in self.component_ranks):
            raise ValueError("component ranks are 1-based")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        object.__setattr__(self, "component_ranks", tuple(int(r) for r in self.component_ranks))

    def to_json(self) -> str:
        return dumps_12g({
            "tau": self.tau, "lambda": self.lam, "eps": self.eps,
            "n_list": list(self.n_list), "trials": self.trials,
            "master_seed": self.master_seed, "delta_grid": list(self.delta_grid),
            "hub_count": self.hub_count, "component_ranks": list(self.component_ranks),
            "mode": self.mode, "c_f": self.c_f,
            "out_trials": self.out_trials, "out_summary": self.out_summary,
            "workers": self.workers, "mass_exact_limit": self.mass_exact_limit,
        })

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        raw = json.loads(text)
        kwargs = dict(
            tau=raw["tau"], lam=raw.get("lambda", 0.0),
            n_list=tuple(raw["n_list"]), trials=raw["trials"],
            master_seed=raw["master_seed"],
        )
        for key, attr in (("eps", "eps"), ("c_f", "c_f"), ("mode", "mode"),
                          ("hub_count", "hub_count"), ("out_trials", "out_trials"),
                          ("out_summary", "out_summary"), ("workers", "workers"),
                          ("mass_exact_limit", "mass_exact_limit")):
            if key in raw:
                kwargs[attr] = raw[key]
        if "delta_grid" in raw:
            kwargs["delta_grid"] = tuple(raw["delta_grid"])
        if "component_ranks" in raw:
            kwargs["component_ranks"] = tuple(raw["component_ranks"])
        return cls(**kwargs)


@dataclass(frozen=True)
class TrialRecord:
    """One trial's statistics; wall_clock is kept out of the serialized form."""

    n: int
    trial: int
    seed: int
    mode: str
    nu: float
    p_c: float | None
    retained: int | None
    m1_ratio: float | None
    m2_ratio: float | None
    hub_removed_diam: int | None
    component_stats: tuple[dict, ...]
    wall_clock: float = field(compare=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "trial": self.trial, "seed": self.seed, "mode": self.mode,
            "nu": self.nu, "p_c": self.p_c, "retained": self.retained,
            "m1_ratio": self.m1_ratio, "m2_ratio": self.m2_ratio,
            "hub_removed_diam": self.hub_removed_diam,
            "components": list(self.component_stats),
        }


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple[TrialRecord, ...]
    summary: dict

    def trials_jsonl(self) -> str:
        return "\n".join(dumps_12g(r.to_dict()) for r in self.records) + "\n"

    def summary_json(self) -> str:
        return dumps_12g(self.summary)


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _degrees_for(n: int, tau: float, c_f: float, lam: float, mode: str) -> DegreeSequence:
    exp = exponents_from_tau(tau, lam)
    base = powerlaw_quantile_sequence(n, tau, c_f)
    if mode == "direct-critical":
        return retune_to_criticality(base, exp).sequence
    return base


def _run_trial(spec: ExperimentSpec, n: int, trial: int) -> TrialRecord:
    t0 = time.perf_counter()
    exp = exponents_from_tau(spec.tau, spec.lam)
    d = _degrees_for(n, spec.tau, spec.c_f, spec.lam, spec.mode)
    seed = mix_seed(spec.master_seed, n, trial)
    nu = criticality(d)

    p_c_val = retained = m1_ratio = m2_ratio = None
    if spec.mode == "percolation":
        p_c_val = critical_p(d, exp)
        outcome = percolate_degrees(d, p_c_val, seed=mix_seed(seed, 1))
        g = realize_percolated(outcome, seed=mix_seed(seed, 2))
        retained = outcome.retained_count
        dp = outcome.percolated_degrees.astype(np.float64)
        db = d.degrees.astype(np.float64)
        m1, m2 = db.sum(), (db * (db - 1.0)).sum()
        m1p, m2p = dp.sum(), (dp * (dp - 1.0)).sum()
        m1_ratio = float(m1p / (p_c_val * m1)) if p_c_val > 0 else None
        m2_ratio = float(m2p / (p_c_val**2 * m2)) if p_c_val > 0 else None
    else:
        g = pair_half_edges(d, seed=mix_seed(seed, 2))

    comps = components(g)
    rng_stats = np.random.default_rng(mix_seed(seed, 3))
    n_rho = float(n) ** exp.rho
    n_eta = float(n) ** exp.eta
    comp_stats = []
    mass_sources = None if n <= spec.mass_exact_limit else 512
    for rank in spec.component_ranks:
        if rank > len(comps):
            continue
        comp = comps[rank - 1]
        rv = comp.members[int(rng_stats.integers(comp.vertices))]
        geom = component_geometry(g, comp, spec.delta_grid, exp,
                                  radius_vertex=rv, mass_sources=mass_sources,
                                  seed=mix_seed(seed, 4, rank))
        comp_stats.append({
            "rank": rank,
            "vertices": comp.vertices,
            "edges": comp.edges,
            "surplus": comp.surplus,
            "diameter": geom.diameter,
            "radius_vertex": rv,
            "radius": geom.radius,
            "scaled_size": comp.vertices / n_rho,
            "scaled_diameter": geom.diameter / n_eta,
            "scaled_radius": geom.radius / n_eta,
            "mass": {f"{dlt:.12g}": v for dlt, v in zip(geom.mass.delta_grid,
                                                        geom.mass.values)},
            "inv_mass": {f"{dlt:.12g}": (1.0 / v if v > 0 else None)
                         for dlt, v in zip(geom.mass.delta_grid, geom.mass.values)},
            "mass_exact": geom.mass.exact,
        })

    hub_diam = None
    if spec.hub_count > 0:
        hub_diam = hub_removed_diameter(g, min(spec.hub_count, g.n))

    return TrialRecord(
        n=n, trial=trial, seed=seed, mode=spec.mode, nu=nu,
        p_c=p_c_val, retained=retained, m1_ratio=m1_ratio, m2_ratio=m2_ratio,
        hub_removed_diam=hub_diam, component_stats=tuple(comp_stats),
        wall_clock=time.perf_counter() - t0,
    )


def _worker(args: tuple[str, int, int]) -> TrialRecord:
    spec_json, n, trial = args
    return _run_trial(ExperimentSpec.from_json(spec_json), n, trial)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every (n, trial) pair, emit records sorted by (n, trial), summarize.

    With spec.workers > 1 the trials run in a process pool; results are merged
    by a deterministic sort, so the output is schedule-independent either way.
    Output files are written when the spec carries paths.
    """
    tasks = [(n, t) for n in spec.n_list for t in range(spec.trials)]
    if spec.workers > 1:
        import multiprocessing as mp
        spec_json = spec.to_json()
        with mp.get_context("spawn").Pool(spec.workers) as pool:
            records = pool.map(_worker, [(spec_json, n, t) for n, t in tasks],
                               chunksize=max(1, len(tasks) // (4 * spec.workers)))
    else:
        records = [_run_trial(spec, n, t) for n, t in tasks]
    records.sort(key=lambda r: (r.n, r.trial))
    summary = summarize(spec, records)
    result = ExperimentResult(spec=spec, records=tuple(records), summary=summary)
    if spec.out_trials:
        with open(spec.out_trials, "w") as fh:
            fh.write(result.trials_jsonl())
    if spec.out_summary:
        with open(spec.out_summary, "w") as fh:
            fh.write(result.summary_json())
    return result


def _quantiles(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    q10, q50, q90 = np.quantile(arr, [0.1, 0.5, 0.9])
    return {"q10": float(q10), "q50": float(q50), "q90": float(q90),
            "count": int(arr.size)}


def summarize(spec: ExperimentSpec, records: Sequence[TrialRecord]) -> dict:
    """Per-n 10/50/90% quantiles for each tracked rescaled statistic."""
    per_n: dict = {}
    for n in spec.n_list:
        recs = [r for r in records if r.n == n]
        stats: dict = {}
        for rank in spec.component_ranks:
            rows = [c for r in recs for c in r.component_stats if c["rank"] == rank]
            if not rows:
                continue
            stats[f"scaled_size_rank{rank}"] = _quantiles([c["scaled_size"] for c in rows])
            stats[f"scaled_diameter_rank{rank}"] = _quantiles(
                [c["scaled_diameter"] for c in rows])
            stats[f"scaled_radius_rank{rank}"] = _quantiles(
                [c["scaled_radius"] for c in rows])
            for dlt in spec.delta_grid:
                key = f"{dlt:.12g}"
                vals = [c["inv_mass"][key] for c in rows if c["inv_mass"][key] is not None]
                if vals:
                    stats[f"inv_mass_rank{rank}_delta{key}"] = _quantiles(vals)
        if spec.mode == "percolation":
            stats["m1_ratio_abs_dev"] = _quantiles(
                [abs(r.m1_ratio - 1.0) for r in recs if r.m1_ratio is not None])
            stats["m2_ratio_abs_dev"] = _quantiles(
                [abs(r.m2_ratio - 1.0) for r in recs if r.m2_ratio is not None])
        per_n[str(n)] = stats
    return {"mode": spec.mode, "tau": spec.tau, "lambda": spec.lam,
            "trials": spec.trials, "per_n": per_n}


# ---------------------------------------------------------------------------
# Diagnostics over emitted records
# ---------------------------------------------------------------------------

def extract_rank_statistic(records: Sequence[TrialRecord], name: str, rank: int,
                           delta: float | None = None) -> dict[int, list[float]]:
    """Collect one per-component statistic grouped by n.

    ``name`` is a key of the component stats dict ("scaled_size",
    "scaled_diameter", ...); for "inv_mass" pass the delta to look up.
    """
    out: dict[int, list[float]] = {}
    for r in records:
        for c in r.component_stats:
            if c["rank"] != rank:
                continue
            if name == "inv_mass":
                if delta is None:
                    raise ValueError("inv_mass extraction needs a delta")
                v = c["inv_mass"][f"{float(delta):.12g}"]
            else:
                v = c[name]
            if v is not None:
                out.setdefault(r.n, []).append(float(v))
    return out


@dataclass(frozen=True)
class TightnessDiagnostic:
    statistic: str
    quantiles: dict[int, dict]
    dispersion_ratio: float
    threshold: float
    tight_consistent: bool


def tightness_diagnostic(values_by_n: Mapping[int, Sequence[float]],
                         statistic: str = "",
                         threshold: float = 2.0,
                         min_trials: int = 50) -> TightnessDiagnostic:
    """Cross-n stability of the 90% quantile as a tightness signature.

    dispersion_ratio = max_n q90(n) / min_n q90(n); the sequence is flagged
    tight-consistent when the ratio stays below the (harness, non-theoretical)
    threshold.
    """
    if len(values_by_n) < 2:
        raise ValueError("need at least two distinct n")
    for n, vals in values_by_n.items():
        if len(vals) < min_trials:
            raise ValueError(f"need at least {min_trials} trials per n, got {len(vals)} at n={n}")
    qs = {int(n): _quantiles(v) for n, v in sorted(values_by_n.items())}
    q90s = [q["q90"] for q in qs.values()]
    lo = min(q90s)
    ratio = float("inf") if lo <= 0 else max(q90s) / lo
    return TightnessDiagnostic(statistic=statistic, quantiles=qs,
                               dispersion_ratio=float(ratio), threshold=threshold,
                               tight_consistent=ratio < threshold)


# ---------------------------------------------------------------------------
# Percolated-degree assumption report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PercolationReport:
    p: float
    trials: int
    skipped: bool
    sum_rule_violations: int
    m1_dev_quantiles: dict | None
    m2_dev_quantiles: dict | None
    m1_threshold: float
    m2_threshold: float
    hub_dev_quantiles: dict | None
    c1_tail_quantiles: dict | None

    def to_json(self) -> str:
        return dumps_12g({
            "p": self.p, "trials": self.trials, "skipped": self.skipped,
            "sum_rule_violations": self.sum_rule_violations,
            "m1_dev": self.m1_dev_quantiles, "m1_threshold": self.m1_threshold,
            "m2_dev": self.m2_dev_quantiles, "m2_threshold": self.m2_threshold,
            "hub_dev": self.hub_dev_quantiles, "c1_tail": self.c1_tail_quantiles,
        })


def _c1_tail_constant(dp: np.ndarray, n: int, tau: float) -> float:
    """min over l of l**(tau-2) * (1/n) sum_i d_i^p 1{d_i^p >= l}."""
    pos = np.sort(dp[dp > 0])[::-1]
    if pos.size == 0:
        return 0.0
    d1 = int(pos[0])
    prefix = np.cumsum(pos)
    asc = pos[::-1]
    ls = np.arange(1, d1 + 1, dtype=np.int64)
    count_ge = pos.size - np.searchsorted(asc, ls, side="left")
    tail = prefix[count_ge - 1] / n
    return float(np.min(ls ** (tau - 2.0) * tail))


def percolation_assumption_report(d: DegreeSequence, p: float, trials: int,
                                  seed: int, exp: Exponents,
                                  hub_count: int = 10,
                                  threshold_const: float = 5.0) -> PercolationReport:
    """Monte Carlo verification that percolated degrees keep the moment scalings.

    Checks, over independent degree percolations: the exact half-edge sum rule
    sum d_i^p = 2 R; the relative first/second falling-factorial moment
    deviations against threshold_const * n**(-1/2) and
    threshold_const * n**(3 alpha/2 - 1) (the constant is harness
    configuration, not theory); hub-degree concentration; and the size-biased
    tail constant of the percolated sequence.
    """
    if trials < 100:
        raise ValueError("need trials >= 100 for stable quantiles")
    n = d.n
    db = d.degrees.astype(np.float64)
    m1, m2 = db.sum(), (db * (db - 1.0)).sum()
    if p == 0.0:
        # every moment ratio is 0/0: flag and skip
        return PercolationReport(
            p=p, trials=trials, skipped=True, sum_rule_violations=0,
            m1_dev_quantiles=None, m2_dev_quantiles=None,
            m1_threshold=threshold_const * n**-0.5,
            m2_threshold=threshold_const * float(n) ** (1.5 * exp.alpha - 1.0),
            hub_dev_quantiles=None, c1_tail_quantiles=None)
    m1_devs, m2_devs, hub_devs, c1s = [], [], [], []
    violations = 0
    hubs = np.arange(min(hub_count, n))
    for t in range(trials):
        out = percolate_degrees(d, p, seed=mix_seed(seed, t))
        dp = out.percolated_degrees
        if int(dp.sum()) != 2 * out.retained_count:
            violations += 1
        dpf = dp.astype(np.float64)
        m1_devs.append(abs(dpf.sum() / (p * m1) - 1.0))
        m2_devs.append(abs((dpf * (dpf - 1.0)).sum() / (p * p * m2) - 1.0))
        hub_devs.append(float(np.max(np.abs(dpf[hubs] - db[hubs] * p) / (db[hubs] * p))))
        c1s.append(_c1_tail_constant(dp, n, exp.tau))
    return PercolationReport(
        p=p, trials=trials, skipped=False, sum_rule_violations=violations,
        m1_dev_quantiles=_quantiles(m1_devs),
        m2_dev_quantiles=_quantiles(m2_devs),
        m1_threshold=threshold_const * n**-0.5,
        m2_threshold=threshold_const * float(n) ** (1.5 * exp.alpha - 1.0),
        hub_dev_quantiles=_quantiles(hub_devs),
        c1_tail_quantiles=_quantiles(c1s),
    )
