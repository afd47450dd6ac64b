import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmlab.degrees import (
    DegreeSequence,
    RetuneError,
    ThetaSequence,
    beta_profile,
    check_assumptions,
    compactness_diagnostics,
    criticality,
    exponents_from_tau,
    iid_powerlaw_sequence,
    kn_default,
    powerlaw_quantile_sequence,
    psi_theta,
    retune_to_criticality,
    size_biased_tail_constant,
)


# -- exponents ---------------------------------------------------------------

def test_exponents_tau_35():
    e = exponents_from_tau(3.5, 0.0)
    assert e.alpha == pytest.approx(0.4, abs=1e-15)
    assert e.rho == pytest.approx(0.6, abs=1e-15)
    assert e.eta == pytest.approx(0.2, abs=1e-15)


def test_exponents_near_lower_boundary():
    e = exponents_from_tau(3.0001)
    # eta = (tau-3)/(tau-1) -> 0+ as tau -> 3+
    assert 0.0 < e.eta < 1e-4
    assert e.eta == pytest.approx(1e-4 / 2.0001, rel=1e-12)


@pytest.mark.parametrize("tau", [3.0, 4.0, 2.5, 4.2])
def test_exponents_domain_error(tau):
    with pytest.raises(ValueError):
        exponents_from_tau(tau)


@given(st.floats(min_value=3.0, max_value=4.0, exclude_min=True, exclude_max=True))
@settings(max_examples=100, deadline=None)
def test_exponent_identities(tau):
    e = exponents_from_tau(tau)
    assert e.rho == pytest.approx(1.0 - e.alpha, abs=1e-14)
    assert e.eta == pytest.approx(1.0 - 2.0 * e.alpha, abs=1e-14)
    assert e.eta == pytest.approx(e.rho - e.alpha, abs=1e-14)
    assert 0.0 < e.alpha < 0.5 and 0.0 < e.rho < 1.0 and 0.0 < e.eta < 1.0


# -- power-law constructions -------------------------------------------------

def test_quantile_sequence_head_and_tail():
    d = powerlaw_quantile_sequence(10_000, 3.5, 1.0)
    # oracle: d_1 = floor((n/1)^alpha) = floor(10^1.6)
    assert d.degrees[0] == math.floor(10_000**0.4) == 39
    assert d.degrees[-1] == 1
    assert d.ell % 2 == 0
    assert (np.diff(d.degrees) <= 0).all()
    assert d.degrees.min() >= 1


def test_quantile_sequence_n2_by_hand():
    # (2/1)^0.4 = 1.32 -> 1 and (2/2)^0.4 = 1 -> 1; sum already even
    d = powerlaw_quantile_sequence(2, 3.5, 1.0)
    assert d.degrees.tolist() == [1, 1]
    assert d.ell % 2 == 0


@given(st.integers(min_value=2, max_value=400),
       st.floats(min_value=3.05, max_value=3.95))
@settings(max_examples=60, deadline=None)
def test_quantile_sequence_invariants(n, tau):
    d = powerlaw_quantile_sequence(n, tau, 1.0)
    assert d.ell % 2 == 0
    assert d.degrees.min() >= 1
    assert (np.diff(d.degrees) <= 0).all()


def test_iid_sequence_deterministic():
    a = iid_powerlaw_sequence(500, 3.5, 1.0, seed=123)
    b = iid_powerlaw_sequence(500, 3.5, 1.0, seed=123)
    assert np.array_equal(a.degrees, b.degrees)
    c = iid_powerlaw_sequence(500, 3.5, 1.0, seed=124)
    assert not np.array_equal(a.degrees, c.degrees)


def test_iid_sequence_degree_one_fraction_matches_quantile():
    n = 10_000
    ref = powerlaw_quantile_sequence(n, 3.5, 1.0)
    ref_frac = ref.count_of(1) / n
    fracs = [iid_powerlaw_sequence(n, 3.5, 1.0, seed=s).count_of(1) / n
             for s in range(100)]
    assert abs(np.mean(fracs) - ref_frac) < 0.05


def test_iid_sequence_gamma_lln():
    # law of large numbers at finite n: Gamma_n / n close to 1
    rng = np.random.default_rng(7)
    gam = np.cumsum(rng.exponential(1.0, size=10**5))
    assert abs(gam[-1] / 10**5 - 1.0) < 0.02


# -- criticality and retuning ------------------------------------------------

def test_criticality_closed_forms():
    assert criticality(DegreeSequence.from_degrees([2] * 17)) == 1.0
    assert criticality(DegreeSequence.from_degrees([1] * 10)) == 0.0
    assert criticality(DegreeSequence.from_degrees([3, 2, 2, 1])) == 10 / 8


def test_criticality_requires_edges():
    with pytest.raises(ValueError):
        criticality(DegreeSequence.from_degrees([0, 0]))


def test_retune_noop_when_on_target():
    d = DegreeSequence.from_degrees([2] * 40)  # nu = 1 exactly
    exp = exponents_from_tau(3.5, 0.0)
    res = retune_to_criticality(d, exp)
    assert res.conversions == 0
    assert np.array_equal(res.sequence.degrees, d.degrees)
    assert res.nu == 1.0


def test_retune_quantile_hits_window():
    exp = exponents_from_tau(3.5, 0.0)
    d = powerlaw_quantile_sequence(10_000, 3.5, 0.46)
    res = retune_to_criticality(d, exp)
    # one pair of conversions moves nu by ~2(2-nu)/ell; allow two steps
    step = 2.0 * (2.0 - res.nu) / res.sequence.ell
    assert abs(res.nu - 1.0) <= 2.0 * step
    # parity preserved, high degrees untouched
    assert res.sequence.ell % 2 == 0
    old_high = d.degrees[d.degrees >= 3]
    new_high = res.sequence.degrees[res.sequence.degrees >= 3]
    assert np.array_equal(old_high, new_high)


def test_retune_lambda_monotone():
    d = powerlaw_quantile_sequence(10_000, 3.5, 0.46)
    nu_plus = retune_to_criticality(d, exponents_from_tau(3.5, 1.0)).nu
    nu_minus = retune_to_criticality(d, exponents_from_tau(3.5, -1.0)).nu
    assert nu_plus > nu_minus


def test_retune_infeasible_reports_gap():
    # c_f = 1 at n = 1000 is supercritical beyond the reach of 1<->2 swaps
    d = powerlaw_quantile_sequence(1000, 3.5, 1.0)
    with pytest.raises(RetuneError) as err:
        retune_to_criticality(d, exponents_from_tau(3.5, 0.0))
    assert err.value.best_gap > 0
    assert err.value.best_nu > 1.0


# -- beta profile and K_n ----------------------------------------------------

def test_beta_profile_hand_value():
    d = DegreeSequence.from_degrees([3, 2, 2, 1])
    exp = exponents_from_tau(3.5)
    beta = beta_profile(d, exp, 4)
    assert beta[0] == 0.0
    # oracle: beta_2 = n^(-2 alpha) * d_1^2 = 4^(-0.8) * 9
    assert beta[1] == pytest.approx(4.0**-0.8 * 9.0, rel=1e-12)
    assert (np.diff(beta) >= 0).all()


def test_kn_default_values():
    exp = exponents_from_tau(3.5)
    # oracle: min(ceil((log n)^5 loglog n), floor(n^0.4 / log n)) at n = 10^5
    assert kn_default(10**5, exp) == 8
    ks = [kn_default(n, exp) for n in (10**3, 10**4, 10**5)]
    assert ks == sorted(ks)
    assert all(1 <= k <= n for k, n in zip(ks, (10**3, 10**4, 10**5)))


# -- assumption report -------------------------------------------------------

def test_check_assumptions_all_twos_fails_degree_one():
    d = DegreeSequence.from_degrees([2] * 100)
    report = check_assumptions(d, exponents_from_tau(3.5), k_probe=5)
    assert report["degree_one_density"].flag == "fail"


def test_check_assumptions_c0_positive(seq_1e4_base, exp35):
    report = check_assumptions(seq_1e4_base, exp35, k_probe=10)
    assert report["size_biased_tail_constant"].flag == "pass"
    assert report["size_biased_tail_constant"].values["c0"] > 0


def test_c0_two_degree_one_vertices():
    d = DegreeSequence.from_degrees([1, 1])
    assert size_biased_tail_constant(d, 3.5) == 1.0


def test_c0_matches_bruteforce(seq_1e4_base):
    d = seq_1e4_base
    tau = 3.5
    # oracle: explicit loop over all levels l
    deg = d.degrees
    best = min(l ** (tau - 2.0) * deg[deg >= l].sum() / d.ell
               for l in range(1, int(deg[0]) + 1))
    assert size_biased_tail_constant(d, tau) == pytest.approx(best, rel=1e-12)


def test_report_serializes_to_json(seq_1e4_base, exp35):
    report = check_assumptions(seq_1e4_base, exp35, k_probe=5)
    parsed = json.loads(report.to_json())
    names = [c["name"] for c in parsed]
    assert len(names) == len(set(names))
    assert {"name", "values", "threshold", "flag", "detail"} <= set(parsed[0])
    flags = {c["flag"] for c in parsed}
    assert flags <= {"pass", "fail", "inconclusive"}


# -- psi and compactness -----------------------------------------------------

def test_psi_zero_and_single_term():
    th = ThetaSequence(values=np.array([1.0]))
    assert psi_theta(th, 0.0, 1) == 0.0
    assert psi_theta(th, 1.0, 1) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_psi_monotone_in_u():
    th = ThetaSequence.power(0.4, terms=500)
    vals = [psi_theta(th, u, 500) for u in np.linspace(0.0, 20.0, 40)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(v >= 0 for v in vals)


def test_single_atom_psi_matches_closed_form():
    # theta = (1, 0, ...): Psi(u) = e^-u - 1 + u; quadrature against the
    # closed form, and the integral keeps growing (log-divergence), so
    # successive doublings of u_max keep adding mass
    from scipy.integrate import quad
    th = ThetaSequence(values=np.array([1.0]))
    est1 = compactness_diagnostics(th, i_max=2, u_max=1000.0, tau=3.5)
    oracle, _ = quad(lambda u: 1.0 / (math.exp(-u) - 1.0 + u), 1.0, 1000.0, limit=200)
    assert est1.integral_estimate == pytest.approx(oracle, rel=1e-6)
    est2 = compactness_diagnostics(th, i_max=2, u_max=2000.0, tau=3.5)
    assert est2.integral_estimate - est1.integral_estimate > 0.05


def test_compactness_inf_condition_positive():
    th = ThetaSequence.power(0.4, terms=10_000)
    diag = compactness_diagnostics(th, i_max=10_000, u_max=50.0, tau=3.5)
    assert diag.inf_condition > 0
    assert all(v > 0 for v in diag.tail_sums.values())


def test_compactness_divergent_vs_convergent_ordering():
    # the divergent-class weights accumulate integral mass faster than the
    # convergent-class ones as the cutoff grows
    div = ThetaSequence.power(0.5, terms=10_000)
    conv = ThetaSequence.power(0.4, terms=10_000)
    r = {}
    for name, th in (("div", div), ("conv", conv)):
        lo = compactness_diagnostics(th, 10_000, 100.0, tau=3.5).integral_estimate
        hi = compactness_diagnostics(th, 10_000, 10_000.0, tau=3.5).integral_estimate
        r[name] = hi / lo
    assert r["div"] > r["conv"] > 1.0


# -- serialization -----------------------------------------------------------

def test_degree_sequence_text_roundtrip():
    d = powerlaw_quantile_sequence(50, 3.5, 1.0)
    text = d.to_text()
    assert text.splitlines()[0] == f"# n={d.n} ell={d.ell}"
    back = DegreeSequence.from_text(text)
    assert np.array_equal(back.degrees, d.degrees)
