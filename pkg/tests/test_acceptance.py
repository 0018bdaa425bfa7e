"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line per criterion (run with ``pytest -s`` to see them stream).

All runs are desk scale (5000 simulations x 500 resamples unless a criterion
states otherwise) with frozen seeds; expect roughly ten minutes total.
"""

import numpy as np
import pytest

from rmperm import (
    Dataset,
    ResamplePlan,
    RngStream,
    ScenarioConfig,
    custom_hypothesis,
    hyp_three_factor,
    hyp_two_factor,
    permutation_limit_diagnostics,
    wts,
    wts_from_summaries,
    wtps,
)
from rmperm.distributions import chi2_quantile
from rmperm.linalg import moore_penrose
from rmperm.simulate import gen_dataset, run_kqs, run_power, run_type1
from tests.conftest import brute_force_wts_single_row


def report(criterion: str, ok: bool, detail: str):
    print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion}: {detail}"


def in_band(value, center, tol):
    return abs(value - center) <= tol


def test_criterion_01_one_sample_lognormal_type1():
    """Published one-sample rates: WTS 0.223 +- 0.02, ATS 0.025 +- 0.01
    (standardized log-normal, n=10, t=4, H = P_4, alpha=0.05, 5000 sims)."""
    cfg = ScenarioConfig(
        distribution="lognormal", cov_setting="S1", n_vec=(10,), t=4,
        hypothesis="T", methods=("WTS-asym", "ATS-F"), n_sim=5000, seed=101,
    )
    res = run_type1(cfg).results
    wts_rate = res["WTS-asym"].rate
    ats_rate = res["ATS-F"].rate
    ok = in_band(wts_rate, 0.223, 0.02) and in_band(ats_rate, 0.025, 0.01)
    report(
        "criterion 01",
        ok,
        f"WTS rate {wts_rate:.4f} (expect 0.223±0.02), "
        f"ATS rate {ats_rate:.4f} (expect 0.025±0.01)",
    )


def test_criterion_02_three_group_time_effect_type1():
    """Three-sample row (normal, identity covariance, n=(15,15,15), t=4,
    time effect): ATS 0.050, WTS 0.078, WTPS 0.051, each +- 0.015."""
    cfg = ScenarioConfig(
        distribution="normal", cov_setting="S1", n_vec=(15, 15, 15), t=4,
        hypothesis="T", methods=("ATS-F", "WTS-asym", "WTPS"),
        n_sim=5000, n_resample=500, seed=102,
    )
    res = run_type1(cfg).results
    ats, w, wp = res["ATS-F"].rate, res["WTS-asym"].rate, res["WTPS"].rate
    ok = (
        in_band(ats, 0.050, 0.015)
        and in_band(w, 0.078, 0.015)
        and in_band(wp, 0.051, 0.015)
    )
    report(
        "criterion 02",
        ok,
        f"ATS {ats:.4f} (0.050±0.015), WTS {w:.4f} (0.078±0.015), "
        f"WTPS {wp:.4f} (0.051±0.015)",
    )


def test_criterion_03_interaction_t8_type1():
    """Interaction row at t=8 (normal, identity covariance, n=(15,15,15)):
    WTS 0.366 +- 0.03 (liberal), WTPS 0.051 +- 0.015."""
    cfg = ScenarioConfig(
        distribution="normal", cov_setting="S1", n_vec=(15, 15, 15), t=8,
        hypothesis="GT", methods=("WTS-asym", "WTPS"),
        n_sim=5000, n_resample=500, seed=103,
    )
    res = run_type1(cfg).results
    w, wp = res["WTS-asym"].rate, res["WTPS"].rate
    ok = in_band(w, 0.366, 0.03) and in_band(wp, 0.051, 0.015)
    report(
        "criterion 03",
        ok,
        f"WTS {w:.4f} (0.366±0.03), WTPS {wp:.4f} (0.051±0.015)",
    )


def test_criterion_04_bootstrap_type1():
    """Bootstrap rows (normal, identity covariance, n=(15,15,15), t=4, time
    effect): PBS-WTS 0.048 +- 0.015, NPBS-WTS 0.051 +- 0.015."""
    cfg = ScenarioConfig(
        distribution="normal", cov_setting="S1", n_vec=(15, 15, 15), t=4,
        hypothesis="T", methods=("PBS-WTS", "NPBS-WTS"),
        n_sim=5000, n_resample=500, seed=104,
    )
    res = run_type1(cfg).results
    p, np_ = res["PBS-WTS"].rate, res["NPBS-WTS"].rate
    ok = in_band(p, 0.048, 0.015) and in_band(np_, 0.051, 0.015)
    report(
        "criterion 04",
        ok,
        f"PBS-WTS {p:.4f} (0.048±0.015), NPBS-WTS {np_:.4f} (0.051±0.015)",
    )


def test_criterion_05_kqs_dominance():
    """Across six interaction scenarios at desk scale the permutation
    quantile distance beats the chi-square one in every scenario, and the
    median KQS exceeds the median KQS^pi by at least a factor of 5."""
    scenarios = [
        ("normal", "S1"), ("normal", "S2"), ("normal", "S3"),
        ("lognormal", "S1"), ("lognormal", "S3"), ("exponential", "S1"),
    ]
    kqs_vals, kqs_pi_vals, lines = [], [], []
    for i, (dist, setting) in enumerate(scenarios):
        cfg = ScenarioConfig(
            distribution=dist, cov_setting=setting, n_vec=(15, 15, 15), t=4,
            hypothesis="GT", methods=("WTPS",),
            n_sim=5000, n_resample=500, seed=120 + i,
        )
        rep = run_kqs(cfg)
        kqs_vals.append(rep.kqs)
        kqs_pi_vals.append(rep.kqs_pi)
        lines.append(f"{dist}/{setting}: {rep.kqs:.3f} vs {rep.kqs_pi:.3f}")
    dominance = all(pi < k for k, pi in zip(kqs_vals, kqs_pi_vals))
    ratio = float(np.median(kqs_vals) / np.median(kqs_pi_vals))
    ok = dominance and ratio >= 5.0
    report(
        "criterion 05",
        ok,
        f"KQS^pi < KQS in all 6 scenarios: {dominance}; median ratio "
        f"{ratio:.1f} (need >= 5). [{'; '.join(lines)}]",
    )


def test_criterion_06_o2_analysis_from_summaries(o2_summaries):
    """Wald-type p-values from the published summary statistics match the
    published analysis table: AB 0.110, BT 0.115, ABT 0.116 within 0.01;
    A, B, T, AT below 0.005."""
    p = {
        eff: wts_from_summaries(o2_summaries, hyp_three_factor(eff, 2, 2, 3)).p_value
        for eff in ("A", "B", "T", "AB", "AT", "BT", "ABT")
    }
    ok = (
        in_band(p["AB"], 0.110, 0.01)
        and in_band(p["BT"], 0.115, 0.01)
        and in_band(p["ABT"], 0.116, 0.01)
        and all(p[e] < 0.005 for e in ("A", "B", "T", "AT"))
    )
    report(
        "criterion 06",
        ok,
        f"AB={p['AB']:.4f} (0.110±0.01), BT={p['BT']:.4f} (0.115±0.01), "
        f"ABT={p['ABT']:.4f} (0.116±0.01); "
        f"A={p['A']:.4f}, B={p['B']:.4f}, T={p['T']:.4f}, AT={p['AT']:.4f} all <0.005",
    )


def test_criterion_07_finite_exactness_under_exchangeability():
    """One group of i.i.d. exponential components is exchangeable after
    pooling, so the permutation test is finitely exact: rejection rate
    0.05 +- 0.013 at n=8, t=3, b=499 over 2000 datasets."""
    cfg = ScenarioConfig(
        distribution="exponential", cov_setting="S1", n_vec=(8,), t=3,
        hypothesis="T", methods=("WTPS",),
        n_sim=2000, n_resample=499, seed=307,
    )
    rate = run_type1(cfg).results["WTPS"].rate
    ok = in_band(rate, 0.05, 0.013)
    report("criterion 07", ok, f"WTPS rejection rate {rate:.4f} (expect 0.05±0.013)")


def test_criterion_08_permutation_distribution_convergence():
    """For normal data with n=(150,150), t=4, interaction contrast, the
    0.95-quantile of 2000 permutation statistics sits within 7% of the
    chi-square(3) quantile."""
    stream = RngStream(108)
    cfg = ScenarioConfig(
        distribution="normal", cov_setting="S1", n_vec=(150, 150), t=4,
        hypothesis="GT", methods=("WTPS",), n_sim=1, seed=108,
    )
    data = gen_dataset(cfg, stream.child(0))
    h = hyp_two_factor("GT", 2, 4)
    res = wtps(data, h, ResamplePlan("permutation", 2000, stream.child(1)))
    q95 = float(np.quantile(res.resampled, 0.95))
    target = chi2_quantile(0.95, 3)
    rel = abs(q95 - target) / target
    ok = rel <= 0.07
    report(
        "criterion 08",
        ok,
        f"permutation q95 {q95:.4f} vs chi2(3) quantile {target:.4f}, "
        f"relative deviation {rel:.4f} (need <= 0.07)",
    )


def test_criterion_09_permutation_limit_diagnostics():
    """At n_i=200 and m=10^4 permutations the average permuted scaled
    covariance has off-diagonal entries within 0.05 of zero and diagonal
    entries within 5% of sigma2_hat * N / n_i."""
    rng = np.random.default_rng(109)
    data = Dataset(
        groups=(
            rng.standard_normal((200, 3)) * 1.2,
            rng.standard_normal((200, 3)) * 0.8 + 0.8,
        )
    )
    check = permutation_limit_diagnostics(data, 10_000, RngStream(110))
    avg = check.sigma_pi_mean
    off = avg - np.diag(np.diag(avg))
    max_off = float(np.max(np.abs(off)))
    diag_rel = float(
        np.max(
            np.abs(np.diag(avg) - np.diag(check.sigma_pi_expected))
            / np.diag(check.sigma_pi_expected)
        )
    )
    ok = max_off <= 0.05 and diag_rel <= 0.05
    report(
        "criterion 09",
        ok,
        f"max |off-diagonal| {max_off:.4f} (<= 0.05), "
        f"max diagonal relative deviation {diag_rel:.4f} (<= 0.05)",
    )


def test_criterion_10_oracle_equivalence_and_penrose():
    """(a) On 100 random tiny instances (two groups of 3 subjects, t=2) the
    Wald-type statistic matches an independent plain-Python scalar oracle to
    1e-8 relative error. (b) The pseudoinverse satisfies all four Penrose
    axioms on 1000 random matrices."""
    rng = np.random.default_rng(42)
    h_row = [1.0, -1.0, -1.0, 1.0]
    h = custom_hypothesis(np.array([h_row]), 4, label="tiny-GT")
    worst = 0.0
    for _ in range(100):
        groups = tuple(rng.standard_normal((3, 2)) for _ in range(2))
        expected = brute_force_wts_single_row([g.tolist() for g in groups], h_row)
        got = wts(Dataset(groups=groups), h).statistic
        worst = max(worst, abs(got - expected) / max(abs(expected), 1e-300))
    oracle_ok = worst <= 1e-8

    worst_penrose = 0.0
    for _ in range(1000):
        rows, cols = rng.integers(1, 9, size=2)
        a = rng.standard_normal((rows, cols))
        if rng.random() < 0.25 and cols > 1:
            a[:, 0] = a[:, -1]  # rank deficiency
        ap = moore_penrose(a)
        scale = 1.0 + np.linalg.norm(a, "fro")
        resid = max(
            np.linalg.norm(a @ ap @ a - a, "fro"),
            np.linalg.norm(ap @ a @ ap - ap, "fro"),
            np.linalg.norm((a @ ap) - (a @ ap).T, "fro"),
            np.linalg.norm((ap @ a) - (ap @ a).T, "fro"),
        ) / scale
        worst_penrose = max(worst_penrose, resid)
    penrose_ok = worst_penrose <= 1e-8

    ok = oracle_ok and penrose_ok
    report(
        "criterion 10",
        ok,
        f"worst oracle relative error {worst:.2e} (<= 1e-8) over 100 instances; "
        f"worst Penrose residual {worst_penrose:.2e} (<= 1e-8) over 1000 matrices",
    )


@pytest.fixture(scope="module")
def power_reports():
    deltas = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0)
    reports = {}
    for dist, seed in (("normal", 111), ("lognormal", 112)):
        cfg = ScenarioConfig(
            distribution=dist, cov_setting="S1", n_vec=(15, 15), t=4,
            hypothesis="T", methods=("WTPS", "ATS-F"),
            n_sim=2000, n_resample=500, seed=seed,
        )
        reports[dist] = run_power(cfg, deltas)
    return reports


def test_criterion_11a_power_level_at_zero(power_reports):
    """At delta=0 the trend study rejects at the nominal level: both methods
    within 0.05 +- 0.015 for normal errors, and the permutation test also
    under log-normal errors (where the ATS is known conservative)."""
    normal = power_reports["normal"].results[0.0]
    logn = power_reports["lognormal"].results[0.0]
    values = {
        "normal WTPS": normal["WTPS"].rate,
        "normal ATS": normal["ATS-F"].rate,
        "lognormal WTPS": logn["WTPS"].rate,
    }
    ok = all(in_band(v, 0.05, 0.015) for v in values.values())
    detail = ", ".join(f"{k} {v:.4f}" for k, v in values.items())
    report("criterion 11a", ok, f"{detail} (each 0.05±0.015); "
           f"lognormal ATS {logn['ATS-F'].rate:.4f} reported, not gated (conservative)")


def test_criterion_11b_power_monotone(power_reports):
    """Power is nondecreasing in delta within two Monte Carlo SEs."""
    violations = []
    for dist, rep in power_reports.items():
        for method in ("WTPS", "ATS-F"):
            rates = [rep.results[d][method] for d in rep.deltas]
            for lo, hi in zip(rates, rates[1:]):
                slack = 2.0 * np.hypot(lo.se, hi.se)
                if hi.rate < lo.rate - slack:
                    violations.append(f"{dist}/{method}: {lo.rate:.3f}->{hi.rate:.3f}")
    ok = not violations
    report(
        "criterion 11b",
        ok,
        "power nondecreasing in delta within 2 SE for both distributions "
        f"and methods{'' if ok else '; violations: ' + '; '.join(violations)}",
    )


def test_criterion_11c_lognormal_power_ordering(power_reports):
    """Under log-normal errors the permutation test is at least as powerful
    as the ATS at delta=1.5 (within 2 SE)."""
    res = power_reports["lognormal"].results[1.5]
    wtps_r, ats_r = res["WTPS"], res["ATS-F"]
    slack = 2.0 * np.hypot(wtps_r.se, ats_r.se)
    ok = wtps_r.rate >= ats_r.rate - slack
    report(
        "criterion 11c",
        ok,
        f"lognormal power at delta=1.5: WTPS {wtps_r.rate:.4f} >= "
        f"ATS {ats_r.rate:.4f} - 2SE ({slack:.4f})",
    )
