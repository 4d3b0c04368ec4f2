"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see
every line live).

Known honest failures, kept at their stated tolerances rather than
loosened:

* Criterion 3 (distribution match) and the gap clause of criterion 4:
  the closed-form desired-signal constants follow a real-valued,
  unit-variance amplitude convention whose combined power is ~2.7x the
  complex-channel simulator's, while the modeled per-interferer power is
  half of the simulated one (one real dimension versus two).  The net
  effect leaves the closed-form SIR roughly 7 dB optimistic, far beyond
  a 0.05 CDF gap or a 15% rate gap.  The shipped diagnostic oracle
  (analysis.clipped_pair_covariance_empirical) pins the amplitude-moment
  side of that mismatch.
* Criterion 6 at eta = 4: the saturation gap carries a log(load) factor
  at this boundary exponent (the plain power law only holds for eta < 4),
  so the fitted slope over loads 1e2..1e5 is ~ -0.82, outside -1 +/- 0.15.
  The eta = 3.4 and eta = 2.4 clauses pass.
"""

import math
import os
import time

import numpy as np
import pytest

from oracles import pgfl_integral_oracle

from cumanet.analysis import (
    asymptotic_cell_rate,
    average_rate,
    build_model,
    cell_sum_rate,
    coverage_probability,
    fit_saturation_exponent,
    indicator_covariance,
    interference_laplace,
    pgfl_radial_integral,
)
from cumanet.channel import PortGrid
from cumanet.cuma import select_set
from cumanet.montecarlo import SimConfig, run_experiment

TAU_GRID = 10.0 ** (np.arange(-20.0, 41.0, 1.0) / 10.0)


def report(cid, ok, detail):
    print(f"\n[ACCEPTANCE {cid}] {'PASS' if ok else 'FAIL'} - {detail}")


def test_c1_indicator_covariance_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    n = 1_000_000
    worst = 0.0
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        tk = u > 0
        tm = (rho * u + math.sqrt(1.0 - rho * rho) * v) > 0
        emp = (tk & tm).mean() - tk.mean() * tm.mean()
        worst = max(worst, abs(indicator_covariance(rho) - emp))
    wall = time.perf_counter() - t0
    ok = worst < 3e-3 and wall < 10.0
    report(1, ok, f"max |closed form - empirical| = {worst:.2e} in {wall:.1f}s")
    assert worst < 3e-3
    assert wall < 10.0


def test_c2_radial_integral_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for amplitude in (0.1, 1.0, 10.0):
        for eta in (2.4, 2.7, 4.0):
            closed = pgfl_radial_integral(amplitude, eta)
            oracle = pgfl_integral_oracle(amplitude, eta)
            worst = max(worst, abs(closed / oracle - 1.0))
    wall = time.perf_counter() - t0
    ok = worst < 1e-6 and wall < 5.0
    report(2, ok, f"max relative error = {worst:.2e} in {wall:.1f}s")
    assert worst < 1e-6
    assert wall < 5.0


def test_c3_distribution_match_desk_scale():
    t0 = time.perf_counter()
    grid = PortGrid.from_total(100, 8.0)
    gaps = {}
    cov_analytic = {}
    cov_empirical = {}
    for eta in (2.4, 2.7):
        cfg = SimConfig(
            bs_density=1e-4,
            ue_density=1e-3,
            eta=eta,
            grid=grid,
            n_realizations=10,
            n_fading=1000,
            master_seed=31,
            schemes=("cuma",),
        )
        model = build_model(grid, eta, 1e-4, 1e-3)
        result = run_experiment(cfg)
        cov_a = np.array([coverage_probability(model, t) for t in TAU_GRID])
        cov_e = result["cuma"].sir.coverage(TAU_GRID)
        cov_analytic[eta] = cov_a
        cov_empirical[eta] = cov_e
        gaps[eta] = float(np.abs(cov_a - cov_e).max())
    wall = time.perf_counter() - t0
    diff_a = cov_analytic[2.7] - cov_analytic[2.4]
    diff_e = cov_empirical[2.7] - cov_empirical[2.4]
    dominance = bool((diff_a >= -1e-12).all() and (diff_e >= -1e-12).all())
    tau_db = 10.0 * np.log10(TAU_GRID)
    budget = 15.0 * 60.0 * 8.0 / max(os.cpu_count() or 1, 1)
    ok = max(gaps.values()) <= 0.05 and dominance and wall < budget
    report(
        3,
        ok,
        f"max CDF gap eta=2.4: {gaps[2.4]:.3f}, eta=2.7: {gaps[2.7]:.3f} "
        f"(tolerance 0.05); eta-dominance={dominance} "
        f"(worst analytic {diff_a.min():+.3f} at {tau_db[diff_a.argmin()]:.0f} dB, "
        f"worst empirical {diff_e.min():+.3f} at {tau_db[diff_e.argmin()]:.0f} dB); "
        f"wall {wall:.0f}s",
    )
    assert wall < budget
    assert max(gaps.values()) <= 0.05 and dominance, (
        f"(a) closed-form vs simulated CDF gap {max(gaps.values()):.3f} exceeds "
        "0.05: the closed-form amplitude constants (real-valued, unit-variance "
        "convention; clipped-pair covariance with a 1/(4 pi) floor) put the "
        "modeled combined power ~2.7x above the complex-channel simulation and "
        "the modeled interference at half, ~7 dB of SIR optimism. "
        f"(b) pointwise eta-dominance fails below ~0 dB in BOTH stacks "
        f"(analytic min diff {diff_a.min():+.3f}, empirical {diff_e.min():+.3f}): "
        "a larger exponent amplifies the nearest-interferer advantage for "
        "unlucky users even as it suppresses far-field interference for "
        "typical ones, so the curves cross at the low-threshold end of the "
        "-20..40 dB grid; dominance holds mid-range"
    )


def test_c4_rate_trend_desk_scale():
    t0 = time.perf_counter()
    grid = PortGrid.from_total(100, 8.0)
    lams = list(range(2, 21, 2))
    analytic = []
    empirical = []
    for lam in lams:
        cfg = SimConfig(
            bs_density=1e-4,
            ue_density=1e-4 * lam,
            eta=2.4,
            grid=grid,
            n_realizations=10,
            n_fading=200,
            master_seed=41,
            schemes=("cuma",),
        )
        model = build_model(grid, 2.4, 1e-4, 1e-4 * lam)
        result = run_experiment(cfg)
        analytic.append(average_rate(model))
        empirical.append(result["cuma"].mean_rate)
    wall = time.perf_counter() - t0
    analytic = np.array(analytic)
    empirical = np.array(empirical)
    dec_a = bool((np.diff(analytic) < 0).all())
    dec_e = bool((np.diff(empirical) < 0).all())
    overestimates = bool((analytic >= empirical).all())
    rel_gap = np.abs(analytic - empirical) / np.maximum(empirical, 1e-12)
    ok = dec_a and dec_e and overestimates and rel_gap.max() <= 0.15
    report(
        4,
        ok,
        f"analytic decreasing={dec_a}, empirical decreasing={dec_e}, "
        f"analytic>=empirical={overestimates}, max relative gap={rel_gap.max():.2f} "
        f"(tolerance 0.15); wall {wall:.0f}s",
    )
    assert dec_a and dec_e, "average rate must fall as the load grows"
    assert overestimates, "the closed form is expected to sit above the simulation"
    assert rel_gap.max() <= 0.15, (
        f"closed-form rate exceeds the simulated rate by up to "
        f"{100 * rel_gap.max():.0f}% (tolerance 15%): same moment-convention "
        "mismatch documented on the distribution-match criterion"
    )


def test_c5_saturation_limit_consistency():
    grid = PortGrid.from_total(100, 8.0)
    model = build_model(grid, 4.0, 1e-4, 1e-3)
    asym = asymptotic_cell_rate(model)
    val = cell_sum_rate(model, 1e5)
    rel = abs(val / asym - 1.0)
    ok = rel <= 0.05
    report(5, ok, f"cell rate at load 1e5 within {100 * rel:.2f}% of the limit (tolerance 5%)")
    assert rel <= 0.05


def test_c6_saturation_exponents():
    t0 = time.perf_counter()
    grid = PortGrid.from_total(100, 8.0)
    targets = {4.0: -1.0, 3.4: -0.7, 2.4: -0.2}
    lam_grid = np.logspace(2, 5, 7)
    slopes = {}
    for eta, target in targets.items():
        model = build_model(grid, eta, 1e-4, 1e-3)
        slopes[eta] = fit_saturation_exponent(model, lam_grid)
    wall = time.perf_counter() - t0
    failures = {
        eta: (slopes[eta], targets[eta])
        for eta in targets
        if abs(slopes[eta] - targets[eta]) > 0.15
    }
    ok = not failures and wall < 60.0
    report(
        6,
        ok,
        "fitted slopes "
        + ", ".join(f"eta={e:g}: {s:.3f} (target {targets[e]:+.1f})" for e, s in slopes.items())
        + f"; wall {wall:.0f}s",
    )
    assert wall < 60.0
    assert not failures, (
        f"slope outside +/-0.15 band: {failures}; at eta = 4 the saturation "
        "gap decays like log(load)/load (power law only below eta = 4), so "
        "the fitted slope over 1e2..1e5 lands near -0.82 rather than -1"
    )


def test_c7_benchmark_ordering():
    t0 = time.perf_counter()
    grid = PortGrid.from_total(100, 8.0)
    summary = []
    ordering_ok = True
    zf_mmse_ok = True
    for lam in (2, 4, 6):
        cfg = SimConfig(
            bs_density=1e-4,
            ue_density=1e-4 * lam,
            eta=2.4,
            grid=grid,
            n_realizations=6,
            n_fading=250,
            master_seed=71,
            schemes=("cuma", "zf", "mmse", "japbo"),
            japbo_every=25,
        )
        result = run_experiment(cfg)
        cuma = result["cuma"].cell_sum_rate
        zf = result["zf"].cell_sum_rate
        mmse = result["mmse"].cell_sum_rate
        japbo = result["japbo"].cell_sum_rate
        summary.append(
            f"load {lam}: cuma={cuma:.2f} mmse={mmse:.2f} zf={zf:.2f} japbo={japbo:.2f}"
        )
        ordering_ok &= cuma >= mmse and cuma >= zf
        # per-draw optimality of the MMSE combiner over zero forcing
        mmse_map = {
            key: s
            for key, s in zip(
                zip(
                    result["mmse"].realization_idx,
                    result["mmse"].draw_idx,
                    result["mmse"].ue_local_idx,
                ),
                result["mmse"].sir_samples,
            )
        }
        for key, s_zf in zip(
            zip(
                result["zf"].realization_idx,
                result["zf"].draw_idx,
                result["zf"].ue_local_idx,
            ),
            result["zf"].sir_samples,
        ):
            s_mmse = mmse_map.get(key)
            if s_mmse is not None and s_mmse < s_zf * (1.0 - 1e-9) - 1e-12:
                zf_mmse_ok = False
    wall = time.perf_counter() - t0
    ok = ordering_ok and zf_mmse_ok
    report(7, ok, "; ".join(summary) + f"; zf<=mmse per draw={zf_mmse_ok}; wall {wall:.0f}s")
    assert zf_mmse_ok, "MMSE must dominate zero forcing draw by draw"
    assert ordering_ok, "combining gain must beat the few-antenna benchmarks at light load"


def test_c8_invariant_suite():
    t0 = time.perf_counter()
    # selection scale invariance
    rng = np.random.default_rng(81)
    scale_ok = True
    for _ in range(200):
        h = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        c = float(rng.uniform(0.01, 100.0))
        a, b = select_set(h), select_set(c * h)
        scale_ok &= bool(np.array_equal(a.mask, b.mask) and a.chosen_sign == b.chosen_sign)

    # transform identity between the two closed forms
    grid = PortGrid.from_total(64, 4.0)
    model = build_model(grid, 2.7, 1e-4, 1e-3)
    laplace_ok = True
    for s in (0.1, 1.0, 10.0):
        direct = interference_laplace(model, s)
        via = math.exp(
            -2.0
            * math.pi
            * model.ue_density
            * pgfl_radial_integral(2.0 * model.interf_var_coef * s, model.eta)
        )
        laplace_ok &= abs(direct - via) < 1e-10

    # coverage boundary limits
    bounds_ok = (
        coverage_probability(model, 1e-12) > 1.0 - 1e-6
        and coverage_probability(model, 1e12) < 1e-6
    )

    # deterministic replay, independent of the worker count
    cfg = SimConfig(
        bs_density=1e-4,
        ue_density=4e-4,
        eta=2.4,
        grid=PortGrid.from_total(16, 2.0),
        radius_m=400.0,
        n_realizations=3,
        n_fading=40,
        master_seed=83,
        schemes=("cuma",),
    )
    seq = run_experiment(cfg)
    rep = run_experiment(cfg)
    import dataclasses

    par = run_experiment(dataclasses.replace(cfg, workers=2))
    replay_ok = np.array_equal(seq["cuma"].sir_samples, rep["cuma"].sir_samples) and np.array_equal(
        seq["cuma"].sir_samples, par["cuma"].sir_samples
    )
    wall = time.perf_counter() - t0
    ok = scale_ok and laplace_ok and bounds_ok and replay_ok and wall < 120.0
    report(
        8,
        ok,
        f"scale-invariance={scale_ok}, transform-identity={laplace_ok}, "
        f"coverage-bounds={bounds_ok}, bit-exact-replay={replay_ok}; wall {wall:.0f}s",
    )
    assert scale_ok and laplace_ok and bounds_ok and replay_ok
    assert wall < 120.0
