"""End-to-end checks, one per headline guarantee.

Each test prints a single `[criterion N] ...: PASS/FAIL` line so a plain
`pytest -s tests/test_acceptance.py` reads as a checklist.
"""

import math
import time

import numpy as np

from taubergames.densities import (
    CesaroDensity,
    ExponentialDensity,
    cesaro_family,
    exponential_family,
    linear_profile_family,
)
from taubergames.games import (
    MAX,
    MIN,
    bundled_models,
    check_axioms,
    load_model,
    make_clash_violator,
    make_concat_violator,
    make_omega_violator,
    make_playability_violator,
    policy_family,
    random_model,
)
from taubergames.tauberian import (
    build_geometric_schedule,
    build_partition_schedule,
    equivalence_matrix,
    hardy_single_trajectory,
    schedule_bound_check,
)
from taubergames.values import backward_induct, lower_upper_bruteforce


def _report(n: int, desc: str, ok: bool, elapsed: float) -> None:
    print(f"\n[criterion {n}] {desc}: "
          f"{'PASS' if ok else 'FAIL'} ({elapsed:.2f}s)")
    assert ok, f"criterion {n} failed: {desc}"


def test_criterion_1_density_identities():
    t0 = time.monotonic()
    ok = True
    for lam in (1.0, 0.1, 0.01):
        box = CesaroDensity(lam)
        expd = ExponentialDensity(lam)
        for r in (0.1, 0.5, 0.9):
            for d in (box, expd):
                q = d.quantile(r)
                ok &= abs(d.mass(q) - r) <= 1e-8
            ok &= box.log_total_variation(0.0, box.quantile(r)) == 0.0
            ok &= abs(expd.log_total_variation(0.0, expd.quantile(r))
                      - (-math.log1p(-r))) <= 1e-9
            # tails restart at the cut: box rescales the rate, exp the level
            ts = np.linspace(0.0, 0.8 / lam, 1000)
            boxtail = box.shift_by_quantile(r)
            ok &= bool(np.all(np.abs(
                boxtail.eval_grid(ts)
                - (1.0 - r) * CesaroDensity(lam / (1.0 - r)).eval_grid(ts))
                <= 1e-9))
            exptail = expd.shift_by_quantile(r)
            ok &= bool(np.all(np.abs(
                exptail.eval_grid(ts)
                - (1.0 - r) * expd.eval_grid(ts)) <= 1e-9))
    elapsed = time.monotonic() - t0
    _report(1, "density inversion, variation, and shift identities",
            ok and elapsed < 1.0, elapsed)


def test_criterion_2_oracle_equivalence():
    t0 = time.monotonic()
    ok = True
    d = CesaroDensity(0.3)
    for seed in range(20):
        model = random_model(seed, n_states=4)
        horizon = 5
        lower, upper = lower_upper_bruteforce(model, d, horizon)
        w = d.step_weights(model.dt, horizon)
        tail = d.total_mass - d.mass(horizon * model.dt)
        dp_lo, dp_hi = backward_induct(model, w,
                                       {s: 0.0 for s in model.states},
                                       {s: tail for s in model.states})
        for s in model.states:
            ok &= abs(lower.lo[s] - upper.lo[s]) <= 1e-12
            ok &= dp_lo[s] - 1e-12 <= lower.lo[s] <= dp_hi[s] + 1e-12
            ok &= dp_lo[s] - 1e-12 <= upper.hi[s] <= dp_hi[s] + 1e-12
    elapsed = time.monotonic() - t0
    _report(2, "brute-force lower = upper inside the induction enclosure",
            ok and elapsed < 30.0, elapsed)


def test_criterion_3_lower_at_most_upper():
    t0 = time.monotonic()
    violations = 0
    pairs = 0
    for model in bundled_models():
        for d in (CesaroDensity(0.5), CesaroDensity(0.2),
                  ExponentialDensity(0.5), ExponentialDensity(0.2)):
            lower, upper = lower_upper_bruteforce(model, d, 5)
            pairs += 1
            for s in model.states:
                if lower.lo[s] > upper.lo[s] + 1e-12:
                    violations += 1
                if lower.hi[s] > upper.hi[s] + 1e-12:
                    violations += 1
    elapsed = time.monotonic() - t0
    _report(3, f"guaranteed <= optimistic value on {pairs} pairs, "
            f"{violations} violations", violations == 0, elapsed)


def test_criterion_4_axiom_suite():
    t0 = time.monotonic()
    ok = True
    for model in bundled_models():
        rep = check_axioms(model,
                           policy_family(model, MAX, 4),
                           policy_family(model, MIN, 4), horizon=4)
        ok &= rep.all_passed
    alt = load_model("bundled/alternating4")
    base_min = policy_family(alt, MIN, 3)
    violators = (
        ("p", make_playability_violator(alt, "a", 3)),
        ("omega", make_omega_violator(alt, MAX, 3)),
        ("concat", make_concat_violator(alt, MAX)),
        ("s", make_clash_violator(alt, "a", 3)),
    )
    for name, fam in violators:
        rep = check_axioms(alt, fam, base_min, 3)
        bad = rep.checks[name]
        ok &= (not bad.passed) and bad.witness is not None
    elapsed = time.monotonic() - t0
    _report(4, "axioms hold for policy families, violators caught with "
            "witnesses", ok and elapsed < 5.0, elapsed)


def test_criterion_5_family_coincidence():
    t0 = time.monotonic()
    fams = [cesaro_family(), exponential_family(), linear_profile_family()]
    ok = True
    for model in bundled_models():
        mat = equivalence_matrix(model, fams)
        ok &= mat.all_passed
        for cell in mat.cells:
            ok &= cell.diff <= cell.tol
    elapsed = time.monotonic() - t0
    _report(5, "rate limits coincide pairwise across the three families",
            ok and elapsed < 120.0, elapsed)


def test_criterion_6_single_trajectory():
    t0 = time.monotonic()
    grid = [1e-2, 1e-3, 1e-4]
    two = hardy_single_trajectory([], [0.0, 1.0], lam_grid=grid)
    three = hardy_single_trajectory([], [1.0, 0.0, 0.0], lam_grid=grid)
    ok = (abs(two.cesaro_limit - 0.5) <= 1e-3
          and abs(two.abel_limit - 0.5) <= 1e-3
          and abs(three.cesaro_limit - 1.0 / 3.0) <= 1e-3
          and abs(three.abel_limit - 1.0 / 3.0) <= 1e-3)
    _report(6, "period-2 and period-3 averages hit 0.5 and 1/3",
            ok, time.monotonic() - t0)


def test_criterion_7_schedule_arithmetic():
    t0 = time.monotonic()
    ok = True
    for eps in (0.1, 0.2):
        sch = build_geometric_schedule(cesaro_family(), 1e-3, eps)
        ok &= abs(sch.p ** sch.k - 1.0 / sch.k) <= 1e-9
        ok &= sch.tau[-1] * sch.mu < 1.0 + 3.0 * eps
        ok &= sch.all_passed
    psch = build_partition_schedule(exponential_family(), 1e-3, 0.2)
    ok &= psch.k > psch.M
    ok &= all(psch.correct)
    ok &= psch.check("mean-identity").value <= 1e-9
    sigma = exponential_family().make(psch.mu)
    masses = np.diff(sigma.mass_grid(np.asarray(psch.tau)))
    want = np.array([psch.p ** m - psch.p ** (m + 1)
                     for m in range(len(masses))])
    ok &= bool(np.all(np.abs(masses - want) <= 1e-9))
    elapsed = time.monotonic() - t0
    _report(7, "geometric p^k = 1/k with bounded span; partition cells "
            "all kept with exact means", ok, elapsed)


def test_criterion_8_schedule_value_bounds():
    t0 = time.monotonic()
    box = cesaro_family()
    expf = exponential_family()
    gs = build_geometric_schedule(box, 1e-3, 0.2)
    ps = build_partition_schedule(expf, 1e-3, 0.2)
    ok = True
    for model in bundled_models():
        for fam, sch in ((box, gs), (expf, ps)):
            rep = schedule_bound_check(model, fam, sch)
            ok &= rep.lower_passed   # V-(mu) > V* - 6 eps
            ok &= rep.upper_passed   # reflected: V+(mu) < V* + 6 eps
    _report(8, "guaranteed values at the schedule rate sit within 6*eps "
            "of the limit, both sides", ok, time.monotonic() - t0)
