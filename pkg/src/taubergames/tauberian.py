"""Limit experiments and executable inequality chains.

The experiments estimate uniform limits of value functions along shrinking
rates, compare limits across density families, check the single-trajectory
averaging identities, and build the two rate schedules whose arithmetic and
descent inequalities certify the lower bounds V[rho_mu] > V* - 6*eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .densities import (
    Density,
    DensityFamily,
    PatchedDensity,
    cesaro_family,
    default_lambda_grid,
    default_mu_grid,
    escape_diagnostic,
    exponential_family,
    flatness_diagnostic,
    l1_distance,
    regularity_diagnostic,
    self_similar_decompose,
)
from .errors import DomainError, InfeasibleScheduleError
from .games import GameModel, grid_steps, reflect_cost
from .values import ValueTable, backward_induct, dp_value

NOISE_TOL = 1e-3
FP_TOL = 1e-9


# -- uniform limits ------------------------------------------------------------


@dataclass(frozen=True)
class LimitReport:
    model: str
    family: str
    lam_grid: tuple[float, ...]
    sup_mid: tuple[float, ...]
    inf_mid: tuple[float, ...]
    vstar: Mapping[str, float]
    gaps: tuple[float, ...]
    final_table: ValueTable
    verdict: str

    @property
    def enclosure_width(self) -> float:
        return self.final_table.max_width

    @property
    def settle_gap(self) -> float:
        """Gap of the second-finest rate against the limit estimate."""
        return self.gaps[-2] if len(self.gaps) >= 2 else 0.0


def uniform_limit_estimate(model: GameModel, fam: DensityFamily,
                           lam_grid=None, horizon_mass: float = 0.999
                           ) -> LimitReport:
    """Estimate the uniform limit of values as the rate shrinks.

    The limit estimate is the finest-rate midpoint per state; gaps report
    the worst-state distance of each rate's midpoints from it.  The verdict
    is inconclusive whenever the finest enclosure is wider than NOISE_TOL,
    so a sloppy truncation can never produce a false pass.
    """
    grid = np.sort(fam.usable(default_lambda_grid() if lam_grid is None
                              else np.asarray(lam_grid, dtype=float)))[::-1]
    if grid.size < 2:
        raise DomainError("need at least two usable rates")
    tables = [dp_value(model, fam.make(float(lam)), horizon_mass)
              for lam in grid]
    final = tables[-1]
    vstar = {s: final.mid(s) for s in model.states}
    gaps = tuple(max(abs(t.mid(s) - vstar[s]) for s in model.states)
                 for t in tables)
    sup_mid = tuple(max(t.mid(s) for s in model.states) for t in tables)
    inf_mid = tuple(min(t.mid(s) for s in model.states) for t in tables)
    if final.max_width > NOISE_TOL * (1.0 + FP_TOL):
        verdict = "inconclusive"
    else:
        tail = gaps[-max(3, len(gaps) // 2):]
        monotone = all(b <= a + NOISE_TOL for a, b in zip(tail, tail[1:]))
        verdict = "converging" if monotone else "not-converging"
    return LimitReport(model=model.name, family=fam.name,
                       lam_grid=tuple(float(x) for x in grid),
                       sup_mid=sup_mid, inf_mid=inf_mid, vstar=vstar,
                       gaps=gaps, final_table=final, verdict=verdict)


def coincidence_tolerance(a: LimitReport, b: LimitReport) -> float:
    width = max(a.enclosure_width, b.enclosure_width)
    gap = max(a.settle_gap, b.settle_gap)
    return 5.0 * (width + gap)


# -- family-vs-family checks -----------------------------------------------------


@dataclass(frozen=True)
class HypothesisResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class TauberReport:
    model: str
    family: str
    reference: str
    hypotheses: tuple[HypothesisResult, ...]
    hypotheses_met: bool
    diff: float
    tol: float
    passed: bool
    label: str
    fam_report: LimitReport
    ref_report: LimitReport


def _selfsimilar_hypothesis(fam: DensityFamily, lam_grid,
                            tol: float = 1e-6) -> HypothesisResult:
    if not fam.self_similar or fam.nu is None:
        return HypothesisResult("self-similar", False,
                                "family declares no tail decomposition")
    probes = [float(lam_grid[0]), float(lam_grid[len(lam_grid) // 2])]
    worst = 0.0
    for lam in probes:
        for r in (0.25, 0.5):
            dec = self_similar_decompose(fam, lam, r)
            worst = max(worst, dec.residual)
    ok = worst <= tol
    return HypothesisResult("self-similar", ok,
                            f"max decomposition residual {worst:.3g}")


def _initial_rate_hypothesis(fam: DensityFamily, lam_grid,
                             tol: float = 1e-3) -> HypothesisResult:
    worst = 0.0
    for lam in (float(lam_grid[0]), float(lam_grid[-1])):
        rho = fam.make(lam)
        worst = max(worst, abs(rho.eval(0.0) / lam - 1.0))
    ok = worst <= tol
    return HypothesisResult("initial-rate", ok,
                            f"max |density(0)/rate - 1| = {worst:.3g}")


def tauber_check(model: GameModel, fam: DensityFamily, lam_grid=None,
                 horizon_mass: float = 0.999, *,
                 r_probe: float = 0.5) -> TauberReport:
    """Compare the family's limit against the box family's.

    Hypothesis diagnostics (self-similarity, flatness, regularity, initial
    rate) are reported; when any fails, the comparison still runs and the
    report is labelled accordingly.
    """
    grid = fam.usable(default_lambda_grid() if lam_grid is None
                      else np.asarray(lam_grid, dtype=float))
    hyps = (
        _selfsimilar_hypothesis(fam, grid),
        HypothesisResult("flat", flatness_diagnostic(fam, lam_grid=grid).flat,
                         "variation shrinks below tolerance"),
        HypothesisResult("regular",
                         regularity_diagnostic(fam, r_probe, lam_grid=grid).regular,
                         f"variation settles at r={r_probe}"),
        _initial_rate_hypothesis(fam, grid),
    )
    met = all(h.passed for h in hyps)
    fam_rep = uniform_limit_estimate(model, fam, grid, horizon_mass)
    ref_rep = uniform_limit_estimate(model, cesaro_family(), lam_grid,
                                     horizon_mass)
    diff = max(abs(fam_rep.vstar[s] - ref_rep.vstar[s]) for s in model.states)
    tol = coincidence_tolerance(fam_rep, ref_rep)
    return TauberReport(model=model.name, family=fam.name, reference="cesaro",
                        hypotheses=hyps, hypotheses_met=met, diff=diff,
                        tol=tol, passed=diff <= tol,
                        label="" if met else "hypotheses unmet",
                        fam_report=fam_rep, ref_report=ref_rep)


def abel_check(model: GameModel, fam: DensityFamily, mu_grid=None,
               horizon_mass: float = 0.999, *,
               r_probe: float = 0.5) -> TauberReport:
    """Like tauber_check but with the escape-style hypotheses."""
    grid = fam.usable(default_mu_grid() if mu_grid is None
                      else np.asarray(mu_grid, dtype=float))
    esc = escape_diagnostic(fam, mu_grid=grid)
    hyps = (
        HypothesisResult("regular",
                         regularity_diagnostic(fam, r_probe, lam_grid=grid).regular,
                         f"variation settles at r={r_probe}"),
        HypothesisResult("escape", esc.escapes, esc.reason),
    )
    met = all(h.passed for h in hyps)
    fam_rep = uniform_limit_estimate(model, fam, grid, horizon_mass)
    ref_rep = uniform_limit_estimate(model, cesaro_family(), grid, horizon_mass)
    diff = max(abs(fam_rep.vstar[s] - ref_rep.vstar[s]) for s in model.states)
    tol = coincidence_tolerance(fam_rep, ref_rep)
    return TauberReport(model=model.name, family=fam.name, reference="cesaro",
                        hypotheses=hyps, hypotheses_met=met, diff=diff,
                        tol=tol, passed=diff <= tol,
                        label="" if met else "hypotheses unmet",
                        fam_report=fam_rep, ref_report=ref_rep)


@dataclass(frozen=True)
class EquivalenceCell:
    row: str
    col: str
    diff: float
    tol: float
    passed: bool
    witness: str | None


@dataclass(frozen=True)
class EquivalenceMatrix:
    model: str
    families: tuple[str, ...]
    reports: Mapping[str, LimitReport]
    cells: tuple[EquivalenceCell, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cells)

    def cell(self, row: str, col: str) -> EquivalenceCell:
        for c in self.cells:
            if {c.row, c.col} == {row, col}:
                return c
        raise KeyError((row, col))


def equivalence_matrix(model: GameModel, fams: Sequence[DensityFamily],
                       lam_grid=None,
                       horizon_mass: float = 0.999) -> EquivalenceMatrix:
    """Pairwise limit coincidence across the given families plus the box and
    exponential references."""
    pool: list[DensityFamily] = list(fams)
    names = {f.name for f in pool}
    for ref in (cesaro_family(), exponential_family()):
        if ref.name not in names:
            pool.append(ref)
    reports = {f.name: uniform_limit_estimate(model, f, lam_grid, horizon_mass)
               for f in pool}
    cells = []
    ordered = [f.name for f in pool]
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            ra, rb = reports[a], reports[b]
            per_state = {s: abs(ra.vstar[s] - rb.vstar[s])
                         for s in model.states}
            witness_state = max(per_state, key=per_state.get)
            diff = per_state[witness_state]
            tol = coincidence_tolerance(ra, rb)
            ok = diff <= tol
            cells.append(EquivalenceCell(row=a, col=b, diff=diff, tol=tol,
                                         passed=ok,
                                         witness=None if ok else witness_state))
    return EquivalenceMatrix(model=model.name, families=tuple(ordered),
                             reports=reports, cells=tuple(cells))


# -- single-trajectory averaging ---------------------------------------------------


@dataclass(frozen=True)
class HardyReport:
    lam_grid: tuple[float, ...]
    cesaro_means: tuple[float, ...]
    abel_means: tuple[float, ...]
    cesaro_limit: float
    abel_limit: float
    difference: float
    dt: float


def hardy_single_trajectory(prefix: Sequence[float], cycle: Sequence[float],
                            lam_grid=None, *, dt: float = 1.0) -> HardyReport:
    """Plain and discounted means of an eventually periodic step signal.

    The plain mean at rate lam averages over [0, 1/lam]; the discounted mean
    integrates against rate*exp(-rate*t), truncated where the weight tail
    drops below 1e-12.
    """
    prefix = np.asarray(list(prefix), dtype=float)
    cycle = np.asarray(list(cycle), dtype=float)
    if cycle.size == 0:
        raise DomainError("cycle must be nonempty")
    sig_min = min(prefix.min(initial=1.0), float(np.min(cycle)))
    sig_max = max(prefix.max(initial=0.0), float(np.max(cycle)))
    if sig_min < 0.0 or sig_max > 1.0:
        raise DomainError("signal values must lie in [0, 1]")
    grid = (default_lambda_grid() if lam_grid is None
            else np.asarray(lam_grid, dtype=float))

    def signal(n_steps: int) -> np.ndarray:
        if n_steps <= prefix.size:
            return prefix[:n_steps]
        reps = int(math.ceil((n_steps - prefix.size) / cycle.size))
        return np.concatenate((prefix, np.tile(cycle, reps)))[:n_steps]

    ces = []
    abl = []
    for lam in grid:
        lam = float(lam)
        T = 1.0 / lam
        n_full = int(math.floor(T / dt))
        s = signal(n_full + 1)
        frac = T - n_full * dt
        ces.append(lam * (float(np.sum(s[:n_full])) * dt + s[n_full] * frac))
        n_abel = max(1, int(math.ceil(-math.log(1e-12) / (lam * dt))))
        edges = np.exp(-lam * dt * np.arange(n_abel + 1))
        w = edges[:-1] - edges[1:]
        abl.append(float(np.dot(w, signal(n_abel))))
    return HardyReport(lam_grid=tuple(float(x) for x in grid),
                       cesaro_means=tuple(ces), abel_means=tuple(abl),
                       cesaro_limit=ces[-1], abel_limit=abl[-1],
                       difference=abs(ces[-1] - abl[-1]), dt=dt)


# -- schedules ------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleCheck:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""


@dataclass(frozen=True)
class GeometricSchedule:
    """Rate schedule with geometrically shrinking segment masses.

    Rates grow from mu/(1+eps) by powers of 1/p, so segment lengths shrink
    geometrically and the total span stays inside (1+3*eps)/mu.
    """

    family: str
    eps: float
    mu: float
    k: int
    p: float
    kappa: float
    flat_level: float
    lam: tuple[float, ...]
    t: tuple[float, ...]
    tau: tuple[float, ...]
    checks: tuple[ScheduleCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ScheduleCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _abs_gap_integral(rho: Density, level: float, a: float, b: float) -> float:
    """Refined trapezoid estimate of the integral of |rho - level| on [a, b]."""
    prev = None
    n = 2048
    while n <= 1 << 20:
        ts = np.linspace(a, b, n + 1)
        v = float(np.trapezoid(np.abs(rho.eval_grid(ts) - level), ts))
        if prev is not None and abs(v - prev) <= 1e-10 + 1e-8 * abs(v):
            return v
        prev = v
        n *= 2
    return prev


def measured_flat_level(fam: DensityFamily, probe_lam: float,
                        eps: float) -> float:
    """Largest dyadic mass level whose variation stays under eps/2."""
    r = 0.5
    while r > 1e-6:
        rho = fam.make(probe_lam)
        var = rho.log_total_variation(0.0, rho.quantile(r))
        if var < eps / 2.0:
            return r
        r /= 2.0
    raise InfeasibleScheduleError(
        f"family {fam.name} has no flat-enough dyadic mass level at rate "
        f"{probe_lam:g}", constraint="flatness")


def build_geometric_schedule(fam: DensityFamily, mu: float, eps: float, *,
                             k_cap: int = 10_000,
                             fp_tol: float = FP_TOL) -> GeometricSchedule:
    """Build the geometric rate schedule and verify its arithmetic.

    k is the smallest natural above max(2/eps, 4) with ln(k)/k below the
    measured flat level; p = k^(-1/k) makes p^k = 1/k exact.  The stated
    rate recursion is run with the exponent direction that keeps the total
    span tau_k inside (1+3*eps)/mu; the opposite direction contradicts that
    window bound, see the per-check values.
    """
    if not 0.0 < eps < 0.25:
        raise DomainError("eps must lie in (0, 1/4)")
    if mu <= 0:
        raise DomainError("mu must be positive")
    flat_level = measured_flat_level(fam, mu, eps)
    k = int(max(math.floor(2.0 / eps), 4)) + 1
    while k <= k_cap and math.log(k) / k >= flat_level:
        k += 1
    if k > k_cap:
        raise InfeasibleScheduleError(
            f"no k <= {k_cap} with ln(k)/k < {flat_level}",
            constraint="ln(k)/k < flat level")
    p = k ** (-1.0 / k)
    kappa = 1.0 / (3.0 * k * k)
    lam = [mu * p ** (1 - m) / (1.0 + eps) for m in range(1, k + 1)]
    t = []
    flat_ratios = []
    for lm in lam:
        rho = fam.make(lm)
        tm = rho.quantile(1.0 - p)
        t.append(tm)
        gap = _abs_gap_integral(rho, lm, 0.0, tm)
        flat_ratios.append(gap / (eps * lm * tm))
    tau = [float(x) for x in np.cumsum(t)]

    checks = []
    pk = p ** k
    checks.append(ScheduleCheck("pk", abs(pk - 1.0 / k) <= fp_tol, pk, 1.0 / k,
                                "p^k equals 1/k"))
    worst_lam = max(lam)
    checks.append(ScheduleCheck("rates-below-k-mu", worst_lam < k * mu,
                                worst_lam, k * mu,
                                "every segment rate stays below k*mu"))
    checks.append(ScheduleCheck("span-window", tau[-1] * mu < 1.0 + 3.0 * eps,
                                tau[-1] * mu, 1.0 + 3.0 * eps,
                                "total span times mu stays in the window"))
    worst_flat = max(flat_ratios)
    checks.append(ScheduleCheck("flatness-integral",
                                worst_flat <= 1.0 + 1e-6, worst_flat, 1.0,
                                "per-segment |density - rate| mass is small"))
    # Pointwise window comparison on a midpoint grid (avoids the measure-zero
    # support endpoint).
    span = 1.05 * (1.0 + 3.0 * eps) / mu
    n_pts = 4097
    ts = (np.arange(n_pts) + 0.5) * (span / n_pts)
    box = cesaro_family().make(mu)
    lhs = np.where(ts <= tau[-1], mu, 0.0)
    window = np.where((ts > 1.0 / mu) & (ts <= (1.0 + 3.0 * eps) / mu), mu, 0.0)
    rhs = box.eval_grid(ts) + window
    worst_excess = float(np.max(lhs - rhs))
    checks.append(ScheduleCheck("pointwise-window", worst_excess <= fp_tol,
                                worst_excess, 0.0,
                                "mu-box over the span is dominated by the "
                                "box density plus the shifted window"))
    return GeometricSchedule(family=fam.name, eps=eps, mu=mu, k=k, p=p,
                             kappa=kappa, flat_level=flat_level,
                             lam=tuple(lam), t=tuple(t), tau=tuple(tau),
                             checks=tuple(checks))


@dataclass(frozen=True)
class PartitionSchedule:
    """Quantile partition of a density into k^2 cells of geometric mass.

    Cells whose log variation stays under M/k keep the original density;
    the rest are flattened to their mean level, and everything beyond the
    (1-eps)-quantile is dropped.
    """

    family: str
    eps: float
    mu: float
    M: float
    k: int
    p: float
    delta: float
    kappa: float
    T: float
    tau: tuple[float, ...]
    lam: tuple[float, ...]
    correct: tuple[bool, ...]
    patched: PatchedDensity
    checks: tuple[ScheduleCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ScheduleCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def build_partition_schedule(fam: DensityFamily, mu: float, eps: float,
                             M: float | None = None, *,
                             k_cap: int = 10_000,
                             fp_tol: float = FP_TOL) -> PartitionSchedule:
    """Build the quantile partition schedule and verify its accounting.

    M defaults to the measured regularity estimate at mass level 1 - eps
    plus 10% headroom, floored at 1e-3 so constant densities (variation
    exactly 0) still classify every cell as kept.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if mu <= 0:
        raise DomainError("mu must be positive")
    sigma = fam.make(mu)
    if M is None:
        reg = regularity_diagnostic(fam, 1.0 - eps)
        if not reg.regular:
            raise InfeasibleScheduleError(
                f"family {fam.name} is not regular at r={1.0 - eps:g}: "
                f"{reg.reason}", constraint="regularity")
        M = max(1.1 * reg.limsup_estimate, 1e-3)
    k = 1
    while k <= k_cap and not (k > M and math.exp(M / k) < 1.0 + eps
                              and k * eps > -math.log(eps)):
        k += 1
    if k > k_cap:
        raise InfeasibleScheduleError(
            f"no k <= {k_cap} satisfies the partition constraints",
            constraint="k scan")
    p = eps ** (1.0 / (k * k))
    delta = 1.0 - p
    kappa = eps / (3.0 * k * k)
    T = sigma.quantile(1.0 - eps)
    tau = [0.0]
    for m in range(1, k * k + 1):
        tau.append(sigma.quantile(1.0 - p ** m))
    lam = []
    correct = []
    for m in range(1, k * k + 1):
        width = tau[m] - tau[m - 1]
        lam.append((p ** (m - 1) - p ** m) / width)
        var = sigma.log_total_variation(tau[m - 1], tau[m])
        correct.append(var < M / k)
    patched = PatchedDensity(sigma, tau, [not c for c in correct], lam,
                             label=f"{sigma.label}|partition")

    checks = []
    checks.append(ScheduleCheck("delta-small", delta < eps / k, delta,
                                eps / k, "cell mass increment stays under "
                                "eps/k"))
    geo = delta * sum(p ** i for i in range(k * k))
    checks.append(ScheduleCheck("geometric-mass",
                                abs(geo - (1.0 - eps)) <= fp_tol, geo,
                                1.0 - eps,
                                "cell masses sum to the kept mass"))
    n_bad = sum(1 for c in correct if not c)
    checks.append(ScheduleCheck("incorrect-count", n_bad <= k, float(n_bad),
                                float(k), "at most k cells get flattened"))
    bad_mass = sum(p ** (m - 1) - p ** m
                   for m in range(1, k * k + 1) if not correct[m - 1])
    checks.append(ScheduleCheck("incorrect-mass",
                                bad_mass <= k * delta + fp_tol
                                and k * delta < eps,
                                bad_mass, k * delta,
                                "flattened cells carry mass under k*delta "
                                "< eps"))
    bounds = np.asarray(tau)
    cell_mass = np.diff(patched.mass_grid(bounds))
    target = np.array([p ** (m - 1) - p ** m for m in range(1, k * k + 1)])
    mean_err = float(np.max(np.abs(cell_mass - target)))
    checks.append(ScheduleCheck("mean-identity", mean_err <= 1e-9, mean_err,
                                1e-9,
                                "each cell of the patched density carries "
                                "exactly its geometric mass"))
    l1 = 0.0
    for m in range(1, k * k + 1):
        if not correct[m - 1]:
            l1 += l1_distance(patched, sigma, tau[m - 1], tau[m])
    tail = sigma.total_mass - sigma.mass(T)
    checks.append(ScheduleCheck("l1-perturbation", l1 + tail < 2.0 * eps,
                                l1 + tail, 2.0 * eps,
                                "patching plus dropped tail moves mass by "
                                "under 2*eps"))
    return PartitionSchedule(family=fam.name, eps=eps, mu=mu, M=M, k=k, p=p,
                             delta=delta, kappa=kappa, T=T, tau=tuple(tau),
                             lam=tuple(lam), correct=tuple(correct),
                             patched=patched, checks=tuple(checks))


# -- descent chains ---------------------------------------------------------------


@dataclass(frozen=True)
class SegmentMargin:
    index: int
    margin: float
    uncertainty: float
    worst_state: str

    @property
    def passed(self) -> bool:
        return self.margin >= -self.uncertainty


@dataclass(frozen=True)
class DescentReport:
    model: str
    schedule_kind: str
    margins: tuple[SegmentMargin, ...]
    telescoped_value: float
    telescoped_bound: float
    telescoped_passed: bool
    vstar_halfwidth: float
    inconclusive: bool

    @property
    def passed(self) -> bool:
        return (not self.inconclusive
                and all(m.passed for m in self.margins)
                and self.telescoped_passed)


def _vstar_bracket(model: GameModel, fam: DensityFamily, lam_grid,
                   horizon_mass: float) -> tuple[dict, dict, float]:
    rep = uniform_limit_estimate(model, fam, lam_grid, horizon_mass)
    tbl = rep.final_table
    half = 0.5 * tbl.max_width
    return dict(tbl.lo), dict(tbl.hi), half


def _segment_value(model: GameModel, weights, term_lo, term_hi):
    return backward_induct(model, weights, term_lo, term_hi)


def verify_descent_chain(model: GameModel, fam: DensityFamily,
                         schedule: GeometricSchedule | PartitionSchedule, *,
                         horizon_mass: float = 0.999,
                         lam_grid=None) -> DescentReport:
    """Check the per-segment descent inequality and its telescoped bound.

    Each segment m must satisfy, in the p^(m-1)-scaled form,
    p^(m-1) * V*(start) <= segment game value + p^m * V*(end) + 3*kappa*p^(m-1),
    where the segment game weighs the running cost by mu (geometric case) or
    by the patched density (partition case, scaled by e^(M/k)).  V* enters
    as a bracket, so each margin carries an explicit uncertainty and the
    report is inconclusive when the bracket is wider than the kappa slack.
    """
    v_lo, v_hi, half = _vstar_bracket(model, fam, lam_grid, horizon_mass)
    v_mid = {s: 0.5 * (v_lo[s] + v_hi[s]) for s in v_lo}
    dt = model.dt
    kappa = schedule.kappa
    p = schedule.p
    inconclusive = half > kappa

    if isinstance(schedule, GeometricSchedule):
        kind = "geometric"
        n_seg = schedule.k
        boundaries = [0] + [int(round(tm / dt)) for tm in schedule.tau]
        mu = schedule.mu

        def seg_weights(m: int) -> list[float]:
            steps = boundaries[m] - boundaries[m - 1]
            return [mu * dt] * steps

        def slack(m: int) -> float:
            return 2.0 * mu * dt
    else:
        kind = "partition"
        n_seg = schedule.k * schedule.k
        boundaries = [int(round(tm / dt)) for tm in schedule.tau]
        scale = math.exp(schedule.M / schedule.k)
        patched = schedule.patched

        def seg_weights(m: int) -> list[float]:
            n0, n1 = boundaries[m - 1], boundaries[m]
            edges = dt * np.arange(n0, n1 + 1, dtype=float)
            return list(scale * np.diff(patched.mass_grid(edges)))

        def slack(m: int) -> float:
            n0, n1 = boundaries[m - 1], boundaries[m]
            lo_t = max(0.0, dt * n0 - dt)
            hi_t = dt * n1 + dt
            level = float(np.max(patched.eval_grid(
                np.linspace(lo_t, hi_t, 64))))
            return 2.0 * level * dt * scale

    margins = []
    for m in range(1, n_seg + 1):
        w = seg_weights(m)
        pm1 = p ** (m - 1)
        pm = p ** m
        term_lo = {s: pm * v_lo[s] for s in v_lo}
        term_hi = {s: pm * v_hi[s] for s in v_hi}
        seg_lo, seg_hi = _segment_value(model, w, term_lo, term_hi)
        worst_state = None
        worst_margin = math.inf
        for s in model.states:
            seg_mid = 0.5 * (seg_lo[s] + seg_hi[s])
            margin = seg_mid + 3.0 * kappa * pm1 - pm1 * v_mid[s]
            if margin < worst_margin:
                worst_margin = margin
                worst_state = s
        seg_halfwidth = 0.5 * max(seg_hi[s] - seg_lo[s] for s in model.states)
        unc = seg_halfwidth + pm1 * half + slack(m)
        margins.append(SegmentMargin(index=m, margin=worst_margin,
                                     uncertainty=unc, worst_state=worst_state))

    # Telescoped bound.
    zeros = {s: 0.0 for s in model.states}
    if isinstance(schedule, GeometricSchedule):
        total_steps = boundaries[-1]
        u_lo, u_hi = backward_induct(model, [dt] * total_steps, zeros, zeros)
        mu = schedule.mu
        bound_per_state = {s: mu * 0.5 * (u_lo[s] + u_hi[s]) + 2.0 / schedule.k
                           for s in model.states}
        tele_unc = half + 2.0 * mu * dt
    else:
        total_steps = boundaries[-1]
        w_all = []
        for m in range(1, n_seg + 1):
            w_all.extend(seg_weights(m))
        u_lo, u_hi = backward_induct(model, w_all, zeros, zeros)
        geo_sum = 3.0 * schedule.kappa * (1.0 - schedule.eps) / schedule.delta
        bound_per_state = {
            s: 0.5 * (u_lo[s] + u_hi[s]) + schedule.eps * v_hi[s] + geo_sum
            for s in model.states}
        # Segments share exact edge grids, so only the far endpoint rounds.
        tele_unc = half + slack(n_seg)
    worst_val = -math.inf
    worst_bound = 0.0
    for s in model.states:
        if v_mid[s] - bound_per_state[s] > worst_val:
            worst_val = v_mid[s] - bound_per_state[s]
            worst_bound = bound_per_state[s]
    tele_value = worst_val + worst_bound
    tele_passed = worst_val <= tele_unc
    return DescentReport(model=model.name, schedule_kind=kind,
                         margins=tuple(margins), telescoped_value=tele_value,
                         telescoped_bound=worst_bound,
                         telescoped_passed=tele_passed,
                         vstar_halfwidth=half, inconclusive=inconclusive)


# -- final bounds -----------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    model: str
    family: str
    mu: float
    eps: float
    lower_margins: Mapping[str, float]
    lower_margins_4eps: Mapping[str, float]
    upper_margins: Mapping[str, float]
    vstar_halfwidth: float
    lower_passed: bool
    upper_passed: bool

    @property
    def passed(self) -> bool:
        return self.lower_passed and self.upper_passed


def schedule_bound_check(model: GameModel, fam: DensityFamily,
                         schedule: GeometricSchedule | PartitionSchedule, *,
                         horizon_mass: float = 0.999,
                         lam_grid=None) -> BoundReport:
    """Check the headline bounds at the schedule's mu.

    Lower: the certified lower end of the value enclosure under the family
    member at mu must exceed V* - 6*eps (V* bracketed by the finest-rate
    enclosure; its half-width is the allowed slack).  The 4*eps margins are
    recorded alongside.  Upper: the same check on the reflected model gives
    the matching V+ < V* + 6*eps via the complement identity.
    """
    eps = schedule.eps
    mu = schedule.mu
    v_lo, v_hi, half = _vstar_bracket(model, fam, lam_grid, horizon_mass)
    v_mid = {s: 0.5 * (v_lo[s] + v_hi[s]) for s in v_lo}
    tbl = dp_value(model, fam.make(mu), horizon_mass)
    lower_margins = {s: tbl.lo[s] - (v_mid[s] - 6.0 * eps)
                     for s in model.states}
    lower_margins_4 = {s: tbl.lo[s] - (v_mid[s] - 4.0 * eps)
                       for s in model.states}
    lower_passed = all(m >= -half for m in lower_margins.values())

    reflected = reflect_cost(model)
    rtbl = dp_value(reflected, fam.make(mu), horizon_mass)
    # V+ of the original = 1 - (lower value of the reflected model).
    upper_margins = {s: (v_mid[s] + 6.0 * eps) - (1.0 - rtbl.lo[s])
                     for s in model.states}
    upper_passed = all(m >= -half for m in upper_margins.values())
    return BoundReport(model=model.name, family=fam.name, mu=mu, eps=eps,
                       lower_margins=lower_margins,
                       lower_margins_4eps=lower_margins_4,
                       upper_margins=upper_margins, vstar_halfwidth=half,
                       lower_passed=lower_passed, upper_passed=upper_passed)
