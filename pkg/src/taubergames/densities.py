"""Weight densities on [0, inf), rate-indexed families, and their diagnostics.

Four concrete kinds: box (constant on [0, 1/rate]), exponential, densities
generated from a positive piecewise-linear profile on a finite horizon, and
tabulated step functions.  Shifted tails and interval-patched variants wrap a
base density.  All masses are exact piecewise integrals, no quadrature.

Everything here is immutable after construction and safe to share across
threads; cumulative tables are precomputed in __init__.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainError,
    ModelFormatError,
    UnreachableQuantileError,
    UnsupportedFamilyError,
)

QUAD_TOL = 1e-10
MASS_TOL = 1e-10
FLAT_TOL = 1e-2
ESCAPE_TOL = 1e-2
REGULARITY_CAP = 50.0

# Default sweep grids: three decades of rates, mass levels shrinking toward 0.
# The final 0.005 entry exists because -ln(1 - 0.01) = 0.01005 sits a hair
# above FLAT_TOL, which would misread the exponential family at r = 0.01.
DEFAULT_R_GRID: tuple[float, ...] = (0.5, 0.25, 0.1, 0.05, 0.01, 0.005)


def default_lambda_grid() -> np.ndarray:
    return np.geomspace(1.0, 1e-4, 17)


def default_mu_grid() -> np.ndarray:
    return np.geomspace(0.5, 1e-4, 13)


def default_T_grid() -> tuple[float, ...]:
    return (0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class GridSpec:
    """A 1-d evaluation grid, uniform or geometric."""

    t_min: float
    t_max: float
    n_points: int
    spacing: str = "uniform"

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise DomainError(f"grid needs t_min < t_max, got {self.t_min} >= {self.t_max}")
        if self.n_points < 2:
            raise DomainError("grid needs at least 2 points")
        if self.spacing not in ("uniform", "geometric"):
            raise DomainError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "geometric" and self.t_min <= 0:
            raise DomainError("geometric spacing needs t_min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.linspace(self.t_min, self.t_max, self.n_points)
        return np.geomspace(self.t_min, self.t_max, self.n_points)


@dataclass(frozen=True)
class VariationReport:
    """Total variation of ln(density) over a half-open interval [a, b).

    value may be +inf when the density is not strictly positive there.
    exact marks closed-form piecewise-monotone sums; otherwise the value is
    a refined grid estimate and converged reports whether refinement settled.
    """

    value: float
    exact: bool
    converged: bool
    n_grid: int
    positive: bool


class Density:
    """Nonnegative weight on [0, inf) with cached total mass.

    Subclasses implement _eval_inside and mass_grid; everything else has
    generic fallbacks.  Sub-probability totals (< 1) are legal and are never
    renormalized.
    """

    kind: str = "abstract"

    def __init__(self, *, lam: float | None, label: str, cutoff: float | None,
                 total_mass: float):
        self.lam = lam
        self.label = label
        self.cutoff = cutoff
        self.total_mass = total_mass

    # -- pointwise ---------------------------------------------------------

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if ts.size and float(np.min(ts)) < 0.0:
            raise DomainError("evaluation time must be nonnegative")
        out = self._eval_inside(ts)
        if self.cutoff is not None:
            out = np.where(ts > self.cutoff, 0.0, out)
        return out

    def eval(self, t: float) -> float:
        return float(self.eval_grid(np.array([float(t)]))[0])

    # -- mass ----------------------------------------------------------------

    def mass_grid(self, ts) -> np.ndarray:
        raise NotImplementedError

    def mass(self, T: float) -> float:
        if T < 0:
            raise DomainError("mass horizon must be nonnegative")
        return float(self.mass_grid(np.array([float(T)]))[0])

    def step_weights(self, dt: float, n: int) -> np.ndarray:
        """Masses of the n cells [i*dt, (i+1)*dt)."""
        if dt <= 0:
            raise DomainError("dt must be positive")
        edges = dt * np.arange(n + 1, dtype=float)
        return np.diff(self.mass_grid(edges))

    # -- quantile ------------------------------------------------------------

    def quantile(self, r: float, *, mass_tol: float = MASS_TOL,
                 time_tol: float = 1e-13) -> float:
        """Minimal t with mass(t) >= r.

        Doubling bracket then bisection on the mass predicate; lands on the
        left endpoint of flat mass stretches.
        """
        if not 0.0 < r < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {r}")
        if r > self.total_mass + mass_tol:
            raise UnreachableQuantileError(r, self.total_mass)

        def reached(t: float) -> bool:
            return self.mass(t) >= r - mass_tol

        if self.cutoff is not None:
            hi = self.cutoff
            if not reached(hi):
                raise UnreachableQuantileError(r, self.mass(hi))
            lo = 0.0
        else:
            lo, hi = 0.0, 1.0
            grew = 0
            while not reached(hi):
                lo, hi = hi, hi * 2.0
                grew += 1
                if grew > 200:
                    raise UnreachableQuantileError(r, self.mass(hi))
        if reached(lo):
            return lo
        while hi - lo > time_tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if reached(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def shift_by_quantile(self, r: float) -> "ShiftedDensity":
        return ShiftedDensity(self, r, self.quantile(r))

    # -- log variation ---------------------------------------------------------

    def _check_interval(self, a: float, b: float) -> None:
        if a < 0:
            raise DomainError("variation interval must start at a >= 0")
        if not a < b:
            raise DomainError(f"variation interval needs a < b, got [{a}, {b})")

    def variation_report(self, a: float, b: float) -> VariationReport:
        self._check_interval(a, b)
        return self._variation(a, b)

    def log_total_variation(self, a: float, b: float) -> float:
        return self.variation_report(a, b).value

    def _variation(self, a: float, b: float) -> VariationReport:
        # Generic refined grid sum; subclasses override with closed forms.
        b_in = b
        if self.cutoff is not None:
            if b > self.cutoff * (1.0 + 1e-12) + 1e-300:
                # [a, b) contains a region of zero density.
                return VariationReport(math.inf, exact=True, converged=True,
                                       n_grid=0, positive=False)
            b_in = min(b, self.cutoff)
        # Stay strictly inside the half-open interval.
        b_in = b_in - (b_in - a) * 1e-9
        prev = None
        n = 1024
        while n <= 262_144:
            ts = np.linspace(a, b_in, n + 1)
            vals = self.eval_grid(ts)
            if float(np.min(vals)) <= 0.0:
                return VariationReport(math.inf, exact=False, converged=True,
                                       n_grid=n, positive=False)
            v = float(np.sum(np.abs(np.diff(np.log(vals)))))
            if prev is not None and abs(v - prev) <= 1e-6 * max(1.0, abs(v)):
                return VariationReport(v, exact=False, converged=True,
                                       n_grid=n, positive=True)
            prev = v
            n *= 2
        return VariationReport(prev, exact=False, converged=False,
                               n_grid=n // 2, positive=True)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label} total={self.total_mass:.6g}>"


class CesaroDensity(Density):
    """Constant rate on [0, 1/rate]; realizes plain time averaging."""

    kind = "cesaro"

    def __init__(self, lam: float):
        if lam <= 0:
            raise DomainError("rate must be positive")
        super().__init__(lam=lam, label=f"cesaro({lam:g})", cutoff=1.0 / lam,
                         total_mass=1.0)

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        return np.where(ts <= self.cutoff, self.lam, 0.0)

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return self.lam * np.minimum(ts, self.cutoff)

    def quantile(self, r: float, **kwargs) -> float:
        if not 0.0 < r < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {r}")
        return r / self.lam

    def _variation(self, a: float, b: float) -> VariationReport:
        if b <= self.cutoff * (1.0 + 1e-12):
            return VariationReport(0.0, exact=True, converged=True, n_grid=0,
                                   positive=True)
        return VariationReport(math.inf, exact=True, converged=True, n_grid=0,
                               positive=False)


class ExponentialDensity(Density):
    """rate * exp(-rate * t); realizes discounted averaging."""

    kind = "exponential"

    def __init__(self, lam: float):
        if lam <= 0:
            raise DomainError("rate must be positive")
        super().__init__(lam=lam, label=f"exp({lam:g})", cutoff=None,
                         total_mass=1.0)

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        return self.lam * np.exp(-self.lam * ts)

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return -np.expm1(-self.lam * ts)

    def quantile(self, r: float, **kwargs) -> float:
        if not 0.0 < r < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {r}")
        return -math.log1p(-r) / self.lam

    def _variation(self, a: float, b: float) -> VariationReport:
        # ln density is linear with slope -rate.
        return VariationReport(self.lam * (b - a), exact=True, converged=True,
                               n_grid=0, positive=True)


class GeneratedDensity(Density):
    """Density on [0, T] built from a positive piecewise-linear profile f.

    The weight at time t is f(T - t) normalized to the requested total, so
    recent times (t near 0) read the profile near its right end.  knots must
    start at 0 and end at T; values must be strictly positive.
    """

    kind = "generated"

    def __init__(self, knots: Sequence[float], values: Sequence[float], *,
                 lam: float | None = None, label: str | None = None,
                 total: float = 1.0):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or knots.shape != values.shape:
            raise DomainError("profile needs matching knot/value arrays, >= 2 knots")
        if knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
            raise DomainError("profile knots must start at 0 and strictly increase")
        if float(np.min(values)) <= 0.0:
            raise DomainError("profile values must be strictly positive")
        T = float(knots[-1])
        self.T = T
        self.knots = knots
        self.values = values
        # Cumulative trapezoid integral of f along s.
        seg = 0.5 * (values[1:] + values[:-1]) * np.diff(knots)
        self._cum_f = np.concatenate(([0.0], np.cumsum(seg)))
        self._Z = float(self._cum_f[-1]) / total
        super().__init__(lam=lam if lam is not None else 1.0 / T,
                         label=label or f"generated(T={T:g})",
                         cutoff=T, total_mass=total)

    def _profile(self, ss: np.ndarray) -> np.ndarray:
        return np.interp(ss, self.knots, self.values)

    def _profile_mass(self, ss: np.ndarray) -> np.ndarray:
        """Exact integral of f over [0, s] (piecewise quadratic)."""
        ss = np.clip(ss, 0.0, self.T)
        idx = np.searchsorted(self.knots, ss, side="right") - 1
        idx = np.clip(idx, 0, len(self.knots) - 2)
        t0 = self.knots[idx]
        v0 = self.values[idx]
        slope = (self.values[idx + 1] - v0) / (self.knots[idx + 1] - t0)
        d = ss - t0
        return self._cum_f[idx] + v0 * d + 0.5 * slope * d * d

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        ss = np.clip(self.T - ts, 0.0, self.T)
        return self._profile(ss) / self._Z

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        tt = np.clip(ts, 0.0, self.T)
        # integral over [0, t] of f(T-u) du = integral of f over [T-t, T]
        return (self._cum_f[-1] - self._profile_mass(self.T - tt)) / self._Z

    def _variation(self, a: float, b: float) -> VariationReport:
        if b > self.T * (1.0 + 1e-12):
            return VariationReport(math.inf, exact=True, converged=True,
                                   n_grid=0, positive=False)
        # t in [a, b) maps to s = T - t in (T - b, T - a]; ln f is monotone
        # between profile knots, so the exact variation splits at knots.
        s_lo = max(self.T - b, 0.0)
        s_hi = self.T - a
        inner = self.knots[(self.knots > s_lo) & (self.knots < s_hi)]
        pts = np.concatenate(([s_lo], inner, [s_hi]))
        vals = self._profile(pts)
        if float(np.min(vals)) <= 0.0:
            return VariationReport(math.inf, exact=True, converged=True,
                                   n_grid=0, positive=False)
        v = float(np.sum(np.abs(np.diff(np.log(vals)))))
        return VariationReport(v, exact=True, converged=True, n_grid=0,
                               positive=True)


class TabulatedDensity(Density):
    """Step function: level values[i] on [breakpoints[i], breakpoints[i+1])."""

    kind = "tabulated"

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float], *,
                 lam: float | None = None, label: str | None = None):
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or vals.size != bp.size - 1:
            raise DomainError("tabulated density needs n breakpoints and n-1 levels")
        if bp[0] < 0 or np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be nonnegative and strictly increase")
        if float(np.min(vals)) < 0.0:
            raise DomainError("levels must be nonnegative")
        self.breakpoints = bp
        self.levels = vals
        seg = vals * np.diff(bp)
        self._cum = np.concatenate(([0.0], np.cumsum(seg)))
        super().__init__(lam=lam, label=label or "tabulated",
                         cutoff=float(bp[-1]), total_mass=float(self._cum[-1]))

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, ts, side="right") - 1
        ok = (idx >= 0) & (idx < len(self.levels))
        return np.where(ok, self.levels[np.clip(idx, 0, len(self.levels) - 1)], 0.0)

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.interp(ts, self.breakpoints, self._cum)

    def quantile(self, r: float, **kwargs) -> float:
        if not 0.0 < r < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {r}")
        if r > self.total_mass + MASS_TOL:
            raise UnreachableQuantileError(r, self.total_mass)
        r_eff = min(r, float(self._cum[-1]))
        j = int(np.searchsorted(self._cum, r_eff, side="left"))
        if self._cum[j] == r_eff:
            # Left endpoint of any flat stretch: back up over zero-level cells.
            while j > 0 and self._cum[j - 1] == r_eff:
                j -= 1
            return float(self.breakpoints[j])
        lvl = self.levels[j - 1]
        return float(self.breakpoints[j - 1] + (r_eff - self._cum[j - 1]) / lvl)

    def _variation(self, a: float, b: float) -> VariationReport:
        bp, lv = self.breakpoints, self.levels
        if b > bp[-1] * (1.0 + 1e-12):
            return VariationReport(math.inf, exact=True, converged=True,
                                   n_grid=0, positive=False)
        if bp[0] > 0 and a < bp[0]:
            # Density is 0 on [0, bp[0]) by convention.
            return VariationReport(math.inf, exact=True, converged=True,
                                   n_grid=0, positive=False)
        first = int(np.searchsorted(bp, a, side="right")) - 1
        first = max(first, 0)
        involved = []
        for i in range(first, len(lv)):
            if bp[i] >= b:
                break
            if bp[i + 1] > a:
                involved.append(lv[i])
        if not involved or min(involved) <= 0.0:
            return VariationReport(math.inf, exact=True, converged=True,
                                   n_grid=0, positive=False)
        logs = np.log(np.asarray(involved))
        v = float(np.sum(np.abs(np.diff(logs))))
        return VariationReport(v, exact=True, converged=True, n_grid=0,
                               positive=True)


class ShiftedDensity(Density):
    """Tail of a base density past its r-quantile; total mass 1 - r.

    Kept as a sub-probability on purpose: downstream payoffs weigh it as-is.
    """

    kind = "shifted"

    def __init__(self, base: Density, r: float, q: float):
        self.base = base
        self.r = r
        self.q = q
        self._m0 = base.mass(q)
        cutoff = None if base.cutoff is None else max(base.cutoff - q, 0.0)
        super().__init__(lam=base.lam, label=f"{base.label}|tail(r={r:g})",
                         cutoff=cutoff, total_mass=base.total_mass - self._m0)

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        return self.base.eval_grid(ts + self.q)

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return self.base.mass_grid(ts + self.q) - self._m0

    def _variation(self, a: float, b: float) -> VariationReport:
        return self.base.variation_report(a + self.q, b + self.q)


class PatchedDensity(Density):
    """Base density with selected partition cells replaced by their mean level
    and everything beyond the last boundary dropped."""

    kind = "patched"

    def __init__(self, base: Density, boundaries: Sequence[float],
                 replaced: Sequence[bool], levels: Sequence[float], *,
                 label: str | None = None):
        bounds = np.asarray(boundaries, dtype=float)
        repl = np.asarray(replaced, dtype=bool)
        lvls = np.asarray(levels, dtype=float)
        if bounds.ndim != 1 or bounds.size < 2 or np.any(np.diff(bounds) <= 0):
            raise DomainError("boundaries must strictly increase")
        if bounds[0] != 0.0:
            raise DomainError("partition must start at 0")
        if repl.size != bounds.size - 1 or lvls.size != bounds.size - 1:
            raise DomainError("need one replaced flag and level per cell")
        self.base = base
        self.boundaries = bounds
        self.replaced = repl
        self.levels = lvls
        base_mass_at = base.mass_grid(bounds)
        cell = np.where(repl, lvls * np.diff(bounds), np.diff(base_mass_at))
        self._cum = np.concatenate(([0.0], np.cumsum(cell)))
        self._base_mass_at = base_mass_at
        super().__init__(lam=base.lam, label=label or f"{base.label}|patched",
                         cutoff=float(bounds[-1]), total_mass=float(self._cum[-1]))

    def _eval_inside(self, ts: np.ndarray) -> np.ndarray:
        bounds = self.boundaries
        # Points exactly at the last boundary belong to the final cell.
        idx = np.clip(np.searchsorted(bounds, ts, side="right") - 1, 0,
                      len(self.levels) - 1)
        out = np.where(self.replaced[idx], self.levels[idx],
                       self.base.eval_grid(ts))
        return np.where(ts <= bounds[-1], out, 0.0)

    def mass_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        bounds = self.boundaries
        tt = np.clip(ts, 0.0, bounds[-1])
        idx = np.clip(np.searchsorted(bounds, tt, side="right") - 1, 0,
                      len(self.levels) - 1)
        d = tt - bounds[idx]
        part = np.where(self.replaced[idx], self.levels[idx] * d,
                        self.base.mass_grid(tt) - self._base_mass_at[idx])
        return self._cum[idx] + part


def l1_distance(d1: Density, d2: Density, a: float, b: float, *,
                n_start: int = 4096, n_cap: int = 1 << 21,
                rtol: float = 1e-8) -> float:
    """Refined trapezoid estimate of the L1 distance over [a, b]."""
    if not a < b:
        raise DomainError("need a < b")
    prev = None
    n = n_start
    while n <= n_cap:
        ts = np.linspace(a, b, n + 1)
        gap = np.abs(d1.eval_grid(ts) - d2.eval_grid(ts))
        v = float(np.trapezoid(gap, ts))
        if prev is not None and abs(v - prev) <= rtol * max(1.0, v):
            return v
        prev = v
        n *= 2
    return prev


# -- families ---------------------------------------------------------------


@dataclass(frozen=True)
class DensityFamily:
    """A rate-indexed family lam -> Density with structural metadata.

    nu, when present, maps (lam, r, q) to the rate whose member carries the
    tail of lam's member past its r-quantile, scaled by 1 - r.
    """

    name: str
    make: Callable[[float], Density]
    self_similar: bool
    nu: Callable[[float, float, float], float] | None = None
    claimed_flat: bool | None = None
    claimed_regular: bool | None = None
    lambda_min: float = 0.0

    def usable(self, lam_grid) -> np.ndarray:
        grid = np.asarray(lam_grid, dtype=float)
        return grid[grid >= self.lambda_min]


def cesaro_family() -> DensityFamily:
    return DensityFamily(
        name="cesaro",
        make=CesaroDensity,
        self_similar=True,
        nu=lambda lam, r, q: lam / (1.0 - r),
        claimed_flat=True,
        claimed_regular=True,
    )


def exponential_family() -> DensityFamily:
    return DensityFamily(
        name="exp",
        make=ExponentialDensity,
        self_similar=True,
        nu=lambda lam, r, q: lam,
        claimed_flat=True,
        claimed_regular=True,
    )


def generated_family(name: str,
                     table_builder: Callable[[float], tuple[np.ndarray, np.ndarray]],
                     *, claimed_flat: bool | None = None,
                     claimed_regular: bool | None = None,
                     lambda_min: float = 0.0) -> DensityFamily:
    """Family of generated densities with horizon T = 1/lam.

    table_builder(T) returns the profile (knots, values) on [0, T].
    """

    def make(lam: float) -> GeneratedDensity:
        if lam <= 0:
            raise DomainError("rate must be positive")
        knots, values = table_builder(1.0 / lam)
        return GeneratedDensity(knots, values, lam=lam,
                                label=f"{name}({lam:g})")

    return DensityFamily(
        name=name,
        make=make,
        self_similar=True,
        nu=lambda lam, r, q: 1.0 / (1.0 / lam - q),
        claimed_flat=claimed_flat,
        claimed_regular=claimed_regular,
        lambda_min=lambda_min,
    )


def flat_profile_family() -> DensityFamily:
    """Generated family with profile f = 1; coincides with the box family."""
    return generated_family(
        "gen-flat",
        lambda T: (np.array([0.0, T]), np.array([1.0, 1.0])),
        claimed_flat=True, claimed_regular=True)


def linear_profile_family() -> DensityFamily:
    """Generated family with profile f(s) = 1 + s (exact, two knots)."""
    return generated_family(
        "gen-linear",
        lambda T: (np.array([0.0, T]), np.array([1.0, 1.0 + T])),
        claimed_flat=True, claimed_regular=True)


def exp_profile_family(*, lambda_min: float = 1e-2) -> DensityFamily:
    """Generated family with profile f(s) = e^s, sampled piecewise-linearly.

    lambda_min keeps horizons short enough that e^T stays in float range.
    """

    def build(T: float) -> tuple[np.ndarray, np.ndarray]:
        n = max(2, int(math.ceil(64 * T)) + 1)
        knots = np.linspace(0.0, T, n)
        return knots, np.exp(knots)

    return generated_family("gen-exp", build, lambda_min=lambda_min)


def oscillating_family() -> DensityFamily:
    """Generated stress family with profile 1 + sin^2(2*pi*s).

    Its log variation up to a fixed mass level grows without bound as the
    rate shrinks, so it is neither flat at zero nor regular.  Bundled as a
    stress instance of this package's own construction.
    """

    def build(T: float) -> tuple[np.ndarray, np.ndarray]:
        n = max(2, int(math.ceil(64 * T)) + 1)
        knots = np.linspace(0.0, T, n)
        s = np.sin(2.0 * math.pi * knots)
        return knots, 1.0 + s * s

    return generated_family("gen-oscillating", build,
                            claimed_flat=False, claimed_regular=False)


def fixed_bump_family(beta: float = 0.5) -> DensityFamily:
    """Step family keeping mass beta on [0, 1] at every rate.

    The pinned bump never escapes to late times, so the escape diagnostic
    fails by construction and limits under this family may disagree with the
    box family's.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError("beta must lie in (0, 1)")

    def make(mu: float) -> TabulatedDensity:
        if mu <= 0:
            raise DomainError("rate must be positive")
        if 1.0 / mu - 1.0 < 1e-9:
            return TabulatedDensity([0.0, 1.0], [1.0], lam=mu,
                                    label=f"bump({mu:g})")
        v_head = beta + (1.0 - beta) * mu
        v_tail = (1.0 - beta) * mu
        return TabulatedDensity([0.0, 1.0, 1.0 / mu], [v_head, v_tail],
                                lam=mu, label=f"bump({mu:g})")

    return DensityFamily(name="bump", make=make, self_similar=False,
                         claimed_flat=None, claimed_regular=None)


BUILTIN_FAMILIES: dict[str, Callable[[], DensityFamily]] = {
    "cesaro": cesaro_family,
    "exp": exponential_family,
    "exponential": exponential_family,
    "gen-flat": flat_profile_family,
    "gen-linear": linear_profile_family,
    "gen-exp": exp_profile_family,
    "gen-oscillating": oscillating_family,
    "bump": fixed_bump_family,
}


def get_family(name: str) -> DensityFamily:
    try:
        return BUILTIN_FAMILIES[name]()
    except KeyError:
        raise UnsupportedFamilyError(
            f"unknown family {name!r}; built-ins: {sorted(set(BUILTIN_FAMILIES))}")


def parse_family_spec(text: str, *, path: str | None = None) -> DensityFamily:
    """Parse a family spec file.

    Format: `kind cesaro|exponential|generated`, optional `name <id>`, and for
    generated kinds a `[generator]` section of `knot value` pairs giving the
    profile; the profile extends past its last knot at a constant level.
    """
    kind = None
    name = None
    knots: list[float] = []
    values: list[float] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section != "generator":
                raise ModelFormatError(f"unknown section [{section}]",
                                       path=path, line=lineno)
            continue
        parts = line.split()
        if section == "generator":
            if len(parts) != 2:
                raise ModelFormatError("generator rows are `knot value`",
                                       path=path, line=lineno)
            try:
                k, v = float(parts[0]), float(parts[1])
            except ValueError:
                raise ModelFormatError("generator rows must be numeric",
                                       path=path, line=lineno)
            knots.append(k)
            values.append(v)
            continue
        key = parts[0].lower()
        if key == "kind" and len(parts) == 2:
            kind = parts[1].lower()
            if kind not in ("cesaro", "box", "exp", "exponential",
                            "generated"):
                raise ModelFormatError(f"unknown kind {kind!r}", path=path,
                                       line=lineno)
        elif key == "name" and len(parts) == 2:
            name = parts[1]
        else:
            raise ModelFormatError(f"unrecognized line {raw!r}", path=path,
                                   line=lineno)
    if kind is None:
        raise ModelFormatError("missing `kind` line", path=path)
    if kind in ("cesaro", "box"):
        return cesaro_family()
    if kind in ("exp", "exponential"):
        return exponential_family()
    if len(knots) < 2:
        raise ModelFormatError("generated kind needs >= 2 generator rows",
                               path=path)
    base_k = np.asarray(knots, dtype=float)
    base_v = np.asarray(values, dtype=float)
    if base_k[0] != 0.0 or np.any(np.diff(base_k) <= 0):
        raise ModelFormatError("generator knots must start at 0 and increase",
                               path=path)
    if float(np.min(base_v)) <= 0.0:
        raise ModelFormatError("generator values must be positive", path=path)

    def build(T: float) -> tuple[np.ndarray, np.ndarray]:
        if T <= base_k[-1]:
            keep = base_k < T
            kk = np.concatenate((base_k[keep], [T]))
            vv = np.concatenate((base_v[keep],
                                 [float(np.interp(T, base_k, base_v))]))
            return kk, vv
        return (np.concatenate((base_k, [T])),
                np.concatenate((base_v, [base_v[-1]])))

    return generated_family(name or "gen-file", build)


def load_family(spec: str) -> DensityFamily:
    """Resolve a family from a built-in name or a spec file path."""
    if spec in BUILTIN_FAMILIES:
        return BUILTIN_FAMILIES[spec]()
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UnsupportedFamilyError(
            f"family {spec!r} is neither built-in nor a readable file: {exc}")
    return parse_family_spec(text, path=spec)


# -- structural diagnostics ---------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    lam: float
    r: float
    h: float
    nu: float
    residual: float
    ok: bool
    n_grid: int


def self_similar_decompose(fam: DensityFamily, lam: float, r: float, *,
                           n_grid: int = 1000,
                           tol: float = 1e-8) -> Decomposition:
    """Split a member past its r-quantile as (1 - r) times another member.

    The scale 1 - r is forced by mass accounting; nu comes from the family's
    own rule and is not asserted to be the only rate that works.  A residual
    above tol yields ok=False rather than an exception.
    """
    if not fam.self_similar or fam.nu is None:
        raise UnsupportedFamilyError(f"family {fam.name} is not self-similar")
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    rho = fam.make(lam)
    q = rho.quantile(r)
    shifted = rho.shift_by_quantile(r)
    nu = fam.nu(lam, r, q)
    ref = fam.make(nu)
    h = 1.0 - r
    cuts = [c for c in (shifted.cutoff, ref.cutoff) if c is not None]
    horizon = (1.0 - 1e-9) * min(cuts) if cuts else 12.0 / nu
    ts = np.linspace(0.0, horizon, n_grid)
    residual = float(np.max(np.abs(shifted.eval_grid(ts) - h * ref.eval_grid(ts))))
    return Decomposition(lam=lam, r=r, h=h, nu=nu, residual=residual,
                         ok=residual <= tol, n_grid=n_grid)


@dataclass(frozen=True)
class FlatnessReport:
    family: str
    r_grid: tuple[float, ...]
    lam_grid: tuple[float, ...]
    table: np.ndarray            # shape (len(r_grid), len(lam_grid))
    limit_estimates: np.ndarray  # innermost-rate column
    double_limit: float
    sensitivity: float           # max row change between last two rate columns
    rows_stabilized: tuple[bool, ...]
    flat: bool
    reason: str


def flatness_diagnostic(fam: DensityFamily, r_grid=None, lam_grid=None, *,
                        flat_tol: float = FLAT_TOL) -> FlatnessReport:
    """Tabulate log variation up to the r-quantile over (r, rate).

    Verdict: flat when every row has settled along the rate axis and the
    settled values shrink below flat_tol as r does.
    """
    r_grid = tuple(DEFAULT_R_GRID if r_grid is None else r_grid)
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    lam_grid = fam.usable(lam_grid)
    if lam_grid.size < 2:
        raise DomainError("need at least two usable rates")
    table = np.empty((len(r_grid), lam_grid.size))
    for i, r in enumerate(r_grid):
        for j, lam in enumerate(lam_grid):
            rho = fam.make(lam)
            q = rho.quantile(r)
            table[i, j] = rho.log_total_variation(0.0, q)
    limits = table[:, -1]
    rows_ok = []
    for i in range(len(r_grid)):
        last, prev = table[i, -1], table[i, -2]
        if math.isinf(last) or math.isinf(prev):
            rows_ok.append(False)
            continue
        rows_ok.append(abs(last - prev) <= 1e-6 + 0.05 * max(abs(last), flat_tol))
    finite = np.isfinite(limits)
    sensitivity = float(np.max(np.abs(table[finite][:, -1] - table[finite][:, -2]))) \
        if np.any(finite) else math.inf
    if not all(rows_ok):
        flat, reason = False, "variation not settled along the rate axis"
    elif not np.all(np.diff(limits) <= 1e-9 + 1e-6 * np.abs(limits[:-1])):
        flat, reason = False, "settled variation does not shrink with r"
    elif not limits[-1] < flat_tol:
        flat, reason = False, (
            f"settled variation {limits[-1]:.4g} at r={r_grid[-1]} "
            f"not below {flat_tol}")
    else:
        flat, reason = True, "settled variation shrinks below tolerance"
    return FlatnessReport(
        family=fam.name, r_grid=r_grid, lam_grid=tuple(float(x) for x in lam_grid),
        table=table, limit_estimates=limits, double_limit=float(limits[-1]),
        sensitivity=sensitivity, rows_stabilized=tuple(rows_ok),
        flat=flat, reason=reason)


@dataclass(frozen=True)
class RegularityReport:
    family: str
    r: float
    lam_grid: tuple[float, ...]
    variations: np.ndarray
    limsup_estimate: float
    tail_settled: bool
    regular: bool
    reason: str


def regularity_diagnostic(fam: DensityFamily, r: float, lam_grid=None, *,
                          cap: float = REGULARITY_CAP) -> RegularityReport:
    """Estimate the limiting log variation up to the r-quantile as rates shrink."""
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    lam_grid = fam.usable(lam_grid)
    if lam_grid.size < 4:
        raise DomainError("need at least four usable rates")
    vs = np.empty(lam_grid.size)
    for j, lam in enumerate(lam_grid):
        rho = fam.make(lam)
        vs[j] = rho.log_total_variation(0.0, rho.quantile(r))
    tail_n = max(3, lam_grid.size // 4)
    tail = vs[-tail_n:]
    if not np.all(np.isfinite(tail)):
        return RegularityReport(fam.name, r, tuple(map(float, lam_grid)), vs,
                                math.inf, False, False,
                                "variation infinite in the rate tail")
    est = float(np.max(tail))
    spread = float(np.max(tail) - np.min(tail))
    settled = spread <= 1e-3 * max(1.0, est) + 1e-9
    if not settled:
        regular, reason = False, "variation still moving in the rate tail"
    elif est >= cap:
        regular, reason = False, f"limit estimate {est:.4g} reaches cap {cap}"
    else:
        regular, reason = True, "variation settled below cap"
    return RegularityReport(fam.name, r, tuple(map(float, lam_grid)), vs, est,
                            settled, regular, reason)


@dataclass(frozen=True)
class EscapeReport:
    family: str
    T_grid: tuple[float, ...]
    mu_grid: tuple[float, ...]
    table: np.ndarray  # shape (len(T_grid), len(mu_grid))
    escapes: bool
    witness_T: float | None
    reason: str


def escape_diagnostic(fam: DensityFamily, T_grid=None, mu_grid=None, *,
                      escape_tol: float = ESCAPE_TOL) -> EscapeReport:
    """Check that early mass drains away as the rate shrinks."""
    T_grid = tuple(default_T_grid() if T_grid is None else T_grid)
    mu_grid = default_mu_grid() if mu_grid is None else np.asarray(mu_grid, dtype=float)
    mu_grid = fam.usable(mu_grid)
    if min(T_grid) <= 0 or mu_grid.size < 2:
        raise DomainError("grids must be positive, >= 2 rates")
    table = np.empty((len(T_grid), mu_grid.size))
    for j, mu in enumerate(mu_grid):
        rho = fam.make(mu)
        table[:, j] = rho.mass_grid(np.asarray(T_grid, dtype=float))
    escapes = True
    witness = None
    for i, T in enumerate(T_grid):
        col = table[i]
        drops = np.all(np.diff(col) <= 1e-12 + 1e-9 * np.abs(col[:-1]))
        if not (drops and col[-1] < escape_tol):
            escapes = False
            witness = float(T)
            break
    reason = ("early mass drains below tolerance at every window" if escapes
              else f"early mass persists at window T={witness}")
    return EscapeReport(fam.name, T_grid, tuple(float(x) for x in mu_grid),
                        table, escapes, witness, reason)
