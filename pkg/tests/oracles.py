"""Independent reference computations for the test suite.

Everything here recomputes quantities by a route different from the library:
adaptive quadrature for mass, pure bisection for quantiles, dense-grid sums
for log variation, closed-form geometric series for the periodic averaging
sums, and full two-sided policy-matrix enumeration for game values.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.integrate import quad


def density_kinks(d) -> tuple:
    """Non-smooth points of a density's evaluation, for quadrature splits."""
    pts = [] if d.cutoff is None else [d.cutoff]
    knots = getattr(d, "knots", None)
    if knots is not None:  # generated: kink at t = T - s for each profile knot
        pts.extend(float(d.T - s) for s in knots)
    bps = getattr(d, "breakpoints", None)
    if bps is not None:
        pts.extend(float(b) for b in bps)
    return tuple(pts)


def quad_mass(d, T: float, *, points: tuple = ()) -> float:
    """Mass of density d on [0, T] by piecewise adaptive quadrature."""
    cuts = sorted({float(p) for p in (*points, *density_kinks(d))
                   if 0.0 < p < T})
    edges = [0.0] + cuts + [float(T)]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, _ = quad(d.eval, a, b, limit=400)
        total += val
    return total


def bisect_quantile(mass_fn, r: float, *, hi: float = 1.0,
                    iters: int = 200) -> float:
    """Minimal t with mass_fn(t) >= r, by doubling then plain bisection."""
    while mass_fn(hi) < r and hi < 1e18:
        hi *= 2.0
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mass_fn(mid) >= r:
            hi = mid
        else:
            lo = mid
    return hi


def grid_log_variation(d, a: float, b: float, n: int = 200_000) -> float:
    """Total variation of log(density) over [a, b) from a dense grid.

    Converges from below for piecewise-monotone densities; only valid where
    the density stays strictly positive.
    """
    ts = a + (b - a) * np.arange(n) / n
    vals = d.eval_grid(ts)
    if np.any(vals <= 0.0):
        return math.inf
    return float(np.sum(np.abs(np.diff(np.log(vals)))))


# -- periodic averaging closed forms ----------------------------------------------


def abel_period2(lam: float, dt: float = 1.0) -> float:
    """Discounted mean of 0,1,0,1,... on the dt-grid."""
    x = math.exp(-lam * dt)
    return x / (1.0 + x)


def cesaro_period2(lam: float, dt: float = 1.0) -> float:
    """Plain mean of 0,1,0,1,... over [0, 1/lam]."""
    T = 1.0 / lam
    period = 2.0 * dt
    full = math.floor(T / period)
    rem = T - full * period
    integral = full * dt + max(0.0, min(rem, period) - dt)
    return lam * integral


def abel_period3(lam: float, dt: float = 1.0) -> float:
    """Discounted mean of 1,0,0,1,0,0,... on the dt-grid."""
    x = math.exp(-lam * dt)
    return (1.0 - x) / (1.0 - x ** 3)


def cesaro_period3(lam: float, dt: float = 1.0) -> float:
    """Plain mean of 1,0,0,... over [0, 1/lam]."""
    T = 1.0 / lam
    period = 3.0 * dt
    full = math.floor(T / period)
    rem = T - full * period
    integral = full * dt + min(rem, dt)
    return lam * integral


# -- full matrix game oracle --------------------------------------------------------


def _choice_profiles(model, owner: str, horizon: int):
    """All per-step choice tables for the owner, as tuples of dicts."""
    slots = []
    for _ in range(horizon):
        per_state = []
        for s in model.states:
            if model.owner[s] == owner and len(model.successors(s)) > 1:
                per_state.append([(s, nxt) for nxt in model.successors(s)])
        slots.append(per_state)
    flat = [opts for step in slots for opts in step]
    if not flat:
        yield tuple({} for _ in range(horizon))
        return
    sizes = [slot for step in slots for slot in step]
    for combo in itertools.product(*sizes):
        maps = [dict() for _ in range(horizon)]
        i = 0
        for n, step in enumerate(slots):
            for _ in step:
                s, nxt = combo[i]
                maps[n][s] = nxt
                i += 1
        yield tuple(maps)


def _walk(model, start: str, max_maps, min_maps, horizon: int):
    s = start
    path = [s]
    for n in range(horizon):
        owner = model.owner[s]
        succ = model.successors(s)
        if len(succ) == 1:
            s = succ[0]
        elif owner == "max":
            s = max_maps[n][s]
        else:
            s = min_maps[n][s]
        path.append(s)
    return path


def matrix_lower_upper(model, weights, horizon: int):
    """sup-inf and inf-sup of the truncated payoff over the full policy
    matrix, per start state.  Terminal value zero."""
    w = [float(x) for x in weights]
    max_profiles = list(_choice_profiles(model, "max", horizon))
    min_profiles = list(_choice_profiles(model, "min", horizon))
    pay = {}
    for i, mp in enumerate(max_profiles):
        for j, np_ in enumerate(min_profiles):
            for start in model.states:
                path = _walk(model, start, mp, np_, horizon)
                pay[(i, j, start)] = sum(w[n] * model.cost[path[n]]
                                         for n in range(horizon))
    lower = {}
    upper = {}
    for start in model.states:
        lower[start] = max(min(pay[(i, j, start)]
                               for j in range(len(min_profiles)))
                           for i in range(len(max_profiles)))
        upper[start] = min(max(pay[(i, j, start)]
                               for i in range(len(max_profiles)))
                           for j in range(len(min_profiles)))
    return lower, upper


def count_profiles(model, owner: str, horizon: int) -> int:
    per_step = 1
    for s in model.states:
        if model.owner[s] == owner and len(model.successors(s)) > 1:
            per_step *= len(model.successors(s))
    return per_step ** horizon
