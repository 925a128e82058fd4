"""Game values for density-weighted payoffs.

All tables are guaranteed enclosures: the truncated tail enters as the
interval [0, tail mass] at the horizon, never as a point estimate, and every
backward-induction step applies the owner's optimizer to both interval ends
(sound because max and min are monotone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .densities import Density, DensityFamily
from .errors import CapExceededError, DomainError
from .games import (
    ENUMERATION_CAP,
    MAX,
    MIN,
    FeedbackPolicy,
    GameModel,
    enumerate_policies,
    truncation_steps,
)


@dataclass(frozen=True)
class ValueTable:
    """Per-state value enclosure for one (model, density) pair."""

    model: str
    density: str
    lam: float | None
    horizon_steps: int
    lo: Mapping[str, float]
    hi: Mapping[str, float]

    def mid(self, s: str) -> float:
        return 0.5 * (self.lo[s] + self.hi[s])

    def width(self, s: str) -> float:
        return self.hi[s] - self.lo[s]

    @property
    def max_width(self) -> float:
        return max(self.width(s) for s in self.lo)

    def states(self) -> tuple[str, ...]:
        return tuple(self.lo)


class _Indexed:
    """Index-based mirror of a model for tight induction loops."""

    def __init__(self, model: GameModel):
        self.states = model.states
        self.pos = {s: i for i, s in enumerate(model.states)}
        self.cost = [model.cost[s] for s in model.states]
        self.succ = [tuple(self.pos[t] for t in model.edges[s])
                     for s in model.states]
        # +1 for max, -1 for min, 0 for forced moves
        self.sense = [1 if model.owner[s] == MAX
                      else (-1 if model.owner[s] == MIN else 0)
                      for s in model.states]


def backward_induct(model: GameModel, weights: Sequence[float],
                    terminal_lo: Mapping[str, float],
                    terminal_hi: Mapping[str, float]
                    ) -> tuple[dict[str, float], dict[str, float]]:
    """Run the weighted induction from a terminal enclosure back to step 0."""
    ix = _Indexed(model)
    lo = [float(terminal_lo[s]) for s in ix.states]
    hi = [float(terminal_hi[s]) for s in ix.states]
    n_states = len(ix.states)
    for n in range(len(weights) - 1, -1, -1):
        w = float(weights[n])
        new_lo = [0.0] * n_states
        new_hi = [0.0] * n_states
        for i in range(n_states):
            base = w * ix.cost[i]
            succ = ix.succ[i]
            sense = ix.sense[i]
            if sense > 0:
                best_lo = max(lo[j] for j in succ)
                best_hi = max(hi[j] for j in succ)
            elif sense < 0:
                best_lo = min(lo[j] for j in succ)
                best_hi = min(hi[j] for j in succ)
            else:
                best_lo = lo[succ[0]]
                best_hi = hi[succ[0]]
            new_lo[i] = base + best_lo
            new_hi[i] = base + best_hi
        lo, hi = new_lo, new_hi
    return ({s: lo[i] for i, s in enumerate(ix.states)},
            {s: hi[i] for i, s in enumerate(ix.states)})


def dp_value(model: GameModel, d: Density, horizon_mass: float) -> ValueTable:
    """Backward-induction value enclosure under the density's step weights.

    On turn-based models the lower and upper games share this value, so one
    table serves both up to the enclosure width (at most the tail mass).
    """
    n = truncation_steps(d, model.dt, horizon_mass)
    w = d.step_weights(model.dt, n)
    tail = d.total_mass - d.mass(n * model.dt)
    term_lo = {s: 0.0 for s in model.states}
    term_hi = {s: tail for s in model.states}
    lo, hi = backward_induct(model, w, term_lo, term_hi)
    return ValueTable(model=model.name, density=d.label, lam=d.lam,
                      horizon_steps=n, lo=lo, hi=hi)


def _response_value(model: GameModel, ix: _Indexed, policy: FeedbackPolicy,
                    weights, term_lo, term_hi, responder_sense: int
                    ) -> tuple[list[float], list[float]]:
    """Induction where one player is pinned to a policy and the other
    optimizes; responder_sense is +1 (max responds) or -1 (min responds)."""
    lo = list(term_lo)
    hi = list(term_hi)
    n_states = len(ix.states)
    for n in range(len(weights) - 1, -1, -1):
        w = float(weights[n])
        new_lo = [0.0] * n_states
        new_hi = [0.0] * n_states
        for i in range(n_states):
            base = w * ix.cost[i]
            succ = ix.succ[i]
            sense = ix.sense[i]
            if sense != 0 and sense != responder_sense:
                # Pinned player's move.
                j = ix.pos[policy.act(model, n, ix.states[i])]
                pick_lo, pick_hi = lo[j], hi[j]
            elif sense == responder_sense and len(succ) > 1:
                if responder_sense > 0:
                    pick_lo = max(lo[j] for j in succ)
                    pick_hi = max(hi[j] for j in succ)
                else:
                    pick_lo = min(lo[j] for j in succ)
                    pick_hi = min(hi[j] for j in succ)
            else:
                pick_lo, pick_hi = lo[succ[0]], hi[succ[0]]
            new_lo[i] = base + pick_lo
            new_hi[i] = base + pick_hi
        lo, hi = new_lo, new_hi
    return lo, hi


def lower_upper_bruteforce(model: GameModel, d: Density, horizon: int, *,
                           cap: int = ENUMERATION_CAP,
                           terminal_lo: Mapping[str, float] | None = None,
                           terminal_hi: Mapping[str, float] | None = None
                           ) -> tuple[ValueTable, ValueTable]:
    """Exact sup-inf and inf-sup over enumerated time-varying policies.

    The lower table maximizes over the max player's policies with the min
    player best-responding, the upper table the other way around.  Terminal
    defaults to [0, tail mass] at the step horizon.
    """
    if horizon <= 0:
        raise DomainError("horizon must be at least one step")
    ix = _Indexed(model)
    w = d.step_weights(model.dt, horizon)
    tail = d.total_mass - d.mass(horizon * model.dt)
    t_lo = ([float(terminal_lo[s]) for s in ix.states] if terminal_lo
            else [0.0] * len(ix.states))
    t_hi = ([float(terminal_hi[s]) for s in ix.states] if terminal_hi
            else [tail] * len(ix.states))

    best_lo = None
    best_hi = None
    for pol in enumerate_policies(model, MAX, horizon, cap=cap):
        lo, hi = _response_value(model, ix, pol, w, t_lo, t_hi, -1)
        if best_lo is None:
            best_lo, best_hi = lo, hi
        else:
            best_lo = [max(a, b) for a, b in zip(best_lo, lo)]
            best_hi = [max(a, b) for a, b in zip(best_hi, hi)]
    lower = ValueTable(model=model.name, density=d.label, lam=d.lam,
                       horizon_steps=horizon,
                       lo={s: best_lo[i] for i, s in enumerate(ix.states)},
                       hi={s: best_hi[i] for i, s in enumerate(ix.states)})

    best_lo = None
    best_hi = None
    for pol in enumerate_policies(model, MIN, horizon, cap=cap):
        lo, hi = _response_value(model, ix, pol, w, t_lo, t_hi, +1)
        if best_lo is None:
            best_lo, best_hi = lo, hi
        else:
            best_lo = [min(a, b) for a, b in zip(best_lo, lo)]
            best_hi = [min(a, b) for a, b in zip(best_hi, hi)]
    upper = ValueTable(model=model.name, density=d.label, lam=d.lam,
                       horizon_steps=horizon,
                       lo={s: best_lo[i] for i, s in enumerate(ix.states)},
                       hi={s: best_hi[i] for i, s in enumerate(ix.states)})
    return lower, upper


@dataclass(frozen=True)
class HybridSpec:
    family: str
    lam: float
    r: float
    q: float
    switch_steps: int
    rounding_offset: float
    terminal_kind: str  # "scaled-member" or "shifted-tail"
    nu: float | None


@dataclass(frozen=True)
class HybridValue:
    spec: HybridSpec
    table: ValueTable


def hybrid_value(model: GameModel, fam: DensityFamily, lam: float, r: float,
                 horizon_mass: float) -> HybridValue:
    """Value of the two-part payoff: weighted cost up to the r-quantile, then
    the value of the tail game at the reached state.

    Self-similar families hand the tail to the member at rate nu scaled by
    1 - r; otherwise the shifted sub-probability tail is used as-is, without
    renormalization.  The quantile is rounded down to the step grid and the
    sliver of mass between the grid point and the true quantile goes into
    the upper end of the enclosure.
    """
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    rho = fam.make(lam)
    q = rho.quantile(r)
    k = int(math.floor(q / model.dt + 1e-12))
    offset = q - k * model.dt

    if fam.self_similar and fam.nu is not None:
        nu = fam.nu(lam, r, q)
        inner = dp_value(model, fam.make(nu), horizon_mass)
        term_lo = {s: (1.0 - r) * inner.lo[s] for s in model.states}
        term_hi = {s: (1.0 - r) * inner.hi[s] for s in model.states}
        kind = "scaled-member"
    else:
        nu = None
        tail_table = dp_value(model, rho.shift_by_quantile(r), horizon_mass)
        term_lo = dict(tail_table.lo)
        term_hi = dict(tail_table.hi)
        kind = "shifted-tail"

    w = rho.step_weights(model.dt, k)
    sliver = max(r - rho.mass(k * model.dt), 0.0)
    term_hi = {s: v + sliver for s, v in term_hi.items()}
    lo, hi = backward_induct(model, w, term_lo, term_hi)
    spec = HybridSpec(family=fam.name, lam=lam, r=r, q=q, switch_steps=k,
                      rounding_offset=offset, terminal_kind=kind, nu=nu)
    table = ValueTable(model=model.name, density=f"hybrid[{fam.name}]",
                       lam=lam, horizon_steps=k, lo=lo, hi=hi)
    return HybridValue(spec=spec, table=table)


@dataclass(frozen=True)
class SaddleGapReport:
    model: str
    family: str
    mode: str
    lam_grid: tuple[float, ...]
    gaps: tuple[float, ...]
    verdict: str


def saddle_gap(model: GameModel, fam: DensityFamily, lam_grid, *,
               mode: str = "dp", horizon_mass: float = 0.99,
               brute_horizon: int = 5,
               cap: int = ENUMERATION_CAP) -> SaddleGapReport:
    """Per-rate gap between the upper and lower game readings.

    dp mode reports the enclosure width (the truncation bound); brute mode
    plays the exactly truncated game (terminal 0) both ways and reports the
    worst-state difference, which vanishes on turn-based models.
    """
    if mode not in ("dp", "brute"):
        raise DomainError("mode must be dp or brute")
    gaps = []
    grid = [float(x) for x in fam.usable(lam_grid)]
    zeros = {s: 0.0 for s in model.states}
    for lam in grid:
        d = fam.make(lam)
        if mode == "dp":
            tbl = dp_value(model, d, horizon_mass)
            gaps.append(max(tbl.hi[s] - tbl.lo[s] for s in model.states))
        else:
            lower, upper = lower_upper_bruteforce(
                model, d, brute_horizon, cap=cap,
                terminal_lo=zeros, terminal_hi=zeros)
            gaps.append(max(upper.hi[s] - lower.lo[s] for s in model.states))
    diffs_ok = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    if max(gaps) <= 1e-12:
        verdict = "zero"
    elif diffs_ok:
        verdict = "shrinking"
    else:
        verdict = "not-shrinking"
    return SaddleGapReport(model=model.name, family=fam.name, mode=mode,
                           lam_grid=tuple(grid), gaps=tuple(gaps),
                           verdict=verdict)
