"""Finite turn-based game models, processes, strategy sets, and payoffs.

States carry an owner tag: "max" and "min" states belong to the players,
"none" marks uncontrolled states with a single successor.  Time advances in
uniform dt steps and trajectories are piecewise constant on the step grid.

Strategy sets are realized as process sets induced by feedback policies,
closed under start-state dispatch and time-shifted concatenation.  Plain
feedback policies alone are not closed under either operation on graphs
where different starts reach the same (step, state) cell, hence the small
term algebra below.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .densities import Density
from .errors import (
    CapExceededError,
    ConcatenationError,
    DomainError,
    HorizonOverflowError,
    ModelFormatError,
)

MAX = "max"
MIN = "min"
NONE = "none"

ENUMERATION_CAP = 200_000


@dataclass(frozen=True)
class GameModel:
    """Immutable turn-based game graph with per-state running cost in [0, 1]."""

    name: str
    states: tuple[str, ...]
    owner: Mapping[str, str]
    cost: Mapping[str, float]
    edges: Mapping[str, tuple[str, ...]]
    dt: float

    def __post_init__(self):
        if not self.states:
            raise DomainError("model needs at least one state")
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        seen = set(self.states)
        if len(seen) != len(self.states):
            raise DomainError("duplicate state ids")
        for s in self.states:
            if s not in self.owner or s not in self.cost or s not in self.edges:
                raise DomainError(f"state {s!r} missing owner, cost, or edges")
            if self.owner[s] not in (MAX, MIN, NONE):
                raise DomainError(f"state {s!r} has unknown owner {self.owner[s]!r}")
            g = self.cost[s]
            if not 0.0 <= g <= 1.0:
                raise DomainError(f"cost of {s!r} must lie in [0, 1], got {g}")
            succ = self.edges[s]
            if not succ:
                raise DomainError(f"state {s!r} has no outgoing edge")
            if self.owner[s] == NONE and len(succ) != 1:
                raise DomainError(
                    f"uncontrolled state {s!r} must have exactly one successor")
            for t in succ:
                if t not in seen:
                    raise DomainError(f"edge {s!r} -> {t!r} targets unknown state")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def successors(self, s: str) -> tuple[str, ...]:
        return self.edges[s]

    def max_branching(self) -> int:
        return max(len(self.edges[s]) for s in self.states)


def reflect_cost(model: GameModel) -> GameModel:
    """Swap the players and complement the cost; an involution."""
    flip = {MAX: MIN, MIN: MAX, NONE: NONE}
    return GameModel(
        name=model.name + "-reflected" if not model.name.endswith("-reflected")
        else model.name[: -len("-reflected")],
        states=model.states,
        owner={s: flip[model.owner[s]] for s in model.states},
        cost={s: 1.0 - model.cost[s] for s in model.states},
        edges=model.edges,
        dt=model.dt,
    )


# -- model files --------------------------------------------------------------


def parse_model(text: str, *, path: str | None = None,
                name: str | None = None) -> GameModel:
    """Parse the structured model format.

    Lines: `dt <float>`, optional `name <id>`, then `[states]` rows
    `id owner cost` and `[edges]` rows `from to`.  `#` starts a comment.
    """
    dt = None
    model_name = name
    owner: dict[str, str] = {}
    cost: dict[str, float] = {}
    edges: dict[str, list[str]] = {}
    order: list[str] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("states", "edges"):
                raise ModelFormatError(f"unknown section [{section}]",
                                       path=path, line=lineno)
            continue
        parts = line.split()
        if section is None:
            key = parts[0].lower()
            if key == "dt" and len(parts) == 2:
                try:
                    dt = float(parts[1])
                except ValueError:
                    raise ModelFormatError("dt must be numeric", path=path,
                                           line=lineno)
            elif key == "name" and len(parts) == 2:
                model_name = parts[1]
            else:
                raise ModelFormatError(f"unrecognized line {raw!r}",
                                       path=path, line=lineno)
        elif section == "states":
            if len(parts) != 3:
                raise ModelFormatError("state rows are `id owner cost`",
                                       path=path, line=lineno)
            sid, who, g_raw = parts
            if who not in (MAX, MIN, NONE):
                raise ModelFormatError(f"owner must be max|min|none, got {who!r}",
                                       path=path, line=lineno)
            try:
                g = float(g_raw)
            except ValueError:
                raise ModelFormatError("cost must be numeric", path=path,
                                       line=lineno)
            if sid in owner:
                raise ModelFormatError(f"duplicate state {sid!r}", path=path,
                                       line=lineno)
            owner[sid] = who
            cost[sid] = g
            edges[sid] = []
            order.append(sid)
        else:
            if len(parts) != 2:
                raise ModelFormatError("edge rows are `from to`", path=path,
                                       line=lineno)
            src, dst = parts
            if src not in owner:
                raise ModelFormatError(f"edge from unknown state {src!r}",
                                       path=path, line=lineno)
            edges[src].append(dst)
    if dt is None:
        raise ModelFormatError("missing `dt` line", path=path)
    if not order:
        raise ModelFormatError("no states declared", path=path)
    try:
        return GameModel(name=model_name or (path or "model"),
                         states=tuple(order), owner=owner, cost=cost,
                         edges={s: tuple(v) for s, v in edges.items()}, dt=dt)
    except DomainError as exc:
        raise ModelFormatError(str(exc), path=path)


# -- bundled models ------------------------------------------------------------


def single_state() -> GameModel:
    return GameModel("single", ("s",), {"s": NONE}, {"s": 0.7},
                     {"s": ("s",)}, dt=1.0)


def cycle2() -> GameModel:
    return GameModel("cycle2", ("u", "v"), {"u": NONE, "v": NONE},
                     {"u": 0.0, "v": 1.0}, {"u": ("v",), "v": ("u",)}, dt=0.5)


def min_escape() -> GameModel:
    return GameModel("min_escape", ("s0", "s1"), {"s0": MIN, "s1": NONE},
                     {"s0": 1.0, "s1": 0.0},
                     {"s0": ("s0", "s1"), "s1": ("s1",)}, dt=1.0)


def alternating4() -> GameModel:
    return GameModel(
        "alternating4", ("a", "b", "c", "d"),
        {"a": MAX, "b": MIN, "c": MIN, "d": MAX},
        {"a": 0.2, "b": 0.8, "c": 0.6, "d": 0.4},
        {"a": ("b", "c"), "b": ("d", "a"), "c": ("a", "d"), "d": ("c", "b")},
        dt=0.5)


def front_loaded() -> GameModel:
    """Uncontrolled chain paying 1 twice, then 0 forever."""
    return GameModel("front_loaded", ("f0", "f1", "f2"),
                     {"f0": NONE, "f1": NONE, "f2": NONE},
                     {"f0": 1.0, "f1": 1.0, "f2": 0.0},
                     {"f0": ("f1",), "f1": ("f2",), "f2": ("f2",)}, dt=1.0)


BUNDLED: dict[str, Callable[[], GameModel]] = {
    "single": single_state,
    "cycle2": cycle2,
    "min_escape": min_escape,
    "alternating4": alternating4,
    "front_loaded": front_loaded,
}


def bundled_models() -> list[GameModel]:
    return [make() for make in BUNDLED.values()]


def load_model(spec: str) -> GameModel:
    """Resolve `bundled/<name>` or a model file path."""
    if spec.startswith("bundled/"):
        key = spec[len("bundled/"):]
        if key not in BUNDLED:
            raise ModelFormatError(
                f"unknown bundled model {key!r}; have {sorted(BUNDLED)}")
        return BUNDLED[key]()
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {exc}", path=spec)
    return parse_model(text, path=spec)


def random_model(seed: int, *, n_states: int = 4, max_out: int = 3,
                 horizon: int = 5, policy_cap: int = 5_000) -> GameModel:
    """Seeded random turn-based model.

    Resamples until both players' time-varying policy spaces at the given
    horizon stay under policy_cap, so brute-force enumeration is safe.
    """
    rng = random.Random(seed)
    for attempt in range(1000):
        n = rng.randint(2, n_states)
        ids = tuple(f"s{i}" for i in range(n))
        owner = {}
        cost = {}
        edges = {}
        for s in ids:
            who = rng.choice((MAX, MIN, NONE))
            owner[s] = who
            cost[s] = round(rng.random(), 3)
            deg = 1 if who == NONE else rng.randint(1, min(max_out, n))
            edges[s] = tuple(rng.sample(ids, deg))
        model = GameModel(f"random{seed}", ids, owner, cost, edges,
                          dt=rng.choice((0.5, 1.0)))
        if (policy_count(model, MAX, horizon) <= policy_cap
                and policy_count(model, MIN, horizon) <= policy_cap):
            return model
    raise CapExceededError(policy_cap + 1, policy_cap, "random model sampling")


# -- processes -----------------------------------------------------------------


class Process:
    """Trajectory through the model, piecewise constant on the dt-grid.

    Backed by an index function step -> state with a per-instance cache, so
    concatenations and policy tails stay lazy.
    """

    def __init__(self, model: GameModel, index_fn: Callable[[int], str]):
        self.model = model
        self._index_fn = index_fn
        self._cache: dict[int, str] = {}

    @classmethod
    def from_steps(cls, model: GameModel, steps: Sequence[str],
                   tail_rule: Callable[[int, str], str] | None = None) -> "Process":
        steps = tuple(steps)
        if not steps:
            raise DomainError("process needs at least a start state")
        for n in range(len(steps) - 1):
            if steps[n + 1] not in model.edges[steps[n]]:
                raise DomainError(
                    f"no edge {steps[n]!r} -> {steps[n + 1]!r} at step {n}")
        rule = tail_rule or (lambda n, s: model.edges[s][0])
        proc = cls.__new__(cls)
        proc.model = model
        proc._cache = {i: s for i, s in enumerate(steps)}
        proc._index_fn = None
        proc._tail_rule = rule
        proc._prefix_len = len(steps)
        return proc

    @classmethod
    def from_rule(cls, model: GameModel, start: str,
                  rule: Callable[[int, str], str]) -> "Process":
        return cls.from_steps(model, (start,), tail_rule=rule)

    def state_at(self, n: int) -> str:
        if n < 0:
            raise DomainError("step index must be nonnegative")
        if n in self._cache:
            return self._cache[n]
        if self._index_fn is not None:
            s = self._index_fn(n)
            self._cache[n] = s
            return s
        # Extend the cached prefix with the tail rule.
        last = max(self._cache)
        s = self._cache[last]
        for m in range(last, n):
            nxt = self._tail_rule(m, s)
            if nxt not in self.model.edges[s]:
                raise DomainError(f"tail rule leaves the graph at step {m}")
            s = nxt
            self._cache[m + 1] = s
        return s

    def sample(self, t: float) -> str:
        if t < 0:
            raise DomainError("time must be nonnegative")
        return self.state_at(int(math.floor(t / self.model.dt)))

    def prefix(self, horizon: int) -> tuple[str, ...]:
        return tuple(self.state_at(n) for n in range(horizon + 1))


def grid_steps(tau: float, dt: float) -> int:
    """tau as an exact step count; rejects off-grid times."""
    k = tau / dt
    k_round = round(k)
    if abs(k - k_round) > 1e-9 * max(1.0, abs(k)):
        raise DomainError(f"time {tau} is not a multiple of dt={dt}")
    if k_round < 0:
        raise DomainError("time must be nonnegative")
    return int(k_round)


def concatenate_process(z1: Process, z2: Process, tau: float) -> Process:
    """Follow z1 before tau and the time-shifted z2 from tau on."""
    if z1.model is not z2.model and z1.model != z2.model:
        raise ConcatenationError("processes live on different models")
    k = grid_steps(tau, z1.model.dt)
    if z1.state_at(k) != z2.state_at(0):
        raise ConcatenationError(
            f"endpoint mismatch at tau={tau}: {z1.state_at(k)!r} vs "
            f"{z2.state_at(0)!r}")
    return Process(z1.model,
                   lambda n: z1.state_at(n) if n < k else z2.state_at(n - k))


# -- feedback policies ----------------------------------------------------------


@dataclass(frozen=True)
class FeedbackPolicy:
    """Per-step successor choices at the owned states.

    per_step[n] maps each owned state with a real choice to its successor at
    step n; the final map repeats stationarily beyond the listed horizon.
    States with a single edge never appear (the move is forced).
    """

    owner: str
    per_step: tuple[Mapping[str, str], ...]

    def act(self, model: GameModel, step: int, state: str) -> str:
        succ = model.edges[state]
        if len(succ) == 1:
            return succ[0]
        idx = min(step, len(self.per_step) - 1) if self.per_step else 0
        if not self.per_step:
            return succ[0]
        return self.per_step[idx].get(state, succ[0])


def _choice_states(model: GameModel, owner: str) -> list[str]:
    return [s for s in model.states
            if model.owner[s] == owner and len(model.edges[s]) > 1]


def policy_count(model: GameModel, owner: str, horizon: int) -> int:
    count = 1
    for s in _choice_states(model, owner):
        count *= len(model.edges[s]) ** horizon
    return count


def enumerate_policies(model: GameModel, owner: str, horizon: int, *,
                       cap: int = ENUMERATION_CAP) -> list[FeedbackPolicy]:
    """All time-varying policies for the owner up to the horizon."""
    total = policy_count(model, owner, horizon)
    if total > cap:
        raise CapExceededError(total, cap, f"{owner} policy enumeration")
    states = _choice_states(model, owner)
    if not states or horizon <= 0:
        return [FeedbackPolicy(owner, ())]
    per_state_step = [model.edges[s] for s in states for _ in range(horizon)]
    out = []
    for combo in itertools.product(*per_state_step):
        maps: list[dict[str, str]] = [dict() for _ in range(horizon)]
        i = 0
        for s in states:
            for n in range(horizon):
                maps[n][s] = combo[i]
                i += 1
        out.append(FeedbackPolicy(owner, tuple(maps)))
    return out


def induced_process(model: GameModel, start: str, max_policy: FeedbackPolicy,
                    min_policy: FeedbackPolicy) -> Process:
    """The unique trajectory when both players play feedback policies."""

    def rule(n: int, s: str) -> str:
        who = model.owner[s]
        if who == MAX:
            return max_policy.act(model, n, s)
        if who == MIN:
            return min_policy.act(model, n, s)
        return model.edges[s][0]

    return Process.from_rule(model, start, rule)


# -- strategy sets ---------------------------------------------------------------


class StrategySet:
    """A set of processes, described by a prefix-consistency predicate.

    consistent(seq) answers whether some member process starts with the path
    seq (states at steps 0, 1, ...).  For policy-induced terms every
    consistent prefix extends to a member, so the predicate is exact.
    """

    owner: str = MAX
    label: str = "set"

    def consistent(self, seq: Sequence[str]) -> bool:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label}>"


class PolicySet(StrategySet):
    """Processes consistent with one feedback policy at the owned states."""

    def __init__(self, model: GameModel, policy: FeedbackPolicy,
                 label: str | None = None):
        self.model = model
        self.policy = policy
        self.owner = policy.owner
        self.label = label or f"policy[{policy.owner}]"

    def consistent(self, seq: Sequence[str]) -> bool:
        model = self.model
        for n in range(len(seq) - 1):
            s, nxt = seq[n], seq[n + 1]
            if nxt not in model.edges[s]:
                return False
            if model.owner[s] == self.owner:
                if nxt != self.policy.act(model, n, s):
                    return False
        return True


class DispatchSet(StrategySet):
    """Start-state dispatch over strategy sets of one owner.

    Realizes the choice-by-initial-state needed for the separation axiom:
    membership of a path is delegated to the set assigned to its start.
    """

    def __init__(self, by_start: Mapping[str, StrategySet],
                 label: str | None = None):
        owners = {a.owner for a in by_start.values()}
        if len(owners) != 1:
            raise DomainError("dispatch needs a single owning player")
        self.by_start = dict(by_start)
        self.owner = owners.pop()
        self.label = label or f"dispatch[{self.owner}]"

    def consistent(self, seq: Sequence[str]) -> bool:
        if not seq:
            return True
        target = self.by_start.get(seq[0])
        if target is None:
            return False
        return target.consistent(seq)


class ConcatSet(StrategySet):
    """first before the switch step, second (time-reset) from it on."""

    def __init__(self, first: StrategySet, switch_step: int,
                 second: StrategySet, label: str | None = None):
        if first.owner != second.owner:
            raise DomainError("concatenation needs a single owning player")
        if switch_step < 0:
            raise DomainError("switch step must be nonnegative")
        self.first = first
        self.second = second
        self.switch_step = switch_step
        self.owner = first.owner
        self.label = label or f"({first.label} |{switch_step}| {second.label})"

    def consistent(self, seq: Sequence[str]) -> bool:
        k = self.switch_step
        if len(seq) - 1 <= k:
            return self.first.consistent(seq)
        return (self.first.consistent(seq[: k + 1])
                and self.second.consistent(seq[k:]))


class ExplicitSet(StrategySet):
    """Finite list of fixed paths; used to build axiom violators."""

    def __init__(self, owner: str, paths: Iterable[Sequence[str]],
                 label: str = "explicit"):
        self.owner = owner
        self.paths = {tuple(p) for p in paths}
        self.label = label
        if not self.paths:
            raise DomainError("explicit set needs at least one path")

    def consistent(self, seq: Sequence[str]) -> bool:
        seq = tuple(seq)
        n = len(seq)
        return any(p[:n] == seq for p in self.paths if len(p) >= n)


def concatenate_strategy(first: StrategySet, second: StrategySet,
                         tau: float, dt: float) -> ConcatSet:
    return ConcatSet(first, grid_steps(tau, dt), second)


@dataclass(frozen=True)
class StrategyFamily:
    """A family of strategy sets for one player.

    closed=True marks families presented by generators of the term algebra
    (policies plus dispatch and concatenation), where constructed terms are
    members by definition; closed=False families are exactly their listed
    members, which is how violators are expressed.
    """

    owner: str
    members: tuple[StrategySet, ...]
    closed: bool

    def __post_init__(self):
        if not self.members:
            raise DomainError("family needs at least one member")
        for m in self.members:
            if m.owner != self.owner:
                raise DomainError("family members must share the owner")


def policy_family(model: GameModel, owner: str, horizon: int, *,
                  cap: int = ENUMERATION_CAP) -> StrategyFamily:
    policies = enumerate_policies(model, owner, horizon, cap=cap)
    return StrategyFamily(owner,
                          tuple(PolicySet(model, p) for p in policies),
                          closed=True)


# -- path enumeration -------------------------------------------------------------


def all_paths(model: GameModel, start: str, horizon: int) -> list[tuple[str, ...]]:
    paths = [(start,)]
    for _ in range(horizon):
        paths = [p + (t,) for p in paths for t in model.edges[p[-1]]]
    return paths


def member_paths(sset: StrategySet, model: GameModel, start: str,
                 horizon: int) -> list[tuple[str, ...]]:
    """Paths of the given length in the set, grown with prefix pruning."""
    if not sset.consistent((start,)):
        return []
    paths = [(start,)]
    for _ in range(horizon):
        grown = []
        for p in paths:
            for t in model.edges[p[-1]]:
                q = p + (t,)
                if sset.consistent(q):
                    grown.append(q)
        paths = grown
    return paths


def _enumeration_guard(model: GameModel, horizon: int, cap: int) -> int:
    size = model.n_states * model.max_branching() ** horizon
    if size > cap:
        raise CapExceededError(size, cap, "path enumeration")
    return size


# -- axiom checks -----------------------------------------------------------------


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    witness: Any = None
    detail: str = ""
    counts: dict = field(default_factory=dict)


@dataclass
class AxiomReport:
    model: str
    horizon: int
    checks: dict[str, AxiomCheck]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def _paths_by_start(sset: StrategySet, model: GameModel,
                    horizon: int) -> dict[str, frozenset]:
    return {w: frozenset(member_paths(sset, model, w, horizon))
            for w in model.states}


def _check_playable(family: StrategyFamily, model: GameModel,
                    horizon: int) -> AxiomCheck:
    for idx, sset in enumerate(family.members):
        for w in model.states:
            if not member_paths(sset, model, w, horizon):
                return AxiomCheck(
                    "p", False, witness=(sset.label, w),
                    detail=f"member #{idx} ({sset.label}) has no play from {w!r}")
    return AxiomCheck("p", True,
                      detail=f"{len(family.members)} members playable from "
                             f"all {model.n_states} states",
                      counts={"members": len(family.members)})


def _sample_maps(family: StrategyFamily, states: tuple[str, ...],
                 rng: random.Random, budget: int) -> list[dict[str, StrategySet]]:
    members = family.members
    total = len(members) ** len(states)
    if total <= budget:
        out = []
        for combo in itertools.product(members, repeat=len(states)):
            out.append(dict(zip(states, combo)))
        return out
    maps: list[dict[str, StrategySet]] = []
    for m in members[: min(len(members), max(2, budget // 8))]:
        maps.append({w: m for w in states})
    while len(maps) < budget:
        maps.append({w: rng.choice(members) for w in states})
    return maps


def _check_separation(family: StrategyFamily, model: GameModel, horizon: int,
                      rng: random.Random, budget: int) -> AxiomCheck:
    """Axiom: for each start-state assignment of members there is one member
    matching each assigned set on plays from its own start."""
    maps = _sample_maps(family, model.states, rng, budget)
    member_cache = [_paths_by_start(m, model, horizon) for m in family.members]
    index_of = {id(m): i for i, m in enumerate(family.members)}
    for assignment in maps:
        want = {w: member_cache[index_of[id(assignment[w])]][w]
                for w in model.states}
        if family.closed:
            stitched = DispatchSet(assignment)
            got = _paths_by_start(stitched, model, horizon)
            if any(got[w] != want[w] for w in model.states):
                bad = next(w for w in model.states if got[w] != want[w])
                return AxiomCheck(
                    "omega", False, witness=(assignment[bad].label, bad),
                    detail="dispatch term missed the assigned plays "
                           f"from {bad!r}")
        else:
            matched = False
            for cache in member_cache:
                if all(cache[w] == want[w] for w in model.states):
                    matched = True
                    break
            if not matched:
                labels = {w: assignment[w].label for w in model.states}
                return AxiomCheck(
                    "omega", False, witness=labels,
                    detail="no listed member realizes this start-state "
                           "assignment")
    return AxiomCheck("omega", True,
                      detail=f"{len(maps)} start-state assignments realized",
                      counts={"assignments": len(maps)})


def _glue_paths(first: StrategySet, second: StrategySet, model: GameModel,
                start: str, k: int, horizon: int) -> frozenset:
    """Brute-force concatenation: heads from first, tails from second."""
    out = set()
    for head in member_paths(first, model, start, min(k, horizon)):
        if k >= horizon:
            # Tail beyond the inspected window; any member extension works,
            # and first's heads are already full length.
            if len(head) == horizon + 1:
                out.add(head)
            continue
        for tail in member_paths(second, model, head[-1], horizon - k):
            out.add(head[:-1] + tail)
    return frozenset(out)


def _check_concat(family: StrategyFamily, model: GameModel, horizon: int,
                  rng: random.Random, budget: int) -> AxiomCheck:
    members = family.members
    pairs = list(itertools.product(range(len(members)), repeat=2))
    if len(pairs) > budget:
        pairs = [(rng.randrange(len(members)), rng.randrange(len(members)))
                 for _ in range(budget)]
    taus = list(range(0, min(horizon, 4) + 1))
    checked = 0
    for i, j in pairs:
        first, second = members[i], members[j]
        for k in taus:
            glued = {w: _glue_paths(first, second, model, w, k, horizon)
                     for w in model.states}
            term = ConcatSet(first, k, second)
            got = _paths_by_start(term, model, horizon)
            if got != glued:
                bad = next(w for w in model.states if got[w] != glued[w])
                return AxiomCheck(
                    "concat", False,
                    witness=(first.label, second.label, k, bad),
                    detail="concatenation term disagrees with the glued set "
                           f"from {bad!r} at switch step {k}")
            if not family.closed:
                # Family is just the list: the glued set must be a member.
                if not any(_paths_by_start(m, model, horizon) == glued
                           for m in members):
                    return AxiomCheck(
                        "concat", False,
                        witness=(first.label, second.label, k),
                        detail="glued set is not a listed member")
            checked += 1
    return AxiomCheck("concat", True,
                      detail=f"{checked} (pair, switch) cells closed",
                      counts={"cells": checked})


def _check_intersection(maxfam: StrategyFamily, minfam: StrategyFamily,
                        model: GameModel, horizon: int, rng: random.Random,
                        cap: int) -> AxiomCheck:
    """Each (max member, min member, start) admits exactly one joint play."""
    n_pairs = len(maxfam.members) * len(minfam.members)
    full = n_pairs * model.n_states <= cap
    if full:
        pairs = list(itertools.product(maxfam.members, minfam.members))
    else:
        pairs = [(rng.choice(maxfam.members), rng.choice(minfam.members))
                 for _ in range(max(1, cap // max(1, model.n_states)))]
    checked = 0
    for A, B in pairs:
        for w in model.states:
            both = [p for p in member_paths(A, model, w, horizon)
                    if B.consistent(p)]
            if len(both) != 1:
                return AxiomCheck(
                    "s", False, witness=(A.label, B.label, w),
                    detail=f"{len(both)} joint plays from {w!r}, expected 1",
                    counts={"joint": len(both)})
            checked += 1
    return AxiomCheck("s", True,
                      detail=f"{checked} (pair, start) cells each admit one "
                             "joint play",
                      counts={"cells": checked, "exhaustive": full})


def check_axioms(model: GameModel, maxfam: StrategyFamily,
                 minfam: StrategyFamily, horizon: int, *,
                 cap: int = ENUMERATION_CAP, seed: int = 0,
                 omega_budget: int = 96, concat_budget: int = 48) -> AxiomReport:
    """Exhaustive-at-small-scale checks of the four strategy-family axioms.

    Budgets bound the sampled assignment maps and concatenation pairs when
    full enumeration would blow past the cap; sampling is seeded and the
    report records how much was covered.
    """
    _enumeration_guard(model, horizon, cap)
    if maxfam.owner != MAX or minfam.owner != MIN:
        raise DomainError("families must be (max, min) in that order")
    rng = random.Random(seed)
    checks = {}
    p_max = _check_playable(maxfam, model, horizon)
    p_min = _check_playable(minfam, model, horizon)
    checks["p"] = p_max if not p_max.passed else p_min
    rng2 = random.Random(seed + 1)
    o_max = _check_separation(maxfam, model, horizon, rng, omega_budget)
    o_min = _check_separation(minfam, model, horizon, rng2, omega_budget)
    checks["omega"] = o_max if not o_max.passed else o_min
    c_max = _check_concat(maxfam, model, horizon, rng, concat_budget)
    c_min = _check_concat(minfam, model, horizon, rng2, concat_budget)
    checks["concat"] = c_max if not c_max.passed else c_min
    checks["s"] = _check_intersection(maxfam, minfam, model, horizon, rng, cap)
    return AxiomReport(model.name, horizon, checks)


# -- violators (for tests and demos) ------------------------------------------------


def make_playability_violator(model: GameModel, start: str,
                              horizon: int) -> StrategyFamily:
    """A family whose sole member fixes one full path from one start only."""
    path = all_paths(model, start, horizon)[0]
    owner = MAX
    return StrategyFamily(owner,
                          (ExplicitSet(owner, [path], label=f"pin[{start}]"),),
                          closed=False)


def make_omega_violator(model: GameModel, owner: str,
                        horizon: int) -> StrategyFamily:
    """Two plain policy sets with no dispatch closure.

    On graphs where two starts reach the same (step, state) cell, mixed
    start-state assignments cannot be realized by either member.
    """
    policies = enumerate_policies(model, owner, horizon)
    if len(policies) < 2:
        raise DomainError("model gives the owner fewer than two policies")
    return StrategyFamily(owner,
                          (PolicySet(model, policies[0], label="pol0"),
                           PolicySet(model, policies[-1], label="pol-last")),
                          closed=False)


def make_concat_violator(model: GameModel, owner: str) -> StrategyFamily:
    """All stationary policy sets, listed without concatenation closure."""
    stationary = enumerate_policies(model, owner, 1)
    if len(stationary) < 2:
        raise DomainError("model gives the owner fewer than two stationary "
                          "policies")
    return StrategyFamily(owner,
                          tuple(PolicySet(model, p, label=f"stat{i}")
                                for i, p in enumerate(stationary)),
                          closed=False)


def make_clash_violator(model: GameModel, start: str,
                        horizon: int) -> StrategyFamily:
    """A MAX family whose member also pins the MIN player's moves."""
    path = all_paths(model, start, horizon)[-1]
    return StrategyFamily(MAX,
                          (ExplicitSet(MAX, [path], label="clash"),),
                          closed=False)


# -- payoffs ------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffEnclosure:
    lo: float
    hi: float
    steps: int
    covered_mass: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


def truncation_steps(d: Density, dt: float, horizon_mass: float) -> int:
    """Smallest step count whose covered mass reaches the requested share
    of the density's total."""
    if horizon_mass <= 0:
        raise DomainError("horizon_mass must be positive")
    target = horizon_mass * d.total_mass
    if d.cutoff is not None:
        hi = max(1, int(math.ceil(d.cutoff / dt)))
        if d.mass(hi * dt) < target:
            raise HorizonOverflowError(
                f"mass {d.mass(hi * dt):.12g} at the support end never "
                f"reaches target {target:.12g}")
    else:
        hi = 1
        doublings = 0
        while d.mass(hi * dt) < target:
            hi *= 2
            doublings += 1
            if doublings > 200:
                raise HorizonOverflowError(
                    f"mass target {target:.12g} unreachable for {d.label}")
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if d.mass(mid * dt) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def payoff(d: Density, z: Process, horizon_mass: float) -> PayoffEnclosure:
    """Guaranteed bracket of the density-weighted running cost of a process.

    lo sums exact step weights against the cost along the path; hi adds the
    entire uncovered mass (cost is at most 1), so lo <= true payoff <= hi.
    """
    model = z.model
    n = truncation_steps(d, model.dt, horizon_mass)
    w = d.step_weights(model.dt, n)
    g = np.fromiter((model.cost[z.state_at(i)] for i in range(n)), dtype=float,
                    count=n)
    lo = float(np.dot(w, g))
    covered = d.mass(n * model.dt)
    hi = lo + (d.total_mass - covered)
    return PayoffEnclosure(lo=lo, hi=hi, steps=n, covered_mass=covered)
