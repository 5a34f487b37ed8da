"""Execution layer: black-box step simulator, particle beliefs, histories.

The world is deterministic and sensors are reliable; all uncertainty lives in
the initial belief. Search actions are the only informative ones: searching a
cell perceives and reveals every entity located there. Every other action
observes a constant `ok`.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from random import Random
from typing import Iterable, Sequence

from .planner import Plan
from .rewards import RewardScheme, portal_scheme, reward_of
from .strips import (
    Atom,
    GroundAction,
    InapplicableActionError,
    ScenarioSpec,
    WorldState,
    apply,
    atom,
    initial_world,
    location_predicate,
)


class EmptyBeliefError(Exception):
    """Filtering removed every particle; the caller must recover."""


class BeliefRecoveryError(Exception):
    """No world consistent with the executed history exists in the spec."""


@dataclass(frozen=True)
class Observation:
    kind: str  # "ok" | "percept"
    seen: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind == "ok":
            return "ok"
        return "percept{" + ",".join(self.seen) + "}"


OK = Observation("ok")


def percept(entities: Iterable[str]) -> Observation:
    return Observation("percept", tuple(sorted(entities)))


@dataclass(frozen=True)
class StepOutcome:
    state: WorldState
    observation: Observation
    reward: float


@dataclass(frozen=True)
class History:
    steps: tuple[tuple[GroundAction, Observation], ...] = ()

    def extended(self, action: GroundAction, obs: Observation) -> "History":
        return History(self.steps + ((action, obs),))

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Belief:
    particles: tuple[WorldState, ...]

    def __len__(self) -> int:
        return len(self.particles)


def execution_applicable(state: WorldState, action: GroundAction) -> bool:
    """Runtime applicability: search needs only the robot at its cell."""
    if action.name == "search":
        return atom("robot-at", action.params[1]) in state.atoms
    return action.pre <= state.atoms


def entities_at(state: WorldState, cell: str) -> tuple[str, ...]:
    found = [a.args[0] for a in state.atoms
             if a.predicate in ("item-at", "person-at") and a.args[1] == cell]
    return tuple(sorted(found))


def simulate_step(state: WorldState, action: GroundAction,
                  scheme: RewardScheme | None = None) -> StepOutcome:
    """Deterministic black-box simulator: (state, action) -> (state', obs, reward).

    Searching cell c reveals all entities located at c and perceives exactly
    that set (possibly empty). Other actions follow their declared effects
    and observe `ok`. Inapplicability is an algorithm bug, so it raises.
    """
    if scheme is None:
        scheme = portal_scheme()
    if action.name == "search":
        cell = action.params[1]
        if atom("robot-at", cell) not in state.atoms:
            raise InapplicableActionError(f"{action} requires robot-at {cell}")
        seen = entities_at(state, cell)
        atoms = set(state.atoms)
        for e in seen:
            atoms.discard(atom("hidden", e))
            atoms.add(atom("revealed", e))
        nxt = WorldState(frozenset(atoms))
        obs = Observation("percept", seen)
    else:
        nxt = apply(state, action)
        obs = OK
    return StepOutcome(nxt, obs, reward_of(state, action, nxt, scheme))


def legal_actions(state: WorldState, actions: Sequence[GroundAction]) -> list[GroundAction]:
    """Actions executable from state under the runtime model, canonical order."""
    return [a for a in actions if execution_applicable(state, a)]


# ---------------------------------------------------------------------------
# Initial beliefs
# ---------------------------------------------------------------------------

def sample_initial_particles(spec: ScenarioSpec, count: int, rng: Random) -> Belief:
    """Draw `count` particles, sampling each uncertain entity independently."""
    if count < 1:
        raise ValueError("particle count must be >= 1")
    particles = []
    for _ in range(count):
        assignment = {}
        for u in spec.uncertain:
            x = rng.random()
            acc = 0.0
            chosen = u.candidates[-1][0]
            for cell, prob in u.candidates:
                acc += prob
                if x < acc:
                    chosen = cell
                    break
            assignment[u.name] = chosen
        particles.append(initial_world(spec, assignment))
    return Belief(tuple(particles))


def enumerate_worlds(spec: ScenarioSpec) -> list[tuple[WorldState, Fraction]]:
    """All distinct initial worlds with exact probabilities, in a fixed order."""
    names = [u.name for u in spec.uncertain]
    options = [u.candidates for u in spec.uncertain]
    out = []
    for combo in product(*options):
        assignment = {n: cell for n, (cell, _p) in zip(names, combo)}
        prob = Fraction(1)
        for _cell, p in combo:
            prob *= Fraction(p)
        out.append((initial_world(spec, assignment), prob))
    return out


def enumerate_particles(spec: ScenarioSpec, count: int) -> Belief:
    """Deterministic belief: world multiplicities proportional to probability.

    Exact when every probability times `count` is integral; otherwise largest
    remainder apportionment keeps the total at `count`.
    """
    worlds = enumerate_worlds(spec)
    if count < len([w for w, p in worlds if p > 0]):
        raise ValueError(f"count {count} below number of possible worlds {len(worlds)}")
    quotas = [(p * count) for _w, p in worlds]
    base = [int(q) for q in quotas]
    short = count - sum(base)
    order = sorted(range(len(worlds)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    particles: list[WorldState] = []
    for (w, _p), m in zip(worlds, base):
        particles.extend([w] * m)
    return Belief(tuple(particles))


# ---------------------------------------------------------------------------
# Belief updates
# ---------------------------------------------------------------------------

def filter_belief(belief: Belief, action: GroundAction, obs: Observation) -> Belief:
    """Advance every particle and keep those whose observation matches."""
    survivors = []
    for s in belief.particles:
        out = simulate_step(s, action)
        if out.observation == obs:
            survivors.append(out.state)
    if not survivors:
        raise EmptyBeliefError(f"no particle consistent with {action} -> {obs}")
    return Belief(tuple(survivors))


def most_probable_particle(belief: Belief) -> WorldState:
    """Modal state of the multiset; ties break on canonical state order."""
    if not belief.particles:
        raise EmptyBeliefError("belief is empty")
    counts = Counter(belief.particles)
    best_count = max(counts.values())
    modes = [s for s, c in counts.items() if c == best_count]
    return min(modes, key=lambda s: s.key())


def particles_by_probability(belief: Belief) -> list[WorldState]:
    """Distinct particles ordered by multiplicity (desc), then canonically."""
    counts = Counter(belief.particles)
    return sorted(counts, key=lambda s: (-counts[s], s.key()))


def rebuild_belief(spec: ScenarioSpec, history: History, count: int) -> Belief:
    """Recover a depleted belief from scratch.

    Enumerates every spec-consistent initial world, replays the executed
    history, and keeps the worlds whose simulated observations match the real
    ones. Multiplicities follow renormalized prior probability.
    """
    survivors: list[tuple[WorldState, Fraction]] = []
    for world, prob in enumerate_worlds(spec):
        s = world
        ok = True
        for action, obs in history.steps:
            if not execution_applicable(s, action):
                ok = False
                break
            out = simulate_step(s, action)
            if out.observation != obs:
                ok = False
                break
            s = out.state
        if ok:
            survivors.append((s, prob))
    if not survivors:
        raise BeliefRecoveryError("no spec-consistent world matches the executed history")
    total = sum(p for _s, p in survivors)
    quotas = [p / total * count for _s, p in survivors]
    base = [int(q) for q in quotas]
    short = count - sum(base)
    order = sorted(range(len(survivors)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    particles: list[WorldState] = []
    for (s, _p), m in zip(survivors, base):
        particles.extend([s] * m)
    return Belief(tuple(particles))


def refilter_or_rebuild(previous_root_belief: Belief, action: GroundAction,
                        obs: Observation, spec: ScenarioSpec, history: History,
                        count: int) -> Belief:
    """Standard recovery path after a real observation empties the belief."""
    try:
        return filter_belief(previous_root_belief, action, obs)
    except EmptyBeliefError:
        return rebuild_belief(spec, history, count)


# ---------------------------------------------------------------------------
# Expected histories and traces
# ---------------------------------------------------------------------------

def expected_history(state: WorldState, plan: Plan,
                     scheme: RewardScheme | None = None) -> History:
    """Pair each plan action with the observation the simulator produces
    when `state` is taken to be the true world."""
    steps = []
    s = state
    for action in plan.actions:
        out = simulate_step(s, action, scheme)
        steps.append((action, out.observation))
        s = out.state
    return History(tuple(steps))


def trace_line(index: int, action: GroundAction, obs: Observation) -> str:
    """One executed step: index, action, observation, cumulative steps."""
    return f"{index}\t{action}\t{obs}\t{index + 1}"
