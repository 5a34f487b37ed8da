"""Baseline planners: determinize-and-replan, and Monte Carlo belief search.

The replanner determinizes the belief to its most probable particle, follows
the classical plan while real observations match the expected ones, and
replans from the current history at the first mismatch. The Monte Carlo
baseline is a standard particle-belief UCB tree search with uniform-random
rollouts cut off at the discount horizon.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import inf, log, sqrt
from random import Random
from typing import Callable, Hashable, Sequence

from .planner import Plan, PlanCache, UnsolvableError
from .pomdp import (
    Belief,
    EmptyBeliefError,
    History,
    Observation,
    expected_history,
    filter_belief,
    legal_actions,
    most_probable_particle,
    particles_by_probability,
    rebuild_belief,
    simulate_step,
)
from .rewards import RewardScheme, pomcp_scheme
from .strips import GroundAction, ScenarioSpec, WorldState, goal_satisfied


# ---------------------------------------------------------------------------
# Determinize-and-replan
# ---------------------------------------------------------------------------

class FFReplanAgent:
    """Plan once for the most probable world, replan on observation mismatch.

    Planning is not budget limited. `events` records ("plan", step) and
    ("mismatch", step) pairs so tests can audit that replanning happens
    exactly at the first real-vs-expected divergence.
    """

    def __init__(self, spec: ScenarioSpec, actions: Sequence[GroundAction],
                 belief: Belief, plan_cache: PlanCache | None = None):
        self.spec = spec
        self.actions = tuple(actions)
        self.goal = spec.goal
        self.plans = plan_cache or PlanCache(self.goal, self.actions)
        self.belief = belief
        self.history = History()
        self.current_plan: Plan | None = None
        self.expected: History | None = None
        self.cursor = 0
        self.need_replan = True
        self.plans_generated = 0
        self.events: list[tuple[str, int]] = []
        self._steps_done = 0
        self._prev_belief: Belief | None = None

    def startup(self) -> None:
        pass

    def next_action(self) -> GroundAction:
        if (self.need_replan or self.current_plan is None
                or self.cursor >= len(self.current_plan.actions)):
            self._replan()
        assert self.current_plan is not None
        return self.current_plan.actions[self.cursor]

    def observe(self, action: GroundAction, obs: Observation) -> None:
        assert self.expected is not None
        expected_obs = self.expected.steps[self.cursor][1]
        self.history = self.history.extended(action, obs)
        self._steps_done += 1
        self._prev_belief, prev = self.belief, self._prev_belief
        try:
            self.belief = filter_belief(self.belief, action, obs)
        except EmptyBeliefError:
            self.belief = self._recover(prev, action, obs)
        if obs != expected_obs:
            self.events.append(("mismatch", self._steps_done - 1))
            self.need_replan = True
        else:
            self.cursor += 1

    def _replan(self) -> None:
        for state in particles_by_probability(self.belief):
            try:
                p = self.plans.get(state)
            except UnsolvableError:
                continue
            self.current_plan = p
            self.expected = expected_history(state, p)
            self.cursor = 0
            self.need_replan = False
            self.plans_generated += 1
            self.events.append(("plan", self._steps_done))
            if not p.actions:
                raise RuntimeError("determinization already satisfies the goal mid-episode")
            return
        raise UnsolvableError("every distinct particle is unsolvable")

    def _recover(self, prev: Belief | None, action: GroundAction, obs: Observation) -> Belief:
        if prev is not None and len(self.history.steps) >= 2:
            prev_action, prev_obs = self.history.steps[-2]
            try:
                b = filter_belief(prev, prev_action, prev_obs)
                return filter_belief(b, action, obs)
            except EmptyBeliefError:
                pass
        return rebuild_belief(self.spec, self.history, len(self.belief.particles))


# ---------------------------------------------------------------------------
# Monte Carlo belief search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PomcpConfig:
    gamma: float = 0.97
    epsilon: float = 0.01
    exploration: float = 0.1
    startup_multiplier: int = 5

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


def rollout_cutoff_depth(gamma: float, epsilon: float) -> int:
    """Smallest depth d with gamma**d < epsilon (simulation horizon)."""
    if gamma == 0.0:
        return 1
    d = 0
    g = 1.0
    while g >= epsilon:
        g *= gamma
        d += 1
    return d


class _Arm:
    __slots__ = ("N", "V", "children")

    def __init__(self):
        self.N = 0
        self.V = 0.0
        self.children: dict[Hashable, "_BeliefNode"] = {}


class _BeliefNode:
    __slots__ = ("N", "arms", "belief", "expanded")

    def __init__(self):
        self.N = 0
        self.arms: dict[Hashable, _Arm] = {}
        self.belief: list = []
        self.expanded = False


class PomcpCore:
    """Domain-agnostic search core over a black-box simulator.

    sim(s, a) -> (s', o, r); legal(s) -> ordered action list; terminal(s).
    Actions and observations must be hashable; ties break on the order legal()
    returns and on first insertion, keeping runs reproducible.
    """

    def __init__(self, sim: Callable, legal: Callable, terminal: Callable,
                 config: PomcpConfig, rng: Random):
        self.sim = sim
        self.legal = legal
        self.terminal = terminal
        self.config = config
        self.rng = rng
        self.cutoff = rollout_cutoff_depth(config.gamma, config.epsilon)
        self.root = _BeliefNode()
        self.iterations = 0

    def run(self, particles: Sequence, iterations: int) -> None:
        n = len(particles)
        for _ in range(iterations):
            s = particles[self.rng.randrange(n)]
            self._simulate(s, self.root, 0, is_root=True)
            self.iterations += 1

    def best_action(self):
        best = None
        best_v = -inf
        for a, arm in self.root.arms.items():
            if best is None or arm.V > best_v:
                best, best_v = a, arm.V
        return best

    def advance(self, action, obs) -> None:
        arm = self.root.arms.get(action)
        child = arm.children.get(obs) if arm is not None else None
        self.root = child if child is not None else _BeliefNode()

    def _simulate(self, s, node: _BeliefNode, depth: int, is_root: bool = False) -> float:
        if depth >= self.cutoff or self.terminal(s):
            return 0.0
        if not node.expanded:
            node.expanded = True
            for a in self.legal(s):
                node.arms[a] = _Arm()
            return self._rollout(s, depth)
        if not node.arms:
            return 0.0
        arm_key = self._ucb_pick(node)
        arm = node.arms[arm_key]
        s2, o, r = self.sim(s, arm_key)
        child = arm.children.get(o)
        if child is None:
            child = _BeliefNode()
            arm.children[o] = child
        ret = r + self.config.gamma * self._simulate(s2, child, depth + 1)
        if not is_root:
            node.belief.append(s)
        node.N += 1
        arm.N += 1
        arm.V += (ret - arm.V) / arm.N
        return ret

    def _ucb_pick(self, node: _BeliefNode):
        c = self.config.exploration
        log_n = log(node.N) if node.N > 0 else 0.0
        best = None
        best_score = -inf
        for a, arm in node.arms.items():
            score = inf if arm.N == 0 else arm.V + c * sqrt(log_n / arm.N)
            if best is None or score > best_score:
                best, best_score = a, score
        return best

    def _rollout(self, s, depth: int) -> float:
        total = 0.0
        g = 1.0
        while depth < self.cutoff and not self.terminal(s):
            acts = self.legal(s)
            if not acts:
                break
            a = acts[self.rng.randrange(len(acts))]
            s, _o, r = self.sim(s, a)
            total += g * r
            g *= self.config.gamma
            depth += 1
        return total


class PomcpAgent:
    """Scenario-level wrapper: goal-terminated simulations with the shaped
    reward scheme, memoized legal sets and transitions."""

    _MEMO_CAP = 500_000

    def __init__(self, spec: ScenarioSpec, actions: Sequence[GroundAction],
                 belief: Belief, rng: Random, config: PomcpConfig | None = None,
                 scheme: RewardScheme | None = None,
                 budget_iterations: int | None = None,
                 budget_seconds: float | None = None):
        self.spec = spec
        self.actions = tuple(actions)
        self.goal = spec.goal
        self.config = config or PomcpConfig()
        self.scheme = scheme or pomcp_scheme(spec)
        self.belief = belief
        self.history = History()
        self.budget_iterations = budget_iterations
        self.budget_seconds = budget_seconds
        if (budget_iterations is None) == (budget_seconds is None):
            raise ValueError("exactly one of budget_iterations/budget_seconds required")
        self._legal_memo: dict[WorldState, list[GroundAction]] = {}
        self._step_memo: dict[tuple[WorldState, GroundAction], tuple[WorldState, Observation, float]] = {}
        self._prev_belief: Belief | None = None
        self.core = PomcpCore(self._sim, self._legal, self._terminal, self.config, rng)
        self.plans_generated = 0

    def _legal(self, s: WorldState) -> list[GroundAction]:
        acts = self._legal_memo.get(s)
        if acts is None:
            acts = legal_actions(s, self.actions)
            if len(self._legal_memo) < self._MEMO_CAP:
                self._legal_memo[s] = acts
        return acts

    def _sim(self, s: WorldState, a: GroundAction):
        key = (s, a)
        hit = self._step_memo.get(key)
        if hit is None:
            out = simulate_step(s, a, self.scheme)
            hit = (out.state, out.observation, out.reward)
            if len(self._step_memo) < self._MEMO_CAP:
                self._step_memo[key] = hit
        return hit

    def _terminal(self, s: WorldState) -> bool:
        return goal_satisfied(s, self.goal)

    def startup(self) -> None:
        self._run(self.config.startup_multiplier)

    def next_action(self) -> GroundAction:
        self._run(1)
        best = self.core.best_action()
        if best is None:
            state = most_probable_particle(self.belief)
            acts = self._legal(state)
            if not acts:
                raise RuntimeError("no legal action available")
            return acts[0]
        return best

    def _run(self, multiplier: int) -> None:
        if self.budget_iterations is not None:
            self.core.run(self.belief.particles, multiplier * self.budget_iterations)
        else:
            import time

            deadline = time.perf_counter() + multiplier * self.budget_seconds
            while time.perf_counter() < deadline:
                self.core.run(self.belief.particles, 1)

    def observe(self, action: GroundAction, obs: Observation) -> None:
        self.history = self.history.extended(action, obs)
        prev = self._prev_belief
        self._prev_belief = self.belief
        try:
            self.belief = filter_belief(self.belief, action, obs)
        except EmptyBeliefError:
            self.belief = self._recover(prev, action, obs)
        self.core.advance(action, obs)

    def _recover(self, prev: Belief | None, action: GroundAction, obs: Observation) -> Belief:
        if prev is not None and len(self.history.steps) >= 2:
            prev_action, prev_obs = self.history.steps[-2]
            try:
                b = filter_belief(prev, prev_action, prev_obs)
                return filter_belief(b, action, obs)
            except EmptyBeliefError:
                pass
        return rebuild_belief(self.spec, self.history, len(self.belief.particles))
