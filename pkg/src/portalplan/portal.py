"""Anytime plan-seeded belief-tree search.

The search keeps a history tree whose observation nodes carry particle
beliefs. Instead of branching over every action, whole classical plans are
inserted from `meaningful` observation nodes: points where simulated
observations diverged from the plan-bearing particle's expectations (the root
always counts). A progressive-widening rule G < k * N**alpha paces how many
plans a node may spawn as its visit count grows.

Descents select actions by UCT and maintain action-node values incrementally
with a paired subtract/re-add of the weighted, discounted child value around
each recursive step; observation-node values are always the max over child
action values.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from math import inf, log, sqrt
from random import Random
from typing import Callable, Sequence

from .planner import Plan, PlanCache, UnsolvableError
from .pomdp import (
    Belief,
    EmptyBeliefError,
    History,
    Observation,
    execution_applicable,
    filter_belief,
    rebuild_belief,
    simulate_step,
)
from .rewards import RewardScheme, portal_scheme
from .strips import Atom, GroundAction, ScenarioSpec, WorldState, goal_satisfied


class NoPlanInsertedError(Exception):
    """The budget elapsed before any plan reached the root."""


class TreeInvariantError(RuntimeError):
    """The belief/tree bookkeeping broke an internal invariant."""


class AuditError(AssertionError):
    """A debug audit found an inconsistent node value or widening count."""


@dataclass(frozen=True)
class PortalConfig:
    exploration: float = 20.0
    widening_k: float = 0.5
    widening_alpha: float = 1.0
    gamma: float = 1.0
    startup_multiplier: int = 5

    def __post_init__(self) -> None:
        if self.exploration < 0 or self.widening_k <= 0 or self.widening_alpha <= 0:
            raise ValueError("invalid search constants")
        if self.startup_multiplier < 0:
            raise ValueError("startup multiplier must be >= 0")


def expand_test(n: int, g: int, k: float, alpha: float) -> bool:
    """Progressive widening: allow a new plan while G < k * N**alpha."""
    return g < k * n ** alpha


class ActionNode:
    __slots__ = ("action", "N", "V", "children")

    def __init__(self, action: GroundAction):
        self.action = action
        self.N = 0
        self.V = 0.0
        self.children: dict[Observation, "ObsNode"] = {}


class ObsNode:
    __slots__ = ("N", "G", "V", "meaningful", "terminal", "belief", "children", "parent")

    def __init__(self, parent: ActionNode | None, meaningful: bool):
        self.N = 0
        self.G = 0
        self.V = 0.0
        self.meaningful = meaningful
        self.terminal = False
        self.belief: list[WorldState] = []
        self.children: dict[GroundAction, ActionNode] = {}
        self.parent = parent


def approx(node: ObsNode) -> float:
    """Leaf value estimate: mean value of sibling observation nodes, else 0."""
    if node.parent is None:
        return 0.0
    siblings = [c for c in node.parent.children.values() if c is not node]
    if not siblings:
        return 0.0
    return sum(c.V for c in siblings) / len(siblings)


def _obs_sort_key(o: Observation) -> tuple[str, tuple[str, ...]]:
    return (o.kind, o.seen)


def uct_select(node: ObsNode, exploration: float) -> ActionNode:
    """UCT rule over a node's action children; unvisited children take
    unconditional priority, all ties break on canonical action order."""
    log_n = log(node.N)
    best: ActionNode | None = None
    best_score = -inf
    for a, an in node.children.items():
        score = inf if an.N == 0 else an.V + exploration * sqrt(log_n / an.N)
        if (best is None or score > best_score
                or (score == best_score and a.sort_key() < best.action.sort_key())):
            best, best_score = an, score
    if best is None:
        raise TreeInvariantError("UCT selection on a childless node")
    return best


class PortalSearch:
    """One search instance owns its tree; drives a whole episode via
    startup() / next_action() / observe()."""

    _STEP_MEMO_CAP = 400_000

    def __init__(self, spec: ScenarioSpec, actions: Sequence[GroundAction],
                 belief: Belief, rng: Random, config: PortalConfig | None = None,
                 scheme: RewardScheme | None = None,
                 budget_iterations: int | None = None,
                 budget_seconds: float | None = None,
                 plan_cache: PlanCache | None = None,
                 step_memo: dict | None = None,
                 audit: bool = False):
        self.spec = spec
        self.actions = tuple(actions)
        self.goal = spec.goal
        self.config = config or PortalConfig()
        self.scheme = scheme or portal_scheme()
        self.rng = rng
        self.budget_iterations = budget_iterations
        self.budget_seconds = budget_seconds
        if (budget_iterations is None) == (budget_seconds is None):
            raise ValueError("exactly one of budget_iterations/budget_seconds required")
        self.plans = plan_cache or PlanCache(self.goal, self.actions)
        self.audit = audit
        self.history = History()
        self.plans_generated = 0
        self.unsolvable_discards = 0
        self.iterations = 0
        self.fallbacks = 0
        self._prev_root_belief: Belief | None = None
        self._step_memo: dict = {} if step_memo is None else step_memo
        self.root = self._fresh_root(belief)

    def _step(self, s: WorldState, a: GroundAction):
        """simulate_step with memoization; the simulator is pure, and the same
        state/action pairs recur across thousands of iterations."""
        key = (s, a)
        out = self._step_memo.get(key)
        if out is None:
            out = simulate_step(s, a, self.scheme)
            if len(self._step_memo) < self._STEP_MEMO_CAP:
                self._step_memo[key] = out
        return out

    # -- episode driver -----------------------------------------------------

    def startup(self) -> None:
        """Build the initial tree with the startup allotment of planning time."""
        m = self.config.startup_multiplier
        if self.budget_iterations is not None:
            self._run(iterations=m * self.budget_iterations)
        else:
            self._run(seconds=m * self.budget_seconds)

    def next_action(self) -> GroundAction:
        self._run(iterations=self.budget_iterations, seconds=self.budget_seconds)
        try:
            return self.best_action()
        except NoPlanInsertedError:
            # degenerate budget: fall back to acting like the replanner would
            self.fallbacks += 1
            from .pomdp import most_probable_particle

            state = most_probable_particle(Belief(tuple(self.root.belief)))
            return self.plans.get(state).actions[0]

    def observe(self, action: GroundAction, obs: Observation) -> None:
        self.advance_root(action, obs)

    # -- search proper ------------------------------------------------------

    def search(self, iterations: int | None = None, seconds: float | None = None) -> GroundAction:
        """Run iterations until the budget runs out, then return the root
        action of maximal value (canonical order on ties)."""
        self._run(iterations=iterations, seconds=seconds)
        return self.best_action()

    def _run(self, iterations: int | None = None, seconds: float | None = None) -> None:
        if self.root.terminal:
            return
        if seconds is not None:
            deadline = time.perf_counter() + seconds
            while time.perf_counter() < deadline:
                self._iterate()
        if iterations is not None:
            for _ in range(iterations):
                self._iterate()

    def _iterate(self) -> None:
        belief = self.root.belief
        s = belief[self.rng.randrange(len(belief))]
        self._simulate(s, self.root)
        self.iterations += 1
        if self.audit:
            audit_tree(self.root, self.config)

    def best_action(self) -> GroundAction:
        if not self.root.children:
            raise NoPlanInsertedError("no plan was inserted at the root")
        best: GroundAction | None = None
        best_v = -inf
        for a, an in self.root.children.items():
            if best is None or an.V > best_v or (an.V == best_v and a.sort_key() < best.sort_key()):
                best, best_v = a, an.V
        return best

    def _simulate(self, s: WorldState, node: ObsNode) -> None:
        cfg = self.config
        path: list[tuple[ObsNode, ActionNode, ObsNode]] = []
        while True:
            node.N += 1
            if node.terminal:
                break
            if node.meaningful and expand_test(node.N, node.G, cfg.widening_k, cfg.widening_alpha):
                try:
                    p = self.plans.get(s)
                except UnsolvableError:
                    self.unsolvable_discards += 1
                    break
                if p.actions:
                    node.G += 1
                    self.plans_generated += 1
                    self._rollout(s, node, p.actions)
                break
            if not node.children:
                raise TreeInvariantError("reached a childless non-terminal node with no way to expand")
            an = uct_select(node, cfg.exploration)
            an.N += 1
            out = self._step(s, an.action)
            child = an.children.get(out.observation)
            if child is None:
                raise TreeInvariantError(
                    f"observation {out.observation} of a root-consistent particle "
                    f"was never propagated through {an.action}"
                )
            an.V -= (len(child.belief) / len(node.belief)) * cfg.gamma * child.V
            path.append((node, an, child))
            s = out.state
            node = child
        for up, an, child in reversed(path):
            an.V += (len(child.belief) / len(up.belief)) * cfg.gamma * child.V
            up.V = max(x.V for x in up.children.values())

    def _rollout(self, s: WorldState, node: ObsNode, acts: tuple[GroundAction, ...]) -> None:
        gamma = self.config.gamma
        path: list[tuple[ObsNode, ActionNode, ObsNode]] = []
        for a_k in acts:
            if node.terminal:
                break
            out = self._step(s, a_k)
            an = node.children.get(a_k)
            if an is None:
                an = ActionNode(a_k)
                node.children[a_k] = an
                nb = len(node.belief)
                for s_alt in node.belief:
                    if not execution_applicable(s_alt, a_k):
                        raise TreeInvariantError(
                            f"{a_k} inapplicable for a particle before any observation divergence"
                        )
                    out_alt = self._step(s_alt, a_k)
                    child = an.children.get(out_alt.observation)
                    if child is None:
                        child = ObsNode(parent=an, meaningful=out_alt.observation != out.observation)
                        an.children[out_alt.observation] = child
                        child.V = approx(child)
                    child.belief.append(out_alt.state)
                    an.V += out_alt.reward / nb
                for child in an.children.values():
                    if all(goal_satisfied(p, self.goal) for p in child.belief):
                        child.terminal = True
                        child.V = 0.0
            child = an.children.get(out.observation)
            if child is None:
                raise TreeInvariantError(
                    f"plan-bearing particle produced unpropagated observation {out.observation}"
                )
            an.V -= (len(child.belief) / len(node.belief)) * gamma * child.V
            path.append((node, an, child))
            s = out.state
            node = child
        for up, an, child in reversed(path):
            an.V += (len(child.belief) / len(up.belief)) * gamma * child.V
            up.V = max(x.V for x in up.children.values())

    # -- root shifting ------------------------------------------------------

    def advance_root(self, action: GroundAction, obs: Observation) -> None:
        """Promote the child for the executed (action, observation) to root.

        The new root's belief is refreshed by exact filtering of the old root
        belief; a missing child yields a fresh root over the filtered belief.
        Particle depletion falls back to re-filtering the retained previous
        root belief and finally to enumerating history-consistent worlds.
        """
        old_belief = Belief(tuple(self.root.belief))
        new_history = self.history.extended(action, obs)
        try:
            new_belief = filter_belief(old_belief, action, obs)
        except EmptyBeliefError:
            new_belief = self._recover_belief(action, obs, new_history, len(old_belief.particles))
        self.history = new_history

        an = self.root.children.get(action)
        child = an.children.get(obs) if an is not None else None
        if child is None:
            self.root = self._fresh_root(new_belief)
        else:
            child.parent = None
            child.meaningful = True
            child.belief = list(new_belief.particles)
            child.terminal = all(goal_satisfied(p, self.goal) for p in child.belief)
            self.root = child
        self._prev_root_belief = old_belief

    def _recover_belief(self, action: GroundAction, obs: Observation,
                        history: History, count: int) -> Belief:
        if self._prev_root_belief is not None and len(history.steps) >= 2:
            prev_action, prev_obs = history.steps[-2]
            try:
                b = filter_belief(self._prev_root_belief, prev_action, prev_obs)
                return filter_belief(b, action, obs)
            except EmptyBeliefError:
                pass
        return rebuild_belief(self.spec, history, count)

    def _fresh_root(self, belief: Belief) -> ObsNode:
        root = ObsNode(parent=None, meaningful=True)
        root.belief = list(belief.particles)
        root.terminal = all(goal_satisfied(p, self.goal) for p in root.belief)
        return root


# ---------------------------------------------------------------------------
# Debug audits and diagnostics
# ---------------------------------------------------------------------------

def audit_tree(root: ObsNode, config: PortalConfig) -> int:
    """Walk the whole tree checking structural invariants; returns node count.

    Raises AuditError on: an internal observation node whose V is not the max
    over its children, a widening count above k * N**alpha + 1, N < G, or a
    plan counter on a non-meaningful node.
    """
    count = 0
    stack = [root]
    while stack:
        node = stack.pop()
        count += 1
        if node.N < node.G or node.G < 0:
            raise AuditError(f"visit/plan counters inconsistent: N={node.N} G={node.G}")
        if node.G > config.widening_k * node.N ** config.widening_alpha + 1:
            raise AuditError(f"widening bound violated: N={node.N} G={node.G}")
        if node.G > 0 and not node.meaningful:
            raise AuditError("plan generated at a non-meaningful node")
        if node.children:
            best = max(an.V for an in node.children.values())
            if node.V != best:
                raise AuditError(f"V(h)={node.V} != max_b V(hb)={best}")
        for an in node.children.values():
            for child in an.children.values():
                stack.append(child)
    return count


def belief_conservation(node: ObsNode) -> bool:
    """Check sum over children |B(hao)| <= |B(h)| for each action below node."""
    for an in node.children.values():
        total = sum(len(c.belief) for c in an.children.values())
        if total > len(node.belief):
            return False
    return True


def dump_tree(root: ObsNode, max_depth: int | None = None) -> str:
    """Nested text snapshot (N/G/V/meaningful per node) for golden tests."""
    lines: list[str] = []

    def obs_label(o: Observation | None) -> str:
        return "root" if o is None else str(o)

    def walk(node: ObsNode, obs: Observation | None, depth: int) -> None:
        pad = "  " * depth
        flags = ("M" if node.meaningful else "-") + ("T" if node.terminal else "-")
        lines.append(f"{pad}o {obs_label(obs)} [{flags}] N={node.N} G={node.G} "
                     f"V={node.V:.6f} |B|={len(node.belief)}")
        if max_depth is not None and depth >= max_depth:
            return
        for a in sorted(node.children, key=lambda x: x.sort_key()):
            an = node.children[a]
            lines.append(f"{pad}  a {a} N={an.N} V={an.V:.6f}")
            for o in sorted(an.children, key=_obs_sort_key):
                walk(an.children[o], o, depth + 2)

    walk(root, None, 0)
    return "\n".join(lines) + "\n"
