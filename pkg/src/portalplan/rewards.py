"""Reward shaping for the two search algorithms.

The tree-search planner runs on a flat -1 per action. The Monte Carlo
baseline needs a denser signal: bonuses for uncovering entities, for goal
landmarks, and for taking search actions at all.
"""
from __future__ import annotations

from dataclasses import dataclass

from .strips import Atom, GroundAction, ScenarioSpec, WorldState

LANDMARK_PREDICATES = ("in-box", "delivered", "checked-in")


@dataclass(frozen=True)
class RewardScheme:
    per_action: float
    search_bonus: float = 0.0
    find_bonus: float = 0.0
    landmark_bonus: float = 0.0
    landmarks: frozenset[Atom] = frozenset()


def portal_scheme() -> RewardScheme:
    return RewardScheme(per_action=-1.0)


def pomcp_scheme(spec: ScenarioSpec) -> RewardScheme:
    """Subgoal-shaped scheme: landmarks are the goal's milestone atoms."""
    landmarks = frozenset(a for a in spec.goal if a.predicate in LANDMARK_PREDICATES)
    return RewardScheme(per_action=0.0, search_bonus=0.1, find_bonus=1.0,
                        landmark_bonus=1.0, landmarks=landmarks)


def reward_of(prev: WorldState, action: GroundAction, nxt: WorldState,
              scheme: RewardScheme) -> float:
    r = scheme.per_action
    if action.name == "search":
        r += scheme.search_bonus
    if scheme.find_bonus:
        for a in nxt.atoms:
            if a.predicate == "revealed" and a not in prev.atoms:
                r += scheme.find_bonus
    if scheme.landmark_bonus and scheme.landmarks:
        for a in scheme.landmarks:
            if a in nxt.atoms and a not in prev.atoms:
                r += scheme.landmark_bonus
    return r
