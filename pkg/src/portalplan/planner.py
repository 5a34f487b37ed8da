"""Classical planning over grounded states.

plan() is a satisficing greedy best-first search guided by the additive
delete-relaxation heuristic; plan_bfs_oracle() is a step-optimal breadth-first
search used to bound plan quality in tests. Both are deterministic for fixed
inputs: successors are generated in canonical action order and ties in the
open list fall back to FIFO.

The heuristic inner loop runs over integer-indexed arrays so it can be JIT
compiled by numba when available; the pure-Python path computes identical
values (all arithmetic is integral).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .strips import Atom, GroundAction, WorldState, apply, applicable, goal_satisfied

INF_COST = 1 << 30

DEFAULT_NODE_CAP = 200_000
ORACLE_NODE_CAP = 1_000_000


class UnsolvableError(Exception):
    """The goal is unreachable from the given state."""


class PlannerResourceError(RuntimeError):
    """Node expansion cap exceeded; the instance is pathologically large."""


@dataclass(frozen=True)
class Plan:
    actions: tuple[GroundAction, ...]

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)


def validate_plan(state: WorldState, goal: frozenset[Atom], plan: Plan) -> WorldState:
    """Apply the plan, raising if any step is inapplicable or the goal fails."""
    for a in plan.actions:
        state = apply(state, a)
    if not goal_satisfied(state, goal):
        raise ValueError("plan does not achieve the goal")
    return state


# ---------------------------------------------------------------------------
# Additive delete-relaxation heuristic
# ---------------------------------------------------------------------------

def _hadd_core(n_atoms, pre_ptr, pre_atoms, add_ptr, add_atoms,
               use_ptr, use_act, n_pre, state_mask, goal_idx):
    """Dijkstra over the relaxed atom graph. Returns sum of goal atom costs.

    Written against flat int arrays only, so the same body runs both under
    CPython and under numba.njit. Unit action costs keep everything integral.
    """
    n_act = n_pre.shape[0]
    cost = np.full(n_atoms, INF_COST, dtype=np.int64)
    done = np.zeros(n_atoms, dtype=np.uint8)
    remaining = n_pre.copy()
    acc = np.zeros(n_act, dtype=np.int64)

    # every push is either an initial atom or tied to one add entry of a
    # single action firing, so this bound is exact
    cap = n_atoms + add_atoms.shape[0] + 8
    heap_cost = np.empty(cap, dtype=np.int64)
    heap_atom = np.empty(cap, dtype=np.int64)
    size = 0

    def push(c, a, size):
        heap_cost[size] = c
        heap_atom[size] = a
        i = size
        size += 1
        while i > 0:
            p = (i - 1) >> 1
            if heap_cost[p] > heap_cost[i] or (heap_cost[p] == heap_cost[i] and heap_atom[p] > heap_atom[i]):
                heap_cost[p], heap_cost[i] = heap_cost[i], heap_cost[p]
                heap_atom[p], heap_atom[i] = heap_atom[i], heap_atom[p]
                i = p
            else:
                break
        return size

    def pop(size):
        c = heap_cost[0]
        a = heap_atom[0]
        size -= 1
        heap_cost[0] = heap_cost[size]
        heap_atom[0] = heap_atom[size]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            sm = i
            if l < size and (heap_cost[l] < heap_cost[sm] or (heap_cost[l] == heap_cost[sm] and heap_atom[l] < heap_atom[sm])):
                sm = l
            if r < size and (heap_cost[r] < heap_cost[sm] or (heap_cost[r] == heap_cost[sm] and heap_atom[r] < heap_atom[sm])):
                sm = r
            if sm == i:
                break
            heap_cost[sm], heap_cost[i] = heap_cost[i], heap_cost[sm]
            heap_atom[sm], heap_atom[i] = heap_atom[i], heap_atom[sm]
            i = sm
        return c, a, size

    goal_left = 0
    for g in goal_idx:
        if state_mask[g] == 0:
            goal_left += 1

    for a in range(n_atoms):
        if state_mask[a]:
            cost[a] = 0
            size = push(0, a, size)

    # zero-precondition actions fire unconditionally at cost 1
    for act in range(n_act):
        if n_pre[act] == 0:
            for j in range(add_ptr[act], add_ptr[act + 1]):
                at = add_atoms[j]
                if 1 < cost[at]:
                    cost[at] = 1
                    size = push(1, at, size)

    while size > 0 and goal_left > 0:
        c, a, size = pop(size)
        if done[a]:
            continue
        done[a] = 1
        for g in goal_idx:
            if g == a and state_mask[a] == 0:
                goal_left -= 1
        for j in range(use_ptr[a], use_ptr[a + 1]):
            act = use_act[j]
            acc[act] += c
            remaining[act] -= 1
            if remaining[act] == 0:
                ac = 1 + acc[act]
                for k in range(add_ptr[act], add_ptr[act + 1]):
                    at = add_atoms[k]
                    if ac < cost[at]:
                        cost[at] = ac
                        size = push(ac, at, size)

    total = np.int64(0)
    for g in goal_idx:
        if cost[g] >= INF_COST:
            return np.int64(INF_COST)
        total += cost[g]
    return total


try:  # optional JIT; identical integer results either way
    import numba

    _hadd_fast = numba.njit(cache=True)(_hadd_core)
    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    _hadd_fast = _hadd_core
    HAVE_NUMBA = False

_hadd_pure = _hadd_core


class _RelaxIndex:
    """Per-(actions, goal) integer encoding of the relaxation graph."""

    _VALUE_MEMO_CAP = 200_000

    def __init__(self, actions: tuple[GroundAction, ...], goal: frozenset[Atom]):
        self.value_memo: dict[frozenset[Atom], int] = {}
        atom_id: dict[Atom, int] = {}

        def intern(a: Atom) -> int:
            i = atom_id.get(a)
            if i is None:
                i = len(atom_id)
                atom_id[a] = i
            return i

        pre_lists = []
        add_lists = []
        for act in actions:
            pre_lists.append([intern(a) for a in sorted(act.pre)])
            add_lists.append([intern(a) for a in sorted(act.add)])
        goal_ids = [intern(a) for a in sorted(goal)]

        self.atom_id = atom_id
        self.n_atoms = len(atom_id)
        self.pre_ptr, self.pre_atoms = _csr(pre_lists)
        self.add_ptr, self.add_atoms = _csr(add_lists)
        uses: list[list[int]] = [[] for _ in range(self.n_atoms)]
        for ai, pres in enumerate(pre_lists):
            for at in pres:
                uses[at].append(ai)
        self.use_ptr, self.use_act = _csr(uses)
        self.n_pre = np.array([len(p) for p in pre_lists], dtype=np.int64)
        self.goal_idx = np.array(goal_ids, dtype=np.int64)

    def state_mask(self, state: WorldState) -> np.ndarray:
        mask = np.zeros(self.n_atoms, dtype=np.uint8)
        get = self.atom_id.get
        for a in state.atoms:
            i = get(a)
            if i is not None:
                mask[i] = 1
        return mask


def _csr(lists: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, l in enumerate(lists):
        ptr[i + 1] = ptr[i] + len(l)
    flat = np.empty(int(ptr[-1]), dtype=np.int64)
    k = 0
    for l in lists:
        for v in l:
            flat[k] = v
            k += 1
    return ptr, flat


@lru_cache(maxsize=32)
def _relax_index(actions: tuple[GroundAction, ...], goal: frozenset[Atom]) -> _RelaxIndex:
    return _RelaxIndex(actions, goal)


def _hadd_indexed(idx: _RelaxIndex, state: WorldState, fast: bool = True) -> int:
    hit = idx.value_memo.get(state.atoms)
    if hit is not None:
        return hit
    fn = _hadd_fast if fast else _hadd_pure
    v = int(fn(idx.n_atoms, idx.pre_ptr, idx.pre_atoms, idx.add_ptr, idx.add_atoms,
               idx.use_ptr, idx.use_act, idx.n_pre, idx.state_mask(state), idx.goal_idx))
    if len(idx.value_memo) < idx._VALUE_MEMO_CAP:
        idx.value_memo[state.atoms] = v
    return v


def h_add(state: WorldState, goal: frozenset[Atom],
          actions: Sequence[GroundAction]) -> float:
    """Additive delete-relaxation heuristic; 0 iff satisfied, inf iff unreachable."""
    if goal_satisfied(state, goal):
        return 0.0
    idx = _relax_index(tuple(actions), frozenset(goal))
    v = _hadd_indexed(idx, state)
    return float("inf") if v >= INF_COST else float(v)


# ---------------------------------------------------------------------------
# Successor generation
# ---------------------------------------------------------------------------

class _SuccessorIndex:
    """Buckets actions by one shared precondition predicate to cut scan cost.

    If some predicate occurs exactly once in every action's precondition
    (robot-at, in this domain family), actions are indexed by that atom and
    only the bucket matching the current state is scanned.
    """

    def __init__(self, actions: tuple[GroundAction, ...]):
        shared: set[str] | None = None
        for act in actions:
            preds = {a.predicate for a in act.pre}
            ok = {p for p in preds if sum(1 for a in act.pre if a.predicate == p) == 1}
            shared = ok if shared is None else (shared & ok)
        self.anchor_pred: str | None = None
        self.buckets: dict[Atom, list[GroundAction]] = {}
        self.rest: list[GroundAction] = list(actions)
        if shared:
            self.anchor_pred = sorted(shared)[0]
            self.rest = []
            for act in actions:
                anchor = next(a for a in act.pre if a.predicate == self.anchor_pred)
                self.buckets.setdefault(anchor, []).append(act)

    def applicable_actions(self, state: WorldState) -> list[GroundAction]:
        out = []
        atoms = state.atoms
        if self.anchor_pred is not None:
            for a in atoms:
                if a.predicate == self.anchor_pred:
                    for act in self.buckets.get(a, ()):
                        if act.pre <= atoms:
                            out.append(act)
        for act in self.rest:
            if act.pre <= atoms:
                out.append(act)
        out.sort()
        return out


@lru_cache(maxsize=32)
def _successor_index(actions: tuple[GroundAction, ...]) -> _SuccessorIndex:
    return _SuccessorIndex(actions)


def applicable_actions(state: WorldState, actions: Sequence[GroundAction]) -> list[GroundAction]:
    """All actions applicable in state, canonically ordered."""
    return _successor_index(tuple(actions)).applicable_actions(state)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

def plan(state: WorldState, goal: frozenset[Atom], actions: Sequence[GroundAction],
         *, node_cap: int = DEFAULT_NODE_CAP, stats: dict | None = None) -> Plan:
    """Greedy best-first search on h_add. Satisficing, deterministic.

    Raises UnsolvableError when the goal is unreachable and
    PlannerResourceError when the expansion cap trips.
    """
    acts = tuple(actions)
    goal = frozenset(goal)
    if goal_satisfied(state, goal):
        return Plan(())
    idx = _relax_index(acts, goal)
    succ = _successor_index(acts)

    h0 = _hadd_indexed(idx, state)
    if h0 >= INF_COST:
        raise UnsolvableError("goal unreachable in the delete relaxation")

    counter = 0
    open_heap: list[tuple[int, int, WorldState]] = [(h0, counter, state)]
    seen: set[frozenset[Atom]] = {state.atoms}
    parents: dict[frozenset[Atom], tuple[WorldState, GroundAction]] = {}
    expansions = 0
    hadd_calls = 1

    while open_heap:
        _, _, s = heapq.heappop(open_heap)
        expansions += 1
        if expansions > node_cap:
            raise PlannerResourceError(f"expansion cap {node_cap} exceeded")
        for act in succ.applicable_actions(s):
            child_atoms = (s.atoms - act.delete) | act.add
            if child_atoms in seen:
                continue
            seen.add(child_atoms)
            child = WorldState(child_atoms)
            parents[child_atoms] = (s, act)
            if goal <= child_atoms:
                if stats is not None:
                    stats.update(expansions=expansions, generated=len(seen), hadd_calls=hadd_calls)
                return _reconstruct(child, state, parents)
            h = _hadd_indexed(idx, child)
            hadd_calls += 1
            if h >= INF_COST:
                continue
            counter += 1
            heapq.heappush(open_heap, (h, counter, child))
    if stats is not None:
        stats.update(expansions=expansions, generated=len(seen), hadd_calls=hadd_calls)
    raise UnsolvableError("search space exhausted without reaching the goal")


def plan_bfs_oracle(state: WorldState, goal: frozenset[Atom],
                    actions: Sequence[GroundAction],
                    *, node_cap: int = ORACLE_NODE_CAP) -> Plan:
    """Step-optimal plan by breadth-first search. Test oracle; small instances only."""
    acts = tuple(actions)
    goal = frozenset(goal)
    if goal_satisfied(state, goal):
        return Plan(())
    succ = _successor_index(acts)
    from collections import deque

    frontier = deque([state])
    seen: set[frozenset[Atom]] = {state.atoms}
    parents: dict[frozenset[Atom], tuple[WorldState, GroundAction]] = {}
    expansions = 0
    while frontier:
        s = frontier.popleft()
        expansions += 1
        if expansions > node_cap:
            raise PlannerResourceError(f"oracle expansion cap {node_cap} exceeded")
        for act in succ.applicable_actions(s):
            child_atoms = (s.atoms - act.delete) | act.add
            if child_atoms in seen:
                continue
            seen.add(child_atoms)
            child = WorldState(child_atoms)
            parents[child_atoms] = (s, act)
            if goal <= child_atoms:
                return _reconstruct(child, state, parents)
            frontier.append(child)
    raise UnsolvableError("goal unreachable")


def _reconstruct(end: WorldState, start: WorldState,
                 parents: dict[frozenset[Atom], tuple[WorldState, GroundAction]]) -> Plan:
    out: list[GroundAction] = []
    cur = end
    while cur.atoms != start.atoms:
        prev, act = parents[cur.atoms]
        out.append(act)
        cur = prev
    out.reverse()
    return Plan(tuple(out))


class PlanCache:
    """State-keyed memo over plan() for one (goal, actions) pair.

    Search algorithms request plans for the same determinized states many
    times per decision; caching collapses those calls. Unsolvable states are
    cached too.
    """

    def __init__(self, goal: frozenset[Atom], actions: Sequence[GroundAction],
                 node_cap: int = DEFAULT_NODE_CAP):
        self.goal = frozenset(goal)
        self.actions = tuple(actions)
        self.node_cap = node_cap
        self._memo: dict[frozenset[Atom], Plan | None] = {}
        self.planner_calls = 0
        self.total_expansions = 0

    def get(self, state: WorldState) -> Plan:
        key = state.atoms
        if key in self._memo:
            hit = self._memo[key]
            if hit is None:
                raise UnsolvableError("cached unsolvable state")
            return hit
        self.planner_calls += 1
        stats: dict = {}
        try:
            p = plan(state, self.goal, self.actions, node_cap=self.node_cap, stats=stats)
        except UnsolvableError:
            self._memo[key] = None
            raise
        finally:
            self.total_expansions += stats.get("expansions", 0)
        self._memo[key] = p
        return p
