"""Calibration for the monotone-budget acceptance parameters (dev tool)."""
from __future__ import annotations

import sys
import time
from random import Random

sys.setrecursionlimit(100_000)

from portalplan.bench import sample_assignment
from portalplan.planner import PlanCache
from portalplan.pomdp import enumerate_particles, simulate_step
from portalplan.portal import PortalSearch
from portalplan.scenarios import UncertaintyConfig, build_elevator, build_fig1_micro
from portalplan.strips import goal_satisfied, ground, initial_world
from portalplan.util import derived_rng


def run_portal_episode(spec, actions, cache, belief, true0, rng, budget_iters, cap=600,
                       step_memo=None):
    agent = PortalSearch(spec, actions, belief, rng, budget_iterations=budget_iters,
                         plan_cache=cache, step_memo=step_memo)
    state = true0
    steps = 0
    agent.startup()
    while steps < cap and not goal_satisfied(state, spec.goal):
        a = agent.next_action()
        out = simulate_step(state, a)
        steps += 1
        agent.observe(a, out.observation)
        state = out.state
    return steps


def trend(name, spec, budgets, n_seeds, particles):
    actions = ground(spec)
    cache = PlanCache(spec.goal, actions)
    step_memo = {}
    belief = enumerate_particles(spec, particles)
    means = []
    for b in budgets:
        t0 = time.time()
        tot = 0
        for seed in range(n_seeds):
            true0 = initial_world(spec, sample_assignment(spec, derived_rng(seed, "world")))
            steps = run_portal_episode(spec, actions, cache, belief, true0,
                                       derived_rng(seed, "algo", b), b,
                                       step_memo=step_memo)
            tot += steps
        mean = tot / n_seeds
        means.append(mean)
        print(f"{name} budget {b}: mean steps {mean:.3f}  ({time.time()-t0:.1f}s)", flush=True)
    print(f"{name} means: {[round(m,3) for m in means]}")
    ok = all(means[i + 1] <= means[i] + 0.5 for i in range(len(means) - 1))
    print(f"{name} monotone within +0.5: {ok}")


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    t0 = time.time()
    trend("micro", build_fig1_micro(), [25, 50, 100, 200], n, 10)
    ele = build_elevator(UncertaintyConfig(2, "uniform", seed=20250810))
    trend("elevator2-uniform", ele, [16, 32, 64, 128], n, 8)
    ele2 = build_elevator(UncertaintyConfig(2, "decay50", seed=20250810))
    trend("elevator2-decay50", ele2, [16, 32, 64, 128], n, 8)
    print(f"total {time.time()-t0:.1f}s")
