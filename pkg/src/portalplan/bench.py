"""Episode runner and experiment sweeps.

One episode: build the scenario, draw the true world, hand the algorithm an
initial belief, then loop plan -> act -> observe -> shift root until the goal
holds or the step cap trips. Seed streams for the true world, the initial
belief, and the algorithm's internal randomness are derived independently, so
changing the algorithm never changes the sampled world for a given seed.
"""
from __future__ import annotations

import csv
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from random import Random
from typing import Callable, Iterable, Sequence

from .baselines import FFReplanAgent, PomcpAgent, PomcpConfig
from .planner import PlanCache
from .pomdp import (
    Belief,
    enumerate_particles,
    sample_initial_particles,
    simulate_step,
    trace_line,
)
from .portal import PortalConfig, PortalSearch
from .rewards import pomcp_scheme, portal_scheme
from .scenarios import (
    UncertaintyConfig,
    build_elevator,
    build_fig1_micro,
    build_office,
)
from .strips import ScenarioSpec, WorldState, goal_satisfied, ground, initial_world
from .util import derived_rng, derived_seed

log = logging.getLogger(__name__)

DOMAINS = ("office", "elevator", "micro")
ALGOS = ("portal", "pomcp", "ffreplan")

CSV_HEADER = ("domain", "algo", "budget_mode", "budget", "amount", "likelihood",
              "particles", "seed", "steps", "goal", "planning_secs", "plans_generated")

DEFAULT_STEP_CAP = 600
DEFAULT_PARTICLES = 1000


@dataclass(frozen=True)
class EpisodeConfig:
    domain: str
    algo: str
    budget_mode: str = "iters"  # iters | secs
    budget: float = 100.0
    amount: int = 2
    likelihood: str = "uniform"
    particles: int = DEFAULT_PARTICLES
    seed: int = 0
    step_cap: int = DEFAULT_STEP_CAP
    belief_mode: str = "sample"  # sample | enumerate

    def __post_init__(self) -> None:
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.budget_mode not in ("iters", "secs"):
            raise ValueError(f"unknown budget mode {self.budget_mode!r}")
        if self.step_cap < 1:
            raise ValueError("step cap must be >= 1")
        if self.algo != "ffreplan" and self.budget <= 0:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class ResultRecord:
    domain: str
    algo: str
    budget_mode: str
    budget: float
    amount: int
    likelihood: str
    particles: int
    seed: int
    steps: int
    goal: bool
    planning_secs: float
    plans_generated: int

    def sort_key(self):
        return (self.domain, self.algo, self.budget_mode, self.budget, self.amount,
                self.likelihood, self.particles, self.seed)


def build_scenario(cfg: EpisodeConfig) -> ScenarioSpec:
    if cfg.domain == "micro":
        return build_fig1_micro()
    uc = UncertaintyConfig(cfg.amount, cfg.likelihood,
                           seed=derived_seed(cfg.seed, "scenario", cfg.domain))
    return build_office(uc) if cfg.domain == "office" else build_elevator(uc)


def sample_assignment(spec: ScenarioSpec, rng: Random) -> dict[str, str]:
    """Draw one cell per uncertain entity from its candidate distribution."""
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
    return assignment


def _make_agent(cfg: EpisodeConfig, spec: ScenarioSpec, actions, belief: Belief, rng: Random):
    iters = int(cfg.budget) if cfg.budget_mode == "iters" else None
    secs = float(cfg.budget) if cfg.budget_mode == "secs" else None
    if cfg.algo == "portal":
        return PortalSearch(spec, actions, belief, rng,
                            budget_iterations=iters, budget_seconds=secs)
    if cfg.algo == "pomcp":
        return PomcpAgent(spec, actions, belief, rng,
                          budget_iterations=iters, budget_seconds=secs)
    return FFReplanAgent(spec, actions, belief)


def run_episode(cfg: EpisodeConfig) -> tuple[ResultRecord, tuple[str, ...]]:
    """Execute one seeded episode; returns the record and its step trace."""
    spec = build_scenario(cfg)
    actions = ground(spec)
    goal = spec.goal
    state = initial_world(spec, sample_assignment(spec, derived_rng(cfg.seed, "world")))
    if cfg.belief_mode == "enumerate":
        belief = enumerate_particles(spec, cfg.particles)
    else:
        belief = sample_initial_particles(spec, cfg.particles, derived_rng(cfg.seed, "belief"))
    agent = _make_agent(cfg, spec, actions, belief, derived_rng(cfg.seed, "algo"))
    scheme = pomcp_scheme(spec) if cfg.algo == "pomcp" else portal_scheme()

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    trace: list[str] = []
    steps = 0
    planning = 0.0
    if not goal_satisfied(state, goal):
        t0 = time.perf_counter()
        agent.startup()
        planning += time.perf_counter() - t0
        while steps < cfg.step_cap and not goal_satisfied(state, goal):
            t0 = time.perf_counter()
            action = agent.next_action()
            planning += time.perf_counter() - t0
            out = simulate_step(state, action, scheme)
            trace.append(trace_line(steps, action, out.observation))
            steps += 1
            t0 = time.perf_counter()
            agent.observe(action, out.observation)
            planning += time.perf_counter() - t0
            state = out.state
    record = ResultRecord(
        domain=cfg.domain, algo=cfg.algo, budget_mode=cfg.budget_mode, budget=cfg.budget,
        amount=cfg.amount, likelihood=cfg.likelihood, particles=cfg.particles, seed=cfg.seed,
        steps=steps, goal=goal_satisfied(state, goal), planning_secs=planning,
        plans_generated=getattr(agent, "plans_generated", 0),
    )
    return record, tuple(trace)


def _run_safely(cfg: EpisodeConfig) -> ResultRecord:
    try:
        record, _trace = run_episode(cfg)
        return record
    except Exception as exc:  # failure recorded, sweep continues
        log.warning("episode %s failed: %s", cfg, exc)
        return ResultRecord(
            domain=cfg.domain, algo=cfg.algo, budget_mode=cfg.budget_mode, budget=cfg.budget,
            amount=cfg.amount, likelihood=cfg.likelihood, particles=cfg.particles,
            seed=cfg.seed, steps=cfg.step_cap, goal=False, planning_secs=0.0,
            plans_generated=0,
        )


def run_sweep(cfgs: Sequence[EpisodeConfig], workers: int = 1,
              on_result: Callable[[ResultRecord], None] | None = None) -> list[ResultRecord]:
    """Run every episode config; failures are recorded, the sweep continues.

    Results stream to `on_result` as they complete and the returned list is
    sorted deterministically (config order, then seed)."""
    records: list[ResultRecord] = []
    if workers <= 1:
        for cfg in cfgs:
            r = _run_safely(cfg)
            records.append(r)
            if on_result:
                on_result(r)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r in pool.map(_run_safely, cfgs, chunksize=1):
                records.append(r)
                if on_result:
                    on_result(r)
    records.sort(key=ResultRecord.sort_key)
    return records


# ---------------------------------------------------------------------------
# Sweep grids
# ---------------------------------------------------------------------------

def expand_algorithm_comparison(seeds: Sequence[int],
                                domains: Sequence[str] = ("office", "elevator"),
                                budgets_secs: Sequence[float] = (4.0, 16.0),
                                amounts: Sequence[int] = (2, 4, 6, 8, 10),
                                likelihoods: Sequence[str] = ("uniform", "decay75", "decay50"),
                                particles: int = DEFAULT_PARTICLES,
                                step_cap: int = DEFAULT_STEP_CAP) -> list[EpisodeConfig]:
    """The headline grid: portal and pomcp at two planning budgets plus the
    unbudgeted replanner, across uncertainty amounts and likelihood shapes."""
    variants: list[tuple[str, str, float]] = []
    for b in budgets_secs:
        variants.append(("portal", "secs", b))
    for b in budgets_secs:
        variants.append(("pomcp", "secs", b))
    variants.append(("ffreplan", "secs", 0.0))
    out = []
    for domain in domains:
        for algo, mode, budget in variants:
            for amount in amounts:
                for lk in likelihoods:
                    for seed in seeds:
                        out.append(EpisodeConfig(domain=domain, algo=algo, budget_mode=mode,
                                                 budget=budget, amount=amount, likelihood=lk,
                                                 particles=particles, seed=seed,
                                                 step_cap=step_cap))
    return out


def expand_time_comparison(seeds: Sequence[int],
                           domains: Sequence[str] = ("office", "elevator"),
                           budgets_secs: Sequence[float] = (2.0, 4.0, 8.0, 16.0, 32.0),
                           amounts: Sequence[int] = (4, 8),
                           likelihood: str = "uniform",
                           particles: int = DEFAULT_PARTICLES,
                           step_cap: int = DEFAULT_STEP_CAP) -> list[EpisodeConfig]:
    """Budget-doubling grid for the tree search planner alone."""
    out = []
    for domain in domains:
        for budget in budgets_secs:
            for amount in amounts:
                for seed in seeds:
                    out.append(EpisodeConfig(domain=domain, algo="portal", budget_mode="secs",
                                             budget=budget, amount=amount,
                                             likelihood=likelihood, particles=particles,
                                             seed=seed, step_cap=step_cap))
    return out


def parse_sweep_config(text: str) -> list[EpisodeConfig]:
    """Parse the key/value-list sweep format (see README) into a config grid.

    Keys: domains, algos (name or name:budget), budget_mode, budgets, amounts,
    likelihoods, particles, step_cap, seeds, seed_base. The grid is the
    Cartesian product of the listed axes.
    """
    kv: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"sweep config line {lineno}: expected 'key: values'")
        key, rest = line.split(":", 1)
        kv[key.strip()] = rest.split()
    domains = kv.get("domains", ["office", "elevator"])
    budget_mode = kv.get("budget_mode", ["secs"])[0]
    budgets = [float(b) for b in kv.get("budgets", [])]
    algos = kv.get("algos", ["portal"])
    amounts = [int(a) for a in kv.get("amounts", ["2"])]
    likelihoods = kv.get("likelihoods", ["uniform"])
    particles = int(kv.get("particles", [str(DEFAULT_PARTICLES)])[0])
    step_cap = int(kv.get("step_cap", [str(DEFAULT_STEP_CAP)])[0])
    n_seeds = int(kv.get("seeds", ["50"])[0])
    seed_base = int(kv.get("seed_base", ["0"])[0])
    seeds = list(range(seed_base, seed_base + n_seeds))

    variants: list[tuple[str, float]] = []
    for spec in algos:
        if ":" in spec:
            name, b = spec.split(":", 1)
            variants.append((name, float(b)))
        elif spec == "ffreplan":
            variants.append((spec, 0.0))
        elif budgets:
            variants.extend((spec, b) for b in budgets)
        else:
            raise ValueError(f"algo {spec!r} needs a budget (name:budget or a budgets: line)")
    out = []
    for domain in domains:
        for algo, budget in variants:
            for amount in amounts:
                for lk in likelihoods:
                    for seed in seeds:
                        out.append(EpisodeConfig(domain=domain, algo=algo,
                                                 budget_mode=budget_mode, budget=budget,
                                                 amount=amount, likelihood=lk,
                                                 particles=particles, seed=seed,
                                                 step_cap=step_cap))
    return out


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def write_results(records: Iterable[ResultRecord], destination) -> None:
    """Write the CSV (documented header, one row per record, deterministic
    row order: config lexicographic, then seed)."""
    rows = sorted(records, key=ResultRecord.sort_key)
    close = False
    if isinstance(destination, (str, bytes)):
        fh = open(destination, "w", newline="")
        close = True
    else:
        fh = destination
    try:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.domain, r.algo, r.budget_mode, repr(r.budget), r.amount,
                        r.likelihood, r.particles, r.seed, r.steps,
                        "true" if r.goal else "false",
                        repr(r.planning_secs), r.plans_generated])
    finally:
        if close:
            fh.close()


def read_results(path) -> list[ResultRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}, want {CSV_HEADER!r}")
        out = []
        for row in reader:
            out.append(ResultRecord(
                domain=row[0], algo=row[1], budget_mode=row[2], budget=float(row[3]),
                amount=int(row[4]), likelihood=row[5], particles=int(row[6]),
                seed=int(row[7]), steps=int(row[8]), goal=row[9] == "true",
                planning_secs=float(row[10]), plans_generated=int(row[11]),
            ))
    return out
