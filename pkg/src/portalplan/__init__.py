"""Probabilistic task planning toolkit: plan-seeded belief-tree search,
determinize-and-replan and Monte Carlo baselines, benchmark scenarios and an
episode harness."""

from .strips import (  # noqa: F401
    Atom,
    GroundAction,
    ScenarioSpec,
    WorldState,
    applicable,
    apply,
    atom,
    goal_satisfied,
    ground,
    initial_world,
    parse_scenario,
    serialize_scenario,
)
from .planner import Plan, PlanCache, h_add, plan, plan_bfs_oracle  # noqa: F401
from .pomdp import (  # noqa: F401
    Belief,
    History,
    Observation,
    StepOutcome,
    enumerate_particles,
    expected_history,
    filter_belief,
    most_probable_particle,
    sample_initial_particles,
    simulate_step,
)
from .portal import PortalConfig, PortalSearch, approx, expand_test  # noqa: F401
from .baselines import FFReplanAgent, PomcpAgent, PomcpConfig, rollout_cutoff_depth  # noqa: F401
from .scenarios import (  # noqa: F401
    UncertaintyConfig,
    assign_locations,
    build_elevator,
    build_fig1_micro,
    build_office,
    gen_likelihoods,
)
from .bench import EpisodeConfig, ResultRecord, run_episode, run_sweep, write_results  # noqa: F401

__version__ = "0.1.0"
