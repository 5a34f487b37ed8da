"""Benchmark scenario builders and the seeded uncertainty generator.

Two benchmark domains ship with the package: an office (42 region cells, 29
surface cells, rooms along a hallway spine) and a two-floor elevator building
(two 5x4 floors plus a 10-cell shaft). Both are fixed topologies; only entity
candidate locations and likelihoods vary, driven by an UncertaintyConfig.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from random import Random

from .strips import (
    Atom,
    CellDecl,
    EntityDecl,
    ScenarioSpec,
    UncertainEntity,
    atom,
    parse_scenario,
    serialize_scenario,
    validate_spec,
)
from .util import derived_rng

LIKELIHOOD_KINDS = ("uniform", "decay75", "decay50")

_DECAY_RATIO = {"decay75": Fraction(3, 4), "decay50": Fraction(1, 2)}


@dataclass(frozen=True)
class UncertaintyConfig:
    amount: int  # candidate locations per uncertain entity
    likelihood: str  # uniform | decay75 | decay50
    seed: int

    def __post_init__(self) -> None:
        if self.amount < 1:
            raise ValueError("amount must be >= 1")
        if self.likelihood not in LIKELIHOOD_KINDS:
            raise ValueError(f"unknown likelihood kind {self.likelihood!r}")


def gen_likelihoods(n: int, kind: str) -> list[Fraction]:
    """Nondecreasing probabilities over n candidate slots, summing to 1.

    Uniform slots are exactly equal. For decay-r each slot carries r times
    the probability of the next one, built rationally so the ratio is exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "uniform":
        return [Fraction(1, n)] * n
    ratio = _DECAY_RATIO[kind]
    weights = [ratio ** (n - 1 - i) for i in range(n)]
    total = sum(weights)
    return [w / total for w in weights]


def assign_locations(spec: ScenarioSpec, uc: UncertaintyConfig, rng: Random | None = None,
                     *, item_cells: list[str] | None = None,
                     person_cells: list[str] | None = None) -> ScenarioSpec:
    """Attach candidate locations to every unlocated entity of the spec.

    Each entity independently gets `uc.amount` distinct cells drawn uniformly
    without replacement from its eligible cells (entities may share cells),
    paired with gen_likelihoods probabilities in ascending order.
    """
    if rng is None:
        rng = derived_rng(uc.seed, "locations")
    if item_cells is None:
        item_cells = [c.name for c in spec.cells]
    if person_cells is None:
        person_cells = [c.name for c in spec.cells if c.kind == "region"]
    located = {a.args[0] for a in spec.init if a.predicate in ("item-at", "person-at")}
    probs = [float(p) for p in gen_likelihoods(uc.amount, uc.likelihood)]
    uncertain = []
    for e in spec.entities:
        if e.name in located:
            continue
        eligible = person_cells if e.kind == "person" else item_cells
        if uc.amount > len(eligible):
            raise ValueError(
                f"amount {uc.amount} exceeds {len(eligible)} eligible cells for {e.name!r}"
            )
        cells = rng.sample(eligible, uc.amount)
        uncertain.append(UncertainEntity(e.name, tuple(zip(cells, probs))))
    out = ScenarioSpec(
        cells=spec.cells,
        adjacency=spec.adjacency,
        entities=spec.entities,
        init=spec.init,
        goal=spec.goal,
        uncertain=tuple(uncertain),
    )
    validate_spec(out)
    return out


# ---------------------------------------------------------------------------
# Office
# ---------------------------------------------------------------------------

OFFICE_REGION_CELLS = 42
OFFICE_SURFACE_CELLS = 29
_OFFICE_HALL_LEN = 12
_OFFICE_ROOM_SIZES = (5, 5, 5, 5, 5, 5)  # region cells per room
_OFFICE_TABLE_COUNTS = (5, 5, 5, 5, 5, 4)  # surface cells per room


def office_base() -> ScenarioSpec:
    """Fixed office topology: six rooms hanging off a hallway spine."""
    cells: list[CellDecl] = []
    adjacency: list[tuple[str, str]] = []

    halls = [f"hall-{i}" for i in range(1, _OFFICE_HALL_LEN + 1)]
    for h in halls:
        cells.append(CellDecl(h, "region"))
    for a, b in zip(halls, halls[1:]):
        adjacency.append((a, b))
    for ri, size in enumerate(_OFFICE_ROOM_SIZES, start=1):
        names = [f"room{ri}-{j}" for j in range(1, size + 1)]
        for n in names:
            cells.append(CellDecl(n, "region"))
        adjacency.append((f"hall-{2 * ri}", names[0]))
        for a, b in zip(names, names[1:]):
            adjacency.append((a, b))
        for j in range(1, _OFFICE_TABLE_COUNTS[ri - 1] + 1):
            t = f"table{ri}-{j}"
            cells.append(CellDecl(t, "surface"))
            adjacency.append((f"room{ri}-{j}", t))

    spec = ScenarioSpec(
        cells=tuple(cells),
        adjacency=tuple(sorted({(min(a, b), max(a, b)) for a, b in adjacency})),
        entities=(EntityDecl("cake", "item"), EntityDecl("cube", "item"),
                  EntityDecl("box", "box")),
        init=frozenset({atom("robot-at", "hall-1")}),
        goal=frozenset({atom("in-box", "cake", "box"), atom("in-box", "cube", "box"),
                        atom("hand-empty")}),
        uncertain=(),
    )
    return spec


def build_office(uc: UncertaintyConfig) -> ScenarioSpec:
    """Office benchmark: put cake and cube into the box; all three uncertain."""
    return assign_locations(office_base(), uc)


# ---------------------------------------------------------------------------
# Elevator
# ---------------------------------------------------------------------------

ELEVATOR_FLOOR_ROWS = 4
ELEVATOR_FLOOR_COLS = 5
ELEVATOR_SHAFT_CELLS = 10
ELEVATOR_TABLES_PER_FLOOR = 10


def _floor_cell(f: int, r: int, c: int) -> str:
    return f"f{f}-r{r}c{c}"


def elevator_base() -> ScenarioSpec:
    """Two identical 5x4 floors joined by a 10-cell elevator shaft.

    The shaft hangs between the lower-middle cells of the floors, so changing
    floors costs 10 consecutive shaft-bound moves plus the exit move. Tables
    sit on a checkerboard, each reachable from a single floor cell.
    """
    cells: list[CellDecl] = []
    adjacency: list[tuple[str, str]] = []
    for f in (1, 2):
        for r in range(ELEVATOR_FLOOR_ROWS):
            for c in range(ELEVATOR_FLOOR_COLS):
                cells.append(CellDecl(_floor_cell(f, r, c), "region"))
        for r in range(ELEVATOR_FLOOR_ROWS):
            for c in range(ELEVATOR_FLOOR_COLS):
                if r + 1 < ELEVATOR_FLOOR_ROWS:
                    adjacency.append((_floor_cell(f, r, c), _floor_cell(f, r + 1, c)))
                if c + 1 < ELEVATOR_FLOOR_COLS:
                    adjacency.append((_floor_cell(f, r, c), _floor_cell(f, r, c + 1)))
        for r in range(ELEVATOR_FLOOR_ROWS):
            for c in range(ELEVATOR_FLOOR_COLS):
                if (r + c) % 2 == 1:
                    t = f"table-f{f}-r{r}c{c}"
                    cells.append(CellDecl(t, "surface"))
                    adjacency.append((_floor_cell(f, r, c), t))
    shaft = [f"shaft-{i}" for i in range(1, ELEVATOR_SHAFT_CELLS + 1)]
    for s in shaft:
        cells.append(CellDecl(s, "region"))
    for a, b in zip(shaft, shaft[1:]):
        adjacency.append((a, b))
    adjacency.append((_floor_cell(1, 0, 2), shaft[0]))
    adjacency.append((shaft[-1], _floor_cell(2, 0, 2)))

    return ScenarioSpec(
        cells=tuple(cells),
        adjacency=tuple(sorted({(min(a, b), max(a, b)) for a, b in adjacency})),
        entities=(EntityDecl("delivery", "item"), EntityDecl("recipient", "person"),
                  EntityDecl("staff", "person")),
        init=frozenset({atom("robot-at", _floor_cell(1, 0, 2))}),
        goal=frozenset({atom("delivered", "delivery", "recipient"),
                        atom("checked-in", "staff")}),
        uncertain=(),
    )


def build_elevator(uc: UncertaintyConfig) -> ScenarioSpec:
    """Elevator benchmark: fetch the delivery, hand it over, check in.

    Items can sit on tables or floor cells, people stand on floor cells; the
    shaft interior is not an eligible location for either.
    """
    base = elevator_base()
    floor_cells = [c.name for c in base.cells if c.kind == "region" and not c.name.startswith("shaft")]
    surface_cells = [c.name for c in base.cells if c.kind == "surface"]
    return assign_locations(base, uc, item_cells=floor_cells + surface_cells,
                            person_cells=floor_cells)


# ---------------------------------------------------------------------------
# Micro scenario
# ---------------------------------------------------------------------------

def micro_scenario_text() -> str:
    return resources.files("portalplan.data").joinpath("micro.scenario").read_text()


def build_fig1_micro() -> ScenarioSpec:
    """The shipped one-item micro scenario (cup 20% kitchen / 80% bathroom)."""
    return parse_scenario(micro_scenario_text())


def emit_scenario(spec: ScenarioSpec) -> str:
    """Scenario file text for a built spec; parse_scenario round-trips it."""
    return serialize_scenario(spec)
