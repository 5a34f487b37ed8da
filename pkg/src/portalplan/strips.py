"""Grounded world model: scenario files, action grounding, state transitions.

States are sets of ground atoms over a fixed predicate vocabulary. Everything
here is an immutable value; canonical (lexicographic) ordering of atoms and
actions makes hashing, tie-breaking and replays reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

# predicate name -> arity
PREDICATES: dict[str, int] = {
    "robot-at": 1,
    "item-at": 2,
    "person-at": 2,
    "holding": 1,
    "hand-empty": 0,
    "hidden": 1,
    "revealed": 1,
    "in-box": 2,
    "delivered": 2,
    "checked-in": 1,
}

ENTITY_KINDS = ("item", "box", "person")
CELL_KINDS = ("region", "surface")

PROB_SUM_TOL = 1e-9


class ScenarioError(ValueError):
    """Base class for scenario-file problems."""


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ScenarioSemanticError(ScenarioError):
    pass


class InapplicableActionError(RuntimeError):
    """Raised when apply() is given an action whose preconditions fail.

    This signals an algorithm bug, never a legitimate domain outcome.
    """


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return " ".join((self.predicate,) + self.args)


def atom(predicate: str, *args: str) -> Atom:
    return Atom(predicate, tuple(args))


# Location-bearing predicates: every item holds exactly one of these at a time.
_ITEM_LOCATION_PREDICATES = ("item-at", "holding", "in-box", "delivered")


@dataclass(frozen=True)
class WorldState:
    atoms: frozenset[Atom]

    def __contains__(self, a: Atom) -> bool:
        return a in self.atoms

    def robot_cell(self) -> str:
        for a in self.atoms:
            if a.predicate == "robot-at":
                return a.args[0]
        raise ValueError("state has no robot-at atom")

    def key(self) -> tuple[Atom, ...]:
        """Canonical ordering of the state's atoms, for deterministic ties."""
        return tuple(sorted(self.atoms))


def state_of(atoms: Iterable[Atom]) -> WorldState:
    return WorldState(frozenset(atoms))


@dataclass(frozen=True)
class GroundAction:
    name: str
    params: tuple[str, ...]
    pre: frozenset[Atom]
    add: frozenset[Atom]
    delete: frozenset[Atom]
    cost: int = 1

    def sort_key(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, self.params)

    def __lt__(self, other: "GroundAction") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.params)})"


@dataclass(frozen=True)
class CellDecl:
    name: str
    kind: str  # region | surface


@dataclass(frozen=True)
class EntityDecl:
    name: str
    kind: str  # item | box | person


@dataclass(frozen=True)
class UncertainEntity:
    name: str
    candidates: tuple[tuple[str, float], ...]  # (cell, probability)


@dataclass(frozen=True)
class ScenarioSpec:
    cells: tuple[CellDecl, ...]
    adjacency: tuple[tuple[str, str], ...]  # normalized (min, max) pairs
    entities: tuple[EntityDecl, ...]
    init: frozenset[Atom]
    goal: frozenset[Atom]
    uncertain: tuple[UncertainEntity, ...]

    def cell_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.cells)

    def cell_kind(self, name: str) -> str:
        for c in self.cells:
            if c.name == name:
                return c.kind
        raise KeyError(name)

    def entity(self, name: str) -> EntityDecl:
        for e in self.entities:
            if e.name == name:
                return e
        raise KeyError(name)

    def uncertain_names(self) -> tuple[str, ...]:
        return tuple(u.name for u in self.uncertain)

    def certain_entities(self) -> tuple[EntityDecl, ...]:
        unc = set(self.uncertain_names())
        return tuple(e for e in self.entities if e.name not in unc)

    def neighbors(self, cell: str) -> tuple[str, ...]:
        out = []
        for a, b in self.adjacency:
            if a == cell:
                out.append(b)
            elif b == cell:
                out.append(a)
        return tuple(sorted(out))


def location_predicate(kind: str) -> str:
    return "person-at" if kind == "person" else "item-at"


# ---------------------------------------------------------------------------
# Scenario file parsing / serialization
# ---------------------------------------------------------------------------

_SECTIONS = ("cells", "adjacency", "entities", "init", "goal", "uncertain")


def _tokenize(line: str) -> list[str]:
    return line.split()


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse the line-oriented scenario format into a validated spec.

    Sections: cells, adjacency, entities, init, goal, uncertain. Comments
    start with '#'. See the repository README for the full grammar.
    """
    cells: list[CellDecl] = []
    adjacency: list[tuple[str, str]] = []
    entities: list[EntityDecl] = []
    init: list[Atom] = []
    goal: list[Atom] = []
    uncertain: list[UncertainEntity] = []

    section: str | None = None
    current_unc: tuple[str, list[tuple[str, float]]] | None = None

    def close_uncertain() -> None:
        nonlocal current_unc
        if current_unc is not None:
            name, cands = current_unc
            uncertain.append(UncertainEntity(name, tuple(cands)))
            current_unc = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.endswith(":") and stripped[:-1] in _SECTIONS:
            close_uncertain()
            section = stripped[:-1]
            continue
        if section is None:
            raise ScenarioSyntaxError(f"content before any section header: {stripped!r}", lineno)
        toks = _tokenize(stripped)
        col = len(raw) - len(raw.lstrip()) + 1
        if section == "cells":
            if len(toks) != 2:
                raise ScenarioSyntaxError("expected '<cell> <region|surface>'", lineno, col)
            if toks[1] not in CELL_KINDS:
                raise ScenarioSyntaxError(f"unknown cell kind {toks[1]!r}", lineno, col)
            cells.append(CellDecl(toks[0], toks[1]))
        elif section == "adjacency":
            if len(toks) != 2:
                raise ScenarioSyntaxError("expected '<cell> <cell>'", lineno, col)
            a, b = toks
            if a == b:
                raise ScenarioSyntaxError("cell adjacent to itself", lineno, col)
            adjacency.append((min(a, b), max(a, b)))
        elif section == "entities":
            if len(toks) != 2 or toks[0] not in ENTITY_KINDS:
                raise ScenarioSyntaxError("expected '<item|box|person> <name>'", lineno, col)
            entities.append(EntityDecl(name=toks[1], kind=toks[0]))
        elif section in ("init", "goal"):
            if toks[0] not in PREDICATES:
                raise ScenarioSyntaxError(f"unknown predicate {toks[0]!r}", lineno, col)
            if len(toks) - 1 != PREDICATES[toks[0]]:
                raise ScenarioSyntaxError(
                    f"predicate {toks[0]!r} takes {PREDICATES[toks[0]]} argument(s)", lineno, col
                )
            (init if section == "init" else goal).append(Atom(toks[0], tuple(toks[1:])))
        elif section == "uncertain":
            if len(toks) == 1:
                close_uncertain()
                current_unc = (toks[0], [])
            elif len(toks) == 2:
                if current_unc is None:
                    raise ScenarioSyntaxError("candidate line before an entity line", lineno, col)
                try:
                    prob = float(toks[1])
                except ValueError:
                    raise ScenarioSyntaxError(f"bad probability literal {toks[1]!r}", lineno, col) from None
                current_unc[1].append((toks[0], prob))
            else:
                raise ScenarioSyntaxError("expected '<entity>' or '<cell> <probability>'", lineno, col)
    close_uncertain()

    spec = ScenarioSpec(
        cells=tuple(cells),
        adjacency=tuple(sorted(set(adjacency))),
        entities=tuple(entities),
        init=frozenset(init),
        goal=frozenset(goal),
        uncertain=tuple(uncertain),
    )
    validate_spec(spec)
    return spec


def serialize_scenario(spec: ScenarioSpec) -> str:
    """Emit the scenario file format; parse_scenario() round-trips it."""
    out: list[str] = []
    out.append("cells:")
    for c in spec.cells:
        out.append(f"  {c.name} {c.kind}")
    out.append("adjacency:")
    for a, b in spec.adjacency:
        out.append(f"  {a} {b}")
    out.append("entities:")
    for e in spec.entities:
        out.append(f"  {e.kind} {e.name}")
    out.append("init:")
    for a in sorted(spec.init):
        out.append(f"  {a}")
    out.append("goal:")
    for a in sorted(spec.goal):
        out.append(f"  {a}")
    out.append("uncertain:")
    for u in spec.uncertain:
        out.append(f"  {u.name}")
        for cell, prob in u.candidates:
            out.append(f"    {cell} {prob!r}")
    return "\n".join(out) + "\n"


def validate_spec(spec: ScenarioSpec) -> None:
    cell_names = [c.name for c in spec.cells]
    cell_set = set(cell_names)
    if len(cell_set) != len(cell_names):
        raise ScenarioSemanticError("duplicate cell declaration")
    entity_names = [e.name for e in spec.entities]
    if len(set(entity_names)) != len(entity_names):
        raise ScenarioSemanticError("duplicate entity declaration")
    if cell_set & set(entity_names):
        raise ScenarioSemanticError("cell and entity share a name")
    for a, b in spec.adjacency:
        for c in (a, b):
            if c not in cell_set:
                raise ScenarioSemanticError(f"adjacency references unknown cell {c!r}")
    entity_kind = {e.name: e.kind for e in spec.entities}
    for section, atoms in (("init", spec.init), ("goal", spec.goal)):
        for a in atoms:
            _check_atom_vocabulary(a, cell_set, entity_kind, section)
    unc_names = [u.name for u in spec.uncertain]
    if len(set(unc_names)) != len(unc_names):
        raise ScenarioSemanticError("entity listed twice in uncertain section")
    init_located = {a.args[0] for a in spec.init if a.predicate in ("item-at", "person-at")}
    for u in spec.uncertain:
        if u.name not in entity_kind:
            raise ScenarioSemanticError(f"uncertain entry for undeclared entity {u.name!r}")
        if u.name in init_located:
            raise ScenarioSemanticError(f"entity {u.name!r} is both located in init and uncertain")
        if not u.candidates:
            raise ScenarioSemanticError(f"uncertain entity {u.name!r} has no candidate locations")
        seen_cells = set()
        for cell, prob in u.candidates:
            if cell not in cell_set:
                raise ScenarioSemanticError(f"candidate cell {cell!r} for {u.name!r} is undeclared")
            if cell in seen_cells:
                raise ScenarioSemanticError(f"duplicate candidate cell {cell!r} for {u.name!r}")
            seen_cells.add(cell)
            if prob <= 0.0:
                raise ScenarioSemanticError(f"non-positive probability for {u.name!r} at {cell!r}")
        total = sum(p for _, p in u.candidates)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ScenarioSemanticError(
                f"candidate probabilities for {u.name!r} sum to {total!r}, not 1"
            )
    for e in spec.entities:
        if e.name in init_located or e.name in set(unc_names):
            continue
        raise ScenarioSemanticError(f"entity {e.name!r} has no init location and is not uncertain")
    robots = [a for a in spec.init if a.predicate == "robot-at"]
    if len(robots) != 1:
        raise ScenarioSemanticError(f"init must contain exactly one robot-at atom, found {len(robots)}")
    if robots[0].args[0] not in cell_set:
        raise ScenarioSemanticError(f"robot-at references unknown cell {robots[0].args[0]!r}")


def _check_atom_vocabulary(a: Atom, cells: set[str], entity_kind: dict[str, str], where: str) -> None:
    if a.predicate not in PREDICATES:
        raise ScenarioSemanticError(f"{where}: unknown predicate {a.predicate!r}")
    if len(a.args) != PREDICATES[a.predicate]:
        raise ScenarioSemanticError(f"{where}: wrong arity for {a.predicate!r}")
    checks = {
        "robot-at": ("cell",),
        "item-at": ("item", "cell"),
        "person-at": ("person", "cell"),
        "holding": ("item",),
        "hand-empty": (),
        "hidden": ("entity",),
        "revealed": ("entity",),
        "in-box": ("item", "boxkind"),
        "delivered": ("item", "person"),
        "checked-in": ("person",),
    }[a.predicate]
    for arg, want in zip(a.args, checks):
        kind = entity_kind.get(arg)
        if want == "cell" and arg not in cells:
            raise ScenarioSemanticError(f"{where}: {arg!r} is not a declared cell in {a}")
        elif want == "item" and kind not in ("item", "box"):
            raise ScenarioSemanticError(f"{where}: {arg!r} is not a declared item in {a}")
        elif want == "person" and kind != "person":
            raise ScenarioSemanticError(f"{where}: {arg!r} is not a declared person in {a}")
        elif want == "entity" and kind is None:
            raise ScenarioSemanticError(f"{where}: {arg!r} is not a declared entity in {a}")
        elif want == "boxkind" and kind != "box":
            raise ScenarioSemanticError(f"{where}: {arg!r} is not a declared box in {a}")


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

def ground(spec: ScenarioSpec) -> tuple[GroundAction, ...]:
    """Ground the seven action schemas against a scenario.

    move is grounded over adjacent cell pairs only; search over each uncertain
    entity's candidate cells; give/checkin over each person's possible cells.
    The result is sorted canonically and identical for identical specs.
    """
    actions: list[GroundAction] = []
    cells = spec.cell_names()
    items = [e.name for e in spec.entities if e.kind in ("item", "box")]
    boxes = [e.name for e in spec.entities if e.kind == "box"]
    people = [e.name for e in spec.entities if e.kind == "person"]
    unc = {u.name: u for u in spec.uncertain}

    def possible_cells(name: str) -> list[str]:
        if name in unc:
            return [c for c, _ in unc[name].candidates]
        pred = location_predicate(spec.entity(name).kind)
        return [a.args[1] for a in spec.init if a.predicate == pred and a.args[0] == name]

    for a, b in spec.adjacency:
        for c1, c2 in ((a, b), (b, a)):
            actions.append(GroundAction(
                "move", (c1, c2),
                pre=frozenset({atom("robot-at", c1)}),
                add=frozenset({atom("robot-at", c2)}),
                delete=frozenset({atom("robot-at", c1)}),
            ))
    for u in spec.uncertain:
        kind = spec.entity(u.name).kind
        loc = location_predicate(kind)
        for cell, _prob in u.candidates:
            actions.append(GroundAction(
                "search", (u.name, cell),
                pre=frozenset({atom("robot-at", cell), Atom(loc, (u.name, cell)), atom("hidden", u.name)}),
                add=frozenset({atom("revealed", u.name)}),
                delete=frozenset({atom("hidden", u.name)}),
            ))
    for i in items:
        for c in cells:
            actions.append(GroundAction(
                "pick", (i, c),
                pre=frozenset({atom("robot-at", c), atom("item-at", i, c),
                               atom("revealed", i), atom("hand-empty")}),
                add=frozenset({atom("holding", i)}),
                delete=frozenset({atom("item-at", i, c), atom("hand-empty")}),
            ))
            actions.append(GroundAction(
                "place", (i, c),
                pre=frozenset({atom("robot-at", c), atom("holding", i)}),
                add=frozenset({atom("item-at", i, c), atom("hand-empty")}),
                delete=frozenset({atom("holding", i)}),
            ))
    for i in items:
        for b in boxes:
            if i == b:
                continue
            for c in cells:
                actions.append(GroundAction(
                    "put-in", (i, b, c),
                    pre=frozenset({atom("robot-at", c), atom("holding", i),
                                   atom("item-at", b, c), atom("revealed", b)}),
                    add=frozenset({atom("in-box", i, b), atom("hand-empty")}),
                    delete=frozenset({atom("holding", i)}),
                ))
    for i in items:
        for p in people:
            for c in possible_cells(p):
                actions.append(GroundAction(
                    "give", (i, p, c),
                    pre=frozenset({atom("robot-at", c), atom("holding", i),
                                   atom("person-at", p, c), atom("revealed", p)}),
                    add=frozenset({atom("delivered", i, p), atom("hand-empty")}),
                    delete=frozenset({atom("holding", i)}),
                ))
    for p in people:
        for c in possible_cells(p):
            actions.append(GroundAction(
                "checkin", (p, c),
                pre=frozenset({atom("robot-at", c), atom("person-at", p, c), atom("revealed", p)}),
                add=frozenset({atom("checked-in", p)}),
                delete=frozenset(),
            ))
    actions.sort()
    return tuple(actions)


# ---------------------------------------------------------------------------
# Transition semantics
# ---------------------------------------------------------------------------

def applicable(state: WorldState, action: GroundAction) -> bool:
    return action.pre <= state.atoms


def apply(state: WorldState, action: GroundAction) -> WorldState:
    if not applicable(state, action):
        missing = sorted(action.pre - state.atoms)
        raise InapplicableActionError(f"{action} inapplicable; missing {[str(m) for m in missing]}")
    return WorldState((state.atoms - action.delete) | action.add)


def goal_satisfied(state: WorldState, goal: frozenset[Atom]) -> bool:
    return goal <= state.atoms


# ---------------------------------------------------------------------------
# Initial worlds
# ---------------------------------------------------------------------------

def initial_world(spec: ScenarioSpec, assignment: Mapping[str, str]) -> WorldState:
    """Build the true world for one assignment of uncertain entities to cells.

    Certain entities start revealed; uncertain ones start hidden at their
    assigned cell. hand-empty is implied unless init holds something.
    """
    atoms = set(spec.init)
    if not any(a.predicate == "holding" for a in atoms):
        atoms.add(atom("hand-empty"))
    unc = set(spec.uncertain_names())
    for e in spec.entities:
        if e.name in unc:
            cell = assignment[e.name]
            atoms.add(Atom(location_predicate(e.kind), (e.name, cell)))
            atoms.add(atom("hidden", e.name))
        else:
            atoms.add(atom("revealed", e.name))
    state = WorldState(frozenset(atoms))
    check_state_invariants(state, spec)
    return state


def check_state_invariants(state: WorldState, spec: ScenarioSpec | None = None) -> None:
    """Raise ValueError if structural world-state invariants are violated."""
    robots = [a for a in state.atoms if a.predicate == "robot-at"]
    if len(robots) != 1:
        raise ValueError(f"expected exactly one robot-at, found {len(robots)}")
    holding = [a for a in state.atoms if a.predicate == "holding"]
    if len(holding) > 1:
        raise ValueError("more than one item held")
    if holding and atom("hand-empty") in state.atoms:
        raise ValueError("holding and hand-empty both present")
    if not holding and atom("hand-empty") not in state.atoms:
        raise ValueError("neither holding nor hand-empty present")
    hidden = {a.args[0] for a in state.atoms if a.predicate == "hidden"}
    revealed = {a.args[0] for a in state.atoms if a.predicate == "revealed"}
    both = hidden & revealed
    if both:
        raise ValueError(f"entities both hidden and revealed: {sorted(both)}")
    if spec is not None:
        for e in spec.entities:
            if e.kind == "person":
                locs = [a for a in state.atoms if a.predicate == "person-at" and a.args[0] == e.name]
                if len(locs) != 1:
                    raise ValueError(f"person {e.name!r} has {len(locs)} locations")
            else:
                locs = [a for a in state.atoms
                        if a.predicate in _ITEM_LOCATION_PREDICATES and a.args[0] == e.name]
                if len(locs) != 1:
                    raise ValueError(
                        f"item {e.name!r} has {len(locs)} location-bearing atoms: "
                        f"{[str(x) for x in locs]}"
                    )
