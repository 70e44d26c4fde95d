"""Static road-network model.

A network is a set of intersections connected by directed roads, each road
carrying three lanes (left / straight / right by the turn they feed at the
downstream stop line).  Every intersection has four approaches (W, E, N, S),
twelve traffic movements (approach x turn) and four signal phases pairing
the non-conflicting straight and left movements; right turns are permitted
at all times.

Everything here is immutable after construction and safe to share between
concurrently running simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

__all__ = [
    "Turn",
    "APPROACHES",
    "TURNS",
    "Lane",
    "Road",
    "Movement",
    "Phase",
    "Intersection",
    "RoadNetwork",
    "lane_capacity",
    "standard_phase_table",
    "build_grid",
    "validate",
    "turn_between",
    "resolve_route",
]


class Turn(str, Enum):
    LEFT = "left"
    STRAIGHT = "straight"
    RIGHT = "right"


#: Canonical approach order used for observations, movements and telemetry.
APPROACHES = ("W", "E", "N", "S")
TURNS = (Turn.LEFT, Turn.STRAIGHT, Turn.RIGHT)

# Compass heading of travel -> approach label at the downstream intersection
# (traffic heading east arrives on the intersection's west approach).
_HEADING_TO_APPROACH = {"E": "W", "W": "E", "S": "N", "N": "S"}

# heading after turning left / right from a given heading of travel
_LEFT_OF = {"E": "N", "N": "W", "W": "S", "S": "E"}
_RIGHT_OF = {"E": "S", "S": "W", "W": "N", "N": "E"}


@dataclass(frozen=True)
class Lane:
    """One directed lane: identifier, geometry and vehicle capacity."""

    id: str
    length: float  # meters
    max_speed: float  # m/s
    capacity: int  # vehicles that fit when fully queued

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError(f"lane {self.id}: length must be > 0")
        if self.capacity < 1:
            raise ValueError(f"lane {self.id}: capacity must be >= 1")


@dataclass(frozen=True)
class Road:
    """Directed road between two nodes, carrying three lanes.

    ``heading`` is the compass direction of travel; ``lane_ids`` are ordered
    (left, straight, right) by the turn each lane feeds downstream.
    """

    id: str
    start: str
    end: str
    heading: str  # one of N/S/E/W
    length: float
    max_speed: float
    lane_ids: tuple[str, str, str]

    def lane_for_turn(self, turn: Turn) -> str:
        return self.lane_ids[TURNS.index(turn)]


@dataclass(frozen=True)
class Movement:
    """A route through an intersection from one lane to another."""

    id: str
    in_lane: str
    out_lane: str
    turn: Turn


@dataclass(frozen=True)
class Phase:
    """A set of non-conflicting movements granted green together."""

    id: int
    movements: tuple[str, ...]


@dataclass(frozen=True)
class Intersection:
    """Signalized junction: 12 in/out lanes, 12 movements, 4 phases.

    ``incoming_lanes`` / ``outgoing_lanes`` and ``movements`` follow the
    canonical order (W, E, N, S) x (left, straight, right).  ``always_green``
    holds the four right-turn movement ids.
    """

    id: str
    incoming_lanes: tuple[str, ...]
    outgoing_lanes: tuple[str, ...]
    movements: tuple[Movement, ...]
    phases: tuple[Phase, ...]
    always_green: frozenset[str]

    def movement(self, movement_id: str) -> Movement:
        for m in self.movements:
            if m.id == movement_id:
                return m
        raise KeyError(movement_id)


@dataclass
class RoadNetwork:
    """Registry of intersections, roads and lanes plus boundary hookups."""

    intersections: list[Intersection] = field(default_factory=list)
    roads: dict[str, Road] = field(default_factory=dict)
    lanes: dict[str, Lane] = field(default_factory=dict)
    boundary_entries: list[tuple[str, str]] = field(default_factory=list)  # (lane, side)
    boundary_exits: list[str] = field(default_factory=list)  # lane ids
    grid_shape: Optional[tuple[int, int]] = None  # (rows, cols) when grid-built
    node_positions: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._by_id = {i.id: i for i in self.intersections}
        self._movements = {
            m.id: m for i in self.intersections for m in i.movements
        }
        # downstream intersection of each lane (None for boundary-exit lanes)
        self._lane_end: dict[str, Optional[str]] = {}
        for road in self.roads.values():
            end = road.end if road.end in self._by_id else None
            for lane_id in road.lane_ids:
                self._lane_end[lane_id] = end
        self._lane_road = {
            lane_id: road for road in self.roads.values() for lane_id in road.lane_ids
        }

    def intersection(self, intersection_id: str) -> Intersection:
        return self._by_id[intersection_id]

    def movement(self, movement_id: str) -> Movement:
        return self._movements[movement_id]

    def lane_downstream(self, lane_id: str) -> Optional[str]:
        """Intersection the lane feeds, or None for a boundary-exit lane."""
        return self._lane_end[lane_id]

    def road_of_lane(self, lane_id: str) -> Road:
        return self._lane_road[lane_id]

    @property
    def entry_roads(self) -> list[tuple[str, str]]:
        """Distinct (road id, side) pairs among the boundary entries."""
        seen: list[tuple[str, str]] = []
        for lane_id, side in self.boundary_entries:
            pair = (self.road_of_lane(lane_id).id, side)
            if pair not in seen:
                seen.append(pair)
        return seen


def lane_capacity(length: float, l_v: float, l_g: float) -> int:
    """Vehicles of length ``l_v`` with minimum gap ``l_g`` that fit on ``length``."""
    if length <= 0 or l_v <= 0 or l_g <= 0:
        raise ValueError("lane length, vehicle length and gap must all be > 0")
    # tolerant floor: exact ratios like 300 / 7.5 must not fall prey to float dust
    return int(math.floor(length / (l_v + l_g) + 1e-9))


def standard_phase_table() -> tuple[tuple[tuple[str, Turn], ...], ...]:
    """The four-phase scheme as (approach, turn) pairs.

    Phase 0 pairs the opposing W/E straights, phase 1 the N/S straights,
    phase 2 the W/E lefts, phase 3 the N/S lefts.  Right turns are excluded
    because they are permitted at all times.
    """
    return (
        (("W", Turn.STRAIGHT), ("E", Turn.STRAIGHT)),
        (("N", Turn.STRAIGHT), ("S", Turn.STRAIGHT)),
        (("W", Turn.LEFT), ("E", Turn.LEFT)),
        (("N", Turn.LEFT), ("S", Turn.LEFT)),
    )


def turn_between(heading_in: str, heading_out: str) -> Turn:
    """Turn type implied by the headings before and after an intersection."""
    if heading_in == heading_out:
        return Turn.STRAIGHT
    if _LEFT_OF[heading_in] == heading_out:
        return Turn.LEFT
    if _RIGHT_OF[heading_in] == heading_out:
        return Turn.RIGHT
    raise ValueError(f"no movement from heading {heading_in} to {heading_out}")


def _movement_id(intersection_id: str, approach: str, turn: Turn) -> str:
    return f"{intersection_id}:{approach}:{turn.value}"


def _make_intersection(
    intersection_id: str,
    incoming: dict[str, Road],
    outgoing: dict[str, Road],
) -> Intersection:
    """Assemble movements and phases for one junction.

    ``incoming`` / ``outgoing`` map approach labels (W/E/N/S) to the road
    arriving from, respectively leaving toward, that side.
    """
    in_lanes: list[str] = []
    out_lanes: list[str] = []
    movements: list[Movement] = []
    for approach in APPROACHES:
        road_in = incoming[approach]
        heading = road_in.heading
        for turn in TURNS:
            if turn is Turn.STRAIGHT:
                heading_out = heading
            elif turn is Turn.LEFT:
                heading_out = _LEFT_OF[heading]
            else:
                heading_out = _RIGHT_OF[heading]
            road_out = outgoing[heading_out]
            movements.append(
                Movement(
                    id=_movement_id(intersection_id, approach, turn),
                    in_lane=road_in.lane_for_turn(turn),
                    out_lane=road_out.lane_for_turn(turn),
                    turn=turn,
                )
            )
        in_lanes.extend(road_in.lane_ids)
    for approach in APPROACHES:
        out_lanes.extend(outgoing[approach].lane_ids)

    phases = tuple(
        Phase(
            id=k,
            movements=tuple(
                _movement_id(intersection_id, approach, turn) for approach, turn in pair
            ),
        )
        for k, pair in enumerate(standard_phase_table())
    )
    always_green = frozenset(
        m.id for m in movements if m.turn is Turn.RIGHT
    )
    return Intersection(
        id=intersection_id,
        incoming_lanes=tuple(in_lanes),
        outgoing_lanes=tuple(out_lanes),
        movements=tuple(movements),
        phases=phases,
        always_green=always_green,
    )


def build_grid(
    rows: int,
    cols: int,
    we_length: float,
    ns_length: float,
    l_v: float = 5.0,
    l_g: float = 2.5,
    max_speed: float = 40.0 / 3.6,
) -> RoadNetwork:
    """Build a rows x cols signalized grid.

    Horizontal (WE-direction) road segments are ``we_length`` meters long,
    vertical (NS-direction) segments ``ns_length``.  Every road carries three
    lanes whose capacity comes from :func:`lane_capacity`.  Boundary nodes on
    all four sides provide entry and exit roads.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least 1 row and 1 column")
    if we_length <= 0 or ns_length <= 0:
        raise ValueError("lane lengths must be > 0")

    roads: dict[str, Road] = {}
    lanes: dict[str, Lane] = {}
    positions: dict[str, tuple[float, float]] = {}

    def node(r: int, c: int) -> str:
        if 0 <= r < rows and 0 <= c < cols:
            return f"i_{r}_{c}"
        if c < 0:
            return f"b_w_{r}"
        if c >= cols:
            return f"b_e_{r}"
        if r < 0:
            return f"b_n_{c}"
        return f"b_s_{c}"

    for r in range(-1, rows + 1):
        for c in range(-1, cols + 1):
            corner = (r in (-1, rows)) and (c in (-1, cols))
            if not corner:
                positions[node(r, c)] = (c * we_length, -r * ns_length)

    def add_road(frm: str, to: str, heading: str, length: float) -> Road:
        road_id = f"rd__{frm}__{to}"
        lane_ids = tuple(f"{road_id}_{i}" for i in range(3))
        road = Road(
            id=road_id,
            start=frm,
            end=to,
            heading=heading,
            length=length,
            max_speed=max_speed,
            lane_ids=lane_ids,  # type: ignore[arg-type]
        )
        roads[road_id] = road
        cap = lane_capacity(length, l_v, l_g)
        for lane_id in lane_ids:
            lanes[lane_id] = Lane(
                id=lane_id, length=length, max_speed=max_speed, capacity=cap
            )
        return road

    # horizontal segments (both directions) incl. boundary stubs
    for r in range(rows):
        for c in range(-1, cols):
            a, b = node(r, c), node(r, c + 1)
            add_road(a, b, "E", we_length)
            add_road(b, a, "W", we_length)
    # vertical segments; heading "S" goes from smaller to larger row index
    for c in range(cols):
        for r in range(-1, rows):
            a, b = node(r, c), node(r + 1, c)
            add_road(a, b, "S", ns_length)
            add_road(b, a, "N", ns_length)

    def road_between(frm: str, to: str) -> Road:
        return roads[f"rd__{frm}__{to}"]

    intersections: list[Intersection] = []
    for r in range(rows):
        for c in range(cols):
            here = node(r, c)
            incoming = {
                "W": road_between(node(r, c - 1), here),
                "E": road_between(node(r, c + 1), here),
                "N": road_between(node(r - 1, c), here),
                "S": road_between(node(r + 1, c), here),
            }
            outgoing = {
                "W": road_between(here, node(r, c - 1)),
                "E": road_between(here, node(r, c + 1)),
                "N": road_between(here, node(r - 1, c)),
                "S": road_between(here, node(r + 1, c)),
            }
            intersections.append(_make_intersection(here, incoming, outgoing))

    entries: list[tuple[str, str]] = []
    exits: list[str] = []
    intersection_ids = {i.id for i in intersections}
    for road in roads.values():
        if road.start not in intersection_ids:
            side = road.start.split("_")[1]  # b_<side>_<k>
            entries.extend((lane_id, side) for lane_id in road.lane_ids)
        if road.end not in intersection_ids:
            exits.extend(road.lane_ids)

    return RoadNetwork(
        intersections=intersections,
        roads=roads,
        lanes=lanes,
        boundary_entries=entries,
        boundary_exits=exits,
        grid_shape=(rows, cols),
        node_positions=positions,
    )


def resolve_route(net: RoadNetwork, road_ids: list[str] | tuple[str, ...]) -> tuple[str, list[Movement]]:
    """Turn a road sequence into (entry lane, movement chain).

    The route must start on a boundary-entry road, end on a boundary-exit
    road, and consecutive roads must meet at a real intersection.  The entry
    lane is the lane of the first road that feeds the first movement's turn
    (the straight lane for a single-road route).
    """
    if not road_ids:
        raise ValueError("route is empty")
    for road_id in road_ids:
        if road_id not in net.roads:
            raise KeyError(f"route references unknown road {road_id!r}")
    roads = [net.roads[r] for r in road_ids]
    intersection_ids = {i.id for i in net.intersections}
    if roads[-1].end in intersection_ids:
        raise ValueError(
            f"route must end at a boundary exit, but road {roads[-1].id} ends at {roads[-1].end}"
        )
    movements: list[Movement] = []
    for here, nxt in zip(roads, roads[1:]):
        if here.end != nxt.start:
            raise ValueError(f"roads {here.id} and {nxt.id} are not connected")
        if here.end not in intersection_ids:
            raise ValueError(f"route passes through non-intersection node {here.end}")
        turn = turn_between(here.heading, nxt.heading)
        approach = _HEADING_TO_APPROACH[here.heading]
        movements.append(net.intersection(here.end).movement(_movement_id(here.end, approach, turn)))
    if movements:
        entry_lane = movements[0].in_lane
    else:
        entry_lane = roads[0].lane_for_turn(Turn.STRAIGHT)
    return entry_lane, movements


def validate(net: RoadNetwork) -> list[str]:
    """Check every structural invariant; returns all violations found.

    An empty list means the network is well formed.  Violations are data,
    not exceptions: callers decide whether to fault.
    """
    problems: list[str] = []
    table = standard_phase_table()
    covered_by_phases = {
        (approach, turn) for pair in table for approach, turn in pair
    }

    for lane_id, lane in net.lanes.items():
        if lane.id != lane_id:
            problems.append(f"lane {lane_id}: registry key mismatch")

    for inter in net.intersections:
        prefix = f"intersection {inter.id}"
        if len(inter.movements) != 12:
            problems.append(f"{prefix}: movement count != 12")
        if len(inter.phases) != 4:
            problems.append(f"{prefix}: phase count != 4")
        if len(inter.incoming_lanes) != 12 or len(inter.outgoing_lanes) != 12:
            problems.append(f"{prefix}: lane bundle size != 12")

        seen_pairs = set()
        movement_ids = set()
        for m in inter.movements:
            movement_ids.add(m.id)
            if m.in_lane == m.out_lane:
                problems.append(f"{prefix}: movement {m.id} loops onto its own lane")
            for lane_id in (m.in_lane, m.out_lane):
                if lane_id not in net.lanes:
                    problems.append(
                        f"{prefix}: movement {m.id} dangling lane reference {lane_id}"
                    )
            key = (m.in_lane, m.turn)
            if key in seen_pairs:
                problems.append(f"{prefix}: duplicate (in_lane, turn) {key}")
            seen_pairs.add(key)

        rights = {m.id for m in inter.movements if m.turn is Turn.RIGHT}
        if inter.always_green != rights:
            problems.append(f"{prefix}: always_green is not the 4 right turns")

        in_phase: list[str] = []
        for phase in inter.phases:
            if len(phase.movements) != 2:
                problems.append(f"{prefix} phase {phase.id}: movement count != 2")
                continue
            members = []
            for mid in phase.movements:
                if mid not in movement_ids:
                    problems.append(
                        f"{prefix} phase {phase.id}: unknown movement {mid}"
                    )
                else:
                    members.append(inter.movement(mid))
            if len(members) == 2:
                a, b = members
                if Turn.RIGHT in (a.turn, b.turn):
                    problems.append(
                        f"{prefix} phase {phase.id}: contains a right turn"
                    )
                elif a.turn != b.turn:
                    problems.append(
                        f"{prefix} phase {phase.id}: conflicting movement pair"
                    )
                else:
                    # non-conflicting = same turn type from opposing approaches
                    appr = {m.id.split(":")[1] for m in members}
                    if appr not in ({"W", "E"}, {"N", "S"}):
                        problems.append(
                            f"{prefix} phase {phase.id}: conflicting movement pair"
                        )
            in_phase.extend(phase.movements)
        non_right = {m.id for m in inter.movements if m.turn is not Turn.RIGHT}
        if len(in_phase) == 8 and (set(in_phase) != non_right or len(set(in_phase)) != 8):
            problems.append(f"{prefix}: phases do not partition the 8 controlled movements")

    # boundary / connectivity checks
    for lane_id, side in net.boundary_entries:
        if lane_id not in net.lanes:
            problems.append(f"boundary entry {lane_id}: unknown lane")
        if side not in ("w", "e", "n", "s"):
            problems.append(f"boundary entry {lane_id}: bad side {side!r}")
    for lane_id in net.boundary_exits:
        if lane_id not in net.lanes:
            problems.append(f"boundary exit {lane_id}: unknown lane")

    in_lanes_used: dict[str, set[str]] = {}
    out_lanes_used: dict[str, set[str]] = {}
    for inter in net.intersections:
        for m in inter.movements:
            in_lanes_used.setdefault(m.in_lane, set()).add(inter.id)
            out_lanes_used.setdefault(m.out_lane, set()).add(inter.id)
    entry_lanes = {lane_id for lane_id, _ in net.boundary_entries}
    exit_lanes = set(net.boundary_exits)
    for lane_id in net.lanes:
        consumers = in_lanes_used.get(lane_id, set())
        producers = out_lanes_used.get(lane_id, set())
        if len(consumers) > 1:
            problems.append(f"lane {lane_id}: feeds more than one intersection")
        if len(producers) > 1:
            problems.append(f"lane {lane_id}: fed by more than one intersection")
        if not consumers and lane_id not in exit_lanes:
            problems.append(f"lane {lane_id}: dead end (no downstream, not an exit)")
        if not producers and lane_id not in entry_lanes:
            problems.append(f"lane {lane_id}: orphan (no upstream, not an entry)")

    return problems
