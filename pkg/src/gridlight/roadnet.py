"""Road-network file I/O.

Reads and writes a CityFlow-compatible subset of the roadnet JSON format:
intersections carry an id, a position and a ``virtual`` flag (virtual nodes
are the network boundary); roads carry id, endpoints, length, lane count and
speed limit.  Any other CityFlow field is ignored with a warning, one
warning per field name.  Every real intersection must be a standard 4-way
junction with three lanes per approach; anything else is rejected.
"""

from __future__ import annotations

import json
import logging
import math
from typing import Any

from .network import (
    APPROACHES,
    Intersection,
    Lane,
    Road,
    RoadNetwork,
    _make_intersection,
    lane_capacity,
)

__all__ = ["load_roadnet", "save_roadnet"]

log = logging.getLogger(__name__)

_INTERSECTION_KEYS = {"id", "point", "virtual"}
_ROAD_KEYS = {"id", "startIntersection", "endIntersection", "length", "maxSpeed", "lanes", "points"}


class RoadnetFormatError(ValueError):
    """Raised when a roadnet file cannot be mapped onto the network model."""


def _warn_ignored(record: dict[str, Any], known: set[str], seen: set[str], where: str) -> None:
    for key in record:
        if key not in known and key not in seen:
            seen.add(key)
            log.warning("ignoring unsupported roadnet field %r (%s)", key, where)


def _heading(p0: tuple[float, float], p1: tuple[float, float]) -> str:
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    if abs(dx) >= abs(dy):
        return "E" if dx >= 0 else "W"
    return "N" if dy > 0 else "S"


def load_roadnet(path: str, l_v: float = 5.0, l_g: float = 2.5) -> RoadNetwork:
    """Load a roadnet JSON file and map it onto a :class:`RoadNetwork`.

    Lane capacities are derived from each road's length and the given
    vehicle length / minimum gap.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "intersections" not in doc or "roads" not in doc:
        raise RoadnetFormatError(f"{path}: expected object with intersections and roads")

    seen_ignored: set[str] = set()
    positions: dict[str, tuple[float, float]] = {}
    virtual: set[str] = set()
    order: list[str] = []
    for rec in doc["intersections"]:
        _warn_ignored(rec, _INTERSECTION_KEYS, seen_ignored, "intersection")
        try:
            node_id = rec["id"]
            point = (float(rec["point"]["x"]), float(rec["point"]["y"]))
        except (KeyError, TypeError) as exc:
            raise RoadnetFormatError(f"{path}: malformed intersection record: {rec!r}") from exc
        positions[node_id] = point
        order.append(node_id)
        if rec.get("virtual", False):
            virtual.add(node_id)

    roads: dict[str, Road] = {}
    lanes: dict[str, Lane] = {}
    for rec in doc["roads"]:
        _warn_ignored(rec, _ROAD_KEYS, seen_ignored, "road")
        try:
            road_id = rec["id"]
            start, end = rec["startIntersection"], rec["endIntersection"]
        except KeyError as exc:
            raise RoadnetFormatError(f"{path}: malformed road record: {rec!r}") from exc
        for node_id in (start, end):
            if node_id not in positions:
                raise RoadnetFormatError(
                    f"{path}: road {road_id} references unknown intersection {node_id}"
                )
        lane_spec = rec.get("lanes", 3)
        n_lanes = len(lane_spec) if isinstance(lane_spec, list) else int(lane_spec)
        if n_lanes != 3:
            raise RoadnetFormatError(
                f"{path}: road {road_id} has {n_lanes} lanes; exactly 3 are supported"
            )
        if "maxSpeed" in rec:
            max_speed = float(rec["maxSpeed"])
        elif isinstance(lane_spec, list) and lane_spec and "maxSpeed" in lane_spec[0]:
            max_speed = float(lane_spec[0]["maxSpeed"])
        else:
            max_speed = 40.0 / 3.6
        if "length" in rec:
            length = float(rec["length"])
        else:
            p0, p1 = positions[start], positions[end]
            length = math.dist(p0, p1)
        if length <= 0:
            raise RoadnetFormatError(f"{path}: road {road_id} has non-positive length")
        heading = _heading(positions[start], positions[end])
        lane_ids = tuple(f"{road_id}_{i}" for i in range(3))
        roads[road_id] = Road(
            id=road_id,
            start=start,
            end=end,
            heading=heading,
            length=length,
            max_speed=max_speed,
            lane_ids=lane_ids,  # type: ignore[arg-type]
        )
        cap = lane_capacity(length, l_v, l_g)
        for lane_id in lane_ids:
            lanes[lane_id] = Lane(
                id=lane_id, length=length, max_speed=max_speed, capacity=cap
            )

    incoming: dict[str, dict[str, Road]] = {}
    outgoing: dict[str, dict[str, Road]] = {}
    for road in roads.values():
        if road.end not in virtual:
            side = {"E": "W", "W": "E", "S": "N", "N": "S"}[road.heading]
            bucket = incoming.setdefault(road.end, {})
            if side in bucket:
                raise RoadnetFormatError(
                    f"{path}: intersection {road.end} has two roads arriving from {side}"
                )
            bucket[side] = road
        if road.start not in virtual:
            bucket = outgoing.setdefault(road.start, {})
            if road.heading in bucket:
                raise RoadnetFormatError(
                    f"{path}: intersection {road.start} has two roads leaving toward {road.heading}"
                )
            bucket[road.heading] = road

    intersections: list[Intersection] = []
    for node_id in order:
        if node_id in virtual:
            continue
        inc = incoming.get(node_id, {})
        out = outgoing.get(node_id, {})
        missing = [a for a in APPROACHES if a not in inc] + [a for a in APPROACHES if a not in out]
        if missing:
            raise RoadnetFormatError(
                f"{path}: intersection {node_id} is not a full 4-way junction"
            )
        intersections.append(_make_intersection(node_id, inc, out))

    entries = [
        (lane_id, road.start.split("_")[1] if road.start.startswith("b_") else "?")
        for road in roads.values()
        if road.start in virtual
        for lane_id in road.lane_ids
    ]
    # for foreign naming schemes, label the entry side by the travel heading
    entries = [
        (lane_id, side if side in ("w", "e", "n", "s") else _entry_side(roads, lane_id))
        for lane_id, side in entries
    ]
    exits = [
        lane_id
        for road in roads.values()
        if road.end in virtual
        for lane_id in road.lane_ids
    ]

    return RoadNetwork(
        intersections=intersections,
        roads=roads,
        lanes=lanes,
        boundary_entries=entries,
        boundary_exits=exits,
        grid_shape=None,
        node_positions=positions,
    )


def _entry_side(roads: dict[str, Road], lane_id: str) -> str:
    for road in roads.values():
        if lane_id in road.lane_ids:
            return {"E": "w", "W": "e", "S": "n", "N": "s"}[road.heading]
    raise KeyError(lane_id)


def save_roadnet(net: RoadNetwork, path: str) -> None:
    """Write the network in the roadnet JSON subset read by :func:`load_roadnet`."""
    intersection_ids = {i.id for i in net.intersections}
    node_ids = list(net.node_positions)
    doc = {
        "intersections": [
            {
                "id": node_id,
                "point": {
                    "x": net.node_positions[node_id][0],
                    "y": net.node_positions[node_id][1],
                },
                "virtual": node_id not in intersection_ids,
            }
            for node_id in node_ids
        ],
        "roads": [
            {
                "id": road.id,
                "startIntersection": road.start,
                "endIntersection": road.end,
                "length": road.length,
                "maxSpeed": road.max_speed,
                "lanes": 3,
            }
            for road in net.roads.values()
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
