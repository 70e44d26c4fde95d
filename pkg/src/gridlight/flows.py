"""Traffic demand: synthetic generators, flow files, arrival statistics.

A :class:`FlowSpec` describes one periodic stream of identical vehicles
(route over roads, start/end window, headway); expanding a list of specs
yields the individual :class:`SpawnEvent` timeline consumed by the engine.

The two synthetic demand patterns target the 3x3 grid with uniform 300 m
lanes: a light pattern with one vehicle per entry every 20 s, and a heavy
rush-hour pattern that alternates a 2 s headway between the NS and WE
corridors in four 900 s periods.  All synthetic traffic drives straight
through the grid.

Flow files are a JSON subset of the CityFlow flow list; see
:func:`save_flow_file` for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .network import RoadNetwork, Turn, resolve_route

__all__ = [
    "FlowSpec",
    "SpawnEvent",
    "straight_route",
    "syn_light_flows",
    "syn_heavy_flows",
    "expand_flows",
    "gen_syn_light",
    "gen_syn_heavy",
    "save_flow_file",
    "load_flow_file",
    "arrival_interval_stats",
    "write_arrival_intervals_csv",
]


@dataclass(frozen=True)
class FlowSpec:
    """One periodic vehicle stream.

    Vehicles depart at ``start, start + interval, ...`` up to and including
    ``end``.  ``vehicle`` optionally carries kinematic overrides
    (length / minGap / maxSpeed / acceleration) from a flow file.
    """

    route: tuple[str, ...]  # road ids, entry road first
    start: int
    end: int
    interval: float
    entry_lane: str
    vehicle: Optional[dict] = field(default=None, compare=True)

    def __post_init__(self) -> None:
        if self.interval <= 0:
            raise ValueError("flow interval must be > 0")
        if self.start > self.end:
            raise ValueError("flow start must be <= end")


@dataclass(frozen=True)
class SpawnEvent:
    """A single scheduled vehicle: departure time, road route, entry lane."""

    time: int
    route: tuple[str, ...]
    entry_lane: str


def straight_route(net: RoadNetwork, entry_road_id: str) -> tuple[str, ...]:
    """Follow straight movements from an entry road until the boundary."""
    roads = [net.roads[entry_road_id]]
    intersection_ids = {i.id for i in net.intersections}
    while roads[-1].end in intersection_ids:
        inter = net.intersection(roads[-1].end)
        here = roads[-1]
        nxt = None
        for m in inter.movements:
            if m.turn is Turn.STRAIGHT and m.in_lane in here.lane_ids:
                nxt = net.road_of_lane(m.out_lane)
                break
        if nxt is None:
            raise ValueError(f"no straight continuation from road {here.id}")
        roads.append(nxt)
    return tuple(r.id for r in roads)


def _require_grid(net: RoadNetwork, rows: int, cols: int, what: str) -> None:
    if net.grid_shape is not None and net.grid_shape != (rows, cols):
        raise ValueError(
            f"{what} expects a {rows}x{cols} grid, got {net.grid_shape[0]}x{net.grid_shape[1]}"
        )


def _entry_roads_by_side(net: RoadNetwork) -> dict[str, list[str]]:
    sides: dict[str, list[str]] = {"w": [], "e": [], "n": [], "s": []}
    for road_id, side in net.entry_roads:
        sides[side].append(road_id)
    return sides


def _straight_flows(
    net: RoadNetwork,
    sides: Iterable[str],
    start: int,
    end: int,
    interval: float,
) -> list[FlowSpec]:
    by_side = _entry_roads_by_side(net)
    flows = []
    for side in sides:
        for road_id in by_side[side]:
            route = straight_route(net, road_id)
            entry_lane, _ = resolve_route(net, route)
            flows.append(
                FlowSpec(route=route, start=start, end=end, interval=interval, entry_lane=entry_lane)
            )
    return flows


def syn_light_flows(net: RoadNetwork, horizon: int = 3600) -> list[FlowSpec]:
    """Light uniform demand: every entry spawns one vehicle per 20 s."""
    _require_grid(net, 3, 3, "syn-light")
    return _straight_flows(net, "wens", 0, horizon - 1, 20)


def syn_heavy_flows(net: RoadNetwork, horizon: int = 3600) -> list[FlowSpec]:
    """Rush-hour demand in four 900 s periods.

    Periods 1 and 3 load every entry at a 10 s headway; period 2 drops the
    NS/SN headway to 2 s, period 4 does the same for WE/EW, the other axis
    staying at 10 s.
    """
    _require_grid(net, 3, 3, "syn-heavy")
    if horizon != 3600:
        raise ValueError("syn-heavy is defined on a 3600 s horizon")
    flows: list[FlowSpec] = []
    flows += _straight_flows(net, "wens", 0, 899, 10)
    flows += _straight_flows(net, "ns", 900, 1799, 2)
    flows += _straight_flows(net, "we", 900, 1799, 10)
    flows += _straight_flows(net, "wens", 1800, 2699, 10)
    flows += _straight_flows(net, "we", 2700, 3599, 2)
    flows += _straight_flows(net, "ns", 2700, 3599, 10)
    return flows


def expand_flows(flows: Iterable[FlowSpec]) -> list[SpawnEvent]:
    """Expand periodic flows into individual spawn events, sorted by time."""
    events: list[SpawnEvent] = []
    for flow in flows:
        k = 0
        while True:
            t = flow.start + k * flow.interval
            if t > flow.end:
                break
            events.append(SpawnEvent(time=int(t), route=flow.route, entry_lane=flow.entry_lane))
            k += 1
    events.sort(key=lambda e: e.time)
    return events


def gen_syn_light(net: RoadNetwork, horizon: int = 3600) -> list[SpawnEvent]:
    """All spawn events of the light synthetic pattern (2160 on 3600 s)."""
    return expand_flows(syn_light_flows(net, horizon))


def gen_syn_heavy(net: RoadNetwork, horizon: int = 3600) -> list[SpawnEvent]:
    """All spawn events of the heavy synthetic pattern (8640 on 3600 s)."""
    return expand_flows(syn_heavy_flows(net, horizon))


def save_flow_file(flows: Iterable[FlowSpec], path: str) -> None:
    """Write flows as a JSON array of records.

    Each record is ``{"vehicle": {...}?, "route": [road ids],
    "interval": s, "startTime": s, "endTime": s}``; vehicles depart at
    startTime, startTime + interval, ... while not past endTime.
    """
    records = []
    for flow in flows:
        rec: dict = {
            "route": list(flow.route),
            "interval": flow.interval,
            "startTime": flow.start,
            "endTime": flow.end,
        }
        if flow.vehicle is not None:
            rec["vehicle"] = flow.vehicle
        records.append(rec)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")


_VEHICLE_KEYS = ("length", "minGap", "maxSpeed", "acceleration")


def load_flow_file(path: str, net: RoadNetwork) -> list[FlowSpec]:
    """Read a flow file, resolving every route against the network.

    Raises ``ValueError`` naming the record index for malformed records and
    the offending id for unresolvable roads.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ValueError(f"{path}: expected a JSON array of flow records")
    flows: list[FlowSpec] = []
    for idx, rec in enumerate(doc):
        try:
            route = tuple(rec["route"])
            interval = float(rec["interval"])
            start = int(rec["startTime"])
            end = int(rec["endTime"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: malformed flow record #{idx}: {exc}") from exc
        try:
            entry_lane, _ = resolve_route(net, route)
        except KeyError as exc:
            raise ValueError(f"{path}: flow record #{idx}: {exc.args[0]}") from exc
        vehicle = None
        if "vehicle" in rec:
            vehicle = {k: float(v) for k, v in rec["vehicle"].items() if k in _VEHICLE_KEYS}
        flows.append(
            FlowSpec(
                route=route,
                start=start,
                end=end,
                interval=interval,
                entry_lane=entry_lane,
                vehicle=vehicle,
            )
        )
    return flows


def arrival_interval_stats(
    events: Iterable[SpawnEvent], entry_lane: str
) -> tuple[list[tuple[int, int]], float]:
    """Gaps between consecutive arrivals on one entry lane.

    Returns the series of (arrival time, gap to the next arrival) pairs and
    the mean gap (0.0 when fewer than two arrivals).
    """
    times = sorted(e.time for e in events if e.entry_lane == entry_lane)
    series = [(t0, t1 - t0) for t0, t1 in zip(times, times[1:])]
    mean = sum(gap for _, gap in series) / len(series) if series else 0.0
    return series, mean


def write_arrival_intervals_csv(path: str, series: Iterable[tuple[int, int]]) -> None:
    """Dump an arrival-gap series as ``time,gap`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time,gap\n")
        for t, gap in series:
            fh.write(f"{t},{gap}\n")
