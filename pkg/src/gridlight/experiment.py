"""Experiment orchestration.

Runs episodes on a (network, demand, controller) triple, trains the shared
DQN across all intersections of a grid, evaluates checkpoints greedily, and
derives the case-study tables (phase choice behaviour, green-time traces,
ideal vs actual discharge per green).

Decision cadence is per-intersection and asynchronous: whenever an
intersection's green expires it is observed, rewarded (for the previous
action), and given a fresh (phase, duration) decision; the engine then
advances one second of wall clock for everyone.  An episode ends when the
wall clock reaches the horizon; vehicles still inside contribute
``horizon - entry time`` to the average travel time.

Every artifact is a pure function of (config, seed): reruns produce
byte-identical metrics and telemetry files.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import statistics
import time as _time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .control import ControllerConfig, DQNController, build_controller, reward_of
from .engine import OBS_SIZE, YELLOW, StepTelemetry, World
from .flows import SpawnEvent, expand_flows, gen_syn_heavy, gen_syn_light, load_flow_file
from .learner import (
    EpsilonSchedule,
    QNetwork,
    ReplayBuffer,
    Transition,
    epsilon,
    load_checkpoint,
    save_checkpoint,
    sync_target,
    train_step,
)
from .network import RoadNetwork, build_grid
from .roadnet import load_roadnet
from .signalmath import DEFAULT_KINEMATICS, KinematicParams, n_pass
from .telemetry import (
    DecisionRecord,
    write_decisions_csv,
    write_metrics_json,
    write_telemetry_csv,
)

__all__ = [
    "ExperimentConfig",
    "MetricsReport",
    "EpisodeResult",
    "TrainRun",
    "CaseStudy",
    "avg_travel_time",
    "throughput",
    "build_network",
    "build_events",
    "run_episode",
    "run_single",
    "train",
    "train_many",
    "evaluate",
    "case_study",
    "write_case_study",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; defaults follow the standard settings block.

    ``network`` is ``{"kind": "grid", "rows", "cols", "we_length",
    "ns_length"}`` or ``{"kind": "roadnet", "path"}``; ``flow`` is
    ``{"kind": "syn-light" | "syn-heavy"}`` or ``{"kind": "file", "path"}``.
    """

    network: dict = field(
        default_factory=lambda: {
            "kind": "grid", "rows": 3, "cols": 3, "we_length": 300.0, "ns_length": 300.0,
        }
    )
    flow: dict = field(default_factory=lambda: {"kind": "syn-light"})
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    horizon: int = 3600
    episodes: int = 100
    gamma: float = 0.8
    lr: float = 0.001
    buffer_capacity: int = 10_000
    batch_size: int = 32
    target_sync: int = 5
    epsilon_start: float = 0.8
    epsilon_end: float = 0.2
    yellow: int = 5
    kinematics: KinematicParams = DEFAULT_KINEMATICS
    seeds: tuple[int, ...] = (0, 1, 2)
    obs_counts: str = "occupancy"
    hidden_sizes: tuple[int, ...] = (32, 32)
    epsilon_horizon: Optional[int] = None  # episodes to reach the floor; None = all
    eval_every: Optional[int] = None  # greedy-eval cadence for checkpoint selection

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.episodes < 1:
            raise ValueError("horizon and episode count must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.lr <= 0 or self.buffer_capacity < 1 or self.batch_size < 1:
            raise ValueError("learning parameters must be positive")
        if self.target_sync < 1 or self.yellow < 1:
            raise ValueError("target_sync and yellow must be positive")
        if self.epsilon_start < self.epsilon_end:
            raise ValueError("epsilon must not increase")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.hidden_sizes or any(n < 1 for n in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be positive")

    # ------------------------------------------------------------- serializing

    def to_dict(self) -> dict:
        return {
            "network": dict(self.network),
            "flow": dict(self.flow),
            "controller": {
                "kind": self.controller.kind,
                "reward_kind": self.controller.reward_kind,
                "duration_mode": self.controller.duration_mode,
                "green_fixed": self.controller.green_fixed,
                "green_min": self.controller.green_min,
                "green_max": self.controller.green_max,
                "obs_scale": self.controller.obs_scale,
            },
            "horizon": self.horizon,
            "episodes": self.episodes,
            "gamma": self.gamma,
            "lr": self.lr,
            "buffer_capacity": self.buffer_capacity,
            "batch_size": self.batch_size,
            "target_sync": self.target_sync,
            "epsilon_start": self.epsilon_start,
            "epsilon_end": self.epsilon_end,
            "yellow": self.yellow,
            "kinematics": {
                "accel": self.kinematics.accel,
                "max_speed": self.kinematics.max_speed,
                "vehicle_length": self.kinematics.vehicle_length,
                "min_gap": self.kinematics.min_gap,
            },
            "seeds": list(self.seeds),
            "obs_counts": self.obs_counts,
            "hidden_sizes": list(self.hidden_sizes),
            "epsilon_horizon": self.epsilon_horizon,
            "eval_every": self.eval_every,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        kwargs: dict = {}
        if "controller" in doc:
            kwargs["controller"] = ControllerConfig(**doc.pop("controller"))
        if "kinematics" in doc:
            kwargs["kinematics"] = KinematicParams(**doc.pop("kinematics"))
        if "seeds" in doc:
            kwargs["seeds"] = tuple(doc.pop("seeds"))
        if "hidden_sizes" in doc:
            kwargs["hidden_sizes"] = tuple(doc.pop("hidden_sizes"))
        if "epsilon_horizon" in doc:
            kwargs["epsilon_horizon"] = doc.pop("epsilon_horizon")
        if "eval_every" in doc:
            kwargs["eval_every"] = doc.pop("eval_every")
        for key in (
            "network", "flow", "horizon", "episodes", "gamma", "lr", "buffer_capacity",
            "batch_size", "target_sync", "epsilon_start", "epsilon_end", "yellow", "obs_counts",
        ):
            if key in doc:
                kwargs[key] = doc.pop(key)
        if doc:
            raise ValueError(f"unknown config keys: {sorted(doc)}")
        return cls(**kwargs)

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


@dataclass
class MetricsReport:
    """Headline episode metrics plus provenance."""

    average_travel_time: float
    throughput: int
    generated: int
    seed: Optional[int]
    config_fingerprint: str
    wall_clock: float = 0.0
    per_seed: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        # wall_clock is intentionally excluded: metrics files must be
        # byte-identical across reruns of the same (config, seed)
        doc = {
            "average_travel_time": self.average_travel_time,
            "throughput": self.throughput,
            "generated": self.generated,
            "seed": self.seed,
            "config_fingerprint": self.config_fingerprint,
        }
        if self.per_seed:
            doc["per_seed"] = self.per_seed
        return doc


@dataclass
class EpisodeResult:
    metrics: MetricsReport
    steps: Optional[list[StepTelemetry]]
    decisions: list[DecisionRecord]
    losses: list[float]
    world: World


# --------------------------------------------------------------------- metrics


def avg_travel_time(vehicles: Iterable, horizon: int) -> float:
    """Mean travel time: exit minus entry, horizon minus entry if still inside."""
    total = 0.0
    n = 0
    for veh in vehicles:
        if veh.entered_at > horizon:
            raise ValueError("vehicle entered after the horizon")
        if veh.exited_at is not None:
            total += veh.exited_at - veh.entered_at
        else:
            total += horizon - veh.entered_at
        n += 1
    return total / n if n else 0.0


def throughput(vehicles: Iterable) -> int:
    """Vehicles that finished their route and left the network."""
    return sum(1 for veh in vehicles if veh.exited_at is not None)


# -------------------------------------------------------------------- builders


def build_network(config: ExperimentConfig) -> RoadNetwork:
    spec = config.network
    kind = spec.get("kind", "grid")
    if kind == "grid":
        return build_grid(
            rows=int(spec.get("rows", 3)),
            cols=int(spec.get("cols", 3)),
            we_length=float(spec.get("we_length", 300.0)),
            ns_length=float(spec.get("ns_length", 300.0)),
            l_v=config.kinematics.vehicle_length,
            l_g=config.kinematics.min_gap,
            max_speed=config.kinematics.max_speed,
        )
    if kind == "roadnet":
        return load_roadnet(
            spec["path"],
            l_v=config.kinematics.vehicle_length,
            l_g=config.kinematics.min_gap,
        )
    raise ValueError(f"unknown network kind {kind!r}")


def build_events(
    config: ExperimentConfig, net: RoadNetwork
) -> tuple[list[SpawnEvent], KinematicParams]:
    """Demand events plus the effective kinematics.

    Flow files may carry vehicle fields; the first record's values override
    the configured kinematics (the engine models one uniform vehicle type).
    """
    spec = config.flow
    kind = spec.get("kind", "syn-light")
    kin = config.kinematics
    if kind == "syn-light":
        return gen_syn_light(net, config.horizon), kin
    if kind == "syn-heavy":
        return gen_syn_heavy(net, config.horizon), kin
    if kind == "file":
        flows = load_flow_file(spec["path"], net)
        overrides = next((f.vehicle for f in flows if f.vehicle), None)
        if overrides:
            kin = KinematicParams(
                accel=overrides.get("acceleration", kin.accel),
                max_speed=overrides.get("maxSpeed", kin.max_speed),
                vehicle_length=overrides.get("length", kin.vehicle_length),
                min_gap=overrides.get("minGap", kin.min_gap),
            )
        return expand_flows(flows), kin
    raise ValueError(f"unknown flow kind {kind!r}")


@dataclass
class LearnerContext:
    """Shared learner state threaded through the training episodes."""

    net: QNetwork
    target: QNetwork
    buffer: ReplayBuffer
    sample_rng: np.random.Generator
    train_steps: int = 0


# ---------------------------------------------------------------------- runner


def run_episode(
    config: ExperimentConfig,
    controller,
    *,
    net: Optional[RoadNetwork] = None,
    events: Optional[list[SpawnEvent]] = None,
    kinematics: Optional[KinematicParams] = None,
    learning: bool = False,
    learner_ctx: Optional[LearnerContext] = None,
    seed: Optional[int] = None,
    collect_telemetry: bool = True,
    record_decisions: bool = True,
    validate_network: bool = True,
) -> EpisodeResult:
    """One full episode under the given controller.

    At every green expiry the intersection is observed, the previous
    action's reward is computed from the fresh movement counts and (when
    learning) stored and trained on, and the controller's new decision is
    applied.  Returns metrics, optional step telemetry, the decision log
    and the per-step training losses.
    """
    if learning and learner_ctx is None:
        raise ValueError("learning episodes need a LearnerContext")
    if net is None:
        net = build_network(config)
    if events is None or kinematics is None:
        events, kinematics = build_events(config, net)
    world = World(
        net,
        events,
        kinematics=kinematics,
        yellow=config.yellow,
        obs_counts=config.obs_counts,
        check=validate_network,
    )
    obs_scale = config.controller.obs_scale
    reward_kind = config.controller.reward_kind
    started = _time.perf_counter()

    steps: Optional[list[StepTelemetry]] = [] if collect_telemetry else None
    decisions: list[DecisionRecord] = []
    losses: list[float] = []
    pending: dict[str, tuple[np.ndarray, int]] = {}
    open_records: dict[str, tuple[DecisionRecord, int]] = {}

    def interval_crossings(rec: DecisionRecord) -> int:
        return sum(world.services[mid].cum_crossed for mid in rec.phase_movement_ids)

    for _ in range(config.horizon):
        for inter in net.intersections:
            iid = inter.id
            if not world.needs_decision(iid):
                continue
            counts = world.movement_counts(iid)
            obs = world.observe(iid) * obs_scale

            if learning and iid in pending:
                s_prev, a_prev = pending.pop(iid)
                r = reward_of(counts, reward_kind)
                learner_ctx.buffer.push(Transition(s_prev, a_prev, r, obs, False))
                batch = learner_ctx.buffer.sample(config.batch_size, learner_ctx.sample_rng)
                if batch is not None:
                    losses.append(
                        train_step(
                            learner_ctx.net, learner_ctx.target, batch, config.gamma, config.lr
                        )
                    )
                    learner_ctx.train_steps += 1
                    if learner_ctx.train_steps % config.target_sync == 0:
                        sync_target(learner_ctx.net, learner_ctx.target)

            if record_decisions and iid in open_records:
                rec, base = open_records.pop(iid)
                rec.actual_discharged = interval_crossings(rec) - base

            decision = controller.decide(world, iid, obs)
            world.apply_decision(iid, decision.phase, decision.green_duration)
            if learning:
                pending[iid] = (obs, decision.phase)
            if record_decisions:
                granted = inter.phases[decision.phase].movements
                rec = DecisionRecord(
                    time=world.time,
                    intersection=iid,
                    phase=decision.phase,
                    green_duration=decision.green_duration,
                    switched=world.signals[iid].mode == YELLOW,
                    counts=tuple(
                        len(world.lanes[lane_id].vehicles) for lane_id in inter.incoming_lanes
                    ),
                    ideal_npass=sum(n_pass(counts[mid]) for mid in granted),
                    phase_movement_ids=granted,
                )
                decisions.append(rec)
                open_records[iid] = (rec, interval_crossings(rec))
        tel = world.step(collect=collect_telemetry)
        if steps is not None:
            steps.append(tel)

    for iid, (rec, base) in open_records.items():
        rec.actual_discharged = interval_crossings(rec) - base
    if learning:
        for iid, (s_prev, a_prev) in pending.items():
            counts = world.movement_counts(iid)
            r = reward_of(counts, reward_kind)
            s_now = world.observe(iid) * obs_scale
            learner_ctx.buffer.push(Transition(s_prev, a_prev, r, s_now, True))

    metrics = MetricsReport(
        average_travel_time=avg_travel_time(world.vehicles, config.horizon),
        throughput=throughput(world.vehicles),
        generated=world.entered_total,
        seed=seed,
        config_fingerprint=config.fingerprint(),
        wall_clock=_time.perf_counter() - started,
    )
    return EpisodeResult(metrics=metrics, steps=steps, decisions=decisions, losses=losses, world=world)


def _write_run_outputs(out_dir: str, config: ExperimentConfig, net: RoadNetwork, result: EpisodeResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_metrics_json(os.path.join(out_dir, "metrics.json"), result.metrics.to_dict())
    if result.steps is not None:
        write_telemetry_csv(os.path.join(out_dir, "telemetry.csv"), net, result.steps)
    write_decisions_csv(os.path.join(out_dir, "decisions.csv"), result.decisions)


def run_single(
    config: ExperimentConfig,
    seed: int,
    out_dir: Optional[str] = None,
    checkpoint: Optional[str] = None,
) -> EpisodeResult:
    """One telemetry-collecting episode with the configured controller.

    For the DQN controller a checkpoint may be supplied; otherwise a freshly
    initialized (untrained) network is used.
    """
    net = build_network(config)
    events, kin = build_events(config, net)
    qnet = None
    rng = None
    if config.controller.kind == "dqn":
        if checkpoint is not None:
            qnet = load_checkpoint(checkpoint)
            _check_architecture(qnet)
        else:
            qnet = QNetwork(
                layer_sizes=(OBS_SIZE, *config.hidden_sizes, 4),
                rng=np.random.default_rng(np.random.SeedSequence(seed)),
            )
        rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    controller = build_controller(config.controller, kin, net=qnet, rng=rng, eps=0.0)
    result = run_episode(
        config, controller, net=net, events=events, kinematics=kin, seed=seed
    )
    if out_dir is not None:
        _write_run_outputs(out_dir, config, net, result)
    return result


# -------------------------------------------------------------------- training


@dataclass
class TrainRun:
    """Everything a single-seed training run produced."""

    seed: int
    curve: list[dict]
    final_net: QNetwork
    best_net: QNetwork
    best_train_travel_time: float
    final_eval: MetricsReport
    best_eval: MetricsReport
    wall_clock: float


def _check_architecture(net: QNetwork) -> None:
    if net.input_size != OBS_SIZE or net.output_size != 4:
        raise ValueError(
            f"checkpoint architecture {net.layer_sizes} does not match the "
            f"{OBS_SIZE}-input / 4-output controller contract"
        )


def train(
    config: ExperimentConfig,
    seed: int,
    out_dir: Optional[str] = None,
    progress=None,
) -> TrainRun:
    """Train the shared DQN for ``config.episodes`` episodes on one seed.

    Stores transitions from every intersection in one pooled replay buffer,
    trains after each decision once the buffer is warm, and syncs the
    target network every ``target_sync`` training steps.  Checkpoints the
    best parameters by travel time — of the periodic greedy evaluations
    when ``eval_every`` is set, of the training episodes otherwise — and
    finishes with greedy evaluations of both the final and best parameters.
    """
    if config.controller.kind != "dqn":
        raise ValueError("train() needs a dqn controller config")
    started = _time.perf_counter()
    root = np.random.SeedSequence(seed)
    ss_init, ss_actions, ss_samples = root.spawn(3)
    net = QNetwork(
        layer_sizes=(OBS_SIZE, *config.hidden_sizes, 4),
        rng=np.random.default_rng(ss_init),
    )
    ctx = LearnerContext(
        net=net,
        target=net.copy(),
        buffer=ReplayBuffer(config.buffer_capacity),
        sample_rng=np.random.default_rng(ss_samples),
    )
    action_rng = np.random.default_rng(ss_actions)
    road_net = build_network(config)
    events, kin = build_events(config, road_net)
    sched = EpsilonSchedule(
        config.epsilon_start, config.epsilon_end, config.epsilon_horizon or config.episodes
    )

    def greedy_eval(qnet: QNetwork) -> MetricsReport:
        controller = DQNController(qnet, config.controller, np.random.default_rng(0), 0.0, kin)
        result = run_episode(
            config, controller, net=road_net, events=events, kinematics=kin,
            seed=seed, collect_telemetry=False, record_decisions=False,
            validate_network=False,
        )
        return result.metrics

    curve: list[dict] = []
    best_train_tt = float("inf")
    best_eval_tt = float("inf")
    best_net = net.copy()
    for ep in range(config.episodes):
        eps = epsilon(sched, ep)
        controller = DQNController(net, config.controller, action_rng, eps, kin)
        result = run_episode(
            config,
            controller,
            net=road_net,
            events=events,
            kinematics=kin,
            learning=True,
            learner_ctx=ctx,
            seed=seed,
            collect_telemetry=False,
            record_decisions=False,
            validate_network=(ep == 0),
        )
        row = {
            "episode": ep,
            "epsilon": eps,
            "avg_travel_time": result.metrics.average_travel_time,
            "throughput": result.metrics.throughput,
            "mean_loss": statistics.fmean(result.losses) if result.losses else 0.0,
            "train_steps": ctx.train_steps,
            "eval_travel_time": None,
        }
        if result.metrics.average_travel_time < best_train_tt:
            best_train_tt = result.metrics.average_travel_time
            if config.eval_every is None:
                best_net = net.copy()
        if config.eval_every is not None and (ep + 1) % config.eval_every == 0:
            interim = greedy_eval(net)
            row["eval_travel_time"] = interim.average_travel_time
            if interim.average_travel_time < best_eval_tt:
                best_eval_tt = interim.average_travel_time
                best_net = net.copy()
        curve.append(row)
        if progress is not None:
            progress(row)

    final_eval = evaluate(config, net, seed=seed)
    best_eval = evaluate(config, best_net, seed=seed)
    run = TrainRun(
        seed=seed,
        curve=curve,
        final_net=net,
        best_net=best_net,
        best_train_travel_time=best_train_tt,
        final_eval=final_eval,
        best_eval=best_eval,
        wall_clock=_time.perf_counter() - started,
    )
    if out_dir is not None:
        _write_train_outputs(out_dir, config, run)
    return run


def _write_train_outputs(out_dir: str, config: ExperimentConfig, run: TrainRun) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(run.final_net, os.path.join(out_dir, "checkpoint_final.npz"))
    save_checkpoint(run.best_net, os.path.join(out_dir, "checkpoint_best.npz"))
    curve_path = os.path.join(out_dir, "learning_curve.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("episode,epsilon,avg_travel_time,throughput,mean_loss,train_steps,eval_travel_time\n")
        for row in run.curve:
            interim = row.get("eval_travel_time")
            fh.write(
                f"{row['episode']},{row['epsilon']},{row['avg_travel_time']},"
                f"{row['throughput']},{row['mean_loss']},{row['train_steps']},"
                f"{'' if interim is None else interim}\n"
            )
    write_metrics_json(
        os.path.join(out_dir, "metrics.json"),
        {
            "seed": run.seed,
            "config_fingerprint": config.fingerprint(),
            "final_eval": run.final_eval.to_dict(),
            "best_eval": run.best_eval.to_dict(),
            "best_train_travel_time": run.best_train_travel_time,
        },
    )


def _train_worker(args: tuple[dict, int, Optional[str]]) -> tuple[int, dict]:
    doc, seed, out_dir = args
    config = ExperimentConfig.from_dict(doc)
    run = train(config, seed, out_dir=out_dir)
    return seed, {
        "final_eval": run.final_eval.to_dict(),
        "best_eval": run.best_eval.to_dict(),
        "best_train_travel_time": run.best_train_travel_time,
        "wall_clock": run.wall_clock,
    }


def train_many(
    config: ExperimentConfig,
    out_dir: Optional[str] = None,
    jobs: int = 1,
) -> dict:
    """Train every configured seed (optionally in parallel worker processes).

    Returns a summary with per-seed evaluations and the across-seed medians
    of the greedy evaluation travel times.
    """
    tasks = [
        (config.to_dict(), seed, os.path.join(out_dir, f"seed_{seed}") if out_dir else None)
        for seed in config.seeds
    ]
    results: dict[int, dict] = {}
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for seed, payload in pool.map(_train_worker, tasks):
                results[seed] = payload
    else:
        for task in tasks:
            seed, payload = _train_worker(task)
            results[seed] = payload
    summary = {
        "config_fingerprint": config.fingerprint(),
        "seeds": list(config.seeds),
        "per_seed": {str(seed): results[seed] for seed in config.seeds},
        "median_final_eval_travel_time": statistics.median(
            results[s]["final_eval"]["average_travel_time"] for s in config.seeds
        ),
        "median_best_eval_travel_time": statistics.median(
            results[s]["best_eval"]["average_travel_time"] for s in config.seeds
        ),
        "median_best_eval_throughput": statistics.median(
            results[s]["best_eval"]["throughput"] for s in config.seeds
        ),
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_metrics_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def evaluate(
    config: ExperimentConfig,
    parameters: QNetwork | str,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> MetricsReport:
    """Greedy rollout of trained parameters: epsilon 0, learning off."""
    if config.controller.kind != "dqn":
        raise ValueError("evaluate() only applies to the dqn controller")
    qnet = load_checkpoint(parameters) if isinstance(parameters, str) else parameters
    _check_architecture(qnet)
    net = build_network(config)
    events, kin = build_events(config, net)
    controller = DQNController(qnet, config.controller, np.random.default_rng(0), eps=0.0, kinematics=kin)
    result = run_episode(
        config, controller, net=net, events=events, kinematics=kin, seed=seed
    )
    if out_dir is not None:
        _write_run_outputs(out_dir, config, net, result)
    return result.metrics


# ------------------------------------------------------------------ case study


@dataclass
class CaseStudy:
    """Aggregates derived from a decision log."""

    decisions_total: int
    phase_choice_counts: tuple[int, int, int, int]
    phase_mean_counts: tuple[float, float, float, float]
    unique_max_decisions: int
    max_phase_chosen: int
    max_choice_frequency: float
    duration_table: dict[int, dict]  # duration -> n / ideal / actual aggregates

    def to_dict(self) -> dict:
        return {
            "decisions_total": self.decisions_total,
            "phase_choice_counts": list(self.phase_choice_counts),
            "phase_mean_counts": list(self.phase_mean_counts),
            "unique_max_decisions": self.unique_max_decisions,
            "max_phase_chosen": self.max_phase_chosen,
            "max_choice_frequency": self.max_choice_frequency,
            "duration_table": {
                str(d): dict(v) for d, v in sorted(self.duration_table.items())
            },
        }


def write_case_study(out_dir: str, records: Sequence[DecisionRecord]) -> CaseStudy:
    """Write case_study.csv (per decision) and case_study_summary.json."""
    study = case_study(records)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "case_study.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "time,intersection,phase,green_duration,"
            "phase_count_0,phase_count_1,phase_count_2,phase_count_3,"
            "chosen_is_max,ideal_npass,actual_discharged\n"
        )
        for rec in records:
            per_phase = rec.phase_mean_counts()
            top = max(per_phase)
            top_phases = [k for k in range(4) if per_phase[k] == top]
            chosen_is_max = "" if len(top_phases) > 1 else int(top_phases[0] == rec.phase)
            actual = "" if rec.actual_discharged is None else rec.actual_discharged
            fh.write(
                f"{rec.time},{rec.intersection},{rec.phase},{rec.green_duration},"
                f"{per_phase[0]},{per_phase[1]},{per_phase[2]},{per_phase[3]},"
                f"{chosen_is_max},{rec.ideal_npass},{actual}\n"
            )
    write_metrics_json(os.path.join(out_dir, "case_study_summary.json"), study.to_dict())
    return study


def case_study(records: Sequence[DecisionRecord]) -> CaseStudy:
    """Derive the phase-choice and green-time tables from a decision log.

    The max-choice frequency is computed over decisions whose per-phase
    vehicle counts have a unique maximum (ties carry no signal about the
    controller).  The duration table aggregates, per green duration, the
    promised (n_pass) and delivered discharge of the granted phase.
    """
    choice_counts = [0, 0, 0, 0]
    mean_sums = [0.0, 0.0, 0.0, 0.0]
    unique_max = 0
    max_chosen = 0
    durations: dict[int, dict] = {}
    for rec in records:
        choice_counts[rec.phase] += 1
        per_phase = rec.phase_mean_counts()
        for k in range(4):
            mean_sums[k] += per_phase[k]
        top = max(per_phase)
        top_phases = [k for k in range(4) if per_phase[k] == top]
        if len(top_phases) == 1:
            unique_max += 1
            if top_phases[0] == rec.phase:
                max_chosen += 1
        if rec.actual_discharged is not None:
            slot = durations.setdefault(
                rec.green_duration,
                {"intervals": 0, "ideal_total": 0, "actual_total": 0},
            )
            slot["intervals"] += 1
            slot["ideal_total"] += rec.ideal_npass
            slot["actual_total"] += rec.actual_discharged
    for slot in durations.values():
        slot["ideal_mean"] = slot["ideal_total"] / slot["intervals"]
        slot["actual_mean"] = slot["actual_total"] / slot["intervals"]
    n = len(records)
    return CaseStudy(
        decisions_total=n,
        phase_choice_counts=tuple(choice_counts),  # type: ignore[arg-type]
        phase_mean_counts=tuple(
            (s / n if n else 0.0) for s in mean_sums
        ),  # type: ignore[arg-type]
        unique_max_decisions=unique_max,
        max_phase_chosen=max_chosen,
        max_choice_frequency=(max_chosen / unique_max) if unique_max else 0.0,
        duration_table=durations,
    )
