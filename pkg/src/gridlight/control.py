"""Signal controllers.

Four controller families share one decision interface: a cyclic fixed-time
plan, the classic max-pressure rule, a greedy rule over the spillback-aware
movement score (a diagnostic baseline that isolates the score from any
learning), and an epsilon-greedy DQN controller whose reward is pluggable
(spillback-aware PRCOL, PressLight-style pressure, or CoLight-style queue
length).

A decision is a (phase, green duration) pair.  Durations come either from a
fixed setting or from the kinematic clearance of the chosen phase's queues,
clamped to the configured range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .engine import World
from .learner import QNetwork, forward
from .network import Phase
from .signalmath import (
    DEFAULT_KINEMATICS,
    KinematicParams,
    MovementCounts,
    green_duration,
    phase_score,
    reward,
)

__all__ = [
    "Decision",
    "ControllerConfig",
    "FixedTimeController",
    "MaxPressureController",
    "GreedyPrcolController",
    "DQNController",
    "decide_maxpressure",
    "decide_greedy",
    "decide_dqn",
    "reward_of",
    "build_controller",
]

CONTROLLER_KINDS = ("fixed", "maxpressure", "greedy_prcol", "dqn")
DURATION_MODES = ("fixed", "dynamic")


@dataclass(frozen=True)
class Decision:
    phase: int
    green_duration: int


@dataclass(frozen=True)
class ControllerConfig:
    """Which controller to run and how it times its greens.

    ``reward_kind`` selects the training signal and is only meaningful for
    the DQN controller.  ``obs_scale`` is a fixed factor applied to the
    observation before the Q-network sees it.  The default feeds raw
    counts; congested scenarios train far better with counts normalized by
    lane capacity (0.025 for the standard 300 m lanes), because plain
    gradient descent cannot condition both input regimes at once.
    """

    kind: str = "fixed"
    reward_kind: str = "prcol"
    duration_mode: str = "fixed"
    green_fixed: int = 10
    green_min: int = 10
    green_max: int = 20
    obs_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.reward_kind not in ("prcol", "pressure", "pressure_signed", "queue"):
            raise ValueError(f"unknown reward kind {self.reward_kind!r}")
        if self.duration_mode not in DURATION_MODES:
            raise ValueError(f"unknown duration mode {self.duration_mode!r}")
        if not (0 < self.green_min <= self.green_max) or self.green_fixed < 1:
            raise ValueError("green durations must be positive and ordered")


def decide_greedy(
    counts: Mapping[str, MovementCounts], phases: tuple[Phase, ...], metric: str
) -> int:
    """Phase with the best score under ``metric``; ties go to the lowest index."""
    best_phase = 0
    best_score = None
    for phase in phases:
        score = phase_score(counts, phase.movements, metric)
        if best_score is None or score > best_score:
            best_phase, best_score = phase.id, score
    return best_phase


def decide_maxpressure(counts: Mapping[str, MovementCounts], phases: tuple[Phase, ...]) -> int:
    """Classic rule: grant green to the phase with the largest total pressure."""
    return decide_greedy(counts, phases, "pressure")


def decide_dqn(net: QNetwork, s: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy action: random phase with probability eps, else argmax-Q."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(net.output_size))
    return int(np.argmax(forward(net, s)))


def reward_of(counts_after: Mapping[str, MovementCounts], reward_kind: str) -> float:
    """Reward observed at the next decision boundary, after the action ran."""
    return reward(counts_after.values(), reward_kind)


class FixedTimeController:
    """Cycle the four phases in order with a fixed green each."""

    def __init__(self, green: int = 10):
        self.green = green
        self._cycle: dict[str, int] = {}

    def decide(self, world: World, intersection_id: str, obs: Optional[np.ndarray] = None) -> Decision:
        nxt = self._cycle.get(intersection_id, 0)
        self._cycle[intersection_id] = (nxt + 1) % 4
        return Decision(phase=nxt, green_duration=self.green)


class MaxPressureController:
    """Grant green to the max-pressure phase; duration stays fixed."""

    def __init__(self, green: int = 10):
        self.green = green

    def decide(self, world: World, intersection_id: str, obs: Optional[np.ndarray] = None) -> Decision:
        counts = world.movement_counts(intersection_id)
        phase = decide_maxpressure(counts, world.net.intersection(intersection_id).phases)
        return Decision(phase=phase, green_duration=self.green)


class _DurationMixin:
    config: ControllerConfig
    kinematics: KinematicParams

    def _duration(self, world: World, intersection_id: str, phase: int, counts) -> int:
        if self.config.duration_mode == "fixed":
            return self.config.green_fixed
        granted = world.net.intersection(intersection_id).phases[phase].movements
        return green_duration(
            (counts[mid] for mid in granted),
            self.kinematics,
            self.config.green_min,
            self.config.green_max,
        )


class GreedyPrcolController(_DurationMixin):
    """Pick the phase with the highest spillback-aware score each boundary."""

    def __init__(self, config: ControllerConfig, kinematics: KinematicParams = DEFAULT_KINEMATICS):
        self.config = config
        self.kinematics = kinematics

    def decide(self, world: World, intersection_id: str, obs: Optional[np.ndarray] = None) -> Decision:
        counts = world.movement_counts(intersection_id)
        phase = decide_greedy(counts, world.net.intersection(intersection_id).phases, "prcol")
        return Decision(phase=phase, green_duration=self._duration(world, intersection_id, phase, counts))


class DQNController(_DurationMixin):
    """Epsilon-greedy policy over a Q-network, one shared net for all junctions."""

    def __init__(
        self,
        net: QNetwork,
        config: ControllerConfig,
        rng: np.random.Generator,
        eps: float = 0.0,
        kinematics: KinematicParams = DEFAULT_KINEMATICS,
    ):
        self.net = net
        self.config = config
        self.rng = rng
        self.eps = eps
        self.kinematics = kinematics

    def decide(self, world: World, intersection_id: str, obs: Optional[np.ndarray] = None) -> Decision:
        if obs is None:
            obs = world.observe(intersection_id)
        phase = decide_dqn(self.net, obs * self.config.obs_scale, self.eps, self.rng)
        counts = None
        if self.config.duration_mode == "dynamic":
            counts = world.movement_counts(intersection_id)
        return Decision(
            phase=phase,
            green_duration=(
                self.config.green_fixed
                if counts is None
                else self._duration(world, intersection_id, phase, counts)
            ),
        )


def build_controller(
    config: ControllerConfig,
    kinematics: KinematicParams = DEFAULT_KINEMATICS,
    net: Optional[QNetwork] = None,
    rng: Optional[np.random.Generator] = None,
    eps: float = 0.0,
):
    """Instantiate the controller described by ``config``."""
    if config.kind == "fixed":
        return FixedTimeController(green=config.green_fixed)
    if config.kind == "maxpressure":
        return MaxPressureController(green=config.green_fixed)
    if config.kind == "greedy_prcol":
        return GreedyPrcolController(config, kinematics)
    if config.kind == "dqn":
        if net is None:
            raise ValueError("the DQN controller needs a Q-network")
        return DQNController(net, config, rng or np.random.default_rng(0), eps, kinematics)
    raise ValueError(f"unknown controller kind {config.kind!r}")
