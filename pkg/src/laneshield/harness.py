"""Closed-loop episode harness.

Runs control cycles of length T: the ego policy (optionally shielded) picks
an acceleration from the current observation, every environment car picks
one from its driver model, saturation is applied, and the plant integrates
the cycle with the selected integrator.  Episodes stop at the first
collision; under exact integration collisions are detected in continuous
time, under Euler integration on the substep grid.

Also provides the invariant-respecting initial-condition sampler,
deterministic campaign statistics, falsification of verifier counterexample
representatives, and the search for discretisation-induced crashes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .constants import Constants, ctx_valid
from .envelope import invariant_behind
from .monitor import DEFAULT_EPS_V, jsc_filter, veriphy_step
from .network import Mlp, action_to_accel, forward, obs_for, select_action
from .plant import Integrator, acc_correction, pair_gap_extrema, step_cars
from .policies import EnvPolicy, fallback_accel
from .state import CarState, WorldState
from .verifier import VerifyResult, result_to_json

MAX_PROPOSALS = 100_000
DEFAULT_STEPS = 60


class SamplingError(RuntimeError):
    """Rejection sampling failed to find an acceptable initial state."""


@dataclass(frozen=True)
class TrajectoryRow:
    t: float
    cars: tuple[CarState, ...]
    action: str
    overridden: bool
    collided: bool


@dataclass(frozen=True)
class EpisodeResult:
    crashed: bool
    steps: int
    trajectory: tuple[TrajectoryRow, ...]
    reward: float


# ---------------------------------------------------------------------------
# ego policies
# ---------------------------------------------------------------------------

class FallbackOnly:
    """Drive the verified fallback directly: brake behind, accelerate ahead."""

    label = "fallback"

    def decide(self, w: WorldState, c: Constants):
        return fallback_accel(w.ego, w.front, c), self.label, False


class RawPolicy:
    """Unshielded network policy."""

    def __init__(self, mlp: Mlp, brake: float | None = None):
        self.mlp = mlp
        self.brake = brake

    def decide(self, w: WorldState, c: Constants):
        act = select_action(forward(self.mlp, obs_for(self.mlp, w, c)))
        return action_to_accel(act, c, self.brake), act.value, False


class VeriPhyPolicy:
    """Network sandboxed by the guard oracle with fallback override."""

    def __init__(self, mlp: Mlp, brake: float | None = None):
        self.mlp = mlp
        self.brake = brake

    def decide(self, w: WorldState, c: Constants):
        scores = forward(self.mlp, obs_for(self.mlp, w, c))
        dec = veriphy_step(scores, w.ego, w.front, c, self.brake)
        return action_to_accel(dec.action, c, self.brake), dec.action.value, dec.overridden


class JscPolicy:
    """Network shielded by ranked action filtering inside the invariant."""

    def __init__(self, mlp: Mlp, eps_v: float = DEFAULT_EPS_V, brake: float | None = None):
        self.mlp = mlp
        self.eps_v = eps_v
        self.brake = brake

    def decide(self, w: WorldState, c: Constants):
        scores = forward(self.mlp, obs_for(self.mlp, w, c))
        dec = jsc_filter(scores, w.ego, w.front, c, self.eps_v, self.brake)
        return action_to_accel(dec.action, c, self.brake), dec.action.value, dec.overridden


def make_policy(kind: str, mlp: Mlp | None = None,
                eps_v: float = DEFAULT_EPS_V, brake: float | None = None):
    if kind == "fallback":
        return FallbackOnly()
    if mlp is None:
        raise ValueError(f"policy {kind!r} needs network weights")
    if kind == "raw":
        return RawPolicy(mlp, brake)
    if kind == "veriphy":
        return VeriPhyPolicy(mlp, brake)
    if kind == "jsc":
        return JscPolicy(mlp, eps_v, brake)
    raise ValueError(f"unknown policy kind {kind!r}")


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def sample_initial(c: Constants, pattern: int = 2, seed=0, density: float = 5.0) -> WorldState:
    """Rejection-sample a world state from the controllable region.

    Positions are Poisson-spaced with mean gap 1000/density metres (ego at
    x = 0), velocities uniform on [0, V].  A proposal is accepted when the
    (ego, front) pair satisfies the invariant and every further car is at
    least L ahead of and at least as fast as its predecessor.  Deterministic
    for a given seed.
    """
    if density <= 0:
        raise ValueError(f"density must be positive, got {density}")
    if not 2 <= pattern <= 5:
        raise ValueError(f"pattern must be 2..5, got {pattern}")
    rng = np.random.default_rng(seed)
    mean_gap = 1000.0 / density
    for _ in range(MAX_PROPOSALS):
        gaps = rng.exponential(mean_gap, size=pattern - 1)
        xs = np.concatenate([[0.0], np.cumsum(gaps)])
        vs = rng.uniform(0.0, c.V, size=pattern)
        cars = tuple(CarState(float(x), float(v), 0.0) for x, v in zip(xs, vs))
        if not invariant_behind(cars[0], cars[1], c):
            continue
        ok = True
        for prev, cur in zip(cars[1:], cars[2:]):
            if not (prev.x + c.L <= cur.x and prev.v <= cur.v):
                ok = False
                break
        if ok:
            return WorldState(cars)
    raise SamplingError(
        f"no acceptable initial state in {MAX_PROPOSALS} proposals "
        f"(density {density}/km too high?)")


# ---------------------------------------------------------------------------
# episodes
# ---------------------------------------------------------------------------

def _env_list(env, n_env: int) -> tuple[EnvPolicy, ...]:
    if isinstance(env, EnvPolicy):
        return (env,) * n_env
    env = tuple(env)
    if len(env) != n_env:
        raise ValueError(f"need {n_env} environment policies, got {len(env)}")
    return env


def run_episode(w0: WorldState, policy, env, steps: int, integ: Integrator,
                c: Constants) -> EpisodeResult:
    """Run up to `steps` control cycles of length T from w0.

    Per cycle: the ego policy and each environment policy command an
    acceleration, saturation zeroes commands pinned at velocity bounds, the
    plant integrates T seconds, and a trajectory row is recorded.  The
    episode ends early at the first collision (the final row is the state
    at the collision instant).  Reward accrues 0.5 + 0.5*v_ego/V per cycle.
    """
    if not ctx_valid(c):
        raise ValueError("invalid constants")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    envs = _env_list(env, len(w0.cars) - 1)
    world = w0
    rows: list[TrajectoryRow] = []
    reward = 0.0
    for k in range(steps):
        a_ego, label, overridden = policy.decide(world, c)
        cars = [world.ego.with_accel(a_ego)]
        for j, car in enumerate(world.cars[1:]):
            leader = world.cars[j + 2] if j + 2 < len(world.cars) else None
            cars.append(car.with_accel(envs[j].accel_at(car, leader, world.t, c)))
        cars = tuple(acc_correction(s, c) for s in cars)
        tc = world.t
        stepped, elapsed, crashed = step_cars(cars, c.T, integ, c)
        t_next = w0.t + (k + 1) * c.T if not crashed else world.t + elapsed
        world = WorldState(stepped, t=t_next, tc=tc)
        reward += 0.5 + 0.5 * world.ego.v / c.V
        rows.append(TrajectoryRow(t_next, stepped, label, overridden, crashed))
        if crashed:
            break
    return EpisodeResult(
        crashed=any(r.collided for r in rows),
        steps=len(rows),
        trajectory=tuple(rows),
        reward=reward,
    )


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    constants: Constants
    policy: str                      # "raw" | "veriphy" | "jsc" | "fallback"
    env: EnvPolicy
    integrator: Integrator
    mlp: Mlp | None = None
    steps: int = DEFAULT_STEPS
    pattern: int = 2
    density: float = 5.0
    seed: int = 0
    eps_v: float = DEFAULT_EPS_V
    brake: float | None = None


@dataclass(frozen=True)
class CampaignSummary:
    episodes: int
    crashes: int
    crash_rate: float
    reward_mean: float
    reward_sd: float
    actions: dict[str, int]
    override_rate: float

    def as_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "crashes": self.crashes,
            "crash_rate": self.crash_rate,
            "reward_mean": self.reward_mean,
            "reward_sd": self.reward_sd,
            "actions": dict(self.actions),
            "override_rate": self.override_rate,
        }


def campaign(config: CampaignConfig, n: int,
             keep_results: bool = False):
    """Run n independent episodes and aggregate crash/reward/action stats.

    Episode i uses the deterministic seed stream (config.seed, i), so a
    campaign is reproducible bit-for-bit.  Returns the summary, or
    (summary, results) when keep_results is set.
    """
    if n < 1:
        raise ValueError(f"need at least one episode, got {n}")
    policy = make_policy(config.policy, config.mlp, config.eps_v, config.brake)
    rewards = np.empty(n)
    crashes = 0
    actions: dict[str, int] = {}
    overrides = 0
    decisions = 0
    results = []
    for i in range(n):
        w0 = sample_initial(config.constants, config.pattern,
                            seed=[config.seed, i], density=config.density)
        res = run_episode(w0, policy, config.env, config.steps,
                          config.integrator, config.constants)
        rewards[i] = res.reward
        crashes += res.crashed
        for row in res.trajectory:
            actions[row.action] = actions.get(row.action, 0) + 1
            overrides += row.overridden
            decisions += 1
        if keep_results:
            results.append((w0, res))
    summary = CampaignSummary(
        episodes=n,
        crashes=crashes,
        crash_rate=crashes / n,
        reward_mean=float(np.mean(rewards)),
        reward_sd=float(np.std(rewards)),
        actions=actions,
        override_rate=overrides / decisions if decisions else 0.0,
    )
    return (summary, results) if keep_results else summary


# ---------------------------------------------------------------------------
# falsification from verifier reports
# ---------------------------------------------------------------------------

def world_from_representative(rep, pattern: int, c: Constants) -> WorldState:
    """De-normalize a verifier representative into a world state."""
    rep = np.asarray(rep, dtype=float)
    ego = CarState(rep[0] * 5 * c.V, rep[1] * 2 * c.V, 0.0)
    cars = [ego]
    for i in range(pattern - 1):
        dx, dv = rep[2 + 2 * i], rep[3 + 2 * i]
        cars.append(CarState(ego.x + dx * 5 * c.V, ego.v + dv * 2 * c.V, 0.0))
    return WorldState(tuple(cars))


def _confirmed_reps(report) -> list[tuple[int, np.ndarray]]:
    if isinstance(report, VerifyResult):
        report = result_to_json(report)
    out = []
    for region in report.get("regions", []):
        if region.get("confirmed") and region.get("representative") is not None:
            out.append((int(region["pattern"]),
                        np.asarray(region["representative"], dtype=float)))
    return out


@dataclass(frozen=True)
class FalsificationCrash:
    representative: np.ndarray
    start: WorldState
    result: EpisodeResult


def falsify(m: Mlp, report, env: EnvPolicy, integ: Integrator, c: Constants,
            steps: int = DEFAULT_STEPS, limit: int | None = None,
            policy_kind: str = "raw", brake: float | None = None) -> list[FalsificationCrash]:
    """Simulate the report's confirmed representatives and collect crashes.

    Each representative is de-normalized to a start state and run with the
    (by default raw) network against the given environment; episodes ending
    in a collision are returned.
    """
    reps = _confirmed_reps(report)
    if limit is not None:
        reps = reps[:limit]
    policy = make_policy(policy_kind, m, brake=brake)
    crashes = []
    for pattern, rep in reps:
        w0 = world_from_representative(rep, pattern, c)
        res = run_episode(w0, policy, env, steps, integ, c)
        if res.crashed:
            crashes.append(FalsificationCrash(rep, w0, res))
    return crashes


# ---------------------------------------------------------------------------
# discretisation crash search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EulerGapScenario:
    """An invariant state whose all-brake rollout collides only under the
    coarse discretisation."""

    ego: CarState
    other: CarState
    min_gap_coarse: float
    min_gap_fine: float
    min_gap_exact: float


def _all_brake_min_gap(ego: CarState, other: CarState, integ: Integrator,
                       c: Constants) -> float:
    """Minimum gap of the all-brake rollout: from its first control cycle the
    ego brakes at Bmin while the other car brakes at Bmax, both to standstill."""
    horizon = max(ego.v / -c.Bmin, other.v / -c.Bmax) + c.T
    if integ.kind == "exact":
        gap, _ = pair_gap_extrema(other.with_accel(c.Bmax), ego.with_accel(c.Bmin),
                                  horizon, c)
        return gap
    n = math.ceil(horizon * integ.substeps_per_second)
    x = np.array([ego.x, other.x], dtype=float)
    v = np.array([ego.v, other.v], dtype=float)
    a = np.array([c.Bmin, c.Bmax], dtype=float)
    _, min_gap = _kernels.euler_run(x, v, a, 1.0 / integ.substeps_per_second,
                                    n, c.V, c.L)
    return min_gap


def euler_gap_search(c: Constants, seeds: Iterable[int] | int,
                     coarse: Integrator, fine: Integrator,
                     samples_per_seed: int = 64) -> list[EulerGapScenario]:
    """Search for states where the all-brake rollout collides under the
    coarse integrator but under neither the fine one nor exact kinematics.

    Samples invariant states both at random and in a band just above the
    stopping-margin boundary, where the coarse Euler position overshoot
    (about v*h/2 per car) can consume the entire safety margin.
    """
    if isinstance(seeds, int):
        seeds = [seeds]
    h_coarse = (1.0 / coarse.substeps_per_second) if coarse.kind == "euler" else 0.0
    scenarios: list[EulerGapScenario] = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        for _ in range(samples_per_seed):
            v_e = rng.uniform(2.0, c.V)
            v_o = rng.uniform(0.0, v_e)
            boundary_gap = c.L + v_e * v_e / (-2.0 * c.Bmin) - v_o * v_o / (-2.0 * c.Bmax)
            if rng.random() < 0.5:
                delta = rng.uniform(0.0, max(h_coarse * (v_e - v_o), 1e-6))
            else:
                delta = rng.uniform(0.0, 5.0)
            gap = max(boundary_gap, c.L) + delta
            ego = CarState(0.0, v_e, c.Bmin)
            other = CarState(gap, v_o, c.Bmax)
            if not invariant_behind(ego, other, c):
                continue
            g_coarse = _all_brake_min_gap(ego, other, coarse, c)
            if g_coarse >= c.L:
                continue
            g_fine = _all_brake_min_gap(ego, other, fine, c)
            g_exact = _all_brake_min_gap(ego, other, Integrator.exact(), c)
            if g_fine >= c.L and g_exact >= c.L:
                scenarios.append(EulerGapScenario(ego, other, g_coarse, g_fine, g_exact))
    return scenarios


# ---------------------------------------------------------------------------
# file output
# ---------------------------------------------------------------------------

def write_trajectory(result: EpisodeResult, n_cars: int, path: str | Path) -> None:
    """Trajectory CSV: t, x_1..x_k, v_1..v_k, a_1..a_k, action, overridden, collided."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["t"]
            + [f"x_{i + 1}" for i in range(n_cars)]
            + [f"v_{i + 1}" for i in range(n_cars)]
            + [f"a_{i + 1}" for i in range(n_cars)]
            + ["action", "overridden", "collided"]
        )
        for row in result.trajectory:
            w.writerow(
                [f"{row.t:.6f}"]
                + [f"{car.x:.6f}" for car in row.cars]
                + [f"{car.v:.6f}" for car in row.cars]
                + [f"{car.a:.6f}" for car in row.cars]
                + [row.action, int(row.overridden), int(row.collided)]
            )


def write_crashes(crashes: Sequence[FalsificationCrash], path: str | Path) -> None:
    """Falsification CSV: one row per crashing representative."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "pattern", "representative", "steps", "t_crash"])
        for i, crash in enumerate(crashes):
            w.writerow([
                i,
                len(crash.start.cars),
                " ".join(f"{v:.9g}" for v in crash.representative),
                crash.result.steps,
                f"{crash.result.trajectory[-1].t:.6f}",
            ])


def write_scenarios(scenarios: Sequence[EulerGapScenario], path: str | Path) -> None:
    """Discretisation-crash CSV: start state and per-integrator minimum gaps."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_ego", "v_ego", "x_other", "v_other",
                    "min_gap_coarse", "min_gap_fine", "min_gap_exact"])
        for s in scenarios:
            w.writerow([f"{s.ego.x:.6f}", f"{s.ego.v:.6f}",
                        f"{s.other.x:.6f}", f"{s.other.v:.6f}",
                        f"{s.min_gap_coarse:.6f}", f"{s.min_gap_fine:.6f}",
                        f"{s.min_gap_exact:.6f}"])
