"""Runtime monitor and shields for the discrete-action controller.

`allow_behind` is the closed-form per-action monitor for driving behind:
brake carries no state condition, idle and accelerate require a strict
stopping margin against the worst-case braking front car.  `ctrl_nn_allows`
is the semantic guard oracle the monitor is equivalent to on behind-states:
an action passes if it is a brake while behind, an acceleration while
ahead, or satisfies the full safety envelope.

Two shields wrap a network's scores.  The sandbox (`veriphy_step`) replaces
a denied action with the fallback.  The speculative filter (`jsc_filter`)
only intervenes while the state is inside the (velocity-relaxed) invariant;
it then returns the highest-scoring allowed action.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .constants import Constants
from .envelope import (
    _stop_pos,
    corr,
    safe_back,
    safe_front,
    stop_dist_ego,
    stop_dist_other,
)
from .network import Action, ActionScores, action_to_accel, select_action
from .state import CarState

DEFAULT_EPS_V = 0.5


class DenialReason(Enum):
    NOT_BEHIND = "NotBehind"
    GAP_VIOLATION = "GapViolation"
    STOPPING_MARGIN = "StoppingMargin"
    IDLE_MARGIN = "IdleMargin"
    ACCEL_MARGIN = "AccelMargin"


@dataclass(frozen=True)
class Verdict:
    allowed: bool
    reason: DenialReason | None = None

    def __post_init__(self) -> None:
        if self.allowed == (self.reason is not None):
            raise ValueError("reason must be present exactly when denied")


@dataclass(frozen=True)
class ShieldDecision:
    action: Action
    overridden: bool
    monitor_active: bool

    def __post_init__(self) -> None:
        if self.overridden and not self.monitor_active:
            raise ValueError("an inactive monitor cannot override")


def allow_behind(act: Action, ego: CarState, other: CarState, c: Constants) -> Verdict:
    """Per-action monitor for the behind case.

    Brake is always allowed.  Idle needs v >= 0 and the braking margin plus
    one period of travel at the current speed.  Accelerate needs one of the
    three envelope disjuncts at a = Amax (the first is vacuous for valid
    constants but kept as printed).
    """
    d_o = stop_dist_other(other.x, other.v, c)
    if act is Action.BRAKE:
        return Verdict(True)
    if act is Action.IDLE:
        ok = (
            c.Bmin <= 0 <= c.Amax
            and ego.v >= 0
            and stop_dist_ego(ego.x, ego.v, c.Bmin) + (0.0 / c.Bmin + 1.0) * c.T * ego.v + c.L < d_o
        )
        return Verdict(True) if ok else Verdict(False, DenialReason.IDLE_MARGIN)
    a = c.Amax
    ok = (
        (c.Bmax <= a <= c.Bmin and stop_dist_ego(ego.x, ego.v, c.Bmin) + c.L < d_o)
        or (c.Bmin <= a and ego.v + a * c.T < 0 and _stop_pos(ego.x, ego.v, a) + c.L < d_o)
        or (
            c.Bmin <= a
            and ego.v + a * c.T >= 0
            and stop_dist_ego(ego.x, ego.v, c.Bmin) + corr(a, ego.v, c) + c.L < d_o
        )
    )
    return Verdict(True) if ok else Verdict(False, DenialReason.ACCEL_MARGIN)


def ctrl_nn_allows(act: Action, ego: CarState, other: CarState, c: Constants,
                   brake: float | None = None) -> bool:
    """Semantic guard oracle: the action's acceleration must be a brake while
    behind, an acceleration while ahead, or satisfy the safety envelope."""
    a = action_to_accel(act, c, brake)
    if ego.x <= other.x and c.Bmax <= a <= c.Bmin:
        return True
    if ego.x >= other.x and c.Amin <= a <= c.Amax:
        return True
    cand = ego.with_accel(a)
    return safe_back(cand, other, c) or safe_front(cand, other, c)


def model_monitor(ego: CarState, other: CarState, c: Constants,
                  eps_v: float = DEFAULT_EPS_V) -> bool:
    """Invariant membership with velocity bounds relaxed to [-eps_v, V+eps_v].

    The relaxation keeps the check active on simulator states that stray
    slightly outside [0, V].
    """
    if eps_v < 0:
        raise ValueError(f"eps_v must be nonnegative, got {eps_v}")
    return (
        -eps_v <= other.v <= c.V + eps_v
        and -eps_v <= ego.v <= c.V + eps_v
        and ego.x + c.L <= other.x
        and stop_dist_ego(ego.x, ego.v, c.Bmin) + c.L < stop_dist_other(other.x, other.v, c)
    )


def veriphy_step(scores: ActionScores, ego: CarState, other: CarState, c: Constants,
                 brake: float | None = None) -> ShieldDecision:
    """Sandbox step: pass the selected action through if the guard oracle
    allows it, otherwise fall back (brake behind, accelerate ahead)."""
    act = select_action(scores)
    if ctrl_nn_allows(act, ego, other, c, brake):
        return ShieldDecision(act, overridden=False, monitor_active=True)
    fallback = Action.BRAKE if ego.x <= other.x else Action.ACCELERATE
    return ShieldDecision(fallback, overridden=True, monitor_active=True)


_RANK_PRIORITY = {Action.BRAKE: 0, Action.IDLE: 1, Action.ACCELERATE: 2}


def jsc_filter(scores: ActionScores, ego: CarState, other: CarState, c: Constants,
               eps_v: float = DEFAULT_EPS_V, brake: float | None = None) -> ShieldDecision:
    """Speculative shield step.

    Outside the (relaxed) invariant the environment is not behaving as
    modelled, so the raw action passes through un-checked.  Inside it, the
    three actions are ranked by score (ties towards the lowest speed) and
    the first allowed one is returned; brake is always allowed behind, so a
    decision always exists.
    """
    proposed = select_action(scores)
    if not model_monitor(ego, other, c, eps_v):
        return ShieldDecision(proposed, overridden=False, monitor_active=False)
    by_score = {Action.BRAKE: scores.y1, Action.IDLE: scores.y2, Action.ACCELERATE: scores.y3}
    ranked = sorted(Action, key=lambda a: (-by_score[a], _RANK_PRIORITY[a]))
    for act in ranked:
        if ctrl_nn_allows(act, ego, other, c, brake):
            return ShieldDecision(act, overridden=act is not proposed, monitor_active=True)
    raise AssertionError("unreachable: brake is always allowed behind")


def monitor_verdict(act: Action, ego: CarState, other: CarState, c: Constants,
                    eps_v: float = DEFAULT_EPS_V) -> Verdict:
    """Diagnostic verdict for one state/action pair (CLI surface).

    Reports why the behind-monitor does not apply (ahead, separation below
    L, stopping margin already lost) before the per-action condition.
    """
    if ego.x > other.x:
        return Verdict(False, DenialReason.NOT_BEHIND)
    if not ego.x + c.L <= other.x:
        return Verdict(False, DenialReason.GAP_VIOLATION)
    if not model_monitor(ego, other, c, eps_v):
        return Verdict(False, DenialReason.STOPPING_MARGIN)
    return allow_behind(act, ego, other, c)
