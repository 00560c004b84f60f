"""Acceleration-producing controllers.

Contains the deterministic fallback of the verified envelope, the
continuous-action envelope check, the environment drivers (IDM, emergency
brake, constant, scripted), and the reference-velocity proportional
controller that reproduces the "brake can accelerate" action-space gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import Constants
from .envelope import safe_back, safe_front
from .network import Action
from .state import CarState


@dataclass(frozen=True)
class IdmParams:
    """Intelligent Driver Model parameters (all positive)."""

    v0: float = 30.0     # desired speed (m/s)
    s0: float = 10.0     # jam distance (m)
    Th: float = 1.5      # desired time headway (s)
    a_idm: float = 3.0   # maximum acceleration (m/s^2)
    b_idm: float = 5.0   # comfortable deceleration (m/s^2, positive)
    delta: float = 4.0   # free-flow exponent


@dataclass(frozen=True)
class EnvPolicy:
    """Environment-car controller.

    kind is one of "idm", "emergency_brake", "constant", "scripted".
    "constant" uses `accel`; "scripted" uses `schedule`, a sequence of
    (duration, acceleration) segments looked up by absolute time (the last
    segment's acceleration holds beyond the schedule).
    """

    kind: str
    accel: float = 0.0
    schedule: tuple[tuple[float, float], ...] = ()
    idm: IdmParams = IdmParams()

    def __post_init__(self) -> None:
        if self.kind not in ("idm", "emergency_brake", "constant", "scripted"):
            raise ValueError(f"unknown env policy kind {self.kind!r}")
        if self.kind == "scripted" and not self.schedule:
            raise ValueError("scripted policy needs a non-empty schedule")

    @staticmethod
    def idm_policy(params: IdmParams = IdmParams()) -> "EnvPolicy":
        return EnvPolicy("idm", idm=params)

    @staticmethod
    def emergency_brake() -> "EnvPolicy":
        return EnvPolicy("emergency_brake")

    @staticmethod
    def constant(a: float) -> "EnvPolicy":
        return EnvPolicy("constant", accel=a)

    @staticmethod
    def scripted(schedule) -> "EnvPolicy":
        return EnvPolicy("scripted", schedule=tuple((float(d), float(a)) for d, a in schedule))

    def accel_at(self, car: CarState, leader: CarState | None, t: float, c: Constants) -> float:
        """Acceleration commanded at time t, clamped to [Bmax, Amax]."""
        if self.kind == "emergency_brake":
            return emergency_brake_accel(c)
        if self.kind == "constant":
            a = self.accel
        elif self.kind == "scripted":
            a = self.schedule[-1][1]
            elapsed = 0.0
            for dur, seg_a in self.schedule:
                if t < elapsed + dur:
                    a = seg_a
                    break
                elapsed += dur
        else:
            return idm_accel(car, leader, self.idm, c)
        return min(max(a, c.Bmax), c.Amax)


def fallback_accel(ego: CarState, other: CarState, c: Constants) -> float:
    """Verified fallback: brake at Bmin when behind (ties count as behind),
    accelerate at Amin when ahead."""
    return c.Bmin if ego.x <= other.x else c.Amin


def envelope_check(ego: CarState, other: CarState, a_candidate: float, c: Constants) -> bool:
    """True iff the candidate acceleration satisfies the safety envelope."""
    cand = ego.with_accel(a_candidate)
    return safe_back(cand, other, c) or safe_front(cand, other, c)


def idm_accel(car: CarState, leader: CarState | None, p: IdmParams, c: Constants) -> float:
    """Intelligent Driver Model acceleration, clamped to [Bmax, Amax].

    Free-road term a_idm*(1 - (v/v0)^delta) plus, with a leader, the
    interaction term -(s*/s)^2 with the dynamic desired gap
    s* = s0 + v*Th + v*dv/(2*sqrt(a_idm*b_idm)).  Positions are point
    positions; a nonpositive gap clamps to Bmax.
    """
    a = p.a_idm * (1.0 - (car.v / p.v0) ** p.delta)
    if leader is not None:
        s = leader.x - car.x
        if s <= 0:
            return c.Bmax
        dv = car.v - leader.v
        s_star = p.s0 + car.v * p.Th + car.v * dv / (2.0 * math.sqrt(p.a_idm * p.b_idm))
        a -= p.a_idm * (s_star / s) ** 2
    return min(max(a, c.Bmax), c.Amax)


def emergency_brake_accel(c: Constants) -> float:
    """Full braking, independent of state."""
    return c.Bmax


V_REF_STEP = 5.0


def meta_action_accel(v: float, v_r: float, act: Action, gain: float, c: Constants):
    """Reference-velocity action semantics with a proportional low-level loop.

    Brake/Accelerate move the reference v_r down/up one 5 m/s notch within
    [0, V]; Idle keeps it.  The commanded acceleration is
    clamp(gain*(v_r' - v), Bmax, Amax).  Returns (accel, v_r_next).  Note
    that "brake" yields a positive acceleration whenever v < v_r - 5.
    """
    if act is Action.BRAKE:
        v_r_next = max(v_r - V_REF_STEP, 0.0)
    elif act is Action.ACCELERATE:
        v_r_next = min(v_r + V_REF_STEP, c.V)
    else:
        v_r_next = v_r
    a = min(max(gain * (v_r_next - v), c.Bmax), c.Amax)
    return a, v_r_next


DEFAULT_GAIN = 1.0 / 0.6
