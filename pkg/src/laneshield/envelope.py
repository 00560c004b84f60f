"""Braking-envelope predicates for single-lane car following.

The predicates decide whether a candidate ego acceleration is safe against
a worst-case other car.  When driving behind, the worst case is the other
car braking at full force ``Bmax``; the comparison is between worst-case
stopping positions, with a correction term for the distance covered before
the ego's next control cycle.  When driving ahead, the same reasoning is
applied in a frame moving at the speed limit ``V``: velocities become
``v - V`` and "stopping" means reaching ``V``.  The constant frame offset
``V*t`` cancels on both sides of every comparison and is dropped.

Inequalities are kept exactly as in the verified formulas: separation uses
``<=`` while every stopping-margin comparison is strict.  All arithmetic is
plain binary64; the predicates are pure functions.
"""
from __future__ import annotations

from .constants import Constants, ctx_valid
from .state import CarState


def stop_dist_ego(x: float, v: float, a: float) -> float:
    """Stopping position of a car at (x, v) holding constant deceleration a < 0."""
    if a >= 0:
        raise ValueError(f"stopping position needs a < 0, got a={a}")
    return x - v * v / (2.0 * a)


def stop_dist_other(x: float, v: float, c: Constants) -> float:
    """Worst-case stopping position of the other car: full braking at Bmax."""
    return x - v * v / (2.0 * c.Bmax)


def corr(a: float, v: float, c: Constants) -> float:
    """Extra stopping distance incurred by holding acceleration a for one
    period T before braking at Bmin, relative to braking at Bmin now.

    Equals the exact extra distance when no speed clamping occurs and
    over-approximates it otherwise.  Zero at a = Bmin.
    """
    return (-a / c.Bmin + 1.0) * (a / 2.0 * c.T * c.T + c.T * v)


def _stop_pos(x: float, v: float, a: float) -> float:
    # x - v^2/(2a) without the sign check; monitor disjuncts evaluate it
    # under guards that keep a != 0.
    return x - v * v / (2.0 * a)


def safe_back(ego: CarState, other: CarState, c: Constants) -> bool:
    """Safety of the candidate acceleration ego.a while driving behind.

    Requires current separation of at least L and, in all three cases
    (braking at least as hard as Bmin / stopping within T / braking from
    the next cycle on), a strict margin between the ego's worst-case
    stopping position and the other car's full-braking stopping position.
    """
    d_o = stop_dist_other(other.x, other.v, c)
    a = ego.a
    if not ego.x + c.L <= other.x:
        return False
    if a <= c.Bmin and stop_dist_ego(ego.x, ego.v, c.Bmin) + c.L < d_o:
        return True
    # Reachable with a < 0 only while v >= 0; evaluated as false at a >= 0
    # (out-of-model reversing states), where the stopping position is undefined.
    if c.Bmin <= a < 0 and ego.v + a * c.T < 0 and _stop_pos(ego.x, ego.v, a) + c.L < d_o:
        return True
    if (
        c.Bmin <= a
        and ego.v + a * c.T >= 0
        and stop_dist_ego(ego.x, ego.v, c.Bmin) + corr(a, ego.v, c) + c.L < d_o
    ):
        return True
    return False


def safe_front(ego: CarState, other: CarState, c: Constants) -> bool:
    """Safety of the candidate acceleration ego.a while driving ahead.

    Mirror image of safe_back in the frame moving at V: the other car
    worst-case accelerates at Amax, the ego is guaranteed Amin.
    """
    vbar_e = ego.v - c.V
    vbar_o = other.v - c.V
    d_o = other.x - vbar_o * vbar_o / (2.0 * c.Amax)
    a = ego.a

    def d_e(acc: float) -> float:
        return ego.x - vbar_e * vbar_e / (2.0 * acc)

    if not other.x + c.L <= ego.x:
        return False
    if c.Amin <= a and d_o + c.L < d_e(c.Amin):
        return True
    if a <= c.Amin and a != 0 and vbar_e + a * c.T > 0 and d_o + c.L < d_e(a):
        return True
    if (
        a <= c.Amin
        and vbar_e + a * c.T <= 0
        and d_o + c.L < d_e(c.Amin) + (-a / c.Amin + 1.0) * (a / 2.0 * c.T * c.T + vbar_e * c.T)
    ):
        return True
    return False


def invariant_behind(ego: CarState, other: CarState, c: Constants) -> bool:
    """Controllable-state invariant while behind: speeds in [0, V], separation
    at least L, and braking at Bmin now stops strictly more than L short of
    the other car's full-braking stop."""
    return (
        0 <= other.v <= c.V
        and 0 <= ego.v <= c.V
        and ego.x + c.L <= other.x
        and stop_dist_ego(ego.x, ego.v, c.Bmin) + c.L < stop_dist_other(other.x, other.v, c)
    )


def invariant_ahead(ego: CarState, other: CarState, c: Constants) -> bool:
    """Controllable-state invariant while ahead, in the V-frame."""
    vbar_e = ego.v - c.V
    vbar_o = other.v - c.V
    d_e = ego.x - vbar_e * vbar_e / (2.0 * c.Amin)
    d_o = other.x - vbar_o * vbar_o / (2.0 * c.Amax)
    return (
        0 <= ego.v <= c.V
        and 0 <= other.v <= c.V
        and other.x + c.L <= ego.x
        and d_o + c.L < d_e
    )


__all__ = [
    "stop_dist_ego",
    "stop_dist_other",
    "corr",
    "safe_back",
    "safe_front",
    "invariant_behind",
    "invariant_ahead",
    "ctx_valid",
]
