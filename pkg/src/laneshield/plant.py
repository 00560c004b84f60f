"""Physical plant: saturation, exact and forward-Euler integration, collisions.

A car holds a constant commanded acceleration between control events; its
velocity is confined to [0, V].  The exact integrator resolves the bound
crossing analytically (quadratic until the crossing instant, linear at the
bound afterwards) so trajectories are bit-reproducible.  The Euler
integrator updates position from the pre-step velocity and then clamps the
velocity; during braking this overshoots the exact position by about
``v*h/2``, which is precisely the discretisation artifact the crash-search
harness exploits.

Collision semantics follow the integrator: under exact integration the gap
between two cars is piecewise quadratic in time, so minima and L-crossings
are found in closed form; under Euler integration the gap is checked on the
substep grid, as a discrete-time simulator would.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constants import Constants
from .state import CarState


@dataclass(frozen=True)
class Integrator:
    """Integration scheme: exact closed form, or forward Euler at a fixed rate."""

    kind: str  # "exact" | "euler"
    substeps_per_second: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "euler"):
            raise ValueError(f"unknown integrator kind {self.kind!r}")
        if self.kind == "euler" and self.substeps_per_second < 1:
            raise ValueError("euler integrator needs substeps_per_second >= 1")

    @staticmethod
    def exact() -> "Integrator":
        return Integrator("exact")

    @staticmethod
    def euler(substeps_per_second: int) -> "Integrator":
        return Integrator("euler", substeps_per_second)

    @staticmethod
    def parse(text: str) -> "Integrator":
        """Parse "exact" or "euler:N"."""
        if text == "exact":
            return Integrator.exact()
        if text.startswith("euler:"):
            return Integrator.euler(int(text.split(":", 1)[1]))
        raise ValueError(f"bad integrator spec {text!r} (use 'exact' or 'euler:N')")


def acc_correction(s: CarState, c: Constants) -> CarState:
    """Zero the acceleration of a car pinned at a velocity bound.

    A stopped car commanded to brake stays stopped; a car at the speed
    limit commanded to accelerate stays at the limit.
    """
    if (s.v == 0 and s.a < 0) or (s.v == c.V and s.a > 0):
        return s.with_accel(0.0)
    return s


def _bound_hit(v: float, a: float, V: float) -> tuple[float, float]:
    # (time until the velocity bound is reached, bound velocity)
    if a > 0:
        return max((V - v) / a, 0.0), V
    if a < 0:
        return max(-v / a, 0.0), 0.0
    return math.inf, v


def exact_step(s: CarState, dt: float, c: Constants) -> CarState:
    """Advance a car by dt under constant acceleration with exact kinematics.

    The commanded acceleration field is left unchanged; saturation of the
    command itself is acc_correction's job at control boundaries.
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    t_hit, v_b = _bound_hit(s.v, s.a, c.V)
    if t_hit >= dt:
        return CarState(s.x + s.v * dt + 0.5 * s.a * dt * dt, s.v + s.a * dt, s.a)
    x_hit = s.x + s.v * t_hit + 0.5 * s.a * t_hit * t_hit
    return CarState(x_hit + v_b * (dt - t_hit), v_b, s.a)


def velocity_at(s: CarState, t: float, c: Constants) -> float:
    """Velocity after holding the commanded acceleration for t seconds."""
    t_hit, v_b = _bound_hit(s.v, s.a, c.V)
    return s.v + s.a * t if t <= t_hit else v_b


def euler_substep(s: CarState, h: float, c: Constants) -> CarState:
    """One forward-Euler substep: position from the pre-step velocity, then
    clamp the velocity to [0, V]."""
    if h <= 0:
        raise ValueError(f"substep size must be positive, got {h}")
    v_next = min(max(s.v + s.a * h, 0.0), c.V)
    return CarState(s.x + s.v * h, v_next, s.a)


def integrate(s: CarState, dt: float, integ: Integrator, c: Constants) -> CarState:
    """Advance a car by dt with the selected integrator."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if integ.kind == "exact":
        return exact_step(s, dt, c)
    n = round(dt * integ.substeps_per_second)
    if n == 0:
        return s
    h = 1.0 / integ.substeps_per_second
    x = np.array([s.x], dtype=float)
    v = np.array([s.v], dtype=float)
    a = np.array([s.a], dtype=float)
    _kernels.euler_run(x, v, a, h, n, c.V, 0.0)
    return CarState(float(x[0]), float(v[0]), s.a)


def collision(a: CarState, b: CarState, c: Constants) -> bool:
    """True iff the two cars are closer than the minimum separation L."""
    return abs(a.x - b.x) < c.L


def pair_gap_extrema(front: CarState, rear: CarState, dt: float, c: Constants):
    """Minimum of front.x(t) - rear.x(t) over [0, dt] under exact kinematics.

    Returns (min_gap, t_min).  Both cars hold their commanded acceleration;
    the gap is piecewise quadratic with knots where either car reaches a
    velocity bound, so candidates are the knots plus relative-velocity
    roots inside each piece.
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    tf, _ = _bound_hit(front.v, front.a, c.V)
    tr, _ = _bound_hit(rear.v, rear.a, c.V)
    knots = sorted({0.0, dt} | {t for t in (tf, tr) if 0.0 < t < dt})
    best = math.inf
    t_best = 0.0

    def gap(t: float) -> float:
        return exact_step(front, t, c).x - exact_step(rear, t, c).x

    prev_t = knots[0]
    prev_g = gap(prev_t)
    prev_dv = velocity_at(front, prev_t, c) - velocity_at(rear, prev_t, c)
    if prev_g < best:
        best, t_best = prev_g, prev_t
    for t in knots[1:]:
        g = gap(t)
        dv = velocity_at(front, t, c) - velocity_at(rear, t, c)
        if g < best:
            best, t_best = g, t
        if (prev_dv < 0 < dv) or (prev_dv > 0 > dv):
            t_star = prev_t + prev_dv * (t - prev_t) / (prev_dv - dv)
            g_star = gap(t_star)
            if g_star < best:
                best, t_best = g_star, t_star
        prev_t, prev_g, prev_dv = t, g, dv
    return best, t_best


def first_gap_crossing(front: CarState, rear: CarState, dt: float, c: Constants):
    """Earliest t in [0, dt] with front.x(t) - rear.x(t) < L, or None.

    Solved piecewise on the quadratic gap segments.
    """
    tf, _ = _bound_hit(front.v, front.a, c.V)
    tr, _ = _bound_hit(rear.v, rear.a, c.V)
    knots = sorted({0.0, dt} | {t for t in (tf, tr) if 0.0 < t < dt})

    def state_pair(t: float):
        return exact_step(front, t, c), exact_step(rear, t, c)

    f0, r0 = state_pair(0.0)
    if f0.x - r0.x < c.L:
        return 0.0
    for ta, tb in zip(knots[:-1], knots[1:]):
        fa, ra = state_pair(ta)
        g0 = fa.x - ra.x - c.L
        dv = velocity_at(front, ta, c) - velocity_at(rear, ta, c)
        # effective accelerations are constant inside the piece
        da = ((velocity_at(front, tb, c) - velocity_at(rear, tb, c)) - dv) / (tb - ta) if tb > ta else 0.0
        # g(ta + u) - L = g0 + dv*u + da*u^2/2
        roots = []
        if abs(da) > 1e-15:
            disc = dv * dv - 2.0 * da * g0
            if disc >= 0:
                sq = math.sqrt(disc)
                roots = [(-dv - sq) / da, (-dv + sq) / da]
        elif abs(dv) > 1e-15:
            roots = [-g0 / dv]
        hits = sorted(u for u in roots if 0 <= u <= tb - ta)
        for u in hits:
            # crossing counts only if the gap actually dips below L
            probe = min(u + 1e-9, tb - ta)
            if g0 + dv * probe + 0.5 * da * probe * probe < 0:
                return ta + u
    return None


def step_cars_exact(cars: tuple[CarState, ...], dt: float, c: Constants):
    """Advance all cars by dt exactly, stopping at the first collision.

    Cars are ordered rear to front.  Returns (new_cars, elapsed, crashed):
    if some adjacent pair's gap crosses below L during the window, all cars
    are advanced to the earliest crossing instant and crashed is True.
    """
    t_crash = None
    for rear, front in zip(cars[:-1], cars[1:]):
        t = first_gap_crossing(front, rear, dt, c)
        if t is not None and (t_crash is None or t < t_crash):
            t_crash = t
    elapsed = dt if t_crash is None else t_crash
    stepped = tuple(exact_step(s, elapsed, c) for s in cars)
    return stepped, elapsed, t_crash is not None


def step_cars_euler(cars: tuple[CarState, ...], dt: float, integ: Integrator, c: Constants):
    """Advance all cars in lockstep Euler substeps, stopping at the first
    substep whose state has an adjacent gap below L.

    Returns (new_cars, elapsed, crashed).
    """
    n = round(dt * integ.substeps_per_second)
    if n == 0:
        return cars, 0.0, False
    h = 1.0 / integ.substeps_per_second
    x = np.array([s.x for s in cars], dtype=float)
    v = np.array([s.v for s in cars], dtype=float)
    a = np.array([s.a for s in cars], dtype=float)
    crash_step, _ = _kernels.euler_run(x, v, a, h, n, c.V, c.L)
    steps = n if crash_step < 0 else crash_step
    new_cars = tuple(
        CarState(float(x[i]), float(v[i]), s.a) for i, s in enumerate(cars)
    )
    return new_cars, steps * h, crash_step >= 0


def step_cars(cars: tuple[CarState, ...], dt: float, integ: Integrator, c: Constants):
    """Integrator dispatch for whole-world stepping with collision detection."""
    if integ.kind == "exact":
        return step_cars_exact(cars, dt, c)
    return step_cars_euler(cars, dt, integ, c)
