"""Immutable state records for cars and the simulated world."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable


@dataclass(frozen=True)
class CarState:
    """A point car: position x (m), velocity v (m/s), commanded acceleration a (m/s^2)."""

    x: float
    v: float
    a: float = 0.0

    def with_accel(self, a: float) -> "CarState":
        return replace(self, a=a)


@dataclass(frozen=True)
class DuoState:
    """Ego/other pair with the global clock t and last ego-controller time tc."""

    ego: CarState
    other: CarState
    t: float = 0.0
    tc: float = 0.0


@dataclass(frozen=True)
class WorldState:
    """Ego plus 1..4 environment cars, ordered ego first then by increasing x."""

    cars: tuple[CarState, ...]
    t: float = 0.0
    tc: float = 0.0

    def __post_init__(self) -> None:
        if not 2 <= len(self.cars) <= 5:
            raise ValueError(f"world needs 2..5 cars, got {len(self.cars)}")

    @property
    def ego(self) -> CarState:
        return self.cars[0]

    @property
    def front(self) -> CarState:
        return self.cars[1]

    def replace_cars(self, cars: Iterable[CarState]) -> "WorldState":
        return replace(self, cars=tuple(cars))


def world(cars: Iterable[CarState], t: float = 0.0, tc: float = 0.0) -> WorldState:
    return WorldState(cars=tuple(cars), t=t, tc=tc)
