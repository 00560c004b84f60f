"""Symbolic parameter block for the single-lane car-following model.

All quantities are SI: seconds, metres, m/s, m/s^2.  Braking decelerations
are negative numbers; ``Bmax`` is the strongest brake the hardware can
apply, ``Bmin`` the weakest brake that is always guaranteed, so
``Bmax <= Bmin < 0``.  Symmetrically ``0 < Amin <= Amax`` for acceleration.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path


@dataclass(frozen=True)
class Constants:
    """Model constants: reaction period, car length, speed limit, accel bounds."""

    T: float = 1.0      # controller reaction period (s)
    L: float = 5.0      # car length / minimum separation (m)
    V: float = 40.0     # speed limit (m/s)
    Amin: float = 5.0   # guaranteed available acceleration (m/s^2)
    Amax: float = 5.0   # maximum acceleration (m/s^2)
    Bmin: float = -3.0  # guaranteed available braking deceleration (m/s^2, negative)
    Bmax: float = -5.0  # maximum braking deceleration (m/s^2, negative)

    def with_bmin(self, bmin: float) -> "Constants":
        return replace(self, Bmin=bmin)


DEFAULTS = Constants()

# Config-file keys -> Constants field names.
_KEYS = {
    "T": "T",
    "L": "L",
    "V": "V",
    "A_min": "Amin",
    "A_max": "Amax",
    "B_min": "Bmin",
    "B_max": "Bmax",
}


def ctx_valid(c: Constants) -> bool:
    """True iff the constants satisfy the model's admissibility constraints.

    T, L, V positive and Bmax <= Bmin < 0 < Amin <= Amax.
    """
    return (
        c.T > 0
        and c.L > 0
        and c.V > 0
        and c.Bmax <= c.Bmin < 0 < c.Amin <= c.Amax
    )


def in_context(v: float, a: float, c: Constants) -> bool:
    """True iff a car's speed and acceleration lie in the modelled ranges."""
    return 0 <= v <= c.V and c.Bmax <= a <= c.Amax


def load_constants(path: str | Path) -> Constants:
    """Load constants from a flat key/value file.

    Lines are ``KEY = VALUE`` with ``#`` comments; keys are
    T, L, V, A_min, A_max, B_min, B_max.  Missing keys keep their defaults.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'KEY = VALUE', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[_KEYS[key]] = float(val.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad number {val.strip()!r}") from exc
    c = replace(DEFAULTS, **values)
    if not ctx_valid(c):
        raise ValueError(f"{path}: constants violate the admissibility constraints")
    return c
