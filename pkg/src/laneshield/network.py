"""Feed-forward policy network: weight file I/O, evaluation, action selection.

The network scores the three discrete actions (brake, idle, accelerate) from
a normalized observation of up to five cars.  Each car contributes five
features in the order (presence, x, y, vx, vy); lateral features are zero in
the single-lane setting.  The ego car reports its absolute position scaled
by 5V and velocity scaled by 2V; every other car reports position and
velocity relative to the ego with the same scales.  Values outside the
nominal [0,1] / [-1,1] ranges pass through un-clamped so monitors can
observe out-of-model states.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .constants import Constants
from .state import WorldState

N_CARS = 5
FEATURES_PER_CAR = 5
OBS_DIM = N_CARS * FEATURES_PER_CAR
DEFAULT_FEATURE_ORDER = ("p", "x", "y", "vx", "vy")


class Action(Enum):
    BRAKE = "brake"
    IDLE = "idle"
    ACCELERATE = "accelerate"

    @staticmethod
    def parse(text: str) -> "Action":
        aliases = {"brake": Action.BRAKE, "idle": Action.IDLE,
                   "accel": Action.ACCELERATE, "accelerate": Action.ACCELERATE}
        try:
            return aliases[text.lower()]
        except KeyError:
            raise ValueError(f"unknown action {text!r}") from None


class ActionScores(NamedTuple):
    """Raw network outputs for (brake, idle, accelerate)."""

    y1: float
    y2: float
    y3: float


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # [out, in]
    bias: np.ndarray     # [out]
    activation: str      # "relu" | "linear"


@dataclass(frozen=True)
class Mlp:
    layers: tuple[Layer, ...]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]


def _validate(layers: tuple[Layer, ...], where: str) -> Mlp:
    if not layers:
        raise ValueError(f"{where}: network has no layers")
    for i, layer in enumerate(layers):
        if layer.activation not in ("relu", "linear"):
            raise ValueError(f"{where}: layer {i} has unknown activation {layer.activation!r}")
        if layer.weights.ndim != 2:
            raise ValueError(f"{where}: layer {i} weights must be a matrix")
        if layer.bias.shape != (layer.weights.shape[0],):
            raise ValueError(
                f"{where}: layer {i} bias length {layer.bias.shape[0]} "
                f"!= output size {layer.weights.shape[0]}"
            )
        if i > 0 and layer.weights.shape[1] != layers[i - 1].weights.shape[0]:
            raise ValueError(
                f"{where}: layer {i} input size {layer.weights.shape[1]} "
                f"!= layer {i - 1} output size {layers[i - 1].weights.shape[0]}"
            )
    if layers[-1].weights.shape[0] != 3:
        raise ValueError(f"{where}: final layer must have 3 outputs, "
                         f"got {layers[-1].weights.shape[0]}")
    if layers[0].weights.shape[1] not in (2 * FEATURES_PER_CAR, OBS_DIM):
        raise ValueError(f"{where}: input size must be 10 (2-car) or 25 (5-car), "
                         f"got {layers[0].weights.shape[1]}")
    return Mlp(layers)


def mlp(layers) -> Mlp:
    """Build and validate a network from (weights, bias, activation) triples."""
    built = tuple(
        Layer(np.asarray(w, dtype=float), np.asarray(b, dtype=float), act)
        for w, b, act in layers
    )
    return _validate(built, "mlp")


def load_mlp(path: str | Path) -> Mlp:
    """Load a network from the JSON weight schema.

    Schema: {"layers": [{"weights": [[...]], "bias": [...],
    "activation": "relu"|"linear"}, ...]}.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "layers" not in doc:
        raise ValueError(f"{path}: missing top-level 'layers'")
    layers = []
    for i, spec in enumerate(doc["layers"]):
        try:
            layers.append(Layer(
                np.asarray(spec["weights"], dtype=float),
                np.asarray(spec["bias"], dtype=float),
                str(spec["activation"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: layer {i} malformed ({exc})") from exc
    return _validate(tuple(layers), str(path))


def save_mlp(m: Mlp, path: str | Path) -> None:
    """Write a network in the JSON weight schema."""
    doc = {"layers": [
        {"weights": layer.weights.tolist(), "bias": layer.bias.tolist(),
         "activation": layer.activation}
        for layer in m.layers
    ]}
    Path(path).write_text(json.dumps(doc))


def constant_mlp(scores: tuple[float, float, float], input_dim: int = 10) -> Mlp:
    """Network with zero weights that always outputs the given score triple."""
    return mlp([(np.zeros((3, input_dim)), np.asarray(scores, dtype=float), "linear")])


def forward(m: Mlp, obs) -> ActionScores:
    """Deterministic forward pass; obs length must match the input size."""
    x = np.asarray(obs, dtype=float)
    if x.shape[-1] != m.input_dim:
        raise ValueError(f"observation size {x.shape[-1]} != network input {m.input_dim}")
    for layer in m.layers:
        x = x @ layer.weights.T + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
    if x.ndim == 1:
        return ActionScores(float(x[0]), float(x[1]), float(x[2]))
    return x  # batched evaluation returns the raw [N, 3] array


def select_action(s: ActionScores) -> Action:
    """Argmax with ties resolved towards the lowest speed.

    Brake wins any tie with idle or accelerate; idle wins its tie with
    accelerate.  The three guard conditions partition score space.
    """
    y1, y2, y3 = s
    if y1 >= y2 and y1 >= y3:
        return Action.BRAKE
    if y2 > y1 and y2 >= y3:
        return Action.IDLE
    if y3 > y1 and y3 > y2:
        return Action.ACCELERATE
    raise ValueError(f"scores do not select an action: {s}")


def action_to_accel(act: Action, c: Constants, brake: float | None = None) -> float:
    """Concrete acceleration for a discrete action.

    Brake maps to `brake` (default Bmin, must lie in [Bmax, Bmin]), idle to
    zero, accelerate to Amax.
    """
    if act is Action.BRAKE:
        a = c.Bmin if brake is None else brake
        if not c.Bmax <= a <= c.Bmin:
            raise ValueError(f"brake acceleration {a} outside [{c.Bmax}, {c.Bmin}]")
        return a
    if act is Action.IDLE:
        return 0.0
    return c.Amax


def _feature_slot(order: tuple[str, ...], name: str) -> int:
    try:
        return order.index(name)
    except ValueError:
        raise ValueError(f"feature order {order} lacks {name!r}") from None


def observe(w: WorldState, c: Constants,
            order: tuple[str, ...] = DEFAULT_FEATURE_ORDER) -> np.ndarray:
    """Build the 25-feature normalized observation for a world state.

    Cars must be ordered ego first, then by strictly increasing position.
    Absent car slots are zero-filled with presence 0, so presence is
    prefix-closed.  `order` permutes the five per-car feature slots.
    """
    if sorted(order) != sorted(DEFAULT_FEATURE_ORDER):
        raise ValueError(f"feature order must permute {DEFAULT_FEATURE_ORDER}, got {order}")
    for a, b in zip(w.cars[1:], w.cars[2:]):
        if not a.x < b.x:
            raise ValueError(f"environment cars out of order: x={a.x} !< x={b.x}")
    obs = np.zeros(OBS_DIM)
    i_p = _feature_slot(order, "p")
    i_x = _feature_slot(order, "x")
    i_v = _feature_slot(order, "vx")
    ego = w.ego
    obs[i_p] = 1.0
    obs[i_x] = ego.x / (5.0 * c.V)
    obs[i_v] = ego.v / (2.0 * c.V)
    for k, car in enumerate(w.cars[1:], start=1):
        base = k * FEATURES_PER_CAR
        obs[base + i_p] = 1.0
        obs[base + i_x] = (car.x - ego.x) / (5.0 * c.V)
        obs[base + i_v] = (car.v - ego.v) / (2.0 * c.V)
    return obs


def obs_for(m: Mlp, w: WorldState, c: Constants,
            order: tuple[str, ...] = DEFAULT_FEATURE_ORDER) -> np.ndarray:
    """Observation truncated to the network's input size (10 keeps the
    ego and front-car blocks)."""
    return observe(w, c, order)[: m.input_dim]
