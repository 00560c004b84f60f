"""Open-loop network verification by interval branch-and-bound.

Decides whether any observation inside the controllable-state region makes
the network select an action the monitor forbids, and enumerates the
counterexample boxes with confirmed concrete representatives.

Boxes live in normalized observation space.  For a presence pattern of k
cars the dimensions are [xe, ve] for the ego (absolute position / 5V,
velocity / 2V) followed by [dx_i, dv_i] for each environment car i = 2..k
(position and velocity relative to the ego, same scales).  A box is safe
when the invariant is false over all of it or every action the output
enclosure admits is provably allowed; it is a counterexample region when
the invariant holds throughout, some admissible action is provably denied
throughout, and a concrete in-box point actually selecting that action
confirms the violation exactly.  Everything else splits along its widest
influential dimension until the width floor or node budget is reached.

The interval abstraction is plain interval bound propagation; enclosure
counts are not comparable across tools.  The +/-1000 output-range bound of
the published input region is a no-op for pure argmax selection and is not
materialised.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .constants import Constants, ctx_valid
from .envelope import invariant_behind
from .monitor import allow_behind
from .network import (
    DEFAULT_FEATURE_ORDER,
    FEATURES_PER_CAR,
    Action,
    Mlp,
    forward,
    select_action,
)
from .state import CarState


class Tri(Enum):
    FALSE = 0
    TRUE = 1
    UNKNOWN = 2


class Pred(Enum):
    INVARIANT = "invariant"
    ALLOW_IDLE = "allow_idle"
    ALLOW_ACCEL = "allow_accel"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass
class Box:
    """Axis-aligned box over the normalized dimensions of one presence pattern."""

    pattern: int
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.shape != (box_dims(self.pattern),):
            raise ValueError("box bounds do not match the pattern's dimensions")
        if np.any(self.lo > self.hi):
            raise ValueError("box has lo > hi")

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.lo <= p) and np.all(p <= self.hi))

    def as_dict(self) -> dict[str, list[float]]:
        return {
            name: [float(l), float(h)]
            for name, l, h in zip(dim_names(self.pattern), self.lo, self.hi)
        }


@dataclass
class RegionReport:
    """One counterexample region: a box, the denied action it selects, and a
    confirmed concrete representative (None when spurious)."""

    box: Box
    action: Action
    representative: np.ndarray | None
    status: str  # "confirmed" | "spurious"
    reason: str


@dataclass
class VerifyResult:
    status: str  # "safe" | "violations" | "undecided"
    regions: list[RegionReport]
    undecided: list[Box]
    stats: dict

    @property
    def confirmed(self) -> list[RegionReport]:
        return [r for r in self.regions if r.status == "confirmed"]


def box_dims(pattern: int) -> int:
    if not 2 <= pattern <= 5:
        raise ValueError(f"pattern must be 2..5 cars, got {pattern}")
    return 2 + 2 * (pattern - 1)


def dim_names(pattern: int) -> list[str]:
    names = ["xe", "ve"]
    for i in range(2, pattern + 1):
        names += [f"dx{i}", f"dv{i}"]
    return names


# Normalized root ranges: ego position/velocity as published; relative
# velocities span the physically reachable [-0.5, 0.5] (both speeds in
# [0, V]) rather than the published one-sided band, so that slower-front
# states are part of the verified region.
_EGO_RANGES = [(0.0, 1.0), (0.0, 1.0)]
_REL_RANGES = [(-1.0, 1.0), (-0.5, 0.5)]


def root_box(pattern: int) -> Box:
    ranges = _EGO_RANGES + _REL_RANGES * (pattern - 1)
    lo, hi = zip(*ranges)
    return Box(pattern, np.array(lo), np.array(hi))


def _net_pack(m: Mlp):
    n_layers = len(m.layers)
    omax = max(layer.weights.shape[0] for layer in m.layers)
    imax = max(layer.weights.shape[1] for layer in m.layers)
    Wp = np.zeros((n_layers, omax, imax))
    bp = np.zeros((n_layers, omax))
    acts = np.zeros(n_layers, dtype=np.int8)
    in_dims = np.zeros(n_layers, dtype=np.int64)
    out_dims = np.zeros(n_layers, dtype=np.int64)
    for i, layer in enumerate(m.layers):
        o, d = layer.weights.shape
        Wp[i, :o, :d] = layer.weights
        bp[i, :o] = layer.bias
        acts[i] = 1 if layer.activation == "relu" else 0
        in_dims[i] = d
        out_dims[i] = o
    return Wp, bp, acts, in_dims, out_dims


def _embedding(m: Mlp, pattern: int, order=DEFAULT_FEATURE_ORDER):
    """Map network inputs to box dimensions / constants for a presence pattern."""
    if m.input_dim == 2 * FEATURES_PER_CAR and pattern != 2:
        raise ValueError("a 2-car network can only be verified for pattern 2")
    src = np.full(m.input_dim, -1, dtype=np.int64)
    const = np.zeros(m.input_dim)
    for j in range(m.input_dim):
        car, slot = divmod(j, FEATURES_PER_CAR)
        name = order[slot]
        present = car < pattern
        if name == "p":
            const[j] = 1.0 if present else 0.0
        elif name in ("y", "vy") or not present:
            const[j] = 0.0
        elif car == 0:
            src[j] = 0 if name == "x" else 1
        else:
            src[j] = 2 * car if name == "x" else 2 * car + 1
    return src, const


def _consts_tuple(c: Constants):
    return (c.T, c.L, c.V, c.Amin, c.Amax, c.Bmin, c.Bmax)


def ibp_bounds(m: Mlp, lo, hi) -> tuple[Interval, Interval, Interval]:
    """Sound enclosures of the three outputs over an input box.

    lo/hi are bounds over the network's raw input space (embedding of the
    fixed presence/lateral features, if any, already applied).
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    if lo.shape[1] != m.input_dim:
        raise ValueError(f"box has {lo.shape[1]} dims, network expects {m.input_dim}")
    src = np.arange(m.input_dim, dtype=np.int64)
    const = np.zeros(m.input_dim)
    pack = _net_pack(m)
    y_lo, y_hi = _kernels._ibp_np(lo, hi, *pack, src, const)
    return tuple(Interval(float(y_lo[0, i]), float(y_hi[0, i])) for i in range(3))


def possible_actions(y: tuple[Interval, Interval, Interval]) -> set[Action]:
    """Actions selectable by some score triple inside the given enclosures."""
    y1, y2, y3 = y
    out = set()
    if y1.hi >= y2.lo and y1.hi >= y3.lo:
        out.add(Action.BRAKE)
    if y2.hi > y1.lo and y2.hi >= y3.lo:
        out.add(Action.IDLE)
    if y3.hi > y1.lo and y3.hi > y2.lo:
        out.add(Action.ACCELERATE)
    return out


def _box_tris(box: Box, c: Constants):
    one = lambda v: np.asarray([v], dtype=float)
    inv, idle, accel = _kernels._monitor_tris_np(
        one(2 * c.V * box.lo[1]), one(2 * c.V * box.hi[1]),
        one(5 * c.V * box.lo[2]), one(5 * c.V * box.hi[2]),
        one(2 * c.V * (box.lo[1] + box.lo[3])), one(2 * c.V * (box.hi[1] + box.hi[3])),
        _consts_tuple(c),
    )
    return Tri(int(inv[0])), Tri(int(idle[0])), Tri(int(accel[0]))


def predicate_tri(pred: Pred, box: Box, c: Constants) -> Tri:
    """Interval truth value of a monitor predicate over a box.

    TRUE means the predicate holds at every point of the box, FALSE that it
    fails everywhere; UNKNOWN otherwise.  The predicates are evaluated on
    the de-normalized physical quantities.
    """
    if not ctx_valid(c):
        raise ValueError("invalid constants")
    inv, idle, accel = _box_tris(box, c)
    return {Pred.INVARIANT: inv, Pred.ALLOW_IDLE: idle, Pred.ALLOW_ACCEL: accel}[pred]


def denormalize_pair(rep, c: Constants) -> tuple[CarState, CarState]:
    """Ego and front car states for a normalized representative point."""
    rep = np.asarray(rep, dtype=float)
    ego = CarState(rep[0] * 5 * c.V, rep[1] * 2 * c.V, 0.0)
    other = CarState(ego.x + rep[2] * 5 * c.V, ego.v + rep[3] * 2 * c.V, 0.0)
    return ego, other


def region_contains(rep, pattern: int, c: Constants) -> bool:
    """Point membership in the verified input region: the root ranges plus
    the ordering constraints between environment cars."""
    root = root_box(pattern)
    if not root.contains(rep):
        return False
    rep = np.asarray(rep, dtype=float)
    rel = c.L / (5.0 * c.V)
    for i in range(3, pattern + 1):
        px, cx = 2 * (i - 1) - 2, 2 * i - 2
        if not rep[px] + rel <= rep[cx]:
            return False
        if not rep[px + 1] <= rep[cx + 1]:
            return False
    return True


def _select_at(m: Mlp, rep, emb) -> Action:
    src, const = emb
    x = np.where(src >= 0, np.asarray(rep, dtype=float)[np.maximum(src, 0)], const)
    return select_action(forward(m, x))


def confirm(m: Mlp, rep, act: Action, c: Constants, pattern: int = 2,
            order=DEFAULT_FEATURE_ORDER) -> bool:
    """Exact point check: rep is in the region, satisfies the invariant,
    makes the network select `act`, and the monitor denies `act` there."""
    if not region_contains(rep, pattern, c):
        return False
    ego, other = denormalize_pair(rep, c)
    if not invariant_behind(ego, other, c):
        return False
    if _select_at(m, rep, _embedding(m, pattern, order)) is not act:
        return False
    return not allow_behind(act, ego, other, c).allowed


_BIT_ACTIONS = ((2, Action.IDLE), (4, Action.ACCELERATE))
_REASONS = {Action.IDLE: "IdleMargin", Action.ACCELERATE: "AccelMargin"}


def _active_dims(m: Mlp, pattern: int, emb) -> np.ndarray:
    """Dimensions worth splitting: the monitor's inputs plus every box
    dimension the network output actually depends on."""
    src, _ = emb
    sens = np.ones(3)
    for layer in reversed(m.layers):
        sens = np.abs(layer.weights).T @ sens
    active = np.zeros(box_dims(pattern), dtype=bool)
    active[1:4] = True
    for j in range(m.input_dim):
        if src[j] >= 0 and sens[j] > 0:
            active[src[j]] = True
    return active


def verify(m: Mlp, c: Constants, eps: float = 1e-3, budget: int = 10**6,
           patterns: Iterable[int] | None = None, chunk: int = 4096,
           confirm_samples: int = 32, seed: int = 0,
           order=DEFAULT_FEATURE_ORDER) -> VerifyResult:
    """Branch-and-bound search for monitor-denied selectable actions.

    Returns status "safe" only when every box of every presence pattern was
    proved safe; "violations" when at least one confirmed counterexample
    region exists; "undecided" when neither, with the unresolved boxes
    listed.  Budget exhaustion is not an error; leftover boxes land in
    `undecided`.  Deterministic for fixed arguments: reports are sorted by
    (pattern, box lower corner).
    """
    if not ctx_valid(c):
        raise ValueError("invalid constants")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if patterns is None:
        patterns = (2,) if m.input_dim == 2 * FEATURES_PER_CAR else (2, 3, 4, 5)

    t0 = time.perf_counter()
    net = _net_pack(m)
    consts = _consts_tuple(c)
    rng = np.random.default_rng(seed)
    regions: list[RegionReport] = []
    undecided: list[Box] = []
    nodes = 0
    counts = {"safe": 0, "pruned": 0, "candidate": 0, "too_small": 0, "split": 0}

    for pattern in patterns:
        emb = _embedding(m, pattern, order)
        active = _active_dims(m, pattern, emb)
        root = root_box(pattern)
        d = box_dims(pattern)
        pend_lo = [root.lo[None, :]]
        pend_hi = [root.hi[None, :]]
        pend_fl = [np.zeros(1, dtype=np.int8)]

        while pend_lo:
            lo = pend_lo.pop(0)
            hi = pend_hi.pop(0)
            fl = pend_fl.pop(0)
            if nodes >= budget:
                undecided.extend(Box(pattern, l, h) for l, h in zip(lo, hi))
                continue
            if nodes + lo.shape[0] > budget:
                cut = budget - nodes
                pend_lo.insert(0, lo[cut:])
                pend_hi.insert(0, hi[cut:])
                pend_fl.insert(0, fl[cut:])
                lo, hi, fl = lo[:cut], hi[:cut], fl[:cut]
            nodes += lo.shape[0]

            verdict, split_dim, cand_mask = _kernels.frontier_step(
                lo, hi, net, emb, consts, eps, active, pattern)
            counts["safe"] += int(np.sum(verdict == _kernels.SAFE))
            counts["pruned"] += int(np.sum(verdict == _kernels.PRUNED))
            counts["too_small"] += int(np.sum(verdict == _kernels.TOO_SMALL))
            counts["split"] += int(np.sum(verdict == _kernels.SPLIT))

            for i in np.nonzero(verdict == _kernels.TOO_SMALL)[0]:
                undecided.append(Box(pattern, lo[i].copy(), hi[i].copy()))

            cand_rows = np.nonzero(verdict == _kernels.CANDIDATE)[0]
            resplit_rows = []
            for i in cand_rows:
                counts["candidate"] += 1
                box = Box(pattern, lo[i].copy(), hi[i].copy())
                confirmed_any = False
                for bit, act in _BIT_ACTIONS:
                    if not cand_mask[i] & bit:
                        continue
                    rep = _find_representative(
                        m, box, act, c, emb, rng, confirm_samples, order)
                    if rep is not None:
                        regions.append(RegionReport(
                            box, act, rep, "confirmed", _REASONS[act]))
                        confirmed_any = True
                    else:
                        regions.append(RegionReport(
                            box, act, None, "spurious", _REASONS[act]))
                if not confirmed_any:
                    if fl[i] == 0:
                        resplit_rows.append(i)  # re-split once
                    else:
                        undecided.append(box)

            split_rows = np.nonzero(verdict == _kernels.SPLIT)[0].tolist() + resplit_rows
            if split_rows:
                rows = np.asarray(sorted(split_rows), dtype=np.int64)
                dims = split_dim[rows]
                # re-split rows carry no dim from the kernel: use the widest active one
                widths = np.where(active[None, :], hi[rows] - lo[rows], -1.0)
                fallback_dims = np.argmax(widths, axis=1)
                dims = np.where(dims >= 0, dims, fallback_dims)
                mid = 0.5 * (lo[rows, dims] + hi[rows, dims])
                lo_l, hi_l = lo[rows].copy(), hi[rows].copy()
                hi_l[np.arange(len(rows)), dims] = mid
                lo_r, hi_r = lo[rows].copy(), hi[rows].copy()
                lo_r[np.arange(len(rows)), dims] = mid
                child_fl = np.where(np.isin(rows, resplit_rows), 1, fl[rows]).astype(np.int8)
                new_lo = np.concatenate([lo_l, lo_r])
                new_hi = np.concatenate([hi_l, hi_r])
                new_fl = np.concatenate([child_fl, child_fl])
                for start in range(0, new_lo.shape[0], chunk):
                    sl = slice(start, start + chunk)
                    pend_lo.append(new_lo[sl])
                    pend_hi.append(new_hi[sl])
                    pend_fl.append(new_fl[sl])

    confirmed = [r for r in regions if r.status == "confirmed"]
    if confirmed:
        status = "violations"
    elif undecided:
        status = "undecided"
    else:
        status = "safe"
    regions.sort(key=lambda r: (r.box.pattern, tuple(r.box.lo), r.action.value))
    stats = {"nodes": nodes, "time_s": time.perf_counter() - t0, **counts}
    return VerifyResult(status, regions, undecided, stats)


def _find_representative(m, box, act, c, emb, rng, samples, order):
    cands = [0.5 * (box.lo + box.hi)]
    if samples > 0:
        u = rng.random((samples, box.lo.shape[0]))
        cands.extend(box.lo + u_i * (box.hi - box.lo) for u_i in u)
    for rep in cands:
        if confirm(m, rep, act, c, box.pattern, order):
            return np.asarray(rep, dtype=float)
    return None


def result_to_json(result: VerifyResult) -> dict:
    """Serializable report: status, confirmed/spurious regions, stats."""
    return {
        "status": result.status,
        "regions": [
            {
                "pattern": r.box.pattern,
                "box": r.box.as_dict(),
                "action": r.action.value,
                "representative": None if r.representative is None
                else [float(v) for v in r.representative],
                "confirmed": r.status == "confirmed",
                "reason": r.reason,
            }
            for r in result.regions
        ],
        "stats": {"nodes": result.stats["nodes"],
                  "time_s": result.stats["time_s"],
                  "undecided": len(result.undecided)},
    }


def write_report(result: VerifyResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result_to_json(result), indent=2))


def load_report(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if "regions" not in doc or "status" not in doc:
        raise ValueError(f"{path}: not a verification report")
    return doc
