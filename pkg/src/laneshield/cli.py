"""Command-line interface.

Subcommands: simulate, campaign, verify, falsify, euler-demo, monitor-check.
Run ``laneshield <subcommand> --help`` for the flags of each.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

from .constants import DEFAULTS, Constants, load_constants
from .harness import (
    CampaignConfig,
    campaign,
    euler_gap_search,
    falsify,
    make_policy,
    run_episode,
    sample_initial,
    write_crashes,
    write_scenarios,
    write_trajectory,
)
from .monitor import monitor_verdict
from .network import Action, load_mlp
from .plant import Integrator
from .policies import EnvPolicy
from .state import CarState
from .verifier import load_report, verify, write_report


def _constants(args) -> Constants:
    return load_constants(args.config) if args.config else DEFAULTS


def _env_policy(args) -> EnvPolicy:
    if args.env == "idm":
        return EnvPolicy.idm_policy()
    if args.env == "brake":
        return EnvPolicy.emergency_brake()
    if not args.script:
        raise SystemExit("--env scripted needs --script 'dur:accel,dur:accel,...'")
    schedule = []
    for seg in args.script.split(","):
        dur, _, acc = seg.partition(":")
        schedule.append((float(dur), float(acc)))
    return EnvPolicy.scripted(schedule)


def _integrator(text: str) -> Integrator:
    return Integrator.parse(text)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="constants file (flat KEY = VALUE)")
    p.add_argument("--policy", choices=["raw", "veriphy", "jsc", "fallback"],
                   default="fallback")
    p.add_argument("--weights", help="network weight file (JSON)")
    p.add_argument("--env", choices=["idm", "brake", "scripted"], default="idm")
    p.add_argument("--script", help="scripted env schedule 'dur:accel,...'")
    p.add_argument("--integrator", type=_integrator, default=Integrator.exact(),
                   help="'exact' or 'euler:N' (substeps per second)")
    p.add_argument("--steps", type=int, default=60, help="control cycles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern", type=int, default=2, help="number of cars (2..5)")
    p.add_argument("--density", type=float, default=5.0, help="cars per km")


def _policy(args, c):
    mlp = load_mlp(args.weights) if args.weights else None
    return make_policy(args.policy, mlp)


def _cmd_simulate(args) -> int:
    c = _constants(args)
    w0 = sample_initial(c, args.pattern, seed=args.seed, density=args.density)
    res = run_episode(w0, _policy(args, c), _env_policy(args), args.steps,
                      args.integrator, c)
    write_trajectory(res, len(w0.cars), args.out)
    print(json.dumps({"crashed": res.crashed, "steps": res.steps,
                      "reward": res.reward, "out": args.out}))
    return 0


def _cmd_campaign(args) -> int:
    c = _constants(args)
    mlp = load_mlp(args.weights) if args.weights else None
    cfg = CampaignConfig(
        constants=c, policy=args.policy, env=_env_policy(args),
        integrator=args.integrator, mlp=mlp, steps=args.steps,
        pattern=args.pattern, density=args.density, seed=args.seed,
    )
    if args.episodes_csv:
        summary, results = campaign(cfg, args.episodes, keep_results=True)
        with open(args.episodes_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "crashed", "steps", "reward", "overrides"])
            for i, (_, res) in enumerate(results):
                w.writerow([i, int(res.crashed), res.steps, f"{res.reward:.6f}",
                            sum(r.overridden for r in res.trajectory)])
    else:
        summary = campaign(cfg, args.episodes)
    doc = summary.as_dict()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
    print(json.dumps(doc))
    return 0


def _cmd_verify(args) -> int:
    c = _constants(args)
    mlp = load_mlp(args.weights)
    patterns = tuple(int(p) for p in args.patterns.split(",")) if args.patterns else None
    result = verify(mlp, c, eps=args.eps, budget=args.budget, patterns=patterns,
                    seed=args.seed)
    write_report(result, args.out)
    print(json.dumps({
        "status": result.status,
        "confirmed_regions": len(result.confirmed),
        "undecided": len(result.undecided),
        "nodes": result.stats["nodes"],
        "out": args.out,
    }))
    return 0 if result.status == "safe" else 1


def _cmd_falsify(args) -> int:
    c = _constants(args)
    mlp = load_mlp(args.weights)
    report = load_report(args.report)
    crashes = falsify(mlp, report, _env_policy(args), args.integrator, c,
                      steps=args.steps, limit=args.limit)
    write_crashes(crashes, args.out)
    print(json.dumps({"crashes": len(crashes), "out": args.out}))
    return 0


def _cmd_euler_demo(args) -> int:
    c = _constants(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    scenarios = euler_gap_search(c, seeds, Integrator.euler(args.coarse),
                                 Integrator.euler(args.fine),
                                 samples_per_seed=args.samples)
    write_scenarios(scenarios, args.out)
    print(json.dumps({"scenarios": len(scenarios), "out": args.out}))
    return 0


def _cmd_monitor_check(args) -> int:
    c = _constants(args)
    try:
        xe, ve, xo, vo = (float(v) for v in args.state.split(","))
    except ValueError:
        raise SystemExit("--state must be 'xe,ve,xo,vo'")
    verdict = monitor_verdict(Action.parse(args.action), CarState(xe, ve),
                              CarState(xo, vo), c)
    print(json.dumps({
        "allowed": verdict.allowed,
        "reason": verdict.reason.value if verdict.reason else None,
    }))
    return 0 if verdict.allowed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laneshield",
        description="Safety envelope, runtime shields, and network verification "
                    "for single-lane car following.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop episode")
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("campaign", help="run many episodes, aggregate statistics")
    _add_run_flags(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--out", help="summary JSON path")
    p.add_argument("--episodes-csv", help="per-episode CSV path")
    p.set_defaults(fn=_cmd_campaign)

    p = sub.add_parser("verify", help="branch-and-bound network verification")
    p.add_argument("--config")
    p.add_argument("--weights", required=True)
    p.add_argument("--eps", type=float, default=1e-3, help="minimum split width")
    p.add_argument("--budget", type=int, default=10**6, help="node budget")
    p.add_argument("--patterns", help="comma-separated presence patterns, e.g. 2,3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("falsify", help="simulate counterexample representatives")
    p.add_argument("--config")
    p.add_argument("--weights", required=True)
    p.add_argument("--report", required=True, help="verification report JSON")
    p.add_argument("--env", choices=["idm", "brake", "scripted"], default="brake")
    p.add_argument("--script")
    p.add_argument("--integrator", type=_integrator, default=Integrator.exact())
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--limit", type=int, help="max representatives to simulate")
    p.add_argument("--out", required=True, help="crash CSV path")
    p.set_defaults(fn=_cmd_falsify)

    p = sub.add_parser("euler-demo", help="find discretisation-induced crashes")
    p.add_argument("--config")
    p.add_argument("--coarse", type=int, default=10, help="coarse substeps/s")
    p.add_argument("--fine", type=int, default=100, help="fine substeps/s")
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--samples", type=int, default=64, help="samples per seed")
    p.add_argument("--out", required=True, help="scenario CSV path")
    p.set_defaults(fn=_cmd_euler_demo)

    p = sub.add_parser("monitor-check", help="evaluate the monitor on one state")
    p.add_argument("--config")
    p.add_argument("--state", required=True, help="'xe,ve,xo,vo'")
    p.add_argument("--action", required=True, choices=["brake", "idle", "accel"])
    p.set_defaults(fn=_cmd_monitor_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
