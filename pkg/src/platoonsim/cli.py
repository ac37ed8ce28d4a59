"""Command line front end: run scenarios, inspect runs, query oracles.

Exit codes: 0 success, 1 runtime failure, 2 scenario config rejected,
3 oracle search space too large.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import PlatoonSimError, ScenarioError, SearchSpaceTooLargeError
from .oracle import exhaustive_assignment, single_move_argmax
from .report import compare_reports, load_report, render_report, report_to_json
from .worldsim import World, ScenarioScript, bundled_scenario_path, load_scenario, run_scenario


def _bundled_names() -> list[str]:
    root = resources.files("platoonsim") / "scenarios"
    return sorted(p.name.removesuffix(".cfg") for p in root.iterdir()
                  if p.name.endswith(".cfg"))


def _resolve_scenario(ref: str) -> ScenarioScript:
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    try:
        return load_scenario(bundled_scenario_path(ref))
    except (FileNotFoundError, ScenarioError):
        known = ", ".join(_bundled_names())
        raise ScenarioError(
            [f"no scenario file {ref!r} and no bundled scenario of that name"
             f" (bundled: {known})"]) from None


def _out_dir(args, script: ScenarioScript, seed: int) -> Path:
    if args.out:
        return Path(args.out)
    base = Path(os.environ.get("PLATOONSIM_OUT", "runs"))
    return base / f"{script.name}-seed{seed}"


def _handover_override(mode: str, script: ScenarioScript) -> int | None:
    if mode == "atomic":
        return 0
    if mode == "graceful":
        return script.world.handover_ticks if script.world.handover_ticks > 0 else 6
    return None


def _cmd_run(args) -> int:
    script = _resolve_scenario(args.scenario)
    seed = args.seed if args.seed is not None else script.seed
    out_dir = _out_dir(args, script, seed)
    result = run_scenario(
        script, out_dir=out_dir, seed=args.seed, tick_limit=args.tick_limit,
        handover_ticks=_handover_override(args.handover_mode, script),
    )
    print(f"scenario {result.scenario} seed {result.seed}: {result.ticks} ticks,"
          f" {len(result.trace_rows)} trace rows, {len(result.event_rows)} events")
    print(f"wrote {result.trace_path}")
    print(f"wrote {result.events_path}")
    print(f"wrote {result.manifest_path}")
    if result.violations:
        print(f"invariant violations: {len(result.violations)}", file=sys.stderr)
        for line in result.violations:
            print(f"  {line}", file=sys.stderr)
        return 1
    return 0


def _cmd_report(args) -> int:
    report = load_report(args.run_dir)
    if args.compare:
        other = load_report(args.compare)
        payload = compare_reports(report, other)
        if args.json:
            print(json.dumps(payload, indent=2, sort_keys=True))
        else:
            print(render_report(report))
            print()
            print(render_report(other))
            print()
            print(f"overall mse ratio (a/b): {payload['overall_ratio']:.4f}")
        return 0
    if args.json:
        print(json.dumps(report_to_json(report), indent=2, sort_keys=True))
    else:
        print(render_report(report))
    return 0


def _cmd_oracle(args) -> int:
    script = _resolve_scenario(args.scenario)
    world = World(script, seed=args.seed,
                  handover_ticks=_handover_override(args.handover_mode, script))
    world.run(tick_limit=args.at_tick)
    view = world.platoon.view(world.tick)
    models = world.registries[world.platoon.leader]
    lines: list[dict] = []
    exhaustive = exhaustive_assignment(
        view, world.assignments, models,
        services=world.specs, profiles=world.devices, limit=args.limit,
        keep_scores=False,
    )
    lines.append({
        "kind": "meta", "scenario": script.name, "seed": world.seed,
        "tick": world.tick, "members": list(view.member_ids()),
        "placements_enumerated": exhaustive.enumerated,
    })
    lines.append({
        "kind": "assignment",
        "placement": dict(exhaustive.best.placement),
        "score": exhaustive.best.score,
    })
    for sid, _ in world.assignments.items():
        move = single_move_argmax(sid, view, world.assignments, models,
                                  services=world.specs, profiles=world.devices)
        lines.append({
            "kind": "single_move", "service": sid, "source": move.source,
            "target": move.target, "gain": move.gain,
            "score_before": move.score_before, "score_after": move.score_after,
        })
    stream = sys.stdout if args.out is None else open(args.out, "w")
    try:
        for line in lines:
            print(json.dumps(line, sort_keys=True), file=stream)
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def _cmd_scenarios(_args) -> int:
    for name in _bundled_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonsim",
        description="SLO-aware service offloading in a simulated vehicle platoon",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace/event CSVs")
    run.add_argument("scenario", help="path to a scenario file or a bundled name")
    run.add_argument("--out", help="output directory (default $PLATOONSIM_OUT/<name>-seed<k>)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--tick-limit", type=int, default=None,
                     help="stop after this many ticks (0 writes headers only)")
    run.add_argument("--handover-mode", choices=("script", "atomic", "graceful"),
                     default="script")
    run.set_defaults(func=_cmd_run)

    report = sub.add_parser("report", help="summarize a run directory")
    report.add_argument("run_dir")
    report.add_argument("--compare", help="second run directory (mse ratio a/b)")
    report.add_argument("--json", action="store_true")
    report.set_defaults(func=_cmd_report)

    oracle = sub.add_parser(
        "oracle",
        help="exhaustive placement scores at a tick, as JSON lines",
    )
    oracle.add_argument("scenario")
    oracle.add_argument("--at-tick", type=int, required=True)
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--limit", type=int, default=10 ** 6,
                        help="max placements to enumerate")
    oracle.add_argument("--handover-mode", choices=("script", "atomic", "graceful"),
                        default="script")
    oracle.add_argument("--out", help="write JSON lines here instead of stdout")
    oracle.set_defaults(func=_cmd_oracle)

    scenarios = sub.add_parser("scenarios", help="list bundled scenarios")
    scenarios.set_defaults(func=_cmd_scenarios)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for line in exc.diagnostics:
            print(f"scenario error: {line}", file=sys.stderr)
        return 2
    except SearchSpaceTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PlatoonSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
