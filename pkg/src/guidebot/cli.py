"""Command line front end.

Subcommands:
  run       drive a scripted scenario through the engine, print the table
  report    pretty-print a saved report file
  replay    re-run recorded interaction traces and diff the decisions
  serve     start the HTTP session service (plus the recognition stub)
  validate  check a data file and exit non-zero with a one-line diagnostic
"""

from __future__ import annotations

import argparse
import json
import sys

from . import anchors, fsm, wire
from .composer import load_clips, load_mapping, validate_mapping
from .dialogue import load_kb, load_lexicon
from .engine import EngineConfig, asset_path
from .simulation import (
    anchored_variant,
    default_latency_model,
    default_scenario,
    load_latency_model,
    load_report,
    load_scenario,
    render_report,
    run,
    save_report,
    validate_scenario,
)

_BUILTIN_SCENARIOS = {"garden"}
_BUILTIN_LATENCIES = {"measured"}


def _resolve_scenario(name: str):
    if name in _BUILTIN_SCENARIOS:
        return load_scenario(asset_path(f"{name}.json"))
    return load_scenario(name)


def _resolve_latency(name: str):
    if name in _BUILTIN_LATENCIES:
        return load_latency_model(asset_path(f"{name}.json"))
    return load_latency_model(name)


def _fsm_config_to_dict(config: fsm.FsmConfig) -> dict:
    return {
        "dwell_threshold": config.dwell_threshold,
        "greeting_silence_delay": config.greeting_silence_delay,
        "end_silence_timeout": config.end_silence_timeout,
        "end_of_utterance_window": config.end_of_utterance_window,
        "greeting_text": config.greeting_text,
        "trigger_commands": sorted(config.trigger_commands),
    }


def _fsm_config_from_dict(doc: dict) -> fsm.FsmConfig:
    return fsm.FsmConfig(
        dwell_threshold=float(doc["dwell_threshold"]),
        greeting_silence_delay=float(doc["greeting_silence_delay"]),
        end_silence_timeout=float(doc["end_silence_timeout"]),
        end_of_utterance_window=float(doc["end_of_utterance_window"]),
        greeting_text=doc["greeting_text"],
        trigger_commands=frozenset(doc["trigger_commands"]),
    )


def cmd_run(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.anchored:
        scenario = anchored_variant(scenario)
    model = _resolve_latency(args.latency)
    result = run(scenario, model, seed=args.seed)
    print(render_report(result.report))
    print(f"vision calls: {result.report.vision_calls}")
    if args.out:
        save_report(result.report, args.out)
        print(f"report written to {args.out}")
    if args.traces_out:
        doc = {
            "fsm_config": _fsm_config_to_dict(EngineConfig().fsm),
            "traces": result.traces,
        }
        with open(args.traces_out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"traces written to {args.traces_out}")
    return 0


def cmd_report(args) -> int:
    report = load_report(args.path)
    print(render_report(report))
    return 0


def replay_trace(entries: list[dict], config: fsm.FsmConfig) -> list[str]:
    """Re-drive one recorded session and return human-readable mismatches."""
    state: fsm.InteractionState = fsm.Idle()
    problems = []
    for i, entry in enumerate(entries):
        event = wire.event_from_dict(entry["event"])
        state, actions = fsm.step(state, event, config)
        got_actions = [wire.action_to_dict(a) for a in actions]
        if got_actions != entry["actions"]:
            problems.append(
                f"step {i}: actions differ: got {got_actions}, recorded {entry['actions']}"
            )
        if fsm.state_name(state) != entry["state"]:
            problems.append(
                f"step {i}: state differs: got {fsm.state_name(state)}, "
                f"recorded {entry['state']}"
            )
    return problems


def cmd_replay(args) -> int:
    with open(args.path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = _fsm_config_from_dict(doc["fsm_config"])
    total = 0
    bad = 0
    for session_id in sorted(doc["traces"]):
        problems = replay_trace(doc["traces"][session_id], config)
        total += 1
        if problems:
            bad += 1
            for line in problems:
                print(f"{session_id}: {line}")
    print(f"replayed {total} sessions, {bad} with divergence")
    return 0 if bad == 0 else 1


def cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port, static_dir=args.static)
    return 0


def cmd_validate(args) -> int:
    try:
        if args.kind == "scenario":
            validate_scenario(_resolve_scenario(args.path))
        elif args.kind == "latency":
            _resolve_latency(args.path)
        elif args.kind == "kb":
            load_kb(args.path)
        elif args.kind == "lexicon":
            load_lexicon(args.path)
        elif args.kind == "mapping":
            clips = load_clips(args.clips if args.clips else asset_path("clips.json"))
            validate_mapping(load_mapping(args.path), clips)
        elif args.kind == "store":
            with open(args.path, "rb") as fh:
                anchors.load(fh.read())
        else:
            print(f"invalid kind: {args.kind}", file=sys.stderr)
            return 2
    except FileNotFoundError as exc:
        print(f"invalid {args.kind}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"invalid {args.kind}: {exc}", file=sys.stderr)
        return 2
    print(f"{args.path}: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guidebot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scripted scenario")
    p.add_argument("--scenario", default="garden", help="builtin name or path to a scenario file")
    p.add_argument("--latency", default="measured", help="builtin name or path to a latency file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--anchored", action="store_true", help="pre-place anchors for every object")
    p.add_argument("--out", default=None, help="write the report as JSON")
    p.add_argument("--traces-out", default=None, help="write per-session interaction traces")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="pretty-print a saved report")
    p.add_argument("path")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-run recorded traces and diff decisions")
    p.add_argument("path")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--static", default=None, help="directory with a built web console")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate", help="check a data file")
    p.add_argument("kind", choices=["scenario", "latency", "kb", "lexicon", "mapping", "store"])
    p.add_argument("path")
    p.add_argument("--clips", default=None, help="clip library to check a mapping against")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
