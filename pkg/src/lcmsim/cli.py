"""Command-line entry point.

Exit codes: 0 pass, 1 usage or validation error, 2 simulation error,
3 predicate failure, 4 bounded search exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .algorithms import REGISTRY, get_program, program_problem
from .engine import Model, SimulationError, Trace, entry_to_record, iter_run
from .impossibility import ModelMismatchError, iop_fcom_search, oc_oblot_witness
from .problems import (
    ILInstance,
    InstanceError,
    IOPInstance,
    OCInstance,
    check_il,
    check_iop,
    check_oc,
    instance_from_json,
)
from .relations import ModelSched, derive, verify_claims, FactBase, base_facts
from .schedulers import (
    AdversaryParams,
    FramePolicy,
    Schedule,
    SchedulerKind,
    generate_async,
    generate_fsync,
    generate_ssync,
    ssync_to_async,
    validate_schedule,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SIMULATION = 2
EXIT_FAIL = 3
EXIT_EXHAUSTED = 4

OUTPUT_DIR_ENV = "LCMSIM_OUTPUT_DIR"

_DEFAULT_INSTANCES = {"oc": OCInstance, "il": ILInstance, "iop": IOPInstance}


class ConfigError(ValueError):
    pass


def _err(msg: str) -> None:
    print(f"lcmsim: {msg}", file=sys.stderr)


def _load_json_arg(text: str) -> dict:
    """Inline JSON, or a path to a JSON file."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


def load_instance(problem: str, spec) -> object:
    if spec is None or spec == "default":
        return _DEFAULT_INSTANCES[problem]()
    data = spec if isinstance(spec, dict) else _load_json_arg(spec)
    data = {"problem": problem, **data}
    if data["problem"] != problem:
        raise ConfigError(f"instance is for problem {data['problem']!r}, expected {problem!r}")
    return instance_from_json(data)


# -- run ----------------------------------------------------------------------

_RUN_FIELDS = {
    "algorithm": None,
    "model": None,
    "instance": "default",
    "scheduler": "async",
    "seed": 0,
    "horizon": 200,
    "fairness_window": 40,
    "max_splits": 3,
    "frame_policy": FramePolicy.FRESH.value,
    "schedule": None,
    "via_async": False,
    "min_cycles": None,
    "output": None,
}


def _scenario(args: argparse.Namespace) -> dict:
    cfg = dict(_RUN_FIELDS)
    if args.config:
        data = _load_json_arg(args.config)
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg.update(data)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    if not cfg["algorithm"]:
        raise ConfigError("no algorithm given")
    return cfg


def _output_path(cfg: dict) -> Path:
    name = cfg["output"] or f"{cfg['algorithm']}-{cfg['scheduler']}-{cfg['seed']}.jsonl"
    path = Path(name)
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir and not path.is_absolute():
        path = Path(outdir) / path
    return path


def build_run(cfg: dict):
    """Resolve a scenario into (program, model, instance, schedule)."""
    name = cfg["algorithm"]
    if name not in REGISTRY:
        raise ConfigError(f"unknown algorithm {name!r}; known: {sorted(REGISTRY)}")
    problem = program_problem(name)
    try:
        instance = load_instance(problem, cfg["instance"])
    except (InstanceError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad instance: {exc}") from None
    program = get_program(name, instance)
    model = Model(cfg["model"].upper()) if cfg["model"] else program.model
    if model is not program.model:
        raise ConfigError(f"{name} needs model {program.model.value}, not {model.value}")
    world0 = instance.initial_world()
    n = len(world0.robots)

    if cfg["schedule"]:
        with open(cfg["schedule"], encoding="utf-8") as fh:
            schedule = Schedule.from_json(json.load(fh))
    else:
        params = AdversaryParams(
            seed=int(cfg["seed"]),
            horizon=int(cfg["horizon"]),
            fairness_window=int(cfg["fairness_window"]),
            max_progress_splits=int(cfg["max_splits"]),
            frame_policy=FramePolicy(cfg["frame_policy"]),
        )
        params.check(n)
        kind = SchedulerKind(cfg["scheduler"].upper())
        if kind is SchedulerKind.ASYNC:
            schedule = generate_async(params, n)
        elif kind is SchedulerKind.SSYNC:
            schedule = generate_ssync(params, n)
        else:
            schedule = generate_fsync(params, n)
        if cfg["via_async"] and kind.synchronous:
            schedule = ssync_to_async(schedule, n)
    violations = validate_schedule(schedule, n)
    if violations:
        lines = "\n".join(f"  event {v.index}: {v.rule}: {v.message}" for v in violations)
        raise ConfigError(f"schedule fails validation:\n{lines}")
    return program, model, instance, schedule


def _check(problem: str, trace: Trace, instance, min_cycles: int, program=None):
    if problem == "oc":
        return check_oc(trace, instance, min_cycles)
    if problem == "il":
        return check_il(trace, instance, program)
    return check_iop(trace, instance, min_cycles)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _scenario(args)
        program, model, instance, schedule = build_run(cfg)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    path = _output_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    events = 0
    with open(path, "w", encoding="utf-8") as fh:
        try:
            for entry in iter_run(instance.initial_world(), program, model, schedule):
                fh.write(json.dumps(entry_to_record(entry), sort_keys=True) + "\n")
                events = entry.world.event_index
        except SimulationError as exc:
            record = {"kind": "error", "error": str(exc), "type": type(exc).__name__, "event_index": exc.event_index}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            _err(f"simulation error at event {exc.event_index}: {exc}")
            return EXIT_SIMULATION
    summary: dict = {"trace": str(path), "events": events, "algorithm": program.name, "model": model.value}
    code = EXIT_OK
    if cfg["min_cycles"] is not None:
        with open(path, encoding="utf-8") as fh:
            trace = Trace.from_jsonl(fh)
        verdict = _check(program_problem(cfg["algorithm"]), trace, instance, int(cfg["min_cycles"]), program)
        summary["verdict"] = verdict.to_json()
        code = EXIT_OK if verdict.passed else EXIT_FAIL
    print(json.dumps(summary, sort_keys=True))
    return code


# -- check --------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    try:
        instance = load_instance(args.problem, args.instance)
        program = get_program(args.program, instance) if args.program else None
        with open(args.trace, encoding="utf-8") as fh:
            trace = Trace.from_jsonl(fh)
    except (ConfigError, InstanceError, ValueError, KeyError, OSError) as exc:
        _err(f"cannot check {args.trace}: {exc}")
        return EXIT_USAGE
    verdict = _check(args.problem, trace, instance, args.min_cycles, program)
    print(verdict.dumps())
    return EXIT_OK if verdict.passed else EXIT_FAIL


# -- witness ------------------------------------------------------------------


def cmd_witness(args: argparse.Namespace) -> int:
    try:
        if args.kind == "oc-oblot":
            instance = load_instance("oc", args.instance)
            program = get_program(args.program, instance)
            witness = oc_oblot_witness(program, instance)
        else:
            instance = load_instance("iop", args.instance)
            program = get_program(args.program, instance)
            witness = iop_fcom_search(program, instance, depth=args.depth, scalings=args.scalings, min_cycles=args.min_cycles)
    except (ModelMismatchError, ConfigError, InstanceError, KeyError, ValueError, OSError) as exc:
        _err(str(exc).strip("'\""))
        return EXIT_USAGE
    if witness is None:
        print(json.dumps({"witness": None, "message": f"none found within depth {args.depth}"}, sort_keys=True))
        return EXIT_EXHAUSTED
    text = witness.dumps()
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        print(json.dumps({"witness": args.output, "violations": witness.violations}, sort_keys=True))
    else:
        print(text)
    return EXIT_OK


# -- relations ----------------------------------------------------------------


def cmd_relations(args: argparse.Namespace) -> int:
    try:
        if args.action == "derive":
            kb = FactBase(base_facts(True, args.facts))
            rel = derive(ModelSched.parse(args.x), ModelSched.parse(args.y), kb)
            print(json.dumps(rel.to_json(), ensure_ascii=False, sort_keys=True) if args.json else rel.explain())
            return EXIT_OK
        report = verify_claims(args.facts)
    except (ValueError, KeyError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    print(json.dumps(report.to_json(), ensure_ascii=False, sort_keys=True) if args.json else report.text())
    return EXIT_OK if report.ok and report.ablation_blocks_theorems() else EXIT_FAIL


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcmsim", description="Look-Compute-Move robot simulator and verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write a JSONL trace")
    run.add_argument("--config", help="scenario JSON (file or inline); flags override it")
    run.add_argument("--algorithm", help=f"one of {sorted(REGISTRY)}")
    run.add_argument("--model", choices=[m.value for m in Model], type=str.upper)
    run.add_argument("--instance", help="'default', a JSON file or inline JSON")
    run.add_argument("--scheduler", choices=["async", "ssync", "fsync"], type=str.lower)
    run.add_argument("--seed", type=int)
    run.add_argument("--horizon", type=int)
    run.add_argument("--fairness-window", type=int)
    run.add_argument("--max-splits", type=int)
    run.add_argument("--frame-policy", choices=[p.value for p in FramePolicy])
    run.add_argument("--schedule", help="scripted schedule JSON file")
    run.add_argument("--via-async", action="store_true", help="replay a synchronous schedule as ASYNC events")
    run.add_argument("--min-cycles", type=int, help="also check the trace and report the verdict")
    run.add_argument("--output", help=f"trace path (relative paths go under ${OUTPUT_DIR_ENV} when set)")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="evaluate a problem predicate on a trace")
    check.add_argument("trace")
    check.add_argument("--problem", required=True, choices=["oc", "il", "iop"])
    check.add_argument("--instance", default="default")
    check.add_argument("--min-cycles", type=int, default=1)
    check.add_argument("--program", help="program used for the quiescence test (il only)")
    check.set_defaults(func=cmd_check)

    wit = sub.add_parser("witness", help="build an impossibility witness")
    wit.add_argument("kind", choices=["oc-oblot", "iop-fcom"])
    wit.add_argument("--program", required=True)
    wit.add_argument("--instance", default="default")
    wit.add_argument("--depth", type=int, default=12)
    wit.add_argument("--scalings", type=int, default=3)
    wit.add_argument("--min-cycles", type=int, default=1)
    wit.add_argument("--output")
    wit.set_defaults(func=cmd_witness)

    rel = sub.add_parser("relations", help="query the model/scheduler relation lattice")
    rel_sub = rel.add_subparsers(dest="action", required=True)
    d = rel_sub.add_parser("derive")
    d.add_argument("x")
    d.add_argument("y")
    v = rel_sub.add_parser("verify")
    for p in (d, v):
        p.add_argument("--facts", help="alternative fact file")
        p.add_argument("--json", action="store_true")
        p.set_defaults(func=cmd_relations)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
