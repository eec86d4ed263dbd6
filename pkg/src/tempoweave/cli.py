"""Command-line front end.

Commands: `simulate` (run the coordination loop and stream trace records),
`check-trace` (replay monitors over a recorded trace), `eval` (feed an
inline word to a single monitor), `validate` (parse-only check of input
files).  Exit codes: 0 every property ends in {T,Tc}; 2 some property is
Fc or was never evaluated; 3 some property is F; 64 usage or parse error;
65 name-resolution error in check-trace; 70 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from fractions import Fraction

from .engine import (
    EngineInvariantError,
    InteractivePolicy,
    ScriptedPolicy,
    SeededPolicy,
    SimulationError,
    parse_schedule,
    run,
)
from .formula import (
    FormulaError,
    Property,
    format_formula,
    parse_bare_formula,
    parse_formula,
)
from .model import (
    BindingSet,
    ScenarioError,
    load_scenario,
    parse_bindings,
    validate_bindings,
)
from .monitor import MonitorState
from .oracle import Event
from .trace import TraceFormatError, TraceResolutionError, check_trace, trace_lines
from .verdict import Verdict

EX_OK = 0
EX_INCONCLUSIVE = 2
EX_VIOLATED = 3
EX_USAGE = 64
EX_RESOLUTION = 65
EX_INTERNAL = 70

log = logging.getLogger("tempoweave.cli")


def _setup_logging():
    level_name = os.environ.get("TEMPOWEAVE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(name)s: %(message)s")


class UsageError(Exception):
    pass


def load_properties(text: str) -> list[Property]:
    """One `@Agent: formula` property per non-comment line."""
    properties = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            properties.append(parse_formula(line))
        except FormulaError as exc:
            raise FormulaError(f"line {lineno}: {exc}") from None
    if not properties:
        raise FormulaError("no properties found")
    return properties


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _verdict_exit(monitors: list[MonitorState]) -> int:
    worst = EX_OK
    for m in monitors:
        last = m.last_verdict
        if last is Verdict.FALSE:
            return EX_VIOLATED
        if last is None or last is Verdict.FALSE_C:
            worst = EX_INCONCLUSIVE
    return worst


def _parse_delta(text: str) -> Fraction:
    try:
        delta = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid time step {text!r}") from None
    if delta <= 0:
        raise UsageError(f"time step must be positive, got {text}")
    return delta


def _load_simulation_inputs(args):
    scenario = load_scenario(_read(args.scenario))
    properties = load_properties(_read(args.props))
    bindings = parse_bindings(_read(args.bindings))
    validate_bindings(bindings, scenario)
    for prop in properties:
        if prop.agent not in {a.name for a in scenario.agents}:
            raise ScenarioError(
                f"property agent {prop.agent!r} not in scenario"
            )
    return scenario, properties, bindings


def cmd_simulate(args) -> int:
    scenario, properties, bindings = _load_simulation_inputs(args)
    if args.interactive:
        policy = InteractivePolicy()
    elif args.schedule is not None:
        policy = ScriptedPolicy(parse_schedule(_read(args.schedule)))
    elif args.seed is not None:
        policy = SeededPolicy(args.seed)
    else:
        raise UsageError("simulate needs --schedule, --seed, or --interactive")
    delta = _parse_delta(args.delta) if args.delta is not None else None
    trace = run(
        scenario,
        properties,
        bindings,
        policy,
        steps=args.steps,
        delta=delta,
        early_stop=not args.no_early_stop,
        prophecy_includes_now=args.prophecy_includes_now,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for line in trace_lines(trace):
            print(line, file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("simulation %s after %d steps", trace.status, len(trace.entries))
    return _verdict_exit(trace.monitors)


def cmd_check_trace(args) -> int:
    properties = load_properties(_read(args.props))
    bindings = parse_bindings(_read(args.bindings))
    lines = _read(args.trace).splitlines()
    rows, monitors = check_trace(
        lines, properties, bindings,
        prophecy_includes_now=args.prophecy_includes_now,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for row in rows:
            print(" ".join("-" if v is None else v for v in row), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return _verdict_exit(monitors)


_EVENT_RE = re.compile(r"^\{([^}]*)\}@(\d+(?:\.\d+)?|\d+/\d+)$")


def _parse_event(token: str) -> Event:
    m = _EVENT_RE.match(token)
    if not m:
        raise UsageError(
            f"cannot parse event {token!r}; expected {{p,q}}@t"
        )
    names = [p.strip() for p in m.group(1).split(",") if p.strip()]
    return Event(frozenset(names), Fraction(m.group(2)))


def cmd_eval(args) -> int:
    body = parse_bare_formula(args.formula)
    prop = Property("Local", body)
    events = [_parse_event(token) for token in args.events]
    last_time = None
    for event in events:
        if last_time is not None and event.time < last_time:
            raise UsageError("event timestamps must be non-decreasing")
        last_time = event.time
    state = MonitorState(prop, prophecy_includes_now=args.prophecy_includes_now)
    shorts = [state.step(event).short for event in events]
    print(" ".join(shorts))
    print(format_formula(state.obligation, extended=True))
    return _verdict_exit([state])


def cmd_validate(args) -> int:
    scenario = None
    if args.scenario:
        scenario = load_scenario(_read(args.scenario))
    if args.props:
        load_properties(_read(args.props))
    if args.bindings:
        bindings = parse_bindings(_read(args.bindings))
        if scenario is not None:
            validate_bindings(bindings, scenario)
    if args.schedule:
        parse_schedule(_read(args.schedule))
    print("ok")
    return EX_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempoweave",
        description="Multi-agent workflow simulation with timed-LTL monitoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_now_flag(p):
        p.add_argument(
            "--prophecy-includes-now", action="store_true",
            help="let the current event witness a just-activated time bound",
        )

    sim = sub.add_parser("simulate", help="run the coordination loop")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--props", required=True)
    sim.add_argument("--bindings", required=True)
    group = sim.add_mutually_exclusive_group()
    group.add_argument("--schedule")
    group.add_argument("--seed", type=int)
    group.add_argument("--interactive", action="store_true")
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--delta")
    sim.add_argument("--out")
    sim.add_argument("--no-early-stop", action="store_true")
    add_now_flag(sim)
    sim.set_defaults(func=cmd_simulate)

    chk = sub.add_parser("check-trace", help="replay monitors over a trace")
    chk.add_argument("--trace", required=True)
    chk.add_argument("--props", required=True)
    chk.add_argument("--bindings", required=True)
    chk.add_argument("--out")
    add_now_flag(chk)
    chk.set_defaults(func=cmd_check_trace)

    ev = sub.add_parser("eval", help="evaluate a formula over an inline word")
    ev.add_argument("formula")
    ev.add_argument("events", nargs="+", metavar="{p,q}@t")
    add_now_flag(ev)
    ev.set_defaults(func=cmd_eval)

    val = sub.add_parser("validate", help="parse inputs without running")
    val.add_argument("--scenario")
    val.add_argument("--props")
    val.add_argument("--bindings")
    val.add_argument("--schedule")
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EX_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, FormulaError, ScenarioError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    except TraceResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_RESOLUTION
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    except EngineInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EX_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EX_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
