"""Multi-agent workflow simulation with four-valued timed-LTL monitoring."""

from .verdict import Verdict, complement, join, meet
from .formula import (
    FormulaError,
    Property,
    expand_sugar,
    format_formula,
    parse_bare_formula,
    parse_formula,
    print_formula,
)
from .oracle import Event, Word, ev, finite_verdict, make_word, sat
from .monitor import MonitorState, StepResult, dispatch, monitor_step, resolve_event
from .model import (
    Binding,
    BindingSet,
    Scenario,
    ScenarioError,
    Snapshot,
    check_conformance,
    eval_binding,
    init_snapshot,
    load_scenario,
    parse_bindings,
    print_bindings,
    print_scenario,
    validate_bindings,
)
from .engine import (
    InteractivePolicy,
    RuleMatch,
    RunTrace,
    ScriptedPolicy,
    SeededPolicy,
    SimulationError,
    coordinate_step,
    find_matches,
    parse_schedule,
    run,
)
from .trace import TraceFormatError, TraceResolutionError, check_trace, trace_lines

__all__ = [
    "Verdict",
    "complement",
    "join",
    "meet",
    "FormulaError",
    "Property",
    "expand_sugar",
    "format_formula",
    "parse_bare_formula",
    "parse_formula",
    "print_formula",
    "Event",
    "Word",
    "ev",
    "finite_verdict",
    "make_word",
    "sat",
    "MonitorState",
    "StepResult",
    "dispatch",
    "monitor_step",
    "resolve_event",
    "Binding",
    "BindingSet",
    "Scenario",
    "ScenarioError",
    "Snapshot",
    "check_conformance",
    "eval_binding",
    "init_snapshot",
    "load_scenario",
    "parse_bindings",
    "print_bindings",
    "print_scenario",
    "validate_bindings",
    "InteractivePolicy",
    "RuleMatch",
    "RunTrace",
    "ScriptedPolicy",
    "SeededPolicy",
    "SimulationError",
    "coordinate_step",
    "find_matches",
    "parse_schedule",
    "run",
    "TraceFormatError",
    "TraceResolutionError",
    "check_trace",
    "trace_lines",
]

__version__ = "0.1.0"
