"""Workflow data model: scenario definitions, runtime snapshots, bindings.

A Scenario is the static definition (task/input/message kinds, agents,
transitions).  A Snapshot is one global runtime state.  Bindings tie
proposition names to predicate templates over snapshots, which is how
monitored formulas observe the simulation.

The typing hierarchy is fixed at three levels: the language concepts are
hard-coded here, kinds are declared per scenario, and snapshots hold the
runtime instances.  check_conformance verifies the full chain.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import time_str


class ScenarioError(ValueError):
    """Malformed scenario or bindings text, or an inconsistent definition."""


# --- static definitions ------------------------------------------------------

# trigger encodings: None, ("input", kind), ("message", kind), ("after", time)
Trigger = tuple | None


@dataclass(frozen=True)
class TransitionDef:
    ident: str
    source: str
    target: str
    trigger: Trigger = None
    sends: tuple[tuple[str, str], ...] = ()  # (message kind, recipient agent)

    @property
    def is_timed(self) -> bool:
        return self.trigger is not None and self.trigger[0] == "after"


@dataclass(frozen=True)
class AgentDef:
    name: str
    tasks: tuple[tuple[str, str], ...]  # (task id, task kind)
    transitions: tuple[TransitionDef, ...] = ()

    def task_kind(self, task_id: str) -> str | None:
        for ident, kind in self.tasks:
            if ident == task_id:
                return kind
        return None


@dataclass(frozen=True)
class Scenario:
    name: str
    task_kinds: tuple[tuple[str, bool], ...]  # (kind name, initial-capable)
    input_kinds: tuple[str, ...]
    message_kinds: tuple[str, ...]
    agents: tuple[AgentDef, ...]
    timestep: Fraction = Fraction(1)

    def agent(self, name: str) -> AgentDef:
        for a in self.agents:
            if a.name == name:
                return a
        raise ScenarioError(f"unknown agent {name!r}")

    def transition(self, agent_name: str, ident: str) -> TransitionDef:
        for t in self.agent(agent_name).transitions:
            if t.ident == ident:
                return t
        raise ScenarioError(f"unknown transition {agent_name}.{ident}")

    def initial_kinds(self) -> set[str]:
        return {kind for kind, initial in self.task_kinds if initial}

    def initial_task(self, agent_name: str) -> str:
        initial = self.initial_kinds()
        for ident, kind in self.agent(agent_name).tasks:
            if kind in initial:
                return ident
        raise ScenarioError(f"agent {agent_name!r} has no initial task")

    def timed_transitions(self) -> list[tuple[str, TransitionDef]]:
        return [
            (a.name, t)
            for a in self.agents
            for t in a.transitions
            if t.is_timed
        ]


def validate_scenario(s: Scenario) -> None:
    """Check the structural invariants; raise ScenarioError on the first."""
    task_kind_names = [k for k, _ in s.task_kinds]
    for category, names in (
        ("task kind", task_kind_names),
        ("input kind", list(s.input_kinds)),
        ("message kind", list(s.message_kinds)),
        ("agent", [a.name for a in s.agents]),
    ):
        dupes = [n for n, c in Counter(names).items() if c > 1]
        if dupes:
            raise ScenarioError(f"duplicate {category} {dupes[0]!r}")
    initial = s.initial_kinds()
    agent_names = {a.name for a in s.agents}
    for a in s.agents:
        ids = [ident for ident, _ in a.tasks]
        dupes = [n for n, c in Counter(ids).items() if c > 1]
        if dupes:
            raise ScenarioError(f"duplicate task id {dupes[0]!r} in agent {a.name}")
        for ident, kind in a.tasks:
            if kind not in task_kind_names:
                raise ScenarioError(
                    f"task {a.name}.{ident} has undeclared kind {kind!r}"
                )
        starts = [ident for ident, kind in a.tasks if kind in initial]
        if len(starts) != 1:
            raise ScenarioError(
                f"agent {a.name} must have exactly one initial task, has {len(starts)}"
            )
        tids = [t.ident for t in a.transitions]
        dupes = [n for n, c in Counter(tids).items() if c > 1]
        if dupes:
            raise ScenarioError(f"duplicate transition id {dupes[0]!r} in agent {a.name}")
        seen_triggers = set()
        for t in a.transitions:
            for endpoint in (t.source, t.target):
                if endpoint not in ids:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} references undeclared task "
                        f"{endpoint!r}"
                    )
            key = (t.source, t.trigger)
            if key in seen_triggers:
                raise ScenarioError(
                    f"agent {a.name}: more than one transition out of {t.source!r} "
                    f"with trigger {t.trigger!r}"
                )
            seen_triggers.add(key)
            if t.trigger is not None:
                tag, value = t.trigger
                if tag == "input" and value not in s.input_kinds:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} uses undeclared input {value!r}"
                    )
                if tag == "message" and value not in s.message_kinds:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} uses undeclared message {value!r}"
                    )
                if tag == "after" and not value > 0:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} has non-positive threshold"
                    )
            for kind, recipient in t.sends:
                if kind not in s.message_kinds:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} sends undeclared message "
                        f"{kind!r}"
                    )
                if recipient not in agent_names:
                    raise ScenarioError(
                        f"transition {a.name}.{t.ident} sends to undeclared agent "
                        f"{recipient!r}"
                    )
    if s.timestep <= 0:
        raise ScenarioError("timestep must be positive")


# --- runtime snapshots -------------------------------------------------------


@dataclass(frozen=True)
class Message:
    """One message instance; the id makes containment trackable."""

    ident: int
    kind: str
    sender: str
    recipient: str


@dataclass
class AgentState:
    task: str
    active: bool = False
    inputs: Counter = field(default_factory=Counter)  # input kind -> count
    messages: dict[int, Message] = field(default_factory=dict)

    def clone(self) -> "AgentState":
        return AgentState(self.task, self.active, Counter(self.inputs), dict(self.messages))


@dataclass
class Snapshot:
    clock: Fraction
    agents: dict[str, AgentState]
    in_transit: dict[int, Message] = field(default_factory=dict)
    elapsed: dict[tuple[str, str], Fraction] = field(default_factory=dict)
    seq: int = 0
    next_message_id: int = 0

    def clone(self) -> "Snapshot":
        return Snapshot(
            clock=self.clock,
            agents={name: st.clone() for name, st in self.agents.items()},
            in_transit=dict(self.in_transit),
            elapsed=dict(self.elapsed),
            seq=self.seq,
            next_message_id=self.next_message_id,
        )

    def new_message(self, kind: str, sender: str, recipient: str) -> Message:
        msg = Message(self.next_message_id, kind, sender, recipient)
        self.next_message_id += 1
        return msg


def init_snapshot(s: Scenario) -> Snapshot:
    """Fresh runtime state: clock zero, everyone at their initial task."""
    return Snapshot(
        clock=Fraction(0),
        agents={a.name: AgentState(task=s.initial_task(a.name)) for a in s.agents},
        elapsed={(name, t.ident): Fraction(0) for name, t in s.timed_transitions()},
    )


def check_conformance(snap: Snapshot, s: Scenario) -> list[str]:
    """Return every invariant violation (empty list means conformant)."""
    violations = []
    if snap.clock < 0:
        violations.append(f"clock is negative: {snap.clock}")
    declared_agents = {a.name for a in s.agents}
    if set(snap.agents) != declared_agents:
        violations.append(
            f"snapshot agents {sorted(snap.agents)} do not match scenario agents "
            f"{sorted(declared_agents)}"
        )
    task_kind_names = {k for k, _ in s.task_kinds}
    for name, state in snap.agents.items():
        if name not in declared_agents:
            continue
        agent_def = s.agent(name)
        kind = agent_def.task_kind(state.task)
        if kind is None:
            violations.append(f"agent {name} is at undeclared task {state.task!r}")
        elif kind not in task_kind_names:
            violations.append(
                f"agent {name}: task {state.task!r} has undeclared kind {kind!r}"
            )
        for input_kind, count in state.inputs.items():
            if input_kind not in s.input_kinds:
                violations.append(f"agent {name} holds undeclared input {input_kind!r}")
            if count < 0:
                violations.append(f"agent {name}: negative input count for {input_kind!r}")
        for msg in state.messages.values():
            if msg.kind not in s.message_kinds:
                violations.append(f"agent {name} holds undeclared message {msg.kind!r}")
            if msg.sender not in declared_agents:
                violations.append(
                    f"message {msg.ident} has undeclared sender {msg.sender!r}"
                )
    for msg in snap.in_transit.values():
        if msg.kind not in s.message_kinds:
            violations.append(f"in-transit message of undeclared kind {msg.kind!r}")
        if msg.recipient not in declared_agents or msg.sender not in declared_agents:
            violations.append(f"in-transit message {msg.ident} has undeclared endpoints")
    # exclusive containment: a message id lives in transit xor in one agent
    seen: dict[int, str] = {}
    for ident in snap.in_transit:
        seen[ident] = "system"
    for name, state in snap.agents.items():
        for ident in state.messages:
            if ident in seen:
                violations.append(
                    f"message {ident} contained by both {seen[ident]} and agent {name}"
                )
            else:
                seen[ident] = f"agent {name}"
    timed = {(name, t.ident) for name, t in s.timed_transitions()}
    for key, value in snap.elapsed.items():
        if key not in timed:
            violations.append(f"elapsed entry for non-timed transition {key}")
        if value < 0:
            violations.append(f"negative elapsed {value} on transition {key}")
    for key in timed - set(snap.elapsed):
        violations.append(f"missing elapsed entry for timed transition {key}")
    return violations


# --- proposition bindings ----------------------------------------------------

_TEMPLATE_ARITY = {
    "task_current": 2,  # agent, task id
    "input_present": 2,  # agent, input kind
    "message_held": 2,  # agent, message kind
    "message_in_transit": 3,  # message kind, sender, recipient
    "agent_active": 1,  # agent
}


@dataclass(frozen=True)
class Binding:
    template: str
    args: tuple[str, ...]

    def __post_init__(self):
        arity = _TEMPLATE_ARITY.get(self.template)
        if arity is None:
            raise ScenarioError(f"unknown binding template {self.template!r}")
        if len(self.args) != arity:
            raise ScenarioError(
                f"{self.template} takes {arity} arguments, got {len(self.args)}"
            )


BindingSet = dict[str, Binding]


def eval_binding(b: Binding, snap: Snapshot) -> bool:
    """Truth of one predicate template against a snapshot."""
    if b.template == "task_current":
        agent, task = b.args
        state = snap.agents.get(agent)
        return state is not None and state.task == task
    if b.template == "input_present":
        agent, kind = b.args
        state = snap.agents.get(agent)
        return state is not None and state.inputs.get(kind, 0) > 0
    if b.template == "message_held":
        agent, kind = b.args
        state = snap.agents.get(agent)
        return state is not None and any(m.kind == kind for m in state.messages.values())
    if b.template == "message_in_transit":
        kind, sender, recipient = b.args
        return any(
            m.kind == kind and m.sender == sender and m.recipient == recipient
            for m in snap.in_transit.values()
        )
    if b.template == "agent_active":
        (agent,) = b.args
        state = snap.agents.get(agent)
        return state is not None and state.active
    raise ScenarioError(f"unknown binding template {b.template!r}")


def validate_bindings(bindings: BindingSet, s: Scenario) -> None:
    """Every name a binding references must exist in the scenario."""
    agent_names = {a.name for a in s.agents}

    def need_agent(prop, name):
        if name not in agent_names:
            raise ScenarioError(f"binding {prop!r} references unknown agent {name!r}")

    for prop, b in bindings.items():
        if b.template == "task_current":
            agent, task = b.args
            need_agent(prop, agent)
            if s.agent(agent).task_kind(task) is None:
                raise ScenarioError(
                    f"binding {prop!r} references unknown task {agent}.{task}"
                )
        elif b.template == "input_present":
            agent, kind = b.args
            need_agent(prop, agent)
            if kind not in s.input_kinds:
                raise ScenarioError(f"binding {prop!r} references unknown input {kind!r}")
        elif b.template == "message_held":
            agent, kind = b.args
            need_agent(prop, agent)
            if kind not in s.message_kinds:
                raise ScenarioError(f"binding {prop!r} references unknown message {kind!r}")
        elif b.template == "message_in_transit":
            kind, sender, recipient = b.args
            if kind not in s.message_kinds:
                raise ScenarioError(f"binding {prop!r} references unknown message {kind!r}")
            need_agent(prop, sender)
            need_agent(prop, recipient)
        elif b.template == "agent_active":
            need_agent(prop, b.args[0])


# --- concrete syntax ---------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"\d+(?:\.\d+)?")


class _Scanner:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, int]] = []  # (token, line)
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0]
            pos = 0
            while pos < len(line):
                ch = line[pos]
                if ch.isspace():
                    pos += 1
                    continue
                m = _IDENT_RE.match(line, pos) or _NUM_RE.match(line, pos)
                if m:
                    self.tokens.append((m.group(), lineno))
                    pos = m.end()
                    continue
                if line.startswith("->", pos):
                    self.tokens.append(("->", lineno))
                    pos += 2
                    continue
                if ch in "{}:,()=":
                    self.tokens.append((ch, lineno))
                    pos += 1
                    continue
                raise ScenarioError(f"line {lineno}: unexpected character {ch!r}")
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self, expected: str | None = None) -> str:
        if self.pos >= len(self.tokens):
            raise ScenarioError(f"unexpected end of input, expected {expected or 'token'}")
        token, lineno = self.tokens[self.pos]
        if expected is not None and token != expected:
            raise ScenarioError(f"line {lineno}: expected {expected!r}, found {token!r}")
        self.pos += 1
        return token

    def ident(self) -> str:
        token = self.next()
        if not _IDENT_RE.fullmatch(token):
            raise ScenarioError(f"expected identifier, found {token!r}")
        return token

    def num(self) -> Fraction:
        token = self.next()
        if not _NUM_RE.fullmatch(token):
            raise ScenarioError(f"expected number, found {token!r}")
        if "." in token:
            whole, frac = token.split(".")
            return Fraction(int(whole + frac), 10 ** len(frac))
        return Fraction(int(token))


def load_scenario(text: str) -> Scenario:
    """Parse scenario text; the result is fully validated."""
    sc = _Scanner(text)
    sc.next("system")
    name = sc.ident()
    task_kinds: list[tuple[str, bool]] = []
    input_kinds: list[str] = []
    message_kinds: list[str] = []
    agents: list[AgentDef] = []
    timestep = Fraction(1)
    while sc.peek() is not None:
        keyword = sc.next()
        if keyword == "taskkind":
            kind = sc.ident()
            initial = False
            if sc.peek() == "initial":
                sc.next()
                initial = True
            task_kinds.append((kind, initial))
        elif keyword == "inputkind":
            input_kinds.append(sc.ident())
        elif keyword == "messagekind":
            message_kinds.append(sc.ident())
        elif keyword == "timestep":
            timestep = sc.num()
        elif keyword == "agent":
            agents.append(_parse_agent(sc))
        else:
            raise ScenarioError(f"unexpected declaration {keyword!r}")
    scenario = Scenario(
        name=name,
        task_kinds=tuple(task_kinds),
        input_kinds=tuple(input_kinds),
        message_kinds=tuple(message_kinds),
        agents=tuple(agents),
        timestep=timestep,
    )
    validate_scenario(scenario)
    return scenario


def _parse_agent(sc: _Scanner) -> AgentDef:
    name = sc.ident()
    sc.next("{")
    tasks: list[tuple[str, str]] = []
    transitions: list[TransitionDef] = []
    while sc.peek() != "}":
        keyword = sc.next()
        if keyword == "task":
            ident = sc.ident()
            sc.next(":")
            tasks.append((ident, sc.ident()))
        elif keyword == "transition":
            ident = sc.ident()
            sc.next(":")
            source = sc.ident()
            sc.next("->")
            target = sc.ident()
            trigger: Trigger = None
            if sc.peek() == "on":
                sc.next()
                what = sc.next()
                if what == "input":
                    trigger = ("input", sc.ident())
                elif what == "message":
                    trigger = ("message", sc.ident())
                else:
                    raise ScenarioError(f"expected 'input' or 'message', found {what!r}")
            elif sc.peek() == "after":
                sc.next()
                trigger = ("after", sc.num())
            sends: list[tuple[str, str]] = []
            while sc.peek() == "send":
                sc.next()
                kind = sc.ident()
                sc.next("to")
                sends.append((kind, sc.ident()))
            transitions.append(TransitionDef(ident, source, target, trigger, tuple(sends)))
        else:
            raise ScenarioError(f"unexpected keyword {keyword!r} in agent {name}")
    sc.next("}")
    return AgentDef(name, tuple(tasks), tuple(transitions))


def print_scenario(s: Scenario) -> str:
    """Render a scenario; load_scenario(print_scenario(s)) == s."""
    lines = [f"system {s.name}"]
    for kind, initial in s.task_kinds:
        lines.append(f"taskkind {kind} initial" if initial else f"taskkind {kind}")
    for kind in s.input_kinds:
        lines.append(f"inputkind {kind}")
    for kind in s.message_kinds:
        lines.append(f"messagekind {kind}")
    lines.append(f"timestep {time_str(s.timestep)}")
    for a in s.agents:
        lines.append(f"agent {a.name} {{")
        for ident, kind in a.tasks:
            lines.append(f"  task {ident} : {kind}")
        for t in a.transitions:
            parts = [f"  transition {t.ident} : {t.source} -> {t.target}"]
            if t.trigger is not None:
                tag, value = t.trigger
                if tag == "input":
                    parts.append(f"on input {value}")
                elif tag == "message":
                    parts.append(f"on message {value}")
                else:
                    parts.append(f"after {time_str(value)}")
            for kind, recipient in t.sends:
                parts.append(f"send {kind} to {recipient}")
            lines.append(" ".join(parts))
        lines.append("}")
    return "\n".join(lines) + "\n"


_BINDING_RE = re.compile(
    r"prop\s+([A-Za-z_]\w*)\s*=\s*([A-Za-z_]\w*)\s*\(([^)]*)\)\s*$"
)


def parse_bindings(text: str) -> BindingSet:
    """Parse `prop name = template(args)` lines into a binding set."""
    bindings: BindingSet = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _BINDING_RE.match(line)
        if not m:
            raise ScenarioError(f"line {lineno}: cannot parse binding {raw!r}")
        name, template, arg_text = m.groups()
        if name in bindings:
            raise ScenarioError(f"line {lineno}: duplicate proposition {name!r}")
        args = tuple(a.strip() for a in arg_text.split(",")) if arg_text.strip() else ()
        bindings[name] = Binding(template, args)
    return bindings


def print_bindings(bindings: BindingSet) -> str:
    lines = [
        f"prop {name} = {b.template}({', '.join(b.args)})"
        for name, b in bindings.items()
    ]
    return "\n".join(lines) + "\n"
