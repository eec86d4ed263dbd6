"""Timed-LTL formulas: abstract syntax trees, text syntax and sugar removal.

Node kinds cover the core grammar (atoms, not, or, next, until, prophecy),
the sugar operators handled natively by the monitor (and, implies, weak
next, eventually, always), and two monitor-internal kinds (ActiveProphecy,
VerdictLeaf) that never occur in parsed user input.

Every node carries a rewriting mark used by the monitor pipeline.  Marks
are excluded from structural equality, hashing and printing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .verdict import Verdict


class FormulaError(ValueError):
    """Malformed formula text or an ill-formed formula tree."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


def time_str(t: Fraction) -> str:
    """Render an exact rational as an exact decimal string.

    Only rationals with a 2^a * 5^b denominator have a finite decimal
    expansion; anything else is rejected rather than rounded.
    """
    if t.denominator == 1:
        return str(t.numerator)
    den = t.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise FormulaError(f"{t} has no exact decimal representation")
    digits = max(twos, fives)
    scaled = abs(t.numerator) * 10**digits // t.denominator
    text = str(scaled).rjust(digits + 1, "0")
    sign = "-" if t < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


# --- abstract syntax ---------------------------------------------------------


@dataclass(frozen=True)
class Node:
    """Base formula node.  `mark` is the rewriting flag, ignored by eq/hash."""

    mark: bool = field(default=False, compare=False, kw_only=True)


@dataclass(frozen=True)
class Atom(Node):
    name: str


@dataclass(frozen=True)
class RemoteAtom(Node):
    """Proposition evaluated at another agent (`@B.p`)."""

    agent: str
    name: str


@dataclass(frozen=True)
class TrueF(Node):
    pass


@dataclass(frozen=True)
class FalseF(Node):
    pass


@dataclass(frozen=True)
class Not(Node):
    child: Node


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Implies(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Next(Node):
    child: Node


@dataclass(frozen=True)
class WeakNext(Node):
    child: Node


@dataclass(frozen=True)
class Until(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Eventually(Node):
    child: Node


@dataclass(frozen=True)
class Always(Node):
    child: Node


@dataclass(frozen=True)
class Prophecy(Node):
    """`within[lower,upper] p`: next occurrence of p falls in the window."""

    lower: Fraction
    upper: Fraction
    prop: str
    negated: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise FormulaError(
                f"prophecy bounds must satisfy lower < upper, got "
                f"[{self.lower},{self.upper}]"
            )
        if self.lower < 0:
            raise FormulaError(f"prophecy lower bound must be non-negative, got {self.lower}")


@dataclass(frozen=True)
class ActiveProphecy(Node):
    """Activated prophecy whose window shifts with elapsing time.

    Bounds may become negative through shifting, so no bound check applies.
    """

    lower: Fraction
    upper: Fraction
    prop: str
    negated: bool = False


@dataclass(frozen=True)
class VerdictLeaf(Node):
    """Monitor-internal leaf holding a lattice value; never parsed."""

    value: Verdict


@dataclass(frozen=True)
class Property:
    """A formula located at an agent: `@A: body`."""

    agent: str
    body: Node


BOOLEAN_KINDS = (Not, Or, And, Implies)
TEMPORAL_KINDS = (Next, WeakNext, Until, Eventually, Always, Prophecy, ActiveProphecy)


# --- tokenizer ---------------------------------------------------------------

_KEYWORDS = {"U", "X", "WX", "F", "G", "within", "true", "false"}
_SYMBOLS = ("->", "!", "|", "&", "(", ")", "[", "]", ",", ":", "@", ".")


@dataclass
class _Token:
    kind: str  # IDENT, NUM, keyword text, symbol text, or EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(_Token("NUM", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORDS else "IDENT"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if text.startswith("->", i):
            tokens.append(_Token("->", "->", line, col))
            i += 2
            col += 2
            continue
        if ch in "!|&()[],:@.":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise FormulaError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


def _parse_num(tok: _Token) -> Fraction:
    if "." in tok.text:
        whole, frac = tok.text.split(".")
        return Fraction(int(whole + frac), 10 ** len(frac))
    return Fraction(int(tok.text))


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        if self.cur.kind != kind:
            self.fail(f"expected {kind!r}, found {self.cur.text or 'end of input'!r}")
        return self.advance()

    def fail(self, message: str):
        raise FormulaError(message, self.cur.line, self.cur.col)

    def property_(self) -> Property:
        self.expect("@")
        agent = self.expect("IDENT").text
        self.expect(":")
        body = self.formula()
        self.expect("EOF")
        return Property(agent, body)

    def bare_formula(self) -> Node:
        body = self.formula()
        self.expect("EOF")
        return body

    def formula(self) -> Node:
        return self.implies()

    def implies(self) -> Node:
        left = self.or_()
        if self.cur.kind == "->":
            self.advance()
            return Implies(left, self.implies())
        return left

    def or_(self) -> Node:
        node = self.and_()
        while self.cur.kind == "|":
            self.advance()
            node = Or(node, self.and_())
        return node

    def and_(self) -> Node:
        node = self.until()
        while self.cur.kind == "&":
            self.advance()
            node = And(node, self.until())
        return node

    def until(self) -> Node:
        left = self.unary()
        if self.cur.kind == "U":
            self.advance()
            return Until(left, self.until())
        return left

    def unary(self) -> Node:
        kind = self.cur.kind
        if kind == "!":
            self.advance()
            return Not(self.unary())
        if kind == "X":
            self.advance()
            return Next(self.unary())
        if kind == "WX":
            self.advance()
            return WeakNext(self.unary())
        if kind == "F":
            self.advance()
            return Eventually(self.unary())
        if kind == "G":
            self.advance()
            return Always(self.unary())
        if kind == "within":
            return self.prophecy()
        if kind == "true":
            self.advance()
            return TrueF()
        if kind == "false":
            self.advance()
            return FalseF()
        if kind == "(":
            self.advance()
            node = self.formula()
            self.expect(")")
            return node
        if kind in ("IDENT", "@"):
            return self.atom()
        self.fail(f"expected a formula, found {self.cur.text or 'end of input'!r}")

    def prophecy(self) -> Node:
        tok = self.advance()  # 'within'
        self.expect("[")
        lower = _parse_num(self.expect("NUM"))
        self.expect(",")
        upper = _parse_num(self.expect("NUM"))
        self.expect("]")
        negated = False
        if self.cur.kind == "!":
            self.advance()
            negated = True
        prop = self.expect("IDENT").text
        if not lower < upper:
            raise FormulaError(
                f"prophecy bounds must satisfy lower < upper, got [{lower},{upper}]",
                tok.line,
                tok.col,
            )
        return Prophecy(lower, upper, prop, negated)

    def atom(self) -> Node:
        if self.cur.kind == "@":
            self.advance()
            agent = self.expect("IDENT").text
            self.expect(".")
            name = self.expect("IDENT").text
            return RemoteAtom(agent, name)
        return Atom(self.expect("IDENT").text)


def parse_formula(text: str) -> Property:
    """Parse `@Agent: formula` into a Property."""
    return _Parser(_tokenize(text)).property_()


def parse_bare_formula(text: str) -> Node:
    """Parse a formula without the leading agent annotation."""
    return _Parser(_tokenize(text)).bare_formula()


# --- printer -----------------------------------------------------------------

# Precedence levels; higher binds tighter.
_PREC_IMPLIES = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_UNTIL = 4
_PREC_UNARY = 5
_PREC_ATOM = 6


def _prec(n: Node) -> int:
    if isinstance(n, Implies):
        return _PREC_IMPLIES
    if isinstance(n, Or):
        return _PREC_OR
    if isinstance(n, And):
        return _PREC_AND
    if isinstance(n, Until):
        return _PREC_UNTIL
    if isinstance(n, (Not, Next, WeakNext, Eventually, Always)):
        return _PREC_UNARY
    return _PREC_ATOM


def _fmt(n: Node, extended: bool) -> str:
    def wrap(child: Node, minimum: int) -> str:
        text = _fmt(child, extended)
        return f"({text})" if _prec(child) < minimum else text

    if isinstance(n, Atom):
        return n.name
    if isinstance(n, RemoteAtom):
        return f"@{n.agent}.{n.name}"
    if isinstance(n, TrueF):
        return "true"
    if isinstance(n, FalseF):
        return "false"
    if isinstance(n, Not):
        return "!" + wrap(n.child, _PREC_UNARY)
    if isinstance(n, Next):
        return "X " + wrap(n.child, _PREC_UNARY)
    if isinstance(n, WeakNext):
        return "WX " + wrap(n.child, _PREC_UNARY)
    if isinstance(n, Eventually):
        return "F " + wrap(n.child, _PREC_UNARY)
    if isinstance(n, Always):
        return "G " + wrap(n.child, _PREC_UNARY)
    if isinstance(n, Prophecy):
        neg = "!" if n.negated else ""
        return f"within[{time_str(n.lower)},{time_str(n.upper)}] {neg}{n.prop}"
    if isinstance(n, ActiveProphecy):
        if not extended:
            raise FormulaError("activated prophecy has no user syntax")
        neg = "!" if n.negated else ""
        return f"within'[{time_str(n.lower)},{time_str(n.upper)}] {neg}{n.prop}"
    if isinstance(n, VerdictLeaf):
        if not extended:
            raise FormulaError("verdict leaf has no user syntax")
        return n.value.short
    if isinstance(n, Until):
        # right-associative
        return wrap(n.left, _PREC_UNTIL + 1) + " U " + wrap(n.right, _PREC_UNTIL)
    if isinstance(n, And):
        return wrap(n.left, _PREC_AND) + " & " + wrap(n.right, _PREC_AND + 1)
    if isinstance(n, Or):
        return wrap(n.left, _PREC_OR) + " | " + wrap(n.right, _PREC_OR + 1)
    if isinstance(n, Implies):
        return wrap(n.left, _PREC_IMPLIES + 1) + " -> " + wrap(n.right, _PREC_IMPLIES)
    raise FormulaError(f"cannot print node {n!r}")


def format_formula(n: Node, extended: bool = False) -> str:
    """Render a bare formula; inverse of parse_bare_formula (marks dropped)."""
    return _fmt(n, extended)


def print_formula(prop: Property, extended: bool = False) -> str:
    """Render a property; parse_formula(print_formula(p)) == p."""
    return f"@{prop.agent}: {_fmt(prop.body, extended)}"


# --- syntactic sugar ---------------------------------------------------------


def _tautology(n: Node) -> Node:
    """`true` rendered as phi | !phi over an already sugar-free phi."""
    return Or(n, Not(n))


def expand_sugar(n: Node) -> Node:
    """Rewrite to the core grammar: atoms, not, or, next, until, prophecy.

    Used by the reference semantics; the monitor handles sugar natively.
    """
    if isinstance(n, (Atom, RemoteAtom, Prophecy)):
        return n
    if isinstance(n, TrueF):
        return _tautology(Atom("p"))
    if isinstance(n, FalseF):
        return Not(_tautology(Atom("p")))
    if isinstance(n, Not):
        return Not(expand_sugar(n.child))
    if isinstance(n, Or):
        return Or(expand_sugar(n.left), expand_sugar(n.right))
    if isinstance(n, And):
        return Not(Or(Not(expand_sugar(n.left)), Not(expand_sugar(n.right))))
    if isinstance(n, Implies):
        return Or(Not(expand_sugar(n.left)), expand_sugar(n.right))
    if isinstance(n, Next):
        return Next(expand_sugar(n.child))
    if isinstance(n, WeakNext):
        return Not(Next(Not(expand_sugar(n.child))))
    if isinstance(n, Until):
        return Until(expand_sugar(n.left), expand_sugar(n.right))
    if isinstance(n, Eventually):
        child = expand_sugar(n.child)
        return Until(_tautology(child), child)
    if isinstance(n, Always):
        child = expand_sugar(n.child)
        return Not(Until(_tautology(child), Not(child)))
    raise FormulaError(f"cannot expand monitor-internal node {type(n).__name__}")


def strip_marks(n: Node) -> Node:
    """Return a copy of the tree with every rewriting mark cleared."""
    cleared = replace(n, mark=False) if n.mark else n
    if isinstance(cleared, (Not, Next, WeakNext, Eventually, Always)):
        child = strip_marks(cleared.child)
        return cleared if child is cleared.child else replace(cleared, child=child)
    if isinstance(cleared, (Or, And, Implies, Until)):
        left = strip_marks(cleared.left)
        right = strip_marks(cleared.right)
        if left is cleared.left and right is cleared.right:
            return cleared
        return replace(cleared, left=left, right=right)
    return cleared


def has_marks(n: Node) -> bool:
    if n.mark:
        return True
    if isinstance(n, (Not, Next, WeakNext, Eventually, Always)):
        return has_marks(n.child)
    if isinstance(n, (Or, And, Implies, Until)):
        return has_marks(n.left) or has_marks(n.right)
    return False
