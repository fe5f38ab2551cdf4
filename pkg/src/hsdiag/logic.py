"""Propositional logic core: formula ASTs, parsing, CNF conversion, and
SAT-based consistency/entailment checks.

Formulas are immutable and hashable. Conjunction and disjunction children are
flattened and kept in a canonical order, so structural equality doubles as
sentence identity for everything built on top.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class Formula:
    """Base class for formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self) -> str:
        return "TRUE" if self.value else "FALSE"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, repr=False)
class Var(Formula):
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name})"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    child: Formula

    def __repr__(self) -> str:
        return f"Not({self.child!r})"


def _sort_key(f: Formula) -> tuple:
    if isinstance(f, Const):
        return (0, f.value)
    if isinstance(f, Var):
        return (1, f.name)
    if isinstance(f, Not):
        return (2, _sort_key(f.child))
    if isinstance(f, And):
        return (3, tuple(_sort_key(c) for c in f.children))
    if isinstance(f, Or):
        return (4, tuple(_sort_key(c) for c in f.children))
    if isinstance(f, Implies):
        return (5, _sort_key(f.lhs), _sort_key(f.rhs))
    if isinstance(f, Iff):
        return (6, _sort_key(f.lhs), _sort_key(f.rhs))
    raise TypeError(f"not a formula: {f!r}")


def _normalize_children(children: Iterable[Formula], cls: type) -> tuple[Formula, ...]:
    flat: list[Formula] = []
    for c in children:
        if isinstance(c, cls):
            flat.extend(c.children)  # type: ignore[attr-defined]
        else:
            flat.append(c)
    return tuple(sorted(flat, key=_sort_key))


@dataclass(frozen=True, repr=False)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _normalize_children(self.children, And))

    def __repr__(self) -> str:
        return f"And{self.children!r}"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _normalize_children(self.children, Or))

    def __repr__(self) -> str:
        return f"Or{self.children!r}"


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    def __repr__(self) -> str:
        return f"Implies({self.lhs!r}, {self.rhs!r})"


@dataclass(frozen=True, repr=False)
class Iff(Formula):
    lhs: Formula
    rhs: Formula

    def __repr__(self) -> str:
        return f"Iff({self.lhs!r}, {self.rhs!r})"


def conj(children: Iterable[Formula]) -> Formula:
    items = list(children)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


def disj(children: Iterable[Formula]) -> Formula:
    items = list(children)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(tuple(items))


# ---------------------------------------------------------------------------
# Parsing
#
# formula := bicond
# bicond  := impl ("<->" impl)*          (left associative)
# impl    := disj ("->" impl)?           (right associative)
# disj    := conj ("|" conj)*
# conj    := unary ("&" unary)*
# unary   := "!" unary | "(" formula ")" | ident | "true" | "false"
#
# Whitespace is insignificant; "#" starts a line comment.
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN_RE = re.compile(r"<->|->|[!&|()]|[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str, line_offset: int = 0) -> list[_Token]:
    tokens: list[_Token] = []
    for lineno, raw in enumerate(text.split("\n"), start=1 + line_offset):
        line = raw.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            ch = line[pos]
            if ch.isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise ParseError(f"unexpected character {ch!r}", lineno, pos + 1)
            tokens.append(_Token(m.group(0), lineno, pos + 1))
            pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], end_line: int):
        self._tokens = tokens
        self._pos = 0
        self._end_line = end_line

    def _peek(self) -> _Token | None:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of input", self._end_line, 1)
        self._pos += 1
        return tok

    def _accept(self, text: str) -> bool:
        tok = self._peek()
        if tok is not None and tok.text == text:
            self._pos += 1
            return True
        return False

    def parse(self) -> Formula:
        f = self._bicond()
        tok = self._peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.column)
        return f

    def _bicond(self) -> Formula:
        left = self._impl()
        while self._accept("<->"):
            left = Iff(left, self._impl())
        return left

    def _impl(self) -> Formula:
        left = self._disj()
        if self._accept("->"):
            return Implies(left, self._impl())
        return left

    def _disj(self) -> Formula:
        parts = [self._conj()]
        while self._accept("|"):
            parts.append(self._conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _conj(self) -> Formula:
        parts = [self._unary()]
        while self._accept("&"):
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self) -> Formula:
        tok = self._next()
        if tok.text == "!":
            return Not(self._unary())
        if tok.text == "(":
            f = self._bicond()
            tok = self._peek()
            if tok is None or tok.text != ")":
                line, col = (tok.line, tok.column) if tok else (self._end_line, 1)
                raise ParseError("expected ')'", line, col)
            self._pos += 1
            return f
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        if _IDENT_RE.fullmatch(tok.text):
            return Var(tok.text)
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.column)


def parse_formula(text: str, line_offset: int = 0) -> Formula:
    """Parse a single formula. Raises ParseError with line/column on bad input."""
    tokens = _tokenize(text, line_offset)
    end_line = line_offset + text.count("\n") + 1
    if not tokens:
        raise ParseError("empty formula", end_line, 1)
    return _Parser(tokens, end_line).parse()


# ---------------------------------------------------------------------------
# Printing (minimal parentheses; parse(to_text(f)) == f)
# ---------------------------------------------------------------------------

def _prec(f: Formula) -> int:
    if isinstance(f, Iff):
        return 1
    if isinstance(f, Implies):
        return 2
    if isinstance(f, Or):
        return 3
    if isinstance(f, And):
        return 4
    if isinstance(f, Not):
        return 5
    return 6


def to_text(f: Formula) -> str:
    return _render(f, 0)


def _render(f: Formula, min_prec: int) -> str:
    if isinstance(f, Const):
        text = "true" if f.value else "false"
    elif isinstance(f, Var):
        text = f.name
    elif isinstance(f, Not):
        text = "!" + _render(f.child, 5)
    elif isinstance(f, And):
        text = " & ".join(_render(c, 5) for c in f.children)
    elif isinstance(f, Or):
        text = " | ".join(_render(c, 4) for c in f.children)
    elif isinstance(f, Implies):
        text = _render(f.lhs, 3) + " -> " + _render(f.rhs, 2)
    elif isinstance(f, Iff):
        text = _render(f.lhs, 1) + " <-> " + _render(f.rhs, 2)
    else:
        raise TypeError(f"not a formula: {f!r}")
    if _prec(f) < min_prec:
        return "(" + text + ")"
    return text


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------

def variables(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    _collect_vars(f, out)
    return frozenset(out)


def _collect_vars(f: Formula, out: set[str]) -> None:
    if isinstance(f, Var):
        out.add(f.name)
    elif isinstance(f, Not):
        _collect_vars(f.child, out)
    elif isinstance(f, (And, Or)):
        for c in f.children:
            _collect_vars(c, out)
    elif isinstance(f, (Implies, Iff)):
        _collect_vars(f.lhs, out)
        _collect_vars(f.rhs, out)


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        return assignment[f.name]
    if isinstance(f, Not):
        return not evaluate(f.child, assignment)
    if isinstance(f, And):
        return all(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Or):
        return any(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, assignment)) or evaluate(f.rhs, assignment)
    if isinstance(f, Iff):
        return evaluate(f.lhs, assignment) == evaluate(f.rhs, assignment)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# CNF
#
# Literal = (variable name, polarity); a clause is a frozenset of literals.
# Conversion goes through NNF and distributes; fine at the formula sizes this
# package works with.
# ---------------------------------------------------------------------------

Literal = tuple[str, bool]
Clause = frozenset[Literal]

_UNSAT_CLAUSES: frozenset[Clause] = frozenset([frozenset()])


def _nnf(f: Formula, positive: bool) -> Formula:
    if isinstance(f, Const):
        return Const(f.value == positive)
    if isinstance(f, Var):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return _nnf(f.child, not positive)
    if isinstance(f, And):
        parts = tuple(_nnf(c, positive) for c in f.children)
        return And(parts) if positive else Or(parts)
    if isinstance(f, Or):
        parts = tuple(_nnf(c, positive) for c in f.children)
        return Or(parts) if positive else And(parts)
    if isinstance(f, Implies):
        if positive:
            return Or((_nnf(f.lhs, False), _nnf(f.rhs, True)))
        return And((_nnf(f.lhs, True), _nnf(f.rhs, False)))
    if isinstance(f, Iff):
        if positive:
            return And((
                Or((_nnf(f.lhs, False), _nnf(f.rhs, True))),
                Or((_nnf(f.rhs, False), _nnf(f.lhs, True))),
            ))
        return And((
            Or((_nnf(f.lhs, True), _nnf(f.rhs, True))),
            Or((_nnf(f.lhs, False), _nnf(f.rhs, False))),
        ))
    raise TypeError(f"not a formula: {f!r}")


def _nnf_clauses(f: Formula) -> frozenset[Clause]:
    if isinstance(f, Const):
        return frozenset() if f.value else _UNSAT_CLAUSES
    if isinstance(f, Var):
        return frozenset([frozenset([(f.name, True)])])
    if isinstance(f, Not):
        assert isinstance(f.child, Var)
        return frozenset([frozenset([(f.child.name, False)])])
    if isinstance(f, And):
        out: set[Clause] = set()
        for c in f.children:
            out.update(_nnf_clauses(c))
        return frozenset(out)
    if isinstance(f, Or):
        acc: list[Clause] = [frozenset()]
        for c in f.children:
            child_clauses = _nnf_clauses(c)
            if not child_clauses:
                return frozenset()  # child is a tautology, whole disjunction too
            acc = [a | b for a in acc for b in child_clauses]
        return frozenset(cl for cl in acc if not _tautological(cl))
    raise TypeError(f"unexpected NNF node: {f!r}")


def _tautological(clause: Clause) -> bool:
    return any((name, not pol) in clause for name, pol in clause)


@lru_cache(maxsize=None)
def formula_clauses(f: Formula) -> frozenset[Clause]:
    return _nnf_clauses(_nnf(f, True))


def to_clauses(sentences: Iterable[Formula]) -> set[Clause]:
    """CNF of the conjunction of `sentences`, equisatisfiable and tautology-free."""
    out: set[Clause] = set()
    for f in sentences:
        out.update(formula_clauses(f))
    return out


# ---------------------------------------------------------------------------
# DPLL
# ---------------------------------------------------------------------------

def _satisfiable_int(clauses: list[frozenset[int]]) -> bool:
    work = [set(c) for c in clauses]
    return _dpll(work)


def _dpll(clauses: list[set[int]]) -> bool:
    while True:
        units: set[int] = set()
        for c in clauses:
            if not c:
                return False
            if len(c) == 1:
                units.add(next(iter(c)))
        if not units:
            break
        if any(-u in units for u in units):
            return False
        negated = {-u for u in units}
        reduced: list[set[int]] = []
        for c in clauses:
            if c & units:
                continue
            rest = c - negated
            if not rest:
                return False
            reduced.append(rest)
        clauses = reduced
    if not clauses:
        return True
    pivot = abs(min(min(clauses, key=len)))
    return _dpll(clauses + [{pivot}]) or _dpll(clauses + [{-pivot}])


def satisfiable(clauses: Iterable[Clause]) -> bool:
    index: dict[str, int] = {}
    int_clauses: list[frozenset[int]] = []
    for clause in clauses:
        lits = set()
        for name, pol in clause:
            v = index.setdefault(name, len(index) + 1)
            lits.add(v if pol else -v)
        int_clauses.append(frozenset(lits))
    return _satisfiable_int(int_clauses)


@dataclass
class ReasonerCalls:
    """Counts decision-procedure invocations; not shared across threads."""

    consistency: int = 0
    entailment: int = 0


def is_consistent(sentences: Iterable[Formula], calls: ReasonerCalls | None = None) -> bool:
    """True iff the conjunction of `sentences` is satisfiable."""
    if calls is not None:
        calls.consistency += 1
    return satisfiable(to_clauses(sentences))


def entails(sentences: Iterable[Formula], query: Formula, calls: ReasonerCalls | None = None) -> bool:
    """True iff `sentences` ∪ {¬query} is unsatisfiable."""
    if calls is not None:
        calls.entailment += 1
    clauses = to_clauses(sentences)
    clauses.update(formula_clauses(Not(query)))
    return not satisfiable(clauses)
