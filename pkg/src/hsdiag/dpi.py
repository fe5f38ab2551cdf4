"""Diagnosis problem instances: the ⟨components, background, positive tests,
negative tests⟩ data model, validity predicates, measurement bookkeeping, and
exhaustive brute-force oracles used as ground truth in tests.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

from .logic import (
    Formula,
    ParseError,
    ReasonerCalls,
    entails,
    is_consistent,
    parse_formula,
    to_text,
)

ComponentSet = frozenset[int]


class DpiError(ValueError):
    pass


class DpiFormatError(DpiError):
    pass


class DpiValidationError(DpiError):
    pass


class BruteForceCapError(DpiError):
    pass


class DuplicateMeasurementError(DpiError):
    pass


@dataclass(frozen=True)
class DPI:
    """An immutable diagnosis problem: component axioms (1-based stable ids),
    background knowledge, and the initial positive/negative test sentences."""

    axioms: tuple[Formula, ...]
    background: tuple[Formula, ...] = ()
    positive: tuple[Formula, ...] = ()
    negative: tuple[Formula, ...] = ()

    def indices(self) -> ComponentSet:
        return frozenset(range(1, len(self.axioms) + 1))

    def axiom(self, index: int) -> Formula:
        if not 1 <= index <= len(self.axioms):
            raise DpiError(f"axiom index out of range: {index}")
        return self.axioms[index - 1]


@dataclass(frozen=True)
class Acquired:
    """Measurement sentences collected during a session, separate from the
    immutable initial DPI."""

    positive: tuple[Formula, ...] = ()
    negative: tuple[Formula, ...] = ()

    def sentences(self) -> frozenset[Formula]:
        return frozenset(self.positive) | frozenset(self.negative)


EMPTY_ACQUIRED = Acquired()


@dataclass(frozen=True)
class Measurement:
    sentence: Formula
    outcome: bool  # True: holds in the intended system; False: must not hold


def add_measurement(acquired: Acquired, m: Measurement) -> Acquired:
    if m.sentence in acquired.sentences():
        raise DuplicateMeasurementError(f"measurement already recorded: {to_text(m.sentence)}")
    if m.outcome:
        return Acquired(acquired.positive + (m.sentence,), acquired.negative)
    return Acquired(acquired.positive, acquired.negative + (m.sentence,))


# ---------------------------------------------------------------------------
# Core predicates
# ---------------------------------------------------------------------------

def residual_kb(dpi: DPI, acquired: Acquired, removed: Collection[int]) -> list[Formula]:
    """Axioms outside `removed`, plus background and all positive sentences."""
    removed = set(removed)
    kept = [ax for i, ax in enumerate(dpi.axioms, start=1) if i not in removed]
    return kept + list(dpi.background) + list(dpi.positive) + list(acquired.positive)


def negative_tests(dpi: DPI, acquired: Acquired) -> tuple[Formula, ...]:
    return dpi.negative + acquired.negative


def _kb_safe(kb: Sequence[Formula], negatives: Iterable[Formula],
             calls: ReasonerCalls | None = None) -> bool:
    if not is_consistent(kb, calls):
        return False
    return not any(entails(kb, n, calls) for n in negatives)


def is_diagnosis(dpi: DPI, acquired: Acquired, d: Collection[int],
                 calls: ReasonerCalls | None = None) -> bool:
    """True iff removing `d` restores consistency and blocks every negative test."""
    if not set(d) <= dpi.indices():
        raise DpiError(f"diagnosis candidate outside axiom range: {sorted(d)}")
    return _kb_safe(residual_kb(dpi, acquired, d), negative_tests(dpi, acquired), calls)


def is_conflict(dpi: DPI, acquired: Acquired, c: Collection[int],
                calls: ReasonerCalls | None = None) -> bool:
    """True iff the axioms in `c` plus background/positives are inconsistent or
    entail some negative test."""
    if not set(c) <= dpi.indices():
        raise DpiError(f"conflict candidate outside axiom range: {sorted(c)}")
    kb = [dpi.axiom(i) for i in sorted(c)]
    kb += list(dpi.background) + list(dpi.positive) + list(acquired.positive)
    return not _kb_safe(kb, negative_tests(dpi, acquired), calls)


def is_hitting_set(collection: Iterable[Collection[int]], x: Collection[int]) -> bool:
    sets = [frozenset(s) for s in collection]
    xs = frozenset(x)
    union: frozenset[int] = frozenset().union(*sets) if sets else frozenset()
    if not xs <= union:
        return False
    return all(xs & s for s in sets)


def validate_acquired(dpi: DPI, acquired: Acquired) -> None:
    """Background plus positives must stay consistent and entail no negative test."""
    kb = list(dpi.background) + list(dpi.positive) + list(acquired.positive)
    if not is_consistent(kb):
        raise DpiValidationError("background and positive tests are inconsistent")
    for n in negative_tests(dpi, acquired):
        if entails(kb, n):
            raise DpiValidationError(
                f"background and positive tests entail negative test {to_text(n)}"
            )


def validate_dpi(dpi: DPI) -> None:
    validate_acquired(dpi, EMPTY_ACQUIRED)


def has_fault(dpi: DPI, acquired: Acquired = EMPTY_ACQUIRED) -> bool:
    """True iff the empty set is not a diagnosis, i.e. something needs repair."""
    return not is_diagnosis(dpi, acquired, frozenset())


# ---------------------------------------------------------------------------
# Brute-force oracles (test ground truth, exhaustive subset enumeration)
# ---------------------------------------------------------------------------

DEFAULT_BRUTE_FORCE_CAP = 12


def _minimal_sets(n: int, predicate, monotone_up: bool) -> set[ComponentSet]:
    """Subset-minimal witnesses of `predicate` over subsets of 1..n, enumerated
    in cardinality order. `monotone_up` lets supersets of hits be skipped."""
    found: list[ComponentSet] = []
    for r in range(0, n + 1):
        for combo in itertools.combinations(range(1, n + 1), r):
            s = frozenset(combo)
            if monotone_up and any(m <= s for m in found):
                continue
            if predicate(s):
                found.append(s)
    return set(found)


def brute_force_minimal_diagnoses(dpi: DPI, acquired: Acquired = EMPTY_ACQUIRED,
                                  cap: int = DEFAULT_BRUTE_FORCE_CAP) -> set[ComponentSet]:
    n = len(dpi.axioms)
    if n > cap:
        raise BruteForceCapError(f"{n} axioms exceeds brute-force cap {cap}")
    return _minimal_sets(n, lambda s: is_diagnosis(dpi, acquired, s), monotone_up=True)


def brute_force_minimal_conflicts(dpi: DPI, acquired: Acquired = EMPTY_ACQUIRED,
                                  cap: int = DEFAULT_BRUTE_FORCE_CAP) -> set[ComponentSet]:
    n = len(dpi.axioms)
    if n > cap:
        raise BruteForceCapError(f"{n} axioms exceeds brute-force cap {cap}")
    return _minimal_sets(n, lambda s: is_conflict(dpi, acquired, s), monotone_up=True)


# ---------------------------------------------------------------------------
# Rendering and the DPI file format
# ---------------------------------------------------------------------------

def format_component_set(ids: Collection[int], kind: str = "diagnosis") -> str:
    body = ", ".join(f"a{i}" for i in sorted(ids))
    if kind == "conflict":
        return f"<{body}>"
    return f"[{body}]"


_SECTION_RE = re.compile(r"^\[(O|B|P|N)\]$")
_AXIOM_LINE_RE = re.compile(r"^a(\d+)\s*:\s*(.*)$")


def parse_dpi(text: str) -> DPI:
    """Parse the sectioned DPI file format: [O] with `a<i>: formula` lines in
    order, then [B], [P], [N] with one formula per line."""
    sections: dict[str, list[tuple[int, str]]] = {"O": [], "B": [], "P": [], "N": []}
    current: str | None = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1)
            continue
        if current is None:
            raise DpiFormatError(f"line {lineno}: content before any section header")
        sections[current].append((lineno, line))

    axioms: list[Formula] = []
    for expected, (lineno, line) in enumerate(sections["O"], start=1):
        m = _AXIOM_LINE_RE.match(line)
        if not m:
            raise DpiFormatError(f"line {lineno}: expected 'a{expected}: formula'")
        if int(m.group(1)) != expected:
            raise DpiFormatError(
                f"line {lineno}: axiom id a{m.group(1)} out of order (expected a{expected})"
            )
        axioms.append(_parse_line(m.group(2), lineno))
    if not axioms:
        raise DpiFormatError("no axioms in [O] section")

    def parse_section(name: str) -> tuple[Formula, ...]:
        out: list[Formula] = []
        for lineno, line in sections[name]:
            f = _parse_line(line, lineno)
            if f not in out:
                out.append(f)
        return tuple(out)

    return DPI(
        axioms=tuple(axioms),
        background=parse_section("B"),
        positive=parse_section("P"),
        negative=parse_section("N"),
    )


def _parse_line(text: str, lineno: int) -> Formula:
    try:
        return parse_formula(text, line_offset=lineno - 1)
    except ParseError:
        raise


def format_dpi(dpi: DPI) -> str:
    lines = ["[O]"]
    lines += [f"a{i}: {to_text(ax)}" for i, ax in enumerate(dpi.axioms, start=1)]
    for header, formulas in (("B", dpi.background), ("P", dpi.positive), ("N", dpi.negative)):
        lines.append(f"[{header}]")
        lines += [to_text(f) for f in formulas]
    return "\n".join(lines) + "\n"


def load_dpi(path) -> DPI:
    from pathlib import Path

    return parse_dpi(Path(path).read_text(encoding="utf-8"))
