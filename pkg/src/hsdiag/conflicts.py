"""Minimal-conflict computation: a QuickXPlain-style divide-and-conquer
searcher over the reasoner, plus a scripted finder for deterministic
reproduction of recorded scenarios, behind one interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .dpi import DPI, Acquired, ComponentSet, is_conflict
from .logic import Formula, entails, is_consistent, parse_formula


class ConflictFinderError(RuntimeError):
    pass


class ConflictScriptError(ConflictFinderError):
    pass


@dataclass
class Counters:
    """The expensive-operation ledger shared by both search engines.

    fc:          tree-internal minimal-conflict computations that found a conflict
    rd:          redundancy checks (their nested finder calls are not re-charged)
    cc_tree:     tree-internal finder calls that degenerated to a consistency check
    cc_session:  diagnosis validity checks done when splitting results after a
                 measurement; reported separately from the in-tree counters
    """

    fc: int = 0
    rd: int = 0
    cc_tree: int = 0
    cc_session: int = 0
    tree_finder_calls: int = 0

    def snapshot(self) -> dict[str, int]:
        return {
            "fc": self.fc,
            "rd": self.rd,
            "cc_tree": self.cc_tree,
            "cc_session": self.cc_session,
        }


class ConflictFinder(Protocol):
    def find(self, universe: ComponentSet, dpi: DPI, acquired: Acquired) -> ComponentSet | None:
        """A minimal conflict within `universe` for the extended DPI, or None."""
        ...


def find_min_conflict(finder: ConflictFinder, universe: ComponentSet, dpi: DPI,
                      acquired: Acquired, counters: Counters | None = None) -> ComponentSet | None:
    """Tree-internal finder invocation: a returned conflict charges fc, a
    'no conflict' answer charges cc_tree."""
    result = finder.find(universe, dpi, acquired)
    if counters is not None:
        counters.tree_finder_calls += 1
        if result is None:
            counters.cc_tree += 1
        else:
            counters.fc += 1
    return result


# ---------------------------------------------------------------------------
# QuickXPlain
# ---------------------------------------------------------------------------

def _quickxplain_core(items: Sequence, violating: Callable[[list], bool]) -> list | None:
    """Preferred minimal violating sublist of `items` (earlier items preferred),
    or None when the full list does not violate."""
    items = list(items)
    if violating([]):
        raise ConflictFinderError("background alone already violates the tests")
    if not items or not violating(items):
        return None

    def qx(base: list, delta_nonempty: bool, cands: list) -> list:
        if delta_nonempty and violating(base):
            return []
        if len(cands) == 1:
            return list(cands)
        half = len(cands) // 2
        c1, c2 = cands[:half], cands[half:]
        d2 = qx(base + c1, bool(c1), c2)
        d1 = qx(base + d2, bool(d2), c1)
        return d1 + d2

    return qx([], False, items)


def quickxplain(background: Sequence[Formula], candidates: Sequence[Formula],
                negatives: Sequence[Formula]) -> list[Formula] | None:
    """Subset-minimal prefix-preferred subset of `candidates` whose addition to
    `background` is inconsistent or entails one of `negatives`."""
    background = list(background)
    negatives = list(negatives)

    def violating(subset: list) -> bool:
        kb = background + subset
        if not is_consistent(kb):
            return True
        return any(entails(kb, n) for n in negatives)

    return _quickxplain_core(list(candidates), violating)


class QuickXplainFinder:
    """Deterministic minimal-conflict searcher; candidates are always tried in
    ascending axiom-index order."""

    def find(self, universe: ComponentSet, dpi: DPI, acquired: Acquired) -> ComponentSet | None:
        indices = sorted(universe)
        base = list(dpi.background) + list(dpi.positive) + list(acquired.positive)
        negatives = list(dpi.negative) + list(acquired.negative)

        def violating(subset: list) -> bool:
            kb = base + [dpi.axiom(i) for i in subset]
            if not is_consistent(kb):
                return True
            return any(entails(kb, n) for n in negatives)

        result = _quickxplain_core(indices, violating)
        return None if result is None else frozenset(result)


# ---------------------------------------------------------------------------
# Scripted finder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConflictScriptEntry:
    universe: ComponentSet
    p_prime: frozenset[Formula]
    n_prime: frozenset[Formula]
    result: ComponentSet | None  # None encodes "none" (no conflict)


class ScriptedConflictFinder:
    """Replays conflicts from an ordered script keyed by (universe, acquired
    measurements); every scripted conflict is validated as a minimal conflict
    for the DPI at hand before it is returned. Calls not covered by the script
    fall through to `fallback`."""

    def __init__(self, entries: Sequence[ConflictScriptEntry],
                 fallback: ConflictFinder | None = None, validate: bool = True):
        self.entries = list(entries)
        self.fallback = fallback if fallback is not None else QuickXplainFinder()
        self.validate = validate

    @classmethod
    def from_json(cls, text: str, **kwargs) -> "ScriptedConflictFinder":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConflictScriptError(f"conflict script is not valid JSON: {exc}") from exc
        if not isinstance(raw, list):
            raise ConflictScriptError("conflict script must be a JSON list")
        entries = []
        for i, item in enumerate(raw):
            try:
                result_field = item["result"]
                result = None if result_field == "none" else frozenset(int(x) for x in result_field)
                entries.append(ConflictScriptEntry(
                    universe=frozenset(int(x) for x in item["universe"]),
                    p_prime=frozenset(parse_formula(s) for s in item.get("p_prime", [])),
                    n_prime=frozenset(parse_formula(s) for s in item.get("n_prime", [])),
                    result=result,
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConflictScriptError(f"bad conflict script entry {i}: {exc}") from exc
        return cls(entries, **kwargs)

    def find(self, universe: ComponentSet, dpi: DPI, acquired: Acquired) -> ComponentSet | None:
        p_prime = frozenset(acquired.positive)
        n_prime = frozenset(acquired.negative)
        for entry in self.entries:
            if entry.universe == universe and entry.p_prime == p_prime and entry.n_prime == n_prime:
                if self.validate:
                    self._check(entry, universe, dpi, acquired)
                return entry.result
        return self.fallback.find(universe, dpi, acquired)

    def _check(self, entry: ConflictScriptEntry, universe: ComponentSet,
               dpi: DPI, acquired: Acquired) -> None:
        if entry.result is None:
            if is_conflict(dpi, acquired, universe):
                raise ConflictScriptError(
                    f"script answers 'none' but {sorted(universe)} contains a conflict"
                )
            return
        c = entry.result
        if not c <= universe:
            raise ConflictScriptError(f"scripted conflict {sorted(c)} outside universe {sorted(universe)}")
        if not is_conflict(dpi, acquired, c):
            raise ConflictScriptError(f"scripted set {sorted(c)} is not a conflict")
        for e in sorted(c):
            if is_conflict(dpi, acquired, c - {e}):
                raise ConflictScriptError(f"scripted conflict {sorted(c)} is not minimal")
