"""Stateless best-first construction of the minimal-hitting-set tree.

A tree is built from scratch per invocation: nodes are identified with their
edge-label sets, conflicts found along the way are cached only for the current
run, and labeling applies the four rules in order: close supersets of known
diagnoses, close duplicates, reuse a disjoint cached conflict, or ask the
conflict searcher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .conflicts import ConflictFinder, Counters, find_min_conflict
from .dpi import DPI, Acquired, ComponentSet
from .ordering import QueueOrder, RankedQueue, validate_probabilities

LABEL_VALID = "valid"
LABEL_CLOSED = "closed"
LABEL_CONFLICT = "conflict"

REASON_SUPERSET = "superset"
REASON_DUPLICATE = "duplicate"
REASON_REUSED = "reused"
REASON_FRESH = "fresh"


@dataclass(frozen=True)
class TraceEntry:
    """One labeling event, in chronological order."""

    node: tuple[int, ...]
    label: str
    conflict: tuple[int, ...] | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "node": list(self.node),
            "label": self.label,
            "conflict": None if self.conflict is None else list(self.conflict),
            "reason": self.reason,
        }


def label_node(node: ComponentSet, c_calc: list[ComponentSet], d_calc: list[ComponentSet],
               labeled_sets: set[ComponentSet], dpi: DPI, acquired: Acquired,
               finder: ConflictFinder, counters: Counters | None = None,
               ) -> tuple[str, ComponentSet | None, str]:
    """Apply the labeling rules in order; returns (label, conflict, reason)."""
    if any(node >= d for d in d_calc):
        return LABEL_CLOSED, None, REASON_SUPERSET
    if node in labeled_sets:
        return LABEL_CLOSED, None, REASON_DUPLICATE
    for c in c_calc:
        if c.isdisjoint(node):
            return LABEL_CONFLICT, c, REASON_REUSED
    conflict = find_min_conflict(finder, dpi.indices() - node, dpi, acquired, counters)
    if conflict is None:
        return LABEL_VALID, None, REASON_FRESH
    return LABEL_CONFLICT, conflict, REASON_FRESH


def expand_node(node: ComponentSet, conflict: ComponentSet,
                queue: RankedQueue[ComponentSet]) -> None:
    """One child per conflict element, in ascending order, inserted sorted."""
    for e in sorted(conflict):
        queue.insert(node | {e})


def run_hs_tree(dpi: DPI, acquired: Acquired, *, finder: ConflictFinder,
                counters: Counters | None = None, ld: float = math.inf,
                order: QueueOrder = QueueOrder.BFS,
                pr: Mapping[int, float] | None = None,
                trace: list[TraceEntry] | None = None) -> list[ComponentSet]:
    """The `ld` most preferred minimal diagnoses (all of them if fewer exist),
    in emission order. Every invocation starts from a fresh root and an empty
    conflict cache."""
    if order is QueueOrder.PROB:
        validate_probabilities(pr or {}, dpi.indices())
    queue: RankedQueue[ComponentSet] = RankedQueue(lambda s: s, order, pr, dpi.indices())
    queue.insert(frozenset())
    c_calc: list[ComponentSet] = []
    d_calc: list[ComponentSet] = []
    labeled_sets: set[ComponentSet] = set()

    while queue and len(d_calc) < ld:
        node = queue.pop_first()
        label, conflict, reason = label_node(
            node, c_calc, d_calc, labeled_sets, dpi, acquired, finder, counters)
        if trace is not None:
            trace.append(TraceEntry(
                node=tuple(sorted(node)),
                label=label,
                conflict=None if conflict is None else tuple(sorted(conflict)),
                reason=reason,
            ))
        if label == LABEL_CLOSED:
            continue
        labeled_sets.add(node)
        if label == LABEL_VALID:
            d_calc.append(node)
            continue
        assert conflict is not None
        if reason == REASON_FRESH:
            c_calc.append(conflict)
        expand_node(node, conflict, queue)

    return d_calc
