"""Stateful minimal-hitting-set search that survives problem changes.

Instead of rebuilding the tree after every measurement, the search keeps its
open queue, a queue of set-equal duplicates, the non-minimal diagnoses seen so
far, and all computed conflicts. A tree-update step run at the start of each
invocation re-validates what the previous answers left behind: invalidated
diagnoses are tested for redundancy, stale conflict labels are shrunk in
place, redundant branches are pruned (with duplicates promoted as
replacements), and still-valid diagnoses are re-queued so they can be
re-emitted without reasoner calls.

Conflict labels along a branch may stay temporarily non-minimal (lazy
updating); that costs a few extra non-minimal leaves but never soundness.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .conflicts import ConflictFinder, Counters, find_min_conflict
from .dpi import DPI, Acquired, ComponentSet
from .hstree import TraceEntry
from .ordering import QueueOrder, RankedQueue, validate_probabilities


class DiagnosisSearchError(RuntimeError):
    pass


class StateInvariantError(AssertionError):
    pass


_DEBUG_CHECKS = False


def enable_debug_checks(enabled: bool = True) -> None:
    """Turn on invariant assertions after every state-changing operation."""
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = enabled


def is_debug_enabled() -> bool:
    return _DEBUG_CHECKS


class DynNode:
    """A branch: the ordered edge labels from the root plus, in parallel, the
    conflict that labeled each ancestor. Node identity is object identity;
    set-equality is explicit via `.members`."""

    __slots__ = ("edges", "cs", "members")

    def __init__(self, edges: Iterable[int], cs: Iterable[ComponentSet]):
        self.edges: tuple[int, ...] = tuple(edges)
        self.cs: list[ComponentSet] = [frozenset(c) for c in cs]
        self.members: ComponentSet = frozenset(self.edges)

    def child(self, edge: int, conflict: ComponentSet) -> "DynNode":
        return DynNode(self.edges + (edge,), self.cs + [conflict])

    def __repr__(self) -> str:
        return f"DynNode({list(self.edges)})"

    def to_dict(self) -> dict:
        return {"edges": list(self.edges), "cs": [sorted(c) for c in self.cs]}

    @classmethod
    def from_dict(cls, data: dict) -> "DynNode":
        return cls(data["edges"], [frozenset(c) for c in data["cs"]])


def make_root() -> DynNode:
    return DynNode((), ())


@dataclass(frozen=True)
class RedundancyWitness:
    """Position `j` whose labeling conflict shrank to `conflict`, bypassing the
    node's edge at that position."""

    position: int  # 0-based index into edges/cs
    conflict: ComponentSet


def _dup_key(nd: DynNode) -> tuple:
    return (len(nd.edges), tuple(sorted(nd.edges)))


class SearchState:
    """Everything carried across invocations: the open queue, stored set-equal
    duplicates (sorted by cardinality), known non-minimal diagnoses, and the
    conflicts computed so far."""

    def __init__(self, dpi: DPI, order: QueueOrder = QueueOrder.BFS,
                 pr: Mapping[int, float] | None = None):
        self.order = order
        self.pr = pr
        self.queue: RankedQueue[DynNode] = RankedQueue(
            lambda nd: nd.members, order, pr, dpi.indices())
        self.dup_queue: list[DynNode] = []
        self.non_minimal: list[DynNode] = []
        self.conflicts: list[ComponentSet] = []
        # conflicts already proven minimal for the problem currently being
        # solved; reset on every invocation (measurements invalidate it)
        self.verified_minimal: set[ComponentSet] = set()

    def insert_dup(self, nd: DynNode) -> None:
        bisect.insort_right(self.dup_queue, nd, key=_dup_key)

    def to_dict(self) -> dict:
        return {
            "queue": [nd.to_dict() for nd in self.queue],
            "dup_queue": [nd.to_dict() for nd in self.dup_queue],
            "non_minimal": [nd.to_dict() for nd in self.non_minimal],
            "conflicts": [sorted(c) for c in self.conflicts],
        }

    @classmethod
    def from_dict(cls, data: dict, dpi: DPI, order: QueueOrder = QueueOrder.BFS,
                  pr: Mapping[int, float] | None = None) -> "SearchState":
        state = cls(dpi, order, pr)
        for item in data["queue"]:
            state.queue.insert(DynNode.from_dict(item))
        for item in data["dup_queue"]:
            state.insert_dup(DynNode.from_dict(item))
        state.non_minimal = [DynNode.from_dict(item) for item in data["non_minimal"]]
        state.conflicts = [frozenset(c) for c in data["conflicts"]]
        return state


def initial_state(dpi: DPI, order: QueueOrder = QueueOrder.BFS,
                  pr: Mapping[int, float] | None = None) -> SearchState:
    state = SearchState(dpi, order, pr)
    state.queue.insert(make_root())
    return state


# ---------------------------------------------------------------------------
# Redundancy and pruning
# ---------------------------------------------------------------------------

def redundant(nd: DynNode, dpi: DPI, acquired: Acquired, finder: ConflictFinder,
              counters: Counters | None = None,
              verified: set[ComponentSet] | None = None) -> RedundancyWitness | None:
    """Re-derive a minimal conflict inside each labeling conflict along the
    branch; the first position whose conflict shrank past this node's edge
    yields the witness. Counted as one redundancy check; the nested finder
    calls are part of it. Conflicts in `verified` are known minimal for the
    current problem and skipped."""
    if counters is not None:
        counters.rd += 1
    for j, c in enumerate(nd.cs):
        if verified is not None and c in verified:
            continue  # still minimal, cannot witness anything
        x = finder.find(c, dpi, acquired)
        if x is None:
            raise DiagnosisSearchError(
                f"stored conflict {sorted(c)} is no longer a conflict; "
                "measurements can only shrink conflicts")
        if x < c and nd.edges[j] in c - x:
            return RedundancyWitness(j, x)
        if verified is not None and x == c:
            verified.add(c)
    return None


def _witness_position(nd: DynNode, x: ComponentSet) -> int | None:
    for j, c in enumerate(nd.cs):
        if c > x and nd.edges[j] not in x:
            return j
    return None


def _witnessed_by(nd: DynNode, x: ComponentSet) -> bool:
    return _witness_position(nd, x) is not None


def _relabel(nd: DynNode, x: ComponentSet) -> None:
    for i, c in enumerate(nd.cs):
        if c > x:
            nd.cs[i] = x


def _take_replacement(state: SearchState, members: ComponentSet) -> DynNode | None:
    """First stored duplicate set-equal to the deleted node, smallest first;
    the duplicate queue has already been cleansed, so survivors are usable."""
    for i, nd in enumerate(state.dup_queue):
        if nd.members == members:
            return state.dup_queue.pop(i)
    return None


def _deleted_subtree_sets(nd: DynNode, position: int, out: set[ComponentSet]) -> None:
    """Every tree node removed along with `nd` when the witness sits at
    `position`: all branch prefixes that extend past the witnessed edge."""
    for k in range(position + 1, len(nd.edges) + 1):
        out.add(frozenset(nd.edges[:k]))


def prune(x: ComponentSet, state: SearchState,
          extra_collections: Sequence[list[DynNode]] = (),
          counters: Counters | None = None) -> None:
    """Apply a freshly shrunk minimal conflict `x` across the whole tree:
    relabel stale superset conflicts, delete nodes `x` proves redundant, and
    fold `x` into the conflict cache. Deleted nodes, including the interior
    nodes of removed subtrees, are replaced by set-equal stored duplicates
    when available; duplicates are pruned before everything else so the
    survivors are valid replacement candidates."""
    deleted_sets: set[ComponentSet] = set()

    survivors: list[DynNode] = []
    for nd in state.dup_queue:
        position = _witness_position(nd, x)
        if position is None:
            _relabel(nd, x)
            survivors.append(nd)
        else:
            _deleted_subtree_sets(nd, position, deleted_sets)
    state.dup_queue = survivors

    for nd in list(state.queue):
        position = _witness_position(nd, x)
        if position is None:
            _relabel(nd, x)
        else:
            state.queue.remove(nd)
            _deleted_subtree_sets(nd, position, deleted_sets)
            replacement = _take_replacement(state, nd.members)
            if replacement is not None:
                state.queue.insert(replacement)

    for collection in (state.non_minimal, *extra_collections):
        for i in range(len(collection) - 1, -1, -1):
            nd = collection[i]
            position = _witness_position(nd, x)
            if position is None:
                _relabel(nd, x)
                continue
            _deleted_subtree_sets(nd, position, deleted_sets)
            replacement = _take_replacement(state, nd.members)
            if replacement is None:
                del collection[i]
            else:
                collection[i] = replacement

    _reactivate_orphaned_duplicates(state, deleted_sets, extra_collections)

    state.conflicts = [c for c in state.conflicts if not c > x]
    if x not in state.conflicts:
        state.conflicts.append(x)
    state.verified_minimal.add(x)

    if _DEBUG_CHECKS:
        _assert_post_prune(x, state, extra_collections)


def _reactivate_orphaned_duplicates(state: SearchState, deleted_sets: set[ComponentSet],
                                    extra_collections: Sequence[list[DynNode]]) -> None:
    """A removed subtree may have been the only active representative of some
    edge-label sets whose set-equal twins sit in the duplicate store. Those
    twins become unlabeled open nodes again, otherwise the search could no
    longer reach diagnoses that only grow out of the removed region."""
    if not deleted_sets or not state.dup_queue:
        return

    def represented(members: ComponentSet) -> bool:
        if state.queue.contains_set(members):
            return True
        for collection in (state.non_minimal, *extra_collections):
            if any(nd.members == members for nd in collection):
                return True
        return False

    for members in sorted(deleted_sets, key=lambda s: (len(s), tuple(sorted(s)))):
        if represented(members):
            continue
        replacement = _take_replacement(state, members)
        if replacement is not None:
            state.queue.insert(replacement)


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------

LABEL_VALID = "valid"
LABEL_NONMIN = "nonmin"
LABEL_CONFLICT = "conflict"


def d_label(dpi: DPI, acquired: Acquired, node: DynNode, d_calc: list[DynNode],
            state: SearchState, finder: ConflictFinder,
            counters: Counters | None = None) -> tuple[str, ComponentSet | None, str]:
    """Label one node: close proper supersets of already-found diagnoses, then
    try to reuse a cached disjoint conflict (re-checking its minimality and
    pruning on shrinkage), then fall back to a fresh conflict search."""
    for d in d_calc:
        if node.members > d.members:
            return LABEL_NONMIN, None, "superset"
    for c in state.conflicts:
        if c.isdisjoint(node.members):
            if c in state.verified_minimal:
                return LABEL_CONFLICT, c, "reused"  # identical re-check elided
            x = find_min_conflict(finder, c, dpi, acquired, counters)
            if x is None:
                raise DiagnosisSearchError(
                    f"cached conflict {sorted(c)} is no longer a conflict")
            if x == c:
                state.verified_minimal.add(c)
                return LABEL_CONFLICT, c, "reused"
            prune(x, state, extra_collections=[d_calc], counters=counters)
            return LABEL_CONFLICT, x, "reduced"
    conflict = find_min_conflict(finder, dpi.indices() - node.members, dpi, acquired, counters)
    if conflict is None:
        return LABEL_VALID, None, "fresh"
    state.conflicts.append(conflict)
    state.verified_minimal.add(conflict)
    return LABEL_CONFLICT, conflict, "fresh"


# ---------------------------------------------------------------------------
# Tree update between invocations
# ---------------------------------------------------------------------------

def _requeue(state: SearchState, nd: DynNode, prefer_active: bool = False) -> None:
    """Move a stored node back into the open queue. If a set-equal node is
    already queued the incoming node is stored as a duplicate instead, except
    that known diagnoses displace the queued twin (keeping their free
    re-validation)."""
    if state.queue.contains_set(nd.members):
        if prefer_active:
            twin = state.queue.find_by_set(nd.members)
            assert twin is not None
            state.queue.remove(twin)
            state.insert_dup(twin)
            state.queue.insert(nd)
        else:
            state.insert_dup(nd)
    else:
        state.queue.insert(nd)


def update_tree(dpi: DPI, acquired: Acquired, state: SearchState,
                d_check: list[DynNode], d_times: list[DynNode],
                finder: ConflictFinder, counters: Counters | None = None) -> None:
    """Adapt the stored tree to the measurement-extended problem: prune what
    the invalidated diagnoses prove redundant, return the survivors and the
    no-longer-non-minimal nodes to the queue, and re-queue the still-valid
    diagnoses so the best-first order is preserved."""
    for nd in list(d_times):
        if nd not in d_times:
            continue  # removed by an earlier prune in this update
        witness = redundant(nd, dpi, acquired, finder, counters,
                            verified=state.verified_minimal)
        if witness is not None:
            prune(witness.conflict, state,
                  extra_collections=[d_times, d_check], counters=counters)
    for nd in list(d_times):
        _requeue(state, nd)
        d_times.remove(nd)
    for nd in list(state.non_minimal):
        if not any(nd.members > dc.members for dc in d_check):
            state.non_minimal.remove(nd)
            _requeue(state, nd)
    for nd in d_check:
        _requeue(state, nd, prefer_active=True)

    if _DEBUG_CHECKS:
        check_state_invariants(state, d_check=d_check, d_times=d_times)


# ---------------------------------------------------------------------------
# Main search
# ---------------------------------------------------------------------------

def dynamic_hs(dpi: DPI, acquired: Acquired, state: SearchState, *,
               finder: ConflictFinder, counters: Counters | None = None,
               d_check: Sequence[DynNode] = (), d_times: Sequence[DynNode] = (),
               ld: float = math.inf,
               trace: list[TraceEntry] | None = None) -> list[DynNode]:
    """One invocation of the stateful search: update the stored tree for the
    current measurements, then emit the `ld` most preferred minimal diagnoses.
    Mutates `state`, which must be the state returned by the previous
    invocation (or `initial_state`)."""
    if state.order is QueueOrder.PROB:
        validate_probabilities(state.pr or {}, dpi.indices())
    d_check = list(d_check)
    d_times = list(d_times)
    d_calc: list[DynNode] = []
    state.verified_minimal = set()  # the extended problem voids prior checks
    update_tree(dpi, acquired, state, d_check, d_times, finder, counters)

    while state.queue and len(d_calc) < ld:
        node = state.queue.pop_first()
        if any(node is known for known in d_check):
            label, conflict, reason = LABEL_VALID, None, "known"
        else:
            label, conflict, reason = d_label(
                dpi, acquired, node, d_calc, state, finder, counters)
        if trace is not None:
            trace.append(TraceEntry(
                node=tuple(node.edges),
                label=label,
                conflict=None if conflict is None else tuple(sorted(conflict)),
                reason=reason,
            ))
        if label == LABEL_VALID:
            d_calc.append(node)
        elif label == LABEL_NONMIN:
            state.non_minimal.append(node)
        else:
            assert conflict is not None
            for e in sorted(conflict):
                child = node.child(e, conflict)
                if state.queue.contains_set(child.members):
                    state.insert_dup(child)
                    if trace is not None:
                        trace.append(TraceEntry(
                            node=tuple(child.edges), label="dup", reason="generated"))
                else:
                    state.queue.insert(child)

    if _DEBUG_CHECKS:
        check_state_invariants(state, d_calc=d_calc, d_check=d_check, d_times=d_times)
    return d_calc


# ---------------------------------------------------------------------------
# Invariant assertions (enabled in property runs)
# ---------------------------------------------------------------------------

def check_node_invariants(nd: DynNode) -> None:
    if len(nd.cs) != len(nd.edges):
        raise StateInvariantError(f"{nd!r}: |cs| != |edges|")
    for i, (e, c) in enumerate(zip(nd.edges, nd.cs)):
        if e not in c:
            raise StateInvariantError(f"{nd!r}: edge {e} not in its conflict {sorted(c)}")
        if c & frozenset(nd.edges[:i]):
            raise StateInvariantError(
                f"{nd!r}: conflict {sorted(c)} at position {i} hit by an earlier edge")


def _all_nodes(state: SearchState, **collections: Sequence[DynNode] | None):
    for nd in state.queue:
        yield "queue", nd
    for nd in state.dup_queue:
        yield "dup_queue", nd
    for nd in state.non_minimal:
        yield "non_minimal", nd
    for name, coll in collections.items():
        for nd in coll or ():
            yield name, nd


def check_state_invariants(state: SearchState, d_calc: Sequence[DynNode] | None = None,
                           d_check: Sequence[DynNode] | None = None,
                           d_times: Sequence[DynNode] | None = None) -> None:
    for where, nd in _all_nodes(state, d_calc=d_calc, d_check=d_check, d_times=d_times):
        check_node_invariants(nd)
    seen: set[ComponentSet] = set()
    for nd in state.queue:
        if nd.members in seen:
            raise StateInvariantError(f"queue holds two set-equal nodes {sorted(nd.members)}")
        seen.add(nd.members)


def _assert_post_prune(x: ComponentSet, state: SearchState,
                       extra_collections: Sequence[list[DynNode]]) -> None:
    for where, nd in _all_nodes(state):
        if _witnessed_by(nd, x):
            raise StateInvariantError(
                f"{where} still holds a node witnessed redundant by {sorted(x)}")
    for collection in extra_collections:
        for nd in collection:
            if _witnessed_by(nd, x):
                raise StateInvariantError(
                    f"call-site collection still holds a node witnessed by {sorted(x)}")
    if x not in state.conflicts:
        raise StateInvariantError("pruning conflict missing from the conflict cache")
    if any(c > x for c in state.conflicts):
        raise StateInvariantError("conflict cache still holds a superset of the pruning conflict")
    check_state_invariants(state)
