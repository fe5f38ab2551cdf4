from __future__ import annotations

import math
import random

import pytest

from hsdiag.conflicts import Counters, QuickXplainFinder
from hsdiag.dpi import (
    EMPTY_ACQUIRED,
    brute_force_minimal_conflicts,
    brute_force_minimal_diagnoses,
)
from hsdiag.dynamichs import (
    DynNode,
    SearchState,
    StateInvariantError,
    check_node_invariants,
    d_label,
    dynamic_hs,
    initial_state,
    make_root,
    prune,
    redundant,
    update_tree,
)
from hsdiag.ordering import QueueOrder, node_probability
from hsdiag.sequential import SessionConfig, SessionDriver

from helpers import (
    acquired,
    dynamic_all_diagnoses,
    planted_minimal_diagnosis,
    random_corpus,
    random_probabilities,
    run_engine_pair,
)


def _node(edges, cs):
    return DynNode(edges, [frozenset(c) for c in cs])


def _golden_driver(example_dpi, example_finder, example_measurements, ld=5):
    config = SessionConfig(engine="dynamic", ld=ld,
                           question_script=tuple(m.sentence for m in example_measurements))
    return SessionDriver(example_dpi, config, finder=example_finder)


# ---------------------------------------------------------------------------
# Recorded scenario: diagnoses, traces, and full state after every iteration
# ---------------------------------------------------------------------------

def test_golden_session_states(example_dpi, example_finder, example_measurements):
    driver = _golden_driver(example_dpi, example_finder, example_measurements)
    driver.advance()
    for m in example_measurements:
        driver.submit(m.outcome)
    assert driver.status == "done"
    assert sorted(driver.final) == [1, 4]

    recs = driver.records
    assert [rec.diagnoses for rec in recs] == [
        [[1, 3], [1, 4], [2, 3], [2, 5]],
        [[1, 4], [2, 5]],
        [[1, 4], [1, 2, 3, 5]],
        [[1, 4]],
    ]

    snaps = [rec.state_snapshot for rec in recs]
    assert snaps[0]["queue"] == []
    assert snaps[0]["dup_queue"] == [
        {"edges": [2, 1], "cs": [[1, 2], [1, 3, 5]]}]
    assert [n["edges"] for n in snaps[0]["non_minimal"]] == [[1, 2, 3], [1, 2, 4], [1, 2, 5]]
    assert snaps[0]["conflicts"] == [[1, 2], [2, 3, 4], [1, 3, 5], [3, 4, 5]]

    # measurement one: two branches pruned via shrunk conflicts, duplicate kept
    assert snaps[1]["dup_queue"] == [
        {"edges": [2, 1], "cs": [[1, 2], [1, 5]]}]
    assert [n["edges"] for n in snaps[1]["non_minimal"]] == \
        [[1, 2, 4], [1, 2, 5], [1, 2, 3, 4], [1, 2, 3, 5]]
    assert snaps[1]["conflicts"] == [[1, 2], [3, 4, 5], [2, 4], [1, 5], [4, 5]]

    # measurement two: the whole右 subtree disappears, new duplicate parked
    assert [n["edges"] for n in snaps[2]["dup_queue"]] == [[1, 2, 5, 3]]
    assert [n["edges"] for n in snaps[2]["non_minimal"]] == \
        [[1, 2, 4], [1, 2, 3, 4], [1, 2, 5, 4]]
    assert snaps[2]["conflicts"] == [[3, 4, 5], [2, 4], [4, 5], [1], [3, 4]]

    # measurement three: only the confirmed branch is left
    assert snaps[3] == {"queue": [], "dup_queue": [], "non_minimal": [],
                        "conflicts": [[1], [4]]}


def test_golden_session_traces(example_dpi, example_finder, example_measurements):
    driver = _golden_driver(example_dpi, example_finder, example_measurements)
    driver.advance()
    for m in example_measurements:
        driver.submit(m.outcome)
    traces = [[(tuple(t["node"]), t["label"]) for t in rec.trace] for rec in driver.records]
    assert traces[0] == [
        ((), "conflict"), ((1,), "conflict"), ((2,), "conflict"),
        ((2, 1), "dup"),  # stored at generation time, not when popped
        ((1, 2), "conflict"),
        ((1, 3), "valid"), ((1, 4), "valid"), ((2, 3), "valid"), ((2, 5), "valid"),
        ((1, 2, 3), "nonmin"), ((1, 2, 4), "nonmin"), ((1, 2, 5), "nonmin"),
    ]
    assert traces[1] == [
        ((1, 4), "valid"), ((2, 5), "valid"),
        ((1, 2, 3), "conflict"),
        ((1, 2, 3, 4), "nonmin"), ((1, 2, 3, 5), "nonmin"),
    ]
    assert traces[2] == [
        ((1, 4), "valid"),
        ((1, 2, 5), "conflict"), ((1, 2, 5, 3), "dup"),
        ((1, 2, 3, 5), "valid"), ((1, 2, 5, 4), "nonmin"),
    ]
    assert traces[3] == [((1, 4), "valid")]
    # the still-valid diagnoses come back without reasoner work
    free = [t for rec in driver.records for t in rec.trace if t["reason"] == "known"]
    assert [tuple(t["node"]) for t in free] == [(1, 4), (2, 5), (1, 4), (1, 4)]


def test_golden_counters_per_iteration(example_dpi, example_finder, example_measurements):
    driver = _golden_driver(example_dpi, example_finder, example_measurements)
    driver.advance()
    for m in example_measurements:
        driver.submit(m.outcome)
    totals = [rec.counters for rec in driver.records]
    assert [t["fc"] for t in totals] == [4, 5, 6, 6]
    assert [t["rd"] for t in totals] == [0, 2, 3, 4]
    assert [t["cc_tree"] for t in totals] == [4, 4, 5, 5]


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------

def test_dlabel_nonminimal(example_dpi, example_finder):
    state = initial_state(example_dpi)
    node = _node((2, 3, 4), [[1, 2], [2, 3, 4], [3, 4, 5]])
    d_calc = [_node((2, 3), [[1, 2], [2, 3, 4]])]
    label, conflict, _ = d_label(example_dpi, EMPTY_ACQUIRED, node, d_calc,
                                 state, example_finder)
    assert (label, conflict) == ("nonmin", None)


def test_dlabel_valid(example_dpi, example_finder):
    state = initial_state(example_dpi)
    counters = Counters()
    node = _node((2, 5), [[1, 2], [1, 3, 5]])
    label, conflict, _ = d_label(example_dpi, EMPTY_ACQUIRED, node, [],
                                 state, example_finder, counters)
    assert (label, conflict) == ("valid", None)
    assert counters.cc_tree == 1


def test_dlabel_reuse_check_shrinks_and_prunes(example_dpi, example_finder):
    after_m1 = acquired(negative="A -> C")
    state = initial_state(example_dpi)
    state.conflicts = [frozenset({2, 3, 4})]
    counters = Counters()
    node = _node((1,), [[1, 2]])
    label, conflict, reason = d_label(example_dpi, after_m1, node, [],
                                      state, example_finder, counters)
    assert (label, conflict, reason) == ("conflict", {2, 4}, "reduced")
    assert frozenset({2, 3, 4}) not in state.conflicts
    assert frozenset({2, 4}) in state.conflicts
    assert counters.fc == 1


def test_dlabel_reuse_skips_recheck_once_verified(example_dpi, example_finder):
    state = initial_state(example_dpi)
    state.conflicts = [frozenset({3, 4, 5})]
    counters = Counters()
    node_a = _node((1,), [[1, 2]])
    first = d_label(example_dpi, EMPTY_ACQUIRED, node_a, [], state,
                    example_finder, counters)
    assert first == ("conflict", frozenset({3, 4, 5}), "reused")
    assert counters.fc == 1
    node_b = _node((2,), [[1, 2]])
    second = d_label(example_dpi, EMPTY_ACQUIRED, node_b, [], state,
                     example_finder, counters)
    assert second == ("conflict", frozenset({3, 4, 5}), "reused")
    assert counters.fc == 1  # the verified conflict is reused for free


# ---------------------------------------------------------------------------
# Redundancy testing
# ---------------------------------------------------------------------------

def test_redundant_finds_shrunk_conflict_witness(example_dpi):
    after_m1 = acquired(negative="A -> C")
    nd = _node((1, 3), [[1, 2], [2, 3, 4]])
    counters = Counters()
    witness = redundant(nd, example_dpi, after_m1, QuickXplainFinder(), counters)
    assert witness is not None
    assert (witness.position, witness.conflict) == (1, {2, 4})
    assert counters.rd == 1
    assert counters.fc == 0  # nested searcher calls ride on the rd charge


def test_redundant_witness_after_second_measurement(example_dpi):
    after_m2 = acquired(negative="A -> C; A -> !B")
    # the shrunken conflict is confirmed by the exhaustive oracle first
    restricted = {c for c in brute_force_minimal_conflicts(example_dpi, after_m2)
                  if c <= {1, 2}}
    assert restricted == {frozenset({1})}
    nd = _node((2, 5), [[1, 2], [1, 3, 5]])
    witness = redundant(nd, example_dpi, after_m2, QuickXplainFinder())
    assert witness is not None
    assert witness.position == 0
    assert witness.conflict == {1}
    assert nd.edges[0] in frozenset({1, 2}) - witness.conflict


def test_redundant_none_when_labels_still_minimal(example_dpi):
    after_m1 = acquired(negative="A -> C")
    nd = _node((1, 4), [[1, 2], [2, 4]])
    counters = Counters()
    assert redundant(nd, example_dpi, after_m1, QuickXplainFinder(), counters) is None
    assert counters.rd == 1


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------

def _iteration2_state(example_dpi, example_finder, example_measurements):
    """Search state after two invocations, with the second negative answer
    folded in but the third invocation not yet started."""
    driver = _golden_driver(example_dpi, example_finder, example_measurements)
    driver.advance()
    driver.submit(False)
    driver.apply_answer(False)
    return driver


def test_prune_shrunk_root_conflict_drops_right_subtree(
        example_dpi, example_finder, example_measurements):
    driver = _iteration2_state(example_dpi, example_finder, example_measurements)
    state = driver._state
    d_check = list(driver._d_check_nodes)
    d_times = list(driver._d_times_nodes)
    assert [sorted(nd.members) for nd in d_times] == [[2, 5]]
    prune(frozenset({1}), state, extra_collections=[d_times, d_check])
    # every node through the second root edge is gone, duplicates first
    assert state.dup_queue == []
    assert d_times == []
    assert all(nd.edges[0] == 1 for nd in state.non_minimal)
    # the surviving-branch labels now carry the shrunk root conflict
    assert all(nd.cs[0] == {1} for nd in state.non_minimal)
    assert [sorted(nd.members) for nd in d_check] == [[1, 4]]
    assert d_check[0].cs[0] == {1}
    assert frozenset({1}) in state.conflicts
    assert frozenset({1, 2}) not in state.conflicts


def test_prune_relabels_and_deletes_along_witnessed_edge(
        example_dpi, example_finder, example_measurements):
    driver = _golden_driver(example_dpi, example_finder, example_measurements)
    driver.advance()
    state = driver._state
    d_check = [nd for nd in driver._last_nodes if sorted(nd.members) in ([1, 4], [2, 5])]
    d_times = [nd for nd in driver._last_nodes if sorted(nd.members) in ([1, 3], [2, 3])]
    prune(frozenset({2, 4}), state, extra_collections=[d_times, d_check])
    assert [sorted(nd.members) for nd in d_times] == [[2, 3]]  # [1,3] deleted
    relabeled = [nd for nd in state.non_minimal if nd.edges[:2] == (1, 2)]
    assert relabeled and all(nd.cs[1] == {2, 4} for nd in relabeled)
    assert frozenset({2, 3, 4}) not in state.conflicts
    assert frozenset({2, 4}) in state.conflicts


def test_prune_without_matches_only_updates_conflict_cache(example_dpi):
    state = initial_state(example_dpi)
    state.conflicts = [frozenset({1, 2}), frozenset({3, 4, 5})]
    prune(frozenset({3, 4}), state)
    assert state.conflicts == [frozenset({1, 2}), frozenset({3, 4})]
    assert len(state.queue) == 1  # untouched root


def test_prune_replaces_deleted_node_with_stored_duplicate(example_dpi):
    state = initial_state(example_dpi)
    state.queue.pop_first()  # discard the root for this крафted scenario
    doomed = _node((1, 2), [[1, 3], [2, 4]])
    twin = _node((2, 1), [[2, 4], [1, 5]])
    state.queue.insert(doomed)
    state.insert_dup(twin)
    prune(frozenset({3}), state)
    assert list(state.queue) == [twin]
    assert state.dup_queue == []


def test_prune_reactivates_duplicates_orphaned_by_subtree_removal(example_dpi):
    state = initial_state(example_dpi)
    state.queue.pop_first()
    leaf = _node((1, 2, 3), [[1, 4], [2, 5], [3, 5]])
    parked = _node((2, 1), [[2, 5], [1, 5]])  # set-equal to the deleted prefix [1, 2]
    state.queue.insert(leaf)
    state.insert_dup(parked)
    prune(frozenset({4}), state)
    # the leaf died with its whole branch; the parked twin of the interior
    # node [1, 2] is the only remaining access to that region
    assert list(state.queue) == [parked]
    assert state.dup_queue == []


# ---------------------------------------------------------------------------
# Tree update
# ---------------------------------------------------------------------------

def test_update_tree_requeues_everything_without_measurement_change(
        example_dpi, example_finder):
    state = initial_state(example_dpi)
    counters = Counters()
    first = dynamic_hs(example_dpi, EMPTY_ACQUIRED, state, finder=example_finder,
                       counters=counters, ld=5)
    assert len(first) == 4
    snapshot = state.to_dict()
    again = dynamic_hs(example_dpi, EMPTY_ACQUIRED, state, finder=example_finder,
                       counters=counters, d_check=first, d_times=[], ld=5)
    assert [nd.members for nd in again] == [nd.members for nd in first]
    # re-emission is free and the stored collections are unchanged
    assert counters.fc == 4 and counters.cc_tree == 4
    assert state.to_dict() == snapshot


def test_update_tree_diverts_set_equal_reinsertions(example_dpi, example_finder):
    state = initial_state(example_dpi)
    state.queue.pop_first()
    leftover = _node((2, 1), [[1, 2], [1, 3, 5]])
    state.queue.insert(leftover)
    comeback = _node((1, 2), [[1, 2], [2, 3, 4]])
    update_tree(example_dpi, EMPTY_ACQUIRED, state, d_check=[],
                d_times=[comeback], finder=example_finder)
    # the queue keeps one representative per set; the comeback parks as duplicate
    assert state.queue.contains_set(frozenset({1, 2}))
    assert len(state.queue) == 1
    assert comeback in state.dup_queue


def test_update_tree_prefers_known_diagnoses_over_queued_twins(
        example_dpi, example_finder):
    state = initial_state(example_dpi)
    state.queue.pop_first()
    leftover = _node((3, 1), [[2, 3], [1, 2]])
    state.queue.insert(leftover)
    known = _node((1, 3), [[1, 2], [2, 3, 4]])
    update_tree(example_dpi, EMPTY_ACQUIRED, state, d_check=[known],
                d_times=[], finder=example_finder)
    assert list(state.queue) == [known]  # keeps its free re-validation
    assert state.dup_queue == [leftover]


# ---------------------------------------------------------------------------
# Structural invariants and serialization
# ---------------------------------------------------------------------------

def test_node_invariant_checks_reject_malformed_nodes():
    with pytest.raises(StateInvariantError):
        check_node_invariants(_node((1,), []))
    with pytest.raises(StateInvariantError):
        check_node_invariants(_node((1,), [[2, 3]]))
    with pytest.raises(StateInvariantError):
        check_node_invariants(_node((1, 2), [[1, 3], [1, 2]]))  # hit by earlier edge
    check_node_invariants(_node((1, 2), [[1, 3], [2, 4]]))


def test_state_serialization_roundtrip(example_dpi, example_finder, example_measurements):
    driver = _iteration2_state(example_dpi, example_finder, example_measurements)
    state = driver._state
    data = state.to_dict()
    restored = SearchState.from_dict(data, example_dpi, QueueOrder.BFS, None)
    assert restored.to_dict() == data


def test_root_node_shape():
    root = make_root()
    assert root.edges == () and root.cs == [] and root.members == frozenset()


# ---------------------------------------------------------------------------
# Completeness, best-first order, engine equivalence
# ---------------------------------------------------------------------------

def test_all_diagnoses_match_brute_force():
    rng = random.Random(11)
    for dpi in random_corpus(15, seed=606, axioms=(4, 8)):
        expected = brute_force_minimal_diagnoses(dpi)
        emitted = dynamic_all_diagnoses(dpi)
        assert set(emitted) == expected
        cards = [len(d) for d in emitted]
        assert cards == sorted(cards)
        pr = random_probabilities(dpi, rng)
        emitted_prob = dynamic_all_diagnoses(dpi, order=QueueOrder.PROB, pr=pr)
        assert set(emitted_prob) == expected
        probs = [node_probability(d, pr, dpi.indices()) for d in emitted_prob]
        assert all(probs[i] >= probs[i + 1] - 1e-12 for i in range(len(probs) - 1))


def test_session_equivalence_with_rebuilding_search():
    rng = random.Random(13)
    for dpi in random_corpus(25, seed=707, axioms=(4, 8)):
        target = planted_minimal_diagnosis(dpi, rng)
        pair = run_engine_pair(dpi, target, ld=rng.choice([2, 3, 4]))
        assert pair.dynamic.status == pair.hstree.status
        assert pair.dynamic.final == pair.hstree.final
        assert pair.dynamic.diagnosis_sets() == pair.hstree.diagnosis_sets()


def test_regression_growth_through_parked_duplicates_only():
    # after two negative answers the only remaining access to the grown
    # diagnosis [2,3,4,5,6,7] runs through branches that were parked as
    # set-equal duplicates; pruning must reactivate them
    from hsdiag.dpi import DPI
    from hsdiag.logic import parse_formula

    axioms = tuple(parse_formula(s) for s in (
        "B -> !C", "A -> !B", "A -> B", "A -> !B", "A -> C", "A -> !B", "A -> C"))
    dpi = DPI(axioms=axioms, negative=(parse_formula("!A"),))
    target = frozenset({1, 2, 4, 6})
    assert target in brute_force_minimal_diagnoses(dpi)
    pair = run_engine_pair(dpi, target, ld=3)
    assert pair.dynamic.status == pair.hstree.status == "done"
    assert pair.dynamic.final == pair.hstree.final == target
    assert pair.dynamic.diagnosis_sets() == pair.hstree.diagnosis_sets()
    # the iteration that needs the reactivated duplicate finds both diagnoses
    assert any(
        frozenset({2, 3, 4, 5, 6, 7}) in step for step in pair.dynamic.diagnosis_sets())


def test_multi_invocation_resume_after_cutoff(example_dpi, example_finder):
    state = initial_state(example_dpi)
    first = dynamic_hs(example_dpi, EMPTY_ACQUIRED, state, finder=example_finder, ld=2)
    assert [sorted(nd.members) for nd in first] == [[1, 3], [1, 4]]
    assert state.queue  # unlabeled frontier survives the cutoff
    rest = dynamic_hs(example_dpi, EMPTY_ACQUIRED, state, finder=example_finder,
                      d_check=first, d_times=[], ld=math.inf)
    assert [sorted(nd.members) for nd in rest] == [[1, 3], [1, 4], [2, 3], [2, 5]]
