"""Queue orders shared by both search engines.

Both engines rank open nodes by the same total order so that the "most
preferred" diagnoses are identical regardless of tree-construction history:
breadth-first ranks by cardinality, probability order by descending node
probability; ties always break on the sorted edge-label set.
"""

from __future__ import annotations

import bisect
from enum import Enum
from typing import Callable, Generic, Iterator, Mapping, TypeVar

from .dpi import ComponentSet


class QueueOrder(str, Enum):
    BFS = "bfs"
    PROB = "prob"


class ProbabilityError(ValueError):
    pass


def validate_probabilities(pr: Mapping[int, float], indices: ComponentSet) -> None:
    """Fault probabilities must cover every axiom and sit strictly inside
    (0, 0.5) so supersets are never preferred over their subsets."""
    missing = sorted(indices - set(pr))
    if missing:
        raise ProbabilityError(f"missing fault probabilities for axioms {missing}")
    for i in sorted(indices):
        p = pr[i]
        if not 0.0 < p < 0.5:
            raise ProbabilityError(f"pr(a{i})={p} outside the open interval (0, 0.5)")


def node_probability(members: ComponentSet, pr: Mapping[int, float],
                     indices: ComponentSet) -> float:
    """Multiplicative extension of axiom fault probabilities to node sets."""
    p = 1.0
    for i in indices:
        p *= pr[i] if i in members else 1.0 - pr[i]
    return p


def rank_key(members: ComponentSet, order: QueueOrder,
             pr: Mapping[int, float] | None, indices: ComponentSet) -> tuple:
    lex = tuple(sorted(members))
    if order is QueueOrder.BFS:
        return (len(members), lex)
    if pr is None:
        raise ProbabilityError("probability order requires fault probabilities")
    return (-node_probability(members, pr, indices), lex)


T = TypeVar("T")


class RankedQueue(Generic[T]):
    """Sorted open list with set-equality lookup and arbitrary removal.

    Entries with equal keys keep insertion order (relevant only for set-equal
    nodes, which share a key by construction).
    """

    def __init__(self, members_of: Callable[[T], ComponentSet], order: QueueOrder,
                 pr: Mapping[int, float] | None, indices: ComponentSet):
        self._members_of = members_of
        self._order = order
        self._pr = pr
        self._indices = indices
        self._items: list[T] = []
        self._set_counts: dict[ComponentSet, int] = {}

    def key_of(self, item: T) -> tuple:
        return rank_key(self._members_of(item), self._order, self._pr, self._indices)

    def insert(self, item: T) -> None:
        bisect.insort_right(self._items, item, key=self.key_of)
        members = self._members_of(item)
        self._set_counts[members] = self._set_counts.get(members, 0) + 1

    def pop_first(self) -> T:
        item = self._items.pop(0)
        self._drop_count(item)
        return item

    def remove(self, item: T) -> None:
        for i, existing in enumerate(self._items):
            if existing is item:
                del self._items[i]
                self._drop_count(item)
                return
        raise ValueError("item not in queue")

    def _drop_count(self, item: T) -> None:
        members = self._members_of(item)
        count = self._set_counts[members] - 1
        if count:
            self._set_counts[members] = count
        else:
            del self._set_counts[members]

    def contains_set(self, members: ComponentSet) -> bool:
        return members in self._set_counts

    def find_by_set(self, members: ComponentSet) -> T | None:
        for item in self._items:
            if self._members_of(item) == members:
                return item
        return None

    def __iter__(self) -> Iterator[T]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)
