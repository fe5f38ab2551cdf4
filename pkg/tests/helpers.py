"""Shared test machinery: deterministic random corpora, acquired-measurement
builders, and paired-engine session harnesses."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from hsdiag.conflicts import Counters, QuickXplainFinder
from hsdiag.dpi import (
    DPI,
    EMPTY_ACQUIRED,
    Acquired,
    brute_force_minimal_diagnoses,
)
from hsdiag.dynamichs import dynamic_hs, initial_state
from hsdiag.generate import GenerationError, RandomDpiSpec, generate_dpi
from hsdiag.hstree import run_hs_tree
from hsdiag.logic import parse_formula
from hsdiag.ordering import QueueOrder
from hsdiag.sequential import (
    SessionConfig,
    SessionResult,
    SimulatedOracle,
    run_session,
)


def acquired(positive: str = "", negative: str = "") -> Acquired:
    """Build acquired measurements from ';'-separated formula strings."""
    return Acquired(
        positive=tuple(parse_formula(s) for s in positive.split(";") if s.strip()),
        negative=tuple(parse_formula(s) for s in negative.split(";") if s.strip()),
    )


def random_corpus(count: int, *, seed: int, axioms=(4, 8), variables=(3, 6),
                  min_diagnoses: int = 2) -> list[DPI]:
    rng = random.Random(seed)
    out: list[DPI] = []
    attempt = 0
    while len(out) < count and attempt < count * 60:
        attempt += 1
        spec = RandomDpiSpec(
            n_axioms=rng.randint(*axioms),
            n_vars=rng.randint(*variables),
            seed=seed * 1_000_000 + attempt,
            min_diagnoses=min_diagnoses,
        )
        try:
            out.append(generate_dpi(spec))
        except GenerationError:
            continue
    assert len(out) == count, f"could only generate {len(out)} of {count} problems"
    return out


def random_probabilities(dpi: DPI, rng: random.Random) -> dict[int, float]:
    return {i: rng.uniform(0.01, 0.49) for i in sorted(dpi.indices())}


def dynamic_all_diagnoses(dpi: DPI, acq: Acquired = EMPTY_ACQUIRED, *,
                          order: QueueOrder = QueueOrder.BFS,
                          pr: dict[int, float] | None = None) -> list[frozenset[int]]:
    state = initial_state(dpi, order, pr)
    nodes = dynamic_hs(dpi, acq, state, finder=QuickXplainFinder(), ld=math.inf)
    return [nd.members for nd in nodes]


def hstree_all_diagnoses(dpi: DPI, acq: Acquired = EMPTY_ACQUIRED, *,
                         order: QueueOrder = QueueOrder.BFS,
                         pr: dict[int, float] | None = None) -> list[frozenset[int]]:
    return run_hs_tree(dpi, acq, finder=QuickXplainFinder(), ld=math.inf,
                       order=order, pr=pr)


@dataclass
class SessionPair:
    dpi: DPI
    target: frozenset[int]
    dynamic: SessionResult
    hstree: SessionResult
    dynamic_counters: Counters
    hstree_counters: Counters


def run_engine_pair(dpi: DPI, target: frozenset[int], *, ld: float = 3,
                    order: QueueOrder = QueueOrder.BFS,
                    pr: dict[int, float] | None = None) -> SessionPair:
    """Both engines against the same simulated fault and configuration."""
    results = {}
    counters = {}
    for engine in ("dynamic", "hstree"):
        counters[engine] = Counters()
        config = SessionConfig(engine=engine, ld=ld, order=order, pr=pr,
                               record_traces=False, record_snapshots=False)
        results[engine] = run_session(dpi, config, SimulatedOracle(target),
                                      counters=counters[engine])
    return SessionPair(dpi=dpi, target=target,
                       dynamic=results["dynamic"], hstree=results["hstree"],
                       dynamic_counters=counters["dynamic"],
                       hstree_counters=counters["hstree"])


def planted_minimal_diagnosis(dpi: DPI, rng: random.Random) -> frozenset[int]:
    sol = sorted(brute_force_minimal_diagnoses(dpi), key=lambda d: tuple(sorted(d)))
    return rng.choice(sol)
