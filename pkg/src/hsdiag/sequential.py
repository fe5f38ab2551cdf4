"""The outer sequential-diagnosis loop: compute leading diagnoses, pick the
measurement that best splits them, ask the oracle, fold the answer into the
acquired measurements, and repeat until a single minimal diagnosis remains.

The loop is implemented as a resumable driver (one engine invocation per
step) so interactive front ends can suspend a session at the oracle question;
`run_session` drives it to completion against an in-process oracle.
"""

from __future__ import annotations

import itertools
import queue as queue_mod
import time
from dataclasses import dataclass, field, replace
from typing import Collection, Iterable, Mapping, Sequence

from .conflicts import ConflictFinder, Counters, QuickXplainFinder
from .dpi import (
    DPI,
    Acquired,
    ComponentSet,
    DpiValidationError,
    DuplicateMeasurementError,
    Measurement,
    add_measurement,
    is_diagnosis,
    residual_kb,
    negative_tests,
    validate_acquired,
)
from .dynamichs import DynNode, SearchState, dynamic_hs, initial_state
from .hstree import TraceEntry, run_hs_tree
from .logic import (
    Formula,
    Implies,
    Not,
    Var,
    entails,
    evaluate,
    is_consistent,
    parse_formula,
    to_text,
    variables,
)
from .ordering import QueueOrder, node_probability, validate_probabilities


class SessionError(RuntimeError):
    pass


class OracleError(SessionError):
    pass


class ScriptExhaustedError(OracleError):
    pass


class SentenceMismatchError(OracleError):
    pass


class OracleTimeoutError(OracleError):
    pass


class OracleContradictionError(SessionError):
    """The collected answers rule out every diagnosis."""


class IndistinguishableDiagnosesError(SessionError):
    """No candidate measurement can eliminate a leading diagnosis."""


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

class Oracle:
    def answer(self, sentence: Formula, dpi: DPI, acquired: Acquired) -> bool:
        raise NotImplementedError


class SimulatedOracle(Oracle):
    """Answers according to a planted actual diagnosis: a sentence holds iff
    the system without the faulty axioms entails it."""

    def __init__(self, actual: Collection[int]):
        self.actual = frozenset(actual)

    def answer(self, sentence: Formula, dpi: DPI, acquired: Acquired) -> bool:
        return entails(residual_kb(dpi, acquired, self.actual), sentence)


class ScriptedOracle(Oracle):
    """Replays recorded measurements; the asked sentence must match the script."""

    def __init__(self, measurements: Sequence[Measurement]):
        self.measurements = list(measurements)
        self.position = 0

    @property
    def sentences(self) -> tuple[Formula, ...]:
        return tuple(m.sentence for m in self.measurements)

    def answer(self, sentence: Formula, dpi: DPI, acquired: Acquired) -> bool:
        if self.position >= len(self.measurements):
            raise ScriptExhaustedError("measurement script exhausted")
        entry = self.measurements[self.position]
        if entry.sentence != sentence:
            raise SentenceMismatchError(
                f"script expects {to_text(entry.sentence)!r}, session asked {to_text(sentence)!r}")
        self.position += 1
        return entry.outcome


class InteractiveOracle(Oracle):
    """Channel-backed oracle: `answer` publishes the question and blocks until
    some other execution context calls `reply`."""

    def __init__(self, timeout: float | None = None):
        self.timeout = timeout
        self.questions: queue_mod.Queue[Formula] = queue_mod.Queue()
        self._replies: queue_mod.Queue[bool] = queue_mod.Queue()

    def answer(self, sentence: Formula, dpi: DPI, acquired: Acquired) -> bool:
        self.questions.put(sentence)
        try:
            return self._replies.get(timeout=self.timeout)
        except queue_mod.Empty:
            raise OracleTimeoutError("no answer within the configured timeout") from None

    def reply(self, outcome: bool) -> None:
        self._replies.put(outcome)


def perform_measurement(mp: Formula, oracle: Oracle, dpi: DPI, acquired: Acquired) -> bool:
    return oracle.answer(mp, dpi, acquired)


def parse_measurement_script(text: str) -> list[Measurement]:
    import json

    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ValueError("measurement script must be a JSON list")
    return [Measurement(parse_formula(item["sentence"]), bool(item["outcome"])) for item in raw]


# ---------------------------------------------------------------------------
# Configuration and logging
# ---------------------------------------------------------------------------

ENGINE_DYNAMIC = "dynamic"
ENGINE_HSTREE = "hstree"


@dataclass(frozen=True)
class SessionConfig:
    engine: str = ENGINE_DYNAMIC
    ld: float = 5
    order: QueueOrder = QueueOrder.BFS
    pr: Mapping[int, float] | None = None
    question_script: tuple[Formula, ...] | None = None
    pool_cap: int = 200
    stop_probability: float | None = None
    record_traces: bool = True
    record_snapshots: bool = True
    max_iterations: int = 200

    def validated(self, dpi: DPI) -> "SessionConfig":
        if self.engine not in (ENGINE_DYNAMIC, ENGINE_HSTREE):
            raise SessionError(f"unknown engine {self.engine!r}")
        if not (self.ld >= 2):
            raise SessionError("ld must be at least 2")
        if self.order is QueueOrder.PROB:
            validate_probabilities(self.pr or {}, dpi.indices())
        return self


@dataclass
class IterationRecord:
    iteration: int
    diagnoses: list[list[int]]
    probabilities: list[float] | None = None
    proposed: str | None = None
    outcome: bool | None = None
    d_check: list[list[int]] = field(default_factory=list)
    d_times: list[list[int]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    wall_ms: float = 0.0
    trace: list[dict] | None = None
    state_snapshot: dict | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "diagnoses": self.diagnoses,
            "probabilities": self.probabilities,
            "proposed": self.proposed,
            "outcome": self.outcome,
            "d_check": self.d_check,
            "d_times": self.d_times,
            "counters": self.counters,
            "wall_ms": self.wall_ms,
            "trace": self.trace,
            "state_snapshot": self.state_snapshot,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationRecord":
        return cls(**data)


@dataclass
class SessionResult:
    status: str
    final: ComponentSet | None
    records: list[IterationRecord]
    counters: Counters

    def diagnosis_sets(self) -> list[frozenset[ComponentSet]]:
        return [frozenset(frozenset(d) for d in rec.diagnoses) for rec in self.records]


def assign_diags_ok_nok(diagnoses: Sequence[ComponentSet], dpi: DPI, acquired: Acquired,
                        counters: Counters | None = None,
                        ) -> tuple[list[ComponentSet], list[ComponentSet]]:
    """Split the previously returned diagnoses into those still valid for the
    extended problem and those the last measurement invalidated. One validity
    check per diagnosis, charged to the session consistency counter."""
    ok: list[ComponentSet] = []
    nok: list[ComponentSet] = []
    for d in diagnoses:
        if counters is not None:
            counters.cc_session += 1
        (ok if is_diagnosis(dpi, acquired, d) else nok).append(d)
    return ok, nok


# ---------------------------------------------------------------------------
# Measurement selection (split-in-half over a generated candidate pool)
# ---------------------------------------------------------------------------

_STATUS_PLUS = 1
_STATUS_MINUS = -1
_STATUS_NEUTRAL = 0

_MODEL_ENUM_LIMIT = 4096


def measurement_candidates(dpi: DPI, acquired: Acquired, cap: int = 200) -> list[Formula]:
    """Atoms and variable-to-literal implications over the problem variables,
    lexicographically ordered, minus sentences that were already measured."""
    names: set[str] = set()
    for f in itertools.chain(dpi.axioms, dpi.background, dpi.positive, dpi.negative):
        names.update(variables(f))
    ordered = sorted(names)
    pool: list[Formula] = [Var(v) for v in ordered]
    for v in ordered:
        for w in ordered:
            for positive in (True, False):
                if v == w and positive:
                    continue  # tautology
                rhs: Formula = Var(w) if positive else Not(Var(w))
                pool.append(Implies(Var(v), rhs))
    taken = acquired.sentences()
    unique = sorted({f for f in pool if f not in taken}, key=to_text)
    return unique[:cap]


class _ModelTable:
    """Explicit model enumeration over few variables; used to score many
    candidate measurements without invoking the solver per candidate."""

    def __init__(self, dpi: DPI, acquired: Acquired, extra: Iterable[Formula]):
        names: set[str] = set()
        for f in itertools.chain(dpi.axioms, dpi.background, dpi.positive,
                                 dpi.negative, acquired.positive, acquired.negative, extra):
            names.update(variables(f))
        self.names = sorted(names)
        self.assignments = [
            dict(zip(self.names, bits))
            for bits in itertools.product((False, True), repeat=len(self.names))
        ]

    @property
    def size(self) -> int:
        return 2 ** len(self.names)

    def models(self, formulas: Sequence[Formula],
               within: list[dict] | None = None) -> list[dict]:
        source = self.assignments if within is None else within
        return [a for a in source if all(evaluate(f, a) for f in formulas)]


def compute_best_meas_point(diagnoses: Sequence[ComponentSet], dpi: DPI, acquired: Acquired,
                            pool_cap: int = 200) -> Formula:
    """The candidate sentence with the best worst-case elimination power:
    minimize ||D+| - |D-|| + |D0|, where D+ holds the diagnoses whose residual
    system entails the sentence and D- those it contradicts. Only candidates
    with both sides non-empty qualify; ties break on the printed form."""
    if len(diagnoses) < 2:
        raise SessionError("measurement selection needs at least two diagnoses")
    d_list = sorted(diagnoses, key=lambda d: (len(d), tuple(sorted(d))))
    candidates = measurement_candidates(dpi, acquired, pool_cap)
    negatives = list(negative_tests(dpi, acquired))
    base = list(dpi.background) + list(dpi.positive) + list(acquired.positive)

    table = _ModelTable(dpi, acquired, candidates)
    use_models = table.size <= _MODEL_ENUM_LIMIT
    if use_models:
        base_models = table.models(base)
        residual_models = [
            table.models([dpi.axiom(i) for i in sorted(dpi.indices() - d)], base_models)
            for d in d_list
        ]

    def decided(q: Formula) -> bool:
        if use_models:
            holds = sum(1 for a in base_models if evaluate(q, a))
            return holds == len(base_models) or holds == 0
        return entails(base, q) or not is_consistent(base + [q])

    def status(q: Formula, idx: int) -> int:
        if use_models:
            models = residual_models[idx]
            sat = [a for a in models if evaluate(q, a)]
            if len(sat) == len(models):
                return _STATUS_PLUS
            if not sat:
                return _STATUS_MINUS
            if any(all(evaluate(n, a) for a in sat) for n in negatives):
                return _STATUS_MINUS
            return _STATUS_NEUTRAL
        kb = residual_kb(dpi, acquired, d_list[idx])
        if entails(kb, q):
            return _STATUS_PLUS
        extended = kb + [q]
        if not is_consistent(extended) or any(entails(extended, n) for n in negatives):
            return _STATUS_MINUS
        return _STATUS_NEUTRAL

    best: tuple[int, int] | None = None  # (score, candidate position)
    best_q: Formula | None = None
    for pos, q in enumerate(candidates):
        if decided(q):
            continue
        plus = minus = neutral = 0
        for idx in range(len(d_list)):
            s = status(q, idx)
            if s == _STATUS_PLUS:
                plus += 1
            elif s == _STATUS_MINUS:
                minus += 1
            else:
                neutral += 1
        if plus == 0 or minus == 0:
            continue
        score = abs(plus - minus) + neutral
        if best is None or score < best[0]:
            best = (score, pos)
            best_q = q
    if best_q is None:
        raise IndistinguishableDiagnosesError(
            "no candidate measurement distinguishes the leading diagnoses")
    return best_q


def split_in_half_partition(q: Formula, diagnoses: Sequence[ComponentSet], dpi: DPI,
                            acquired: Acquired) -> tuple[set[ComponentSet], set[ComponentSet], set[ComponentSet]]:
    """D+/D-/D0 for one candidate, straight from the definitions (test hook)."""
    negatives = list(negative_tests(dpi, acquired))
    plus: set[ComponentSet] = set()
    minus: set[ComponentSet] = set()
    neutral: set[ComponentSet] = set()
    for d in diagnoses:
        kb = residual_kb(dpi, acquired, d)
        if entails(kb, q):
            plus.add(d)
        else:
            extended = kb + [q]
            if not is_consistent(extended) or any(entails(extended, n) for n in negatives):
                minus.add(d)
            else:
                neutral.add(d)
    return plus, minus, neutral


# ---------------------------------------------------------------------------
# Session driver
# ---------------------------------------------------------------------------

STATUS_NEW = "new"                # constructed; first engine invocation pending
STATUS_READY = "ready"            # answer incorporated; next invocation pending
STATUS_AWAITING = "awaiting-answer"
STATUS_DONE = "done"
STATUS_FAILED = "failed"


class SessionDriver:
    """Alg-style loop broken at the oracle question so callers can suspend.

    Typical use: construct, `advance()` once, then alternate reading
    `pending` with `submit(outcome)` until `status` is done.
    """

    def __init__(self, dpi: DPI, config: SessionConfig,
                 finder: ConflictFinder | None = None,
                 counters: Counters | None = None):
        validate_acquired(dpi, Acquired())
        self.dpi = dpi
        self.config = config.validated(dpi)
        self.finder = finder if finder is not None else QuickXplainFinder()
        self.counters = counters if counters is not None else Counters()
        self.acquired = Acquired()
        self.records: list[IterationRecord] = []
        self.iteration = 0
        self.status = STATUS_NEW
        self.pending: Formula | None = None
        self.final: ComponentSet | None = None
        self.error: str | None = None
        self._state: SearchState | None = None
        self._last_nodes: list[DynNode] = []
        self._last_sets: list[ComponentSet] = []
        self._d_check_nodes: list[DynNode] = []
        self._d_times_nodes: list[DynNode] = []
        if self.config.engine == ENGINE_DYNAMIC:
            self._state = initial_state(dpi, self.config.order, self.config.pr)

    # -- engine invocations --------------------------------------------------

    def advance(self) -> str:
        if self.status not in (STATUS_NEW, STATUS_READY):
            raise SessionError(f"cannot advance a session in status {self.status!r}")
        if self.iteration >= self.config.max_iterations:
            return self._fail(f"session exceeded {self.config.max_iterations} iterations")
        self.iteration += 1
        trace: list[TraceEntry] | None = [] if self.config.record_traces else None
        started = time.perf_counter()
        if self.config.engine == ENGINE_DYNAMIC:
            assert self._state is not None
            nodes = dynamic_hs(
                self.dpi, self.acquired, self._state,
                finder=self.finder, counters=self.counters,
                d_check=self._d_check_nodes, d_times=self._d_times_nodes,
                ld=self.config.ld, trace=trace)
            self._last_nodes = nodes
            diagnoses = [nd.members for nd in nodes]
        else:
            diagnoses = run_hs_tree(
                self.dpi, self.acquired, finder=self.finder, counters=self.counters,
                ld=self.config.ld, order=self.config.order, pr=self.config.pr, trace=trace)
        self._last_sets = list(diagnoses)
        wall_ms = (time.perf_counter() - started) * 1000.0
        if not diagnoses:
            return self._fail("no diagnosis exists for the collected measurements")

        record = IterationRecord(
            iteration=self.iteration,
            diagnoses=[sorted(d) for d in diagnoses],
            probabilities=self._diagnosis_probabilities(diagnoses),
            counters=self.counters.snapshot(),
            wall_ms=wall_ms,
            trace=[t.to_dict() for t in trace] if trace is not None else None,
            state_snapshot=(self._state.to_dict()
                            if self._state is not None and self.config.record_snapshots
                            else None),
        )
        self.records.append(record)

        if len(diagnoses) == 1 or self._past_stop_probability(diagnoses):
            self.final = diagnoses[0]
            self.status = STATUS_DONE
            self.pending = None
            return self.status
        try:
            self.pending = self._next_point(diagnoses)
        except SessionError as exc:
            return self._fail(str(exc))
        record.proposed = to_text(self.pending)
        self.status = STATUS_AWAITING
        return self.status

    def _next_point(self, diagnoses: Sequence[ComponentSet]) -> Formula:
        script = self.config.question_script
        used = len(self.acquired.positive) + len(self.acquired.negative)
        if script is not None and used < len(script):
            return script[used]
        return compute_best_meas_point(diagnoses, self.dpi, self.acquired,
                                       self.config.pool_cap)

    def _diagnosis_probabilities(self, diagnoses: Sequence[ComponentSet]) -> list[float] | None:
        if not self.config.pr:
            return None
        return [node_probability(d, self.config.pr, self.dpi.indices()) for d in diagnoses]

    def _past_stop_probability(self, diagnoses: Sequence[ComponentSet]) -> bool:
        threshold = self.config.stop_probability
        if threshold is None or not self.config.pr:
            return False
        weights = [node_probability(d, self.config.pr, self.dpi.indices()) for d in diagnoses]
        total = sum(weights)
        return total > 0 and max(weights) / total >= threshold

    def _fail(self, message: str) -> str:
        self.status = STATUS_FAILED
        self.error = message
        self.pending = None
        return self.status

    # -- measurement incorporation -------------------------------------------

    def apply_answer(self, outcome: bool) -> None:
        """Fold the oracle's answer into the acquired measurements and split
        the last diagnoses; the next `advance()` resumes the search."""
        if self.status != STATUS_AWAITING:
            raise SessionError(f"session is not awaiting an answer (status {self.status!r})")
        assert self.pending is not None
        measurement = Measurement(self.pending, outcome)
        try:
            self.acquired = add_measurement(self.acquired, measurement)
        except DuplicateMeasurementError as exc:
            self._fail(str(exc))
            raise SessionError(str(exc)) from exc
        try:
            validate_acquired(self.dpi, self.acquired)
        except DpiValidationError as exc:
            self._fail(f"oracle contradiction: {exc}")
            raise OracleContradictionError(str(exc)) from exc
        ok_sets, nok_sets = assign_diags_ok_nok(
            self._last_sets, self.dpi, self.acquired, self.counters)
        record = self.records[-1]
        record.outcome = outcome
        record.d_check = [sorted(d) for d in ok_sets]
        record.d_times = [sorted(d) for d in nok_sets]
        if self.config.engine == ENGINE_DYNAMIC:
            ok = set(ok_sets)
            self._d_check_nodes = [nd for nd in self._last_nodes if nd.members in ok]
            self._d_times_nodes = [nd for nd in self._last_nodes if nd.members not in ok]
        self.pending = None
        self.status = STATUS_READY

    def submit(self, outcome: bool) -> str:
        self.apply_answer(outcome)
        return self.advance()

    # -- persistence -----------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "status": self.status,
            "iteration": self.iteration,
            "pending": None if self.pending is None else to_text(self.pending),
            "final": None if self.final is None else sorted(self.final),
            "error": self.error,
            "acquired": {
                "positive": [to_text(f) for f in self.acquired.positive],
                "negative": [to_text(f) for f in self.acquired.negative],
            },
            "counters": {**self.counters.snapshot(),
                         "tree_finder_calls": self.counters.tree_finder_calls},
            "engine_state": None if self._state is None else self._state.to_dict(),
            "last_nodes": [nd.to_dict() for nd in self._last_nodes],
            "last_sets": [sorted(d) for d in self._last_sets],
            "d_check_nodes": [nd.to_dict() for nd in self._d_check_nodes],
            "d_times_nodes": [nd.to_dict() for nd in self._d_times_nodes],
            "records": [rec.to_dict() for rec in self.records],
        }

    @classmethod
    def from_snapshot(cls, dpi: DPI, config: SessionConfig, data: dict,
                      finder: ConflictFinder | None = None) -> "SessionDriver":
        driver = cls(dpi, config, finder=finder)
        driver.status = data["status"]
        driver.iteration = data["iteration"]
        driver.pending = None if data["pending"] is None else parse_formula(data["pending"])
        driver.final = None if data["final"] is None else frozenset(data["final"])
        driver.error = data.get("error")
        driver.acquired = Acquired(
            positive=tuple(parse_formula(s) for s in data["acquired"]["positive"]),
            negative=tuple(parse_formula(s) for s in data["acquired"]["negative"]),
        )
        counters = data["counters"]
        driver.counters.fc = counters["fc"]
        driver.counters.rd = counters["rd"]
        driver.counters.cc_tree = counters["cc_tree"]
        driver.counters.cc_session = counters["cc_session"]
        driver.counters.tree_finder_calls = counters.get("tree_finder_calls", 0)
        if data["engine_state"] is not None:
            driver._state = SearchState.from_dict(
                data["engine_state"], dpi, config.order, config.pr)
        driver._last_nodes = [DynNode.from_dict(item) for item in data["last_nodes"]]
        driver._last_sets = [frozenset(ids) for ids in data["last_sets"]]
        driver._d_check_nodes = [DynNode.from_dict(item) for item in data["d_check_nodes"]]
        driver._d_times_nodes = [DynNode.from_dict(item) for item in data["d_times_nodes"]]
        driver.records = [IterationRecord.from_dict(item) for item in data["records"]]
        return driver


def run_session(dpi: DPI, config: SessionConfig, oracle: Oracle,
                finder: ConflictFinder | None = None,
                counters: Counters | None = None) -> SessionResult:
    """Drive a session to completion. A scripted oracle also dictates the
    measurement points (golden replays bypass the selection heuristic)."""
    if isinstance(oracle, ScriptedOracle) and config.question_script is None:
        config = replace(config, question_script=oracle.sentences)
    driver = SessionDriver(dpi, config, finder=finder, counters=counters)
    status = driver.advance()
    while status == STATUS_AWAITING:
        assert driver.pending is not None
        outcome = perform_measurement(driver.pending, oracle, dpi, driver.acquired)
        status = driver.submit(outcome)
    return SessionResult(
        status=driver.status,
        final=driver.final,
        records=driver.records,
        counters=driver.counters,
    )
