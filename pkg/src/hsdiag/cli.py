"""Command-line entry points: run or compare sequential sessions, generate
random problems, and serve the interactive session API.

Exit codes: 0 ok, 1 usage, 2 validation/input, 3 oracle error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .conflicts import (
    ConflictFinder,
    ConflictScriptError,
    Counters,
    QuickXplainFinder,
    ScriptedConflictFinder,
)
from .dpi import (
    DPI,
    EMPTY_ACQUIRED,
    DpiError,
    format_component_set,
    format_dpi,
    has_fault,
    is_diagnosis,
    parse_dpi,
    validate_dpi,
)
from .generate import GenerationError, RandomDpiSpec, generate_dpi
from .logic import ParseError
from .ordering import ProbabilityError, QueueOrder, validate_probabilities
from .sequential import (
    OracleError,
    ScriptedOracle,
    SessionConfig,
    SessionError,
    SimulatedOracle,
    parse_measurement_script,
    run_session,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_ORACLE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise _UsageError(message)


class _InputError(Exception):
    pass


def _load_dpi(path: str) -> DPI:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _InputError(f"cannot read DPI file {path}: {exc}") from exc
    try:
        dpi = parse_dpi(text)
        validate_dpi(dpi)
    except (DpiError, ParseError) as exc:
        raise _InputError(f"invalid DPI file {path}: {exc}") from exc
    if not has_fault(dpi):
        raise _InputError(
            f"DPI file {path}: nothing to diagnose (the empty set is already a diagnosis)")
    return dpi


def _parse_ld(text: str) -> float:
    if text in ("inf", "infinity"):
        return math.inf
    try:
        value = int(text)
    except ValueError:
        raise _InputError(f"bad ld value {text!r}") from None
    if value < 2:
        raise _InputError("ld must be at least 2")
    return value


def _parse_pr(text: str | None, dpi: DPI) -> dict[int, float] | None:
    if text is None:
        return None
    if text.startswith("random:"):
        rng = random.Random(int(text.split(":", 1)[1]))
        pr = {i: rng.uniform(0.01, 0.49) for i in sorted(dpi.indices())}
    else:
        try:
            raw = json.loads(Path(text).read_text(encoding="utf-8"))
            pr = {int(key.lstrip("a")): float(value) for key, value in raw.items()}
        except (OSError, ValueError) as exc:
            raise _InputError(f"cannot read probability file {text}: {exc}") from exc
    try:
        validate_probabilities(pr, dpi.indices())
    except ProbabilityError as exc:
        raise _InputError(str(exc)) from exc
    return pr


def _parse_actual(text: str, dpi: DPI) -> frozenset[int]:
    try:
        ids = frozenset(int(part.strip().lstrip("a")) for part in text.split(","))
    except ValueError:
        raise _InputError(f"bad --actual value {text!r}") from None
    if not ids <= dpi.indices():
        raise _InputError(f"--actual {text!r} outside the axiom range")
    if not is_diagnosis(dpi, EMPTY_ACQUIRED, ids):
        raise _InputError(f"--actual {format_component_set(ids)} is not a diagnosis of the DPI")
    return ids


def _build_finder(path: str | None) -> ConflictFinder:
    if path is None:
        return QuickXplainFinder()
    try:
        return ScriptedConflictFinder.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _InputError(f"cannot read conflict script {path}: {exc}") from exc
    except ConflictScriptError as exc:
        raise _InputError(str(exc)) from exc


def _counters_line(counters: Counters) -> str:
    return (f"counters: fc={counters.fc} rd={counters.rd} "
            f"cc_tree={counters.cc_tree} cc_session={counters.cc_session}")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    dpi = _load_dpi(args.dpi)
    pr = _parse_pr(args.pr, dpi)
    order = QueueOrder(args.order)
    finder = _build_finder(args.conflict_script)
    config = SessionConfig(engine=args.engine, ld=_parse_ld(args.ld), order=order, pr=pr)

    if args.script:
        try:
            measurements = parse_measurement_script(Path(args.script).read_text(encoding="utf-8"))
        except (OSError, ValueError, ParseError) as exc:
            raise _InputError(f"cannot read measurement script {args.script}: {exc}") from exc
        oracle = ScriptedOracle(measurements)
    elif args.actual:
        oracle = SimulatedOracle(_parse_actual(args.actual, dpi))
    else:
        raise _UsageError("run needs an oracle: --script FILE or --actual a1,a2,...")

    counters = Counters()
    result = run_session(dpi, config, oracle, finder=finder, counters=counters)
    for rec in result.records:
        diags = ", ".join(format_component_set(d) for d in rec.diagnoses)
        print(f"iteration {rec.iteration}: diagnoses {diags}")
        if rec.proposed is not None:
            answer = "yes" if rec.outcome else "no"
            print(f"  measurement: {rec.proposed} -> {answer}")
    if result.status != "done":
        print(f"session {result.status}", file=sys.stderr)
        return EXIT_ORACLE
    assert result.final is not None
    print(f"final diagnosis: {format_component_set(result.final)}")
    print(_counters_line(counters))
    if args.out:
        Path(args.out).write_text(
            "\n".join(json.dumps(rec.to_dict()) for rec in result.records) + "\n",
            encoding="utf-8")
        print(f"log written to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

@dataclass
class SessionRow:
    problem: str
    engine: str
    status: str
    iterations: int
    fc: int
    rd: int
    cc_tree: int
    cc_session: int
    wall_ms: float

    def as_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class BenchmarkReport:
    rows: list[SessionRow] = field(default_factory=list)

    def completed_pairs(self) -> list[tuple[SessionRow, SessionRow]]:
        by_problem: dict[str, dict[str, SessionRow]] = {}
        for row in self.rows:
            by_problem.setdefault(row.problem, {})[row.engine] = row
        pairs = []
        for name in sorted(by_problem):
            entry = by_problem[name]
            if {"dynamic", "hstree"} <= set(entry):
                if entry["dynamic"].status == entry["hstree"].status == "done":
                    pairs.append((entry["dynamic"], entry["hstree"]))
        return pairs

    def aggregates(self) -> dict:
        pairs = self.completed_pairs()
        total_fc_dyn = sum(d.fc for d, _ in pairs)
        total_fc_hst = sum(h.fc for _, h in pairs)
        total_ms_dyn = sum(d.wall_ms for d, _ in pairs)
        total_ms_hst = sum(h.wall_ms for _, h in pairs)
        per_session_fc = [100.0 * (h.fc - d.fc) / h.fc for d, h in pairs if h.fc]
        per_session_ms = [100.0 * (h.wall_ms - d.wall_ms) / h.wall_ms for d, h in pairs if h.wall_ms]
        return {
            "sessions": len(pairs),
            "total_fc_dynamic": total_fc_dyn,
            "total_fc_hstree": total_fc_hst,
            "fc_savings_pct": (100.0 * (total_fc_hst - total_fc_dyn) / total_fc_hst
                               if total_fc_hst else 0.0),
            "mean_fc_savings_pct": (sum(per_session_fc) / len(per_session_fc)
                                    if per_session_fc else 0.0),
            "total_wall_ms_dynamic": total_ms_dyn,
            "total_wall_ms_hstree": total_ms_hst,
            "runtime_savings_pct": (100.0 * (total_ms_hst - total_ms_dyn) / total_ms_hst
                                    if total_ms_hst else 0.0),
            "mean_runtime_savings_pct": (sum(per_session_ms) / len(per_session_ms)
                                         if per_session_ms else 0.0),
        }

    def write(self, prefix: str) -> tuple[Path, Path]:
        csv_path = Path(f"{prefix}.csv")
        json_path = Path(f"{prefix}.json")
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=[
                "problem", "engine", "status", "iterations",
                "fc", "rd", "cc_tree", "cc_session", "wall_ms"])
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row.as_dict())
        json_path.write_text(json.dumps({
            "rows": [row.as_dict() for row in self.rows],
            "aggregates": self.aggregates(),
        }, indent=2), encoding="utf-8")
        return csv_path, json_path


def _pick_target(dpi: DPI, rng: random.Random) -> frozenset[int]:
    """A random diagnosis to plant as the actually faulty axioms; not
    necessarily minimal, which is all the simulated oracle needs."""
    indices = sorted(dpi.indices())
    size = max(1, len(indices) // 4)
    for _ in range(200):
        candidate = frozenset(rng.sample(indices, k=min(size, len(indices))))
        if is_diagnosis(dpi, EMPTY_ACQUIRED, candidate):
            return candidate
        size = min(size + 1, len(indices))
    return frozenset(indices)  # removing everything is always a diagnosis


def run_benchmark(problems: list[tuple[str, DPI]], *, ld: float, order: QueueOrder,
                  seed: int, pr_by_problem: dict[str, dict[int, float]] | None = None,
                  measurements=None, finder_factory=None) -> BenchmarkReport:
    """Run both engines over each problem with the same planted fault (or the
    same measurement script) and identical configuration; sessions that abort
    are recorded, not fatal."""
    report = BenchmarkReport()
    for name, dpi in problems:
        rng = random.Random(f"{seed}:{name}")
        target = None if measurements is not None else _pick_target(dpi, rng)
        pr = (pr_by_problem or {}).get(name)
        for engine in ("dynamic", "hstree"):
            config = SessionConfig(engine=engine, ld=ld, order=order, pr=pr,
                                   record_traces=False, record_snapshots=False)
            if measurements is not None:
                oracle = ScriptedOracle(list(measurements))
            else:
                oracle = SimulatedOracle(target)
            finder = finder_factory() if finder_factory is not None else None
            counters = Counters()
            started = time.perf_counter()
            try:
                result = run_session(dpi, config, oracle, finder=finder,
                                     counters=counters)
                status = result.status
                iterations = len(result.records)
            except SessionError:
                status = "error"
                iterations = 0
            wall_ms = (time.perf_counter() - started) * 1000.0
            if counters.fc + counters.cc_tree != counters.tree_finder_calls:
                raise RuntimeError(
                    "counter accounting broke: fc + cc_tree must equal the "
                    "tree-internal conflict-searcher invocations")
            report.rows.append(SessionRow(
                problem=name, engine=engine, status=status, iterations=iterations,
                fc=counters.fc, rd=counters.rd, cc_tree=counters.cc_tree,
                cc_session=counters.cc_session, wall_ms=wall_ms))
    return report


def _cmd_compare(args) -> int:
    problems: list[tuple[str, DPI]] = []
    for path in args.dpi or []:
        problems.append((Path(path).name, _load_dpi(path)))
    if args.gen_count:
        produced = 0
        attempt = 0
        rng = random.Random(args.seed)
        while produced < args.gen_count and attempt < args.gen_count * 50:
            attempt += 1
            n_axioms = rng.randint(args.gen_axioms_min, args.gen_axioms_max)
            n_vars = rng.randint(args.gen_vars_min, args.gen_vars_max)
            spec = RandomDpiSpec(n_axioms=n_axioms, n_vars=n_vars,
                                 seed=args.seed * 100_000 + attempt,
                                 min_diagnoses=2, check_cap=args.gen_check_cap)
            try:
                dpi = generate_dpi(spec)
            except GenerationError:
                continue
            produced += 1
            problems.append((f"gen-{produced:03d}", dpi))
    if not problems:
        raise _UsageError("compare needs --dpi files and/or --gen-count N")

    pr_by_problem = None
    if QueueOrder(args.order) is QueueOrder.PROB:
        rng = random.Random(args.seed + 1)
        pr_by_problem = {
            name: {i: rng.uniform(0.01, 0.49) for i in sorted(dpi.indices())}
            for name, dpi in problems
        }
    measurements = None
    if args.script:
        try:
            measurements = parse_measurement_script(
                Path(args.script).read_text(encoding="utf-8"))
        except (OSError, ValueError, ParseError) as exc:
            raise _InputError(f"cannot read measurement script {args.script}: {exc}") from exc
    finder_factory = None
    if args.conflict_script:
        script_path = args.conflict_script
        _build_finder(script_path)  # fail fast on unreadable scripts
        finder_factory = lambda: _build_finder(script_path)
    report = run_benchmark(problems, ld=_parse_ld(args.ld), order=QueueOrder(args.order),
                           seed=args.seed, pr_by_problem=pr_by_problem,
                           measurements=measurements, finder_factory=finder_factory)
    agg = report.aggregates()
    print(f"completed session pairs: {agg['sessions']}")
    print(f"total fc: dynamic={agg['total_fc_dynamic']} hstree={agg['total_fc_hstree']} "
          f"savings={agg['fc_savings_pct']:.1f}% (mean per session {agg['mean_fc_savings_pct']:.1f}%)")
    print(f"total wall ms: dynamic={agg['total_wall_ms_dynamic']:.1f} "
          f"hstree={agg['total_wall_ms_hstree']:.1f} savings={agg['runtime_savings_pct']:.1f}%")
    if args.out_prefix:
        csv_path, json_path = report.write(args.out_prefix)
        print(f"report written to {csv_path} and {json_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen / serve
# ---------------------------------------------------------------------------

def _cmd_gen(args) -> int:
    spec = RandomDpiSpec(n_axioms=args.axioms, n_vars=args.vars, seed=args.seed,
                         min_diagnoses=args.min_diagnoses)
    try:
        dpi = generate_dpi(spec)
    except GenerationError as exc:
        raise _InputError(str(exc)) from exc
    text = format_dpi(dpi)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hsdiag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one sequential diagnosis session")
    run.add_argument("--dpi", required=True)
    run.add_argument("--engine", choices=["dynamic", "hstree"], default="dynamic")
    run.add_argument("--ld", default="5")
    run.add_argument("--order", choices=["bfs", "prob"], default="bfs")
    run.add_argument("--pr", help="probability file (JSON {axiom: p}) or random:SEED")
    run.add_argument("--script", help="measurement script JSON (sentences and outcomes)")
    run.add_argument("--conflict-script", help="conflict script JSON pinning finder answers")
    run.add_argument("--actual", help="planted actual diagnosis, e.g. a1,a4")
    run.add_argument("--out", help="write the session log (JSON lines)")
    run.add_argument("--seed", type=int, default=0)
    run.set_defaults(func=_cmd_run)

    compare = sub.add_parser("compare", help="benchmark both engines over a corpus")
    compare.add_argument("--dpi", action="append", help="DPI file (repeatable)")
    compare.add_argument("--gen-count", type=int, default=0)
    compare.add_argument("--gen-axioms-min", type=int, default=10)
    compare.add_argument("--gen-axioms-max", type=int, default=14)
    compare.add_argument("--gen-vars-min", type=int, default=5)
    compare.add_argument("--gen-vars-max", type=int, default=8)
    compare.add_argument("--gen-check-cap", type=int, default=0,
                         help="brute-force validation cap for generated DPIs (0 = skip)")
    compare.add_argument("--ld", default="4")
    compare.add_argument("--order", choices=["bfs", "prob"], default="bfs")
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--script", help="measurement script replayed on every problem")
    compare.add_argument("--conflict-script", help="conflict script pinning finder answers")
    compare.add_argument("--out-prefix", help="write PREFIX.csv and PREFIX.json")
    compare.set_defaults(func=_cmd_compare)

    gen = sub.add_parser("gen", help="generate a random DPI file")
    gen.add_argument("--axioms", type=int, required=True)
    gen.add_argument("--vars", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--min-diagnoses", type=int, default=2)
    gen.add_argument("--out")
    gen.set_defaults(func=_cmd_gen)

    serve = sub.add_parser("serve", help="serve the interactive session API")
    serve.add_argument("--data-dir", default="./sessions")
    serve.add_argument("--static-dir", default=None,
                       help="directory with built web assets to serve at /ui")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_InputError, ConflictScriptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except SessionError as exc:
        print(f"session error: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
