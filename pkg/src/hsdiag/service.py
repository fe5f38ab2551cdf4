"""HTTP session service: lets a human oracle drive a diagnosis session by
answering the proposed measurement questions.

Sessions are persisted as one JSON document per session (atomic
write-and-rename), so a restarted service resumes every session at its
recorded status. Engine invocations run in a background thread; clients poll
the session until it leaves the "computing" status.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .conflicts import ConflictFinder
from .dpi import DPI, DpiError, format_component_set, has_fault, parse_dpi, validate_dpi
from .golden import golden_dpi_text, golden_measurements
from .logic import ParseError, parse_formula, to_text
from .ordering import ProbabilityError, QueueOrder, validate_probabilities
from .sequential import (
    STATUS_AWAITING,
    STATUS_DONE,
    STATUS_FAILED,
    OracleContradictionError,
    SessionConfig,
    SessionDriver,
    SessionError,
)

log = logging.getLogger(__name__)

COMPUTING = "computing"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class SessionConfigModel(BaseModel):
    engine: Literal["dynamic", "hstree"] = "dynamic"
    ld: int = Field(default=5, ge=2)
    order: Literal["bfs", "prob"] = "bfs"
    pr: dict[str, float] | None = None
    question_script: list[str] | None = None

    def to_config(self, dpi: DPI) -> SessionConfig:
        pr = None
        if self.pr is not None:
            try:
                pr = {int(key.lstrip("a")): float(value) for key, value in self.pr.items()}
                validate_probabilities(pr, dpi.indices())
            except (ValueError, ProbabilityError) as exc:
                raise ApiError(400, "invalid_config", f"bad probabilities: {exc}") from exc
        script = None
        if self.question_script is not None:
            try:
                script = tuple(parse_formula(s) for s in self.question_script)
            except ParseError as exc:
                raise ApiError(400, "invalid_config", f"bad question script: {exc}") from exc
        try:
            return SessionConfig(engine=self.engine, ld=self.ld,
                                 order=QueueOrder(self.order), pr=pr,
                                 question_script=script).validated(dpi)
        except (SessionError, ProbabilityError) as exc:
            raise ApiError(400, "invalid_config", str(exc)) from exc


class CreateSessionRequest(BaseModel):
    dpi: str
    config: SessionConfigModel = SessionConfigModel()


class AnswerRequest(BaseModel):
    outcome: bool
    idempotency_key: str = Field(min_length=1)


class SessionStore:
    """One JSON file per session; mutations are atomic replacements."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def save(self, record: dict) -> None:
        target = self.path(record["id"])
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record), encoding="utf-8")
        os.replace(tmp, target)

    def load(self, session_id: str) -> dict:
        path = self.path(session_id)
        if not path.exists():
            raise ApiError(404, "not_found", f"no session {session_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))


def _service_status(driver_status: str) -> str:
    if driver_status in (STATUS_AWAITING, STATUS_DONE, STATUS_FAILED):
        return driver_status
    return COMPUTING


def _view(record: dict) -> dict:
    driver = record["driver"]
    status = _service_status(driver["status"])
    records = driver["records"]
    current = records[-1] if records else None
    history = []
    previous_counters: dict[str, int] = {}
    for rec in records:
        delta = {key: value - previous_counters.get(key, 0)
                 for key, value in rec["counters"].items()}
        previous_counters = rec["counters"]
        history.append({
            "iteration": rec["iteration"],
            "diagnoses": rec["diagnoses"],
            "diagnoses_formatted": [format_component_set(d) for d in rec["diagnoses"]],
            "probabilities": rec.get("probabilities"),
            "proposed": rec["proposed"],
            "outcome": rec["outcome"],
            "d_check": rec["d_check"],
            "d_times": rec["d_times"],
            "d_times_formatted": [format_component_set(d) for d in rec["d_times"]],
            "counters": rec["counters"],
            "counters_delta": delta,
        })
    return {
        "id": record["id"],
        "created_at": record["created_at"],
        "engine": record["config"]["engine"],
        "status": status,
        "iteration": driver["iteration"],
        "diagnoses": current["diagnoses"] if current else [],
        "diagnoses_formatted": [format_component_set(d) for d in current["diagnoses"]]
        if current else [],
        "probabilities": current.get("probabilities") if current else None,
        "pending_question": driver["pending"],
        "final": driver["final"],
        "final_formatted": (format_component_set(driver["final"])
                            if driver["final"] is not None else None),
        "counters": driver["counters"],
        "error": driver.get("error"),
        "history": history,
    }


def create_app(data_dir, static_dir=None, finder: ConflictFinder | None = None) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        resume_interrupted_sessions()
        yield

    app = FastAPI(title="hsdiag session service", lifespan=lifespan)
    store = SessionStore(Path(data_dir))
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()
    in_flight: set[str] = set()
    finder_factory = finder

    def lock_for(session_id: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(session_id, threading.Lock())

    def rebuild(record: dict) -> SessionDriver:
        dpi = parse_dpi(record["dpi"])
        config = SessionConfigModel(**record["config"]).to_config(dpi)
        return SessionDriver.from_snapshot(dpi, config, record["driver"],
                                           finder=finder_factory)

    def persist(record: dict, driver: SessionDriver) -> dict:
        record["driver"] = driver.snapshot()
        store.save(record)
        return record

    def advance_in_background(record: dict, driver: SessionDriver) -> None:
        session_id = record["id"]
        with locks_guard:
            if session_id in in_flight:
                return
            in_flight.add(session_id)

        def work():
            try:
                with lock_for(session_id):
                    try:
                        driver.advance()
                    except SessionError:
                        pass  # driver recorded the failure in its status
                    except Exception:
                        log.exception("engine invocation failed for %s", session_id)
                        driver.status = STATUS_FAILED
                        driver.error = "internal engine error"
                    persist(record, driver)
            finally:
                with locks_guard:
                    in_flight.discard(session_id)

        threading.Thread(target=work, daemon=True).start()

    def recover_if_stalled(record: dict) -> None:
        if _service_status(record["driver"]["status"]) != COMPUTING:
            return
        with locks_guard:
            if record["id"] in in_flight:
                return
        advance_in_background(record, rebuild(record))

    def resume_interrupted_sessions() -> None:
        for session_id in store.ids():
            try:
                recover_if_stalled(store.load(session_id))
            except Exception:
                log.exception("could not resume session %s", session_id)

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        try:
            dpi = parse_dpi(body.dpi)
            validate_dpi(dpi)
        except (DpiError, ParseError) as exc:
            raise ApiError(400, "invalid_dpi", str(exc)) from exc
        if not has_fault(dpi):
            raise ApiError(400, "invalid_dpi",
                           "nothing to diagnose: the empty set is already a diagnosis")
        config = body.config.to_config(dpi)
        driver = SessionDriver(dpi, config, finder=finder_factory)
        record = {
            "id": uuid.uuid4().hex[:12],
            "created_at": time.time(),
            "dpi": body.dpi,
            "config": body.config.model_dump(),
            "answers": {},
            "driver": driver.snapshot(),
        }
        with lock_for(record["id"]):
            store.save(record)
        advance_in_background(record, driver)
        return _view(record)

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        out = []
        for session_id in store.ids():
            record = store.load(session_id)
            view = _view(record)
            out.append({
                "id": view["id"],
                "created_at": view["created_at"],
                "engine": view["engine"],
                "status": view["status"],
                "iteration": view["iteration"],
                "final_formatted": view["final_formatted"],
            })
        return out

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        record = store.load(session_id)
        recover_if_stalled(record)
        return _view(store.load(session_id))

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str) -> dict:
        record = store.load(session_id)
        return {"id": session_id, "records": record["driver"]["records"]}

    @app.post("/sessions/{session_id}/answer")
    def submit_answer(session_id: str, body: AnswerRequest) -> dict:
        with lock_for(session_id):
            record = store.load(session_id)
            if body.idempotency_key in record["answers"]:
                return _view(record)
            status = _service_status(record["driver"]["status"])
            if status != STATUS_AWAITING:
                raise ApiError(409, "conflict",
                               f"session is {status}, not awaiting an answer")
            driver = rebuild(record)
            try:
                driver.apply_answer(body.outcome)
            except OracleContradictionError:
                pass  # recorded as failed in the driver status
            record["answers"][body.idempotency_key] = driver.iteration
            record = persist(record, driver)
        if driver.status not in (STATUS_DONE, STATUS_FAILED):
            advance_in_background(record, driver)
        return _view(record)

    @app.get("/golden-example")
    def golden_example() -> dict:
        return {
            "dpi": golden_dpi_text(),
            "config": {
                "engine": "dynamic",
                "ld": 5,
                "order": "bfs",
                "question_script": [to_text(m.sentence) for m in golden_measurements()],
            },
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
