"""Access to the bundled golden scenario: the five-component example problem,
its recorded measurement script, and the conflict script that pins which
minimal conflict the finder reports when several exist.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .conflicts import ScriptedConflictFinder
from .dpi import DPI, Measurement, parse_dpi
from .logic import Formula
from .sequential import parse_measurement_script

GOLDEN_DPI = "golden.dpi"
GOLDEN_SCRIPT = "golden.script.json"
GOLDEN_CONFLICTS = "golden.conflicts.json"


def data_text(name: str) -> str:
    return resources.files("hsdiag").joinpath("data", name).read_text(encoding="utf-8")


def data_path(name: str) -> Path:
    return Path(str(resources.files("hsdiag").joinpath("data", name)))


def golden_dpi() -> DPI:
    return parse_dpi(data_text(GOLDEN_DPI))


def golden_dpi_text() -> str:
    return data_text(GOLDEN_DPI)


def golden_measurements() -> list[Measurement]:
    return parse_measurement_script(data_text(GOLDEN_SCRIPT))


def golden_question_script() -> tuple[Formula, ...]:
    return tuple(m.sentence for m in golden_measurements())


def golden_conflict_finder() -> ScriptedConflictFinder:
    return ScriptedConflictFinder.from_json(data_text(GOLDEN_CONFLICTS))
