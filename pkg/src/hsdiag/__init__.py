"""Sequential model-based diagnosis workbench.

Computes minimal diagnoses for propositional diagnosis problems with either a
stateless rebuilt-per-iteration hitting-set tree or a stateful search that
adapts one tree across measurement acquisitions, and wraps both in a
sequential measurement loop, a CLI, and an interactive session service.
"""

from .conflicts import (
    ConflictFinder,
    ConflictScriptError,
    Counters,
    QuickXplainFinder,
    ScriptedConflictFinder,
    find_min_conflict,
    quickxplain,
)
from .dpi import (
    DPI,
    Acquired,
    ComponentSet,
    DpiError,
    DpiFormatError,
    DpiValidationError,
    Measurement,
    add_measurement,
    brute_force_minimal_conflicts,
    brute_force_minimal_diagnoses,
    format_component_set,
    format_dpi,
    is_conflict,
    is_diagnosis,
    is_hitting_set,
    load_dpi,
    parse_dpi,
    validate_dpi,
)
from .dynamichs import (
    DynNode,
    SearchState,
    dynamic_hs,
    enable_debug_checks,
    initial_state,
    prune,
    redundant,
    update_tree,
)
from .hstree import run_hs_tree
from .logic import (
    Formula,
    ParseError,
    entails,
    is_consistent,
    parse_formula,
    to_text,
)
from .ordering import QueueOrder, node_probability
from .sequential import (
    InteractiveOracle,
    Oracle,
    ScriptedOracle,
    SessionConfig,
    SessionDriver,
    SessionResult,
    SimulatedOracle,
    assign_diags_ok_nok,
    compute_best_meas_point,
    run_session,
)

__version__ = "0.1.0"
