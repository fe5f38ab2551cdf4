"""Random diagnosis-problem generation for benchmarks and property tests.

Generated problems mimic the implication shape of the bundled example: axioms
are implications from a small antecedent to one or two literals, with a single
negative test on a designated root variable. Candidates failing the validity
requirements (something must actually be faulty, and enough minimal diagnoses
must exist) are regenerated deterministically from the seed.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from .dpi import (
    DPI,
    brute_force_minimal_diagnoses,
    has_fault,
    validate_dpi,
)
from .logic import Formula, Implies, Not, Or, Var


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RandomDpiSpec:
    n_axioms: int
    n_vars: int
    seed: int
    min_diagnoses: int = 2
    check_cap: int = 12   # above this, skip the brute-force diagnosis-count check
    max_attempts: int = 500


def _variable_names(n: int) -> list[str]:
    letters = string.ascii_uppercase
    names = [letters[i] for i in range(min(n, len(letters)))]
    names += [f"V{i}" for i in range(len(letters), n)]
    return names


def _literal(rng: random.Random, name: str) -> Formula:
    return Var(name) if rng.random() < 0.5 else Not(Var(name))


def _random_axiom(rng: random.Random, names: list[str], root: str) -> Formula:
    antecedent = root if rng.random() < 0.6 else rng.choice(names)
    others = [n for n in names if n != antecedent] or names
    width = 1 if rng.random() < 0.7 else 2
    picks = rng.sample(others, k=min(width, len(others)))
    literals = [_literal(rng, p) for p in picks]
    rhs = literals[0] if len(literals) == 1 else Or(tuple(literals))
    return Implies(Var(antecedent), rhs)


def generate_dpi(spec: RandomDpiSpec) -> DPI:
    """Deterministic per seed; the returned problem passes validation and, when
    small enough to check, has at least `min_diagnoses` minimal diagnoses."""
    if spec.n_axioms <= 0:
        raise GenerationError("axiom count must be positive")
    if spec.n_vars < 2:
        raise GenerationError("need at least two variables")
    rng = random.Random(spec.seed)
    names = _variable_names(spec.n_vars)
    root = names[0]
    for _ in range(spec.max_attempts):
        axioms = tuple(_random_axiom(rng, names, root) for _ in range(spec.n_axioms))
        dpi = DPI(axioms=axioms, negative=(Not(Var(root)),))
        try:
            validate_dpi(dpi)
        except Exception:
            continue
        if not has_fault(dpi):
            continue
        if spec.n_axioms <= spec.check_cap and spec.min_diagnoses > 1:
            if len(brute_force_minimal_diagnoses(dpi)) < spec.min_diagnoses:
                continue
        return dpi
    raise GenerationError(
        f"no valid problem found in {spec.max_attempts} attempts (seed {spec.seed})")
