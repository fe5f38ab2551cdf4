from __future__ import annotations

import pytest

from hsdiag.dpi import brute_force_minimal_diagnoses, has_fault, validate_dpi
from hsdiag.generate import GenerationError, RandomDpiSpec, generate_dpi


def test_generation_is_deterministic_per_seed():
    spec = RandomDpiSpec(n_axioms=8, n_vars=5, seed=1)
    assert generate_dpi(spec) == generate_dpi(spec)
    other = generate_dpi(RandomDpiSpec(n_axioms=8, n_vars=5, seed=2))
    assert other != generate_dpi(spec)


def test_generated_problems_are_valid_and_solvable():
    for seed in range(12):
        dpi = generate_dpi(RandomDpiSpec(n_axioms=7, n_vars=4, seed=seed))
        validate_dpi(dpi)
        assert has_fault(dpi)
        assert len(brute_force_minimal_diagnoses(dpi)) >= 2


def test_generation_rejects_bad_specs():
    with pytest.raises(GenerationError):
        generate_dpi(RandomDpiSpec(n_axioms=0, n_vars=4, seed=1))
    with pytest.raises(GenerationError):
        generate_dpi(RandomDpiSpec(n_axioms=4, n_vars=1, seed=1))


def test_generation_attempt_cap():
    # an impossible demand burns through the attempt budget and reports it
    with pytest.raises(GenerationError):
        generate_dpi(RandomDpiSpec(n_axioms=2, n_vars=2, seed=3,
                                   min_diagnoses=50, max_attempts=25))
