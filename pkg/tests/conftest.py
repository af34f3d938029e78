from pathlib import Path

import pytest

from nfa2crn.analysis import plan_parameters
from nfa2crn.nfa import load_nfa

DATA_DIR = Path(__file__).parent / "data"

# corpus-wide planning inputs: small enough state/rate perturbations that the
# constraint system is feasible up to d = 32 transitions
PLAN_EPS = 1e-5
PLAN_ETA = 0.05
PLAN_DELTA = 1e-3


@pytest.fixture(scope="session")
def example_nfa():
    return load_nfa(DATA_DIR / "second_to_last_one.nfa")


@pytest.fixture(scope="session")
def planned(example_nfa):
    result = plan_parameters(example_nfa.num_transitions, PLAN_EPS, PLAN_ETA, PLAN_DELTA)
    assert result.feasible, result.message
    return result.params
