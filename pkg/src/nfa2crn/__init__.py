"""Compile automata to mass-action reaction networks and verify them numerically."""

__version__ = "0.1.0"

from .analysis import (
    AmParams,
    EquilibriumSet,
    ParameterSet,
    am_equilibria,
    am_travel_time,
    check_constraints,
    copy_solution,
    phase_bounds,
    plan_parameters,
)
from .brn import Brn, ConcState, Reaction, Species, catalysts, net_effect, reaction_rate, vector_field
from .nfa import Nfa, accepts, extended_transition, load_nfa, parse_nfa
from .perturb import ObservationScheme, PerturbationProfile, observe, perturb_initial, perturb_rates
from .pipeline import RunManifest, run_end_to_end
from .signals import InputSignal, SignalSpec, encode, validate
from .simulate import Decision, SimConfig, Trace, check_phi, decide, integrate
from .translate import TranslationOutput, translate, verify_catalyst_property
