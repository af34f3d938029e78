"""Compile an automaton into its mass-action reaction network.

For an automaton with q states, s symbols, and d transitions the network has
exactly 4q + s + 2 species and 5q + d reactions, organized in six families:

* reset:    X_r + Z_q -> X_r + Zb_q            (k3, one per state)
* compute:  X_a + Y_s + Zb_q -> X_a + Y_s + Z_q (k1, one per transition)
* copy up:  X_c + Z_q + Yb_q -> X_c + Z_q + Y_q (k2, one per state)
* copy down:X_c + Zb_q + Y_q -> X_c + Zb_q + Yb_q (k2, one per state)
* majority: 2 Y_q + Yb_q -> 3 Y_q               (k4, one per state)
*           2 Yb_q + Y_q -> 3 Yb_q              (k4, one per state)

Every input species occurs only as a catalyst, so an external signal can hold
its concentration.  The nominal initial state puts the initial states' Y at 1
(dual at 0), everything else low, and all portals empty (Z=0, Zb=1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .brn import Brn, ConcState, Reaction, Species, input_species_catalytic
from .nfa import Nfa

__all__ = [
    "RATE_LABELS",
    "TranslationOutput",
    "state_species_name",
    "dual_state_species_name",
    "portal_species_name",
    "dual_portal_species_name",
    "input_species_name",
    "RESET_SPECIES",
    "COPY_SPECIES",
    "translate",
    "verify_catalyst_property",
    "transitions_from_network",
]

RESET_SPECIES = "X_r"
COPY_SPECIES = "X_c"

RATE_LABELS = ("k1", "k2", "k3", "k4")


def state_species_name(q: str) -> str:
    return f"Y_{q}"


def dual_state_species_name(q: str) -> str:
    return f"Yb_{q}"


def portal_species_name(q: str) -> str:
    return f"Z_{q}"


def dual_portal_species_name(q: str) -> str:
    return f"Zb_{q}"


def input_species_name(symbol: str) -> str:
    """Species name carrying an input symbol.

    Symbols named ``r`` or ``c`` (or already carrying the escape prefix) are
    prefixed with ``sym_`` so they cannot collide with the reset/copy species.
    """
    if symbol in ("r", "c") or symbol.startswith("sym_"):
        return f"X_sym_{symbol}"
    return f"X_{symbol}"


@dataclass(frozen=True)
class TranslationOutput:
    """Compiled network plus its nominal initial state and bookkeeping."""

    nfa: Nfa
    brn: Brn
    initial: ConcState
    rates: dict[str, float]
    species_index: dict[tuple[str, str], str]
    rate_labels: tuple[str, ...]
    size_report: dict[str, int]

    def state_species(self, q: str) -> str:
        return self.species_index[("state", q)]

    def dual_state_species(self, q: str) -> str:
        return self.species_index[("dual-state", q)]

    def portal_species(self, q: str) -> str:
        return self.species_index[("portal", q)]

    def dual_portal_species(self, q: str) -> str:
        return self.species_index[("dual-portal", q)]

    def symbol_species(self, a: str) -> str:
        return self.species_index[("input", a)]

    def pretty(self) -> str:
        return self.brn.pretty(self.rate_labels)

    def to_json_dict(self) -> dict:
        return {
            "nfa": self.nfa.to_json_dict(),
            "brn": self.brn.to_json_dict(),
            "initial": self.initial.to_json_dict(),
            "rates": dict(self.rates),
            "species_index": {f"{kind}:{key}": name for (kind, key), name in self.species_index.items()},
            "size_report": dict(self.size_report),
        }

    def dumps(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_json_dict(), **kwargs)


def translate(nfa: Nfa, rates: Mapping[str, float]) -> TranslationOutput:
    """Compile ``nfa`` into its reaction network with the given rate constants.

    ``rates`` maps ``k1``..``k4`` to positive reals (compute, copy, reset,
    majority).  Raises ``ValueError`` on a missing or nonpositive rate.
    """
    ks = {}
    for label in RATE_LABELS:
        if label not in rates:
            raise ValueError(f"missing rate constant {label!r}")
        k = float(rates[label])
        if not k > 0:
            raise ValueError(f"rate constant {label} must be positive, got {k}")
        ks[label] = k
    k1, k2, k3, k4 = (ks[l] for l in RATE_LABELS)

    species: list[Species] = []
    index: dict[tuple[str, str], str] = {}
    for q in nfa.states:
        for kind, name in (
            ("state", state_species_name(q)),
            ("dual-state", dual_state_species_name(q)),
            ("portal", portal_species_name(q)),
            ("dual-portal", dual_portal_species_name(q)),
        ):
            species.append(Species(name, kind))
            index[(kind, q)] = name
    for a in nfa.alphabet:
        name = input_species_name(a)
        species.append(Species(name, "input-symbol"))
        index[("input", a)] = name
    species.append(Species(RESET_SPECIES, "input-reset"))
    species.append(Species(COPY_SPECIES, "input-copy"))
    index[("input-reset", "")] = RESET_SPECIES
    index[("input-copy", "")] = COPY_SPECIES

    reactions: list[Reaction] = []
    labels: list[str] = []

    def add(reactants, products, k, label):
        reactions.append(Reaction.with_constant_rate(reactants, products, k))
        labels.append(label)

    for q in nfa.states:
        z, zb = portal_species_name(q), dual_portal_species_name(q)
        add({RESET_SPECIES: 1, z: 1}, {RESET_SPECIES: 1, zb: 1}, k3, "k3")
    for src, sym, dst in nfa.sorted_transitions():
        xa = input_species_name(sym)
        ys = state_species_name(src)
        z, zb = portal_species_name(dst), dual_portal_species_name(dst)
        add({xa: 1, ys: 1, zb: 1}, {xa: 1, ys: 1, z: 1}, k1, "k1")
    for q in nfa.states:
        y, yb = state_species_name(q), dual_state_species_name(q)
        z = portal_species_name(q)
        add({COPY_SPECIES: 1, z: 1, yb: 1}, {COPY_SPECIES: 1, z: 1, y: 1}, k2, "k2")
    for q in nfa.states:
        y, yb = state_species_name(q), dual_state_species_name(q)
        zb = dual_portal_species_name(q)
        add({COPY_SPECIES: 1, zb: 1, y: 1}, {COPY_SPECIES: 1, zb: 1, yb: 1}, k2, "k2")
    for q in nfa.states:
        y, yb = state_species_name(q), dual_state_species_name(q)
        add({y: 2, yb: 1}, {y: 3}, k4, "k4")
    for q in nfa.states:
        y, yb = state_species_name(q), dual_state_species_name(q)
        add({yb: 2, y: 1}, {yb: 3}, k4, "k4")

    brn = Brn(tuple(species), tuple(reactions))

    values = np.zeros(len(species))
    name_to_i = {s.name: i for i, s in enumerate(species)}
    for q in nfa.states:
        high = q in nfa.initial
        values[name_to_i[state_species_name(q)]] = 1.0 if high else 0.0
        values[name_to_i[dual_state_species_name(q)]] = 0.0 if high else 1.0
        values[name_to_i[portal_species_name(q)]] = 0.0
        values[name_to_i[dual_portal_species_name(q)]] = 1.0
    initial = ConcState(brn.species_names, values)

    q_n, s_n, d_n = nfa.num_states, nfa.num_symbols, nfa.num_transitions
    size_report = {
        "species": 4 * q_n + s_n + 2,
        "reactions": 5 * q_n + d_n,
        "dna_strands": 28 * q_n + 4 * d_n + 2 * s_n + 6,
    }
    assert size_report["species"] == len(species)
    assert size_report["reactions"] == len(reactions)

    return TranslationOutput(
        nfa=nfa,
        brn=brn,
        initial=initial,
        rates=ks,
        species_index=index,
        rate_labels=tuple(labels),
        size_report=size_report,
    )


def verify_catalyst_property(out: TranslationOutput | Brn) -> bool:
    """Check that input species never change count across any reaction."""
    brn = out.brn if isinstance(out, TranslationOutput) else out
    return input_species_catalytic(brn)


def transitions_from_network(out: TranslationOutput) -> frozenset[tuple[str, str, str]]:
    """Recover the transition relation from the compute-family reactions.

    Inverse of the compiler on the transition relation; used as a round-trip
    check.
    """
    nfa = out.nfa
    sym_of = {input_species_name(a): a for a in nfa.alphabet}
    state_of = {state_species_name(q): q for q in nfa.states}
    portal_of = {portal_species_name(q): q for q in nfa.states}
    found = set()
    for rxn, label in zip(out.brn.reactions, out.rate_labels):
        if label != "k1":
            continue
        src = sym = dst = None
        for name in rxn.reactants:
            if name in sym_of:
                sym = sym_of[name]
            elif name in state_of:
                src = state_of[name]
        for name in rxn.products:
            if name in portal_of:
                dst = portal_of[name]
        if src is None or sym is None or dst is None:
            raise ValueError("compute reaction does not have the expected shape")
        found.add((src, sym, dst))
    return frozenset(found)
