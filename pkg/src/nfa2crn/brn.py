"""Reaction networks with deterministic mass-action semantics.

A network is a list of species plus a list of reactions; each reaction carries
a reactant vector, a product vector, and a rate that is either a positive
constant or a strictly positive continuous function of time.  The drift of the
induced ODE system is the rate-weighted sum of net-effect vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "SPECIES_KINDS",
    "INPUT_KINDS",
    "Species",
    "RateLaw",
    "ConstantRate",
    "OffsetRate",
    "SinusoidRate",
    "PiecewiseLinearRate",
    "Reaction",
    "Brn",
    "ConcState",
    "net_effect",
    "catalysts",
    "reaction_rate",
    "vector_field",
    "input_species_catalytic",
]

SPECIES_KINDS = (
    "state",
    "portal",
    "dual-state",
    "dual-portal",
    "input-symbol",
    "input-reset",
    "input-copy",
    "plain",
)
INPUT_KINDS = frozenset({"input-symbol", "input-reset", "input-copy"})


@dataclass(frozen=True)
class Species:
    name: str
    kind: str = "plain"

    def __post_init__(self):
        if self.kind not in SPECIES_KINDS:
            raise ValueError(f"unknown species kind {self.kind!r}")

    @property
    def is_input(self) -> bool:
        return self.kind in INPUT_KINDS


class RateLaw:
    """Rate coefficient of a reaction, evaluable at any time >= 0."""

    nominal: float

    def value(self, t):
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    def to_json_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantRate(RateLaw):
    nominal: float

    def __post_init__(self):
        if not self.nominal > 0:
            raise ValueError("rate constant must be positive")

    def value(self, t):
        return self.nominal

    @property
    def is_constant(self) -> bool:
        return True

    def to_json_dict(self) -> dict:
        return {"type": "constant", "k": self.nominal}


@dataclass(frozen=True)
class OffsetRate(RateLaw):
    """k + offset, held constant in time (a band-edge adversary)."""

    nominal: float
    offset: float

    def __post_init__(self):
        if not self.nominal + self.offset > 0:
            raise ValueError("offset rate must stay positive")

    def value(self, t):
        return self.nominal + self.offset

    def to_json_dict(self) -> dict:
        return {"type": "offset", "k": self.nominal, "offset": self.offset}


@dataclass(frozen=True)
class SinusoidRate(RateLaw):
    """k + amplitude * sin(omega * t + phase)."""

    nominal: float
    amplitude: float
    omega: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.nominal - abs(self.amplitude) > 0:
            raise ValueError("sinusoid rate must stay positive")

    def value(self, t):
        return self.nominal + self.amplitude * np.sin(self.omega * t + self.phase)

    def to_json_dict(self) -> dict:
        return {
            "type": "sinusoid",
            "k": self.nominal,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class PiecewiseLinearRate(RateLaw):
    """k + interp(t) over an offset table, flat beyond the last knot."""

    nominal: float
    times: tuple[float, ...]
    offsets: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.offsets) or len(self.times) < 2:
            raise ValueError("need matching times/offsets with at least two knots")
        if any(t2 <= t1 for t1, t2 in zip(self.times, self.times[1:])):
            raise ValueError("knot times must be strictly increasing")
        if not self.nominal + min(self.offsets) > 0:
            raise ValueError("piecewise rate must stay positive")

    def value(self, t):
        return self.nominal + np.interp(t, self.times, self.offsets)

    @property
    def is_constant(self) -> bool:
        return False

    def to_json_dict(self) -> dict:
        return {
            "type": "piecewise",
            "k": self.nominal,
            "times": list(self.times),
            "offsets": list(self.offsets),
        }


def rate_law_from_json(data: Mapping) -> RateLaw:
    kind = data["type"]
    if kind == "constant":
        return ConstantRate(data["k"])
    if kind == "offset":
        return OffsetRate(data["k"], data["offset"])
    if kind == "sinusoid":
        return SinusoidRate(data["k"], data["amplitude"], data["omega"], data.get("phase", 0.0))
    if kind == "piecewise":
        return PiecewiseLinearRate(data["k"], tuple(data["times"]), tuple(data["offsets"]))
    raise ValueError(f"unknown rate law type {kind!r}")


def _as_count_map(m: Mapping[str, int]) -> dict[str, int]:
    out = {}
    for name, count in m.items():
        c = int(count)
        if c < 0:
            raise ValueError("stoichiometric counts must be nonnegative")
        if c > 0:
            out[name] = c
    return out


@dataclass(frozen=True)
class Reaction:
    """reactants -> products with a constant or time-varying rate coefficient.

    The net effect must be nonzero: a reaction that changes nothing is
    rejected at construction.
    """

    reactants: Mapping[str, int]
    products: Mapping[str, int]
    rate: RateLaw

    def __post_init__(self):
        object.__setattr__(self, "reactants", _as_count_map(self.reactants))
        object.__setattr__(self, "products", _as_count_map(self.products))
        if self.reactants == self.products:
            raise ValueError("reaction must have a nonzero net effect")

    @classmethod
    def with_constant_rate(cls, reactants, products, k: float) -> "Reaction":
        return cls(reactants, products, ConstantRate(float(k)))

    @property
    def species_names(self) -> set[str]:
        return set(self.reactants) | set(self.products)

    def k(self, t=0.0) -> float:
        return float(self.rate.value(t))

    def pretty(self, rate_label: str | None = None) -> str:
        def side(counts: Mapping[str, int]) -> str:
            if not counts:
                return "0"
            return " + ".join(
                (f"{c}{name}" if c > 1 else name) for name, c in sorted(counts.items())
            )

        label = rate_label if rate_label is not None else f"{self.rate.value(0.0):g}"
        return f"{side(self.reactants)} ->{{{label}}} {side(self.products)}"

    def to_json_dict(self) -> dict:
        out = {
            "reactants": dict(sorted(self.reactants.items())),
            "products": dict(sorted(self.products.items())),
        }
        if self.rate.is_constant:
            out["k"] = self.rate.nominal
        else:
            out["rate"] = self.rate.to_json_dict()
        return out


def net_effect(rxn: Reaction) -> dict[str, int]:
    """Product counts minus reactant counts, as a sparse map (zero entries dropped)."""
    out: dict[str, int] = {}
    for name in rxn.species_names:
        d = rxn.products.get(name, 0) - rxn.reactants.get(name, 0)
        if d:
            out[name] = d
    return out


def catalysts(rxn: Reaction) -> set[str]:
    """Species consumed and produced in equal nonzero counts."""
    return {
        name
        for name in rxn.species_names
        if rxn.reactants.get(name, 0) == rxn.products.get(name, 0) > 0
    }


@dataclass(frozen=True)
class Brn:
    """A reaction network: ordered species plus reactions over them."""

    species: tuple[Species, ...]
    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError("species names must be unique")
        declared = set(names)
        for rxn in self.reactions:
            missing = rxn.species_names - declared
            if missing:
                raise ValueError(f"reaction mentions undeclared species {sorted(missing)[0]!r}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def species_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    @property
    def time_dependent(self) -> bool:
        return any(not r.rate.is_constant for r in self.reactions)

    def index_of(self, name: str) -> int:
        return self._index[name]

    def input_species(self) -> tuple[Species, ...]:
        return tuple(s for s in self.species if s.is_input)

    def pretty(self, rate_labels: Sequence[str] | None = None) -> str:
        labels = rate_labels if rate_labels is not None else [None] * len(self.reactions)
        return "\n".join(r.pretty(lbl) for r, lbl in zip(self.reactions, labels))

    def to_json_dict(self) -> dict:
        return {
            "species": [{"name": s.name, "kind": s.kind} for s in self.species],
            "reactions": [r.to_json_dict() for r in self.reactions],
            "time_dependent": self.time_dependent,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Brn":
        species = tuple(Species(s["name"], s.get("kind", "plain")) for s in data["species"])
        reactions = []
        for r in data["reactions"]:
            if "rate" in r:
                rate = rate_law_from_json(r["rate"])
            else:
                rate = ConstantRate(float(r["k"]))
            reactions.append(Reaction(r["reactants"], r["products"], rate))
        return cls(species, tuple(reactions))

    def dumps(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def loads(cls, text: str) -> "Brn":
        return cls.from_json_dict(json.loads(text))


@dataclass
class ConcState:
    """Concentration vector indexed consistently with a network's species order."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.names),):
            raise ValueError("state vector length must match species count")
        if np.any(self.values < 0):
            raise ValueError("concentrations must be nonnegative")
        self._index = {n: i for i, n in enumerate(self.names)}

    def __getitem__(self, name: str) -> float:
        return float(self.values[self._index[name]])

    def replace(self, **updates: float) -> "ConcState":
        vals = self.values.copy()
        for name, v in updates.items():
            vals[self._index[name]] = v
        return ConcState(self.names, vals)

    def copy(self) -> "ConcState":
        return ConcState(self.names, self.values.copy())

    def to_json_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.values)}


def reaction_rate(brn: Brn, rxn: Reaction, state, t: float = 0.0) -> float:
    """Mass-action rate: coefficient times the product of reactant powers."""
    x = state.values if isinstance(state, ConcState) else np.asarray(state, dtype=float)
    prod = 1.0
    for name, count in rxn.reactants.items():
        prod *= float(x[brn.index_of(name)]) ** count
    return float(rxn.rate.value(t)) * prod


def vector_field(brn: Brn, state, t: float = 0.0) -> np.ndarray:
    """Drift of the mass-action ODE system at the given state and time."""
    x = state.values if isinstance(state, ConcState) else np.asarray(state, dtype=float)
    out = np.zeros(len(brn.species))
    for rxn in brn.reactions:
        r = reaction_rate(brn, rxn, x, t)
        for name, d in net_effect(rxn).items():
            out[brn.index_of(name)] += r * d
    return out


def input_species_catalytic(brn: Brn) -> bool:
    """True iff every input-kind species is a catalyst (or absent) in every reaction.

    This is the property that lets an external agency hold the input
    concentrations without the network fighting back.
    """
    inputs = {s.name for s in brn.input_species()}
    for rxn in brn.reactions:
        for name in inputs:
            if rxn.reactants.get(name, 0) != rxn.products.get(name, 0):
                return False
    return True
