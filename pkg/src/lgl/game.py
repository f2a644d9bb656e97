"""Finite large distributional Bayesian games.

A game consists of a finite characteristic space ``C`` with population
weights ``nu``, a finite action lattice ``A`` with availability sets
``A(c)``, states of nature ``S``, a finite type space ``(T, sigma, tau)`` in
which ``tau(t)`` is a weighted list of (characteristic, belief id) atoms,
a registry of beliefs (probability vectors over ``T``), and a payoff oracle
``v(c, a, s, mu)`` where ``mu`` is an aggregate profile in ``Delta_nu(C x A)``.

Everything is indexed by integers internally; labels only matter for I/O.
Instances are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import UnavailableAction
from .order import FinitePoset, check_lattice

STRUCT_TOL = 1e-12
DECISION_TOL = 1e-9


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CharacteristicSpace:
    labels: tuple
    nu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "nu", _readonly(self.nu))

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class ActionLattice:
    """Actions with an explicit order ``leq[i, j]`` (i <= j) and lattice tables.

    The tables are derived from ``leq`` unless given; a non-lattice order is
    representable (``join_table`` is None) so that validation can report it.
    """

    actions: tuple
    leq: np.ndarray
    join_table: np.ndarray | None = None
    meet_table: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "leq", _readonly(self.leq, bool))
        if self.join_table is None or self.meet_table is None:
            check = check_lattice(self.poset) if self.poset.is_partial_order() else None
            if check is not None and check.is_lattice:
                object.__setattr__(self, "join_table", check.join_table)
                object.__setattr__(self, "meet_table", check.meet_table)
        else:
            object.__setattr__(self, "join_table", _readonly(self.join_table, np.int64))
            object.__setattr__(self, "meet_table", _readonly(self.meet_table, np.int64))

    @classmethod
    def chain(cls, actions: Sequence) -> "ActionLattice":
        n = len(actions)
        return cls(tuple(actions), np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def from_pairs(cls, actions: Sequence, pairs: Iterable[tuple], join=None, meet=None):
        p = FinitePoset.from_pairs(actions, pairs)
        return cls(p.elements, p.leq, join, meet)

    @cached_property
    def poset(self) -> FinitePoset:
        return FinitePoset(self.actions, self.leq)

    def __len__(self):
        return len(self.actions)

    @property
    def is_lattice(self) -> bool:
        return self.join_table is not None

    def le(self, a: int, b: int) -> bool:
        return bool(self.leq[a, b])

    def join(self, a: int, b: int) -> int:
        return int(self.join_table[a, b])

    def meet(self, a: int, b: int) -> int:
        return int(self.meet_table[a, b])

    def sup(self, items: Iterable[int]) -> int:
        items = list(items)
        out = items[0]
        for a in items[1:]:
            out = self.join(out, a)
        return out

    def inf(self, items: Iterable[int]) -> int:
        items = list(items)
        out = items[0]
        for a in items[1:]:
            out = self.meet(out, a)
        return out

    def table_violations(self) -> list[str]:
        """Disagreements between the stored join/meet tables and ``leq``."""
        if not self.is_lattice:
            return ["no join/meet tables"]
        ref = check_lattice(self.poset)
        if not ref.is_lattice:
            return [f"order is not a lattice: pair {ref.witness} lacks a join or meet"]
        out = []
        for i, j in zip(*np.nonzero(ref.join_table != self.join_table)):
            out.append(f"join({self.actions[i]!r}, {self.actions[j]!r}) is not the least upper bound")
        for i, j in zip(*np.nonzero(ref.meet_table != self.meet_table)):
            out.append(f"meet({self.actions[i]!r}, {self.actions[j]!r}) is not the greatest lower bound")
        return out


class TauAtom(NamedTuple):
    c: int
    belief: int
    weight: float


@dataclass(frozen=True)
class TypeSpace:
    """Worlds ``T``, states ``S`` (optionally numeric), ``sigma``, ``tau`` and beliefs.

    ``beliefs`` is the registry, a matrix with one probability vector over
    worlds per belief id.
    """

    worlds: tuple
    states: tuple
    sigma: np.ndarray
    tau: tuple
    beliefs: np.ndarray
    state_values: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "worlds", tuple(self.worlds))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "sigma", _readonly(self.sigma, np.int64))
        object.__setattr__(self, "tau", tuple(
            tuple(TauAtom(int(c), int(b), float(w)) for c, b, w in atoms) for atoms in self.tau))
        beliefs = np.array(self.beliefs, dtype=float).reshape(-1, len(self.worlds))
        beliefs.setflags(write=False)
        object.__setattr__(self, "beliefs", beliefs)
        if self.state_values is not None:
            object.__setattr__(self, "state_values", _readonly(self.state_values))

    @property
    def n_beliefs(self) -> int:
        return self.beliefs.shape[0]

    @cached_property
    def support(self) -> tuple:
        """World indices with positive mass, per belief id."""
        return tuple(tuple(int(t) for t in np.nonzero(row > 0)[0]) for row in self.beliefs)


@dataclass(frozen=True)
class PayoffOracle:
    """``v(c, a, s, mu)``.

    Linear mode: ``base[c, a, s] + sum(weights[c, a, s] * mu)`` with
    ``weights`` of shape (|C|, |A|, |S|, |C|, |A|).  Black-box mode calls
    ``evaluator(c, a, s, mu)`` with ``mu`` a (|C|, |A|) array.
    """

    mode: str
    base: np.ndarray | None = None
    weights: np.ndarray | None = None
    evaluator: Callable | None = None

    def __post_init__(self):
        if self.mode not in ("linear", "blackbox"):
            raise ValueError(f"unknown payoff mode {self.mode!r}")
        if self.mode == "linear":
            object.__setattr__(self, "base", _readonly(self.base))
            object.__setattr__(self, "weights", _readonly(self.weights))
        elif self.evaluator is None:
            raise ValueError("black-box payoff needs an evaluator")

    @property
    def linear(self) -> bool:
        return self.mode == "linear"

    def __call__(self, c: int, a: int, s: int, mu: np.ndarray) -> float:
        if self.linear:
            return float(self.base[c, a, s] + np.sum(self.weights[c, a, s] * mu))
        return float(self.evaluator(c, a, s, mu))


@dataclass(frozen=True)
class AggregateProfile:
    """Mass on (characteristic, action) pairs, an element of Delta_nu(C x A)."""

    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", _readonly(self.mass))

    @classmethod
    def from_dict(cls, g: "GameInstance", entries: Mapping[tuple[int, int], float]):
        mass = np.zeros((g.n_chars, g.n_actions))
        for (c, a), w in entries.items():
            mass[c, a] += w
        return cls(mass)

    def action_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=0)


@dataclass(frozen=True)
class GameInstance:
    characteristics: CharacteristicSpace
    lattice: ActionLattice
    availability: tuple  # per characteristic, sorted tuple of action indices
    types: TypeSpace
    payoff: PayoffOracle
    queries: tuple = ()
    name: str = "game"

    def __post_init__(self):
        object.__setattr__(self, "availability",
                           tuple(tuple(sorted(int(a) for a in s)) for s in self.availability))
        object.__setattr__(self, "queries", tuple(sorted({(int(c), int(b)) for c, b in self.queries})))

    @property
    def n_chars(self) -> int:
        return len(self.characteristics)

    @property
    def n_actions(self) -> int:
        return len(self.lattice)

    @property
    def n_states(self) -> int:
        return len(self.types.states)

    @property
    def n_worlds(self) -> int:
        return len(self.types.worlds)

    @cached_property
    def pairs(self) -> tuple:
        """The (characteristic, belief id) domain: tau supports plus registered queries."""
        seen = set(self.queries)
        for atoms in self.types.tau:
            for atom in atoms:
                seen.add((atom.c, atom.belief))
        return tuple(sorted(seen))

    @cached_property
    def pair_index(self) -> dict:
        return {p: k for k, p in enumerate(self.pairs)}

    @cached_property
    def available_mask(self) -> np.ndarray:
        mask = np.zeros((self.n_chars, self.n_actions), dtype=bool)
        for c, acts in enumerate(self.availability):
            mask[c, list(acts)] = True
        mask.setflags(write=False)
        return mask

    def with_queries(self, extra: Iterable[tuple[int, int]]) -> "GameInstance":
        return GameInstance(self.characteristics, self.lattice, self.availability, self.types,
                            self.payoff, tuple(self.queries) + tuple(extra), self.name)

    def char_index(self, label) -> int:
        return self.characteristics.labels.index(label)

    def action_index(self, label) -> int:
        return self.lattice.actions.index(label)


# ---------------------------------------------------------------------------
# validation

class Violation(NamedTuple):
    code: str
    location: str
    message: str


def _probability_issues(vec, tol=STRUCT_TOL) -> str | None:
    vec = np.asarray(vec, dtype=float)
    if not np.all(np.isfinite(vec)):
        return "non-finite entries"
    if np.any(vec < 0):
        return f"negative entry {vec.min():.3e}"
    if abs(vec.sum() - 1.0) > tol:
        return f"sums to {vec.sum():.15g}"
    return None


def validate_game(g: GameInstance, supermodular: bool = False) -> list[Violation]:
    """Every violated model constraint, with a location.  Empty means usable."""
    out: list[Violation] = []
    cs, lat, ts = g.characteristics, g.lattice, g.types

    if len(set(cs.labels)) != len(cs.labels):
        out.append(Violation("labels_not_distinct", "characteristics", "duplicate characteristic labels"))
    if len(cs.nu) != len(cs.labels):
        out.append(Violation("shape", "characteristics.nu", "nu and labels differ in length"))
    elif (msg := _probability_issues(cs.nu)):
        out.append(Violation("nu_not_distribution", "characteristics.nu", msg))

    if len(set(lat.actions)) != len(lat.actions):
        out.append(Violation("labels_not_distinct", "actions", "duplicate action labels"))
    order_issues = lat.poset.order_violations()
    for msg in order_issues:
        out.append(Violation("order", "actions.leq", msg))
    if not order_issues:
        for msg in lat.table_violations():
            out.append(Violation("lattice", "actions", msg))

    if len(g.availability) != g.n_chars:
        out.append(Violation("shape", "availability", "one action set per characteristic required"))
    for c, acts in enumerate(g.availability):
        loc = f"availability[{cs.labels[c] if c < g.n_chars else c}]"
        if not acts:
            out.append(Violation("availability_empty", loc, "empty action set"))
            continue
        if any(a < 0 or a >= g.n_actions for a in acts):
            out.append(Violation("unknown_action", loc, "action index out of range"))
            continue
        if supermodular and lat.is_lattice:
            for a in acts:
                for b in acts:
                    if lat.join(a, b) not in acts or lat.meet(a, b) not in acts:
                        out.append(Violation("availability_not_sublattice", loc,
                                             f"not closed under join/meet of {lat.actions[a]!r}, {lat.actions[b]!r}"))
                        break
                else:
                    continue
                break

    n_w = g.n_worlds
    if len(ts.sigma) != n_w or len(ts.tau) != n_w:
        out.append(Violation("shape", "type_space", "sigma and tau need one entry per world"))
    for t, s in enumerate(ts.sigma):
        if not 0 <= s < g.n_states:
            out.append(Violation("unknown_state", f"sigma[{ts.worlds[t]}]", "state index out of range"))
    if ts.state_values is not None and len(ts.state_values) != g.n_states:
        out.append(Violation("shape", "states.values", "one value per state required"))
    n_b = ts.n_beliefs
    for t, atoms in enumerate(ts.tau):
        loc = f"tau[{ts.worlds[t]}]" if t < n_w else f"tau[{t}]"
        weights = np.array([w for _, _, w in atoms])
        if (msg := _probability_issues(weights)):
            out.append(Violation("tau_not_distribution", loc, msg))
        marg = np.zeros(g.n_chars)
        for c, b, w in atoms:
            if not 0 <= c < g.n_chars:
                out.append(Violation("unknown_characteristic", loc, f"characteristic index {c}"))
                continue
            marg[c] += w
            if not 0 <= b < n_b:
                out.append(Violation("dangling_belief", loc, f"dangling belief {b}"))
        if len(cs.nu) == g.n_chars and np.max(np.abs(marg - cs.nu), initial=0.0) > STRUCT_TOL:
            out.append(Violation("marginal_mismatch", loc, f"marginal mismatch at {ts.worlds[t]}"))
    for b in range(n_b):
        if (msg := _probability_issues(ts.beliefs[b])):
            out.append(Violation("belief_not_distribution", f"beliefs[{b}]", msg))
    for c, b in g.queries:
        if not (0 <= c < g.n_chars and 0 <= b < n_b):
            out.append(Violation("dangling_belief", "queries", f"query ({c}, {b}) out of range"))

    pay = g.payoff
    if pay.linear:
        if pay.base.shape != (g.n_chars, g.n_actions, g.n_states):
            out.append(Violation("shape", "payoff.base", f"shape {pay.base.shape}"))
        if pay.weights.shape != (g.n_chars, g.n_actions, g.n_states, g.n_chars, g.n_actions):
            out.append(Violation("shape", "payoff.weights", f"shape {pay.weights.shape}"))
        if not (np.all(np.isfinite(pay.base)) and np.all(np.isfinite(pay.weights))):
            out.append(Violation("nonfinite_payoff", "payoff", "non-finite coefficients"))
    return out


def aggregate_issues(g: GameInstance, mu: AggregateProfile, tol: float = STRUCT_TOL) -> list[str]:
    """Why ``mu`` is not an action profile of ``g`` (empty list if it is)."""
    mass = mu.mass
    out = []
    if mass.shape != (g.n_chars, g.n_actions):
        return [f"shape {mass.shape}"]
    if np.any(mass < -tol):
        out.append("negative mass")
    if np.max(np.abs(mass.sum(axis=1) - g.characteristics.nu)) > tol:
        out.append("characteristic marginal differs from nu")
    if np.any((mass > tol) & ~g.available_mask):
        out.append("mass on unavailable actions")
    return out


# ---------------------------------------------------------------------------
# payoffs

def eval_payoff(g: GameInstance, c: int, a: int, s: int, mu) -> float:
    """v(c, a, s, mu); ``mu`` is an AggregateProfile or a (|C|, |A|) array."""
    if a not in g.availability[c]:
        raise UnavailableAction(f"action {g.lattice.actions[a]!r} not available to "
                                f"{g.characteristics.labels[c]!r}")
    mass = mu.mass if isinstance(mu, AggregateProfile) else np.asarray(mu, dtype=float)
    return g.payoff(c, a, s, mass)


def conjecture_payoff(g: GameInstance, c: int, a: int, conj: Sequence[tuple]) -> float:
    """Expected payoff under a finite conjecture [(weight, state, mu), ...]."""
    weights = np.array([w for w, _, _ in conj], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > DECISION_TOL:
        raise ValueError("conjecture weights must form a probability vector")
    return float(sum(w * eval_payoff(g, c, a, s, mu) for w, s, mu in conj))


def expected_payoffs(g: GameInstance, c: int, beta: int, aggregates: Mapping[int, np.ndarray]):
    """Expected payoff of each available action when world t carries ``aggregates[t]``."""
    row = g.types.beliefs[beta]
    out = {}
    for a in g.availability[c]:
        out[a] = float(sum(row[t] * g.payoff(c, a, int(g.types.sigma[t]), aggregates[t])
                           for t in g.types.support[beta]))
    return out
