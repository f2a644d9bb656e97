"""Finite posets, lattice tables and the stochastic order on distributions.

Distributions on a finite poset X are compared by the usual stochastic order:
``mu`` dominates ``nu`` when every bounded nondecreasing test function has a
weakly larger integral under ``mu``.  Three equivalent tests are provided,
a monotone coupling found by max-flow, enumeration of upper sets, and
enumeration of 0/1 monotone functions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .numerics import FlowNetwork, max_flow

#: enumeration methods are exponential in |X|
MAX_ENUM_ELEMENTS = 12
COUPLING_TOL = 1e-9


@dataclass(frozen=True)
class FinitePoset:
    """A finite relation given by a boolean matrix, ``leq[i, j]`` iff i <= j."""

    elements: tuple
    leq: np.ndarray

    def __post_init__(self):
        leq = np.array(self.leq, dtype=bool)
        n = len(self.elements)
        if leq.shape != (n, n):
            raise ValueError(f"leq must be {n}x{n}, got {leq.shape}")
        leq.setflags(write=False)
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "leq", leq)

    @classmethod
    def from_pairs(cls, elements: Sequence[Hashable], pairs: Iterable[tuple]) -> "FinitePoset":
        """Build from explicit (a, b) pairs meaning a <= b.  Nothing is closed."""
        index = {e: i for i, e in enumerate(elements)}
        leq = np.zeros((len(elements), len(elements)), dtype=bool)
        for a, b in pairs:
            leq[index[a], index[b]] = True
        return cls(tuple(elements), leq)

    @classmethod
    def chain(cls, elements: Sequence[Hashable]) -> "FinitePoset":
        n = len(elements)
        return cls(tuple(elements), np.triu(np.ones((n, n), dtype=bool)))

    @property
    def n(self) -> int:
        return len(self.elements)

    def pairs(self) -> list[tuple]:
        return [(self.elements[i], self.elements[j])
                for i, j in zip(*np.nonzero(self.leq))]

    def order_violations(self) -> list[str]:
        """Every failure of reflexivity, antisymmetry and transitivity."""
        leq = self.leq
        out = []
        for i in range(self.n):
            if not leq[i, i]:
                out.append(f"not reflexive at {self.elements[i]!r}")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if leq[i, j] and leq[j, i]:
                    out.append(f"not antisymmetric at ({self.elements[i]!r}, {self.elements[j]!r})")
        # i<=j and j<=k but not i<=k
        bad = (leq.astype(np.int64) @ leq.astype(np.int64) > 0) & ~leq
        for i, k in zip(*np.nonzero(bad)):
            j = int(np.nonzero(leq[i] & leq[:, k])[0][0])
            out.append("not transitive at "
                       f"({self.elements[i]!r}, {self.elements[j]!r}, {self.elements[k]!r})")
        return out

    def is_partial_order(self) -> bool:
        return not self.order_violations()

    def is_upper_set(self, members) -> bool:
        members = np.asarray(members, dtype=bool)
        # some x in U with x <= y and y outside U
        return not np.any(self.leq[members][:, ~members])


@dataclass(frozen=True)
class LatticeCheck:
    is_lattice: bool
    join_table: np.ndarray | None
    meet_table: np.ndarray | None
    witness: tuple | None = None


def _least(leq: np.ndarray, candidates: np.ndarray) -> int | None:
    """Index of the least element among ``candidates`` (indices), if any."""
    for k in candidates:
        if np.all(leq[k, candidates]):
            return int(k)
    return None


def check_lattice(p: FinitePoset) -> LatticeCheck:
    """Join and meet tables of ``p`` (by index), or a pair lacking one of them."""
    n = p.n
    leq = p.leq
    join = np.full((n, n), -1, dtype=np.int64)
    meet = np.full((n, n), -1, dtype=np.int64)
    for i in range(n):
        for j in range(i, n):
            ub = np.nonzero(leq[i] & leq[j])[0]
            lub = _least(leq, ub)
            lb = np.nonzero(leq[:, i] & leq[:, j])[0]
            glb = _least(leq.T, lb)
            if lub is None or glb is None:
                return LatticeCheck(False, None, None, (p.elements[i], p.elements[j]))
            join[i, j] = join[j, i] = lub
            meet[i, j] = meet[j, i] = glb
    join.setflags(write=False)
    meet.setflags(write=False)
    return LatticeCheck(True, join, meet, None)


# ---------------------------------------------------------------------------
# stochastic order

@dataclass(frozen=True)
class DominanceResult:
    """``verdict`` is True iff mu dominates nu.

    ``witness`` is the coupling matrix (rows: mu atoms, columns: nu atoms)
    for the coupling method, and a violating upper set (boolean mask) for the
    enumeration methods when the verdict is False.
    """

    verdict: bool
    witness: Any = None
    method: str = "coupling"


def _check_distribution(p: FinitePoset, dist) -> np.ndarray:
    d = np.asarray(dist, dtype=float)
    if d.shape != (p.n,):
        raise ValueError(f"distribution has shape {d.shape}, expected ({p.n},)")
    if np.any(d < -1e-12) or abs(d.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    return d


def monotone_coupling(p: FinitePoset, mu, nu) -> tuple[float, np.ndarray]:
    """Max-flow through the graph of >=: source -> x (mu) -> y <= x -> sink (nu).

    Returns the flow value and the coupling matrix ``lam[x, y]``.
    """
    n = p.n
    src, snk = 2 * n, 2 * n + 1
    arcs = []
    for x in range(n):
        arcs.append((src, x, float(mu[x])))
    pairs = []
    for x in range(n):
        for y in range(n):
            if p.leq[y, x]:
                pairs.append((x, y))
                arcs.append((x, n + y, 1.0))
    for y in range(n):
        arcs.append((n + y, snk, float(nu[y])))
    value, flow = max_flow(FlowNetwork(2 * n + 2, tuple(arcs), src, snk))
    lam = np.zeros((n, n))
    offset = n
    for k, (x, y) in enumerate(pairs):
        lam[x, y] = flow[offset + k]
    return value, lam


def upper_sets(p: FinitePoset):
    """Yield every upper set of ``p`` as a boolean mask (filtering all subsets)."""
    if p.n > MAX_ENUM_ELEMENTS:
        raise ValueError(f"upper-set enumeration capped at {MAX_ENUM_ELEMENTS} elements")
    for bits in range(1 << p.n):
        mask = np.array([(bits >> i) & 1 for i in range(p.n)], dtype=bool)
        if p.is_upper_set(mask):
            yield mask


def monotone_indicators(p: FinitePoset):
    """Yield every nondecreasing g: X -> {0, 1} as an int vector.

    Built by backtracking along a linear extension, so no up-closure test is
    performed; this is deliberately a different route from :func:`upper_sets`.
    """
    if p.n > MAX_ENUM_ELEMENTS:
        raise ValueError(f"monotone-function enumeration capped at {MAX_ENUM_ELEMENTS} elements")
    # linear extension: sort by number of elements below
    order = sorted(range(p.n), key=lambda i: (int(p.leq[:, i].sum()), i))
    g = np.zeros(p.n, dtype=np.int64)

    def rec(k):
        if k == p.n:
            yield g.copy()
            return
        x = order[k]
        below = [y for y in order[:k] if p.leq[y, x] and y != x]
        lo = max((g[y] for y in below), default=0)
        for val in range(lo, 2):
            g[x] = val
            yield from rec(k + 1)
        g[x] = 0

    yield from rec(0)


def stochastic_leq(p: FinitePoset, mu, nu, method: str = "coupling",
                   tol: float = COUPLING_TOL) -> DominanceResult:
    """Decide whether ``mu`` stochastically dominates ``nu`` on ``p``.

    The name follows the order's dual reading: the result is True iff
    ``nu <= mu``.
    """
    mu = _check_distribution(p, mu)
    nu = _check_distribution(p, nu)
    if method == "coupling":
        value, lam = monotone_coupling(p, mu, nu)
        ok = value >= 1.0 - tol
        return DominanceResult(bool(ok), lam, method)
    if method == "upper_sets":
        for mask in upper_sets(p):
            if mu[mask].sum() < nu[mask].sum() - tol:
                return DominanceResult(False, mask, method)
        return DominanceResult(True, None, method)
    if method == "monotone_functions":
        for g in monotone_indicators(p):
            if float(g @ mu) < float(g @ nu) - tol:
                return DominanceResult(False, g.astype(bool), method)
        return DominanceResult(True, None, method)
    raise ValueError(f"unknown method {method!r}")


def product_order_leq(nu_c, p: FinitePoset, mu, lam, method: str = "coupling",
                      tol: float = COUPLING_TOL) -> bool:
    """Stochastic order on distributions over C x X with C-marginal ``nu_c``.

    (c, x) >= (c', x') iff c = c' and x >= x', so the comparison splits into
    one comparison of conditionals per characteristic with positive mass.
    ``mu`` and ``lam`` are arrays of shape (|C|, |X|).  Returns True iff
    ``mu`` dominates ``lam``.
    """
    nu_c = np.asarray(nu_c, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    for name, d in (("mu", mu), ("nu", lam)):
        if d.shape != (len(nu_c), p.n):
            raise ValueError(f"{name} has shape {d.shape}")
        if np.max(np.abs(d.sum(axis=1) - nu_c)) > tol:
            raise ValueError(f"{name} does not have the characteristic marginal")
    for c, mass in enumerate(nu_c):
        if mass <= 0:
            continue
        res = stochastic_leq(p, mu[c] / mass, lam[c] / mass, method=method, tol=tol / mass)
        if not res.verdict:
            return False
    return True
