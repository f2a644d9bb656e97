"""Symmetric pure profiles, Bayes-Nash verification and extremal equilibria.

In a supermodular game (available sets are sublattices, payoffs are
supermodular in the own action and have increasing differences against the
aggregate), iterating the largest best reply from the all-top profile
decreases monotonically to the largest equilibrium, which is also the join
of the rationalizable sets; the bottom run is symmetric.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AssumptionViolation, BrokenLatticeArgmax, UnsupportedMode
from .game import DECISION_TOL, GameInstance
from .icr import BehaviorMap, icr_solve

Profile = Mapping  # (c, belief id) -> action index


@dataclass
class SupermodularityReport:
    supermodular_ok: bool = True
    sublattice_ok: bool = True
    increasing_differences_ok: bool = True
    violations: list = field(default_factory=list)
    sampled: bool = False

    @property
    def ok(self) -> bool:
        return self.supermodular_ok and self.sublattice_ok and self.increasing_differences_ok

    def merge(self, other: "SupermodularityReport") -> "SupermodularityReport":
        return SupermodularityReport(
            self.supermodular_ok and other.supermodular_ok,
            self.sublattice_ok and other.sublattice_ok,
            self.increasing_differences_ok and other.increasing_differences_ok,
            self.violations + other.violations,
            self.sampled or other.sampled)


def _incomparable_pairs(g: GameInstance, acts):
    lat = g.lattice
    for a, b in itertools.combinations(sorted(acts), 2):
        if not lat.le(a, b) and not lat.le(b, a):
            yield a, b


def check_supermodular(g: GameInstance, samples: Sequence[np.ndarray] | None = None,
                       tol: float = 1e-12) -> SupermodularityReport:
    """Supermodularity in the own action and sublattice availability.

    Linear payoffs are checked on the base and on every weight column
    separately, which is sufficient for all aggregates.  Black-box payoffs
    are checked at the supplied aggregate ``samples``.
    """
    rep = SupermodularityReport()
    lat = g.lattice
    if not lat.is_lattice:
        rep.supermodular_ok = rep.sublattice_ok = False
        rep.violations.append(("lattice", "action order is not a lattice"))
        return rep
    for c, acts in enumerate(g.availability):
        for a, b in itertools.combinations(acts, 2):
            if lat.join(a, b) not in acts or lat.meet(a, b) not in acts:
                rep.sublattice_ok = False
                rep.violations.append(("sublattice", c, a, b))
    pay = g.payoff
    for c, acts in enumerate(g.availability):
        for a, b in _incomparable_pairs(g, acts):
            j, m = lat.join(a, b), lat.meet(a, b)
            if j not in acts or m not in acts:
                continue
            if pay.linear:
                gap_base = pay.base[c, j] + pay.base[c, m] - pay.base[c, a] - pay.base[c, b]
                for s in np.nonzero(gap_base < -tol)[0]:
                    rep.supermodular_ok = False
                    rep.violations.append(("supermodular", a, b, c, int(s), "base"))
                gap_w = pay.weights[c, j] + pay.weights[c, m] - pay.weights[c, a] - pay.weights[c, b]
                for s, c2, a2 in zip(*np.nonzero(gap_w < -tol)):
                    rep.supermodular_ok = False
                    rep.violations.append(("supermodular", a, b, c, int(s), (int(c2), int(a2))))
            else:
                rep.sampled = True
                for k, mu in enumerate(samples or ()):
                    for s in range(g.n_states):
                        gap = (pay(c, j, s, mu) + pay(c, m, s, mu) - pay(c, a, s, mu) - pay(c, b, s, mu))
                        if gap < -tol:
                            rep.supermodular_ok = False
                            rep.violations.append(("supermodular", a, b, c, s, f"sample {k}"))
    if not pay.linear:
        rep.sampled = True
    return rep


def check_increasing_differences(g: GameInstance, tol: float = 1e-12) -> SupermodularityReport:
    """Action differences of the weights must be nondecreasing in the others' action.

    For ``a`` above ``a'`` and each characteristic ``c2`` with positive mass,
    ``weights[c, a, s, c2, .] - weights[c, a', s, c2, .]`` must be
    nondecreasing over comparable pairs of ``A(c2)``.  Mass can only move
    within a characteristic, so characteristics with zero weight are skipped.
    """
    if not g.payoff.linear:
        raise UnsupportedMode("increasing differences can only be checked for linear payoffs")
    rep = SupermodularityReport()
    lat = g.lattice
    w = g.payoff.weights
    nu = g.characteristics.nu
    for c, acts in enumerate(g.availability):
        for a, a_low in itertools.permutations(acts, 2):
            if not (lat.le(a_low, a) and a != a_low):
                continue
            diff = w[c, a] - w[c, a_low]  # (S, C, A)
            for c2, acts2 in enumerate(g.availability):
                if nu[c2] <= 0:
                    continue
                for lo, hi in itertools.permutations(acts2, 2):
                    if not lat.le(lo, hi):
                        continue
                    bad = np.nonzero(diff[:, c2, hi] < diff[:, c2, lo] - tol)[0]
                    for s in bad:
                        rep.increasing_differences_ok = False
                        rep.violations.append(("increasing_differences", c, a, a_low, int(s), c2, lo, hi))
    return rep


def assumption_report(g: GameInstance) -> SupermodularityReport:
    rep = check_supermodular(g)
    if g.payoff.linear:
        rep = rep.merge(check_increasing_differences(g))
    else:
        rep.increasing_differences_ok = False
        rep.violations.append(("increasing_differences", "not checkable for black-box payoffs"))
    return rep


# ---------------------------------------------------------------------------
# profiles

def validate_profile(g: GameInstance, zeta: Profile) -> list[str]:
    out = []
    for p in g.pairs:
        if p not in zeta:
            out.append(f"pair {p} missing")
        elif zeta[p] not in g.availability[p[0]]:
            out.append(f"pair {p} plays an unavailable action")
    return out


def induced_aggregate(g: GameInstance, zeta: Profile, t: int) -> np.ndarray:
    """mass[c, a] = total tau(t) weight on pairs (c, beta) with zeta(c, beta) = a."""
    mass = np.zeros((g.n_chars, g.n_actions))
    for c2, b2, w in g.types.tau[t]:
        mass[c2, zeta[(c2, b2)]] += w
    return mass


def _expected_payoffs(g: GameInstance, c: int, beta: int, aggregates: dict) -> dict:
    ts = g.types
    row = ts.beliefs[beta]
    out = {}
    for a in g.availability[c]:
        out[a] = float(sum(row[t] * g.payoff(c, a, int(ts.sigma[t]), aggregates[t]) for t in ts.support[beta]))
    return out


def _aggregates(g: GameInstance, zeta: Profile) -> dict:
    return {t: induced_aggregate(g, zeta, t) for t in range(g.n_worlds)}


def best_response_set(g: GameInstance, c: int, beta: int, zeta: Profile,
                      tol: float = DECISION_TOL, aggregates: dict | None = None) -> frozenset:
    """All available actions within ``tol`` of the best expected payoff."""
    aggs = aggregates if aggregates is not None else _aggregates(g, zeta)
    vals = _expected_payoffs(g, c, beta, aggs)
    best = max(vals.values())
    return frozenset(a for a, v in vals.items() if v >= best - tol)


@dataclass(frozen=True)
class EquilibriumCheck:
    is_bne: bool
    violations: tuple  # (c, beta, played, best responses, payoff shortfall)
    max_slack: float


def verify_equilibrium(g: GameInstance, zeta: Profile, tol: float = DECISION_TOL) -> EquilibriumCheck:
    aggs = _aggregates(g, zeta)
    bad = []
    worst = 0.0
    for c, beta in g.pairs:
        vals = _expected_payoffs(g, c, beta, aggs)
        best = max(vals.values())
        gap = best - vals[zeta[(c, beta)]]
        worst = max(worst, gap)
        if gap > tol:
            br = frozenset(a for a, v in vals.items() if v >= best - tol)
            bad.append((c, beta, zeta[(c, beta)], br, gap))
    return EquilibriumCheck(not bad, tuple(bad), worst)


@dataclass
class ExtremalResult:
    zeta: dict
    rounds: int
    trace: list
    verified: EquilibriumCheck


def round_bound(g: GameInstance) -> int:
    return sum(len(g.availability[c]) - 1 for c, _ in g.pairs)


def extremal_equilibrium(g: GameInstance, direction: str = "top", force: bool = False,
                         tol: float = DECISION_TOL) -> ExtremalResult:
    """Largest (``top``) or smallest (``bottom``) equilibrium by monotone iteration."""
    if direction not in ("top", "bottom"):
        raise ValueError("direction must be 'top' or 'bottom'")
    if not force:
        rep = assumption_report(g)
        if not rep.ok:
            raise AssumptionViolation("supermodularity assumptions fail; rerun with force to override", rep)
    lat = g.lattice
    pick = lat.sup if direction == "top" else lat.inf
    zeta = {p: pick(g.availability[p[0]]) for p in g.pairs}
    trace = [dict(zeta)]
    limit = round_bound(g) + 1
    rounds = 0
    while True:
        aggs = _aggregates(g, zeta)
        nxt = {}
        for c, beta in g.pairs:
            br = best_response_set(g, c, beta, zeta, tol, aggs)
            choice = pick(br)
            if choice not in br:
                raise BrokenLatticeArgmax(
                    f"{direction} of the best replies at ({c}, {beta}) is not a best reply; "
                    f"best replies {sorted(br)}")
            nxt[(c, beta)] = choice
        if nxt == zeta:
            break
        zeta = nxt
        trace.append(dict(zeta))
        rounds += 1
        if rounds > limit and not force:
            raise AssumptionViolation(f"monotone iteration exceeded {limit} rounds")
        if rounds > 10 * limit + 100:
            raise AssumptionViolation("best-reply iteration does not settle")
    check = verify_equilibrium(g, zeta, tol)
    return ExtremalResult(zeta, rounds, trace, check)


@dataclass(frozen=True)
class SandwichReport:
    ok: bool
    violations: tuple


def sandwich_check(g: GameInstance, icr_map: BehaviorMap | None = None,
                   top: Mapping | None = None, bottom: Mapping | None = None) -> SandwichReport:
    """Every rationalizable action lies between the extremal equilibria, which are themselves rationalizable."""
    S = icr_map if icr_map is not None else icr_solve(g).S
    top = top if top is not None else extremal_equilibrium(g, "top").zeta
    bottom = bottom if bottom is not None else extremal_equilibrium(g, "bottom").zeta
    lat = g.lattice
    bad = []
    for p in g.pairs:
        hi, lo = top[p], bottom[p]
        if hi not in S[p]:
            bad.append((p, "top not rationalizable", hi))
        if lo not in S[p]:
            bad.append((p, "bottom not rationalizable", lo))
        for a in sorted(S[p]):
            if not (lat.le(lo, a) and lat.le(a, hi)):
                bad.append((p, "outside bounds", a))
    return SandwichReport(not bad, tuple(bad))
