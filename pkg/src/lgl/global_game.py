"""Binary invest/noninvest games with payoff a * (s + share_investing - 1).

Beliefs are summarised by their expected state ``x`` and by the matrix
``mass[beta, beta']`` giving the expected share of the population holding
``beta'`` under ``beta``.  Sets of beliefs are frozensets of belief ids.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import GameFormatError
from .game import (DECISION_TOL, ActionLattice, CharacteristicSpace, GameInstance,
                   PayoffOracle, TypeSpace)

TIE_TOL = 1e-12
STATE_RANGE = (-1.0, 2.0)


def build_global_game(state_values: Sequence[float], beliefs, tau: Sequence[Sequence[tuple]],
                      queries: Iterable[int] | None = None, name: str = "global-game",
                      sigma: Sequence[int] | None = None) -> GameInstance:
    """One characteristic, actions 0 < 1, one state per world unless ``sigma`` is given.

    ``tau[t]`` lists (belief id, weight) atoms.  All beliefs are registered as
    queries by default so that every registry member gets an ICR set.
    """
    beliefs = np.asarray(beliefs, dtype=float)
    n_w = beliefs.shape[1]
    if sigma is None:
        sigma = list(range(n_w))
    states = tuple(f"s{k}" for k in range(len(state_values)))
    n_s = len(states)
    base = np.zeros((1, 2, n_s))
    base[0, 1] = np.asarray(state_values, dtype=float) - 1.0
    weights = np.zeros((1, 2, n_s, 1, 2))
    weights[0, 1, :, 0, 1] = 1.0
    types = TypeSpace(tuple(f"w{t}" for t in range(n_w)), states, sigma,
                      tuple(tuple((0, b, w) for b, w in atoms) for atoms in tau),
                      beliefs, state_values)
    if queries is None:
        queries = range(beliefs.shape[0])
    return GameInstance(CharacteristicSpace(("all",), [1.0]), ActionLattice.chain((0, 1)), ((0, 1),),
                        types, PayoffOracle("linear", base, weights), tuple((0, b) for b in queries), name)


@dataclass(frozen=True)
class BeliefStatistics:
    x: np.ndarray            # expected state per belief id
    mass: np.ndarray         # mass[beta, beta'] = expected share holding beta'
    rank: np.ndarray         # share of weakly less optimistic beliefs
    strict_rank: np.ndarray  # share of strictly less optimistic beliefs

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def registry(self) -> frozenset:
        return frozenset(range(self.n))

    def F(self, beta: int, E: Iterable[int]) -> float:
        idx = sorted(E)
        return float(self.mass[beta, idx].sum()) if idx else 0.0


def compute_statistics(g: GameInstance) -> BeliefStatistics:
    if g.n_chars != 1:
        raise GameFormatError("belief statistics need exactly one characteristic")
    ts = g.types
    if ts.state_values is None:
        raise GameFormatError("belief statistics need numeric state values")
    world_state = ts.state_values[ts.sigma]
    x = ts.beliefs @ world_state
    per_world = np.zeros((g.n_worlds, ts.n_beliefs))
    for t, atoms in enumerate(ts.tau):
        for _, b, w in atoms:
            per_world[t, b] += w
    mass = ts.beliefs @ per_world
    below = x[None, :] <= x[:, None] + TIE_TOL
    strictly = x[None, :] < x[:, None] - TIE_TOL
    rank = (mass * below).sum(axis=1)
    strict = (mass * strictly).sum(axis=1)
    return BeliefStatistics(x, mass, rank, strict)


def _stats(obj) -> BeliefStatistics:
    return obj if isinstance(obj, BeliefStatistics) else compute_statistics(obj)


def urb_set(g, eps: float) -> frozenset:
    st = _stats(g)
    return frozenset(int(b) for b in np.nonzero((st.rank >= 0.5 - eps - TIE_TOL)
                                                 & (st.rank <= 0.5 + eps + TIE_TOL))[0])


def srd_set(g, eps: float) -> frozenset:
    st = _stats(g)
    return frozenset(int(b) for b in np.nonzero(st.x > 0.5 + eps + TIE_TOL)[0])


def nsrd_set(g, eps: float) -> frozenset:
    st = _stats(g)
    return frozenset(int(b) for b in np.nonzero(st.x < 0.5 - eps - TIE_TOL)[0])


def _threshold(st: BeliefStatistics, f) -> np.ndarray:
    if f == "x":
        return st.x
    if f == "one_minus_x":
        return 1.0 - st.x
    return np.full(st.n, float(f))


def belief_operator(g, f, E: Iterable[int], tol: float = DECISION_TOL) -> frozenset:
    """Members of E expecting at least f(beta) of the population in E.

    ``f`` is a number, ``"x"`` or ``"one_minus_x"``.  Comparisons allow
    ``tol`` so that the operator matches the solver's weak best replies.
    """
    st = _stats(g)
    E = frozenset(E)
    if not E:
        return E
    idx = sorted(E)
    share = st.mass[:, idx].sum(axis=1)
    need = _threshold(st, f)
    return frozenset(b for b in E if share[b] >= need[b] - tol)


@dataclass(frozen=True)
class CertaintyResult:
    C: frozenset
    iterations: int


def certainty_operator(g, f, E: Iterable[int], tol: float = DECISION_TOL) -> CertaintyResult:
    st = _stats(g)
    cur = frozenset(E)
    it = 0
    while True:
        nxt = belief_operator(st, f, cur, tol)
        it += 1
        if nxt == cur:
            return CertaintyResult(cur, it)
        cur = nxt


@dataclass(frozen=True)
class Thresholds:
    x_upper: float
    x_lower: float
    upper_empty: bool
    lower_empty: bool


def x_thresholds(g, eps: float, E: Iterable[int]) -> Thresholds:
    """sup of x over {x <= rank + eps} and inf of x over {x >= rank - eps}, within E."""
    st = _stats(g)
    idx = np.array(sorted(E), dtype=np.int64)
    up = idx[st.x[idx] <= st.rank[idx] + eps + TIE_TOL]
    lo = idx[st.x[idx] >= st.rank[idx] - eps - TIE_TOL]
    return Thresholds(float(st.x[up].max()) if len(up) else -np.inf,
                      float(st.x[lo].min()) if len(lo) else np.inf,
                      len(up) == 0, len(lo) == 0)


def _strict_lower_threshold(st: BeliefStatistics, slack: float, E) -> float:
    idx = np.array(sorted(E), dtype=np.int64)
    lo = idx[st.x[idx] >= st.strict_rank[idx] - slack - TIE_TOL]
    return float(st.x[lo].min()) if len(lo) else np.inf


@dataclass(frozen=True)
class Regions:
    invest: frozenset
    noninvest: frozenset
    report: dict = field(default_factory=dict)


def threshold_regions(g, p: float, E: Iterable[int], tol: float = DECISION_TOL) -> Regions:
    """Threshold regions inside a set E with E contained in B_p(E).

    Investing is certified above the sup-threshold with slack 1 - p.  The
    noninvest side uses the strict rank: with ties in x the weak-rank
    threshold can certify a belief at which investing is still optimal.
    """
    st = _stats(g)
    E = frozenset(E)
    premise = E <= belief_operator(st, p, E, tol)
    if not E or not premise:
        return Regions(frozenset(), frozenset(), {"premise_holds": premise, "E_size": len(E)})
    th = x_thresholds(st, 1.0 - p, E)
    lower = _strict_lower_threshold(st, 1.0 - p, E)
    invest = frozenset(b for b in E if st.x[b] > th.x_upper + TIE_TOL)
    noninvest = frozenset(b for b in E if st.x[b] < lower - TIE_TOL)
    return Regions(invest, noninvest, {"premise_holds": True, "E_size": len(E),
                                       "x_upper": th.x_upper, "x_lower_weak": th.x_lower,
                                       "x_lower_strict": lower})


def uniqueness_certificate(g, eps: float, tol: float = DECISION_TOL) -> Regions:
    """Invest on SRD_2eps and noninvest on nSRD_2eps, both within C_{1-eps}(URB_eps)."""
    st = _stats(g)
    urb = urb_set(st, eps)
    core = certainty_operator(st, 1.0 - eps, urb, tol).C
    invest = srd_set(st, 2 * eps) & core
    noninvest = nsrd_set(st, 2 * eps) & core
    th_core = x_thresholds(st, eps, core) if core else Thresholds(-np.inf, np.inf, True, True)
    th_urb = x_thresholds(st, eps, urb) if urb else Thresholds(-np.inf, np.inf, True, True)
    report = {
        "closedness": "vacuous for a finite registry",
        "core_is_fixed_point": belief_operator(st, 1.0 - eps, core, tol) == core,
        "core_size": len(core),
        "urb_size": len(urb),
        "x_upper_core": th_core.x_upper,
        "x_upper_urb": th_urb.x_upper,
        "threshold_chain_ok": bool(th_core.x_upper <= th_urb.x_upper + TIE_TOL
                                   and th_urb.x_upper <= 0.5 + 2 * eps + TIE_TOL),
    }
    return Regions(invest, noninvest, report)


def region_rows(g, eps: float) -> list[tuple]:
    """Per-belief (id, x, rank, in URB, in core, in SRD_2eps, in nSRD_2eps, certified action)."""
    st = _stats(g)
    cert = uniqueness_certificate(st, eps)
    urb = urb_set(st, eps)
    core = certainty_operator(st, 1.0 - eps, urb).C
    srd, nsrd = srd_set(st, 2 * eps), nsrd_set(st, 2 * eps)
    rows = []
    for b in range(st.n):
        action = 1 if b in cert.invest else 0 if b in cert.noninvest else ""
        rows.append((b, float(st.x[b]), float(st.rank[b]), int(b in urb), int(b in core),
                     int(b in srd), int(b in nsrd), action))
    return rows


# ---------------------------------------------------------------------------
# instances

def uniform_rank_fixture() -> GameInstance:
    """Four beliefs, each certain of its own world; every world has all four present equally.

    Ranks are 1/4, 1/2, 3/4 and 1, so the median-rank band is populated.
    """
    states = [1.2, 1.4, 1.6, 1.8]
    beliefs = np.eye(4)
    tau = [[(b, 0.25) for b in range(4)] for _ in range(4)]
    return build_global_game(states, beliefs, tau, name="uniform-rank")


def common_certainty_fixture(values: Sequence[float]) -> GameInstance:
    """Each world is populated only by the belief certain of it."""
    n = len(values)
    return build_global_game(values, np.eye(n), [[(t, 1.0)] for t in range(n)], name="common-certainty")


def random_global_game(rng: np.random.Generator, max_worlds: int = 40, max_beliefs: int = 40,
                       density: float = 0.25) -> GameInstance:
    """Random instance: states uniform on [-1, 2], sparse beliefs and populations."""
    n_w = int(rng.integers(1, max_worlds + 1))
    n_b = int(rng.integers(1, max_beliefs + 1))
    states = rng.uniform(*STATE_RANGE, size=n_w)
    beliefs = np.zeros((n_b, n_w))
    for b in range(n_b):
        k = max(1, int(rng.binomial(n_w, density)))
        supp = rng.choice(n_w, size=min(k, n_w), replace=False)
        beliefs[b, supp] = rng.dirichlet(np.ones(len(supp)))
    tau = []
    for _ in range(n_w):
        k = max(1, int(rng.binomial(n_b, density)))
        supp = np.sort(rng.choice(n_b, size=min(k, n_b), replace=False))
        w = rng.dirichlet(np.ones(len(supp)))
        w[-1] = 1.0 - w[:-1].sum()
        tau.append([(int(b), float(x)) for b, x in zip(supp, w)])
    for row in beliefs:
        row[np.argmax(row)] += 1.0 - row.sum()
    return build_global_game(states, beliefs, tau, name="random-global-game")
