"""Coordinated attack on a circle with a dying signal.

Players sit at ``n_positions`` evenly spaced points of the unit circle.  If
the state is 1 a signal starts at position 0 at time 0 and circles at unit
speed until it dies at an exponential time ``d``; the player at ``i`` sees
it ``ceil(d - i)`` times when ``d > i``.  Death times are discretised into
cells whose boundaries include every ``m + i`` (so signal counts are constant
on a cell) and equal-probability quantiles of the unit-interval truncated
exponential.  Death times beyond ``max_signals - 1`` are merged into one
world in which the signal never dies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GameFormatError
from .game import ActionLattice, CharacteristicSpace, GameInstance, PayoffOracle, TypeSpace
from .icr import BehaviorMap, icr_solve

_SERIES_BELOW = 1e-3
_POINT_MERGE = 1e-12


def contagion_function(alpha: float) -> float:
    """Mean of the unit-interval truncated exponential: 1/alpha - 1/(e^alpha - 1)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < _SERIES_BELOW:
        a2 = alpha * alpha
        return 0.5 - alpha / 12.0 + alpha * a2 / 720.0 - alpha * a2 * a2 / 30240.0
    return 1.0 / alpha - 1.0 / math.expm1(alpha)


def risk_dominance_threshold(M: float, L: float) -> float:
    """Share of attackers above which attacking pays when the state is 1."""
    if not (L > M > 0):
        raise ValueError("need L > M > 0")
    return L / (M + L)


def attack_threshold(M: float, L: float) -> float:
    """L / (M + L) without the ordering requirement."""
    if not (M > 0 and L > 0):
        raise ValueError("need M > 0 and L > 0")
    return L / (M + L)


@dataclass(frozen=True)
class EmailGameParams:
    M: float = 1.0
    L: float = 2.0
    pi: float = 0.5
    alpha: float = 1.0
    n_positions: int = 20
    max_signals: int = 10
    buckets_per_unit: int = 4
    strict: bool = True          # require L > M
    interval: str = "shifted"    # "shifted": (n-1+i, n+i]; "literal": (n*i, n*i+1]

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.M > 0:
            out.append("M must be positive")
        if self.strict and not self.L > self.M:
            out.append("L must exceed M")
        if not self.L > 0:
            out.append("L must be positive")
        if not 0 <= self.pi <= 1:
            out.append("pi must lie in [0, 1]")
        if not self.alpha > 0:
            out.append("alpha must be positive")
        if self.n_positions < 2:
            out.append("n_positions must be at least 2")
        if self.max_signals < 1:
            out.append("max_signals must be at least 1")
        if self.buckets_per_unit < 1:
            out.append("buckets_per_unit must be at least 1")
        if self.interval not in ("shifted", "literal"):
            out.append("interval must be 'shifted' or 'literal'")
        return out

    def doubled(self) -> "EmailGameParams":
        return EmailGameParams(self.M, self.L, self.pi, self.alpha, 2 * self.n_positions,
                               self.max_signals, 2 * self.buckets_per_unit, self.strict, self.interval)


def positions(p: EmailGameParams) -> np.ndarray:
    return np.arange(p.n_positions) / p.n_positions


def pi_i(p: EmailGameParams, i: float) -> float:
    """Probability that the state is 1 for a player at ``i`` who saw no signal."""
    died = p.pi * -math.expm1(-p.alpha * i)
    return died / (1.0 - p.pi + died)


def _death_grid(p: EmailGameParams) -> np.ndarray:
    """Sorted cell boundaries of the finite death times (0, max_signals - 1]."""
    horizon = p.max_signals - 1
    if horizon <= 0:
        return np.array([0.0])
    n = p.n_positions
    pts = [k / n for k in range(n * horizon + 1)]
    scale = -math.expm1(-p.alpha)
    for m in range(horizon):
        for j in range(1, p.buckets_per_unit):
            pts.append(m - math.log1p(-(j / p.buckets_per_unit) * scale) / p.alpha)
    if p.interval == "literal":
        for i in positions(p):
            for k in range(1, p.max_signals):
                for x in (k * i, k * i + 1):
                    if 0 < x < horizon:
                        pts.append(x)
    pts = np.sort(np.array(pts))
    keep = np.concatenate([[True], np.diff(pts) > _POINT_MERGE])
    return pts[keep]


def signal_count(i: float, d: float) -> int:
    return int(math.ceil(d - i)) if d > i else 0


@dataclass(frozen=True)
class EmailGameLayout:
    """Index bookkeeping for a generated instance."""

    params: EmailGameParams
    cells: np.ndarray            # (n_cells, 2) death-time intervals
    prior: np.ndarray            # over worlds
    n_counts: int                # labels 0..max_signals

    def belief_id(self, k: int, n: int) -> int:
        return k * self.n_counts + n

    def decode(self, belief: int) -> tuple[int, int]:
        return divmod(belief, self.n_counts)

    @property
    def infinite_world(self) -> int:
        return len(self.cells) + 1


def _layout(p: EmailGameParams) -> EmailGameLayout:
    grid = _death_grid(p)
    cells = np.column_stack([grid[:-1], grid[1:]]) if len(grid) > 1 else np.zeros((0, 2))
    a = p.alpha
    cell_mass = p.pi * (np.exp(-a * cells[:, 0]) - np.exp(-a * cells[:, 1]))
    tail = p.pi * math.exp(-a * max(p.max_signals - 1, 0))
    prior = np.concatenate([[1.0 - p.pi], cell_mass, [tail]])
    return EmailGameLayout(p, cells, prior, p.max_signals + 1)


def _belief_support(p: EmailGameParams, lay: EmailGameLayout, i: float, n: int) -> np.ndarray:
    """Unnormalised prior mass per world for a player at ``i`` with ``n`` signals."""
    n_w = len(lay.prior)
    w = np.zeros(n_w)
    K = p.max_signals
    if n == K:
        w[lay.infinite_world] = 1.0
        return w
    lo_c, hi_c = lay.cells[:, 0], lay.cells[:, 1]
    if n == 0:
        w[0] = lay.prior[0]
        inside = hi_c <= i + _POINT_MERGE
    else:
        lo, hi = (n - 1 + i, n + i) if p.interval == "shifted" else (n * i, n * i + 1)
        inside = (lo_c >= lo - _POINT_MERGE) & (hi_c <= hi + _POINT_MERGE)
    w[1:-1][inside] = lay.prior[1:-1][inside]
    return w


def conditional_death_probabilities(p: EmailGameParams, position: int, signal_count: int) -> np.ndarray:
    """Belief over the generated worlds of the player at ``position`` with ``signal_count`` signals."""
    lay = _layout(p)
    w = _belief_support(p, lay, positions(p)[position], signal_count)
    if w.sum() <= 0:
        # the conditioning event has no finite cell; fall back to the never-dies world
        w = np.zeros(len(lay.prior))
        w[lay.infinite_world] = 1.0
    return w / w.sum()


def build_email_game(p: EmailGameParams) -> GameInstance:
    lay = _layout(p)
    pos = positions(p)
    n_pos = p.n_positions
    K = p.max_signals
    n_w = len(lay.prior)
    beliefs = np.zeros((n_pos * lay.n_counts, n_w))
    for k, i in enumerate(pos):
        for n in range(lay.n_counts):
            w = _belief_support(p, lay, i, n)
            if w.sum() <= 0:
                w = np.zeros(n_w)
                w[lay.infinite_world] = 1.0
            beliefs[lay.belief_id(k, n)] = w / w.sum()
    share = 1.0 / n_pos
    tau = [[(k, lay.belief_id(k, 0), share) for k in range(n_pos)]]
    for lo, hi in lay.cells:
        mid = 0.5 * (lo + hi)
        tau.append([(k, lay.belief_id(k, min(signal_count(i, mid), K)), share) for k, i in enumerate(pos)])
    tau.append([(k, lay.belief_id(k, K), share) for k in range(n_pos)])
    worlds = ["s0"] + [f"s1:{lo:.12g}-{hi:.12g}" for lo, hi in lay.cells] + ["s1:inf"]
    sigma = [0] + [1] * (n_w - 1)

    base = np.zeros((n_pos, 2, 2))
    weights = np.zeros((n_pos, 2, 2, n_pos, 2))
    weights[:, 0, 0, :, 0] = p.M
    weights[:, 1, 0, :, 0] = -p.L
    weights[:, 1, 1, :, 1] = p.M
    weights[:, 1, 1, :, 0] = -p.L
    chars = CharacteristicSpace(tuple(f"{i:.12g}" for i in pos), np.full(n_pos, share))
    types = TypeSpace(tuple(worlds), ("0", "1"), sigma, tuple(tau), beliefs, [0.0, 1.0])
    queries = [(k, lay.belief_id(k, n)) for k in range(n_pos) for n in range(lay.n_counts)]
    name = f"email-game-M{p.M:g}-L{p.L:g}-alpha{p.alpha:g}"
    return GameInstance(chars, ActionLattice.chain((0, 1)), ((0, 1),) * n_pos, types,
                        PayoffOracle("linear", base, weights), tuple(queries), name)


@dataclass
class ContagionResult:
    all_zero_unique: bool
    front: list                    # (round, furthest death time reached, newly eliminated)
    rounds: int
    survivors: dict = field(default_factory=dict)  # pairs still allowing attack


def contagion_check(p: EmailGameParams, game: GameInstance | None = None) -> ContagionResult:
    """Elimination with attack removed up front for every player who saw no signal."""
    g = game if game is not None else build_email_game(p)
    n_counts = p.max_signals + 1
    sets = {}
    for c, b in g.pairs:
        _, n = divmod(b, n_counts)
        sets[(c, b)] = {0} if n == 0 else {0, 1}
    res = icr_solve(g, BehaviorMap(sets))
    pos = positions(p)
    front = []
    reach = 0.0
    for m in range(1, len(res.trace)):
        gone = [pr for pr, acts in res.trace[m - 1].items() if 1 in acts and 1 not in res.trace[m][pr]]
        for c, b in gone:
            n = b % n_counts
            reach = max(reach, n - 1 + pos[c])
        front.append((m, reach, len(gone)))
    finite = {pr: acts for pr, acts in res.S.items() if pr[1] % n_counts < p.max_signals}
    alive = {pr: acts for pr, acts in finite.items() if acts != {0}}
    return ContagionResult(not alive, front, res.rounds, alive)
