"""Interim correlated rationalizability by iterated elimination.

A behavior map assigns to every registered (characteristic, belief id) pair
a set of actions.  One elimination round keeps an action ``a`` for ``(c, beta)``
exactly when some conjecture consistent with the map makes ``a`` a best reply:
per-world aggregates ``agg_t`` in the polytope ``P_t(b)`` (each tau atom
splits its mass over the actions the map allows it) with

    sum_t beta(t) [v(c, a, sigma(t), agg_t) - v(c, a', sigma(t), agg_t)] >= -tol

for every available ``a'``.  With a linear payoff this is a linear
feasibility problem.  Worlds enter only through their state and the tau atoms,
and the problem is separable across atoms, so atoms that share
(state, characteristic, allowed set) are merged into one simplex block
scaled by their total weight; this is exact because a sum of scaled copies
of one simplex is a scaled simplex.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptySurvivors, UnavailableAction
from .game import DECISION_TOL, GameInstance
from .numerics import LinearFeasibilityProblem, solve_feasibility


@dataclass(frozen=True)
class BehaviorMap:
    """(characteristic, belief id) -> frozenset of action indices."""

    sets: Mapping

    def __post_init__(self):
        object.__setattr__(self, "sets", {(int(c), int(b)): frozenset(int(a) for a in acts)
                                          for (c, b), acts in dict(self.sets).items()})

    @classmethod
    def full(cls, g: GameInstance) -> "BehaviorMap":
        return cls({p: g.availability[p[0]] for p in g.pairs})

    @classmethod
    def from_profile(cls, zeta: Mapping) -> "BehaviorMap":
        return cls({p: (a,) for p, a in zeta.items()})

    def __getitem__(self, pair) -> frozenset:
        return self.sets[pair]

    def __eq__(self, other):
        return isinstance(other, BehaviorMap) and self.sets == other.sets

    def __hash__(self):
        return hash(frozenset(self.sets.items()))

    def items(self):
        return sorted(self.sets.items())

    def pairs(self):
        return sorted(self.sets)

    def subset_of(self, other: "BehaviorMap") -> bool:
        return all(acts <= other.sets.get(p, frozenset()) for p, acts in self.sets.items())

    def is_singleton(self) -> bool:
        return all(len(acts) == 1 for acts in self.sets.values())

    def to_json(self, g: GameInstance) -> list:
        acts = g.lattice.actions
        labels = g.characteristics.labels
        return [[labels[c], b, [acts[a] for a in sorted(s)]] for (c, b), s in self.items()]


def validate_behavior(g: GameInstance, b: BehaviorMap) -> list[str]:
    out = []
    for p in g.pairs:
        if p not in b.sets:
            out.append(f"pair {p} missing")
        elif not b.sets[p]:
            out.append(f"pair {p} has an empty set")
        elif not b.sets[p] <= set(g.availability[p[0]]):
            out.append(f"pair {p} allows unavailable actions")
    return out


@dataclass
class ConjectureWitness:
    """Belief weights and one aggregate per world (``mixtures`` only in sampled mode)."""

    beta: dict
    aggregates: dict
    mixtures: dict | None = None


@dataclass(frozen=True)
class ReplyResult:
    survives: bool
    witness: ConjectureWitness | None = None
    approximate: bool = False
    margin: float | None = None


@dataclass(frozen=True)
class AggregatePolytope:
    """Mass variables ``(atom, action)`` for one world, with per-atom equalities.

    ``aggregate_map`` sends the variable vector to the flattened (|C|, |A|)
    aggregate.
    """

    world: int
    variables: tuple  # (atom index, characteristic, belief id, action)
    problem: LinearFeasibilityProblem
    aggregate_map: np.ndarray
    shape: tuple

    def aggregate(self, x) -> np.ndarray:
        return (self.aggregate_map @ np.asarray(x, dtype=float)).reshape(self.shape)

    def vertices(self):
        """Every vertex: each atom puts all its mass on one allowed action."""
        by_atom: dict[int, list[int]] = {}
        for k, (i, _, _, _) in enumerate(self.variables):
            by_atom.setdefault(i, []).append(k)
        atoms = sorted(by_atom)
        weights = self.problem.b_eq
        for choice in itertools.product(*(by_atom[i] for i in atoms)):
            x = np.zeros(len(self.variables))
            for row, k in enumerate(choice):
                x[k] = weights[row]
            yield x


def feasible_aggregates_polytope(g: GameInstance, t: int, b: BehaviorMap) -> AggregatePolytope:
    atoms = g.types.tau[t]
    variables = []
    for i, (c2, b2, _) in enumerate(atoms):
        for a in sorted(b[(c2, b2)]):
            variables.append((i, c2, b2, a))
    n = len(variables)
    a_eq = np.zeros((len(atoms), n))
    upper = np.zeros(n)
    agg = np.zeros((g.n_chars * g.n_actions, n))
    for k, (i, c2, _, a) in enumerate(variables):
        a_eq[i, k] = 1.0
        upper[k] = atoms[i].weight
        agg[c2 * g.n_actions + a, k] = 1.0
    problem = LinearFeasibilityProblem(np.zeros(n), upper, a_eq, [w for _, _, w in atoms],
                                       np.zeros((0, n)), [])
    return AggregatePolytope(t, tuple(variables), problem, agg, (g.n_chars, g.n_actions))


# ---------------------------------------------------------------------------
# the conjecture feasibility test

@dataclass(frozen=True)
class _Blocks:
    """Merged simplex blocks for one belief under one behavior map."""

    state_weight: np.ndarray          # omega_s = beta(sigma^-1(s))
    keys: tuple                       # (state, characteristic, allowed tuple)
    weights: np.ndarray


def _blocks(g: GameInstance, beta: int, b: BehaviorMap) -> _Blocks:
    ts = g.types
    row = ts.beliefs[beta]
    omega = np.zeros(g.n_states)
    acc: dict[tuple, float] = {}
    for t in ts.support[beta]:
        s = int(ts.sigma[t])
        omega[s] += row[t]
        for c2, b2, w in ts.tau[t]:
            if w <= 0:
                continue
            key = (s, c2, tuple(sorted(b[(c2, b2)])))
            acc[key] = acc.get(key, 0.0) + row[t] * w
    keys = tuple(sorted(acc))
    return _Blocks(omega, keys, np.array([acc[k] for k in keys]))


def _difference_rows(g: GameInstance, c: int, a: int, blocks: _Blocks):
    """Constants and per-block coefficient arrays of ``a`` against each rival."""
    rivals = [r for r in g.availability[c] if r != a]
    pay = g.payoff
    const = np.array([float(blocks.state_weight @ (pay.base[c, a] - pay.base[c, r])) for r in rivals])
    coefs = []
    for (s, c2, allowed), w in zip(blocks.keys, blocks.weights):
        cols = list(allowed)
        mine = pay.weights[c, a, s, c2, cols]
        other = pay.weights[c, rivals, s, c2][:, cols]
        coefs.append(w * (mine[None, :] - other))  # (n_rivals, |allowed|)
    return rivals, const, coefs


def _solve_linear(g, c, a, blocks: _Blocks, tol: float):
    """Return (survives, block choice list or None, margin or None)."""
    rivals, const, coefs = _difference_rows(g, c, a, blocks)
    if not rivals:
        return True, [np.eye(len(k[2]))[0] for k in blocks.keys], None
    # singleton blocks are constants
    free = []
    for k, cf in enumerate(coefs):
        if cf.shape[1] == 1:
            const = const + cf[:, 0]
        else:
            free.append(k)
    choice = [np.ones(1) if coefs[k].shape[1] == 1 else None for k in range(len(coefs))]

    def point_for(direction):
        picks = []
        total = const.copy()
        for k in free:
            j = int(np.argmax(direction @ coefs[k]))
            picks.append(j)
            total = total + coefs[k][:, j]
        return picks, total

    def fill(picks):
        out = list(choice)
        for k, j in zip(free, picks):
            e = np.zeros(coefs[k].shape[1])
            e[j] = 1.0
            out[k] = e
        return out

    if len(rivals) == 1:
        picks, total = point_for(np.ones(1))
        margin = float(total[0])
        return margin >= -tol, fill(picks), margin
    # necessary condition per rival, then cheap vertex candidates
    upper = const + np.array([sum(float(np.max(coefs[k][r])) for k in free) for r in range(len(rivals))])
    if np.any(upper < -tol):
        return False, None, None
    directions = [np.ones(len(rivals))] + list(np.eye(len(rivals)))
    for d in directions:
        picks, total = point_for(d)
        if np.all(total >= -tol):
            return True, fill(picks), None
    # full linear program over the free blocks
    sizes = [coefs[k].shape[1] for k in free]
    n = sum(sizes)
    a_eq = np.zeros((len(free), n))
    a_ge = np.zeros((len(rivals), n))
    off = 0
    for row, (k, size) in enumerate(zip(free, sizes)):
        a_eq[row, off:off + size] = 1.0
        a_ge[:, off:off + size] = coefs[k]
        off += size
    prob = LinearFeasibilityProblem(np.zeros(n), np.ones(n), a_eq, np.ones(len(free)), a_ge, -const)
    res = solve_feasibility(prob, tol=tol)
    if not res.feasible:
        return False, None, None
    out = list(choice)
    off = 0
    for k, size in zip(free, sizes):
        out[k] = res.point[off:off + size]
        off += size
    return True, out, None


def _witness(g: GameInstance, beta: int, b: BehaviorMap, blocks: _Blocks, choice) -> ConjectureWitness:
    ts = g.types
    index = {k: i for i, k in enumerate(blocks.keys)}
    weights, aggs = {}, {}
    for t in ts.support[beta]:
        s = int(ts.sigma[t])
        agg = np.zeros((g.n_chars, g.n_actions))
        for c2, b2, w in ts.tau[t]:
            allowed = tuple(sorted(b[(c2, b2)]))
            key = (s, c2, allowed)
            mix = choice[index[key]] if key in index else np.eye(len(allowed))[0]
            agg[c2, list(allowed)] += w * np.asarray(mix)
        weights[t] = float(ts.beliefs[beta, t])
        aggs[t] = agg
    return ConjectureWitness(weights, aggs)


# black-box payoffs: mixtures over sampled aggregates

SAMPLE_VERTICES = 64
SAMPLE_RANDOM = 8


def _world_samples(g: GameInstance, t: int, b: BehaviorMap, rng: np.random.Generator):
    poly = feasible_aggregates_polytope(g, t, b)
    atoms = g.types.tau[t]
    allowed = [sorted(b[(c2, b2)]) for c2, b2, _ in atoms]
    n_vertices = int(np.prod([len(x) for x in allowed], dtype=float))
    samples = []
    if n_vertices <= SAMPLE_VERTICES:
        choices = itertools.product(*allowed)
    else:
        choices = (tuple(rng.choice(x) for x in allowed) for _ in range(SAMPLE_VERTICES))
    for pick in choices:
        agg = np.zeros((g.n_chars, g.n_actions))
        for (c2, _, w), a in zip(atoms, pick):
            agg[c2, a] += w
        samples.append(agg)
    centroid = np.zeros((g.n_chars, g.n_actions))
    for (c2, _, w), acts in zip(atoms, allowed):
        centroid[c2, acts] += w / len(acts)
    samples.append(centroid)
    for _ in range(SAMPLE_RANDOM):
        agg = np.zeros((g.n_chars, g.n_actions))
        for (c2, _, w), acts in zip(atoms, allowed):
            agg[c2, acts] += w * rng.dirichlet(np.ones(len(acts)))
        samples.append(agg)
    return poly, samples


def _solve_sampled(g: GameInstance, c: int, beta: int, a: int, b: BehaviorMap, tol: float, seed: int = 0):
    ts = g.types
    rng = np.random.default_rng([seed, c, beta, a])
    rivals = [r for r in g.availability[c] if r != a]
    columns, owners, per_world = [], [], {}
    for t in ts.support[beta]:
        s = int(ts.sigma[t])
        _, samples = _world_samples(g, t, b, rng)
        per_world[t] = samples
        for j, agg in enumerate(samples):
            va = g.payoff(c, a, s, agg)
            columns.append([ts.beliefs[beta, t] * (va - g.payoff(c, r, s, agg)) for r in rivals])
            owners.append((t, j))
    worlds = sorted(per_world)
    n = len(owners)
    a_eq = np.zeros((len(worlds), n))
    for k, (t, _) in enumerate(owners):
        a_eq[worlds.index(t), k] = 1.0
    a_ge = np.array(columns, dtype=float).T.reshape(len(rivals), n)
    prob = LinearFeasibilityProblem(np.zeros(n), np.ones(n), a_eq, np.ones(len(worlds)),
                                    a_ge, np.zeros(len(rivals)))
    res = solve_feasibility(prob, tol=tol)
    if not res.feasible:
        return ReplyResult(False, None, approximate=True)
    aggs, mixtures = {}, {}
    for t in worlds:
        ks = [k for k, (tt, _) in enumerate(owners) if tt == t]
        mixtures[t] = [(float(res.point[k]), per_world[t][owners[k][1]]) for k in ks if res.point[k] > 0]
        aggs[t] = sum(w * agg for w, agg in mixtures[t])
    beta_w = {t: float(ts.beliefs[beta, t]) for t in worlds}
    return ReplyResult(True, ConjectureWitness(beta_w, aggs, mixtures), approximate=True)


def best_reply_feasible(g: GameInstance, c: int, beta: int, a: int, b: BehaviorMap,
                        tol: float = DECISION_TOL, witness: bool = True) -> ReplyResult:
    """Is ``a`` a best reply for ``(c, beta)`` to some conjecture consistent with ``b``?"""
    if a not in g.availability[c]:
        raise UnavailableAction(f"action {a} not available to characteristic {c}")
    if not g.payoff.linear:
        return _solve_sampled(g, c, beta, a, b, tol)
    blocks = _blocks(g, beta, b)
    ok, choice, margin = _solve_linear(g, c, a, blocks, tol)
    wit = _witness(g, beta, b, blocks, choice) if ok and witness else None
    return ReplyResult(ok, wit, False, margin)


# ---------------------------------------------------------------------------
# elimination

def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LGL_THREADS", "1")))
    except ValueError:
        return 1


def _survivors(g: GameInstance, pair, b: BehaviorMap, candidates, tol, block_cache) -> frozenset:
    c, beta = pair
    if g.payoff.linear:
        blocks = block_cache.get(beta)
        if blocks is None:
            blocks = block_cache[beta] = _blocks(g, beta, b)
        keep = [a for a in candidates if _solve_linear(g, c, a, blocks, tol)[0]]
    else:
        keep = [a for a in candidates if _solve_sampled(g, c, beta, a, b, tol).survives]
    if not keep:
        raise EmptySurvivors(f"no action survives at characteristic {g.characteristics.labels[c]!r}, "
                             f"belief {beta}; tolerance {tol:g}")
    return frozenset(keep)


def _round(g: GameInstance, b: BehaviorMap, pairs, candidates_of, tol) -> dict:
    block_cache: dict = {}
    threads = _thread_count()
    if threads > 1 and len(pairs) > 1:
        # blocks are filled per belief first so workers only read the cache
        if g.payoff.linear:
            for beta in sorted({p[1] for p in pairs}):
                block_cache[beta] = _blocks(g, beta, b)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda p: _survivors(g, p, b, candidates_of(p), tol, block_cache), pairs))
        return dict(zip(pairs, results))
    return {p: _survivors(g, p, b, candidates_of(p), tol, block_cache) for p in pairs}


def eliminate_round(g: GameInstance, b: BehaviorMap, tol: float = DECISION_TOL,
                    candidates: BehaviorMap | None = None) -> BehaviorMap:
    """One application of the best-reply operator to ``b``.

    Every available action is tested unless ``candidates`` restricts the
    actions examined per pair.
    """
    pairs = list(g.pairs)

    def cands(p):
        return sorted(candidates[p]) if candidates is not None else g.availability[p[0]]

    return BehaviorMap(_round(g, b, pairs, cands, tol))


@dataclass
class ICRResult:
    S: BehaviorMap
    rounds: int
    trace: list = field(default_factory=list)
    approximate: bool = False

    def round_eliminated(self) -> dict:
        """(pair, action) -> first round in which the action was gone."""
        out = {}
        for m in range(1, len(self.trace)):
            for p, acts in self.trace[m - 1].items():
                for a in acts - self.trace[m][p]:
                    out[(p, a)] = m
        return out


def _dependents(g: GameInstance) -> dict:
    """pair -> pairs whose feasibility problem reads it."""
    ts = g.types
    readers_of_world: dict[int, set] = {}
    for beta_pairs in g.pairs:
        c, beta = beta_pairs
        for t in ts.support[beta]:
            readers_of_world.setdefault(t, set()).add(beta_pairs)
    out: dict = {}
    for t, atoms in enumerate(ts.tau):
        for c2, b2, _ in atoms:
            out.setdefault((c2, b2), set()).update(readers_of_world.get(t, ()))
    return out


def icr_solve(g: GameInstance, initial: BehaviorMap | None = None, tol: float = DECISION_TOL,
              max_rounds: int | None = None) -> ICRResult:
    """Iterate elimination from full availability (or ``initial``) to the fixed point.

    Each round only re-examines pairs whose problem reads a pair that changed
    in the previous round; untouched pairs would give the same answer.
    """
    current = initial if initial is not None else BehaviorMap.full(g)
    trace = [current]
    deps = _dependents(g)
    dirty = list(g.pairs)
    rounds = 0
    while dirty:
        if max_rounds is not None and rounds >= max_rounds:
            break
        updated = _round(g, current, dirty, lambda p: sorted(current[p]), tol)
        changed = [p for p in dirty if updated[p] != current[p]]
        if not changed:
            break
        sets = dict(current.sets)
        sets.update(updated)
        current = BehaviorMap(sets)
        trace.append(current)
        rounds += 1
        touched = set()
        for p in changed:
            touched.update(deps.get(p, ()))
        dirty = sorted(touched)
    return ICRResult(current, rounds, trace, approximate=not g.payoff.linear)


@dataclass(frozen=True)
class SelfRationalizingReport:
    is_fixed_point: bool
    counterexamples: tuple  # (c, beta, a, "added" | "removed")

    @property
    def rationalizes_itself(self) -> bool:
        """``b`` is contained in its image; ties may still add actions."""
        return all(kind != "removed" for *_, kind in self.counterexamples)


def check_self_rationalizing(g: GameInstance, b: BehaviorMap, tol: float = DECISION_TOL):
    nxt = eliminate_round(g, b, tol)
    bad = []
    for p in g.pairs:
        for a in sorted(nxt[p] - b[p]):
            bad.append((p[0], p[1], a, "added"))
        for a in sorted(b[p] - nxt[p]):
            bad.append((p[0], p[1], a, "removed"))
    return SelfRationalizingReport(not bad, tuple(bad))


def summary_rows(g: GameInstance, res: ICRResult) -> list[tuple]:
    """(characteristic, belief id, surviving actions, action, round eliminated) rows."""
    elim = res.round_eliminated()
    rows = []
    for (c, beta), acts in res.S.items():
        surviving = " ".join(str(g.lattice.actions[a]) for a in sorted(acts))
        gone = sorted((a, m) for (p, a), m in elim.items() if p == (c, beta))
        if not gone:
            rows.append((g.characteristics.labels[c], beta, surviving, "", ""))
        for a, m in gone:
            rows.append((g.characteristics.labels[c], beta, surviving, g.lattice.actions[a], m))
    return rows
