"""Finite truncations of belief hierarchies.

Level 1 of a belief is its distribution over states.  Level k+1 is a
distribution over pairs (state, population), where a population is a
distribution over (characteristic, level-k node) obtained by mapping each
tau atom's belief to its level-k node.  Nodes are interned in a table keyed
by a hash of their canonical form (labels, child keys, probabilities rounded
to 12 significant digits); equal keys mean equal hierarchies, so atoms that
agree after mapping are merged.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .game import GameInstance, TypeSpace

MAX_DEPTH = 3
ROUND_DIGITS = 12
COHERENCE_TOL = 1e-11


def _r(p: float) -> float:
    return float(f"{p:.{ROUND_DIGITS}g}")


@dataclass(frozen=True)
class Node:
    """``atoms`` are (state label, prob) at level 1 and ((state label, population key), prob) above.

    A population is stored as its own interned node at level 0 with atoms
    ((characteristic label, child key), weight).
    """

    level: int
    atoms: tuple


class Interner:
    def __init__(self):
        self.nodes: dict[str, Node] = {}

    def make(self, level: int, entries) -> str:
        acc: dict = {}
        for item, p in entries:
            if p <= 0:
                continue
            acc[item] = acc.get(item, 0.0) + float(p)
        atoms = tuple(sorted(acc.items(), key=lambda kv: json.dumps(kv[0])))
        canon = json.dumps([level, [[item, _r(p)] for item, p in atoms]], separators=(",", ":"))
        key = hashlib.sha256(canon.encode()).hexdigest()
        self.nodes.setdefault(key, Node(level, atoms))
        return key


@dataclass
class TruncatedHierarchy:
    depth: int
    levels: list                         # root key per level, levels[0] is level 1
    nodes: dict = field(repr=False, default_factory=dict)

    def canonical(self) -> str:
        return json.dumps(self.levels)

    def expand(self, key: str | None = None):
        """Nested JSON form of one level (default: the deepest)."""
        key = key if key is not None else self.levels[-1]
        node = self.nodes[key]
        if node.level == 1:
            return {"level": 1, "states": [[s, p] for s, p in node.atoms]}
        if node.level == 0:
            return [[c, self.expand(child), w] for (c, child), w in node.atoms]
        return {"level": node.level,
                "atoms": [[s, self.expand(pop), p] for (s, pop), p in node.atoms]}

    def dump(self) -> dict:
        return {"depth": self.depth, "keys": self.levels,
                "levels": [self.expand(k) for k in self.levels]}


def _labels(ts: TypeSpace):
    return [str(s) for s in ts.states]


class _Extractor:
    def __init__(self, g: GameInstance, interner: Interner | None = None):
        self.g = g
        self.table = interner if interner is not None else Interner()
        self.memo: dict[tuple[int, int], str] = {}
        self.states = _labels(g.types)
        self.chars = [str(c) for c in g.characteristics.labels]

    def level(self, beta: int, k: int) -> str:
        hit = self.memo.get((beta, k))
        if hit is not None:
            return hit
        ts = self.g.types
        row = ts.beliefs[beta]
        if k == 1:
            key = self.table.make(1, [(self.states[ts.sigma[t]], row[t]) for t in ts.support[beta]])
        else:
            entries = []
            for t in ts.support[beta]:
                pop = self.table.make(0, [((self.chars[c], self.level(b2, k - 1)), w)
                                          for c, b2, w in ts.tau[t]])
                entries.append(((self.states[ts.sigma[t]], pop), row[t]))
            key = self.table.make(k, entries)
        self.memo[(beta, k)] = key
        return key


def extract_hierarchy(g: GameInstance, beta: int, depth: int, max_depth: int = MAX_DEPTH,
                      interner: Interner | None = None) -> TruncatedHierarchy:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > max_depth:
        raise ValueError(f"depth {depth} exceeds the cap {max_depth}")
    ex = _Extractor(g, interner)
    levels = [ex.level(beta, k) for k in range(1, depth + 1)]
    return TruncatedHierarchy(depth, levels, ex.table.nodes)


def extract_all(g: GameInstance, depth: int, max_depth: int = MAX_DEPTH) -> dict:
    """Hierarchies of every registered belief, sharing one table."""
    if depth > max_depth:
        raise ValueError(f"depth {depth} exceeds the cap {max_depth}")
    ex = _Extractor(g)
    return {b: TruncatedHierarchy(depth, [ex.level(b, k) for k in range(1, depth + 1)], ex.table.nodes)
            for b in range(g.types.n_beliefs)}


def hierarchy_equivalent(g: GameInstance, beta1: int, beta2: int, depth: int,
                         max_depth: int = MAX_DEPTH) -> bool:
    ex = _Extractor(g)
    if depth > max_depth:
        raise ValueError(f"depth {depth} exceeds the cap {max_depth}")
    return ex.level(beta1, depth) == ex.level(beta2, depth)


# ---------------------------------------------------------------------------
# coherence

def _truncate(table: Interner, key: str, memo: dict) -> str:
    """Map a level-(k+1) node to the level-k node it implies."""
    if key in memo:
        return memo[key]
    node = table.nodes[key]
    if node.level == 2:
        out = table.make(1, [(s, p) for (s, _), p in node.atoms])
    elif node.level == 0:
        out = table.make(0, [((c, _truncate(table, child, memo)), w) for (c, child), w in node.atoms])
    else:
        out = table.make(node.level - 1, [((s, _truncate(table, pop, memo)), p) for (s, pop), p in node.atoms])
    memo[key] = out
    return out


def _close(nodes: dict, k1: str, k2: str, tol: float) -> bool:
    if k1 == k2:
        return True
    a, b = nodes[k1], nodes[k2]
    if a.level != b.level or len(a.atoms) != len(b.atoms):
        return False
    if a.level == 1:
        da, db = dict(a.atoms), dict(b.atoms)
        return da.keys() == db.keys() and all(abs(da[s] - db[s]) <= tol for s in da)
    unused = list(b.atoms)
    for item, p in a.atoms:
        for j, (item2, p2) in enumerate(unused):
            if item[0] == item2[0] and abs(p - p2) <= tol and _close(nodes, item[1], item2[1], tol):
                del unused[j]
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class CoherenceReport:
    coherent: bool
    first_violation_level: int | None
    detail: str = ""


def _prob_ok(node: Node) -> bool:
    ps = np.array([p for _, p in node.atoms])
    return bool(np.all(ps >= 0) and abs(ps.sum() - 1.0) <= 1e-12 * max(1, len(ps)))


def check_coherence(h: TruncatedHierarchy, tol: float = COHERENCE_TOL) -> CoherenceReport:
    table = Interner()
    table.nodes = dict(h.nodes)
    seen, stack = set(), list(h.levels)
    while stack:
        key = stack.pop()
        if key in seen:
            continue
        seen.add(key)
        node = table.nodes[key]
        if not _prob_ok(node):
            return CoherenceReport(False, max(node.level, 1), f"node {key[:12]} is not a probability vector")
        if node.level >= 2:
            stack.extend(pop for (_, pop), _ in node.atoms)
        elif node.level == 0:
            stack.extend(child for (_, child), _ in node.atoms)
    memo: dict = {}
    for k in range(1, h.depth):
        implied = _truncate(table, h.levels[k], memo)
        if not _close(table.nodes, implied, h.levels[k - 1], tol):
            return CoherenceReport(False, k, f"level {k + 1} does not marginalise to level {k}")
    return CoherenceReport(True, None)


def mix_hierarchies(h1: TruncatedHierarchy, h2: TruncatedHierarchy, weight: float) -> TruncatedHierarchy:
    """Level-by-level mixture ``weight * h1 + (1 - weight) * h2``."""
    if h1.depth != h2.depth:
        raise ValueError("hierarchies must have the same depth")
    table = Interner()
    table.nodes = {**h1.nodes, **h2.nodes}
    levels = []
    for k1, k2 in zip(h1.levels, h2.levels):
        n1, n2 = table.nodes[k1], table.nodes[k2]
        entries = [(i, weight * p) for i, p in n1.atoms] + [(i, (1 - weight) * p) for i, p in n2.atoms]
        levels.append(table.make(n1.level, entries))
    return TruncatedHierarchy(h1.depth, levels, table.nodes)


def duplicate_world(g: GameInstance, t: int, share: float = 0.5) -> GameInstance:
    """Add a copy of world ``t`` and move ``share`` of every belief's mass on ``t`` to it."""
    ts = g.types
    beliefs = np.hstack([ts.beliefs, ts.beliefs[:, [t]] * share])
    beliefs[:, t] = ts.beliefs[:, t] - beliefs[:, -1]
    types = TypeSpace(ts.worlds + (f"{ts.worlds[t]}'",), ts.states, list(ts.sigma) + [int(ts.sigma[t])],
                      ts.tau + (ts.tau[t],), beliefs, ts.state_values)
    return GameInstance(g.characteristics, g.lattice, g.availability, types, g.payoff, g.queries, g.name)
