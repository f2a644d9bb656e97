"""Random small linear games for property tests and acceptance runs."""
from __future__ import annotations

import itertools

import numpy as np

from .game import ActionLattice, CharacteristicSpace, GameInstance, PayoffOracle, TypeSpace
from .order import FinitePoset

DIAMOND = ("bot", "x", "y", "top")


def diamond_lattice() -> ActionLattice:
    pairs = [(a, a) for a in DIAMOND] + [("bot", "x"), ("bot", "y"), ("bot", "top"),
                                         ("x", "top"), ("y", "top")]
    return ActionLattice.from_pairs(DIAMOND, pairs)


def _sublattices(lat: ActionLattice):
    n = len(lat)
    out = []
    for r in range(1, n + 1):
        for sub in itertools.combinations(range(n), r):
            s = set(sub)
            if all(lat.join(a, b) in s and lat.meet(a, b) in s for a in sub for b in sub):
                out.append(sub)
    return out


def _split(rng, total: float, k: int) -> list[float]:
    w = rng.dirichlet(np.ones(k)) * total
    w[-1] = total - w[:-1].sum()
    return [float(x) for x in w]


def _probability(rng, n: int, support: int) -> np.ndarray:
    row = np.zeros(n)
    idx = rng.choice(n, size=min(support, n), replace=False)
    row[idx] = rng.dirichlet(np.ones(len(idx)))
    row[idx[-1]] = 1.0 - (row.sum() - row[idx[-1]])
    return row


def random_type_space(rng, n_chars: int, nu: np.ndarray, max_worlds: int, max_beliefs: int,
                      n_states: int, max_atoms_per_char: int = 2):
    n_w = int(rng.integers(1, max_worlds + 1))
    n_b = int(rng.integers(1, max_beliefs + 1))
    beliefs = np.array([_probability(rng, n_w, int(rng.integers(1, n_w + 1))) for _ in range(n_b)])
    sigma = rng.integers(0, n_states, size=n_w)
    tau = []
    for _ in range(n_w):
        atoms = []
        for c in range(n_chars):
            k = int(rng.integers(1, max_atoms_per_char + 1))
            ids = rng.choice(n_b, size=min(k, n_b), replace=False)
            for b, w in zip(ids, _split(rng, float(nu[c]), len(ids))):
                atoms.append((c, int(b), w))
        tau.append(atoms)
    return TypeSpace(tuple(f"t{k}" for k in range(n_w)), tuple(f"s{k}" for k in range(n_states)),
                     sigma, tuple(tau), beliefs)


def _random_queries(rng, n_chars: int, n_beliefs: int, k: int = 2):
    return [(int(rng.integers(n_chars)), int(rng.integers(n_beliefs))) for _ in range(k)]


def random_supermodular_game(rng: np.random.Generator, max_chars: int = 3, max_actions: int = 3,
                             max_worlds: int = 4, max_beliefs: int = 5, max_states: int = 2,
                             coupling: float = 1.5) -> GameInstance:
    """Chain actions; weights built from nondecreasing increments so differences increase.

    ``weights[c, a, s, c2, .] = sum over k <= a of D_k`` with every
    ``D_k`` (k >= 1) nondecreasing in the other player's action.
    """
    n_c = int(rng.integers(1, max_chars + 1))
    n_a = int(rng.integers(2, max_actions + 1))
    n_s = int(rng.integers(1, max_states + 1))
    nu = rng.dirichlet(np.ones(n_c))
    nu[-1] = 1.0 - nu[:-1].sum()
    lattice = ActionLattice.chain(tuple(range(n_a)))
    availability = []
    for _ in range(n_c):
        k = int(rng.integers(1, n_a + 1))
        availability.append(tuple(sorted(rng.choice(n_a, size=k, replace=False).tolist())))
    types = random_type_space(rng, n_c, nu, max_worlds, max_beliefs, n_s)
    base = rng.uniform(-1, 1, size=(n_c, n_a, n_s))
    incr = np.sort(rng.uniform(-coupling, coupling, size=(n_c, n_a, n_s, n_c, n_a)), axis=-1)
    incr[:, 0] = rng.uniform(-1, 1, size=(n_c, n_s, n_c, n_a))
    weights = np.cumsum(incr, axis=1)
    return GameInstance(CharacteristicSpace(tuple(f"c{k}" for k in range(n_c)), nu), lattice,
                        tuple(availability), types, PayoffOracle("linear", base, weights),
                        tuple(_random_queries(rng, n_c, types.n_beliefs)), "random-supermodular")


def random_diamond_game(rng: np.random.Generator, max_chars: int = 2, max_worlds: int = 3,
                        max_beliefs: int = 4, n_states: int = 2) -> GameInstance:
    """Diamond action lattice with payoff u(a) g(others) + h(a), u modular and increasing."""
    lat = diamond_lattice()
    subs = _sublattices(lat)
    n_c = int(rng.integers(1, max_chars + 1))
    nu = rng.dirichlet(np.ones(n_c))
    nu[-1] = 1.0 - nu[:-1].sum()
    availability = [subs[int(rng.integers(len(subs)))] for _ in range(n_c)]
    types = random_type_space(rng, n_c, nu, max_worlds, max_beliefs, n_states)
    bot, x, y, top = range(4)
    base = np.zeros((n_c, 4, n_states))
    weights = np.zeros((n_c, 4, n_states, n_c, 4))
    for c in range(n_c):
        p, q = rng.uniform(0, 1, size=2)
        u = np.array([0.0, p, q, p + q])
        for s in range(n_states):
            h = rng.uniform(-1, 1, size=4)
            h[top] = max(h[top], h[x] + h[y] - h[bot])  # supermodular
            base[c, :, s] = h
            for c2 in range(n_c):
                g0 = rng.uniform(-1, 1)
                gx, gy = g0 + rng.uniform(0, 1, size=2)
                gt = max(gx, gy) + rng.uniform(0, 1)
                g = np.array([g0, gx, gy, gt])
                weights[c, :, s, c2, :] = np.outer(u, g)
    return GameInstance(CharacteristicSpace(tuple(f"c{k}" for k in range(n_c)), nu), lat,
                        tuple(availability), types, PayoffOracle("linear", base, weights),
                        tuple(_random_queries(rng, n_c, types.n_beliefs)), "random-diamond")


def random_micro_game(rng: np.random.Generator) -> GameInstance:
    """At most 2 worlds, 2 tau atoms per world and 3 actions; payoffs unrestricted."""
    n_a = int(rng.integers(2, 4))
    n_c = int(rng.integers(1, 3))
    n_s = int(rng.integers(1, 3))
    nu = rng.dirichlet(np.ones(n_c)) if n_c > 1 else np.ones(1)
    if n_c > 1:
        nu[-1] = 1.0 - nu[0]
    atoms_per_char = 2 if n_c == 1 else 1
    types = random_type_space(rng, n_c, nu, 2, 4, n_s, atoms_per_char)
    availability = []
    for _ in range(n_c):
        k = int(rng.integers(2, n_a + 1))
        availability.append(tuple(sorted(rng.choice(n_a, size=k, replace=False).tolist())))
    base = rng.uniform(-1, 1, size=(n_c, n_a, n_s))
    weights = rng.uniform(-2, 2, size=(n_c, n_a, n_s, n_c, n_a))
    return GameInstance(CharacteristicSpace(tuple(f"c{k}" for k in range(n_c)), nu),
                        ActionLattice.chain(tuple(range(n_a))), tuple(availability), types,
                        PayoffOracle("linear", base, weights), (), "random-micro")


def random_poset(rng: np.random.Generator, n: int, density: float = 0.3) -> FinitePoset:
    """Transitive closure of a random DAG over a random labelling."""
    rel = np.eye(n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                rel[i, j] = True
    for k in range(n):
        rel |= rel[:, [k]] & rel[[k], :]
    perm = rng.permutation(n)
    rel = rel[np.ix_(perm, perm)]
    return FinitePoset(tuple(range(n)), rel)
