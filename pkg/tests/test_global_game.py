import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lgl.errors import GameFormatError
from lgl.global_game import (belief_operator, build_global_game, certainty_operator,
                             common_certainty_fixture, compute_statistics, threshold_regions,
                             nsrd_set, random_global_game, region_rows, srd_set,
                             uniform_rank_fixture, uniqueness_certificate, urb_set, x_thresholds)
from lgl.game import GameInstance, TypeSpace
from lgl.icr import icr_solve
from lgl.random_games import random_supermodular_game


def solver_sets(g):
    S = icr_solve(g).S
    return {b: S[(0, b)] for b in range(g.types.n_beliefs)}


def coarse_global_game(rng, n_max=12):
    """Random instance with states on a coarse grid so that ties in x are common."""
    n_w = int(rng.integers(1, n_max + 1))
    n_b = int(rng.integers(1, n_max + 1))
    states = rng.choice([-0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5], size=n_w)
    beliefs = np.zeros((n_b, n_w))
    for b in range(n_b):
        supp = rng.choice(n_w, size=int(rng.integers(1, min(3, n_w) + 1)), replace=False)
        beliefs[b, supp] = rng.dirichlet(np.ones(len(supp)))
        beliefs[b, supp[-1]] = 1.0 - beliefs[b, supp[:-1]].sum()
    tau = []
    for _ in range(n_w):
        supp = rng.choice(n_b, size=int(rng.integers(1, min(3, n_b) + 1)), replace=False)
        w = rng.dirichlet(np.ones(len(supp)))
        w[-1] = 1.0 - w[:-1].sum()
        tau.append([(int(b), float(x)) for b, x in zip(supp, w)])
    return build_global_game(states, beliefs, tau)


# ---------------------------------------------------------------- statistics

def test_point_mass_expected_state():
    g = common_certainty_fixture([0.7, 0.2])
    assert compute_statistics(g).x[0] == pytest.approx(0.7)


def test_full_set_has_full_mass():
    st_ = compute_statistics(uniform_rank_fixture())
    for b in range(st_.n):
        assert st_.F(b, st_.registry) == pytest.approx(1.0, abs=1e-12)


def test_single_belief_rank_one():
    assert compute_statistics(common_certainty_fixture([0.4])).rank.tolist() == [1.0]


def test_uniform_rank_fixture_ranks():
    st_ = compute_statistics(uniform_rank_fixture())
    assert np.allclose(st_.rank, [0.25, 0.5, 0.75, 1.0])
    assert np.allclose(st_.strict_rank, [0.0, 0.25, 0.5, 0.75])


def test_statistics_need_one_characteristic_and_numbers():
    with pytest.raises(GameFormatError):
        compute_statistics(_two_char_game())
    g = common_certainty_fixture([0.4])
    ts = g.types
    bare = GameInstance(g.characteristics, g.lattice, g.availability,
                        TypeSpace(ts.worlds, ts.states, ts.sigma, ts.tau, ts.beliefs), g.payoff, g.queries)
    with pytest.raises(GameFormatError):
        compute_statistics(bare)


def _two_char_game():
    rng = np.random.default_rng(0)
    while True:
        g = random_supermodular_game(rng)
        if g.n_chars == 2:
            return g


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_statistics_invariants(seed):
    rng = np.random.default_rng(seed)
    g = random_global_game(rng, max_worlds=15, max_beliefs=15)
    s = compute_statistics(g)
    vals = g.types.state_values
    assert np.all(s.x >= vals.min() - 1e-12) and np.all(s.x <= vals.max() + 1e-12)
    E = frozenset(int(b) for b in rng.choice(s.n, size=int(rng.integers(0, s.n + 1)), replace=False))
    for b in range(s.n):
        assert -1e-12 <= s.F(b, E) <= s.F(b, s.registry) + 1e-12
        assert s.rank[b] == pytest.approx(s.F(b, {k for k in range(s.n) if s.x[k] <= s.x[b]}), abs=1e-12)


# ---------------------------------------------------------------- sets and operators

def test_urb_everything_for_large_eps():
    g = uniform_rank_fixture()
    assert urb_set(g, 0.5) == frozenset(range(4))


def test_srd_strictness():
    g = common_certainty_fixture([0.9, 0.6, 0.3])
    assert srd_set(g, 0.1) == {0}
    assert nsrd_set(g, 0.1) == {2}
    assert 1 not in nsrd_set(g, 0.1)


def test_belief_operator_examples():
    g = common_certainty_fixture([-0.3, 0.0, 0.4, 1.2])
    s = compute_statistics(g)
    assert belief_operator(s, "one_minus_x", s.registry) == {b for b in range(4) if s.x[b] >= 0}
    assert belief_operator(s, 0.7, frozenset()) == frozenset()
    assert belief_operator(s, 0.0, {1, 3}) == {1, 3}


def test_certainty_operator_examples():
    g = uniform_rank_fixture()
    s = compute_statistics(g)
    full = certainty_operator(s, 0.5, s.registry)
    assert full.C == s.registry and full.iterations == 1
    # every belief expects a quarter in each class; {0, 1} carries 1/2
    assert certainty_operator(s, 0.6, {0, 1}).C == frozenset()


def test_threshold_examples():
    g = build_global_game([0.3, 0.9], np.eye(2), [[(0, 1.0)], [(1, 1.0)]])
    s = compute_statistics(g)
    # each belief sees only itself, so its rank is 1; reduce rank to 0.5 with a shared world
    g2 = build_global_game([0.3, 0.7], np.eye(2), [[(0, 0.5), (1, 0.5)], [(0, 0.5), (1, 0.5)]])
    s2 = compute_statistics(g2)
    assert s2.rank[0] == pytest.approx(0.5)
    th = x_thresholds(s2, 0.0, {0})
    assert th.x_upper == pytest.approx(0.3) and not th.upper_empty
    g3 = build_global_game([0.9, 0.95], np.eye(2), [[(0, 0.5), (1, 0.5)], [(0, 0.5), (1, 0.5)]])
    th3 = x_thresholds(g3, 0.0, {0})
    assert th3.upper_empty and th3.x_upper == -np.inf
    th_all = x_thresholds(s, 1.0, s.registry)
    assert th_all.x_upper == pytest.approx(0.9)


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_operator_monotone_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    g = random_global_game(rng, max_worlds=15, max_beliefs=15)
    s = compute_statistics(g)
    small = frozenset(int(b) for b in range(s.n) if rng.random() < 0.4)
    big = small | frozenset(int(b) for b in range(s.n) if rng.random() < 0.5)
    for f in (rng.uniform(), "x", "one_minus_x"):
        assert belief_operator(s, f, small) <= belief_operator(s, f, big)
        c_small, c_big = certainty_operator(s, f, small).C, certainty_operator(s, f, big).C
        assert c_small <= c_big and c_big <= big
        assert certainty_operator(s, f, c_big).C == c_big
        assert belief_operator(s, f, c_big) == c_big


# ---------------------------------------------------------------- certificates

def test_empty_urb_gives_empty_regions():
    g = common_certainty_fixture([0.95, 0.95, 0.95])
    cert = uniqueness_certificate(g, 0.1)
    assert urb_set(g, 0.1) == frozenset()
    assert cert.invest == frozenset() and cert.noninvest == frozenset()


def test_uniform_rank_certificate_verified_by_solver():
    g = uniform_rank_fixture()
    cert = uniqueness_certificate(g, 0.3)
    assert cert.invest == {0, 1, 2}
    sets = solver_sets(g)
    assert all(sets[b] == {1} for b in cert.invest)
    assert cert.report["core_is_fixed_point"] and cert.report["threshold_chain_ok"]


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 0.2499))
def test_core_empty_below_quarter(seed, eps):
    # a belief in the core expects at least 1 - eps of the population inside the rank band,
    # which is incompatible with its own rank being within eps of 1/2 when eps < 1/4
    g = random_global_game(np.random.default_rng(seed), max_worlds=15, max_beliefs=15)
    s = compute_statistics(g)
    assert certainty_operator(s, 1.0 - eps, urb_set(s, eps), tol=0.0).C == frozenset()


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 0.6))
def test_certificate_sound_and_chain(seed, eps):
    g = random_global_game(np.random.default_rng(seed), max_worlds=15, max_beliefs=15)
    cert = uniqueness_certificate(g, eps)
    assert cert.report["core_is_fixed_point"] and cert.report["threshold_chain_ok"]
    sets = solver_sets(g)
    assert all(sets[b] == {1} for b in cert.invest)
    assert all(sets[b] == {0} for b in cert.noninvest)


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1), st.floats(0.3, 1.0))
def test_threshold_regions_sound(seed, p):
    g = coarse_global_game(np.random.default_rng(seed))
    s = compute_statistics(g)
    E = certainty_operator(s, p, s.registry).C
    reg = threshold_regions(s, p, E)
    sets = solver_sets(g)
    assert all(sets[b] == {1} for b in reg.invest)
    assert all(sets[b] == {0} for b in reg.noninvest)


def test_weak_rank_noninvest_threshold_would_be_unsound():
    # one belief, certain of a world at x = 0.5 populated only by itself: both actions are rationalizable
    g = common_certainty_fixture([0.5])
    s = compute_statistics(g)
    E = s.registry
    weak = x_thresholds(s, 0.0, E)
    assert weak.lower_empty  # 0.5 >= rank 1 fails, so the weak threshold is +inf and would certify 0
    assert solver_sets(g)[0] == {0, 1}
    reg = threshold_regions(s, 1.0, E)
    assert reg.noninvest == frozenset() and reg.invest == frozenset()


def test_threshold_regions_require_premise():
    g = uniform_rank_fixture()
    reg = threshold_regions(g, 0.9, {0})
    assert not reg.report["premise_holds"] and not reg.invest


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_characterization_matches_solver(seed):
    g = random_global_game(np.random.default_rng(seed), max_worlds=20, max_beliefs=20)
    s = compute_statistics(g)
    sets = solver_sets(g)
    assert {b for b, a in sets.items() if 1 in a} == certainty_operator(s, "one_minus_x", s.registry).C
    assert {b for b, a in sets.items() if 0 in a} == certainty_operator(s, "x", s.registry).C


def test_region_rows_shape():
    rows = region_rows(uniform_rank_fixture(), 0.3)
    assert len(rows) == 4 and rows[0][-1] == 1 and rows[3][-1] == ""
