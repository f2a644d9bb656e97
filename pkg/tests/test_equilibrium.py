import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixture_builders import non_supermodular_game
from lgl.email_game import EmailGameParams, build_email_game
from lgl.equilibrium import (assumption_report, best_response_set, check_increasing_differences,
                             check_supermodular, extremal_equilibrium, induced_aggregate, round_bound,
                             sandwich_check, validate_profile, verify_equilibrium)
from lgl.errors import AssumptionViolation, BrokenLatticeArgmax, UnsupportedMode
from lgl.game import ActionLattice, CharacteristicSpace, GameInstance, PayoffOracle, TypeSpace
from lgl.global_game import build_global_game, common_certainty_fixture
from lgl.icr import BehaviorMap, check_self_rationalizing, icr_solve
from lgl.random_games import random_diamond_game, random_supermodular_game


def with_payoff(g, base, weights):
    return GameInstance(g.characteristics, g.lattice, g.availability, g.types,
                        PayoffOracle("linear", base, weights), g.queries, g.name)


def small_email():
    return build_email_game(EmailGameParams(n_positions=6, max_signals=4))


# ---------------------------------------------------------------- assumptions

def test_chain_games_vacuously_supermodular():
    rep = check_supermodular(common_certainty_fixture([0.2, 0.8]))
    assert rep.supermodular_ok and rep.sublattice_ok and rep.violations == []


def test_global_and_email_increasing_differences():
    assert check_increasing_differences(common_certainty_fixture([0.2, 0.8])).ok
    assert assumption_report(small_email()).ok


def test_sign_flipped_global_game_violates_increasing_differences():
    g = common_certainty_fixture([0.2, 0.8])
    base = np.zeros((1, 2, 2))
    base[0, 1] = [0.2, 0.8]
    weights = np.zeros((1, 2, 2, 1, 2))
    weights[0, 1, :, 0, 1] = -1.0  # a (s - theta)
    rep = check_increasing_differences(with_payoff(g, base, weights))
    assert not rep.increasing_differences_ok
    assert ("increasing_differences", 0, 1, 0, 0, 0, 0, 1) in rep.violations


def test_diamond_counterexample_witness():
    rep = check_supermodular(non_supermodular_game())
    assert not rep.supermodular_ok
    assert rep.violations == [("supermodular", 1, 2, 0, 0, "base")]


def test_non_sublattice_availability_reported():
    g = non_supermodular_game()
    g2 = GameInstance(g.characteristics, g.lattice, ((1, 2),), g.types, g.payoff)
    rep = check_supermodular(g2)
    assert not rep.sublattice_ok


def test_blackbox_modes():
    g = common_certainty_fixture([0.5])
    lin = g.payoff
    bb = GameInstance(g.characteristics, g.lattice, g.availability, g.types,
                      PayoffOracle("blackbox", evaluator=lambda *args: lin(*args)), g.queries)
    with pytest.raises(UnsupportedMode):
        check_increasing_differences(bb)
    assert check_supermodular(bb, samples=[np.array([[0.5, 0.5]])]).sampled
    assert not assumption_report(bb).ok


def test_diamond_sampled_check_finds_violation():
    g = non_supermodular_game()
    lin = g.payoff
    bb = GameInstance(g.characteristics, g.lattice, g.availability, g.types,
                      PayoffOracle("blackbox", evaluator=lambda *args: lin(*args)))
    rep = check_supermodular(bb, samples=[np.array([[1.0, 0, 0, 0]])])
    assert rep.sampled and not rep.supermodular_ok


# ---------------------------------------------------------------- profiles

def test_induced_aggregate_examples():
    g = build_global_game([0.5], np.ones((2, 1)), [[(0, 0.3), (1, 0.7)]])
    assert induced_aggregate(g, {(0, 0): 1, (0, 1): 1}, 0).tolist() == [[0.0, 1.0]]
    assert np.allclose(induced_aggregate(g, {(0, 0): 0, (0, 1): 1}, 0), [[0.3, 0.7]])


def test_email_all_zero_aggregate():
    g = small_email()
    zeta = {p: 0 for p in g.pairs}
    for t in range(g.n_worlds):
        agg = induced_aggregate(g, zeta, t)
        assert agg[:, 0].sum() == pytest.approx(1.0, abs=1e-12) and agg[:, 1].sum() == 0


def test_best_response_examples():
    g = common_certainty_fixture([-0.5, 0.0])
    invest = {p: 1 for p in g.pairs}
    assert best_response_set(g, 0, 0, invest) == {0}
    assert best_response_set(g, 0, 1, invest) == {0, 1}


def test_singleton_availability_best_response():
    g = common_certainty_fixture([0.5])
    g1 = GameInstance(g.characteristics, g.lattice, ((1,),), g.types, g.payoff, g.queries)
    assert best_response_set(g1, 0, 0, {(0, 0): 1}) == {1}


def test_validate_profile():
    g = common_certainty_fixture([0.5])
    assert validate_profile(g, {(0, 0): 1}) == []
    assert validate_profile(g, {})


def test_email_all_zero_is_equilibrium():
    g = small_email()
    assert verify_equilibrium(g, {p: 0 for p in g.pairs}).is_bne


def test_certain_attack_state_all_attack_is_equilibrium():
    # one world in the attack state, everyone certain of it, email payoffs
    M, L = 1.0, 2.0
    types = TypeSpace(("t",), ("s0", "s1"), [1], (((0, 0, 1.0),),), np.ones((1, 1)))
    weights = np.zeros((1, 2, 2, 1, 2))
    weights[0, 0, 0, 0, 0] = M
    weights[0, 1, 0, 0, 0] = -L
    weights[0, 1, 1, 0, 1] = M
    weights[0, 1, 1, 0, 0] = -L
    g = GameInstance(CharacteristicSpace(("c",), [1.0]), ActionLattice.chain((0, 1)), ((0, 1),), types,
                     PayoffOracle("linear", np.zeros((1, 2, 2)), weights))
    assert verify_equilibrium(g, {(0, 0): 1}).is_bne
    assert verify_equilibrium(g, {(0, 0): 0}).is_bne


def test_invest_everywhere_fails_with_negative_state():
    g = common_certainty_fixture([-0.5, 0.5])
    res = verify_equilibrium(g, {p: 1 for p in g.pairs})
    assert not res.is_bne
    assert [v[:3] for v in res.violations] == [(0, 0, 1)]
    assert res.max_slack == pytest.approx(0.5)


# ---------------------------------------------------------------- extremal equilibria

def test_common_certainty_two_strict_equilibria():
    g = common_certainty_fixture([0.1, 0.5, 0.9])
    top, bottom = extremal_equilibrium(g, "top"), extremal_equilibrium(g, "bottom")
    assert set(top.zeta.values()) == {1} and set(bottom.zeta.values()) == {0}
    assert top.verified.is_bne and bottom.verified.is_bne
    assert sandwich_check(g).ok


def test_unique_equilibrium_top_equals_bottom():
    g = common_certainty_fixture([-0.5, 1.5])
    assert extremal_equilibrium(g, "top").zeta == extremal_equilibrium(g, "bottom").zeta


def test_email_bottom_is_all_zero():
    g = small_email()
    bottom = extremal_equilibrium(g, "bottom")
    assert set(bottom.zeta.values()) == {0} and bottom.verified.is_bne
    top = extremal_equilibrium(g, "top")
    assert top.verified.is_bne


def test_assumption_violation_and_force():
    g = non_supermodular_game().with_queries([(0, 0)])
    with pytest.raises(AssumptionViolation):
        extremal_equilibrium(g, "top")
    # x and y tie as best replies and their join is not one
    with pytest.raises(BrokenLatticeArgmax):
        extremal_equilibrium(g, "top", force=True)


def test_bad_direction():
    with pytest.raises(ValueError):
        extremal_equilibrium(common_certainty_fixture([0.5]), "sideways")


def test_dominance_solvable_sandwich_is_tight():
    g = common_certainty_fixture([-0.5, 1.5])
    S = icr_solve(g).S
    top = extremal_equilibrium(g, "top").zeta
    assert S.is_singleton() and all(S[p] == {top[p]} for p in g.pairs)


def random_game(seed):
    rng = np.random.default_rng(seed)
    return random_diamond_game(rng) if seed % 3 == 0 else random_supermodular_game(rng)


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1))
def test_extremal_properties(seed):
    g = random_game(seed)
    lat = g.lattice
    S = icr_solve(g).S
    top, bottom = extremal_equilibrium(g, "top"), extremal_equilibrium(g, "bottom")
    for res, down in ((top, True), (bottom, False)):
        assert res.rounds <= round_bound(g)
        assert res.verified.is_bne and res.verified.max_slack <= 1e-9
        for prev, nxt in zip(res.trace, res.trace[1:]):
            for p in g.pairs:
                assert lat.le(nxt[p], prev[p]) if down else lat.le(prev[p], nxt[p])
        rep = check_self_rationalizing(g, BehaviorMap.from_profile(res.zeta))
        assert rep.rationalizes_itself
    for p in g.pairs:
        assert top.zeta[p] == lat.sup(S[p]) and bottom.zeta[p] == lat.inf(S[p])
    assert sandwich_check(g, S, top.zeta, bottom.zeta).ok
    assert (top.zeta == bottom.zeta) == S.is_singleton()
