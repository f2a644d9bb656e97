import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixture_builders import coordination_game, two_world_game
from lgl.email_game import EmailGameParams, build_email_game
from lgl.equilibrium import extremal_equilibrium
from lgl.errors import EmptySurvivors, UnavailableAction
from lgl.game import ActionLattice, CharacteristicSpace, GameInstance, PayoffOracle, TypeSpace
from lgl.global_game import build_global_game
from lgl.icr import (BehaviorMap, best_reply_feasible, check_self_rationalizing, eliminate_round,
                     feasible_aggregates_polytope, icr_solve, summary_rows, validate_behavior)
from lgl.random_games import random_diamond_game, random_micro_game, random_supermodular_game


def single_state_global(x):
    return build_global_game([x], np.ones((1, 1)), [[(0, 1.0)]])


# ---------------------------------------------------------------- polytope

def test_singleton_map_gives_single_point():
    g = two_world_game()
    b = BehaviorMap({p: (0,) for p in g.pairs})
    poly = feasible_aggregates_polytope(g, 0, b)
    verts = list(poly.vertices())
    assert len(verts) == 1
    # all of tau(t) sits on action 0
    expect = np.zeros((2, 2))
    for c2, _, w in g.types.tau[0]:
        expect[c2, 0] += w
    assert np.allclose(poly.aggregate(verts[0]), expect)


def test_one_atom_two_actions_is_segment():
    g = single_state_global(0.5)
    poly = feasible_aggregates_polytope(g, 0, BehaviorMap.full(g))
    verts = [poly.aggregate(v) for v in poly.vertices()]
    assert len(verts) == 2
    assert sorted(v.tolist() for v in verts) == [[[0.0, 1.0]], [[1.0, 0.0]]]


def four_atom_game():
    types = TypeSpace(("t",), ("s",), [0], (tuple((0, k, 0.25) for k in range(4)),), np.ones((4, 1)))
    return GameInstance(CharacteristicSpace(("c",), [1.0]), ActionLattice.chain((0, 1)), ((0, 1),), types,
                        PayoffOracle("linear", np.zeros((1, 2, 1)), np.zeros((1, 2, 1, 1, 2))))


def test_four_atom_polytope_has_sixteen_vertices():
    g = four_atom_game()
    poly = feasible_aggregates_polytope(g, 0, BehaviorMap.full(g))
    assert poly.problem.n_vars == 8 and len(poly.problem.b_eq) == 4
    verts = list(poly.vertices())
    assert len({tuple(v) for v in verts}) == 16
    for v in verts:
        assert poly.problem.violation(v) <= 1e-15


def test_email_world_polytope_vertex_count():
    g = build_email_game(EmailGameParams(n_positions=4, max_signals=2))
    b = BehaviorMap.full(g)
    t = 1
    poly = feasible_aggregates_polytope(g, t, b)
    n_atoms = len(g.types.tau[t])
    assert len(list(poly.vertices())) == 2 ** n_atoms


# ---------------------------------------------------------------- best replies

def test_complete_information_half_both_survive():
    g = single_state_global(0.5)
    b = BehaviorMap.full(g)
    for a in (0, 1):
        res = best_reply_feasible(g, 0, 0, a, b)
        assert res.survives and not res.approximate
        agg = res.witness.aggregates[0]
        # the witness is a point of the polytope that rationalizes a
        pay = [g.payoff(0, x, 0, agg) for x in (0, 1)]
        assert pay[a] >= max(pay) - 1e-12


def test_high_state_only_invest_survives():
    g = single_state_global(1.5)
    b = BehaviorMap.full(g)
    assert best_reply_feasible(g, 0, 0, 1, b).survives
    assert not best_reply_feasible(g, 0, 0, 0, b).survives


def test_singleton_map_is_plain_best_reply():
    g = single_state_global(0.3)
    assert best_reply_feasible(g, 0, 0, 1, BehaviorMap({(0, 0): (1,)})).survives  # 0.3 + 1 - 1 > 0
    assert not best_reply_feasible(g, 0, 0, 1, BehaviorMap({(0, 0): (0,)})).survives


def test_unavailable_action_rejected():
    g = two_world_game()
    g2 = GameInstance(g.characteristics, g.lattice, ((0,), (0, 1)), g.types, g.payoff, g.queries)
    with pytest.raises(UnavailableAction):
        best_reply_feasible(g2, 0, 0, 1, BehaviorMap.full(g2))


def brute_margin(g, c, beta, a, b):
    """Best worst-rival margin over the unmerged polytope, by scipy linprog."""
    from scipy.optimize import linprog
    ts = g.types
    rivals = [r for r in g.availability[c] if r != a]
    if not rivals:
        return np.inf
    cols, const = [], np.zeros(len(rivals))
    eq_rows = []
    for t in ts.support[beta]:
        s = int(ts.sigma[t])
        bt = ts.beliefs[beta, t]
        const += bt * np.array([g.payoff.base[c, a, s] - g.payoff.base[c, r, s] for r in rivals])
        for c2, b2, w in ts.tau[t]:
            start = len(cols)
            for a2 in sorted(b[(c2, b2)]):
                cols.append(bt * np.array([g.payoff.weights[c, a, s, c2, a2] - g.payoff.weights[c, r, s, c2, a2]
                                           for r in rivals]))
            eq_rows.append((start, len(cols), w))
    n = len(cols)
    coef = np.array(cols).T.reshape(len(rivals), n)
    a_eq = np.zeros((len(eq_rows), n + 1))
    for k, (lo, hi, _) in enumerate(eq_rows):
        a_eq[k, lo:hi] = 1
    # maximise z subject to const + coef x >= z
    a_ub = np.hstack([-coef, np.ones((len(rivals), 1))])
    res = linprog(np.r_[np.zeros(n), -1.0], A_ub=a_ub, b_ub=const, A_eq=a_eq, b_eq=[w for *_, w in eq_rows],
                  bounds=[(0, None)] * n + [(-100, 100)], method="highs")
    assert res.status == 0
    return -res.fun


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1))
def test_linear_feasibility_matches_unmerged_lp(seed):
    rng = np.random.default_rng(seed)
    g = random_supermodular_game(rng, max_actions=4, max_worlds=5) if seed % 2 else random_micro_game(rng)
    b = BehaviorMap({p: [a for a in g.availability[p[0]] if rng.random() < 0.7] or [g.availability[p[0]][0]]
                     for p in g.pairs})
    for c, beta in g.pairs:
        for a in g.availability[c]:
            margin = brute_margin(g, c, beta, a, b)
            if abs(margin) < 1e-7:
                continue
            res = best_reply_feasible(g, c, beta, a, b)
            assert res.survives == (margin > 0)
            if res.survives:
                wit = res.witness
                for t, agg in wit.aggregates.items():
                    assert np.allclose(agg.sum(axis=1), [sum(w for c2, _, w in g.types.tau[t] if c2 == k)
                                                        for k in range(g.n_chars)])
                for r in g.availability[c]:
                    diff = sum(wit.beta[t] * (g.payoff(c, a, int(g.types.sigma[t]), agg)
                                              - g.payoff(c, r, int(g.types.sigma[t]), agg))
                               for t, agg in wit.aggregates.items())
                    assert diff >= -1e-8


def test_witness_respects_allowed_sets():
    g = two_world_game()
    b = BehaviorMap({p: (1,) if p[0] == 0 else (0, 1) for p in g.pairs})
    res = best_reply_feasible(g, 0, 2, 1, b)
    assert res.survives
    for t, agg in res.witness.aggregates.items():
        assert agg[0, 0] == 0.0  # characteristic a only plays yes


# ---------------------------------------------------------------- elimination

def test_all_dominant_beliefs_reduce_in_one_round():
    g = build_global_game([1.2, 1.5, 2.0], np.eye(3), [[(t, 1.0)] for t in range(3)])
    nxt = eliminate_round(g, BehaviorMap.full(g))
    assert all(acts == {1} for _, acts in nxt.items())
    res = icr_solve(g)
    assert res.rounds == 1 and res.S == nxt


def test_self_rationalizing_input_unchanged():
    g = single_state_global(0.5)
    b = BehaviorMap.full(g)
    assert eliminate_round(g, b) == b
    assert check_self_rationalizing(g, b).is_fixed_point


def test_coordination_keeps_both_actions():
    g = coordination_game()
    res = icr_solve(g)
    assert res.S[(0, 0)] == {0, 1} and res.rounds == 0


def test_dominated_action_is_counterexample():
    g = single_state_global(-0.5)
    rep = check_self_rationalizing(g, BehaviorMap.full(g))
    assert not rep.is_fixed_point
    assert rep.counterexamples == ((0, 0, 1, "removed"),)


def test_empty_survivors_reported():
    # an initial map under which nothing can be a best reply at the given tolerance
    g = single_state_global(0.5)
    b = BehaviorMap({(0, 0): (0,)})
    with pytest.raises(EmptySurvivors):
        eliminate_round(g, b, candidates=BehaviorMap({(0, 0): (1,)}))


def test_validate_behavior():
    g = two_world_game()
    assert validate_behavior(g, BehaviorMap.full(g)) == []
    assert validate_behavior(g, BehaviorMap({(0, 2): ()}))


def test_summary_rows_list_rounds():
    g = build_global_game([-0.5, 0.5], np.eye(2), [[(0, 1.0)], [(1, 1.0)]])
    rows = summary_rows(g, icr_solve(g))
    assert ("all", 0, "0", 1, 1) in rows
    assert ("all", 1, "0 1", "", "") in rows


def random_game(seed):
    rng = np.random.default_rng(seed)
    return random_diamond_game(rng) if seed % 3 == 0 else random_supermodular_game(rng)


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1))
def test_trace_nested_and_fixed_point(seed):
    g = random_game(seed)
    res = icr_solve(g)
    for prev, nxt in zip(res.trace, res.trace[1:]):
        assert nxt.subset_of(prev) and nxt != prev
    assert eliminate_round(g, res.S) == res.S
    assert check_self_rationalizing(g, res.S).is_fixed_point


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_equilibria_are_contained(seed):
    g = random_game(seed)
    S = icr_solve(g).S
    for direction in ("top", "bottom"):
        eq = BehaviorMap.from_profile(extremal_equilibrium(g, direction).zeta)
        assert check_self_rationalizing(g, eq).rationalizes_itself
        assert eq.subset_of(S)


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_elimination_monotone_in_map(seed):
    rng = np.random.default_rng(seed)
    g = random_micro_game(rng) if seed % 2 else random_supermodular_game(rng)
    big = BehaviorMap({p: [a for a in g.availability[p[0]] if rng.random() < 0.8] or [g.availability[p[0]][-1]]
                       for p in g.pairs})
    small = BehaviorMap({p: [a for a in sorted(acts) if rng.random() < 0.6] or [min(acts)]
                         for p, acts in big.items()})
    try:
        lo, hi = eliminate_round(g, small), eliminate_round(g, big)
    except EmptySurvivors:
        return
    assert lo.subset_of(hi)


def test_larger_self_rationalizing_hand_map():
    g = coordination_game()
    S = icr_solve(g).S
    for acts in ((0,), (1,), (0, 1)):
        b = BehaviorMap({(0, 0): acts})
        assert check_self_rationalizing(g, b).rationalizes_itself
        assert b.subset_of(S)


def test_thread_count_does_not_change_result(monkeypatch):
    rng = np.random.default_rng(11)
    games = [random_supermodular_game(rng) for _ in range(10)]
    serial = [icr_solve(g).trace for g in games]
    monkeypatch.setenv("LGL_THREADS", "4")
    assert [icr_solve(g).trace for g in games] == serial


def blackbox_copy(g):
    lin = g.payoff
    oracle = PayoffOracle("blackbox", evaluator=lambda c, a, s, mu: lin(c, a, s, mu))
    return GameInstance(g.characteristics, g.lattice, g.availability, g.types, oracle, g.queries, g.name)


def test_blackbox_mode_flags_approximation():
    g = build_global_game([-0.5, 0.5, 1.5], np.eye(3), [[(t, 1.0)] for t in range(3)])
    bb = blackbox_copy(g)
    res = best_reply_feasible(bb, 0, 1, 1, BehaviorMap.full(bb))
    assert res.approximate and res.survives
    out = icr_solve(bb)
    assert out.approximate
    assert out.S == icr_solve(g).S


def test_blackbox_witness_is_mixture():
    g = blackbox_copy(two_world_game())
    res = best_reply_feasible(g, 0, 2, 0, BehaviorMap.full(g))
    assert res.survives
    for t, mix in res.witness.mixtures.items():
        assert sum(w for w, _ in mix) == pytest.approx(1.0, abs=1e-9)
