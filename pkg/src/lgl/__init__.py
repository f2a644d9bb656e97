"""Rationalizability, extremal equilibria and worked examples for finite large Bayesian games."""

from .game import (ActionLattice, AggregateProfile, CharacteristicSpace, GameInstance, PayoffOracle,
                   TypeSpace, conjecture_payoff, eval_payoff, validate_game)
from .icr import (BehaviorMap, best_reply_feasible, check_self_rationalizing, eliminate_round,
                  feasible_aggregates_polytope, icr_solve)
from .equilibrium import (best_response_set, check_increasing_differences, check_supermodular,
                          extremal_equilibrium, induced_aggregate, sandwich_check, verify_equilibrium)

__version__ = "0.1.0"
