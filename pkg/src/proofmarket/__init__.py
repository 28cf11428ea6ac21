"""Numerical workbench for procuring proofs from a market of provers with a
Byzantine minority: lower bounds, payment rules, exact adversarial loss,
transition values and regimes."""
from .adversary import InstanceTooLarge, LossReport, exact_loss, ic_check, inner_lp_oracle
from .analysis import (ContinuousLimitSolution, RegimePhase, TransitionResult,
                       asymptotic_designated_loss, classify_regime, conjecture_check,
                       counterexample_suite, regime_boundaries, stake_sensitivity_table,
                       transition_ct_discrete, transition_ct_limit)
from .core import (EquilibriumShape, IcReport, ProtocolParams, ShapeKind, StrategyProfile,
                   canonicalize_profile, validate_params)
from .lower_bound import (BoundEvaluation, ShapeOptimum, eval_g, grid_oracle_minimize_g,
                          minimize_designated_star, minimize_g, minimize_symmetric_star)
from .lp import LpProblem, LpSolution, LpStatus, solve_lp
from .numerics import RootResult, find_all_roots, find_root, lambert_w
from .payment import (Ls1Solution, anonymize_symmetric, implementable_designated,
                      implementable_symmetric, make_designated_rule, make_lottery,
                      solve_lp1, solve_ls1, transform_to_designated)
from .rules import (AnonymousSymmetricRule, DesignatedRule, LotteryRule, PaymentRule,
                    TableRule, dumps_rule, loads_rule)

__all__ = [name for name in dir() if not name.startswith("_")]
