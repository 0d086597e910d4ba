"""Persuasion schemes under approximately rational receivers.

Core objects live in ``model``; the obedience LP in ``classic``; mixing
toward full disclosure in ``robustify``; response-set evaluation and the
two-sided utility window in ``response``; repeated play against learning
receivers in ``learning``.  ``persuasion-lab --help`` lists the CLI.
"""

from .classic import build_obedience_lp, constant_recommendation, solve_classic
from .errors import (
    AssumptionViolatedError,
    DimensionMismatchError,
    HypothesisViolatedError,
    LPError,
    NoMassOnApproxSetError,
    NotDirectRevelationError,
    ParseError,
    PersuasionError,
    RadiusPreconditionError,
    StrategyNotDeterministicError,
    UnknownTargetError,
    ValidationError,
    WrongInstanceError,
    ZeroProbabilitySignalError,
)
from .fixtures import BUILTIN_INSTANCES, builtin_instance, judge_optimal_scheme
from .learning import (
    AlternatingSignalPolicy,
    Checkpoint,
    ConvergenceCheckpoint,
    ConvergenceReport,
    EmpiricalBestResponse,
    Exp3,
    Exp3Config,
    ExpWeights,
    FixedSchemePolicy,
    LearnerState,
    Schedule,
    SimulationTrace,
    confidence_radius,
    convergence_report,
    empirical_br_probs,
    empirical_conditional_utilities,
    exp3_probs,
    exp_weights_probs,
    exp_weights_schedule,
    make_receiver,
    receiver_empirical_br,
    receiver_exp3,
    receiver_exp_weights,
    run_replications,
    simulate,
)
from .model import (
    DEFAULT_EPS,
    InstanceProfile,
    PersuasionInstance,
    ReceiverStrategy,
    SchemeStats,
    SignalingScheme,
    advantage,
    best_response_mask,
    direct_scheme,
    expected_utility,
    full_revelation_scheme,
    instance_from_json,
    instance_to_json,
    load_instance,
    load_scheme,
    make_scheme,
    obedient_strategy,
    posterior,
    profile_instance,
    project_strategy,
    scheme_from_json,
    scheme_stats,
    scheme_to_json,
    signal_marginals,
    uninformative_scheme,
)
from .repro import reproduce
from .response import (
    ApproxResponseSet,
    BoundsReport,
    ObjectiveEstimate,
    approx_membership_mass,
    approx_set,
    bounds_report,
    evaluate_objective,
    is_approx_best_responding,
    perturbed_posterior_certificate,
    perturbed_posterior_strategy,
    quantal_certificate,
    quantal_strategy,
    to_direct_revelation,
)
from .robustify import (
    RobustificationReport,
    choose_alpha_lower,
    choose_alpha_upper,
    robustify,
    verify_robustification,
)
from .sampling import (
    approx_responding_strategy,
    deterministic_responding_strategy,
    random_direct_scheme,
    random_instance,
    random_scheme,
    satisfied_instance,
)

__version__ = "0.1.0"

__all__ = [
    "AlternatingSignalPolicy",
    "ApproxResponseSet",
    "AssumptionViolatedError",
    "BUILTIN_INSTANCES",
    "BoundsReport",
    "Checkpoint",
    "ConvergenceCheckpoint",
    "ConvergenceReport",
    "DEFAULT_EPS",
    "DimensionMismatchError",
    "EmpiricalBestResponse",
    "Exp3",
    "Exp3Config",
    "ExpWeights",
    "FixedSchemePolicy",
    "HypothesisViolatedError",
    "InstanceProfile",
    "LPError",
    "LearnerState",
    "NoMassOnApproxSetError",
    "NotDirectRevelationError",
    "ObjectiveEstimate",
    "ParseError",
    "PersuasionError",
    "PersuasionInstance",
    "RadiusPreconditionError",
    "ReceiverStrategy",
    "RobustificationReport",
    "Schedule",
    "SchemeStats",
    "SignalingScheme",
    "SimulationTrace",
    "StrategyNotDeterministicError",
    "UnknownTargetError",
    "ValidationError",
    "WrongInstanceError",
    "ZeroProbabilitySignalError",
    "advantage",
    "approx_membership_mass",
    "approx_responding_strategy",
    "approx_set",
    "best_response_mask",
    "bounds_report",
    "build_obedience_lp",
    "builtin_instance",
    "choose_alpha_lower",
    "choose_alpha_upper",
    "confidence_radius",
    "constant_recommendation",
    "convergence_report",
    "deterministic_responding_strategy",
    "direct_scheme",
    "empirical_br_probs",
    "empirical_conditional_utilities",
    "evaluate_objective",
    "exp3_probs",
    "exp_weights_probs",
    "exp_weights_schedule",
    "expected_utility",
    "full_revelation_scheme",
    "instance_from_json",
    "instance_to_json",
    "is_approx_best_responding",
    "judge_optimal_scheme",
    "load_instance",
    "load_scheme",
    "make_receiver",
    "make_scheme",
    "obedient_strategy",
    "perturbed_posterior_certificate",
    "perturbed_posterior_strategy",
    "posterior",
    "profile_instance",
    "project_strategy",
    "quantal_certificate",
    "quantal_strategy",
    "random_direct_scheme",
    "random_instance",
    "random_scheme",
    "receiver_empirical_br",
    "receiver_exp3",
    "receiver_exp_weights",
    "reproduce",
    "robustify",
    "run_replications",
    "satisfied_instance",
    "scheme_from_json",
    "scheme_stats",
    "scheme_to_json",
    "signal_marginals",
    "simulate",
    "solve_classic",
    "to_direct_revelation",
    "uninformative_scheme",
    "verify_robustification",
]
