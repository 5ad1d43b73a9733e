"""Optimal insurance contracts when the insured can inflate losses by destroying property."""
from .contracts import (
    Coinsurance,
    ConstantRetention,
    Contract,
    DisappearingDeductible,
    FullInsurance,
    Mixed,
    PiecewiseLinear,
    StraightDeductible,
    check_no_sabotage,
    construct,
    evaluate,
    max_slope,
    retention,
)
from .equilibrium import (
    Scenario,
    SolveResult,
    dominance_check,
    epsilon_improvement,
    expected_utility,
    solve_constant_retention,
    solve_deductible,
    solve_problem_s_pwl,
)
from .estimators import ContractDesigner, ManipulationProofTransformer
from .exceptions import ArsonProofError, DomainError, IntegrationError, ValidationError
from .manipulation import (
    ManipulationMap,
    best_response,
    envelope_backward,
    envelope_exact,
    is_manipulation_proof,
    value_function_oracle,
)
from .pricing import (
    FixedPerClaim,
    LinearCost,
    LossModel,
    QuadraticCost,
    TruncExp,
    TruncLognormal,
    Uniform,
    ZeroCost,
    expected_indemnity_cost,
    integrate,
    premium,
)
from .utility import CRRA, LogUtility

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
