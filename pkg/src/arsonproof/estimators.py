"""scikit-learn style wrappers around the contract solvers and the envelope.

``fit`` does the optimisation (the loss law is a constructor parameter, so
``X`` is ignored there); ``predict`` / ``transform`` map an array of losses
to indemnities. Both classes support ``get_params`` / ``set_params`` and
``clone``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .equilibrium import Scenario, solve_constant_retention, solve_deductible, solve_problem_s_pwl
from .manipulation import DEFAULT_GRID_N, best_responses, envelope_exact, is_manipulation_proof
from .pricing import DEFAULT_QUAD_N, LossModel, ZeroCost
from .utility import CRRA
from .validation import check_losses, check_nonneg

_SOLVERS = {
    "deductible": lambda scn, est: solve_deductible(scn),
    "retention": lambda scn, est: solve_constant_retention(scn),
    "pwl": lambda scn, est: solve_problem_s_pwl(scn, est.n_knots),
}


class ContractDesigner(BaseEstimator):
    """Optimal contract within a family, priced at break-even.

    Parameters
    ----------
    family : {"deductible", "retention", "pwl"}
        Straight deductibles, constant-retention contracts (no incentive
        constraint), or continuous piecewise-linear contracts with slopes
        capped at ``1 + beta``.
    W0, rho, beta : float
        Initial wealth, premium loading and marginal cost of inflicting damage.
    utility, loss, cost : objects or None
        Defaults are CRRA(2), ``LossModel(4, 0.5)`` and zero cost.

    Attributes
    ----------
    contract_ : Contract
    premium_ : float
    expected_utility_ : float
    result_ : SolveResult
    """

    def __init__(
        self,
        family="deductible",
        W0=10.0,
        rho=0.0,
        beta=0.0,
        utility=None,
        loss=None,
        cost=None,
        n_knots=3,
        grid_n=DEFAULT_GRID_N,
        quad_n=DEFAULT_QUAD_N,
    ):
        self.family = family
        self.W0 = W0
        self.rho = rho
        self.beta = beta
        self.utility = utility
        self.loss = loss
        self.cost = cost
        self.n_knots = n_knots
        self.grid_n = grid_n
        self.quad_n = quad_n

    def scenario(self):
        return Scenario(
            W0=float(self.W0),
            rho=check_nonneg(self.rho, "rho"),
            beta=check_nonneg(self.beta, "beta"),
            utility=self.utility if self.utility is not None else CRRA(2.0),
            loss=self.loss if self.loss is not None else LossModel(4.0, 0.5),
            cost=self.cost if self.cost is not None else ZeroCost(),
            grid_n=int(self.grid_n),
            quad_n=int(self.quad_n),
        )

    def fit(self, X=None, y=None):
        if self.family not in _SOLVERS:
            raise ValueError(f"family must be one of {sorted(_SOLVERS)}, got {self.family!r}")
        scn = self.scenario()
        res = _SOLVERS[self.family](scn, self)
        self.scenario_ = scn
        self.result_ = res
        self.contract_ = res.contract
        self.premium_ = res.premium
        self.expected_utility_ = res.expected_utility
        self.n_iter_ = res.optimizer_evals
        return self

    def predict(self, X):
        """Indemnity paid at each loss in ``X``."""
        check_is_fitted(self, "contract_")
        return self.contract_(check_losses(X, self.contract_.domain_max))

    def retained(self, X):
        """Loss kept by the insured, ``x - Y(x)``."""
        x = check_losses(X, self.scenario_.M)
        return x - self.predict(x)

    def score(self, X=None, y=None):
        """Expected utility of the fitted contract (larger is better)."""
        check_is_fitted(self, "contract_")
        return self.expected_utility_


class ManipulationProofTransformer(TransformerMixin, BaseEstimator):
    """Replace a schedule by the value of the claim-inflation problem it induces.

    ``transform`` returns the envelope indemnity ``V(x)``: what the insured
    ends up with net of the damage they would inflict. The envelope itself
    never rewards inflation.
    """

    def __init__(self, contract=None, beta=0.0, grid_n=DEFAULT_GRID_N):
        self.contract = contract
        self.beta = beta
        self.grid_n = grid_n

    def fit(self, X=None, y=None):
        if self.contract is None:
            raise ValueError("ManipulationProofTransformer needs a contract")
        beta = check_nonneg(self.beta, "beta")
        self.envelope_ = envelope_exact(self.contract, beta)
        self.original_is_proof_ = is_manipulation_proof(self.contract, beta, self.grid_n).proof
        return self

    def transform(self, X):
        check_is_fitted(self, "envelope_")
        x = check_losses(X, self.envelope_.domain_max)
        return self.envelope_(x)

    def best_response(self, X):
        """Extra damage the insured inflicts at each loss under the original contract."""
        check_is_fitted(self, "envelope_")
        x = check_losses(X, self.contract.domain_max)
        z, _ = best_responses(self.contract, x, float(self.beta), self.grid_n)
        return z

    def get_feature_names_out(self, input_features=None):
        return np.array(["envelope_indemnity"], dtype=object)
