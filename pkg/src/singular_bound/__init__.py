"""Generalization certificates for Gibbs posteriors in singular models.

The package computes closed-form high-probability bounds on the posterior
averaged excess risk of Gibbs posteriors (matrix completion, ReLU networks,
logistic classification), evaluates the intrinsic complexity coefficients
(RLCT pairs) in exact rational arithmetic, and validates every certified
quantity numerically: deterministic quadrature and thermodynamic
integration for partition functions, Monte Carlo moment checks, and seeded
Metropolis sampling of the posteriors themselves.
"""

from .bernstein import (BernsteinConstants, empirical_mgf_check,
                        logistic_loss_constants, squared_loss_constants)
from .errors import ConstraintError, ConvergenceError, DiagnosticError
from .gibbs import (BoundCertificate, GibbsConfig, completion_bound_constant,
                    dv_inequality_check, pac_bayes_certificate,
                    posterior_mean_excess_risk, sample_gibbs_posterior,
                    variational_optimality_check)
from .models import (CompletionModel, Dataset, LogisticLinearModel,
                     MatrixCompletionTruth, ReluNetwork, ReluRegressionModel,
                     empirical_excess_risk, generate_completion_data,
                     logistic_excess_risk, population_excess_risk_completion,
                     relu_forward)
from .partition import (PartitionEstimate, RlctFit, fit_rlct_from_partition,
                        neg_log_z_quadrature, state_density_lower_bound,
                        thermo_integration_neg_log_z)
from .rlct import (NormalCrossingChart, RlctPair, completion_active_params,
                   completion_regime, completion_rlct,
                   completion_rlct_closed_form, finite_operator_constant,
                   frobenius_conjugation_bounds, normal_crossing_rlct,
                   regular_model_rlct, relu_rlct_upper_bound)

__version__ = "0.1.0"
