"""Nonlinear averaging, exact ensembles, and condensation models.

The package tracks one mathematical thread end to end: a log-exp average of
level values, the exactly solvable ensemble evolution it generates, the
large-ensemble limit, a mean-field gas whose metastable branches terminate
in a zeroth-order transition, entropy fields evolving by Hopf-Lax
envelopes, and condensation thresholds for debt-count economies.
"""

from .errors import (BranchNotFound, BranchTerminated, GuardExceeded,
                     InputError, SolverError, ZerophaseError)
from .averaging import (AveragingKernel, ProbeReport, ResonanceReport,
                        ShiftReport, Spectrum, WeightVector,
                        certify_resonance_free, check_resonance_free,
                        financial_average, polynomial_spectrum,
                        probe_proposition3, verify_shift_axiom)
from .ensemble import (EnsembleState, TupleState, closed_form_coeff,
                       closed_form_log_coeff, compositions, class_project,
                       ensemble_from_tuple, evolve_step, init_product_state,
                       log_state_norm, marginal, marginals, oracle_evolve,
                       oracle_marginal, oracle_norm, reduce_to_classes,
                       specific_free_energy, state_norm, tuple_product_state)
from .asymptotics import (GibbsPoint, LimitReport, convergence_scan,
                          gibbs_fixed_point, kl_divergence, limit_F, limit_w)
from .bose_gas import (BranchState, ContinuationResult, DispersionSpec,
                       EntropyTable, FixedPoint, LevelSet, SingularFit,
                       StabilityReport, TransitionCertificate, branch_points_near,
                       build_levels, continue_branch, discrete_energy,
                       dispersion_lambdas, entropy_and_capacity, free_energy,
                       hartree_residual, log_multiplicity, scalar_scan_minima,
                       singular_exponent_fit, solve_branch,
                       solve_self_consistent, specific_entropy,
                       stability_check, theta_upper_bound,
                       zeroth_order_certificate)
from .entropy_flow import (EntropyField, FlowConfig, PriceTransport,
                           Trajectory, ascent_trajectory, calibrate_c,
                           heat_semigroup_residual, hopf_lax,
                           log_gaussian_smoothing, price_transport)
from .condensation import (CondensateReport, CurrencySplit, DebtLedger,
                           DebtPosition, DebtSupply, ExplosionScan,
                           LongTermDebt, ParetoLevels, TwoLevelEconomy,
                           condensate_excess, critical_number, debt_supply,
                           empirical_threshold_model, long_term_gdp_contribution,
                           money_at_theta, multi_currency_threshold,
                           social_explosion_scan, social_functional,
                           sqrt_threshold_model)

__version__ = "0.1.0"
