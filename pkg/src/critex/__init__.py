"""critex: critical exponents and singular radial solutions for second-order
non-divergence elliptic inequalities on punctured balls."""

from .criteria import (CriterionVerdict, ExponentBounds, classify_improper,
                       coro1_criterion, critical_case_classify, exist_criterion,
                       exponent_bounds, mutual_exclusion_check, nonexist_criterion)
from .envelopes import EnvelopePair, appendix_remainder, avg_s, radial_envelopes
from .exprs import ProfileExpr, eval_profile, format_expr, parse_profile
from .fields import (Bounded, CoefficientField, DiagonalPower, GeneralMatrix,
                     GilbargSerrin, PowerLaw, builtin_pert, builtin_unstable,
                     load_field_config, psi_pointwise, theta_pointwise)
from .growth import (DimensionEstimate, GrowthSummary, dimension_estimates,
                     gamma_and_t, growth_integrals, growth_summary,
                     restricted_g_search)
from .profiles import RadialProfile, profile_combine
from .shooting import (FVPSpec, ShootingResult, Trajectory, barrier_construct,
                       find_lambda0, keller_ceiling, solve_fvp, subsolution_power)
from .verify import (ClosedFormRadial, ResidualReport, monotone_envelope_check,
                     residual_check)

__version__ = "0.1.0"

__all__ = [
    "ProfileExpr", "parse_profile", "format_expr", "eval_profile",
    "RadialProfile", "profile_combine",
    "CoefficientField", "GilbargSerrin", "DiagonalPower", "GeneralMatrix",
    "PowerLaw", "Bounded", "psi_pointwise", "theta_pointwise",
    "builtin_pert", "builtin_unstable", "load_field_config",
    "EnvelopePair", "radial_envelopes", "avg_s", "appendix_remainder",
    "GrowthSummary", "DimensionEstimate", "growth_integrals", "gamma_and_t",
    "dimension_estimates", "restricted_g_search", "growth_summary",
    "CriterionVerdict", "ExponentBounds", "classify_improper",
    "exist_criterion", "nonexist_criterion", "coro1_criterion",
    "exponent_bounds", "critical_case_classify", "mutual_exclusion_check",
    "FVPSpec", "Trajectory", "ShootingResult", "solve_fvp", "keller_ceiling",
    "find_lambda0", "barrier_construct", "subsolution_power",
    "ClosedFormRadial", "ResidualReport", "residual_check",
    "monotone_envelope_check",
]
