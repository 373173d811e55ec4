"""Parabolic problems with distributional data, solved through mollified nets."""

__version__ = "0.1.0"

from .cases import CASE_IDS, UnknownCase, builtin_case, initial_profile
from .dist_calc import (Constant, Delta, Heaviside, MollifierNet, SampledField1D, Smooth, Sum,
                        UnsupportedVariant, ZeroMass, cosine_net, default_bump, default_net,
                        mollify, normalize_bump, sample)
from .fdsolver import SchemeConfig, SingularSystem, SolutionTrajectory, march, solve, solve_lifted
from .galerkin import QuadratureUnderResolved, assemble, integrate, reconstruct
from .norms import ESTIMATES, EnergyReport, NormAccumulator, check_estimate, energy_norms, hneg_norm
from .problem import (EllipticityViolated, ProblemSpec, RegularizedInstance, ResolutionInsufficient,
                      build_instance, in_t, in_x, lift, lifted_instance, product, sample_instance,
                      validate)
from .sweep import (FitUnreliable, GridPolicy, PowerLawFit, compare_nets, consistency_test,
                    fit_power_law, run_sweep)

__all__ = [
    "CASE_IDS", "UnknownCase", "builtin_case", "initial_profile",
    "Constant", "Delta", "Heaviside", "MollifierNet", "SampledField1D", "Smooth", "Sum",
    "UnsupportedVariant", "ZeroMass", "cosine_net", "default_bump", "default_net", "mollify",
    "normalize_bump", "sample",
    "SchemeConfig", "SingularSystem", "SolutionTrajectory", "march", "solve", "solve_lifted",
    "QuadratureUnderResolved", "assemble", "integrate", "reconstruct",
    "ESTIMATES", "EnergyReport", "NormAccumulator", "check_estimate", "energy_norms", "hneg_norm",
    "EllipticityViolated", "ProblemSpec", "RegularizedInstance", "ResolutionInsufficient",
    "build_instance", "in_t", "in_x", "lift", "lifted_instance", "product", "sample_instance",
    "validate",
    "FitUnreliable", "GridPolicy", "PowerLawFit", "compare_nets", "consistency_test",
    "fit_power_law", "run_sweep",
]
