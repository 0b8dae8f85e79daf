"""Exponential functionals of killed Lévy processes."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .jumps import (CompoundPoisson, Composite, HyperExponential, NoJumps, TiltedStable,  # noqa: F401
                    TransformedJumps, exponential_two_sided, jumps_from_dict)
from .exponents import (LaplaceExponent, LevyModel, beta_star, eval_exponent, tbeta_transform,  # noqa: F401
                        transformed_mean, transformed_model)
from .ladders import (LadderExponent, PotentialMeasure, compose_factors, rational_factors,  # noqa: F401
                      spectrally_onesided_factors, tbeta_on_ladder, vigon_check)
from .distribution import (DensitySeries, MomentLadder, density_product,  # noqa: F401
                           density_series_subordinator, density_spectrally_negative,
                           gamma_family_densities, mellin_recursion_check, moments_descending,
                           negative_moments_spectrally_positive)
from .simulation import (SampleSet, TestReport, length_biased_test, sample_factor_rhs,  # noqa: F401
                         sample_functional, test_factorization)
from .stable import StableParams, lamperti_exponent, passage_time_law  # noqa: F401
