"""Log-concave density estimation: exact integrals, the MLE, divergences,
separation classes, envelopes, invelopes and a Monte Carlo risk harness."""
from .errors import (DegenerateInput, DegenerateSimplex, EmptyClass, InvalidSample,
                     InvalidSubdivision, LogConcaveError, MissingConstant, NotConcave,
                     NotConverged, NotIntegrable, NotNested, OutOfRange, PreconditionViolated,
                     WrongDimension)
from .geometry import (HalfSpace, Polytope, Simplex, Subdivision, convex_hull, euler_check, gamma,
                       triangulate, validate_subdivision)
from .integrals import (AffineForm, exp_affine_integral, moment_exp_affine_integral, normalizer,
                        slice_ratio_check)
from .densities import (BumpDensity, GaussianDensity, LaplaceDensity, LogKAffineDensity,
                        ThetaFloorDensity, UniformBall, UniformPolytope, make_fkm,
                        minimal_representation)
from .divergences import DivergenceReport, divergence_report, dx_sq, hellinger_sq, kl
from .mle import FitConfig, MLEFit, TentFunction, fit, objective, upper_hull_tent
from .separation import (MahalanobisContext, SeparationParams, check_grad_criterion,
                         check_separation_pairs, lambda_holder, nesting_checks)
from .envelope1d import duality_check, envelope_F, extremal_density
from .invelopes import (Invelope, build_P, complement_volume, invelope_contains,
                        shell_triangulation, simplex_invelope)
from .bench import RATES, RiskTable, Scenario, emit, lsc_demo, run_scenario

__version__ = "0.1.0"
