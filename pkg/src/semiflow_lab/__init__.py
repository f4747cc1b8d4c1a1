"""Numerical laboratory for transfer operators of suspension semiflows."""

from .base import BaseGrid, ObservableY, validate_gibbs_markov
from .config import Scenario, load, reference
from .errors import (ConfigError, PreconditionError, RangeError, SemiflowError, SingularityError, StripError,
                     ValidationError)
from .kernels import BACKEND
from .laplace import ContourSpec, decay_fit, invert_laplace, laplace_of_Lt
from .models import build_model, doubling_map, geometric_branches, linear_full_branch
from .renewal import RenewalOperators, TildeGrid, TildeObservable
from .roof import build_roof, constant_roof, cosine_roof
from .spectral import dolgopyat_probe, eigenvalue_slope_at_zero, leading_eigenvalue
from .suspension import (ObservableSpec, SuspensionGrid, SuspensionObservable, apply_Lt_step,
                         build_test_observable, correlation)

__version__ = "0.1.0"
