"""Box-constrained minimum-norm-point solver (update-and-stabilize)."""

from .instance import (
    GeneratorSpec,
    Instance,
    generate,
    incidence_instance,
    read_instance,
    write_instance,
)
from .iterate import Iterate, check_optimality, gradient, make_iterate
from .centroids import CentroidMapping, centroid, is_stable
from .updates import UpdateRule
from .solver import SolveReport, SolverConfig, alpha_star, solve

__version__ = "0.1.0"
