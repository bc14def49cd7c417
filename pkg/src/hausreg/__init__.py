"""Hausdorff-type transforms: evaluation, regularity checks and worked examples."""

from .errors import HausdorffError
from .filters import FilterBase, LimitSettings, agrees_with, limit_along_filter
from .measures import Exhaustion, Measure, QuadSettings, integrate, total_mass
from .methods import (abel_type_spec, affine_spec, cesaro_spec, delsarte_spec, hausdorff_matrix_from_moments,
                      holder_apply)
from .operators import (DiscreteOperatorSpec, Kernel, MatrixMethod, OperatorSpec, SecondKindSpec, TestFunction,
                        apply_discrete, apply_generic, apply_matrix_method, apply_second_kind)
from .regularity import (CheckSettings, check_discrete_conditions, check_dominated, check_rogosinski,
                         check_second_kind, check_theorem2, check_toeplitz, empirical_regularity)

__version__ = "0.1.0"
