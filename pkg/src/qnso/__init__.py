"""Quadratic operators on the standard simplex and their dynamics."""
from .cubic import (CubicMatrix, ConditionReport, MatrixFormatError, check_conditions,
                    check_edge_necessity, load_matrix, quadratic_range_on_unit_interval,
                    save_matrix, symmetrize)
from .dynamics import (BifurcationScan, FixedPointRecord, LyapunovEstimate, Map1D,
                       bifurcation_scan, classify_fixed_point, detect_period,
                       eigenvalues_small, find_fixed_points, logistic_map, lyapunov_exponent)
from .operator import (DomainEscapeError, PreservationVerdict, SimplexPoint, Trajectory,
                       apply, iterate, jacobian, preservation_oracle, reduced_jacobian)
from . import models

__version__ = "0.1.0"
