"""Optimal single-vertex placement for mesh smoothing.

Quality criteria become quasiconvex cost terms; the best position of a
vertex minimizes their maximum over the kernel of its star. Non-quasiconvex
criteria (max angle, circumradius) use an exact circle/line arrangement
search instead.
"""

from .criteria import (CRITERION_NAMES, Criterion, CostTerm, ElementStencil, criterion,
                       element_cost, element_quality, parse_criteria, patch_cost)
from .errors import (DegenerateElementError, EmptyDomainError, NotSmoothableError, ParseError,
                     QCSmoothError, TopologyError, UsageError, ValidationError)
from .formats import load_patch, read_mesh, write_mesh
from .geometry import ConvexRegion, Halfspace, min_enclosing_ball, solid_angle, star_kernel
from .mesh import (Mesh, Patch, SmoothConfig, extract_patch, laplacian_smooth, patch_from_faces,
                   patch_from_polygon, quality_report, smooth_vertex, sweep, validate)
from .qcp import (LexValue, QuasiconvexProgram, SolverResult, check_glp_monotonicity,
                  grid_oracle, lex_compare, solve)
from .special import (minmax_angle_place, minmax_circumradius_place, weber_place,
                      weber_point)

__version__ = "0.1.0"
