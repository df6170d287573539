"""One-dimensional isogeometric analysis with dual-basis test functions.

Inverse-Gramian (IG) and approximate dual (AD) test functions turn the
consistent mass matrix of a NURBS discretization into a diagonal or strongly
diagonal one, which then lumps well for explicit dynamics.
"""
from .assembly import (LoadSpec, Scheme, SystemMatrices, TrussModel, apply_dirichlet, apply_dual,
                       assemble, build_system, field_eval, static_solve)
from .duals import (TransformOperator, ad_transform, condense_transform, eval_duals, gram_matrix,
                    ig_transform, naive_reduce_transform, poly_F)
from .lumping import diagonal_mass_fraction, is_diagonal, row_sum_lump
from .splines import (KnotVector, SplineSpace, eval_bspline, eval_nurbs, find_span, h_refine, k_refine,
                      make_open_knot_vector, mesh_preset, weighted_preset)

__version__ = "0.1.0"
