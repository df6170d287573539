"""Mass, stiffness and load assembly for the 1D truss and the dual transformation.

The Bubnov-Galerkin system is assembled once on the full control net. Dual
test functions enter afterwards as a constant left multiplication by the
transformation operator, either condensed for the Dirichlet boundaries
(``bc_mode="schur"``) or in one of two simpler variants kept for comparison:

``"naive"``
    form S K, S M, S F on the full system, then delete fixed rows/columns;
``"truncate"``
    delete the fixed rows/columns of S itself and apply it to the reduced
    system (equivalent to replacing the boundary duals by B-splines).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .duals import (TransformOperator, ad_transform, condense_transform, identity_transform,
                    ig_transform, naive_reduce_transform)
from .linalg import lu_solve
from .lumping import row_sum_lump
from .quadrature import span_points
from .splines import SplineError, SplineSpace, eval_nurbs

BC_VALUES = ("fixed", "free")
TEST_FUNCTIONS = ("nurbs", "ig", "ad")
LUMPINGS = ("none", "rowsum")
BC_MODES = ("schur", "naive", "truncate")


class AssemblyError(ValueError):
    """Inconsistent model, system or operator."""


@dataclass(frozen=True)
class LoadSpec:
    """Distributed load q(x) and an optional end point load.

    ``kind`` is ``"none"``, ``"sine"`` (q = P0/L sin(pi x/L)) or ``"custom"``
    (piecewise-linear through ``samples = (x, q)``).
    """

    kind: str = "none"
    P0: float = 0.0
    samples: tuple | None = None
    point_load: float = 0.0
    point_end: str = "right"

    def __post_init__(self):
        if self.kind not in ("none", "sine", "custom"):
            raise AssemblyError(f"unknown load kind {self.kind!r}")
        if self.kind == "custom" and self.samples is None:
            raise AssemblyError("custom load needs samples")
        if self.point_end not in ("left", "right"):
            raise AssemblyError("point_end must be 'left' or 'right'")

    def q(self, x: float, L: float) -> float:
        if self.kind == "sine":
            return self.P0 / L * np.sin(np.pi * x / L)
        if self.kind == "custom":
            xs, qs = self.samples
            return float(np.interp(x, xs, qs))
        return 0.0


@dataclass(frozen=True)
class TrussModel:
    L: float = 1.0
    EA: float = 1.0
    mu: float = 1.0
    bc: tuple[str, str] = ("fixed", "fixed")
    load: LoadSpec = field(default_factory=LoadSpec)

    def __post_init__(self):
        if not (self.L > 0 and self.EA > 0 and self.mu > 0):
            raise AssemblyError("L, EA and mu must be positive")
        if len(self.bc) != 2 or any(b not in BC_VALUES for b in self.bc):
            raise AssemblyError(f"bc must be a pair of {BC_VALUES}, got {self.bc!r}")

    @property
    def wave_speed(self) -> float:
        return float(np.sqrt(self.EA / self.mu))

    def fixed_indices(self, n: int) -> tuple[int, ...]:
        out = []
        if self.bc[0] == "fixed":
            out.append(0)
        if self.bc[1] == "fixed":
            out.append(n - 1)
        return tuple(out)


@dataclass(frozen=True)
class Scheme:
    """Test functions, lumping and Dirichlet treatment of one formulation."""

    test_fn: str = "nurbs"
    q: int | None = None
    lumping: str = "none"
    bc_mode: str = "schur"

    def __post_init__(self):
        if self.test_fn not in TEST_FUNCTIONS:
            raise AssemblyError(f"test_fn must be one of {TEST_FUNCTIONS}")
        if self.lumping not in LUMPINGS:
            raise AssemblyError(f"lumping must be one of {LUMPINGS}")
        if self.bc_mode not in BC_MODES:
            raise AssemblyError(f"bc_mode must be one of {BC_MODES}")
        if self.test_fn == "ad" and self.q is None:
            raise AssemblyError("AD test functions need a reproduction degree q")
        if self.test_fn != "ad" and self.q is not None:
            raise AssemblyError("q is only meaningful with AD test functions")

    @property
    def lumped(self) -> bool:
        return self.lumping == "rowsum"

    @property
    def label(self) -> str:
        name = self.test_fn.upper() if self.test_fn != "ad" else f"AD(q={self.q})"
        return name + ("+rowsum" if self.lumped else "")


@dataclass(frozen=True)
class SystemMatrices:
    """M (dense, or 1D diagonal when lumped), K and F with bookkeeping.

    ``fixed``/``free`` index the full control net; ``n`` is its size.
    """

    M: np.ndarray
    K: np.ndarray
    F: np.ndarray
    n: int
    fixed: tuple[int, ...] = ()
    reduced: bool = False
    dual_applied: bool = False
    weighted: bool = False
    lumped: bool = False
    transform: np.ndarray | None = None  # the S_bar used, if any

    @property
    def free(self) -> tuple[int, ...]:
        if not self.reduced:
            return tuple(range(self.n))
        return tuple(i for i in range(self.n) if i not in self.fixed)

    @property
    def n_free(self) -> int:
        return self.K.shape[0]

    @property
    def mass_matrix(self) -> np.ndarray:
        """M as a dense matrix regardless of storage."""
        return np.diag(self.M) if self.M.ndim == 1 else self.M

    def expand(self, u_free) -> np.ndarray:
        """Full-length coefficient vector with zeros at fixed control points."""
        u = np.zeros(self.n)
        u[list(self.free)] = u_free
        return u


def quad_order(space: SplineSpace) -> int:
    """p+1 Gauss points per span for unit weights (exact), p+3 otherwise."""
    p = space.degree
    return p + 1 if space.unit_weights else p + 3


def assemble(model: TrussModel, space: SplineSpace, weighted: bool = False,
             n_q: int | None = None) -> SystemMatrices:
    """Element loop over nonempty spans with Gauss quadrature and global scatter.

    With ``weighted`` the test functions carry the factor W**2 (needed when
    the dual operator acts on a NURBS space with non-unit weights), which
    makes K non-symmetric.
    """
    n, p = space.n, space.degree
    nq = n_q or quad_order(space)
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    F = np.zeros(n)
    knots = space.kv.knots
    for s in space.kv.spans():
        pts, wts = span_points(knots[s], knots[s + 1], nq)
        sl = slice(s - p, s + 1)
        for xi, wq in zip(pts, wts):
            b = eval_nurbs(space, xi)
            if b.jacobian <= 0.0:
                raise SplineError(f"non-positive jacobian {b.jacobian} at xi={xi}")
            R = b.values
            B = b.derivs / b.jacobian
            ds = wq * b.jacobian
            qx = model.load.q(b.x, model.L)
            if weighted:
                W2 = b.weight_fn ** 2
                Wx = b.weight_fn_deriv / b.jacobian
                test_B = B + 2.0 * R * Wx / b.weight_fn
                M[sl, sl] += model.mu * np.outer(R, R) * W2 * ds
                K[sl, sl] += model.EA * np.outer(test_B, B) * W2 * ds
                F[sl] += R * qx * W2 * ds
            else:
                M[sl, sl] += model.mu * np.outer(R, R) * ds
                K[sl, sl] += model.EA * np.outer(B, B) * ds
                F[sl] += R * qx * ds
    if model.load.point_load:
        i = 0 if model.load.point_end == "left" else n - 1
        w2 = space.weights[i] ** 2 if weighted else 1.0  # R_i = 1 and W = w_i at the end
        F[i] += model.load.point_load * w2
    return SystemMatrices(M, K, F, n, weighted=weighted)


def apply_dirichlet(sys: SystemMatrices, model: TrussModel) -> SystemMatrices:
    """Delete rows/columns of homogeneously fixed boundary control points."""
    if sys.reduced:
        raise AssemblyError("system is already reduced")
    fixed = model.fixed_indices(sys.n)
    free = [i for i in range(sys.n) if i not in fixed]
    ix = np.ix_(free, free)
    M = sys.M[free] if sys.M.ndim == 1 else sys.M[ix]
    return replace(sys, M=M, K=sys.K[ix], F=sys.F[free], fixed=fixed, reduced=True)


def apply_dual(sys: SystemMatrices, op: TransformOperator) -> SystemMatrices:
    """Left-multiply M, K and F by the (condensed) operator."""
    if sys.lumped:
        raise AssemblyError("apply the dual transform before lumping")
    if sys.reduced and not op.condensed and sys.fixed:
        raise AssemblyError("reduced system needs a condensed operator")
    if op.condensed and tuple(op.fixed_indices) != tuple(sorted(sys.fixed)):
        raise AssemblyError("operator and system were reduced at different indices")
    S = op.matrix
    if S.shape != (sys.n_free, sys.n_free):
        raise AssemblyError(f"operator of size {S.shape} does not match system of size {sys.n_free}")
    return replace(sys, M=S @ sys.mass_matrix, K=S @ sys.K, F=S @ sys.F,
                   dual_applied=True, transform=S)


def neglect_in_full_system(sys: SystemMatrices, op: TransformOperator,
                           model: TrussModel) -> SystemMatrices:
    """Transform the full system with the full S, then delete fixed rows/columns."""
    if sys.reduced or op.condensed:
        raise AssemblyError("expects the full system and the full operator")
    dual = apply_dual(sys, op)
    return apply_dirichlet(dual, model)


def transform_for(space: SplineSpace, scheme: Scheme) -> TransformOperator:
    if scheme.test_fn == "ig":
        return ig_transform(space)
    if scheme.test_fn == "ad":
        return ad_transform(space, scheme.q)
    return identity_transform(space.n)


def build_system(model: TrussModel, space: SplineSpace, scheme: Scheme) -> SystemMatrices:
    """Assemble, reduce, apply the scheme's test functions and lumping."""
    dual = scheme.test_fn != "nurbs"
    weighted = dual and not space.unit_weights
    full = assemble(model, space, weighted=weighted)
    fixed = model.fixed_indices(space.n)
    if not dual:
        sys = apply_dirichlet(full, model)
    else:
        op = transform_for(space, scheme)
        if scheme.bc_mode == "naive":
            sys = neglect_in_full_system(full, op, model)
        else:
            reduce = condense_transform if scheme.bc_mode == "schur" else naive_reduce_transform
            sys = apply_dual(apply_dirichlet(full, model), reduce(op, fixed))
    if scheme.lumped:
        sys = replace(sys, M=row_sum_lump(sys.mass_matrix), lumped=True)
    return sys


def static_solve(sys: SystemMatrices) -> np.ndarray:
    """u = K^-1 F on the free DOFs (K may be non-symmetric)."""
    return lu_solve(sys.K, sys.F)


def field_eval(space: SplineSpace, coeffs, xi: float, EA: float = 1.0) -> tuple[float, float, float]:
    """Displacement, its physical derivative and the normal force EA u'."""
    b = eval_nurbs(space, xi)
    c = np.asarray(coeffs, dtype=float)[b.span - space.degree: b.span + 1]
    u = float(b.values @ c)
    du = float(b.derivs @ c) / b.jacobian
    return u, du, EA * du


def project_field(space: SplineSpace, fn: Callable[[float], float],
                  free=None) -> np.ndarray:
    """L2 projection of ``fn(x)`` onto the (free) basis with the consistent mass."""
    n, p = space.n, space.degree
    nq = quad_order(space) + 1
    M = np.zeros((n, n))
    b_vec = np.zeros(n)
    knots = space.kv.knots
    for s in space.kv.spans():
        pts, wts = span_points(knots[s], knots[s + 1], nq)
        sl = slice(s - p, s + 1)
        for xi, wq in zip(pts, wts):
            e = eval_nurbs(space, xi)
            ds = wq * e.jacobian
            M[sl, sl] += np.outer(e.values, e.values) * ds
            b_vec[sl] += e.values * fn(e.x) * ds
    free = list(range(n)) if free is None else list(free)
    out = np.zeros(n)
    out[free] = lu_solve(M[np.ix_(free, free)], b_vec[free])
    return out
