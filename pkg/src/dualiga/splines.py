"""Knot vectors, B-spline/NURBS evaluation and refinement for 1D patches.

Indices are 0-based throughout: basis function ``i`` is supported on
``[knots[i], knots[i + p + 1]]`` and ``find_span`` returns the index ``i``
of the knot interval ``[knots[i], knots[i + 1])`` containing the point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 8

#: Initial breakpoints of the three meshes (five initial spans each).
MESH_BREAKPOINTS = {
    "A": (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
    "B": (0.0, 0.3, 0.5, 0.7, 0.8, 1.0),
    "C": (0.0, 0.25, 0.45, 0.6, 0.7, 1.0),
}

#: Quadratic NURBS patch with non-unit weights (four uniform spans).
WEIGHTED_KNOTS = (0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0)
WEIGHTED_WEIGHTS = (1.0, 1.5, 1.05, 1.25, 0.95, 1.0)


class SplineError(ValueError):
    """Invalid knot vector, space or evaluation point."""


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 0 or p > MAX_DEGREE:
            raise SplineError(f"degree must be in [0, {MAX_DEGREE}], got {p}")
        if knots.ndim != 1 or np.any(np.diff(knots) < 0):
            raise SplineError("knots must be a non-decreasing 1D sequence")
        n = len(knots) - p - 1
        if n < p + 1:
            raise SplineError(f"need at least p+1={p + 1} basis functions, got {n}")
        if knots[0] == knots[-1]:
            raise SplineError("knot vector spans an empty domain")
        if np.any(knots[: p + 1] != knots[0]) or np.any(knots[-p - 1:] != knots[-1]):
            raise SplineError("knot vector is not open (ends need multiplicity p+1)")
        inner = knots[p + 1: n]
        if inner.size:
            _, counts = np.unique(inner, return_counts=True)
            if counts.max() > p:
                raise SplineError("interior knot multiplicity exceeds the degree")

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return len(self.knots) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def spans(self) -> list[int]:
        """Indices ``i`` of the nonempty knot intervals, left to right."""
        k = self.knots
        return [i for i in range(self.degree, self.n) if k[i + 1] > k[i]]

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        return np.array([self.knots[i + 1: i + p + 1].mean() for i in range(self.n)])


@dataclass(frozen=True)
class SplineSpace:
    """A 1D NURBS patch: knot vector, control-point weights and coordinates."""

    kv: KnotVector
    weights: np.ndarray
    geometry: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        x = np.asarray(self.geometry, dtype=float)
        n = self.kv.n
        if w.shape != (n,) or x.shape != (n,):
            raise SplineError(f"weights and geometry must have length n={n}")
        if np.any(w <= 0):
            raise SplineError("weights must be positive")
        if np.any(np.diff(x) < 0):
            raise SplineError("control-point coordinates must be non-decreasing")
        w.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "geometry", x)

    @property
    def degree(self) -> int:
        return self.kv.degree

    @property
    def n(self) -> int:
        return self.kv.n

    @property
    def unit_weights(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    @property
    def length(self) -> float:
        return float(self.geometry[-1] - self.geometry[0])

    @property
    def n_elements(self) -> int:
        return len(self.kv.spans())

    def element_sizes(self) -> np.ndarray:
        """Physical length of each nonempty knot span."""
        bp = self.kv.breakpoints
        x = np.array([eval_nurbs(self, xi).x for xi in bp])
        return np.diff(x)


@dataclass(frozen=True)
class BasisEval:
    """Nonzero basis values at one parametric point.

    ``values``/``derivs`` belong to basis functions ``span-p .. span``.
    For plain B-spline evaluation the weight fields are 1 and 0 and the
    jacobian is 1 (parametric).
    """

    span: int
    values: np.ndarray
    derivs: np.ndarray
    weight_fn: float = 1.0
    weight_fn_deriv: float = 0.0
    jacobian: float = 1.0
    x: float = float("nan")

    @property
    def indices(self) -> range:
        p = len(self.values) - 1
        return range(self.span - p, self.span + 1)


def make_open_knot_vector(breakpoints, degree: int) -> KnotVector:
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or len(bp) < 2:
        raise SplineError("need at least two breakpoints")
    if np.any(np.diff(bp) <= 0):
        raise SplineError("breakpoints must be strictly increasing")
    if degree < 1:
        raise SplineError("degree must be >= 1 for an open knot vector")
    knots = np.concatenate([np.repeat(bp[0], degree + 1), bp[1:-1], np.repeat(bp[-1], degree + 1)])
    return KnotVector(knots, degree)


def find_span(kv: KnotVector, xi: float) -> int:
    lo, hi = kv.domain
    if not (lo <= xi <= hi):
        raise SplineError(f"xi={xi} outside the domain [{lo}, {hi}]")
    k = kv.knots
    n, p = kv.n, kv.degree
    if xi >= k[n]:
        # right end belongs to the last nonempty span
        i = n - 1
        while k[i] == k[i + 1]:
            i -= 1
        return i
    return int(np.searchsorted(k, xi, side="right") - 1)


def _basis_funs(kv: KnotVector, span: int, xi: float, p: int) -> np.ndarray:
    """Cox-de Boor triangle for the p+1 nonzero functions of degree p."""
    k = kv.knots
    N = np.zeros(p + 1)
    N[0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for j in range(1, p + 1):
        left[j] = xi - k[span + 1 - j]
        right[j] = k[span + j] - xi
        saved = 0.0
        for r in range(j):
            den = right[r + 1] + left[j - r]
            temp = N[r] / den if den != 0.0 else 0.0
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved
    return N


def eval_bspline(kv: KnotVector, xi: float) -> BasisEval:
    """Values and first parametric derivatives of the nonzero B-splines."""
    p = kv.degree
    span = find_span(kv, xi)
    values = _basis_funs(kv, span, xi, p)
    derivs = np.zeros(p + 1)
    if p > 0:
        # dN_i^p = p/(k_{i+p}-k_i) N_i^{p-1} - p/(k_{i+p+1}-k_{i+1}) N_{i+1}^{p-1}
        lower = _basis_funs(kv, span, xi, p - 1)  # functions span-p+1 .. span
        k = kv.knots
        for a in range(p + 1):
            i = span - p + a
            if a >= 1:
                den = k[i + p] - k[i]
                if den != 0.0:
                    derivs[a] += p / den * lower[a - 1]
            if a <= p - 1:
                den = k[i + p + 1] - k[i + 1]
                if den != 0.0:
                    derivs[a] -= p / den * lower[a]
    return BasisEval(span, values, derivs)


def eval_nurbs(space: SplineSpace, xi: float) -> BasisEval:
    """Rational basis, its parametric derivative, W, W' and dx/dxi at ``xi``."""
    b = eval_bspline(space.kv, xi)
    idx = slice(b.span - space.degree, b.span + 1)
    w = space.weights[idx]
    Nw = b.values * w
    dNw = b.derivs * w
    W = Nw.sum()
    dW = dNw.sum()
    assert W > 0.0
    R = Nw / W
    dR = (dNw - R * dW) / W
    X = space.geometry[idx]
    return BasisEval(b.span, R, dR, W, dW, float(dR @ X), float(R @ X))


def full_basis(space: SplineSpace, xi: float, rational: bool = False) -> np.ndarray:
    """The length-n vector of all basis values at ``xi`` (zeros off support)."""
    b = eval_nurbs(space, xi) if rational else eval_bspline(space.kv, xi)
    out = np.zeros(space.n)
    out[b.span - space.degree: b.span + 1] = b.values
    return out


def h_refine(kv: KnotVector, m: int) -> KnotVector:
    """Split every nonempty span into ``m`` equal subspans."""
    if m < 1:
        raise SplineError("refinement factor must be >= 1")
    if m == 1:
        return kv
    bp = kv.breakpoints
    new = [bp[i] + (bp[i + 1] - bp[i]) * np.arange(1, m) / m for i in range(len(bp) - 1)]
    knots = np.sort(np.concatenate([kv.knots, *new]))
    return KnotVector(knots, kv.degree)


def k_refine(kv_linear: KnotVector, degree: int) -> KnotVector:
    """Elevate a linear knot vector to ``degree`` keeping maximal continuity."""
    if kv_linear.degree != 1:
        raise SplineError("k_refine expects a degree-1 knot vector")
    return make_open_knot_vector(kv_linear.breakpoints, degree)


def linear_space(kv: KnotVector, length: float = 1.0, origin: float = 0.0) -> SplineSpace:
    """Unit-weight space whose geometry map is x = origin + length * xi."""
    lo, hi = kv.domain
    xi = (kv.greville() - lo) / (hi - lo)
    return SplineSpace(kv, np.ones(kv.n), origin + length * xi)


def mesh_preset(kind: str, degree: int, m: int = 1, length: float = 1.0,
                breakpoints=None) -> SplineSpace:
    """Mesh A (uniform), B or C (non-uniform), k-refined to ``degree`` and h-refined by ``m``."""
    if breakpoints is None:
        try:
            breakpoints = MESH_BREAKPOINTS[kind.upper()]
        except (KeyError, AttributeError):
            raise SplineError(f"unknown mesh preset {kind!r}; expected A, B or C") from None
    kv = make_open_knot_vector(breakpoints, 1)
    kv = h_refine(k_refine(kv, degree), m)
    return linear_space(kv, length)


def refine_space(space: SplineSpace, kv_new: KnotVector) -> SplineSpace:
    """Carry a NURBS curve over to the knot vector ``kv_new``.

    The homogeneous coordinates (W and W*x) are interpolated at the Greville
    points of the new basis. This is exact when the old space is contained
    in the new one (knot insertion, or degree elevation with raised knot
    multiplicity). k-refinement keeps maximal smoothness, so the curve is
    then reproduced only approximately.
    """
    tau = kv_new.greville()
    lo, hi = kv_new.domain
    tau = np.clip(tau, lo, hi)
    A = np.array([full_basis(SplineSpace(kv_new, np.ones(kv_new.n), np.arange(kv_new.n, dtype=float)), t)
                  for t in tau])
    old = np.array([full_basis(space, t) for t in tau])
    W = old @ space.weights
    Wx = old @ (space.weights * space.geometry)
    w_new = np.linalg.solve(A, W)
    wx_new = np.linalg.solve(A, Wx)
    return SplineSpace(kv_new, w_new, wx_new / w_new)


def weighted_preset(degree: int = 2, m: int = 1, length: float = 1.0,
                    weights=WEIGHTED_WEIGHTS) -> SplineSpace:
    """The quadratic four-span patch with varying weights, k- then h-refined."""
    kv0 = KnotVector(np.array(WEIGHTED_KNOTS), 2)
    base = SplineSpace(kv0, np.asarray(weights, dtype=float), length * kv0.greville())
    if degree < 2:
        raise SplineError("the weighted patch starts at degree 2")
    kv = h_refine(make_open_knot_vector(kv0.breakpoints, degree), m)
    return refine_space(base, kv) if (degree, m) != (2, 1) else base


def sample_points(space: SplineSpace, per_span: int = 10) -> np.ndarray:
    """Parametric points: ``per_span`` equally spaced per span plus the right end."""
    bp = space.kv.breakpoints
    pts = [np.linspace(bp[i], bp[i + 1], per_span, endpoint=False) for i in range(len(bp) - 1)]
    return np.concatenate([*pts, bp[-1:]])


def param_of_x(space: SplineSpace, x: float, tol: float = 1e-13) -> float:
    """Invert the (monotone) geometry map by bisection."""
    lo, hi = space.kv.domain
    x0, x1 = space.geometry[0], space.geometry[-1]
    if not (x0 - tol <= x <= x1 + tol):
        raise SplineError(f"x={x} outside the physical domain [{x0}, {x1}]")
    if space.unit_weights and np.allclose(space.geometry, x0 + (x1 - x0) * (space.kv.greville() - lo) / (hi - lo)):
        return float(np.clip(lo + (x - x0) / (x1 - x0) * (hi - lo), lo, hi))
    a, b = lo, hi
    for _ in range(200):
        c = 0.5 * (a + b)
        if eval_nurbs(space, c).x < x:
            a = c
        else:
            b = c
        if b - a < tol:
            break
    return 0.5 * (a + b)
