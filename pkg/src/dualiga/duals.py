"""Transformation operators S with lambda(xi) = S N(xi) for dual test functions.

Two families are built here:

* inverse-Gramian (IG) duals, ``S = G^{-1}``: exactly bi-orthogonal, global support;
* approximate duals (AD) of reproduction degree ``q``, an explicit banded SPD
  operator assembled from diagonal scaling matrices and first-difference
  matrices over the knot vector.

Both act on the B-spline space. For NURBS with non-unit weights the W**2
factor lives in the weighted assembly, not here.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
import scipy.linalg as sla

from .linalg import invert, SingularMatrixError
from .quadrature import span_points
from .splines import SplineSpace, eval_bspline, eval_nurbs, full_basis

_ZERO_CUTOFF = 1e-14


@dataclass(frozen=True)
class TransformOperator:
    kind: str  # "IG" or "AD" (or "identity")
    matrix: np.ndarray
    q: int | None = None
    condensed: bool = False
    fixed_indices: tuple[int, ...] = ()
    free_indices: tuple[int, ...] | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def identity_transform(n: int) -> TransformOperator:
    return TransformOperator("identity", np.eye(n))


def gram_matrix(space: SplineSpace, quad_points_per_span: int | None = None) -> np.ndarray:
    """G_ij = integral of N_i N_j over the physical domain (B-splines, not NURBS)."""
    p = space.degree
    nq = quad_points_per_span or (p + 1 if space.unit_weights else p + 3)
    G = np.zeros((space.n, space.n))
    k = space.kv.knots
    for s in space.kv.spans():
        pts, wts = span_points(k[s], k[s + 1], nq)
        for xi, wq in zip(pts, wts):
            N = eval_bspline(space.kv, xi).values
            # a single degree-0 control point carries no length: use dxi
            jac = eval_nurbs(space, xi).jacobian if p > 0 else 1.0
            sl = slice(s - p, s + 1)
            G[sl, sl] += np.outer(N, N) * (wq * jac)
    return G


def ig_transform(space: SplineSpace, quad_points_per_span: int | None = None) -> TransformOperator:
    G = gram_matrix(space, quad_points_per_span)
    try:
        S = invert(G)
    except SingularMatrixError as exc:  # cannot happen for a valid space
        raise RuntimeError("Gram matrix is singular") from exc
    return TransformOperator("IG", 0.5 * (S + S.T))


def poly_F_direct(v: int, x) -> float:
    """Reference evaluation by brute force over ordered 2v-tuples of distinct indices."""
    x = np.asarray(x, dtype=float)
    r = len(x)
    if r == 0:
        raise ValueError("poly_F needs at least one argument")
    total = 0.0
    for idx in itertools.permutations(range(r), 2 * v):
        term = 1.0
        for j in range(v):
            term *= (x[idx[2 * j]] - x[idx[2 * j + 1]]) ** 2
        total += term
    return 2.0 ** (-v) / factorial(v) * total


def _matching_sum(v: int, x: tuple[float, ...]) -> float:
    """Sum over all sets of v disjoint index pairs {a, b} of prod (x_a - x_b)^2."""
    r = len(x)

    @lru_cache(maxsize=None)
    def rec(used: int, k: int) -> float:
        if k == 0:
            return 1.0
        a = 0
        while used >> a & 1:
            a += 1
        if r - bin(used).count("1") < 2 * k:
            return 0.0
        used_a = used | (1 << a)
        total = rec(used_a, k)  # a stays unpaired
        for b in range(a + 1, r):
            if not used >> b & 1:
                total += (x[a] - x[b]) ** 2 * rec(used_a | (1 << b), k - 1)
        return total

    return rec(0, v)


def poly_F(v: int, x) -> float:
    """Symmetric polynomial F_v entering the AD coefficients beta.

    F_v = 2^-v / v! * sum over ordered 2v-tuples of pairwise distinct indices
    of prod_j (x_{i_2j-1} - x_{i_2j})^2. Each set of v disjoint pairs is
    counted 2^v v! times, so F_v is the plain sum over such pair sets, which
    is what the memoized recursion evaluates for v >= 3. F_v vanishes when
    fewer than 2v arguments are given.
    """
    if v < 1:
        raise ValueError("poly_F is defined for v >= 1")
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("poly_F needs at least one argument")
    if v == 1:
        c = x - x.mean()
        return float(len(x) * (c @ c))  # = sum_{a<b} (x_a - x_b)^2
    if v == 2:
        return poly_F_direct(2, x)
    return _matching_sum(v, tuple(float(t) for t in x))


def _difference_matrix(s: int) -> np.ndarray:
    """The s x (s-1) bidiagonal matrix with +1 on the diagonal and -1 below it."""
    D = np.zeros((s, s - 1))
    i = np.arange(s - 1)
    D[i, i] = 1.0
    D[i + 1, i] = -1.0
    return D


def ad_matrix(knots, p: int, q: int) -> np.ndarray:
    """Approximate-dual operator S_q on a knot vector (any physical scaling)."""
    if q < 0 or q > p:
        raise ValueError(f"reproduction degree q must satisfy 0 <= q <= p={p}, got {q}")
    t = np.asarray(knots, dtype=float)
    n = len(t) - p - 1
    # the formulas below use 1-based knot indices: xi_j == t[j-1]

    def xi(j):
        return t[j - 1]

    def u_diag(v):
        out = np.empty(n - v)
        for j in range(1, n - v + 1):
            width = xi(j + p + v + 1) - xi(j)
            if width <= 0.0:
                raise ValueError("zero-width knot interval in AD construction")
            if v == 0:
                beta = 1.0
            else:
                beta = (factorial(p + 1) * factorial(p - v)
                        / (factorial(p + v + 1) * factorial(p + v))
                        * poly_F(v, t[j: j + p + v]))  # xi_{j+1} .. xi_{j+p+v}
            out[j - 1] = (p + v + 1) / width * beta
        return out

    def d_matrix(r):
        s = n + p + 1 - r
        d = np.empty(s)
        for j in range(1, s + 1):
            width = xi(j + r) - xi(j)
            if width <= 0.0:
                raise ValueError("zero-width knot interval in AD construction")
            d[j - 1] = r / width
        return d[:, None] * _difference_matrix(s)

    S = np.diag(u_diag(0))
    P = np.eye(n)
    for v in range(1, q + 1):
        P = P @ d_matrix(p + v)  # n x (n - v)
        S += P @ np.diag(u_diag(v)) @ P.T
    S = 0.5 * (S + S.T)
    S[np.abs(S) < _ZERO_CUTOFF * np.abs(S).max()] = 0.0
    return S


def ad_transform(space: SplineSpace, q: int) -> TransformOperator:
    """AD operator on the knot vector mapped to physical length.

    S_q scales like 1/length, so scaling the parametric knots by the patch
    length makes the duals (approximately) bi-orthogonal in ds rather than
    in dxi; exact for the linear unit-weight geometry.
    """
    p = space.degree
    lo, hi = space.kv.domain
    scale = space.length / (hi - lo)
    knots = (space.kv.knots - lo) * scale
    return TransformOperator("AD", ad_matrix(knots, p, q), q=q)


def eval_duals(op: TransformOperator, space: SplineSpace, xi: float) -> np.ndarray:
    """lambda(xi) = S N(xi); for condensed operators only the free B-splines enter."""
    N = full_basis(space, xi)
    if op.condensed:
        N = N[list(op.free_indices)]
    if op.matrix.shape[1] != N.shape[0]:
        raise ValueError("operator size does not match the basis")
    return op.matrix @ N


def _split(n: int, fixed) -> tuple[list[int], list[int]]:
    fixed = sorted(set(int(i) for i in fixed))
    if any(i < 0 or i >= n for i in fixed):
        raise IndexError("fixed index out of range")
    free = [i for i in range(n) if i not in fixed]
    return fixed, free


def condense_transform(op: TransformOperator, fixed_indices) -> TransformOperator:
    """Schur complement S_bar = C - B^T A^-1 B with the fixed block A eliminated."""
    if op.condensed:
        raise ValueError("operator is already condensed")
    S = op.matrix
    fixed, free = _split(S.shape[0], fixed_indices)
    if fixed:
        A = S[np.ix_(fixed, fixed)]
        B = S[np.ix_(fixed, free)]
        C = S[np.ix_(free, free)]
        try:
            Sbar = C - B.T @ sla.solve(A, B, assume_a="sym")
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("fixed block of S is singular") from exc
        Sbar = 0.5 * (Sbar + Sbar.T)
    else:
        Sbar = S.copy()
    return TransformOperator(op.kind, Sbar, op.q, True, tuple(fixed), tuple(free))


def naive_reduce_transform(op: TransformOperator, fixed_indices) -> TransformOperator:
    """Drop the fixed rows and columns of S without any correction."""
    S = op.matrix
    fixed, free = _split(S.shape[0], fixed_indices)
    return TransformOperator(op.kind, S[np.ix_(free, free)].copy(), op.q, True, tuple(fixed), tuple(free))
