"""Analytic references, error norms, spectra and convergence rates."""
from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg as sla

from .assembly import Scheme, TrussModel, build_system, field_eval, static_solve
from .linalg import real_eigenvectors, sym_generalized_eig
from .quadrature import span_points
from .results import ConvergenceTable, Spectrum, TimeHistory
from .splines import SplineSpace, eval_nurbs


SPECTRUM_IMAG_TOL = 1e-2


class AnalysisError(ValueError):
    pass


# analytic solutions --------------------------------------------------------

def analytic_static_sine(model: TrussModel, x):
    """u and EA u' for EA u'' = -(P0/L) sin(pi x/L) with both ends fixed."""
    if model.load.kind != "sine" or tuple(model.bc) != ("fixed", "fixed"):
        raise AnalysisError("closed form needs the sine load with fixed-fixed supports")
    x = np.asarray(x, dtype=float)
    P0, L = model.load.P0, model.L
    u = P0 * L / (np.pi ** 2 * model.EA) * np.sin(np.pi * x / L)
    N = P0 / np.pi * np.cos(np.pi * x / L)
    return u, N


def analytic_eigen(model: TrussModel, n: int) -> tuple[float, Callable]:
    """omega_n and the mode shape for fixed-free or fixed-fixed supports."""
    if n < 1:
        raise AnalysisError("mode numbers start at 1")
    L, c = model.L, model.wave_speed
    bc = tuple(model.bc)
    if bc == ("fixed", "free"):
        k = (2 * n - 1) * np.pi / (2.0 * L)
    elif bc == ("fixed", "fixed"):
        k = n * np.pi / L
    else:
        raise AnalysisError(f"no closed-form spectrum for supports {bc}")
    return float(k * c), (lambda x: np.sin(k * np.asarray(x, dtype=float)))


def analytic_frequencies(model: TrussModel, count: int) -> np.ndarray:
    return np.array([analytic_eigen(model, n)[0] for n in range(1, count + 1)])


def analytic_standing_wave(x, t, L: float = 1.0):
    """u = sin(2 pi x/L) sin(2 pi t) on the unit truss."""
    return np.sin(2.0 * np.pi * np.asarray(x) / L) * np.sin(2.0 * np.pi * np.asarray(t))


def standing_wave_velocity(x, L: float = 1.0):
    """Initial velocity 2 pi sin(2 pi x/L) of the standing wave."""
    return 2.0 * np.pi * np.sin(2.0 * np.pi * np.asarray(x) / L)


# error norms ---------------------------------------------------------------

def _integrate(space: SplineSpace, fn: Callable[[object], float], n_q: int | None = None) -> float:
    """Integral over the physical domain of fn(BasisEval) by Gauss quadrature."""
    nq = n_q or space.degree + 2
    knots = space.kv.knots
    total = 0.0
    for s in space.kv.spans():
        pts, wts = span_points(knots[s], knots[s + 1], nq)
        for xi, wq in zip(pts, wts):
            b = eval_nurbs(space, xi)
            total += fn(xi, b) * wq * b.jacobian
    return total


def l2_error_field(space: SplineSpace, coeffs, ref_fn: Callable, quantity: str = "displacement",
                   EA: float = 1.0, n_q: int | None = None) -> float:
    """Relative L2 error of the displacement or the normal force EA u'."""
    if quantity not in ("displacement", "normal_force"):
        raise AnalysisError(f"unknown quantity {quantity!r}")
    pick = 0 if quantity == "displacement" else 2

    def diff2(xi, b):
        return (field_eval(space, coeffs, xi, EA)[pick] - ref_fn(b.x)) ** 2

    num = _integrate(space, diff2, n_q)
    den = _integrate(space, lambda xi, b: ref_fn(b.x) ** 2, n_q)
    if den == 0.0:
        raise AnalysisError("reference field has zero L2 norm")
    return float(np.sqrt(num / den))


def l2_error_mode(space: SplineSpace, coeffs, ref_fn: Callable, n_q: int | None = None) -> float:
    """Relative L2 error after normalizing both shapes and aligning signs."""
    c = np.asarray(coeffs, dtype=float)
    norm_h = np.sqrt(_integrate(space, lambda xi, b: field_eval(space, c, xi)[0] ** 2, n_q))
    norm_ref = np.sqrt(_integrate(space, lambda xi, b: ref_fn(b.x) ** 2, n_q))
    if norm_h == 0.0 or norm_ref == 0.0:
        raise AnalysisError("mode shape has zero L2 norm")
    inner = _integrate(space, lambda xi, b: field_eval(space, c, xi)[0] * ref_fn(b.x), n_q)
    c = c * (np.sign(inner) or 1.0) / norm_h

    def ref_unit(x):
        return ref_fn(x) / norm_ref

    return l2_error_field(space, c, ref_unit, "displacement", n_q=n_q)


def l2_error_history(hist, ref_hist, probe: int = 0) -> float:
    """Discrete relative L2 error over time of u at one probe."""
    if isinstance(hist, TimeHistory):
        if not isinstance(ref_hist, TimeHistory):
            raise AnalysisError("both histories must be TimeHistory objects")
        if hist.times.shape != ref_hist.times.shape or not np.allclose(hist.times, ref_hist.times, rtol=0, atol=1e-12):
            raise AnalysisError("histories are sampled on different time grids")
        u, ref = hist.u[:, probe], ref_hist.u[:, probe]
    else:
        u, ref = np.asarray(hist, dtype=float), np.asarray(ref_hist, dtype=float)
        if u.shape != ref.shape:
            raise AnalysisError("histories have different lengths")
    den = float(np.sum(ref ** 2))
    if den == 0.0:
        raise AnalysisError("reference history is identically zero")
    return float(np.sqrt(np.sum((u - ref) ** 2) / den))


# spectra -------------------------------------------------------------------

def is_uniform(space: SplineSpace, rtol: float = 1e-10) -> bool:
    h = space.element_sizes()
    return bool(np.all(np.abs(h - h[0]) <= rtol * h[0]))


def expected_outliers(p: int) -> int:
    return p if p % 2 == 0 else p - 1


def compute_spectrum(model: TrussModel, space: SplineSpace, scheme: Scheme,
                     with_modes: bool = False) -> Spectrum:
    """Eigenfrequencies of the scheme's own equation of motion.

    Bubnov-Galerkin schemes (consistent or lumped) give a symmetric pair.
    With dual test functions the pair (S K, M_scheme) is not symmetric, and
    the general solver is used; its spectrum is real for these operators.
    """
    sys = build_system(model, space, scheme)
    max_imag = 0.0
    if scheme.test_fn == "nurbs":
        w2, modes = sym_generalized_eig(sys.K, sys.M)
    else:
        # a lumped dual operator is not normal; nearly coincident pairs may
        # split into complex pairs with tiny imaginary parts (real part kept)
        if with_modes:
            lam, modes = sla.eig(sys.K, sys.mass_matrix)
        else:
            lam, modes = sla.eigvals(sys.K, sys.mass_matrix), None
        rel_imag = np.abs(lam.imag) / np.abs(lam)
        max_imag = float(rel_imag.max())
        if max_imag > SPECTRUM_IMAG_TOL:
            raise AnalysisError(f"spectrum has complex eigenvalues (relative imag {max_imag:.2e})")
        order = np.argsort(lam.real)
        w2 = lam.real[order]
        if with_modes:
            modes = real_eigenvectors(modes[:, order])
    if np.any(w2 <= 0):
        raise AnalysisError("non-positive eigenvalue in a supported truss")
    omega = np.sqrt(w2)
    ref = analytic_frequencies(model, len(omega))
    n_out = expected_outliers(space.degree) if is_uniform(space) else 0
    full = None
    if with_modes:
        full = np.zeros((sys.n, modes.shape[1]))
        full[list(sys.free)] = modes
    return Spectrum(omega, ref, n_out, full, {"scheme": scheme.label, "p": space.degree,
                                              "n_el": space.n_elements, "max_imag": max_imag})


# convergence ---------------------------------------------------------------

def convergence_rate(table: ConvergenceTable | tuple, last: int = 3) -> float:
    """Least-squares slope of log(error) against log(h) over the last rows."""
    if isinstance(table, ConvergenceTable):
        h, e = table.h_max, table.error
    else:
        h, e = table
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    if len(h) < 3:
        raise AnalysisError("need at least three refinement levels")
    if np.any(e <= 0) or np.any(h <= 0):
        raise AnalysisError("errors and mesh sizes must be positive")
    slope = np.polyfit(np.log(h[-last:]), np.log(e[-last:]), 1)[0]
    return float(slope)


def static_solution(model: TrussModel, space: SplineSpace, scheme: Scheme) -> np.ndarray:
    """Full-length coefficient vector of the static solution."""
    sys = build_system(model, space, scheme)
    return sys.expand(static_solve(sys))
