"""Explicit time integration of M u'' + K u = F(t).

Both integrators work on a :class:`~dualiga.assembly.SystemMatrices` whose
mass is either a 1D diagonal (lumped schemes, elementwise inversion) or a
dense matrix (consistent schemes, factored once and reused: the problem is
linear, so the effective matrix never changes).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .assembly import Scheme, SystemMatrices, TrussModel, build_system, project_field
from .linalg import generalized_eigvals_real, lu_factor, solve_factored, sym_generalized_eig
from .results import TimeHistory
from .signals import Signal
from .splines import SplineSpace, full_basis, param_of_x

BLOW_UP = 1e12


class InstabilityError(ArithmeticError):
    """The displacement grew beyond the blow-up threshold."""


@dataclass(frozen=True)
class TimeState:
    """Integrator state at time ``t``.

    For CDM, ``v`` and ``a`` are recovered by central differences and refer
    to ``t - dt`` (one step behind the displacement front) after any step;
    right after :func:`cdm_init` they hold the initial values.
    """

    t: float
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    dt: float
    u_prev: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if not np.all(np.abs(self.u) <= BLOW_UP):
            raise InstabilityError(f"displacement exceeded {BLOW_UP:g} at t={self.t:g}")


class MassSolver:
    """Applies M^-1 (diagonal division or a reused LU factorization)."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        self.diagonal = M.ndim == 1
        if self.diagonal:
            if np.any(M == 0.0):
                raise np.linalg.LinAlgError("diagonal mass has zero entries")
            self.d = M
        else:
            self.factors = lu_factor(M)

    def solve(self, b, scale: float = 1.0) -> np.ndarray:
        """Solve (scale * M) x = b."""
        if self.diagonal:
            return b / (scale * self.d)
        return solve_factored(self.factors, b) / scale


def _matvec(M, x):
    return M * x if M.ndim == 1 else M @ x


def critical_time_step(K, M) -> float:
    """dt_crit = 2 / omega_max for the pair (K, M).

    Symmetric pairs go through the symmetric eigensolver; a dual-transformed
    (non-symmetric) K uses the general solver, whose spectrum is real here.
    """
    K = np.asarray(K, dtype=float)
    if np.allclose(K, K.T, rtol=0.0, atol=1e-12 * np.abs(K).max()):
        w2 = sym_generalized_eig(K, M)[0]
    else:
        w2 = generalized_eigvals_real(K, M)
    return 2.0 / float(np.sqrt(w2.max()))


def cdm_init(sys: SystemMatrices, u0, v0, dt: float, F0=None,
             solver: MassSolver | None = None) -> TimeState:
    """Start values: a0 from the equation of motion, u(-dt) by Taylor expansion."""
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    F0 = np.zeros_like(u0) if F0 is None else np.asarray(F0, dtype=float)
    solver = solver or MassSolver(sys.M)
    a0 = solver.solve(F0 - sys.K @ u0)
    u_prev = u0 - dt * v0 + 0.5 * dt * dt * a0
    return TimeState(0.0, u0, v0, a0, dt, u_prev)


def cdm_step(state: TimeState, sys: SystemMatrices, F_t,
             solver: MassSolver | None = None) -> TimeState:
    """One central-difference step with K* = M/dt^2.

    F* = F - (K - 2M/dt^2) u_t - M u_{t-dt}/dt^2 and u_{t+dt} = K*^-1 F*.
    """
    dt = state.dt
    solver = solver or MassSolver(sys.M)
    dt2 = dt * dt
    u, up = state.u, state.u_prev
    F_star = F_t - sys.K @ u + _matvec(sys.M, 2.0 * u - up) / dt2
    u_next = solver.solve(F_star, 1.0 / dt2)
    v = (u_next - up) / (2.0 * dt)
    a = (u_next - 2.0 * u + up) / dt2
    return TimeState(state.t + dt, u_next, v, a, dt, u)


def rk4_step(state: TimeState, sys: SystemMatrices, F: Callable[[float], np.ndarray],
             solver: MassSolver | None = None) -> TimeState:
    """Classical four-stage Runge-Kutta on the first-order form (u, v)."""
    solver = solver or MassSolver(sys.M)
    t, dt = state.t, state.dt

    def accel(tt, u):
        return solver.solve(F(tt) - sys.K @ u)

    u, v = state.u, state.v
    k1u, k1v = v, accel(t, u)
    k2u, k2v = v + 0.5 * dt * k1v, accel(t + 0.5 * dt, u + 0.5 * dt * k1u)
    k3u, k3v = v + 0.5 * dt * k2v, accel(t + 0.5 * dt, u + 0.5 * dt * k2u)
    k4u, k4v = v + dt * k3v, accel(t + dt, u + dt * k3u)
    u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    a_new = accel(t + dt, u_new)
    return TimeState(t + dt, u_new, v_new, a_new, dt)


def ground_force(sys: SystemMatrices, signal: Signal, t: float,
                 mass=None) -> np.ndarray:
    """F(t) = M 1 u_g''(t) with the scheme's own mass unless ``mass`` is given."""
    M = sys.M if mass is None else np.asarray(mass, dtype=float)
    ones = np.ones(sys.n_free)
    return _matvec(M, ones) * signal(t)


def time_step(rule: str, space: SplineSpace, T_end: float, dt: float | None = None) -> float:
    """Step size for ``rule`` in {fixed, h_over_10, adapted}, shrunk to land on T_end.

    ``adapted`` is (p / (2 n_el))**p.
    """
    if rule == "fixed":
        if dt is None or not dt > 0:
            raise ValueError("fixed time-step rule needs dt > 0")
        base = dt
    elif rule == "h_over_10":
        base = space.element_sizes().max() / 10.0
    elif rule == "adapted":
        p = space.degree
        base = (p / (2.0 * space.n_elements)) ** p
    else:
        raise ValueError(f"unknown time-step rule {rule!r}")
    steps = int(np.ceil(T_end / base - 1e-9))
    return T_end / max(steps, 1)


@dataclass(frozen=True)
class Integrator:
    method: str = "cdm"  # cdm | rk4
    dt_rule: str = "h_over_10"
    dt: float | None = None
    T_end: float = 1.0
    stride: int = 1

    def __post_init__(self):
        if self.method not in ("cdm", "rk4"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if not self.T_end > 0:
            raise ValueError("T_end must be positive")
        if self.stride < 1:
            raise ValueError("output stride must be >= 1")


def run_transient(model: TrussModel, space: SplineSpace, scheme: Scheme,
                  integrator: Integrator, probes=(),
                  u0: Callable[[float], float] | None = None,
                  v0: Callable[[float], float] | None = None,
                  signal: Signal | None = None, ground_mass: str = "scheme",
                  sys: SystemMatrices | None = None) -> TimeHistory:
    """Build the scheme's system once, integrate to T_end and sample the probes.

    Initial fields are L2-projected with the consistent mass onto the free
    control points. ``ground_mass="consistent"`` builds the earthquake force
    from the unlumped (transformed) mass instead of the scheme's own.
    """
    sys = sys or build_system(model, space, scheme)
    dt = time_step(integrator.dt_rule, space, integrator.T_end, integrator.dt)
    n_steps = int(round(integrator.T_end / dt))
    free = sys.free

    def initial(fn):
        if fn is None:
            return np.zeros(sys.n_free)
        return project_field(space, fn, free)[list(free)]

    u_init, v_init = initial(u0), initial(v0)
    force_mass = sys.M
    if signal is not None and ground_mass == "consistent" and scheme.lumped:
        force_mass = build_system(model, space, replace(scheme, lumping="none")).M
    elif ground_mass not in ("scheme", "consistent"):
        raise ValueError(f"ground_mass must be 'scheme' or 'consistent', got {ground_mass!r}")

    if signal is None:
        zero = np.zeros(sys.n_free)

        def force(t):
            return zero
    else:
        unit = _matvec(force_mass, np.ones(sys.n_free))

        def force(t):
            return unit * signal(t)

    # probe values are fixed linear functionals of the free coefficients
    probe_rows = np.array([full_basis(space, param_of_x(space, x), rational=True)[list(free)]
                           for x in probes]).reshape(len(probes), sys.n_free)
    solver = MassSolver(sys.M)
    times, us, vs, as_ = [], [], [], []

    def record(t, u, v, a):
        times.append(t)
        us.append(probe_rows @ u)
        vs.append(probe_rows @ v)
        as_.append(probe_rows @ a)

    if integrator.method == "cdm":
        state = cdm_init(sys, u_init, v_init, dt, force(0.0), solver)
        last_u = state.u
        for k in range(n_steps + 1):
            # v and a at t_k need u at t_{k+1}: step once past the end
            nxt = cdm_step(state, sys, force(state.t), solver)
            if k % integrator.stride == 0 or k == n_steps:
                record(k * dt, state.u, nxt.v, nxt.a)
            last_u = state.u
            state = nxt
        final = sys.expand(last_u)
    else:
        a0 = solver.solve(force(0.0) - sys.K @ u_init)
        state = TimeState(0.0, u_init, v_init, a0, dt)
        record(0.0, state.u, state.v, state.a)
        for k in range(1, n_steps + 1):
            state = rk4_step(state, sys, force, solver)
            if k % integrator.stride == 0 or k == n_steps:
                record(k * dt, state.u, state.v, state.a)
        final = sys.expand(state.u)
    return TimeHistory(np.array(times), np.asarray(probes, dtype=float), np.array(us).reshape(len(times), -1),
                       np.array(vs).reshape(len(times), -1), np.array(as_).reshape(len(times), -1),
                       final, dt, {"scheme": scheme.label, "method": integrator.method,
                                   "p": space.degree, "q": scheme.q})
