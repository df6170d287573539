"""Result containers shared by the dynamics, analysis and CLI layers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Spectrum:
    """Numerical and analytic angular frequencies, paired by index."""

    omega_h: np.ndarray
    omega_ref: np.ndarray
    n_outliers: int = 0
    modes: np.ndarray | None = None  # columns on the free DOFs, if requested
    meta: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.omega_h / self.omega_ref

    @property
    def outlier_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.omega_h), dtype=bool)
        if self.n_outliers:
            mask[-self.n_outliers:] = True
        return mask

    def flagged_outliers(self, threshold: float = 1.1) -> int:
        """Length of the run of top modes whose ratio exceeds ``threshold``."""
        count = 0
        for r in self.ratios[::-1]:
            if r <= threshold:
                break
            count += 1
        return count


@dataclass
class TimeHistory:
    """Sampled response at probe points plus the final coefficient vector."""

    times: np.ndarray
    probes: np.ndarray  # physical x of each probe
    u: np.ndarray  # shape (n_times, n_probes)
    v: np.ndarray
    a: np.ndarray
    final_coeffs: np.ndarray | None = None
    dt: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("history times must be strictly increasing")


@dataclass
class ConvergenceTable:
    n_el: list[int] = field(default_factory=list)
    h_max: list[float] = field(default_factory=list)
    error: list[float] = field(default_factory=list)

    def add(self, n_el: int, h_max: float, error: float) -> None:
        if self.h_max and h_max >= self.h_max[-1]:
            raise ValueError("h_max must decrease down the table")
        if not error > 0:
            raise ValueError("errors must be positive")
        self.n_el.append(int(n_el))
        self.h_max.append(float(h_max))
        self.error.append(float(error))

    def __len__(self) -> int:
        return len(self.n_el)
