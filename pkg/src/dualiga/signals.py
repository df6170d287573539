"""Ground-acceleration signals: CSV ingestion, interpolation, synthetic burst."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class Signal:
    times: np.ndarray  # s
    accel: np.ndarray  # m/s^2

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.accel, dtype=float)
        if t.shape != a.shape or t.ndim != 1:
            raise SignalError("times and accel must be 1D and of equal length")
        if len(t) < 2:
            raise SignalError("a signal needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise SignalError("signal times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise SignalError("signal contains non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "accel", a)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __call__(self, t: float) -> float:
        """Linear interpolation; zero outside the recorded window."""
        return float(np.interp(t, self.times, self.accel, left=0.0, right=0.0))


def read_signal_csv(path) -> Signal:
    """Parse a ``time,accel`` CSV (comma separated, LF or CRLF)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise SignalError(f"{path}: empty file")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["time", "accel"]:
        raise SignalError(f"{path}: header must be 'time,accel', got {','.join(rows[0])!r}")
    t, a = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise SignalError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            t.append(float(row[0]))
            a.append(float(row[1]))
        except ValueError:
            raise SignalError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    if len(t) < 2:
        raise SignalError(f"{path}: need at least two data rows")
    if np.any(np.diff(t) <= 0):
        raise SignalError(f"{path}: times are not strictly increasing")
    return Signal(np.array(t), np.array(a))


def write_signal_csv(signal: Signal, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("time,accel\n")
        for t, a in zip(signal.times, signal.accel):
            fh.write(f"{t:.17g},{a:.17g}\n")


def synthetic_burst(duration: float = 50.0, dt: float = 0.02, seed: int = 1989,
                    peak: float = 4.0) -> Signal:
    """Deterministic oscillating burst resembling a strong-motion record.

    A Gaussian-enveloped sum of a few harmonics with random phases, peaking
    a few seconds in and decaying over the rest of the window.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(0.0, duration + 0.5 * dt, dt)
    freqs = np.array([0.6, 1.1, 1.9, 2.7, 4.3])
    amps = np.array([1.0, 0.8, 0.6, 0.35, 0.2])
    phases = rng.uniform(0.0, 2.0 * np.pi, freqs.size)
    carrier = (amps[:, None] * np.sin(2.0 * np.pi * freqs[:, None] * t + phases[:, None])).sum(axis=0)
    envelope = (t / 4.0) ** 2 * np.exp(-t / 4.0 * 2.0) * np.e ** 2  # max 1 at t = 4 s
    accel = envelope * carrier
    accel *= peak / np.abs(accel).max()
    return Signal(t, accel)
