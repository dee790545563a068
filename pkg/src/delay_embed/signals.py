"""Trajectory containers, synthetic generators and simple transforms.

Every generator returns a :class:`TimeSeries` whose data array has shape
``(J, N)``: one row per component, one column per sample.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "TimeSeries",
    "NoiseSpec",
    "gen_five_mode",
    "five_mode_signal",
    "gen_vdp",
    "gen_quasi_periodic",
    "gen_latent_surrogate",
    "LatentSurrogate",
    "add_noise",
    "subsample",
    "demean",
    "write_csv",
    "read_csv",
]

FIVE_MODE_PERIOD = 100.0


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real trajectory.

    Parameters
    ----------
    data : array_like
        Samples, shape ``(J, N)``. A 1-D input is treated as a single
        component.
    dt : float
        Sample interval.
    period_samples : int, optional
        Number of samples in one declared period ``M``.

    Notes
    -----
    Finiteness is not enforced at construction so that a diverging rollout
    can still be returned and scored. Call :meth:`check_finite` before
    feeding data into a solver.
    """

    data: np.ndarray
    dt: float = 1.0
    period_samples: Optional[int] = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"data must be a non-empty (J, N) array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "dt", float(self.dt))
        if self.period_samples is not None:
            M = int(self.period_samples)
            if M != self.period_samples or M < 1:
                raise ValidationError(f"period_samples must be a positive integer, got {self.period_samples}")
            if M > arr.shape[1]:
                raise ValidationError(f"period_samples={M} exceeds the number of samples N={arr.shape[1]}")
            object.__setattr__(self, "period_samples", M)

    @property
    def J(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.N) * self.dt

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def check_finite(self) -> "TimeSeries":
        if not self.is_finite():
            raise NumericalError("time series contains NaN or Inf entries")
        return self

    def component(self, j: int) -> np.ndarray:
        return self.data[j]

    def window(self, start: int, stop: int, period_samples: Optional[int] = None) -> "TimeSeries":
        """Samples ``start:stop`` as a new series."""
        return TimeSeries(self.data[:, start:stop], self.dt, period_samples)

    def with_period(self, period_samples: Optional[int]) -> "TimeSeries":
        return TimeSeries(self.data, self.dt, period_samples)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise, std given as a fraction of each component's std."""

    snr_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.snr_fraction) or self.snr_fraction < 0:
            raise ValidationError(f"snr_fraction must be nonnegative, got {self.snr_fraction}")


def five_mode_signal(t: np.ndarray) -> np.ndarray:
    """Closed-form five-wave signal with period 100 time units."""
    w = 2 * np.pi * np.asarray(t, dtype=float) / FIVE_MODE_PERIOD
    return (0.3 * np.cos(w) + 0.5 * np.sin(2 * w) + 0.9 * np.cos(4 * w)
            + 1.6 * np.sin(8 * w) + 1.2 * np.cos(12 * w))


def gen_five_mode(M_per_period: int, n_periods: int = 1) -> TimeSeries:
    """Sample the five-wave signal at ``M_per_period`` samples per period.

    The highest harmonic is 12, so fewer than 26 samples per period alias.
    """
    if M_per_period < 26:
        raise ValidationError(f"M_per_period={M_per_period} aliases the index-12 harmonic; need at least 26")
    if n_periods < 1:
        raise ValidationError("n_periods must be positive")
    dt = FIVE_MODE_PERIOD / M_per_period
    k = np.arange(M_per_period * n_periods)
    return TimeSeries(five_mode_signal(k * dt), dt, M_per_period)


def gen_vdp(mu: float = 2.0, x0: Sequence[float] = (1.0, 0.0), dt: float = 0.01,
            n_steps: int = 530 + 4 * 776) -> TimeSeries:
    """Forward-Euler Van der Pol trajectory with ``n_steps`` samples (x0 included)."""
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if n_steps < 1:
        raise ValidationError("n_steps must be positive")
    X = np.empty((2, n_steps))
    a, b = float(x0[0]), float(x0[1])
    X[:, 0] = a, b
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps):
            a, b = a + dt * b, b + dt * (mu * (1 - a * a) * b - a)
            X[0, k] = a
            X[1, k] = b
    return TimeSeries(X, dt)


def gen_quasi_periodic(dt: float = 0.1, n_steps: int = 401) -> TimeSeries:
    """x(t) = cos(sqrt(2) t / 2) sin(sqrt(3) t / 2) cos(t) at t = k dt."""
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if n_steps < 1:
        raise ValidationError("n_steps must be positive")
    t = np.arange(n_steps) * dt
    x = np.cos(np.sqrt(2) * t / 2) * np.sin(np.sqrt(3) * t / 2) * np.cos(t)
    return TimeSeries(x, dt)


@dataclass(frozen=True)
class LatentSurrogate:
    """High-dimensional series from a known latent oscillator bank.

    Attributes
    ----------
    series : TimeSeries
        ``J x M`` snapshots.
    eigenvalues : ndarray
        The discrete-time eigenvalues ``exp(+-1j f)`` of the latent system.
    """

    series: TimeSeries
    eigenvalues: np.ndarray = field(repr=False)


def gen_latent_surrogate(J: int = 200, M: int = 400, n_waves: int = 10,
                         n_broadband: int = 100, broadband_amp: float = 1e-3,
                         seed: int = 0) -> LatentSurrogate:
    """Synthetic snapshot matrix with a known 2*n_waves eigenvalue latent system.

    ``n_waves`` undamped oscillations are mixed into ``n_waves`` latent
    coordinates and lifted to ``J`` dimensions by an orthonormal basis. A weak
    broadband residual made of ``n_broadband`` further undamped waves with
    random spatial shapes plays the role of unresolved small scales.
    """
    if J < n_waves:
        raise ValidationError("J must be at least n_waves")
    rng = np.random.default_rng(seed)
    k = np.arange(M)
    freqs = np.sort(rng.uniform(0.05, 0.5 * np.pi, n_waves))
    waves = np.vstack([np.cos(f * k + rng.uniform(0, 2 * np.pi)) for f in freqs])
    latent = rng.standard_normal((n_waves, n_waves)) @ waves
    basis = np.linalg.qr(rng.standard_normal((J, n_waves)))[0]
    X = basis @ latent
    if n_broadband > 0 and broadband_amp > 0:
        bf = rng.uniform(0, np.pi, n_broadband)
        B = np.vstack([np.cos(f * k + rng.uniform(0, 2 * np.pi)) for f in bf])
        shapes = rng.standard_normal((J, n_broadband)) / np.sqrt(J)
        X = X + broadband_amp * np.abs(X).max() * shapes @ B
    lam = np.exp(1j * np.r_[freqs, -freqs])
    return LatentSurrogate(TimeSeries(X, 1.0, M), lam)


def add_noise(ts: TimeSeries, spec: NoiseSpec) -> TimeSeries:
    """Add i.i.d. Gaussian noise scaled per component."""
    if spec.snr_fraction == 0:
        return ts
    rng = np.random.default_rng(spec.seed)
    std = ts.data.std(axis=1, keepdims=True)
    noise = rng.standard_normal(ts.data.shape) * (spec.snr_fraction * std)
    return TimeSeries(ts.data + noise, ts.dt, ts.period_samples)


def subsample(ts: TimeSeries, stride: int) -> TimeSeries:
    """Keep every ``stride``-th sample starting from index 0."""
    if stride < 1 or int(stride) != stride:
        raise ValidationError(f"stride must be a positive integer, got {stride}")
    M = ts.period_samples
    if M is not None and M % stride:
        raise ValidationError(f"period_samples={M} is not divisible by stride={stride}")
    return TimeSeries(ts.data[:, ::stride], ts.dt * stride, None if M is None else M // stride)


def demean(ts: TimeSeries, over_period: bool = True) -> TimeSeries:
    """Subtract each component's mean, taken over one period when declared."""
    n = ts.period_samples if (over_period and ts.period_samples) else ts.N
    mu = ts.data[:, :n].mean(axis=1, keepdims=True)
    return TimeSeries(ts.data - mu, ts.dt, ts.period_samples)


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def write_csv(ts: TimeSeries, path) -> Path:
    """Write ``t,x1..xJ`` rows plus a ``.meta.json`` sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{j + 1}" for j in range(ts.J)])
        for k in range(ts.N):
            w.writerow([f"{k * ts.dt:.17g}"] + [f"{v:.17g}" for v in ts.data[:, k]])
    meta = {"dt": ts.dt, "period_samples": ts.period_samples, "J": ts.J}
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")
    return path


def read_csv(path) -> TimeSeries:
    """Read a series written by :func:`write_csv` (the sidecar is optional)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ValidationError(f"{path}: no samples")
    header, body = rows[0], rows[1:]
    if not header or header[0].strip() != "t" or len(header) < 2:
        raise ValidationError(f"{path}: header must be t,x1,...,xJ")
    try:
        arr = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from None
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValidationError(f"{path}: ragged rows")
    meta = {}
    mp = _meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text())
    if arr.shape[0] >= 2:
        dt = float(arr[1, 0] - arr[0, 0])
    else:
        dt = float(meta.get("dt", 1.0))
    return TimeSeries(arr[:, 1:].T, dt, meta.get("period_samples"))
