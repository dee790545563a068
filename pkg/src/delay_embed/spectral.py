"""Discrete Fourier analysis of one period of data.

Convention: ``a_i = (1/M) sum_k x_k exp(+2j pi k i / M)`` and the signal is
recovered as ``x_k = sum_i a_i w^(k i)`` with ``w = exp(-2j pi / M)``. All
Vandermonde nodes elsewhere in the package (``w^(-i)``) follow from this.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .signals import TimeSeries

__all__ = [
    "FourierSpectrum",
    "SparsityPattern",
    "dft",
    "reconstruct",
    "synthesize",
    "detect_sparsity",
    "min_subsample",
    "filter_spectrum",
    "spectrum_report",
    "spectrum_from_report",
    "pattern_from_indices",
]

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class FourierSpectrum:
    """Length-``M`` complex coefficient vector of one period."""

    coeffs: np.ndarray

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=complex).ravel()
        if a.size < 1:
            raise ValidationError("spectrum must have at least one coefficient")
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)

    @property
    def M(self) -> int:
        return self.coeffs.size

    def mirror(self) -> np.ndarray:
        """Coefficients reindexed as ``a_{(M - i) mod M}``."""
        return self.coeffs[(-np.arange(self.M)) % self.M]

    def symmetry_defect(self) -> float:
        """Largest ``|a_i - conj(a_{M-i})|`` relative to ``max |a|`` (0 for a zero spectrum)."""
        scale = np.abs(self.coeffs).max()
        if scale == 0:
            return 0.0
        return float(np.abs(self.coeffs - np.conj(self.mirror())).max() / scale)

    def is_real_signal(self, rtol: float = SYMMETRY_RTOL) -> bool:
        return self.symmetry_defect() <= rtol


@dataclass(frozen=True)
class SparsityPattern:
    """Ascending, reflection-closed set of wavenumbers with nonzero coefficients."""

    indices: tuple
    M: int
    threshold_used: float = 0.0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("pattern indices must be strictly ascending")
        if idx and (idx[0] < 0 or idx[-1] >= self.M):
            raise ValidationError(f"pattern indices must lie in [0, {self.M})")
        s = set(idx)
        if any((-i) % self.M not in s for i in idx):
            raise ValidationError("pattern is not reflection-closed")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_first_half(cls, first_half: Iterable[int], M: int) -> "SparsityPattern":
        """Pattern generated by the given indices and their mirrors."""
        s = set()
        for i in first_half:
            s.add(int(i) % M)
            s.add((-int(i)) % M)
        return cls(tuple(sorted(s)), M)

    @property
    def P(self) -> int:
        return len(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64)

    def first_half(self) -> tuple:
        """Indices ``i`` with ``0 < i < M/2``."""
        return tuple(i for i in self.indices if 0 < 2 * i < self.M)


def dft(ts: TimeSeries, component: int = 0) -> FourierSpectrum:
    """Spectrum of the first ``period_samples`` samples of one component."""
    M = ts.period_samples
    if M is None:
        raise ValidationError("dft needs period_samples to be set")
    if not 0 <= component < ts.J:
        raise ValidationError(f"component {component} out of range for J={ts.J}")
    x = ts.data[component, :M]
    if not np.all(np.isfinite(x)):
        raise ValidationError("cannot transform non-finite samples")
    # ifft carries the 1/M factor and the +j sign of the analysis formula
    return FourierSpectrum(np.fft.ifft(x))


def _signed_wavenumbers(M: int) -> np.ndarray:
    i = np.arange(M)
    return np.where(2 * i <= M, i, i - M)


def reconstruct(spec: FourierSpectrum, t_over_T, rtol: float = 1e-10):
    """Evaluate the band-limited surrogate at fractional period positions.

    Wavenumbers above ``M/2`` are taken as their negative aliases so that the
    interpolant of a real signal stays real between samples; an even-``M``
    Nyquist bin is evaluated as a cosine. On the sample grid ``t = k/M`` this
    is identical to summing ``a_i w^(k i)`` over ``i = 0..M-1``.

    Raises
    ------
    ValidationError
        If the imaginary part of the sum exceeds ``rtol`` relative to
        ``sum |a_i|``, i.e. the spectrum is not that of a real signal.
    """
    a = spec.coeffs
    M = spec.M
    t = np.asarray(t_over_T, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    n = _signed_wavenumbers(M)
    phase = np.exp(-2j * np.pi * np.outer(t, n))
    if M % 2 == 0:
        phase[:, M // 2] = np.cos(np.pi * M * t)
    s = phase @ a
    scale = np.abs(a).sum()
    if scale > 0 and np.abs(s.imag).max() > rtol * scale:
        raise ValidationError(
            f"spectrum is not reflection-symmetric: imaginary residue {np.abs(s.imag).max():.3e}")
    out = s.real
    return float(out[0]) if scalar else out


def synthesize(spec: FourierSpectrum, M_new: int, n_periods: int = 1) -> np.ndarray:
    """Sample the surrogate at ``M_new`` points per period over ``n_periods`` periods."""
    if M_new < 1 or n_periods < 1:
        raise ValidationError("M_new and n_periods must be positive")
    return reconstruct(spec, np.arange(M_new * n_periods) / M_new)


def detect_sparsity(spec: FourierSpectrum, rel_threshold: float = 1e-10) -> SparsityPattern:
    """Indices with ``|a_i| > rel_threshold * max |a|``, closed under reflection."""
    if not 0 <= rel_threshold < 1:
        raise ValidationError("rel_threshold must lie in [0, 1)")
    mag = np.abs(spec.coeffs)
    top = mag.max()
    if top == 0:
        return SparsityPattern((), spec.M, rel_threshold)
    keep = mag > rel_threshold * top
    keep = keep | keep[(-np.arange(spec.M)) % spec.M]
    return SparsityPattern(tuple(np.flatnonzero(keep)), spec.M, rel_threshold)


def min_subsample(pattern: SparsityPattern, M: Optional[int] = None) -> int:
    """Smallest even samples-per-period keeping every wavenumber: ``2 (i_max + 1)``.

    ``i_max`` is the largest pattern index below ``M/2``. Only even ``M`` is
    supported, and a populated Nyquist bin ``M/2`` is rejected because it
    cannot be told apart from its own mirror.
    """
    M = pattern.M if M is None else int(M)
    if M != pattern.M:
        raise ValidationError(f"pattern belongs to M={pattern.M}, got M={M}")
    if pattern.P == 0:
        raise ValidationError("empty sparsity pattern")
    if M % 2:
        raise ValidationError(f"min_subsample assumes even M, got M={M}")
    if M // 2 in pattern.indices:
        raise ValidationError(f"pattern contains the Nyquist bin {M // 2}; unsupported")
    i_max = max(i for i in pattern.indices if 2 * i < M)
    return 2 * (i_max + 1)


def filter_spectrum(spec: FourierSpectrum, pattern: SparsityPattern) -> FourierSpectrum:
    """Zero every coefficient outside ``pattern``."""
    if pattern.M != spec.M:
        raise ValidationError(f"pattern M={pattern.M} does not match spectrum M={spec.M}")
    mask = np.zeros(spec.M, dtype=bool)
    mask[list(pattern.indices)] = True
    return FourierSpectrum(np.where(mask, spec.coeffs, 0))


def spectrum_report(spec: FourierSpectrum, pattern: Optional[SparsityPattern] = None) -> dict:
    """JSON-ready description of a spectrum and its pattern."""
    rep = {
        "M": spec.M,
        "coeffs": [[float(c.real), float(c.imag)] for c in spec.coeffs],
    }
    if pattern is not None:
        rep.update(pattern=list(pattern.indices), P=pattern.P, threshold=pattern.threshold_used)
    return rep


def spectrum_from_report(rep: dict):
    """Inverse of :func:`spectrum_report`; returns ``(spectrum, pattern or None)``."""
    c = np.array(rep["coeffs"], dtype=float)
    spec = FourierSpectrum(c[:, 0] + 1j * c[:, 1])
    pat = None
    if "pattern" in rep:
        pat = SparsityPattern(tuple(rep["pattern"]), spec.M, rep.get("threshold", 0.0))
    return spec, pat


def pattern_from_indices(indices: Sequence[int], M: int) -> SparsityPattern:
    """Reflection closure of an arbitrary index list."""
    return SparsityPattern.from_first_half(indices, M)
