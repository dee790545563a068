"""Existence of exact delay models for multi-component signals.

For ``J`` components sharing a period ``M`` the spectral system becomes
``sum_j diag(a^(j)) A_L K^(j,m) = diag(a^(m)) b`` for every output ``m``. An
exact real model with ``L`` delays exists iff the right-hand sides lie in the
column space of ``G_L = [diag(a^(1)) A_L, ..., diag(a^(J)) A_L]``, which is a
rank comparison. Everything is restricted to the rows where some component
has a nonzero coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .signals import TimeSeries
from .spectral import FourierSpectrum, SparsityPattern, dft

__all__ = [
    "StackedSpectra",
    "OCSystem",
    "stack_spectra",
    "row_eliminate",
    "rank_test_vector",
    "minimal_delay_vector",
    "oc_index",
    "delay_block",
    "vector_report",
    "stack_series",
    "ranks_by_L",
    "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-10


def _numerical_rank(A: np.ndarray, rank_tol: float) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


@dataclass(frozen=True)
class StackedSpectra:
    """Spectra of ``J`` components sharing one period, plus their union pattern."""

    spectra: tuple
    union_pattern: SparsityPattern

    @property
    def J(self) -> int:
        return len(self.spectra)

    @property
    def M(self) -> int:
        return self.union_pattern.M

    @property
    def P_union(self) -> int:
        return self.union_pattern.P

    def restricted(self) -> np.ndarray:
        """Coefficients on the union rows, shape ``(J, P_union)``."""
        idx = list(self.union_pattern.indices)
        return np.vstack([s.coeffs[idx] for s in self.spectra])


def stack_spectra(spectra: Sequence[FourierSpectrum], rel_threshold: float = 1e-10) -> StackedSpectra:
    """Collect spectra and find the rows where any component exceeds the threshold.

    The threshold is relative to the largest coefficient over all components.
    """
    spectra = tuple(spectra)
    if not spectra:
        raise ValidationError("need at least one spectrum")
    M = spectra[0].M
    if any(s.M != M for s in spectra):
        raise ValidationError("all spectra must share M")
    mag = np.max(np.vstack([np.abs(s.coeffs) for s in spectra]), axis=0)
    top = mag.max()
    keep = mag > rel_threshold * top if top > 0 else np.zeros(M, dtype=bool)
    keep = keep | keep[(-np.arange(M)) % M]
    return StackedSpectra(spectra, SparsityPattern(tuple(np.flatnonzero(keep)), M, rel_threshold))


def stack_series(ts: TimeSeries, rel_threshold: float = 1e-10) -> StackedSpectra:
    """:func:`stack_spectra` applied to the DFT of every component of ``ts``."""
    return stack_spectra([dft(ts, j) for j in range(ts.J)], rel_threshold)


@dataclass(frozen=True)
class OCSystem:
    """Output map of the induced system ``(A, B, C)``.

    ``A`` (diagonal phase shifts) and ``B`` (all-ones inputs) are never
    stored; they are fixed by ``M`` and ``J``. ``C`` is held as the
    ``(J, P_union)`` array of surviving coefficients.
    """

    coeffs: np.ndarray
    rows: tuple
    M: int

    @property
    def J(self) -> int:
        return self.coeffs.shape[0]

    @property
    def P_union(self) -> int:
        return len(self.rows)

    def C(self) -> np.ndarray:
        """Dense ``P_union x (J M)`` output matrix."""
        out = np.zeros((self.P_union, self.J * self.M), dtype=complex)
        r = np.arange(self.P_union)
        for j in range(self.J):
            out[r, j * self.M + np.array(self.rows)] = self.coeffs[j]
        return out


def row_eliminate(spectra: StackedSpectra, rel_threshold: Optional[float] = None) -> OCSystem:
    """Drop rows that vanish for every component and check the rest has full row rank."""
    if rel_threshold is not None and rel_threshold != spectra.union_pattern.threshold_used:
        spectra = stack_spectra(spectra.spectra, rel_threshold)
    if spectra.P_union == 0:
        raise ValidationError("every row was eliminated")
    sys = OCSystem(spectra.restricted(), spectra.union_pattern.indices, spectra.M)
    # rows of C have disjoint supports, so row rank is the count of nonzero rows
    if np.any(np.abs(sys.coeffs).max(axis=0) == 0):
        raise ValidationError("output matrix lost full row rank after elimination")
    return sys


def delay_block(coeffs: np.ndarray, rows: Sequence[int], M: int, k: int) -> np.ndarray:
    """Columns ``diag(a^(j)) w^(-k i)`` for all ``j``: shape ``(P_union, J)``."""
    idx = np.asarray(rows, dtype=np.int64)
    phase = np.exp(2j * np.pi * ((idx * k) % M) / M)
    return (coeffs * phase[None, :]).T


def _g_matrix(st: StackedSpectra, L: int) -> np.ndarray:
    a = st.restricted()
    rows = st.union_pattern.indices
    blocks = [delay_block(a, rows, st.M, c) for c in range(L + 1)]
    return np.hstack(blocks)


def _rhs(st: StackedSpectra) -> np.ndarray:
    a = st.restricted()
    idx = st.union_pattern.array
    b = np.exp(-2j * np.pi * (idx % st.M) / st.M)
    return (a * b[None, :]).T


def rank_test_vector(spectra: StackedSpectra, L: int, rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """True iff an exact real model with ``L`` delays exists (rank comparison)."""
    if spectra.P_union == 0:
        return True
    G = _g_matrix(spectra, L)
    aug = np.hstack([G, _rhs(spectra)])
    return _numerical_rank(G, rank_tol) == _numerical_rank(aug, rank_tol)


def ranks_by_L(spectra: StackedSpectra, L_max: int, rank_tol: float = DEFAULT_RANK_TOL) -> List[dict]:
    out = []
    rhs = _rhs(spectra)
    for L in range(L_max + 1):
        G = _g_matrix(spectra, L)
        out.append({"L": L, "rank": _numerical_rank(G, rank_tol),
                    "rank_aug": _numerical_rank(np.hstack([G, rhs]), rank_tol)})
    return out


def minimal_delay_vector(spectra: StackedSpectra, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Smallest ``L`` passing :func:`rank_test_vector`."""
    if spectra.P_union == 0:
        raise ValidationError("spectra are identically zero")
    for L in range(spectra.P_union):
        if rank_test_vector(spectra, L, rank_tol):
            return L
    # unreachable for exact input: L = P_union - 1 always passes
    return spectra.P_union - 1


def oc_index(sys: OCSystem, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Least ``mu`` with ``[CB, CAB, ..., CA^(mu-1) B]`` of full row rank.

    Blocks are appended one at a time, each costing ``P_union x J``.
    """
    cols = []
    for mu in range(1, sys.M + 1):
        cols.append(delay_block(sys.coeffs, sys.rows, sys.M, mu - 1))
        if _numerical_rank(np.hstack(cols), rank_tol) == sys.P_union:
            return mu
    raise ValidationError("system is not output controllable within M blocks")


def vector_report(spectra: StackedSpectra, rank_tol: float = DEFAULT_RANK_TOL) -> dict:
    L_min = minimal_delay_vector(spectra, rank_tol)
    mu = oc_index(row_eliminate(spectra), rank_tol)
    return {
        "P_union": spectra.P_union,
        "minimal_L": L_min,
        "oc_index": mu,
        "ranks_by_L": ranks_by_L(spectra, max(L_min, mu - 1) + 1, rank_tol),
    }
