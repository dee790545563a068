"""Condition numbers of delay systems and bounds on them.

All bounds concern the ``P x (L+1)`` Vandermonde matrix on the nodes
``z_p = exp(2j pi i_p / M)``. A bound that does not apply at the requested
point is returned as ``None``, never raised, so sweeps run to completion.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .delay_solver import (EXACT_K_MAX_P, build_spectral_system, exact_K, solve_spectral)
from .errors import ValidationError
from .spectral import SparsityPattern

__all__ = [
    "ConditionReport",
    "cond2",
    "cond_frobenius",
    "cond_effective",
    "node_separation",
    "min_wrapped_spacing",
    "square_solution_norm2",
    "min_norm_bound",
    "prop3_upper",
    "bazan_upper",
    "kunis_lower",
    "condition_report",
    "write_sweep_csv",
    "QUALITATIVE_KAPPA",
]

# beyond this the double-precision value only indicates a regime
QUALITATIVE_KAPPA = 1e15


def _singular_values(A) -> np.ndarray:
    A = np.asarray(A)
    if A.size == 0 or not np.any(A):
        raise ValidationError("condition number of a zero matrix is undefined")
    return np.linalg.svd(A, compute_uv=False)


def cond2(A) -> float:
    """``sigma_max / sigma_min`` over the nonzero singular values."""
    s = _singular_values(A)
    s = s[s > 0]
    return float(s[0] / s[-1])


def cond_frobenius(A) -> float:
    """``||A||_F ||A^+||_F`` over the nonzero singular values."""
    s = _singular_values(A)
    s = s[s > 0]
    return float(np.sqrt(np.sum(s ** 2)) * np.sqrt(np.sum(s ** -2.0)))


def cond_effective(A, rel_cutoff: float = 1e-15) -> float:
    """``sigma_max / sigma_min`` over singular values above ``rel_cutoff * sigma_max``."""
    if not 0 < rel_cutoff < 1:
        raise ValidationError("rel_cutoff must lie in (0, 1)")
    s = _singular_values(A)
    s = s[s > rel_cutoff * s[0]]
    return float(s[0] / s[-1])


def min_wrapped_spacing(pattern: SparsityPattern, M: Optional[int] = None) -> int:
    """Smallest circular distance between two pattern indices (in index units)."""
    M = pattern.M if M is None else M
    idx = np.sort(pattern.array % M)
    if idx.size < 2:
        return 0
    gaps = np.diff(np.r_[idx, idx[0] + M])
    return int(gaps.min())


def node_separation(pattern: SparsityPattern, M: Optional[int] = None) -> float:
    """Minimal chordal distance ``delta`` between distinct nodes (0 for a single node)."""
    M = pattern.M if M is None else M
    d = min_wrapped_spacing(pattern, M)
    return 2.0 * np.sin(np.pi * d / M) if d else 0.0


def square_solution_norm2(pattern: SparsityPattern, M: Optional[int] = None) -> float:
    """``||K||^2`` of the unique solution at ``L = P - 1``."""
    M = pattern.M if M is None else M
    if pattern.P <= EXACT_K_MAX_P:
        K = exact_K(pattern, M).K
    else:
        K = solve_spectral(build_spectral_system(pattern, M, pattern.P - 1), "bp").K
    return float(np.sum(K ** 2))


def min_norm_bound(pattern: SparsityPattern, M: int, L: int) -> float:
    """Upper bound on the squared norm of the minimum-norm solution with ``L`` delays.

    Each full period of extra delays lets the square solution be split evenly
    over one more shifted copy, dividing the norm by the number of copies.
    """
    P = pattern.P
    if P == 0:
        raise ValidationError("empty sparsity pattern")
    if L < P - 1:
        raise ValidationError(f"L={L} < P-1={P - 1}: no exact solution")
    return square_solution_norm2(pattern, M) / (1 + (L - P + 1) // M)


def prop3_upper(pattern: SparsityPattern, M: int, L: int) -> float:
    """Upper bound on ``kappa_2`` built from the node separation and the solution norm."""
    P = pattern.P
    if P == 0:
        raise ValidationError("empty sparsity pattern")
    if L < P - 1:
        raise ValidationError(f"L={L} < P-1={P - 1}")
    if P == 1:
        return 1.0
    delta = node_separation(pattern, M)
    bound = min_norm_bound(pattern, M, L)
    d = P * ((1.0 + bound / ((P - 1) * delta ** 2)) ** ((P - 1) / 2.0) - 1.0)
    if d == 0:
        return 1.0
    return float(1.0 + 0.5 * d * (1.0 + np.sqrt(1.0 + 4.0 / d)))


def bazan_upper(pattern: SparsityPattern, M: int, L: int) -> Optional[float]:
    """Upper bound for well-separated nodes, valid when ``delta (L+1) > 2 (P-1)``."""
    P = pattern.P
    if P <= 1:
        return 1.0 if P == 1 else None
    x = node_separation(pattern, M) * (L + 1) / (2.0 * (P - 1))
    if x <= 1:
        return None
    return float(np.sqrt(1.0 + 2.0 / (x - 1.0)))


def kunis_lower(pattern: SparsityPattern, M: int, L: int) -> Optional[float]:
    """Lower bound for nearly colliding nodes, valid when ``tau <= 1``.

    ``tau = (L+1) * min spacing`` with node parameters ``i_p / M`` on the unit
    torus.
    """
    if pattern.P < 2:
        return None
    tau = (L + 1) * min_wrapped_spacing(pattern, M) / M
    if tau > 1:
        return None
    return float(np.sqrt(6.0) / (np.pi * tau))


@dataclass(frozen=True)
class ConditionReport:
    M: int
    L: int
    kappa2: float
    kappaF: float
    kappa_eff: float
    delta: float
    bounds: dict = field(default_factory=dict)

    @property
    def qualitative(self) -> bool:
        """True when ``kappa2`` is too large to be read as more than a regime."""
        return not np.isfinite(self.kappa2) or self.kappa2 >= QUALITATIVE_KAPPA

    def row(self) -> dict:
        def cell(v):
            return "" if v is None else f"{v:.17g}"
        return {
            "M": self.M, "L": self.L,
            "kappa2": cell(self.kappa2), "kappa_eff": cell(self.kappa_eff),
            "prop3": cell(self.bounds.get("prop3_upper")),
            "bazan": cell(self.bounds.get("bazan_upper")),
            "kunis": cell(self.bounds.get("kunis_lower")),
            "delta": cell(self.delta),
        }


def condition_report(pattern: SparsityPattern, M: int, L: int,
                     rel_cutoff: float = 1e-15) -> ConditionReport:
    """Condition numbers of the spectral system plus every applicable bound."""
    A = build_spectral_system(pattern, M, L).matrix
    bounds = {
        "bazan_upper": bazan_upper(pattern, M, L),
        "kunis_lower": kunis_lower(pattern, M, L),
        "prop3_upper": prop3_upper(pattern, M, L) if L >= pattern.P - 1 else None,
        "minnorm_upper": min_norm_bound(pattern, M, L) if L >= pattern.P - 1 else None,
    }
    return ConditionReport(M, L, cond2(A), cond_frobenius(A), cond_effective(A, rel_cutoff),
                           node_separation(pattern, M), bounds)


SWEEP_COLUMNS = ["M", "L", "kappa2", "kappa_eff", "prop3", "bazan", "kunis", "delta"]


def write_sweep_csv(reports: Iterable[ConditionReport], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for rep in reports:
            w.writerow(rep.row())
    return path
