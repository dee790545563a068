"""Companion matrices, modal decompositions, delay-embedded DMD and pseudospectra."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .delay_solver import DelayModel
from .errors import NumericalError, ValidationError
from .signals import TimeSeries

__all__ = [
    "CompanionMatrix",
    "ModalDecomposition",
    "GridSpec",
    "PseudospectrumGrid",
    "companion",
    "companion_rollout",
    "eigendecompose",
    "hodmd",
    "hodmd_reconstruct",
    "optimal_delay",
    "pseudospectrum",
    "sort_eigenvalues",
    "modal_report",
]


@dataclass(frozen=True)
class CompanionMatrix:
    """State-transition matrix of a delay model.

    ``kind="scalar"``: ``(L+1) x (L+1)`` with ``K`` in the first column and
    ones on the superdiagonal, acting on row vectors,
    ``Y_{k+1}^T = Y_k^T C``.

    ``kind="block"``: ``J(L+1) x J(L+1)`` acting on column vectors
    ``h_k = [x_{k-L}; ...; x_k]``, identity blocks above the diagonal and last
    block row ``[W_L, ..., W_0]``.
    """

    matrix: np.ndarray
    kind: str
    J: int
    L: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ModalDecomposition:
    """Eigenvalues with their spatial modes and amplitudes.

    Attributes
    ----------
    eigenvalues : ndarray, shape (r',)
    spatial_modes : ndarray, shape (J, r')
    temporal_amplitudes : ndarray or None, shape (r',)
    r_prime : int
    diagnostics : dict
        Free-form details: structure checks, rank caps, binding constraints.
    """

    eigenvalues: np.ndarray
    spatial_modes: np.ndarray
    temporal_amplitudes: Optional[np.ndarray]
    r_prime: int
    diagnostics: dict = field(default_factory=dict)
    # lifted delay-space eigenvectors, used for reconstruction
    delay_modes: Optional[np.ndarray] = field(default=None, repr=False)
    basis: Optional[np.ndarray] = field(default=None, repr=False)
    L: int = 0

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max()) if self.eigenvalues.size else 0.0


def companion(model: DelayModel, kind: Optional[str] = None) -> CompanionMatrix:
    """Companion matrix of ``model``; scalar form for ``J=1`` unless ``kind="block"``."""
    J, L = model.J, model.L
    kind = kind or ("scalar" if J == 1 else "block")
    if kind == "scalar":
        if J != 1:
            raise ValidationError("scalar companion needs J=1")
        C = np.zeros((L + 1, L + 1))
        C[:, 0] = model.K
        C[np.arange(L), np.arange(1, L + 1)] = 1.0
        return CompanionMatrix(C, "scalar", 1, L)
    if kind == "block":
        n = J * (L + 1)
        A = np.zeros((n, n))
        A[np.arange(n - J), np.arange(J, n)] = 1.0
        for l in range(L + 1):
            A[L * J:, (L - l) * J:(L - l + 1) * J] = model.block(l)
        return CompanionMatrix(A, "block", J, L)
    raise ValidationError(f"unknown companion kind {kind!r}")


def companion_rollout(cm: CompanionMatrix, seed_window, n_steps: int) -> np.ndarray:
    """Iterate the companion map from a ``(J, L+1)`` seed (newest last); returns ``(J, n_steps)``."""
    seed = np.atleast_2d(np.asarray(seed_window, dtype=float))
    out = np.empty((cm.J, n_steps))
    A = cm.matrix
    if cm.kind == "scalar":
        y = seed[0, ::-1].copy()
        for t in range(n_steps):
            y = y @ A
            out[0, t] = y[0]
    else:
        h = seed.T.reshape(-1).copy()
        for t in range(n_steps):
            h = A @ h
            out[:, t] = h[-cm.J:]
    return out


def sort_eigenvalues(lam: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Permutation ordering by descending modulus, then ascending phase.

    Moduli are rounded so that conjugate pairs and roots of unity that differ
    only by roundoff sort by phase.
    """
    mod = np.round(np.abs(lam), decimals)
    ph = np.round(np.angle(lam), decimals)
    return np.lexsort((ph, -mod))


def _polish_roots(K: np.ndarray, lam: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Newton steps on ``lam^(L+1) - sum_l K_l lam^(L-l)`` in extended precision.

    A step is kept only if it lowers the polynomial residual, so distinct
    roots sharpen and clustered or repeated roots are left alone.
    """
    coef = np.r_[1.0, -K].astype(np.clongdouble)
    dcoef = coef[:-1] * np.arange(coef.size - 1, 0, -1)
    z = lam.astype(np.clongdouble)
    res = np.abs(np.polyval(coef, z))
    for _ in range(sweeps):
        d = np.polyval(dcoef, z)
        ok = d != 0
        step = np.zeros_like(z)
        step[ok] = np.polyval(coef, z[ok]) / d[ok]
        cand = z - step
        cres = np.abs(np.polyval(coef, cand))
        better = ok & (cres < res)
        z = np.where(better, cand, z)
        res = np.where(better, cres, res)
    return z.astype(complex)


def eigendecompose(cm: CompanionMatrix) -> ModalDecomposition:
    """Eigenvalues and eigenvectors of a companion matrix.

    For the scalar form the left eigenvectors are checked against the
    reversed Vandermonde structure ``(lam^L, ..., lam, 1)``; a failed check
    (e.g. repeated eigenvalues) is recorded in ``diagnostics`` rather than
    raised.
    """
    A = cm.matrix
    if cm.kind == "scalar":
        lam, V = np.linalg.eig(A.T)
        lam = _polish_roots(A[:, 0], lam)
        order = sort_eigenvalues(lam)
        lam, V = lam[order], V[:, order]
        diag = {"vandermonde_ok": False, "vandermonde_defect": float("inf")}
        last = V[-1, :]
        if np.all(np.abs(last) > 1e-14):
            Vn = V / last[None, :]
            expected = lam[None, :] ** np.arange(cm.L, -1, -1)[:, None]
            defect = float(np.abs(Vn - expected).max() / max(1.0, np.abs(expected).max()))
            diag = {"vandermonde_ok": defect < 1e-6, "vandermonde_defect": defect}
        modes = np.ones((1, lam.size), dtype=complex)
        return ModalDecomposition(lam, modes, None, lam.size, diag, V, None, cm.L)
    lam, V = np.linalg.eig(A)
    order = sort_eigenvalues(lam)
    lam, V = lam[order], V[:, order]
    modes = V[-cm.J:, :]
    return ModalDecomposition(lam, modes, None, lam.size, {}, V, None, cm.L)


def optimal_delay(M: int, r: int) -> Tuple[int, float]:
    """Delay count where the two rank caps on delay-embedded DMD meet.

    Returns ``(ceil(M/(r+1)), r M/(r+1))``; the second value is the largest
    achievable retained rank at the crossing.
    """
    if r < 1 or M < 2:
        raise ValidationError("need r >= 1 and M >= 2")
    return -(-M // (r + 1)), r * M / (r + 1)


def hodmd(data: TimeSeries, r: int, L: int, r_prime_cutoff: float = 1e-10) -> ModalDecomposition:
    """Delay-embedded DMD with a spatial SVD reduction.

    Steps: project snapshots onto the leading ``r`` left singular vectors,
    stack ``L+1`` delayed copies, truncate the SVD of the shifted snapshot
    matrix at ``r_prime_cutoff`` relative, and diagonalize the reduced
    operator. ``L=0`` is ordinary DMD.

    Raises
    ------
    ValidationError
        Naming the violated constraint: ``r <= J``, ``r <= M`` or ``L <= M-2``.
    """
    data.check_finite()
    X = data.data
    J, M = X.shape
    if r < 1:
        raise ValidationError("r must be positive")
    if r > J:
        raise ValidationError(f"constraint r <= J violated: r={r}, J={J}")
    if r > M:
        raise ValidationError(f"constraint r <= M violated: r={r}, M={M}")
    if L < 0 or L > M - 2:
        raise ValidationError(
            f"constraint L <= M-2 violated: L={L}, M={M} leaves {M - 1 - L} snapshot pairs")
    U = np.linalg.svd(X, full_matrices=False)[0][:, :r]
    Xr = U.T @ X
    # blocks oldest..newest; column c holds h_{L+c}
    H = np.vstack([Xr[:, l:M - L + l] for l in range(L + 1)])
    H0, H1 = H[:, :-1], H[:, 1:]
    Q, s, Zt = np.linalg.svd(H0, full_matrices=False)
    cap = min(r * (L + 1), M - 1 - L)
    binding = "r(L+1)" if r * (L + 1) <= M - 1 - L else "M-1-L"
    if s[0] == 0:
        raise NumericalError("delay-embedded snapshot matrix is zero")
    rp = min(int(np.sum(s > r_prime_cutoff * s[0])), cap)
    Q, s, Z = Q[:, :rp], s[:rp], Zt[:rp].T
    Ahat = (Q.T @ H1 @ Z) / s[None, :]
    lam, Wv = np.linalg.eig(Ahat)
    order = sort_eigenvalues(lam)
    lam, Wv = lam[order], Wv[:, order]
    lifted = Q @ Wv
    amps = np.linalg.lstsq(lifted, H[:, 0], rcond=None)[0]
    modes = U @ lifted[L * r:, :]
    diag = {"r_prime_cap": cap, "binding_constraint": binding,
            "rank_before_cap": int(np.sum(s > r_prime_cutoff * s[0])), "r": r}
    return ModalDecomposition(lam, modes, amps, rp, diag, lifted, U, L)


def hodmd_reconstruct(md: ModalDecomposition, n_steps: int) -> np.ndarray:
    """Modal prediction of ``x_L, x_{L+1}, ...``; returns ``(J, n_steps)``."""
    if md.basis is None or md.temporal_amplitudes is None:
        raise ValidationError("decomposition carries no amplitudes; build it with hodmd()")
    r = md.basis.shape[1]
    k = np.arange(n_steps)
    with np.errstate(over="ignore", invalid="ignore"):
        powers = md.eigenvalues[:, None] ** k[None, :]
        newest = md.delay_modes[md.L * r:, :]
        Z = newest @ (md.temporal_amplitudes[:, None] * powers)
        return (md.basis @ Z).real


@dataclass(frozen=True)
class GridSpec:
    re: Tuple[float, float] = (-1.5, 1.5)
    im: Tuple[float, float] = (-1.5, 1.5)
    n_re: int = 301
    n_im: int = 301

    def __post_init__(self):
        if self.n_re < 2 or self.n_im < 2:
            raise ValidationError("grid needs at least 2 nodes per axis")


@dataclass(frozen=True)
class PseudospectrumGrid:
    """``sigma_min(z I - A)`` on a rectangular grid; ``sigma_min[i_im, i_re]``."""

    re: np.ndarray
    im: np.ndarray
    sigma_min: np.ndarray

    def mask(self, eps: float) -> np.ndarray:
        return self.sigma_min <= eps

    def area_fraction(self, eps: float) -> float:
        return float(self.mask(eps).mean())

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im", "sigma_min"])
            for a, y in enumerate(self.im):
                for b, x in enumerate(self.re):
                    w.writerow([f"{x:.17g}", f"{y:.17g}", f"{self.sigma_min[a, b]:.17g}"])
        return path


def pseudospectrum(cm: CompanionMatrix, grid: GridSpec = GridSpec(), chunk: int = 2048) -> PseudospectrumGrid:
    """Smallest singular value of ``z I - A`` at every grid node."""
    A = cm.matrix.astype(complex)
    n = A.shape[0]
    re = np.linspace(*grid.re, grid.n_re)
    im = np.linspace(*grid.im, grid.n_im)
    z = (re[None, :] + 1j * im[:, None]).ravel()
    out = np.empty(z.size)
    eye = np.eye(n)
    for s in range(0, z.size, chunk):
        zz = z[s:s + chunk]
        stack = zz[:, None, None] * eye[None] - A[None]
        out[s:s + chunk] = np.linalg.svd(stack, compute_uv=False)[:, -1]
    return PseudospectrumGrid(re, im, out.reshape(grid.n_im, grid.n_re))


def modal_report(md: ModalDecomposition) -> dict:
    lam = md.eigenvalues
    return {
        "r_prime": md.r_prime,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in lam],
        "modulus": [float(v) for v in np.abs(lam)],
        "phase": [float(v) for v in np.angle(lam)],
        "diagnostics": md.diagnostics,
    }
