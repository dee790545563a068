"""Linear delay models: Hankel systems, time- and frequency-domain solves, rollout.

A model maps the delay vector ``Y_k`` to the next state,
``x_{k+1} = W^T Y_k``. For ``J`` components and ``L`` delays the delay vector
stacks ``[x_k, x_{k-1}, ..., x_{k-L}]`` for component 1, then component 2,
and so on, so entry ``j*(L+1) + l`` holds ``x^(j)_{k-l}``. The weight matrix
has shape ``(J(L+1), J)``; in the scalar case its single column is
``K = (K_0, ..., K_L)`` with ``K_0`` multiplying the newest sample.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError, ValidationError
from .signals import TimeSeries
from .spectral import SparsityPattern

__all__ = [
    "DelayModel",
    "HankelSystem",
    "SpectralSystem",
    "Contiguous",
    "build_hankel",
    "solve_time_domain",
    "build_spectral_system",
    "solve_spectral",
    "bjorck_pereyra",
    "exact_K",
    "exact_K_lagrange",
    "minimal_delay_scalar",
    "predict_rollout",
    "nmse",
    "model_to_json",
    "model_from_json",
    "fit_on_prefix",
    "DEFAULT_SVD_CUTOFF",
]

DEFAULT_SVD_CUTOFF = 1e-15
EXACT_K_MAX_P = 16


@dataclass(frozen=True)
class DelayModel:
    """Real delay-transition weights.

    Attributes
    ----------
    weights : ndarray, shape (J*(L+1), J)
    L : int
    J : int
    imag_residue : float
        Norm of the imaginary part discarded when a complex solve was
        realized (0 for real solves).
    solver : str
    svd_cutoff : float or None
    """

    weights: np.ndarray
    L: int
    J: int = 1
    imag_residue: float = 0.0
    solver: str = ""
    svd_cutoff: Optional[float] = None

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape != (self.J * (self.L + 1), self.J):
            raise ValidationError(
                f"weights shape {W.shape} does not match J={self.J}, L={self.L}")
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)

    @property
    def K(self) -> np.ndarray:
        """Scalar weight vector ``(K_0, ..., K_L)``."""
        if self.J != 1:
            raise ValidationError("K is only defined for scalar models; use block()")
        return self.weights[:, 0]

    def block(self, l: int) -> np.ndarray:
        """``W_l``: the ``J x J`` matrix multiplying ``x_{k-l}``."""
        idx = np.arange(self.J) * (self.L + 1) + l
        return self.weights[idx, :].T

    def reversed_order(self) -> np.ndarray:
        """Scalar weights with the oldest sample first, ``(K_L, ..., K_0)``."""
        return self.K[::-1].copy()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)))


@dataclass(frozen=True)
class HankelSystem:
    """Stacked delay vectors and next-state targets."""

    regressor: np.ndarray
    target: np.ndarray
    row_indices: np.ndarray
    L: int
    J: int

    @property
    def Q(self) -> int:
        return self.regressor.shape[0]


@dataclass(frozen=True)
class SpectralSystem:
    """``A K = b`` on the nonzero wavenumbers.

    Row ``p`` of ``matrix`` is ``(1, z_p, ..., z_p^L)`` with node
    ``z_p = w^(-i_p) = exp(2j pi i_p / M)`` and ``rhs[p] = conj(z_p)``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    nodes: np.ndarray
    M: int
    L: int
    pattern: SparsityPattern = field(repr=False)

    @property
    def P(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Contiguous:
    """Rows ``start, start+1, ..., start+Q-1`` without wrap-around."""

    start: int
    Q: int


_CONTIG_RE = re.compile(r"^\s*contiguous\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")


def _parse_rows(rows):
    if isinstance(rows, str):
        if rows == "all-periodic":
            return rows
        m = _CONTIG_RE.match(rows)
        if m:
            return Contiguous(int(m.group(1)), int(m.group(2)))
        raise ValidationError(f"unknown row selector {rows!r}")
    if isinstance(rows, Contiguous):
        return rows
    return np.asarray(list(rows), dtype=np.int64)


def build_hankel(ts: TimeSeries, L: int, rows: Union[str, Contiguous, Sequence[int]] = "all-periodic",
                 wrap: bool = False) -> HankelSystem:
    """Delay-vector regression system.

    Parameters
    ----------
    ts : TimeSeries
    L : int
        Number of delays.
    rows : {"all-periodic", "contiguous(start, Q)", Contiguous, sequence of int}
        ``"all-periodic"`` uses ``k = 0..M-1`` with indices taken modulo the
        period. ``Contiguous(start, Q)`` uses ``k = start..start+Q-1`` and
        needs every referenced sample to exist. An explicit list is checked the
        same way unless ``wrap`` is set.
    wrap : bool
        Allow modulo-period indexing for an explicit list.
    """
    if L < 0 or int(L) != L:
        raise ValidationError(f"L must be a nonnegative integer, got {L}")
    L = int(L)
    ts.check_finite()
    sel = _parse_rows(rows)
    X = ts.data
    N = ts.N
    M = ts.period_samples
    if isinstance(sel, str) or wrap:
        if M is None:
            raise ValidationError("periodic wrap requested but period_samples is not set")
        ks = np.arange(M) if isinstance(sel, str) else (
            np.arange(sel.start, sel.start + sel.Q) if isinstance(sel, Contiguous) else sel)
        modulo = M
    else:
        if isinstance(sel, Contiguous):
            if sel.Q < 1:
                raise ValidationError("Q must be positive")
            if sel.start < L:
                raise ValidationError(f"start={sel.start} < L={L}: not enough history")
            if sel.start + sel.Q > N - 1:
                raise ValidationError(
                    f"rows {sel.start}..{sel.start + sel.Q - 1} need targets up to index "
                    f"{sel.start + sel.Q} but only {N} samples exist")
            ks = np.arange(sel.start, sel.start + sel.Q)
        else:
            ks = sel
            if ks.size and (ks.min() < L or ks.max() > N - 2):
                raise ValidationError(f"row indices must lie in [{L}, {N - 2}] without wrap")
        modulo = None
    if ks.size < 1:
        raise ValidationError("no rows selected")
    lag = ks[:, None] - np.arange(L + 1)[None, :]
    nxt = ks + 1
    if modulo is not None:
        lag = lag % modulo
        nxt = nxt % modulo
    # component-major stacking: column j*(L+1)+l holds x^(j)_{k-l}
    reg = np.concatenate([X[j][lag] for j in range(ts.J)], axis=1)
    tgt = X[:, nxt].T
    return HankelSystem(reg, tgt, ks.copy(), L, ts.J)


def solve_time_domain(sys: HankelSystem, svd_rel_cutoff: float = DEFAULT_SVD_CUTOFF) -> DelayModel:
    """Minimum-norm least-squares weights via a truncated SVD."""
    if not 0 <= svd_rel_cutoff < 1:
        raise ValidationError("svd_rel_cutoff must lie in [0, 1)")
    if not np.any(sys.regressor):
        raise ValidationError("regressor is identically zero")
    try:
        W, _, _, _ = sla.lstsq(sys.regressor, sys.target, cond=svd_rel_cutoff,
                               lapack_driver="gelsd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"least-squares solve failed: {exc}") from None
    if not np.all(np.isfinite(W)):
        raise NumericalError("least-squares solve returned non-finite weights")
    return DelayModel(W, sys.L, sys.J, 0.0, "lstsq-svd", svd_rel_cutoff)


def _nodes(pattern: SparsityPattern, M: int) -> np.ndarray:
    return np.exp(2j * np.pi * (pattern.array % M) / M)


def build_spectral_system(pattern: SparsityPattern, M: int, L: int) -> SpectralSystem:
    """Vandermonde system on the pattern's nodes, entries built from exact integer phases."""
    if pattern.P == 0:
        raise ValidationError("empty sparsity pattern")
    if pattern.M != M:
        raise ValidationError(f"pattern M={pattern.M} does not match M={M}")
    if L < 0:
        raise ValidationError("L must be nonnegative")
    idx = pattern.array
    c = np.arange(L + 1)
    phase = (idx[:, None] * c[None, :]) % M
    A = np.exp(2j * np.pi * phase / M)
    A[phase == 0] = 1.0
    nodes = _nodes(pattern, M)
    b = np.exp(-2j * np.pi * (idx % M) / M)
    return SpectralSystem(A, b, nodes, M, L, pattern)


def bjorck_pereyra(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Solve ``sum_c a_c x_p^c = f_p`` for ``a`` in O(n^2) operations.

    Newton divided differences followed by conversion to monomial
    coefficients. Nodes must be distinct.
    """
    x = np.asarray(x, dtype=complex)
    a = np.array(f, dtype=complex)
    n = x.size - 1
    for k in range(n):
        d = x[k + 1:] - x[:n - k]
        if np.any(d == 0):
            raise NumericalError("repeated Vandermonde nodes")
        a[k + 1:] = (a[k + 1:] - a[k:n]) / d
    for k in range(n - 1, -1, -1):
        a[k:n] -= a[k + 1:] * x[k]
    return a


def _realize(Kc: np.ndarray, L: int, solver: str, cutoff=None) -> DelayModel:
    K = 0.5 * (Kc + np.conj(Kc))
    resid = float(np.linalg.norm(Kc.imag))
    if not np.all(np.isfinite(K)):
        raise NumericalError("spectral solve returned non-finite weights")
    return DelayModel(K.real, L, 1, resid, solver, cutoff)


_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def _extended_system(sys: SpectralSystem):
    """Matrix and rhs rebuilt in extended precision (where the platform has it)."""
    idx = sys.pattern.array % sys.M
    ph = ((idx[:, None] * np.arange(sys.L + 1)[None, :]) % sys.M).astype(np.longdouble)
    ang = 2 * _PI_LD * ph / sys.M
    A = np.cos(ang) + 1j * np.sin(ang)
    angb = 2 * _PI_LD * idx.astype(np.longdouble) / sys.M
    b = np.cos(angb) - 1j * np.sin(angb)
    return A, b


def _refined_lstsq(sys: SpectralSystem, cutoff: float, sweeps: int = 3) -> np.ndarray:
    """Truncated-SVD least squares plus refinement with extended-precision residuals.

    Corrections are themselves minimum-norm solves, so they stay in the row
    space and the minimum-norm property is kept.
    """
    K = sla.lstsq(sys.matrix, sys.rhs, cond=cutoff, lapack_driver="gelsd")[0]
    A_ext, b_ext = _extended_system(sys)
    for _ in range(sweeps):
        r = (b_ext - A_ext @ K.astype(A_ext.dtype)).astype(complex)
        K = K + sla.lstsq(sys.matrix, r, cond=cutoff, lapack_driver="gelsd")[0]
    return K


def solve_spectral(sys: SpectralSystem, method: str = "bp",
                   svd_rel_cutoff: float = DEFAULT_SVD_CUTOFF) -> DelayModel:
    """Solve the spectral system and realize the solution as real weights.

    ``method="bp"`` needs a square system (``L = P - 1``); ``"svd"`` returns
    the minimum-norm least-squares solution for any shape.
    """
    P, n = sys.matrix.shape
    if method == "bp":
        if n != P:
            raise ValidationError(f"bp needs a square system, got {P}x{n}")
        Kc = bjorck_pereyra(sys.nodes, sys.rhs)
        return _realize(Kc, sys.L, "bp")
    if method == "svd":
        Kc = _refined_lstsq(sys, svd_rel_cutoff)
        return _realize(Kc, sys.L, "spectral-svd", svd_rel_cutoff)
    raise ValidationError(f"unknown method {method!r}")


def _elementary_symmetric(idx: np.ndarray, M: int) -> np.ndarray:
    """``e_r`` of the nodes ``exp(2j pi idx / M)`` for ``r = 0..len(idx)``.

    Each product of nodes is formed from the integer sum of its wavenumbers
    reduced mod ``M``, so no rounding accumulates inside a product.
    """
    n = idx.size
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)[None, :]) & 1
    size = bits.sum(axis=1)
    phase = (bits @ idx) % M
    terms = np.exp(2j * np.pi * phase / M)
    e = np.zeros(n + 1, dtype=complex)
    np.add.at(e, size, terms)
    return e


def _check_exact(pattern: SparsityPattern, M: Optional[int]):
    M = pattern.M if M is None else int(M)
    if pattern.P == 0:
        raise ValidationError("empty sparsity pattern")
    if pattern.P > EXACT_K_MAX_P:
        raise ValidationError(
            f"P={pattern.P} exceeds {EXACT_K_MAX_P}: the subset sums grow as 2^P; use solve_spectral")
    return M, pattern.array % M


def exact_K(pattern: SparsityPattern, M: Optional[int] = None) -> DelayModel:
    """Closed-form weights at ``L = P - 1``.

    The interpolation conditions ``sum_c K_c z_p^(c+1) = 1`` say that
    ``sum_c K_c z^(c+1) - 1`` vanishes at every node, so it equals
    ``K_L prod_p (z - z_p)``. Hence
    ``K_{c-1} = (-1)^(P-c) e_{P-c}(z) K_L`` with
    ``K_L = (-1)^(P+1) / prod_p z_p``. Every ``e_r`` is a sum of unit phases
    whose exponents are exact integers mod ``M``, so the only rounding is in
    the final summation. Patterns larger than 16 are refused.
    """
    M, idx = _check_exact(pattern, M)
    P = idx.size
    e = _elementary_symmetric(idx, M)
    prod = np.exp(-2j * np.pi * (int(idx.sum()) % M) / M)
    K_L = (-1.0) ** (P + 1) * prod
    c = np.arange(1, P + 1)
    K = (-1.0) ** (P - c) * e[P - c] * K_L
    return _realize(K, P - 1, "exact")


def exact_K_lagrange(pattern: SparsityPattern, M: Optional[int] = None) -> DelayModel:
    """Same weights from the explicit Vandermonde inverse, one Lagrange basis per node.

    Costs ``P 2^(P-1)`` and is less accurate than :func:`exact_K` because the
    node-difference products are formed in floating point; kept as an
    independent check.
    """
    M, idx = _check_exact(pattern, M)
    P = idx.size
    nodes = _nodes(pattern, M)
    b = np.exp(-2j * np.pi * idx / M)
    K = np.zeros(P, dtype=complex)
    sign = (-1.0) ** (P - 1 - np.arange(P))
    for n in range(P):
        e = _elementary_symmetric(np.delete(idx, n), M)
        denom = np.prod(nodes[n] - np.delete(nodes, n))
        # coefficient of z^c in prod_{l != n}(z - z_l) is (-1)^(P-1-c) e_{P-1-c}
        K += sign * e[P - 1 - np.arange(P)] * (b[n] / denom)
    return _realize(K, P - 1, "exact-lagrange")


def minimal_delay_scalar(pattern: SparsityPattern) -> int:
    """``P - 1``: the fewest delays that reproduce a scalar signal exactly."""
    if pattern.P == 0:
        raise ValidationError("empty sparsity pattern")
    return pattern.P - 1


def predict_rollout(model: DelayModel, seed_window, n_steps: int, dt: float = 1.0,
                    include_seed: bool = False) -> TimeSeries:
    """Autoregressive rollout feeding predictions back as inputs.

    Parameters
    ----------
    seed_window : array_like, shape (J, L+1)
        The ``L+1`` most recent states, newest last.
    n_steps : int
        Number of new states to produce.
    include_seed : bool
        Prepend the seed window to the returned samples.

    Notes
    -----
    Divergence is not an error; overflow yields Inf/NaN in the output.
    """
    seed = np.asarray(seed_window, dtype=float)
    if seed.ndim == 1:
        seed = seed[None, :]
    J, L = model.J, model.L
    if seed.shape != (J, L + 1):
        raise ValidationError(f"seed window must have shape {(J, L + 1)}, got {seed.shape}")
    if n_steps < 1:
        raise ValidationError("n_steps must be positive")
    buf = np.empty((J, L + 1 + n_steps))
    buf[:, :L + 1] = seed
    W = model.weights
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(L, L + n_steps):
            Y = buf[:, t - L:t + 1][:, ::-1].reshape(-1)
            buf[:, t + 1] = Y @ W
    out = buf if include_seed else buf[:, L + 1:]
    return TimeSeries(out, dt)


def nmse(pred, truth) -> float:
    """Mean over components of MSE divided by the variance of the true component.

    Returns ``inf`` when the prediction contains non-finite values.
    """
    p = pred.data if isinstance(pred, TimeSeries) else np.atleast_2d(np.asarray(pred, float))
    t = truth.data if isinstance(truth, TimeSeries) else np.atleast_2d(np.asarray(truth, float))
    if p.shape != t.shape:
        raise ValidationError(f"shape mismatch: {p.shape} vs {t.shape}")
    var = t.var(axis=1)
    if np.any(var == 0):
        raise ValidationError("truth has a zero-variance component")
    if not np.all(np.isfinite(p)):
        return float("inf")
    with np.errstate(over="ignore"):
        val = float(np.mean(np.mean((p - t) ** 2, axis=1) / var))
    return val if np.isfinite(val) else float("inf")


def fit_on_prefix(ts: TimeSeries, L: int, n_train: int,
                  svd_rel_cutoff: float = DEFAULT_SVD_CUTOFF) -> DelayModel:
    """Fit on the first ``n_train`` samples using every admissible row ``k = L..n_train-2``."""
    Q = n_train - 1 - L
    if Q < 1:
        raise ValidationError(f"n_train={n_train} leaves no rows for L={L}")
    sys = build_hankel(ts.window(0, n_train), L, Contiguous(L, Q))
    return solve_time_domain(sys, svd_rel_cutoff)


def model_to_json(model: DelayModel) -> dict:
    return {
        "J": model.J,
        "L": model.L,
        "weights": model.weights.tolist(),
        "imag_residue": model.imag_residue,
        "solver": model.solver,
        "svd_cutoff": model.svd_cutoff,
    }


def model_from_json(d: dict) -> DelayModel:
    try:
        return DelayModel(np.array(d["weights"], dtype=float), int(d["L"]), int(d["J"]),
                          float(d.get("imag_residue", 0.0)), d.get("solver", ""),
                          d.get("svd_cutoff"))
    except KeyError as exc:
        raise ValidationError(f"model JSON missing key {exc}") from None
