"""Reusable experiment routines shared by the CLI, the scripts and the tests.

Each routine returns plain rows (lists of dicts) and summaries so that callers
decide how to print or store them.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .conditioning import cond2, cond_effective
from .delay_solver import (Contiguous, build_hankel, build_spectral_system, fit_on_prefix,
                           minimal_delay_scalar, nmse, predict_rollout, solve_time_domain)
from .errors import ValidationError
from .modal import (GridSpec, companion, eigendecompose, hodmd, hodmd_reconstruct,
                    pseudospectrum)
from .signals import (NoiseSpec, TimeSeries, add_noise, demean, gen_five_mode,
                      gen_latent_surrogate, gen_quasi_periodic, gen_vdp)
from .spectral import (SparsityPattern, detect_sparsity, dft, filter_spectrum, min_subsample,
                       synthesize)
from .vector_analysis import minimal_delay_vector, oc_index, row_eliminate, stack_series

__all__ = [
    "rollout_score",
    "delay_sweep",
    "spectrum_summary",
    "VdpSettings",
    "vdp_period",
    "vdp_table",
    "cond_vs_M",
    "cond_vs_L",
    "subsampling_study",
    "ensemble_member",
    "noise_ensemble",
    "noisy_pseudospectra",
    "surrogate_hodmd",
    "FIVE_MODE_FIRST_HALF",
]

FIVE_MODE_FIRST_HALF = (1, 2, 4, 8, 12)


def rollout_score(ts: TimeSeries, L: int, train_samples: int, truth: Optional[TimeSeries] = None,
                  svd_cutoff: float = 1e-15):
    """Fit on a prefix, roll out from the first ``L+1`` samples, score the rest.

    Returns ``(model, prediction, nmse)``. The prediction covers samples
    ``L+1 .. N-1`` and is scored against ``truth`` (defaults to ``ts``).
    """
    truth = ts if truth is None else truth
    model = fit_on_prefix(ts, L, train_samples, svd_cutoff)
    pred = predict_rollout(model, ts.data[:, :L + 1], ts.N - L - 1, ts.dt)
    return model, pred, nmse(pred, truth.data[:, L + 1:])


def delay_sweep(ts: TimeSeries, L_values: Iterable[int], train_samples: int,
                svd_cutoff: float = 1e-15) -> List[dict]:
    rows = []
    for L in L_values:
        _, _, err = rollout_score(ts, int(L), train_samples, svd_cutoff=svd_cutoff)
        rows.append({"L": int(L), "nmse": err})
    return rows


def spectrum_summary(ts: TimeSeries, component: int = 0, threshold: float = 1e-10):
    """Pattern, minimal scalar delay and minimal subsampling of one component."""
    spec = dft(ts, component)
    pat = detect_sparsity(spec, threshold)
    out = {"M": spec.M, "P": pat.P, "first_half": list(pat.first_half()),
           "threshold": threshold,
           "minimal_L": minimal_delay_scalar(pat) if pat.P else None}
    try:
        out["M_star"] = min_subsample(pat)
    except ValidationError as exc:
        out["M_star"] = None
        out["M_star_note"] = str(exc)
    return spec, pat, out


@dataclass(frozen=True)
class VdpSettings:
    """Calibrated settings for the Van der Pol study."""

    mu: float = 2.0
    dt: float = 0.01
    discard: int = 530
    period: int = 776
    n_periods: int = 4
    threshold: float = 0.01
    rank_tol: float = 1e-10
    x1_M: int = 200
    x1_L: int = 9
    x2_M: int = 100
    x2_L: int = 17
    train_samples: int = 60
    vector_M: int = 80
    vector_L: Sequence[int] = (7, 8)


def vdp_period(s: VdpSettings = VdpSettings()) -> TimeSeries:
    """One demeaned period of the settled limit cycle."""
    X = gen_vdp(s.mu, (1.0, 0.0), s.dt, s.discard + s.n_periods * s.period)
    X.check_finite()
    return demean(X.window(s.discard, s.discard + s.period, s.period))


def _filtered_series(per: TimeSeries, pats, M_new: int, n_periods: int) -> TimeSeries:
    rows = [synthesize(filter_spectrum(dft(per, j), pats[j]), M_new, n_periods)
            for j in range(per.J)]
    return TimeSeries(np.vstack(rows), per.dt * per.period_samples / M_new, M_new)


def vdp_table(s: VdpSettings = VdpSettings()) -> dict:
    """Patterns, minimal sampling, scalar fits and the vector rank test.

    Scalar fits use the filtered component resampled at ``x{1,2}_M`` samples
    per period, trained on the first ``train_samples`` samples and scored over
    two periods against the filtered signal.
    """
    X = gen_vdp(s.mu, (1.0, 0.0), s.dt, s.discard + s.n_periods * s.period)
    tail = X.data[:, s.discard:]
    defect = np.abs(tail[:, :-s.period] - tail[:, s.period:]).max(axis=1)
    per = vdp_period(s)
    pats = [detect_sparsity(dft(per, j), s.threshold) for j in range(2)]
    out = {"periodicity_defect": defect.tolist(), "std": tail.std(axis=1).tolist(),
           "components": []}
    for j, (M, L) in enumerate([(s.x1_M, s.x1_L), (s.x2_M, s.x2_L)]):
        one = TimeSeries(_filtered_series(per, pats, M, 2).data[j], per.dt, M)
        _, _, err = rollout_score(one, L, s.train_samples)
        _, _, err_less = rollout_score(one, L - 1, s.train_samples)
        out["components"].append({
            "component": j + 1, "P": pats[j].P, "first_half": list(pats[j].first_half()),
            "i_max": max(pats[j].first_half()), "M_star": min_subsample(pats[j]),
            "M": M, "L": L, "minimal_L": minimal_delay_scalar(pats[j]),
            "train_samples": s.train_samples, "nmse": err, "nmse_L_minus_1": err_less,
        })
    V = _filtered_series(per, pats, s.vector_M, 3)
    st = stack_series(V.window(0, s.vector_M, s.vector_M), 1e-10)
    vec = {"M": s.vector_M, "P_union": st.P_union,
           "minimal_L": minimal_delay_vector(st, s.rank_tol),
           "oc_index": oc_index(row_eliminate(st), s.rank_tol), "nmse_by_L": {}}
    for L in s.vector_L:
        sys = build_hankel(V, L, Contiguous(L, s.vector_M))
        model = solve_time_domain(sys)
        pred = predict_rollout(model, V.data[:, :L + 1], V.N - L - 1)
        vec["nmse_by_L"][int(L)] = nmse(pred, V.data[:, L + 1:])
    out["vector"] = vec
    return out


def cond_vs_M(M_values: Sequence[int], L: Optional[int] = None,
              first_half: Sequence[int] = FIVE_MODE_FIRST_HALF) -> List[dict]:
    """``kappa_2`` of the spectral system for a fixed set of wavenumbers."""
    rows = []
    for M in M_values:
        pat = SparsityPattern.from_first_half(first_half, int(M))
        LL = pat.P - 1 if L is None else L
        A = build_spectral_system(pat, int(M), LL).matrix
        rows.append({"M": int(M), "L": LL, "kappa2": cond2(A)})
    return rows


def cond_vs_L(M: int, L_values: Sequence[int], cutoff: float = 1e-15) -> List[dict]:
    """Effective condition number and residual of the periodic Hankel fit of the five-wave signal."""
    ts = gen_five_mode(M, 1)
    rows = []
    for L in L_values:
        sys = build_hankel(ts, int(L), "all-periodic")
        model = solve_time_domain(sys, cutoff)
        resid = float(np.mean((sys.regressor @ model.weights - sys.target) ** 2))
        rows.append({"M": M, "L": int(L), "kappa_eff": cond_effective(sys.regressor, cutoff),
                     "residual": resid})
    return rows


def subsampling_study(M_values: Sequence[int], L: int = 9, n_periods: int = 2) -> List[dict]:
    """Conditioning and prediction error of a minimal-row fit versus samples per period.

    Each fit uses ``Q = P`` rows starting at ``k = L`` and is rolled out over
    ``n_periods`` periods.
    """
    rows = []
    for M in M_values:
        ts = gen_five_mode(int(M), n_periods)
        pat = detect_sparsity(dft(ts), 1e-10)
        A = build_spectral_system(pat, int(M), L).matrix
        sys = build_hankel(ts, L, Contiguous(L, pat.P))
        model = solve_time_domain(sys)
        pred = predict_rollout(model, ts.data[:, :L + 1], ts.N - L - 1)
        rows.append({"M": int(M), "L": L, "kappa2": cond2(A),
                     "kappa2_hankel": cond2(sys.regressor),
                     "nmse": nmse(pred, ts.data[:, L + 1:])})
    return rows


def ensemble_member(args) -> dict:
    """One noisy fit: ``args = (L, seed, snr, M, n_periods)``."""
    L, seed, snr, M, n_periods = args
    clean = gen_five_mode(M, n_periods)
    noisy = add_noise(clean, NoiseSpec(snr, seed))
    model, pred, err = rollout_score(noisy, L, M, truth=clean)
    lam = eigendecompose(companion(model)).eigenvalues
    return {"L": L, "seed": seed, "nmse": err, "eigenvalues": lam, "prediction": pred.data[0]}


def noise_ensemble(L_values: Sequence[int], n_members: int = 500, snr: float = 0.01,
                   seed: int = 0, M: int = 100, n_periods: int = 3, workers: int = 1,
                   stable_nmse: float = 0.5) -> dict:
    """Fit every member on one noisy period and roll out over ``n_periods`` periods.

    Member ``i`` uses noise seed ``seed + i``. Results are assembled in
    ``(L, member)`` order whatever the completion order.
    """
    jobs = [(int(L), seed + i, snr, M, n_periods) for L in L_values for i in range(n_members)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(ensemble_member, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [ensemble_member(j) for j in jobs]
    clean = gen_five_mode(M, n_periods).data[0]
    eig_rows, summary, bands = [], [], []
    for L in L_values:
        mine = [r for r in results if r["L"] == L]
        errs = np.array([r["nmse"] for r in mine])
        for i, r in enumerate(mine):
            for lam in r["eigenvalues"]:
                eig_rows.append({"L": L, "member": i, "re": float(lam.real), "im": float(lam.imag)})
        finite = errs[np.isfinite(errs)]
        summary.append({
            "L": L, "members": len(mine),
            "stable_fraction": float(np.mean(errs < stable_nmse)),
            "nmse_median": float(np.median(errs)),
            "nmse_min": float(finite.min()) if finite.size else float("inf"),
        })
        P = np.vstack([r["prediction"] for r in mine])
        with np.errstate(invalid="ignore", over="ignore"):
            lo, med, hi = np.nanpercentile(np.where(np.isfinite(P), P, np.nan), [5, 50, 95], axis=0)
        for k in range(P.shape[1]):
            bands.append({"L": L, "k": k + L + 1, "truth": float(clean[k + L + 1]),
                          "q05": float(lo[k]), "median": float(med[k]), "q95": float(hi[k])})
    return {"eigenvalues": eig_rows, "summary": summary, "bands": bands}


def noisy_pseudospectra(L_values: Sequence[int], snr: float = 0.01, seed: int = 0, M: int = 100,
                        grid: GridSpec = GridSpec(n_re=121, n_im=121),
                        eps_levels: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
                        n_circle: int = 720) -> dict:
    """Pseudospectra of models fitted to one noisy period for several ``L``.

    Reports the area fraction of each level set and the smallest
    ``sigma_min`` on the unit circle.
    """
    clean = gen_five_mode(M, 1)
    noisy = add_noise(clean, NoiseSpec(snr, seed))
    rows, grids = [], {}
    theta = np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    for L in L_values:
        model = fit_on_prefix(noisy, int(L), M)
        cm = companion(model)
        g = pseudospectrum(cm, grid)
        n = cm.n
        circ = np.linalg.svd(theta[:, None, None] * np.eye(n)[None] - cm.matrix[None],
                             compute_uv=False)[:, -1]
        grids[int(L)] = g
        for eps in eps_levels:
            rows.append({"L": int(L), "eps": eps, "area_fraction": g.area_fraction(eps),
                         "min_sigma_unit_circle": float(circ.min())})
    return {"rows": rows, "grids": grids}


def surrogate_hodmd(pairs: Sequence[Sequence[int]], J: int = 200, M: int = 400,
                    horizon: int = 2400, seed: int = 0, r_prime_cutoff: float = 1e-10) -> List[dict]:
    """Delay-embedded DMD on the latent surrogate for each ``(r, L)``.

    Training uses the first ``M`` snapshots; the modal rollout is scored over
    ``horizon`` snapshots.
    """
    full = gen_latent_surrogate(J=J, M=max(M, horizon), seed=seed)
    X = full.series.data
    train = TimeSeries(X[:, :M], 1.0, M)
    rows = []
    for r, L in pairs:
        md = hodmd(train, int(r), int(L), r_prime_cutoff)
        err = max(np.abs(md.eigenvalues - t).min() for t in full.eigenvalues)
        rec = hodmd_reconstruct(md, horizon - L)
        rows.append({
            "r": int(r), "L": int(L), "r_prime": md.r_prime,
            "cap": md.diagnostics["r_prime_cap"],
            "binding": md.diagnostics["binding_constraint"],
            "spectral_radius": md.spectral_radius,
            "latent_eig_error": float(err),
            "nmse_train": nmse(rec[:, :M - L], X[:, L:M]),
            "nmse_horizon": nmse(rec, X[:, L:horizon]),
        })
    return rows


def quasi_series(dt: float = 0.1, n_steps: int = 401) -> TimeSeries:
    return gen_quasi_periodic(dt, n_steps)
