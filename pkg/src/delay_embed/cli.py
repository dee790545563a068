"""``delay-embed`` command-line front end.

Every run writes its outputs plus ``manifest.json`` into ``--out``. Exit
codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import experiments as ex
from .conditioning import condition_report, write_sweep_csv
from .config import ExperimentConfig, config_hash, from_dict, load_config, preset
from .delay_solver import (build_spectral_system, exact_K, fit_on_prefix, model_from_json,
                           model_to_json, nmse, predict_rollout, solve_spectral)
from .errors import NumericalError, ValidationError
from .modal import (GridSpec, companion, eigendecompose, hodmd, hodmd_reconstruct, modal_report,
                    optimal_delay, pseudospectrum)
from .signals import (TimeSeries, demean, gen_five_mode, gen_latent_surrogate,
                      gen_quasi_periodic, gen_vdp, read_csv, write_csv)
from .spectral import SparsityPattern, detect_sparsity, dft, spectrum_report
from .vector_analysis import stack_series, vector_report

COMMANDS = ("gen", "spectrum", "fit", "predict", "mindelay", "cond", "pseudospec", "ensemble", "hodmd")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def write_rows(path: Path, rows: Sequence[dict], columns: Optional[List[str]] = None) -> Path:
    columns = columns or (list(rows[0].keys()) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])
    return path


def write_json(path: Path, obj) -> Path:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(type(o))
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")
    return path


def _vdp_settings(cfg: ExperimentConfig) -> ex.VdpSettings:
    d = dict(cfg.vdp)
    if "vector_L" in d:
        d["vector_L"] = tuple(d["vector_L"])
    d.setdefault("threshold", cfg.threshold)
    d.setdefault("rank_tol", cfg.rank_tol)
    try:
        return ex.VdpSettings(**d)
    except TypeError as exc:
        raise ValidationError(f"bad vdp settings: {exc}") from None


def load_signal(cfg: ExperimentConfig) -> TimeSeries:
    """Generate or read the configured signal, then apply start/period/demean."""
    if cfg.signal == "csv":
        if not cfg.input:
            raise ValidationError("signal 'csv' needs an input path")
        ts = read_csv(cfg.input)
    elif cfg.signal == "five-mode":
        ts = gen_five_mode(cfg.M, cfg.n_periods)
    elif cfg.signal == "quasi":
        ts = gen_quasi_periodic(cfg.dt, cfg.n_steps)
    elif cfg.signal == "vdp":
        s = _vdp_settings(cfg)
        ts = gen_vdp(s.mu, (1.0, 0.0), s.dt, s.discard + s.n_periods * s.period)
    elif cfg.signal == "surrogate":
        ts = gen_latent_surrogate(J=cfg.J, M=cfg.M, seed=cfg.seed).series
    else:
        raise ValidationError(f"unknown signal {cfg.signal!r}")
    if cfg.start or cfg.period:
        ts = ts.window(cfg.start, ts.N, cfg.period or ts.period_samples)
    if cfg.demean:
        ts = demean(ts)
    return ts


# ---------------------------------------------------------------- commands

def cmd_gen(cfg, out: Path) -> dict:
    ts = load_signal(cfg)
    write_csv(ts, out / "signal.csv")
    print(f"wrote {ts.J} x {ts.N} samples, dt={ts.dt:g}, period={ts.period_samples}")
    return {"J": ts.J, "N": ts.N}


def cmd_spectrum(cfg, out: Path) -> dict:
    if cfg.signal == "vdp":
        ts = ex.vdp_period(_vdp_settings(cfg))
    else:
        ts = load_signal(cfg)
    if ts.period_samples is None:
        ts = ts.with_period(ts.N)
    comps = range(ts.J) if cfg.component is None else [cfg.component]
    report = {"components": []}
    for j in comps:
        spec, pat, summ = ex.spectrum_summary(ts, j, cfg.threshold)
        rep = spectrum_report(spec, pat)
        rep.update(component=j, summary=summ)
        report["components"].append(rep)
        print(f"component {j}: P={summ['P']} first-half={summ['first_half']} "
              f"minimal L={summ['minimal_L']} M*={summ['M_star']}")
    write_json(out / "spectrum.json", report)
    return {"P": [c["P"] for c in report["components"]]}


def _fit_model(cfg, ts: TimeSeries, L: int):
    n_train = cfg.train_samples or ts.period_samples or ts.N
    if cfg.solver == "time":
        return fit_on_prefix(ts, L, n_train, cfg.svd_cutoff)
    per = ts if ts.period_samples else ts.with_period(ts.N)
    if ts.J != 1:
        raise ValidationError("spectral solvers handle scalar signals only")
    pat = detect_sparsity(dft(per), cfg.threshold)
    if cfg.solver == "exact":
        if L != pat.P - 1:
            raise ValidationError(f"exact solver needs L = P-1 = {pat.P - 1}")
        return exact_K(pat)
    return solve_spectral(build_spectral_system(pat, pat.M, L), cfg.solver, cfg.svd_cutoff)


def _model_json(model) -> dict:
    d = model_to_json(model)
    if model.J == 1:
        d["K_newest_first"] = model.K.tolist()
        d["K_oldest_first"] = model.reversed_order().tolist()
    return d


def cmd_fit(cfg, out: Path) -> dict:
    ts = load_signal(cfg)
    ts.check_finite()
    rows = []
    for L in cfg.L_sweep:
        model = _fit_model(cfg, ts, L)
        pred = predict_rollout(model, ts.data[:, :L + 1], ts.N - L - 1, ts.dt)
        rows.append({"L": L, "nmse": nmse(pred, ts.data[:, L + 1:])})
    if rows:
        write_rows(out / "nmse.csv", rows, ["L", "nmse"])
        for r in rows:
            print(f"L={r['L']:3d} nmse={r['nmse']:.3e}")
    L = cfg.L
    model = _fit_model(cfg, ts, L)
    pred = predict_rollout(model, ts.data[:, :L + 1], ts.N - L - 1, ts.dt, include_seed=True)
    err = nmse(pred.data[:, L + 1:], ts.data[:, L + 1:])
    write_json(out / "model.json", _model_json(model))
    write_csv(pred, out / "prediction.csv")
    print(f"model L={L}: nmse={err:.3e}")
    return {"nmse": err}


def cmd_predict(cfg, out: Path) -> dict:
    if not cfg.model:
        raise ValidationError("predict needs a model path")
    try:
        model = model_from_json(json.loads(Path(cfg.model).read_text()))
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read model: {exc}") from None
    ts = load_signal(cfg)
    if ts.J != model.J or ts.N < model.L + 1:
        raise ValidationError("signal does not match the model (components or length)")
    seed = ts.data[:, ts.N - model.L - 1:]
    pred = predict_rollout(model, seed, cfg.steps, ts.dt)
    write_csv(pred, out / "prediction.csv")
    print(f"predicted {cfg.steps} steps; finite={pred.is_finite()}")
    return {"finite": pred.is_finite()}


def cmd_mindelay(cfg, out: Path) -> dict:
    if cfg.signal == "vdp":
        rep = ex.vdp_table(_vdp_settings(cfg))
        for c in rep["components"]:
            print(f"x{c['component']}: P={c['P']} i_max={c['i_max']} M*={c['M_star']} "
                  f"L={c['minimal_L']} nmse(M={c['M']}, L={c['L']})={c['nmse']:.3e}")
        v = rep["vector"]
        print(f"vector: P_union={v['P_union']} minimal L={v['minimal_L']} oc_index={v['oc_index']}")
        write_json(out / "mindelay.json", rep)
        return {"vector_L": v["minimal_L"]}
    ts = load_signal(cfg)
    if ts.period_samples is None:
        ts = ts.with_period(ts.N)
    rep = {"scalar": []}
    for j in range(ts.J):
        _, pat, summ = ex.spectrum_summary(ts, j, cfg.threshold)
        rep["scalar"].append(summ)
        print(f"component {j}: P={summ['P']} minimal L={summ['minimal_L']}")
    if ts.J > 1:
        st = stack_series(ts, cfg.threshold)
        rep["vector"] = vector_report(st, cfg.rank_tol)
        print(f"vector: minimal L={rep['vector']['minimal_L']} oc_index={rep['vector']['oc_index']}")
    write_json(out / "mindelay.json", rep)
    return {}


def cmd_cond(cfg, out: Path) -> dict:
    if cfg.sweep == "M":
        if not cfg.M_sweep:
            raise ValidationError("empty M sweep")
        rows = ex.cond_vs_M(cfg.M_sweep, None, cfg.first_half)
    elif cfg.sweep == "L":
        if not cfg.L_sweep:
            raise ValidationError("empty L sweep")
        rows = ex.cond_vs_L(cfg.M, cfg.L_sweep, cfg.svd_cutoff)
    elif cfg.sweep == "subsample":
        if not cfg.M_sweep:
            raise ValidationError("empty M sweep")
        rows = ex.subsampling_study(cfg.M_sweep, cfg.L)
    else:
        if not cfg.L_sweep:
            raise ValidationError("empty L sweep")
        pat = SparsityPattern.from_first_half(cfg.first_half, cfg.M)
        reps = [condition_report(pat, cfg.M, L, cfg.svd_cutoff) for L in cfg.L_sweep]
        write_sweep_csv(reps, out / "cond.csv")
        for r in reps:
            print(f"L={r.L} kappa2={r.kappa2:.3e} prop3={r.bounds['prop3_upper']}")
        return {"rows": len(reps)}
    write_rows(out / "cond.csv", rows)
    for r in rows:
        print(", ".join(f"{k}={_fmt(v)}" for k, v in r.items()))
    return {"rows": len(rows)}


def _grid(cfg) -> GridSpec:
    g = cfg.grid
    n = g.get("n", 301)
    return GridSpec(tuple(g.get("re", (-1.5, 1.5))), tuple(g.get("im", (-1.5, 1.5))), n, n)


def cmd_pseudospec(cfg, out: Path) -> dict:
    if cfg.model:
        try:
            model = model_from_json(json.loads(Path(cfg.model).read_text()))
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read model: {exc}") from None
        g = pseudospectrum(companion(model), _grid(cfg))
        g.write_csv(out / "pseudospec.csv")
        rows = [{"eps": e, "area_fraction": g.area_fraction(e)} for e in cfg.eps_levels]
        write_rows(out / "summary.csv", rows)
        return {"rows": len(rows)}
    Ls = cfg.L_sweep or [cfg.L]
    res = ex.noisy_pseudospectra(Ls, cfg.snr_fraction, cfg.seed, cfg.M, _grid(cfg), cfg.eps_levels)
    write_rows(out / "summary.csv", res["rows"])
    for L, g in res["grids"].items():
        g.write_csv(out / f"pseudospec_L{L}.csv")
    for r in res["rows"]:
        if r["eps"] == cfg.eps_levels[0]:
            print(f"L={r['L']} eps={r['eps']:g} area={r['area_fraction']:.4f} "
                  f"min sigma on |z|=1: {r['min_sigma_unit_circle']:.3e}")
    return {"rows": len(res["rows"])}


def cmd_ensemble(cfg, out: Path) -> dict:
    Ls = cfg.L_sweep or [cfg.L]
    res = ex.noise_ensemble(Ls, cfg.ensemble_size, cfg.snr_fraction, cfg.seed, cfg.M,
                            cfg.n_periods, cfg.workers, cfg.stable_nmse)
    write_rows(out / "eigenvalues.csv", res["eigenvalues"], ["L", "member", "re", "im"])
    write_rows(out / "bands.csv", res["bands"])
    write_rows(out / "summary.csv", res["summary"])
    for r in res["summary"]:
        print(f"L={r['L']} stable fraction={r['stable_fraction']:.3f} median nmse={r['nmse_median']:.3e}")
    return {"summary": res["summary"]}


def cmd_hodmd(cfg, out: Path) -> dict:
    pairs = cfg.rL_sweep or [[min(cfg.J, cfg.M), L] for L in (cfg.L_sweep or [cfg.L])]
    if cfg.signal == "surrogate":
        rows = ex.surrogate_hodmd(pairs, cfg.J, cfg.M, cfg.horizon, cfg.seed, cfg.r_prime_cutoff)
    else:
        ts = load_signal(cfg)
        rows = []
        for r, L in pairs:
            md = hodmd(ts, r, L, cfg.r_prime_cutoff)
            rec = hodmd_reconstruct(md, ts.N - L)
            rows.append({"r": r, "L": L, "r_prime": md.r_prime, "cap": md.diagnostics["r_prime_cap"],
                         "binding": md.diagnostics["binding_constraint"],
                         "spectral_radius": md.spectral_radius,
                         "nmse_train": nmse(rec, ts.data[:, L:])})
            write_json(out / f"modal_r{r}_L{L}.json", modal_report(md))
    write_rows(out / "hodmd.csv", rows)
    M = cfg.M if cfg.signal == "surrogate" else load_signal(cfg).N
    for r in rows:
        L_opt, rp_star = optimal_delay(M, r["r"])
        print(f"r={r['r']} L={r['L']} r'={r['r_prime']} (cap {r['cap']}, {r['binding']}) "
              f"rho={r['spectral_radius']:.9f} L_opt={L_opt} (L_opt-1={L_opt - 1}, r'*={rp_star:.1f})")
    return {"rows": len(rows)}


HANDLERS = {
    "gen": cmd_gen, "spectrum": cmd_spectrum, "fit": cmd_fit, "predict": cmd_predict,
    "mindelay": cmd_mindelay, "cond": cmd_cond, "pseudospec": cmd_pseudospec,
    "ensemble": cmd_ensemble, "hodmd": cmd_hodmd,
}


def _add_globals(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON config file (see config.schema.json)")
    p.add_argument("--out", default=d if suppress else "out", help="output directory")
    p.add_argument("--seed", type=int, default=d, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delay-embed", description=__doc__.splitlines()[0])
    _add_globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).strip().splitlines()[0])
        _add_globals(sp, suppress=True)
        sp.add_argument("--preset", help="builtin experiment preset")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; VALUE is parsed as JSON when possible")
        sp.add_argument("--input", help="CSV input (implies signal=csv)")
        sp.add_argument("--model", help="model JSON (predict, pseudospec)")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = preset(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    d = cfg.to_dict()
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            d[k] = json.loads(v)
        except json.JSONDecodeError:
            d[k] = v
    if args.input:
        d["signal"], d["input"] = "csv", args.input
    if args.model:
        d["model"] = args.model
    if args.seed is not None:
        d["seed"] = args.seed
    return from_dict(d)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = HANDLERS[args.command](cfg, out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_json(out / "manifest.json", {
        "command": args.command, "config": cfg.to_dict(), "config_sha256": config_hash(cfg),
        "version": _version(), "wall_clock_s": round(time.perf_counter() - t0, 6),
        "result": result,
    })
    return 0


if __name__ == "__main__":
    sys.exit(main())
