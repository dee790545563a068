"""Run builtin presets through the CLI, one output directory each.

    python scripts/run_presets.py                 # every preset
    python scripts/run_presets.py fig-result-1 tab-vdp --out runs
"""
import argparse
import sys
import time
from pathlib import Path

from delay_embed.cli import main
from delay_embed.config import PRESETS

COMMAND = {
    "fig-result-1": "fit",
    "fig-result-3": "cond",
    "fig-result-4": "cond",
    "fig-result-5": "cond",
    "fig-bounds": "cond",
    "five-mode-spectrum": "spectrum",
    "quasi-window": "spectrum",
    "fig-true-quasi": "fit",
    "tab-vdp": "mindelay",
    "fig-noise-ensemble": "ensemble",
    "fig-noise-spectra": "pseudospec",
    "fig-wave-surrogate": "hodmd",
}


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("presets", nargs="*", metavar="PRESET", help="default: all")
    p.add_argument("--out", default="runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    unknown = set(args.presets) - set(PRESETS)
    if unknown:
        p.error(f"unknown presets {sorted(unknown)}; choose from {sorted(PRESETS)}")
    args.presets = args.presets or sorted(COMMAND)
    return args


def run():
    args = parse_args()
    failed = []
    for name in args.presets:
        out = Path(args.out) / name
        argv = [COMMAND[name], "--preset", name, "--out", str(out), "--seed", str(args.seed)]
        if COMMAND[name] == "ensemble":
            argv += ["--set", f"workers={args.workers}"]
        print(f"== {name} ({COMMAND[name]}) -> {out}")
        t0 = time.perf_counter()
        code = main(argv)
        print(f"   exit {code} in {time.perf_counter() - t0:.1f}s")
        if code:
            failed.append(name)
    if failed:
        print("failed:", ", ".join(failed))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(run())
