"""Random sweep of condition numbers against their bounds, written as CSV.

Rows carry kappa2, both upper bounds, the lower bound (blank when it does not
apply) and a ``violation`` flag.
"""
import argparse
import csv

import numpy as np

from delay_embed.conditioning import condition_report
from delay_embed.spectral import SparsityPattern


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=500, help="number of sweep points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bound_sweep.csv")
    return p.parse_args()


def sample(rng):
    M = int(rng.integers(50, 801))
    n_half = int(rng.integers(1, 7))
    half = rng.choice(np.arange(1, M // 2), size=n_half, replace=False)
    pat = SparsityPattern.from_first_half(half, M)
    return pat, M, int(rng.integers(pat.P - 1, 4 * M + 1))


def run():
    args = parse_args()
    rng = np.random.default_rng(args.seed)
    cols = ["M", "L", "P", "kappa2", "prop3", "bazan", "kunis", "violation"]
    bad = 0
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for _ in range(args.n):
            pat, M, L = sample(rng)
            rep = condition_report(pat, M, L)
            b = rep.bounds
            slack = 1 + 1e-10
            upper = min(v for v in (b["prop3_upper"], b["bazan_upper"]) if v is not None)
            viol = rep.kappa2 > upper * slack or (
                b["kunis_lower"] is not None and b["kunis_lower"] > rep.kappa2 * slack)
            bad += viol
            w.writerow({"M": M, "L": L, "P": pat.P, "kappa2": f"{rep.kappa2:.17g}",
                        "prop3": f"{b['prop3_upper']:.17g}",
                        "bazan": "" if b["bazan_upper"] is None else f"{b['bazan_upper']:.17g}",
                        "kunis": "" if b["kunis_lower"] is None else f"{b['kunis_lower']:.17g}",
                        "violation": int(viol)})
    print(f"{args.n} points, {bad} violations -> {args.out}")


if __name__ == "__main__":
    run()
