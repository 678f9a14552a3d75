"""Grid refinement against the exact flows.

    python scripts/convergence_study.py --out results/convergence

Writes convergence.csv with the L1 density error, relative error, front
error and observed order for each (flow, n_cells) pair.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from vacuumfront.exact import MONOATOMIC_1D, affine_flow, hyperbola_flow, impulsive_flow
from vacuumfront.gas import GasLaw
from vacuumfront.lagrangian import SimulationConfig, l1_density_error, simulate


def flows():
    yield "hyperbola", MONOATOMIC_1D, hyperbola_flow(), hyperbola_flow()
    yield "impulsive", MONOATOMIC_1D, impulsive_flow(), impulsive_flow()
    for g in ("5/3", "2"):
        law = GasLaw.from_text(g, 1.0)
        f = affine_flow(law)
        yield f"affine-{g}", law, f, f


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--cells", type=int, nargs="+", default=[100, 200, 400, 800])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for name, law, init, oracle in flows():
        prev = None
        for n in args.cells:
            g = simulate(SimulationConfig(law, init, n_cells=n, t_end=args.t_end)).grids[-1]
            err = l1_density_error(g, oracle, args.t_end)
            a, b = oracle.front(args.t_end)
            front = max(abs(g.x[0] - a), abs(g.x[-1] - b))
            order = np.log2(prev / err) if prev else float("nan")
            rows.append((name, n, err, err / g.mass, front, order))
            print(f"{name:12s} n={n:5d}  L1={err:.3e}  L1/M={err / g.mass:.3e}  front={front:.3e}  order={order:.2f}")
            prev = err

    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flow", "n_cells", "l1_error", "l1_relative", "front_error", "order"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
