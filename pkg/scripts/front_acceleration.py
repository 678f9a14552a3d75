"""Front acceleration of the hyperbola flow against (1 + t**2)**(-3/2).

    python scripts/front_acceleration.py --out results/front_acceleration

Writes g_left, g_right and the exact value per snapshot for each grid,
plus the worst relative deviation on the requested window.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from vacuumfront.exact import MONOATOMIC_1D, hyperbola_acceleration, hyperbola_flow
from vacuumfront.lagrangian import SimulationConfig, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/front_acceleration")
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--cells", type=int, nargs="+", default=[200, 400, 800, 1600])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for n in args.cells:
        tr = simulate(SimulationConfig(MONOATOMIC_1D, hyperbola_flow(), n_cells=n, t_end=args.t_end,
                                       snapshot_stride=0.05))
        g_ex = hyperbola_acceleration(tr.times)
        gl, gr = tr.column("g_left"), tr.column("g_right")
        rows += [(n, t, a, b, e) for t, a, b, e in zip(tr.times, gl, gr, g_ex)]
        dev = np.max(np.abs(np.r_[gl, gr] / np.r_[g_ex, g_ex] - 1))
        print(f"n={n:5d}  max |g/g_exact - 1| = {dev:.4f}")

    with open(out / "front_acceleration.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_cells", "t", "g_left", "g_right", "g_exact"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
