"""Batch front-end: ``vacuumfront <subcommand> --config FILE --out DIR``.

Exit codes: 0 success, 2 a requested check failed, 1 configuration or
runtime error. Outputs are byte-identical for a fixed config and seed;
wall time is written only with ``--record-time``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import characteristics as ch
from . import multid as md
from .config import MODES, ConfigError, ScenarioConfig, load_config
from .exact import MONOATOMIC_1D, affine_flow, hyperbola_flow, impulsive_flow
from .gas import GasLaw
from .lagrangian import DIAGNOSTIC_COLUMNS, SimulationConfig, l1_density_error, simulate

log = logging.getLogger("vacuumfront")

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2

PRESET_TABLE = (
    ("hyperbola", "exact", "accelerated eternal flow with front x^2 = 1 + t^2 (gamma = 3, A = 1/3)"),
    ("impulsive", "exact", "unit block on (-1, 1) released into vacuum at t = 0 (gamma = 3, A = 1/3)"),
    ("uniform-block", "data", "rho = 1, u = 0 on (-1, 1) under the configured law"),
    ("affine", "exact", "affine expansion u = x a'/a for any gamma"),
    ("custom-table", "data", "tabulated x, rho, u columns read from table_file"),
)
FRONT_TOL = {"hyperbola": 5e-3, "affine": 5e-3, "impulsive": 0.05, "uniform-block": 0.05}
MASS_RTOL = 1e-12
ENERGY_RATE_TOL = 1e-3
CONVEXITY_TOL = 1e-6


class RunError(RuntimeError):
    pass


def list_presets() -> str:
    width = max(len(n) for n, _, _ in PRESET_TABLE)
    lines = [f"{'preset':<{width}}  kind   description"]
    lines += [f"{n:<{width}}  {k:<5}  {d}" for n, k, d in PRESET_TABLE]
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{float(v) + 0.0:.17g}"  # + 0.0 folds -0.0 into 0


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int)) else _fmt(v) for v in row])


def _finite(obj):
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n")


def _law(cfg: ScenarioConfig) -> GasLaw:
    return GasLaw.from_text(cfg.gamma, cfg.A)


def _oracle(cfg: ScenarioConfig, law: GasLaw):
    """Exact field for the preset, or None when it has no closed form under this law."""
    mono = law == MONOATOMIC_1D
    if cfg.preset == "hyperbola":
        return hyperbola_flow() if mono else None
    if cfg.preset in ("impulsive", "uniform-block"):
        return impulsive_flow() if mono else None
    if cfg.preset == "affine":
        return affine_flow(law, t_max=max(20.0, 2 * abs(cfg.t_end), 2 * cfg.horizon))
    return None


def _initial(cfg: ScenarioConfig, law: GasLaw):
    if cfg.preset == "hyperbola":
        return hyperbola_flow()
    if cfg.preset == "impulsive":
        return impulsive_flow()
    if cfg.preset == "uniform-block":
        return (np.array([-1.0, 1.0]), np.array([1.0, 1.0]), np.array([0.0, 0.0]))
    if cfg.preset == "affine":
        return affine_flow(law)
    path = Path(cfg.base_dir) / cfg.table_file
    try:
        tab = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise RunError(f"cannot read table_file {path}: {exc}") from exc
    if tab.shape[1] != 3:
        raise RunError(f"table_file {path} must have three columns x, rho, u")
    return tab[:, 0], tab[:, 1], tab[:, 2]


def _check(value, tol, passed=None):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"passed": ok, "value": float(value), "tolerance": float(tol)}


def _run_simulation(cfg: ScenarioConfig, law: GasLaw, out: Path):
    sim = SimulationConfig(law, _initial(cfg, law), n_cells=cfg.n_cells, t_end=cfg.t_end,
                           snapshot_stride=cfg.snapshot_stride, cfl=cfg.cfl)
    traj = simulate(sim)
    _write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS, (d.as_row() for d in traj.diagnostics))

    def snap_rows():
        for t, g in zip(traj.times, traj.grids):
            rho = np.append(g.rho, 0.0)  # the last node has no cell to its right
            for j in range(g.x.size):
                yield (t, j, g.x[j], g.u[j], rho[j])
    _write_csv(out / "snapshots.csv", ("t", "j", "x_j", "u_j", "rho_cell"), snap_rows())

    t = traj.times
    M = traj.grids[0].mass
    mass_dev = max(abs(d.mass - M) for d in traj.diagnostics) / M
    E = traj.column("energy")
    if cfg.t_end < 0:  # energy must not grow in the integration direction
        E, t = E[::-1], t[::-1]
    rate = float(np.max(np.diff(E) / np.abs(np.diff(t)))) / E[0] if t.size > 1 else 0.0
    checks = {
        "mass_conservation": _check(mass_dev, MASS_RTOL),
        "energy_admissibility": _check(max(rate, 0.0), ENERGY_RATE_TOL),
    }
    t = traj.times
    if t.size > 2:
        qb = np.diff(traj.column("b")) / np.diff(t)
        qa = np.diff(traj.column("a")) / np.diff(t)
        drop = max(float(np.max(-np.diff(qb))), float(np.max(np.diff(qa))), 0.0)
        checks["front_convexity"] = _check(drop, CONVEXITY_TOL)
    numbers = {"mass": M, "energy_initial": E[0], "energy_final": E[-1], "n_steps": traj.n_steps,
               "a_final": float(traj.grids[-1].x[0]), "b_final": float(traj.grids[-1].x[-1])}
    return traj, checks, numbers


def run_simulate(cfg, law, out):
    _, checks, numbers = _run_simulation(cfg, law, out)
    return checks, numbers


def run_verify_exact(cfg, law, out):
    oracle = _oracle(cfg, law)
    if oracle is None:
        raise ConfigError([f"preset {cfg.preset} has no exact solution for gamma={cfg.gamma}, A={cfg.A:g}"])
    traj, checks, numbers = _run_simulation(cfg, law, out)
    t_end = float(traj.times[-1])
    grid = traj.grids[-1]
    M = grid.mass
    l1 = l1_density_error(grid, oracle, t_end)
    a_ex, b_ex = oracle.front(t_end)
    front_err = max(abs(grid.x[0] - a_ex), abs(grid.x[-1] - b_ex))
    front_tol = cfg.front_tol if cfg.front_tol is not None else FRONT_TOL[cfg.preset]
    checks["l1_density"] = _check(l1 / M, cfg.l1_tol)
    checks["front_position"] = _check(front_err, front_tol)
    checks.pop("front_convexity", None)
    numbers.update({"l1_error": l1, "l1_relative": l1 / M, "front_error": front_err,
                    "b_exact": b_ex, "t_end": t_end})
    return checks, numbers


def run_characteristics(cfg, law, out):
    field = _oracle(cfg, law)
    if field is None:
        raise ConfigError([f"preset {cfg.preset} has no exact solution for gamma={cfg.gamma}, A={cfg.A:g}"])
    H = cfg.horizon
    a, b = field.front(0.0)
    paths = []
    for k in range(cfg.n_paths):
        x0 = a + (k + 0.5) / cfg.n_paths * (b - a)
        for fam in ch.FAMILIES:
            paths.append(ch.trace(field, fam, (x0, 0.0), (-H, H), cfg.step))
    with open(out / "paths.csv", "w", newline="") as fh:
        ch.write_paths_csv(paths, law, fh)
    drift = max(ch.riemann_drift(p, law) for p in paths)
    slopes = ch.front_slopes(field, cfg.slope_horizon)
    size = ch.theorem_size_check(slopes, cfg.size_tol)
    audit = ch.admissibility_audit(field, (-H, H), sampling=4, step=max(cfg.step, 1e-2))
    checks = {
        "riemann_drift": _check(drift, cfg.drift_tol),
        "front_slopes": _check(max(size.gap_plus, size.gap_minus), cfg.size_tol, size.passed),
        "admissibility": {"passed": audit.passed, "items": audit.checked,
                          "not_checked": list(audit.not_checked),
                          "violations": [f"{k}: {m}" for k, m in audit.violations]},
    }
    numbers = {"n_paths": len(paths), "p_plus": slopes.p_plus, "p_minus": slopes.p_minus,
               "q_plus": slopes.q_plus, "q_minus": slopes.q_minus,
               "endpoints": [[p.family, p.start_kind, p.end_kind] for p in paths]}
    return checks, numbers


def build_initial_data(cfg: ScenarioConfig, law: GasLaw) -> md.InitialData:
    d, r = cfg.dimension, cfg.radius
    dom = md.ball(d, r) if cfg.domain == "ball" else md.box([-r] * d, [r] * d)
    if cfg.field == "zero":
        u0, grad = md.linear_field(np.zeros((d, d)))
    elif cfg.field == "identity":
        u0, grad = md.linear_field(np.eye(d))
    elif cfg.field == "rotation":
        u0, grad = md.rotation_field()
    else:
        u0, grad = md.linear_field(np.reshape(cfg.matrix, (d, d)))
    if cfg.density == "bump":
        rho0 = md.bump_density(cfg.amplitude, r)
    else:
        amp = cfg.amplitude
        rho0 = lambda p: amp * dom.contains(p).astype(float)
    return md.InitialData(d, law, dom, u0, rho0, grad)


def run_classify(cfg, law, out, jobs=1):
    data = build_initial_data(cfg, law)
    rep = md.classify(data, cfg.n_samples, cfg.seed, jobs)
    (out / "report.json").write_text(rep.to_json())
    checks = {}
    if cfg.expect is not None:
        checks["expected_verdict"] = {"passed": rep.verdict == cfg.expect,
                                      "value": rep.verdict, "expected": cfg.expect}
    numbers = {"verdict": rep.verdict, "triggering_rule": rep.triggering_rule,
               "J": rep.J.value, "J_error": rep.J.error, "seed": cfg.seed}
    return checks, numbers


RUNNERS = {"simulate": run_simulate, "verify-exact": run_verify_exact,
           "characteristics": run_characteristics, "classify": run_classify}


def run(cfg: ScenarioConfig, out: Path, jobs: int = 1, record_time: bool = False) -> int:
    """Execute one scenario, write its artifacts and return the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    law = _law(cfg)
    start = time.perf_counter()
    if cfg.mode == "classify":
        checks, numbers = run_classify(cfg, law, out, jobs)
    else:
        checks, numbers = RUNNERS[cfg.mode](cfg, law, out)
    passed = all(c["passed"] for c in checks.values())
    summary = {"scenario": cfg.name, "mode": cfg.mode, "preset": cfg.preset,
               "law": {"gamma": cfg.gamma, "A": cfg.A}, "checks": checks,
               "results": numbers, "passed": passed}
    if record_time:
        summary["wall_time_s"] = time.perf_counter() - start
    _write_json(out / "summary.json", summary)
    log.info("%s: %s", cfg.name, "pass" if passed else "check failed")
    return EXIT_OK if passed else EXIT_CHECK


def _run_one(path: str, mode: str, out: str, seed, jobs: int, record_time: bool) -> int:
    try:
        cfg = load_config(path, mode)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        target = Path(out) if out else Path(cfg.out_dir or f"out/{cfg.name}")
        return run(cfg, target, jobs, record_time)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"{path}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"{path}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _combine(codes):
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_CHECK if EXIT_CHECK in codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vacuumfront", description="Gas expansion into vacuum: scenario runner.")
    sub = p.add_subparsers(dest="command", required=True)
    for mode in MODES:
        s = sub.add_parser(mode)
        s.add_argument("--config", required=True,
                       help="scenario file, or a directory of *.cfg files run as a batch")
        s.add_argument("--out", help="output directory (a batch writes one subdirectory per file)")
        s.add_argument("--seed", type=int, help="override numerics.seed")
        s.add_argument("--jobs", type=int, default=1, help="worker count")
        s.add_argument("--record-time", action="store_true", help="add wall time to summary.json")
    sub.add_parser("list-presets")
    return p


def main(argv=None) -> int:
    level = os.environ.get("VACUUMFRONT_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        sys.stdout.write(list_presets())
        return EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_ERROR
    src = Path(args.config)
    if src.is_dir():
        files = sorted(str(f) for f in src.glob("*.cfg"))
        if not files:
            print(f"{src}: no *.cfg files", file=sys.stderr)
            return EXIT_ERROR
        base = Path(args.out or "out")
        jobs = max(1, args.jobs)
        work = [(f, args.command, str(base / Path(f).stem), args.seed, 1, args.record_time) for f in files]
        if jobs == 1:
            codes = [_run_one(*w) for w in work]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                codes = list(ex.map(_run_one, *zip(*work)))
        return _combine(codes)
    return _run_one(str(src), args.command, args.out, args.seed, max(1, args.jobs), args.record_time)


if __name__ == "__main__":
    sys.exit(main())
