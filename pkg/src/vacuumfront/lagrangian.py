"""One-dimensional Lagrangian (mass-coordinate) solver for isentropic gas in vacuum.

Staggered layout: node positions/velocities ``x[j], u[j]`` for j = 0..n and
cell specific volumes ``V[i] = (x[i+1] - x[i]) / dm[i]`` for i = 0..n-1.
The two end nodes are the vacuum fronts a(t) = x[0], b(t) = x[n]; beyond
them the pressure is zero, so the end nodes are pushed by the one-sided
pressure of their cell.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from .exact import FlowField
from .gas import DomainError, FluidState, GasLaw

log = logging.getLogger(__name__)

CFL = 0.5
Q_COEF = 1.5
# start-up ramp: first step is DT_START of the acoustic limit, then grows geometrically
DT_START = 0.01
DT_GROWTH = 1.1
_QUAD_POINTS = 200_001


class CFLError(RuntimeError):
    pass


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class LagrangianGrid:
    dm: np.ndarray
    x: np.ndarray
    u: np.ndarray
    # constant multipliers on the end-cell equation of state (left, right)
    end_factor: tuple = (1.0, 1.0)

    @property
    def n_cells(self) -> int:
        return self.dm.size

    @property
    def mass(self) -> float:
        return float(self.dm.sum())

    @property
    def volume(self) -> np.ndarray:
        return np.diff(self.x) / self.dm

    @property
    def rho(self) -> np.ndarray:
        return self.dm / np.diff(self.x)

    @property
    def node_mass(self) -> np.ndarray:
        dm = self.dm
        return np.concatenate(([0.5 * dm[0]], 0.5 * (dm[:-1] + dm[1:]), [0.5 * dm[-1]]))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.x[:-1] + self.x[1:])


def _tabulated(x, rho, u):
    x, rho, u = (np.asarray(v, dtype=float) for v in (x, rho, u))
    if x.ndim != 1 or not (x.size == rho.size == u.size) or x.size < 2:
        raise DomainError("table columns x, rho, u must be 1-D of equal length >= 2")
    if np.any(np.diff(x) <= 0):
        raise DomainError("table x must be strictly increasing")
    return (x[0], x[-1]), (lambda z: np.interp(z, x, rho)), (lambda z: np.interp(z, x, u))


def init_from_profile(profile, n_cells: int, t0: float = 0.0, law: GasLaw | None = None,
                      closure="auto") -> LagrangianGrid:
    """Equal-mass partition of an initial profile.

    ``profile`` is a :class:`FlowField` (sampled at ``t0``) or a tuple of
    arrays ``(x, rho, u)`` whose first and last abscissae bound the gas.
    Node positions invert the cumulative mass map; velocities are sampled.

    ``closure`` selects the end-cell pressure correction: ``"auto"`` applies
    it at each end whose initial pressure grows linearly in mass (see
    :func:`end_cell_factor`), ``True``/``False`` force it on/off.
    """
    if n_cells < 2:
        raise DomainError("n_cells must be at least 2")
    if isinstance(profile, FlowField):
        front = profile.front(t0)
        if front is None:
            raise DomainError("profile has unbounded support")
        (a0, b0) = front
        rho_fn = lambda z: profile.eval(z, t0).rho
        u_fn = lambda z: profile.eval(z, t0).u
    else:
        (a0, b0), rho_fn, u_fn = _tabulated(*profile)

    # cosine clustering removes the endpoint singularities of Holder profiles
    theta = np.linspace(0.0, np.pi, _QUAD_POINTS)
    z = a0 + 0.5 * (b0 - a0) * (1.0 - np.cos(theta))
    z[0], z[-1] = a0, b0
    dens = np.asarray(rho_fn(z), dtype=float)
    if not np.all(np.isfinite(dens)):
        raise DomainError("initial density is not finite")
    if np.any(dens < 0):
        raise DomainError("initial density is negative somewhere")
    integrand = dens * 0.5 * (b0 - a0) * np.sin(theta)
    cum = np.concatenate(([0.0], cumulative_simpson(integrand, x=theta)))
    cum = np.maximum.accumulate(cum)
    M = cum[-1]
    if not M > 0:
        raise DomainError("initial profile carries no mass")

    targets = np.linspace(0.0, M, n_cells + 1)
    # strictly increasing copy for inversion (flat stretches are vacuum gaps)
    keep = np.concatenate(([True], np.diff(cum) > 0))
    xs = np.interp(targets, cum[keep], z[keep])
    xs[0], xs[-1] = a0, b0
    if np.any(np.diff(xs) <= 0):
        raise DomainError("profile too degenerate for the requested resolution")
    dm = np.full(n_cells, M / n_cells)
    u = np.asarray(u_fn(xs), dtype=float) * np.ones_like(xs)
    if law is None and isinstance(profile, FlowField):
        law = profile.law
    grid = LagrangianGrid(dm, xs, u)
    return replace(grid, end_factor=_choose_end_factor(grid, law, closure))


def _choose_end_factor(grid, law, closure):
    if law is None or closure is False or grid.n_cells < 8:
        return (1.0, 1.0)
    k = end_cell_factor(law.gamma)
    if closure is True:
        return (k, k)
    s = _end_exponents(law.pressure(grid.rho))
    linear = np.all((s > 0.8) & (s < 1.15), axis=1)
    return tuple(float(k) if on else 1.0 for on in linear)


def stable_dt(grid: LagrangianGrid, law: GasLaw, cfl: float = CFL) -> float:
    c = law.sound_speed(grid.rho)
    with np.errstate(divide="ignore"):
        return float(cfl * np.min(np.diff(grid.x) / c))


def end_cell_factor(gamma: float) -> float:
    """Centre-of-mass over mean-volume pressure for a cell touching a Lipschitz-c**2 front.

    There p grows linearly with the mass m counted from the edge, so the cell
    spanning m in [0, dm] has mean specific volume (gamma/(gamma-1)) V(dm)
    while the node balance needs p at m = dm/2.
    """
    return 0.5 / (1.0 - 1.0 / gamma) ** gamma


def _end_exponents(p):
    """Local powers of p(m) at both ends from cells (2, 3) and (3, 4).

    Cell k counted from the edge is sampled at m = (k - 1/2) dm. Returns an
    array of shape (2 ends, 2 stencils).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.array([
            [np.log(p[2] / p[1]) / np.log(2.5 / 1.5), np.log(p[3] / p[2]) / np.log(3.5 / 2.5)],
            [np.log(p[-3] / p[-2]) / np.log(2.5 / 1.5), np.log(p[-4] / p[-3]) / np.log(3.5 / 2.5)],
        ])
    return np.where(np.isfinite(s), s, 0.0)


def _acceleration(x, u, dm, mnode, law, cq, end_factor=(1.0, 1.0)):
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise StabilityError(f"cell volume became non-positive (min width {dx.min():.3e})")
    rho = dm / dx
    du = np.diff(u)
    P = law.pressure(rho)
    P[0] *= end_factor[0]
    P[-1] *= end_factor[1]
    P += np.where(du < 0, cq * rho * du * du, 0.0)
    Pe = np.concatenate(([0.0], P, [0.0]))
    return (Pe[:-1] - Pe[1:]) / mnode


def step(grid: LagrangianGrid, dt: float, law: GasLaw, cfl: float = CFL,
         q_coef: float = Q_COEF) -> LagrangianGrid:
    """Advance one predictor-corrector step.

    Forces are evaluated at half-step positions and nodes move with the mean
    of old and new velocities; for linear acoustics the update has unit
    amplification whenever omega*dt < 2.
    """
    limit = stable_dt(grid, law, cfl)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.6g} exceeds the acoustic limit {limit:.6g}")
    x, u, dm = grid.x, grid.u, grid.dm
    mnode = grid.node_mass
    u_pred = u + 0.5 * dt * _acceleration(x, u, dm, mnode, law, q_coef, grid.end_factor)
    xh = x + 0.5 * dt * u
    acc_h = _acceleration(xh, u_pred, dm, mnode, law, q_coef, grid.end_factor)
    u1 = u + dt * acc_h
    x1 = x + 0.5 * dt * (u + u1)
    if np.any(np.diff(x1) <= 0):
        raise StabilityError("cell volume became non-positive after update")
    return LagrangianGrid(dm, x1, u1, grid.end_factor)


@dataclass(frozen=True)
class Diagnostics:
    t: float
    a: float
    b: float
    mass: float
    energy: float
    internal: float
    p_gamma: float
    chemin: float
    g_left: float
    g_right: float

    def as_row(self):
        return (self.t, self.a, self.b, self.mass, self.energy, self.p_gamma,
                self.chemin, self.g_left, self.g_right)


DIAGNOSTIC_COLUMNS = ("t", "a", "b", "mass", "energy", "p_gamma", "chemin", "g_left", "g_right")


def _front_accelerations(grid, law):
    if grid.n_cells < 3:
        return 0.0, 0.0
    xc = grid.centers
    c2 = law.sound_speed_sq(grid.rho)
    sl = np.polyfit(xc[:3], c2[:3], 1)[0]
    sr = np.polyfit(xc[-3:], c2[-3:], 1)[0]
    return sl / (law.gamma - 1.0), -sr / (law.gamma - 1.0)


def diagnostics(grid: LagrangianGrid, t: float, law: GasLaw) -> Diagnostics:
    """Conserved and monitored functionals of one grid.

    Kinetic parts use the lumped node masses (velocities live at nodes);
    thermodynamic parts use the cells.
    """
    rho = grid.rho
    mn = grid.node_mass
    e = law.specific_internal_energy(rho)
    # the end-cell factors scale e as well as p, keeping the scheme's energy exact
    e[0] *= grid.end_factor[0]
    e[-1] *= grid.end_factor[1]
    internal = float(np.sum(grid.dm * e))
    kinetic = float(0.5 * np.sum(mn * grid.u ** 2))
    p_gamma = (law.gamma - 1.0) / law.A * internal
    chemin = float(0.5 * np.sum(mn * (t * grid.u - grid.x) ** 2) + t * t * internal)
    gl, gr = _front_accelerations(grid, law)
    return Diagnostics(float(t), float(grid.x[0]), float(grid.x[-1]), grid.mass,
                       kinetic + internal, internal, p_gamma, chemin, float(gl), float(gr))


@dataclass(frozen=True)
class SimulationConfig:
    law: GasLaw
    initial: object  # FlowField or (x, rho, u) table
    n_cells: int = 400
    t_end: float = 1.0
    snapshot_stride: float | None = None
    snapshot_times: tuple | None = None
    cfl: float = CFL
    q_coef: float = Q_COEF
    t0: float = 0.0
    closure: object = "auto"

    def __post_init__(self):
        if not 0 < self.cfl < 1:
            raise DomainError("cfl must lie in (0, 1)")
        if self.n_cells < 8:
            raise DomainError("n_cells must be at least 8")


@dataclass(frozen=True)
class LagrangianTrajectory:
    law: GasLaw
    times: np.ndarray
    grids: tuple
    diagnostics: tuple
    n_steps: int = 0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])

    def fronts(self):
        return self.column("a"), self.column("b")

    def grid_at(self, t: float) -> LagrangianGrid:
        """Node-wise linear interpolation between the bracketing snapshots."""
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise DomainError(f"t={t} outside the simulated interval [{ts[0]}, {ts[-1]}]")
        k = int(np.clip(np.searchsorted(ts, t) - 1, 0, max(len(ts) - 2, 0)))
        if len(ts) == 1:
            return self.grids[0]
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        g0, g1 = self.grids[k], self.grids[k + 1]
        return replace(g0, x=(1 - w) * g0.x + w * g1.x, u=(1 - w) * g0.u + w * g1.u)

    def flow_field(self) -> FlowField:
        """Continuous field: c**2 and u piecewise linear in x, linear in t."""
        law = self.law

        def state(x, t):
            g = self.grid_at(t)
            # c^2 at cell centres, pinned to 0 on the end nodes
            xs = np.concatenate(([g.x[0]], g.centers, [g.x[-1]]))
            c2 = np.concatenate(([0.0], law.sound_speed_sq(g.rho), [0.0]))
            c2x = np.interp(x, xs, c2, left=0.0, right=0.0)
            rho = law.density_from_sound_speed(np.sqrt(c2x))
            u = np.interp(x, g.x, g.u)
            return rho, u

        def front(t):
            g = self.grid_at(t)
            return float(g.x[0]), float(g.x[-1])

        return FlowField(law, state, front, "lagrangian", (float(self.times[0]), float(self.times[-1])))


def _snapshot_schedule(cfg: SimulationConfig, horizon: float):
    if cfg.snapshot_times is not None:
        ts = sorted({abs(float(t)) for t in cfg.snapshot_times if abs(t) <= horizon} | {0.0, horizon})
        return np.array(ts)
    if cfg.snapshot_stride:
        k = max(1, int(round(horizon / cfg.snapshot_stride)))
        return np.linspace(0.0, horizon, k + 1)
    return np.array([0.0, horizon]) if horizon > 0 else np.array([0.0])


def simulate(cfg: SimulationConfig) -> LagrangianTrajectory:
    """Run from ``t0`` to ``t0 + t_end``; negative ``t_end`` integrates backwards.

    Backward runs use the symmetry (t, u) -> (-t, -u) of the Euler system, so
    the same forward integrator serves both directions.
    """
    law = cfg.law
    grid = init_from_profile(cfg.initial, cfg.n_cells, cfg.t0, law, cfg.closure)
    sign = -1.0 if cfg.t_end < 0 else 1.0
    if sign < 0:
        grid = replace(grid, u=-grid.u)
    horizon = abs(cfg.t_end)
    schedule = _snapshot_schedule(cfg, horizon)

    snaps = [grid]
    s, n_steps = 0.0, 0
    dt_prev = DT_START * stable_dt(grid, law, cfg.cfl)
    for target in schedule[1:]:
        while s < target:
            dt = min(stable_dt(grid, law, cfg.cfl), DT_GROWTH * dt_prev, target - s)
            dt_prev = max(dt, dt_prev)
            grid = step(grid, dt, law, cfg.cfl, cfg.q_coef)
            n_steps += 1
            s = target if target - s - dt <= 1e-14 * max(1.0, target) else s + dt
        snaps.append(grid)
    log.debug("simulated %d steps to |t|=%g", n_steps, horizon)

    times = cfg.t0 + sign * schedule
    if sign < 0:
        snaps = [replace(g, u=-g.u) for g in snaps][::-1]
        times = times[::-1]
    diags = tuple(diagnostics(g, t, law) for g, t in zip(snaps, times))
    return LagrangianTrajectory(law, np.asarray(times, dtype=float), tuple(snaps), diags, n_steps)


def l1_density_error(grid: LagrangianGrid, field: FlowField, t: float, order: int = 8) -> float:
    """L1 distance between piecewise-constant cell densities and an exact field."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x0, x1 = grid.x[:-1], grid.x[1:]
    half = 0.5 * (x1 - x0)
    pts = (0.5 * (x0 + x1))[:, None] + half[:, None] * nodes[None, :]
    exact = field.eval(pts.ravel(), t).rho.reshape(pts.shape)
    inside = np.sum(np.abs(exact - grid.rho[:, None]) * weights[None, :], axis=1) @ half
    # exact mass lying outside the numerical support
    front = field.front(t)
    outside = 0.0
    if front is not None:
        a, b = front
        for lo, hi in ((a, grid.x[0]), (grid.x[-1], b)):
            if hi > lo:
                m = 0.5 * (hi - lo)
                outside += m * np.sum(weights * field.eval(0.5 * (lo + hi) + m * nodes, t).rho)
    return float(inside + outside)
