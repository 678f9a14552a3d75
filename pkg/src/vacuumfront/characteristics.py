"""Characteristic curves, Riemann-invariant transport and Lax's Riccati equation.

Paths are integrated with classical RK4 at a fixed step. A path stops when
it leaves the gas (density below ``TRACE_VACUUM``) or comes within
``FRONT_PROXIMITY * (b - a)`` of a front.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exact import FlowField
from .gas import DomainError, FluidState, GasLaw, genuine_nonlinearity

TRACE_VACUUM = 1e-10
FRONT_PROXIMITY = 1e-6
TRANSVERSAL_REL_STEP = 1e-3
_BISECTIONS = 60

FAMILIES = ("plus", "minus")
ENDPOINT_KINDS = ("horizon", "front-left", "front-right")


class ConvexityError(ValueError):
    """Front curve b is not convex or a is not concave."""


def lax_weight(s: FluidState, law: GasLaw):
    """Weight N with y = N * dr/dx solving the uncoupled Riccati equation.

    N = c**(-(3 - gamma) / (2 (gamma - 1))); identically 1 when gamma = 3.
    """
    rho = np.asarray(s.rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("the Riccati weight is degenerate at vacuum")
    beta = (3.0 - law.gamma) / (2.0 * (law.gamma - 1.0))
    return np.power(law.sound_speed(rho), -beta)


def _speed(field: FlowField, family: str, x, t):
    s = field.eval(x, t)
    c = field.law.sound_speed(s.rho)
    return s.u + c if family == "plus" else s.u - c


@dataclass(frozen=True)
class CharPath:
    family: str
    t: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    start_kind: str
    end_kind: str
    field: FlowField | None = field(default=None, repr=False, compare=False)

    @property
    def t_in(self) -> float:
        return float(self.t[0])

    @property
    def t_fin(self) -> float:
        return float(self.t[-1])

    def __len__(self):
        return self.t.size


def _front_status(field: FlowField, x: float, t: float):
    """None while inside the gas, else the kind of boundary that was reached."""
    fr = field.front(t)
    if fr is not None:
        a, b = fr
        tol = FRONT_PROXIMITY * (b - a)
        if x - a <= tol:
            return "front-left"
        if b - x <= tol:
            return "front-right"
    if field.eval(x, t).rho < TRACE_VACUUM:
        if fr is None:
            return "front-right"
        return "front-left" if x - fr[0] < fr[1] - x else "front-right"
    return None


def _rk4(field, family, x, t, h):
    k1 = _speed(field, family, x, t)
    k2 = _speed(field, family, x + 0.5 * h * k1, t + 0.5 * h)
    k3 = _speed(field, family, x + 0.5 * h * k2, t + 0.5 * h)
    k4 = _speed(field, family, x + h * k3, t + h)
    return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _march(field, family, x0, t0, t_stop, step):
    """Integrate from (x0, t0) toward t_stop; returns (ts, xs, kind)."""
    ts, xs = [t0], [x0]
    direction = 1.0 if t_stop >= t0 else -1.0
    n = int(np.ceil(abs(t_stop - t0) / step - 1e-9))
    x, t = x0, t0
    for i in range(n):
        t_next = t_stop if i == n - 1 else t0 + direction * step * (i + 1)
        h = t_next - t
        x_next = _rk4(field, family, x, t, h)
        kind = _front_status(field, x_next, t_next)
        if kind is not None:
            # bisect on the step length for the last point still inside
            lo, hi = 0.0, 1.0
            for _ in range(_BISECTIONS):
                mid = 0.5 * (lo + hi)
                if _front_status(field, _rk4(field, family, x, t, mid * h), t + mid * h) is None:
                    lo = mid
                else:
                    hi = mid
            if hi * abs(h) > 0:
                xs.append(_rk4(field, family, x, t, hi * h))
                ts.append(t + hi * h)
            return ts, xs, kind
        x, t = x_next, t_next
        ts.append(t)
        xs.append(x)
    return ts, xs, "horizon"


def trace(field: FlowField, family: str, start, horizon, step: float = 1e-3) -> CharPath:
    """Integrate dX/dt = u +/- c through ``field`` in both time directions.

    ``start`` is ``(x0, t0)`` and ``horizon`` is ``(t_lo, t_hi)``.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if not step > 0:
        raise ValueError("step must be positive")
    x0, t0 = float(start[0]), float(start[1])
    t_lo, t_hi = float(horizon[0]), float(horizon[1])
    if not t_lo <= t0 <= t_hi:
        raise ValueError("start time outside the horizon")
    if _front_status(field, x0, t0) is not None:
        raise DomainError(f"start point ({x0}, {t0}) is not inside the gas")

    tf, xf, end_kind = _march(field, family, x0, t0, t_hi, step)
    tb, xb, start_kind = _march(field, family, x0, t0, t_lo, step)
    t = np.array(tb[:0:-1] + tf)
    x = np.array(xb[:0:-1] + xf)
    rho = np.empty_like(t)
    u = np.empty_like(t)
    for i, (xi, ti) in enumerate(zip(x, t)):
        s = field.eval(xi, ti)
        rho[i], u[i] = s.rho, s.u
    return CharPath(family, t, x, rho, u, start_kind, end_kind, field)


def _invariant(family, rho, u, law):
    cbar = law.sound_speed(rho) / law.kappa
    return u + cbar if family == "plus" else u - cbar


def riemann_drift(path: CharPath, law: GasLaw) -> float:
    """Largest deviation of the transported invariant from its initial value."""
    if len(path) < 2:
        return 0.0
    r = _invariant(path.family, path.rho, path.u, law)
    return float(np.max(np.abs(r - r[0])))


def transversal_derivative(field: FlowField, family: str, x: float, t: float, law: GasLaw) -> float:
    """d r_family / dx at (x, t): 5-point central, or 3-point one-sided beside a front."""
    fr = field.front(t)
    width = (fr[1] - fr[0]) if fr is not None else 1.0
    h = TRANSVERSAL_REL_STEP * width

    def r(z):
        s = field.eval(np.asarray(z, dtype=float), t)
        return _invariant(family, s.rho, s.u, law)

    lo_ok = fr is None or x - 2 * h > fr[0]
    hi_ok = fr is None or x + 2 * h < fr[1]
    if lo_ok and hi_ok:
        v = r([x - 2 * h, x - h, x + h, x + 2 * h])
        return float((v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h))
    if hi_ok:
        v = r([x, x + h, x + 2 * h])
        return float((-3 * v[0] + 4 * v[1] - v[2]) / (2 * h))
    if lo_ok:
        v = r([x - 2 * h, x - h, x])
        return float((v[0] - 4 * v[1] + 3 * v[2]) / (2 * h))
    raise DomainError("gas region too thin for a transversal stencil")


@dataclass(frozen=True)
class RiccatiSeries:
    t: np.ndarray
    y: np.ndarray
    residual: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def riccati_y(path: CharPath, law: GasLaw, weight: Callable | None = None) -> np.ndarray:
    """y = N(rho) * dr/dx sampled along the path (NaN where rho is below threshold)."""
    if path.field is None:
        raise ValueError("path carries no field to differentiate")
    weight = weight or lax_weight
    y = np.full(path.t.shape, np.nan)
    for i, (x, t, rho, u) in enumerate(zip(path.x, path.t, path.rho, path.u)):
        if rho < TRACE_VACUUM:
            continue
        dr = transversal_derivative(path.field, path.family, x, t, law)
        y[i] = weight(FluidState(rho, u), law) * dr
    return y


def riccati_residual(path: CharPath, law: GasLaw, weight: Callable | None = None) -> RiccatiSeries:
    """Pointwise dy/dt + N**-1 ((gamma+1)/4) y**2 along the path.

    ``weight`` overrides the Riccati weight N (a callable of (state, law)).
    Only the longest run of samples with rho above threshold is used.
    """
    weight = weight or lax_weight
    y = riccati_y(path, law, weight)
    ok = np.isfinite(y)
    if ok.sum() < 3:
        return RiccatiSeries(path.t[ok], y[ok], np.zeros(int(ok.sum())))
    # longest contiguous valid run
    idx = np.flatnonzero(ok)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    runs = np.split(idx, breaks + 1)
    sel = max(runs, key=len)
    t, yy = path.t[sel], y[sel]
    states = FluidState(path.rho[sel], path.u[sel])
    n = weight(states, law) * np.ones_like(t)
    res = np.gradient(yy, t, edge_order=2) + genuine_nonlinearity(law) * yy ** 2 / n
    return RiccatiSeries(t, yy, res)


@dataclass(frozen=True)
class FrontSlopes:
    p_plus: float
    p_minus: float
    q_plus: float
    q_minus: float


def _front_callable(front):
    if isinstance(front, FlowField):
        return front.front
    return front


def _check_convexity(ts, a, b, tol):
    qa = np.diff(a) / np.diff(ts)
    qb = np.diff(b) / np.diff(ts)
    db, da = np.diff(qb), np.diff(qa)
    if np.any(db < -tol):
        i = int(np.argmin(db))
        raise ConvexityError(f"b is not convex near t={ts[i + 1]:.6g} (quotient drop {-db[i]:.3e})")
    if np.any(da > tol):
        i = int(np.argmax(da))
        raise ConvexityError(f"a is not concave near t={ts[i + 1]:.6g} (quotient rise {da[i]:.3e})")


def front_slopes(front, T: float, h: float = 0.125, tol: float = 1e-9, n_audit: int = 1601) -> FrontSlopes:
    """Asymptotic front velocities from one-sided differences at t = +/-T.

    q_plus, q_minus approximate lim b' as t -> +inf, -inf and p_plus,
    p_minus approximate lim a' as t -> +inf, -inf. Difference quotients of
    both fronts on [-T, T] are audited for convexity of b and concavity of a.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    fn = _front_callable(front)
    ts = np.linspace(-T, T, n_audit)
    ab = np.array([fn(t) for t in ts], dtype=float)
    _check_convexity(ts, ab[:, 0], ab[:, 1], tol)
    (a_hi, b_hi), (a_hi0, b_hi0) = fn(T), fn(T - h)
    (a_lo, b_lo), (a_lo0, b_lo0) = fn(-T + h), fn(-T)
    return FrontSlopes(
        p_plus=float((a_hi - a_hi0) / h), p_minus=float((a_lo - a_lo0) / h),
        q_plus=float((b_hi - b_hi0) / h), q_minus=float((b_lo - b_lo0) / h),
    )


@dataclass(frozen=True)
class SizeReport:
    passed: bool
    gap_plus: float   # |p_plus - q_minus|
    gap_minus: float  # |p_minus - q_plus|


def theorem_size_check(slopes: FrontSlopes, tol: float) -> SizeReport:
    """Asymptotic slopes of an eternal flow satisfy p_plus = q_minus and p_minus = q_plus."""
    g1 = abs(slopes.p_plus - slopes.q_minus)
    g2 = abs(slopes.p_minus - slopes.q_plus)
    return SizeReport(bool(g1 <= tol and g2 <= tol), float(g1), float(g2))


@dataclass
class AuditReport:
    checked: dict = field(default_factory=dict)
    not_checked: tuple = ("weak-solution", "entropy-shocks")
    violations: list = field(default_factory=list)
    skipped_starts: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def admissibility_audit(field: FlowField, horizon, sampling: int = 8, step: float = 1e-2,
                        tol: float = 1e-9) -> AuditReport:
    """Numerical audit of an admissible flow surrounded by vacuum.

    Checked: convexity of b and concavity of a; density vanishing on the
    approach to each front; and characteristic endpoint rules (a plus path
    only ends on the right front and only starts on the left one, the
    minus family the other way round). Weak-solution and entropy conditions
    are left to the solver and reported as not checked.
    """
    t_lo, t_hi = float(horizon[0]), float(horizon[1])
    rep = AuditReport()

    ts = np.linspace(t_lo, t_hi, 8 * sampling + 1)
    try:
        ab = np.array([field.front(t) for t in ts], dtype=float)
        _check_convexity(ts, ab[:, 0], ab[:, 1], tol)
        rep.checked["front-convexity"] = True
    except ConvexityError as exc:
        rep.checked["front-convexity"] = False
        rep.violations.append(("front-convexity", str(exc)))

    # midpoints avoid an initial-data instant sitting exactly on a grid time
    tm = 0.5 * (ts[:-1] + ts[1:])
    vac_ok = True
    for t in tm:
        a, b = field.front(t)
        w = b - a
        eps = np.array([1e-2, 1e-4, 1e-6])
        right = field.eval(b - eps * w, t).rho
        left = field.eval(a + eps * w, t).rho
        peak = float(np.max(field.eval(np.linspace(a, b, 65)[1:-1], t).rho))
        for side, vals in (("right", right), ("left", left)):
            if vals[-1] > 1e-2 * peak or np.any(np.diff(vals) > 1e-12 * peak):
                vac_ok = False
                rep.violations.append(("vacuum-limit", f"{side} front at t={t:.6g}: rho={vals.tolist()}"))
    rep.checked["vacuum-limit"] = vac_ok

    rules_ok = True
    starts = np.linspace(t_lo, t_hi, sampling + 2)[1:-1]
    fracs = (np.arange(sampling) + 0.5) / sampling
    forbidden = {"plus": ("front-left", "front-right"), "minus": ("front-right", "front-left")}
    for t0 in starts:
        a, b = field.front(t0)
        for f in fracs:
            x0 = a + f * (b - a)
            for family in FAMILIES:
                try:
                    path = trace(field, family, (x0, t0), (t_lo, t_hi), step)
                except DomainError:
                    # sample point not inside the gas; nothing to trace from it
                    rep.skipped_starts += 1
                    continue
                bad_end, bad_start = forbidden[family]
                if path.end_kind == bad_end or path.start_kind == bad_start:
                    rules_ok = False
                    rep.violations.append(("endpoint-rule", f"{family} path from ({x0:.6g}, {t0:.6g}): "
                                           f"starts {path.start_kind}, ends {path.end_kind}"))
    rep.checked["endpoint-rule"] = rules_ok
    return rep


PATH_COLUMNS = ("path", "family", "t", "x", "rho", "u", "r_plus", "r_minus", "y")


def path_rows(paths, law: GasLaw):
    """Yield CSV-ready rows; y is the weighted transversal derivative (empty at vacuum)."""
    for k, p in enumerate(paths):
        cbar = law.sound_speed(p.rho) / law.kappa
        y = riccati_y(p, law) if p.field is not None else np.full(p.t.shape, np.nan)
        for i in range(len(p)):
            yield (k, p.family, p.t[i], p.x[i], p.rho[i], p.u[i],
                   p.u[i] + cbar[i], p.u[i] - cbar[i], y[i])


def write_paths_csv(paths, law: GasLaw, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PATH_COLUMNS)
    for row in path_rows(paths, law):
        w.writerow([v if isinstance(v, (int, str)) else ("" if not np.isfinite(v) else f"{v:.17g}")
                    for v in row])
