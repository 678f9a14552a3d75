"""Multi-dimensional initial-data functionals and the singularity classifier.

Integrals over the initial domain use stratified Monte Carlo over its
bounding box with membership rejection. Samples come in independent
batches, each seeded from ``SeedSequence(seed).spawn(n_batches)``, so the
result does not depend on how many workers evaluate them. Error bars are
the standard error of the batch means.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable

import numpy as np

from .gas import DomainError, GasLaw

N_BATCHES = 10
MIN_SAMPLES = 1000
RAY_FAIL = 1e-9
RAY_MARGINAL = 1e-3
GAMMA_TOL = 1e-12
SIGMAS = 3.0

FORCED = "FiniteTimeSingularityForced"
IMPOSSIBLE = "EternalSmoothImpossible"
ETERNAL = "EternalCandidate"
FORWARD = "GlobalForwardCandidate"
INCONCLUSIVE = "Inconclusive"
_RANK = {FORCED: 0, IMPOSSIBLE: 1, ETERNAL: 2, FORWARD: 3, INCONCLUSIVE: 4}

RULE_JACOBIAN = "nonpositive-jacobian-integral"
RULE_MONO = "monoatomic-jacobian-bound"
RULE_ODD = "odd-dimension-volume-parity"
RULE_1D = "one-dimensional-riccati"
RULE_EVEN = "even-dimension-nonreal-spectrum"
RULE_FORWARD = "spectrum-off-negative-axis"


@dataclass(frozen=True)
class Domain:
    """Bounded region given by a vectorised membership test and a bounding box."""

    contains: Callable
    lo: np.ndarray
    hi: np.ndarray
    name: str = "domain"

    @property
    def dim(self) -> int:
        return self.lo.size


def ball(d: int, radius: float = 1.0, center=None) -> Domain:
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    return Domain(lambda p: np.sum((p - c) ** 2, axis=1) < radius * radius,
                  c - radius, c + radius, f"ball(d={d}, r={radius:g})")


def box(lo, hi) -> Domain:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    return Domain(lambda p: np.all((p > lo) & (p < hi), axis=1), lo, hi, "box")


def linear_field(matrix):
    """u0(x) = M x with constant Jacobian M; returns ``(u0, grad_u0)``."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    return (lambda p: p @ m.T), (lambda p: np.broadcast_to(m, (p.shape[0],) + m.shape))


def rotation_field():
    return linear_field([[0.0, -1.0], [1.0, 0.0]])


def bump_density(amplitude: float = 1.0, radius: float = 1.0, power: int = 2):
    """rho0 = amplitude (1 - |x|^2/radius^2)_+^power."""
    def rho(p):
        q = 1.0 - np.sum(p * p, axis=1) / radius ** 2
        return amplitude * np.where(q > 0, q, 0.0) ** power
    return rho


@dataclass(frozen=True)
class InitialData:
    d: int
    law: GasLaw
    domain: Domain
    u0: Callable
    rho0: Callable
    grad_u0: Callable | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("dimension must be at least 1")
        if self.domain.dim != self.d:
            raise DomainError("domain dimension does not match d")
        if not np.all(np.isfinite(self.domain.hi - self.domain.lo)):
            raise DomainError("domain must be bounded")

    def jacobian(self, p):
        """(n, d, d) array of grad u0; central differences when no sampler is given."""
        if self.grad_u0 is not None:
            return np.asarray(self.grad_u0(p), dtype=float)
        h = 1e-5 * float(np.max(self.domain.hi - self.domain.lo))
        cols = []
        for k in range(self.d):
            e = np.zeros(self.d)
            e[k] = h
            cols.append((self.u0(p + e) - self.u0(p - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def scaled(self, s: float) -> "InitialData":
        """Same data with rho0 multiplied by s."""
        rho = self.rho0
        return InitialData(self.d, self.law, self.domain, self.u0, lambda p: s * rho(p), self.grad_u0)


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float  # standard error from batch means

    def within(self, target: float, sigmas: float = SIGMAS, atol: float = 0.0) -> bool:
        return abs(self.value - target) <= sigmas * self.error + atol


def _batch_points(domain: Domain, n: int, ss: np.random.SeedSequence):
    """Stratified uniform points over the bounding box: one per cell of a k**d grid."""
    rng = np.random.default_rng(ss)
    d = domain.dim
    k = max(1, int(math.floor(n ** (1.0 / d) + 1e-9)))
    idx = np.indices((k,) * d).reshape(d, -1).T
    u = (idx + rng.random(idx.shape)) / k
    return domain.lo + u * (domain.hi - domain.lo)


def _batched(domain: Domain, n_samples: int, seed: int, fn, jobs: int = 1):
    """Run ``fn(inside_points)`` per batch; returns (per-batch box-volume integrals, points)."""
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"sample budget {n_samples} below the minimum {MIN_SAMPLES}")
    seeds = np.random.SeedSequence(seed).spawn(N_BATCHES)
    box_vol = float(np.prod(domain.hi - domain.lo))
    per = n_samples // N_BATCHES

    def one(ss):
        pts = _batch_points(domain, per, ss)
        inside = domain.contains(pts)
        vals = fn(pts[inside])  # (n_inside, k)
        return box_vol * np.sum(vals, axis=0) / pts.shape[0]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            out = list(ex.map(one, seeds))
    else:
        out = [one(s) for s in seeds]
    return np.array(out)


def _estimates(batches) -> list[Estimate]:
    mean = batches.mean(axis=0)
    err = batches.std(axis=0, ddof=1) / math.sqrt(batches.shape[0])
    return [Estimate(float(m), float(e)) for m, e in zip(mean, err)]


def symmetric_functions(jac) -> np.ndarray:
    """e_0..e_d of each Jacobian: sums of principal k x k minors, so det(I + tA) = sum e_k t**k."""
    n, d, _ = jac.shape
    out = np.empty((n, d + 1))
    out[:, 0] = 1.0
    for k in range(1, d + 1):
        acc = np.zeros(n)
        for rows in combinations(range(d), k):
            r = np.array(rows)
            acc += np.linalg.det(jac[:, r[:, None], r[None, :]])
        out[:, k] = acc
    return out


@dataclass(frozen=True)
class VolumePolynomial:
    coefficients: tuple  # of Estimate, c_0 .. c_d

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.coefficients])

    @property
    def errors(self) -> np.ndarray:
        return np.array([c.error for c in self.coefficients])

    def __call__(self, t):
        return np.polyval(self.values[::-1], t)


def volume_polynomial(data: InitialData, n_samples: int = 100_000, seed: int = 0,
                      jobs: int = 1) -> VolumePolynomial:
    """Coefficients of |Omega(t)| = integral of det(I + t grad u0) over Omega(0)."""
    b = _batched(data.domain, n_samples, seed, lambda p: symmetric_functions(data.jacobian(p)), jobs)
    coeffs = _estimates(b)
    if not coeffs[0].value > 0:
        raise DomainError("domain has zero sampled volume")
    return VolumePolynomial(tuple(coeffs))


def jacobian_integral(data: InitialData, n_samples: int = 100_000, seed: int = 0,
                      jobs: int = 1) -> Estimate:
    """J = integral of det grad u0 over Omega(0)."""
    b = _batched(data.domain, n_samples, seed,
                 lambda p: np.linalg.det(data.jacobian(p))[:, None] if p.size else np.zeros((0, 1)), jobs)
    return _estimates(b)[0]


def mass_and_inertia(data: InitialData, n_samples: int = 100_000, seed: int = 0,
                     jobs: int = 1) -> tuple[Estimate, Estimate]:
    """M = integral of rho0 and I = integral of rho0 |x|**2 / 2."""
    def f(p):
        r = np.asarray(data.rho0(p), dtype=float)
        if np.any(r < 0):
            raise DomainError("rho0 is negative somewhere")
        return np.stack([r, 0.5 * r * np.sum(p * p, axis=1)], axis=1)
    m, i = _estimates(_batched(data.domain, n_samples, seed, f, jobs))
    return m, i


def ray_distance(z):
    """Distance from complex z to the closed ray (-inf, 0]."""
    z = np.asarray(z)
    return np.where(z.real <= 0, np.abs(z.imag), np.abs(z))


@dataclass(frozen=True)
class SpectrumReport:
    off_negative_axis: str   # pass / fail / marginal
    off_real_axis: str
    min_ray_distance: float
    min_real_distance: float
    n_points: int
    n_skipped: int

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _grade(dist: float) -> str:
    if dist < RAY_FAIL:
        return "fail"
    if dist < RAY_MARGINAL:
        return "marginal"
    return "pass"


def spectrum_condition(data: InitialData, n_samples: int = 100_000, seed: int = 0) -> SpectrumReport:
    """Grade the eigenvalues of grad u0 against (-inf, 0] and against the real axis."""
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"sample budget {n_samples} below the minimum {MIN_SAMPLES}")
    seeds = np.random.SeedSequence(seed).spawn(N_BATCHES)
    per = n_samples // N_BATCHES
    dmin_ray, dmin_real, total, skipped = np.inf, np.inf, 0, 0
    for ss in seeds:
        pts = _batch_points(data.domain, per, ss)
        pts = pts[data.domain.contains(pts)]
        jac = data.jacobian(pts)
        good = np.all(np.isfinite(jac), axis=(1, 2))
        skipped += int(np.sum(~good))
        jac = jac[good]
        try:
            eig = np.linalg.eigvals(jac)
        except np.linalg.LinAlgError:
            eig_list = []
            for m in jac:
                try:
                    eig_list.append(np.linalg.eigvals(m))
                except np.linalg.LinAlgError:
                    skipped += 1
            eig = np.array(eig_list).reshape(-1, data.d)
        total += pts.shape[0]
        if eig.size:
            dmin_ray = min(dmin_ray, float(np.min(ray_distance(eig))))
            dmin_real = min(dmin_real, float(np.min(np.abs(eig.imag))))
    if total == 0:
        raise DomainError("no sample fell inside the domain")
    if skipped > 0.01 * total:
        raise RuntimeError(f"eigenvalue computation failed at {skipped} of {total} points")
    return SpectrumReport(_grade(dmin_ray), _grade(dmin_real), dmin_ray, dmin_real, total, skipped)


def _gamma_le(law: GasLaw, bound: Fraction) -> bool:
    if law.gamma_exact is not None:
        return law.gamma_exact <= bound
    return law.gamma <= float(bound) + GAMMA_TOL


def _gamma_eq(law: GasLaw, bound: Fraction) -> bool:
    if law.gamma_exact is not None:
        return law.gamma_exact == bound
    return abs(law.gamma - float(bound)) <= GAMMA_TOL


@dataclass
class ClassificationReport:
    verdict: str
    triggering_rule: str | None
    rules: list
    dimension: int
    gamma: float
    thresholds: dict
    J: Estimate
    volume: VolumePolynomial
    mass: Estimate
    inertia: Estimate
    mono_bound: float | None
    spectrum: SpectrumReport
    seed: int
    n_samples: int
    notes: list = field(default_factory=list)

    def as_dict(self):
        def est(e):
            return {"value": e.value, "error": e.error}
        return {
            "verdict": self.verdict,
            "triggering_rule": self.triggering_rule,
            "rules": [{"rule": r, "verdict": v} for r, v in self.rules],
            "dimension": self.dimension,
            "gamma": self.gamma,
            "thresholds": self.thresholds,
            "J": est(self.J),
            "volume_coefficients": [est(c) for c in self.volume.coefficients],
            "mass": est(self.mass),
            "inertia": est(self.inertia),
            "mono_bound": self.mono_bound,
            "spectrum": self.spectrum.as_dict(),
            "seed": self.seed,
            "n_samples": self.n_samples,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.as_dict()), indent=2, sort_keys=True) + "\n"


def _finite(obj):
    """Replace non-finite floats with None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def classify(data: InitialData, n_samples: int = 100_000, seed: int = 0, jobs: int = 1) -> ClassificationReport:
    """Apply the blow-up, non-existence and candidate rules to initial data.

    Rules, each listed when it applies:
      1. gamma <= 1 + 1/(d-1) and J <= 0 beyond the error bar: singularity forced.
      2. gamma == 1 + 1/(d-1) and J < (2 A M**gamma / ((gamma-1) I))**(d/2): singularity forced.
      3. d odd and gamma <= 1 + 1/(d-1): no eternal smooth solution. In d = 1 the
         Riccati argument gives the same conclusion for every gamma.
      4. d even and the spectrum of grad u0 avoids the real axis: eternal candidate.
      5. the spectrum avoids (-inf, 0]: forward-global candidate.
    The verdict is the strongest negative result, else the strongest candidate.
    Candidates never certify existence (a smallness condition is not checkable).
    """
    d, law = data.d, data.law
    vol = volume_polynomial(data, n_samples, seed, jobs)
    J = vol.coefficients[-1]
    M, I = mass_and_inertia(data, n_samples, seed, jobs)
    spec = spectrum_condition(data, n_samples, seed)
    if not M.value > 0:
        raise DomainError("initial data carries no mass")

    theorem = None if d == 1 else 1 + Fraction(1, d - 1)
    thresholds = {"monoatomic": 1.0 + 2.0 / d, "theorem": None if theorem is None else float(theorem)}
    rules, notes = [], []
    mono_bound = None
    if theorem is not None and I.value > 0:
        mono_bound = (2 * law.A * M.value ** law.gamma / ((law.gamma - 1) * I.value)) ** (d / 2)

    if theorem is not None and _gamma_le(law, theorem):
        if J.value + SIGMAS * J.error <= 0:
            rules.append((RULE_JACOBIAN, FORCED))
        if _gamma_eq(law, theorem) and mono_bound is not None and J.value + SIGMAS * J.error < mono_bound:
            rules.append((RULE_MONO, FORCED))
        if d % 2 == 1:
            rules.append((RULE_ODD, IMPOSSIBLE))
    if d == 1:
        rules.append((RULE_1D, IMPOSSIBLE))
    if d % 2 == 0 and spec.off_real_axis == "pass":
        rules.append((RULE_EVEN, ETERNAL))
        notes.append("eternal candidate only: the smallness of the initial sound speed is not certified")
    if spec.off_negative_axis == "pass":
        rules.append((RULE_FORWARD, FORWARD))
        notes.append("forward candidate only: the smallness of the initial sound speed is not certified")

    if rules:
        rule, verdict = min(rules, key=lambda rv: _RANK[rv[1]])
    else:
        rule, verdict = None, INCONCLUSIVE
    return ClassificationReport(verdict, rule, rules, d, law.gamma, thresholds, J, vol, M, I,
                                mono_bound, spec, seed, n_samples, notes)


@dataclass(frozen=True)
class CheminReport:
    passed: bool
    max_excess: float       # largest violation of the discrete inequality (<= 0 means none)
    relative_spread: float  # (max F - min F) / F(first snapshot)


def chemin_check(traj, law: GasLaw, d: int = 1, rtol: float = 1e-3) -> CheminReport:
    """Discrete form of dF/dt <= 2 (1 - d kappa) t * internal energy.

    ``traj`` exposes ``times`` and ``column(name)`` for ``chemin`` and
    ``internal``. The tolerance is ``rtol * max|F|`` per unit time.
    """
    t = np.asarray(traj.times, dtype=float)
    F = traj.column("chemin")
    if t.size < 2:
        return CheminReport(True, 0.0, 0.0)
    internal = traj.column("internal")
    dt = np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    rhs = 2.0 * (1.0 - d * law.kappa) * tm * 0.5 * (internal[1:] + internal[:-1])
    excess = np.diff(F) / dt - rhs - rtol * np.max(np.abs(F))
    spread = (F.max() - F.min()) / abs(F[0]) if F[0] != 0 else np.inf
    return CheminReport(bool(np.all(excess <= 0)), float(np.max(excess)), float(spread))



@dataclass(frozen=True)
class DispersionFit:
    slope: float
    intercept: float
    residual: float  # root-mean-square misfit of log P


def dispersion_exponent(traj, window=None) -> DispersionFit:
    """Least-squares slope of log P_gamma against log(1 + t).

    ``traj`` is a trajectory (``times`` and ``column("p_gamma")``) or a
    ``(t, P)`` pair; ``window`` optionally restricts t to ``[lo, hi]``.
    """
    if isinstance(traj, tuple):
        t, P = (np.asarray(v, dtype=float) for v in traj)
    else:
        t, P = np.asarray(traj.times, dtype=float), traj.column("p_gamma")
    if window is not None:
        m = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, P = t[m], P[m]
    if t.size < 5:
        raise ValueError("need at least 5 snapshots for a dispersion fit")
    if (1 + t.max()) / (1 + t.min()) < 4:
        raise ValueError("snapshots must span a factor of at least 4 in 1 + t")
    if np.any(P <= 0):
        raise ValueError("P_gamma must be positive for a log fit")
    X, Y = np.log1p(t), np.log(P)
    slope, intercept = np.polyfit(X, Y, 1)
    rms = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    return DispersionFit(float(slope), float(intercept), rms)
