"""Polytropic gas law, pointwise states, wave speeds and Riemann invariants.

Every function accepts scalars or numpy arrays for ``rho``/``u``.
Vacuum (``rho == 0``) is a legal state: it keeps its velocity and all
derived quantities (sound speed, internal energy) vanish there.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# below this density a state counts as vacuum in predicates (never clipped in arithmetic)
VACUUM_RHO = 1e-14


class DomainError(ValueError):
    """Raised when a state lies outside the physical domain (e.g. rho < 0)."""


@dataclass(frozen=True)
class GasLaw:
    """Pressure law p = A rho**gamma.

    ``gamma_exact`` optionally carries the adiabatic exponent as a rational so
    that threshold comparisons can be made exactly.
    """

    gamma: float
    A: float
    gamma_exact: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.gamma > 1:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not self.A > 0:
            raise DomainError(f"A must be positive, got {self.A}")
        if self.gamma_exact is not None and float(self.gamma_exact) != float(self.gamma):
            raise DomainError("gamma_exact disagrees with gamma")

    @classmethod
    def from_text(cls, gamma: str, A: float) -> "GasLaw":
        """Build from a textual gamma such as ``"5/3"`` or ``"1.4"``."""
        exact = Fraction(gamma.strip())
        return cls(float(exact), float(A), gamma_exact=exact)

    @property
    def kappa(self) -> float:
        return (self.gamma - 1.0) / 2.0

    def pressure(self, rho):
        return self.A * np.power(rho, self.gamma)

    def sound_speed(self, rho):
        return np.sqrt(self.gamma * self.A) * np.power(rho, self.kappa)

    def sound_speed_sq(self, rho):
        return self.gamma * self.A * np.power(rho, self.gamma - 1.0)

    def specific_internal_energy(self, rho):
        """e(rho) = A rho**(gamma-1) / (gamma-1)."""
        return self.A * np.power(rho, self.gamma - 1.0) / (self.gamma - 1.0)

    def density_from_sound_speed(self, c):
        """Inverse of :meth:`sound_speed` (c >= 0)."""
        return np.power(np.square(c) / (self.gamma * self.A), 1.0 / (self.gamma - 1.0))


@dataclass(frozen=True)
class FluidState:
    rho: float | np.ndarray
    u: float | np.ndarray

    def is_vacuum(self):
        return np.asarray(self.rho) < VACUUM_RHO


@dataclass(frozen=True)
class RiemannPair:
    r_plus: float | np.ndarray
    r_minus: float | np.ndarray


def _check_rho(rho):
    if np.any(np.asarray(rho) < 0):
        raise DomainError("negative density")


def sound_speed(s: FluidState, law: GasLaw):
    _check_rho(s.rho)
    return law.sound_speed(s.rho)


def riemann_invariants(s: FluidState, law: GasLaw) -> RiemannPair:
    """r_plus, r_minus = u +/- c/kappa."""
    _check_rho(s.rho)
    cbar = law.sound_speed(s.rho) / law.kappa
    return RiemannPair(s.u + cbar, s.u - cbar)


def from_riemann(pair: RiemannPair, law: GasLaw) -> FluidState:
    """Recover (rho, u) from a pair of Riemann invariants."""
    rp, rm = np.asarray(pair.r_plus), np.asarray(pair.r_minus)
    if np.any(rp < rm):
        raise DomainError("r_plus < r_minus has no physical state")
    u = 0.5 * (rp + rm)
    cbar = 0.5 * (rp - rm)
    rho = np.power((law.kappa * cbar) ** 2 / (law.gamma * law.A), 1.0 / (2.0 * law.kappa))
    if np.ndim(rho) == 0:
        return FluidState(float(rho), float(u))
    return FluidState(rho, u)


def wave_speeds(s: FluidState, law: GasLaw):
    """Return ``(lambda_minus, lambda_plus)`` = u -/+ c."""
    c = sound_speed(s, law)
    return s.u - c, s.u + c


def energy_density(s: FluidState, law: GasLaw):
    """Return ``(internal, total)`` energy per unit volume."""
    _check_rho(s.rho)
    internal = law.pressure(s.rho) / (law.gamma - 1.0)
    total = 0.5 * s.rho * np.square(s.u) + internal
    return internal, total


def genuine_nonlinearity(law: GasLaw) -> float:
    """d(lambda_plus)/d(r_plus) at fixed r_minus; equals (gamma+1)/4."""
    return (law.gamma + 1.0) / 4.0
