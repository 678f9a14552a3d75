"""Closed-form flows of a gas expanding into vacuum, used as test oracles.

All three classical examples are mono-atomic in one dimension (gamma = 3,
A = 1/3, so that c = rho and the Riemann invariants equal the wave speeds).
:func:`affine_flow` extends the hyperbola flow to an arbitrary gas law.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .gas import DomainError, FluidState, GasLaw

MONOATOMIC_1D = GasLaw.from_text("3", 1.0 / 3.0)


@dataclass(frozen=True)
class FlowField:
    """An evaluable map (x, t) -> FluidState with a two-sided vacuum front.

    ``state`` returns ``(rho, u)`` for array ``x`` and scalar ``t``; it must
    return zero density outside ``front(t)``.
    """

    law: GasLaw
    state: Callable
    front_fn: Callable | None
    name: str = "field"
    t_range: tuple[float, float] = (-np.inf, np.inf)

    def eval(self, x, t) -> FluidState:
        rho, u = self.state(np.asarray(x, dtype=float), float(t))
        if np.ndim(rho) == 0:
            return FluidState(float(rho), float(u))
        return FluidState(rho, u)

    def front(self, t):
        """``(a(t), b(t))`` or ``None`` when the support is unbounded."""
        if self.front_fn is None:
            return None
        return self.front_fn(float(t))


def _hyperbola_state(x, t):
    s2 = 1.0 + t * t
    q = s2 - x * x
    inside = q > 0
    rho = np.where(inside, np.sqrt(np.where(inside, q, 0.0)) / s2, 0.0)
    u = t * x / s2
    return rho, u


def hyperbola_flow() -> FlowField:
    """Accelerated eternal flow whose front is the hyperbola x**2 = 1 + t**2."""
    def front(t):
        b = np.sqrt(1.0 + t * t)
        return -b, b

    return FlowField(MONOATOMIC_1D, _hyperbola_state, front, "hyperbola")


def hyperbola_acceleration(t):
    """Front acceleration g = (1 + t**2)**(-3/2) of :func:`hyperbola_flow`."""
    return np.power(1.0 + np.square(t), -1.5)


def _impulsive_forward(x, t):
    # t > 0: explicit rarefaction pair issued from the released block (-1, 1)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        rp = np.where(x >= t - 1.0, 1.0, (x + 1.0) / t)
        rm = np.where(x <= -t + 1.0, -1.0, (x - 1.0) / t)
    inside = (x > -t - 1.0) & (x < t + 1.0)
    rho = np.where(inside, 0.5 * (rp - rm), 0.0)
    # outside the gas the transport velocity equals the front velocity
    u = np.where(inside, 0.5 * (rp + rm), np.sign(x))
    return rho, u


def _impulsive_state(x, t):
    if t == 0.0:
        inside = np.abs(x) <= 1.0
        return np.where(inside, 1.0, 0.0), np.zeros_like(x)
    rho, u = _impulsive_forward(x, abs(t))
    return rho, (u if t > 0 else -u)


def impulsive_flow() -> FlowField:
    """Block of gas (rho = 1, u = 0 on (-1, 1)) released into vacuum at t = 0.

    Negative times follow from reversibility: rho(x, -t) = rho(x, t) and
    u(x, -t) = -u(x, t).
    """
    def front(t):
        w = 1.0 + abs(t)
        return -w, w

    return FlowField(MONOATOMIC_1D, _impulsive_state, front, "impulsive")


def _profile_state(x, t):
    if t == 0.0:
        raise DomainError("asymptotic profile is undefined at t = 0")
    xi = x / t
    inside = np.abs(xi) < 1.0
    rho = np.where(inside, np.sqrt(np.where(inside, 1.0 - xi * xi, 0.0)) / abs(t), 0.0)
    return rho, xi


def asymptotic_profile() -> FlowField:
    """Self-similar rarefaction rho = sqrt(1 - x**2/t**2)/|t|, u = x/t."""
    def front(t):
        if t == 0.0:
            raise DomainError("asymptotic profile is undefined at t = 0")
        return -abs(t), abs(t)

    return FlowField(MONOATOMIC_1D, _profile_state, front, "asymptotic")


class _ScaleFactor:
    """Even solution of a'' = k a**(-gamma), a(0) = 1, a'(0) = 0."""

    def __init__(self, k: float, gamma: float, t_max: float):
        self.k, self.gamma = k, gamma
        self._solve(t_max)

    def _solve(self, t_max):
        sol = solve_ivp(
            lambda t, y: [y[1], self.k * y[0] ** (-self.gamma)],
            (0.0, t_max), [1.0, 0.0],
            method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True,
        )
        self.t_max, self._sol = t_max, sol.sol

    def __call__(self, t):
        """Return ``(a, a')`` at time ``t``."""
        s = abs(t)
        if s > self.t_max:
            self._solve(2.0 * s)
        a, da = self._sol(s)
        return a, (da if t >= 0 else -da)


def affine_flow(law: GasLaw, rho_center: float = 1.0, t_max: float = 20.0) -> FlowField:
    """Affine expansion u = x a'/a, rho = rho_center (1 - (x/a)**2)**(1/(gamma-1)) / a.

    The scale factor obeys a'' = (2 c0**2/(gamma-1)) a**(-gamma) with c0 the
    central sound speed at t = 0. For gamma = 3, A = 1/3, rho_center = 1 this
    is exactly :func:`hyperbola_flow`.
    """
    c0sq = float(law.sound_speed_sq(rho_center))
    scale = _ScaleFactor(2.0 * c0sq / (law.gamma - 1.0), law.gamma, t_max)
    expo = 1.0 / (law.gamma - 1.0)

    def state(x, t):
        a, da = scale(t)
        q = 1.0 - (x / a) ** 2
        inside = q > 0
        rho = np.where(inside, rho_center * np.power(np.where(inside, q, 0.0), expo) / a, 0.0)
        return rho, x * da / a

    def front(t):
        a, _ = scale(t)
        return -a, a

    return FlowField(law, state, front, f"affine(gamma={law.gamma:g})")
