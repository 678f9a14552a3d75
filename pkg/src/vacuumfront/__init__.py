"""Isentropic gas expanding into vacuum: exact flows, a 1-D Lagrangian solver,
characteristic tracing and a multi-dimensional initial-data classifier."""
from .gas import (DomainError, FluidState, GasLaw, RiemannPair, energy_density, from_riemann,
                  genuine_nonlinearity, riemann_invariants, sound_speed, wave_speeds)
from .exact import (MONOATOMIC_1D, FlowField, affine_flow, asymptotic_profile, hyperbola_acceleration,
                    hyperbola_flow, impulsive_flow)

__all__ = [
    "DomainError", "FluidState", "GasLaw", "RiemannPair", "energy_density", "from_riemann",
    "genuine_nonlinearity", "riemann_invariants", "sound_speed", "wave_speeds",
    "MONOATOMIC_1D", "FlowField", "affine_flow", "asymptotic_profile", "hyperbola_acceleration",
    "hyperbola_flow", "impulsive_flow",
]
