"""Spectral simulator and estimate-audit toolkit for viscous free-surface
flow with gravity and surface tension over the 3D lower half-space."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity and the surface-tension / gravity coefficients
    (density normalized to 1, outer pressure to 0)."""

    mu: float = 1.0
    c_sigma: float = 1.0
    c_g: float = 1.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("viscosity must be positive")
        if self.c_sigma < 0 or self.c_g < 0:
            raise ValueError("surface tension and gravity must be nonnegative")


__all__ = ["PhysicalParams"]
__version__ = "0.1.0"
