"""The standard mollifier rho = c * exp(-1/(1-|t|^2)) and its Fourier transform."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .fields import RadialField, gauss_legendre
from .jets import bump_q_jet

__all__ = ["Mollifier", "BUMP_MASS_1D", "BUMP_MASS_2D"]


def _bump(t):
    return math.exp(-1.0 / (1.0 - t * t)) if abs(t) < 1 else 0.0


BUMP_MASS_1D = 2 * integrate.quad(_bump, 0, 1, epsabs=1e-16, epsrel=1e-13)[0]
BUMP_MASS_2D = 2 * math.pi * integrate.quad(lambda r: r * _bump(r), 0, 1, epsabs=1e-16, epsrel=1e-13)[0]


def _one_minus_j0(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    out = np.empty_like(z)
    zs = z[small]
    out[small] = zs**2 / 4 - zs**4 / 64 + zs**6 / 2304
    out[~small] = 1.0 - special.j0(z[~small])
    return out


@dataclass(frozen=True)
class Mollifier:
    """Normalized bump supported in the ball of the given radius.

    ``rho(t) = radius^-n * bump(|t| / radius) / mass``.
    """

    dimension: int = 1
    radius: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def mass(self) -> float:
        return BUMP_MASS_1D if self.dimension == 1 else BUMP_MASS_2D

    @property
    def normalization(self) -> float:
        return 1.0 / (self.mass * self.radius**self.dimension)

    @cached_property
    def profile(self) -> RadialField:
        return RadialField(bump_q_jet, (0.0,) * self.dimension, self.radius, self.normalization, self.dimension)

    def __call__(self, *t):
        return self.profile.evaluate(t, 1.0)

    def integral(self, nodes: int = 96) -> float:
        """Quadrature check of the unit mass."""
        x, w = gauss_legendre(nodes)
        R = self.radius
        if self.dimension == 1:
            return float((self.profile.evaluate((R * x,), 1.0) * w).sum() * R)
        r = 0.5 * R * (x + 1)
        vals = self.profile.evaluate((r, np.zeros_like(r)), 1.0)
        return float(2 * math.pi * (vals * r * w).sum() * 0.5 * R)

    def fourier_minus_one(self, tau, nodes: int = 400) -> np.ndarray:
        """rho_hat(tau) - 1, without cancellation for small |tau|.

        Uses rho_hat - 1 = -2 int rho sin^2(tau t / 2) in 1D and the
        radial form with 1 - J0 in 2D.
        """
        tau = np.asarray(tau, dtype=float)
        x, w = gauss_legendre(nodes)
        R = self.radius
        r = 0.5 * R * (x + 1)
        wr = 0.5 * R * w
        if self.dimension == 1:
            rho = self.profile.evaluate((r,), 1.0)
            # symmetric profile: integral over [-R, R] = 2 * integral over [0, R]
            s2 = np.sin(0.5 * np.multiply.outer(tau, r)) ** 2
            return -4.0 * (s2 * (rho * wr)).sum(-1)
        rho = self.profile.evaluate((r, np.zeros_like(r)), 1.0)
        omj = _one_minus_j0(np.multiply.outer(tau, r))
        return -2 * math.pi * (omj * (rho * r * wr)).sum(-1)

    def fourier(self, tau) -> np.ndarray:
        return 1.0 + self.fourier_minus_one(tau)
