"""Parameter types and elementary closed-form quantities (hbar = 1)."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousBranchError, DomainError, StrongCouplingError

__all__ = [
    "PhysParams",
    "CavityConfig",
    "CouplingRegime",
    "kappa",
    "coupling_regime",
    "bose_occupation",
    "w_continuum",
    "lorentzian_weight",
]


@dataclass(frozen=True)
class PhysParams:
    """Particle/bath parameters.

    ``omega_bar`` is the renormalized particle frequency, ``g`` the ohmic
    coupling (a frequency), ``beta`` the inverse bath temperature and
    ``n0_init`` the initial particle occupation.
    """

    omega_bar: float = 1.0
    g: float = 0.1
    beta: float = 2.0
    n0_init: float = 1.0

    def __post_init__(self):
        if not self.omega_bar > 0:
            raise DomainError(f"omega_bar must be > 0, got {self.omega_bar}")
        if not self.g >= 0:
            raise DomainError(f"g must be >= 0, got {self.g}")
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.n0_init >= 0:
            raise DomainError(f"n0_init must be >= 0, got {self.n0_init}")

    @property
    def kappa_squared(self) -> float:
        return self.omega_bar**2 - (math.pi * self.g) ** 2 / 4.0

    @property
    def is_weak(self) -> bool:
        return self.kappa_squared > 0.0


@dataclass(frozen=True)
class CavityConfig:
    """Spherical cavity of radius ``R`` holding ``N`` bath modes with wave speed ``c``."""

    R: float
    c: float = 1.0
    N: int = 64

    def __post_init__(self):
        if not self.R > 0 or not self.c > 0:
            raise DomainError("R and c must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")

    @property
    def delta_omega(self) -> float:
        return math.pi * self.c / self.R

    @property
    def omegas(self) -> np.ndarray:
        """Bath frequencies omega_k = k pi c / R, k = 1..N."""
        return self.delta_omega * np.arange(1, self.N + 1, dtype=float)

    def eta(self, params: PhysParams) -> float:
        """Coupling amplitude eta = sqrt(2 g delta_omega)."""
        return math.sqrt(2.0 * params.g * self.delta_omega)


class CouplingRegime(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


def kappa(params: PhysParams) -> float:
    """Damped oscillation frequency sqrt(omega_bar^2 - pi^2 g^2 / 4)."""
    k2 = params.kappa_squared
    if k2 <= 0.0:
        raise StrongCouplingError(
            f"kappa^2 = {k2:.6g} <= 0 for omega_bar={params.omega_bar}, g={params.g}"
        )
    return math.sqrt(k2)


def coupling_regime(params: PhysParams) -> CouplingRegime:
    return CouplingRegime.WEAK if params.is_weak else CouplingRegime.STRONG


def bose_occupation(omega, beta):
    """Bose-Einstein occupation 1/(exp(beta*omega) - 1).

    Accepts scalars or arrays. ``expm1`` keeps full precision as
    beta*omega -> 0, where the occupation behaves like 1/(beta*omega).
    """
    w = np.asarray(omega, dtype=float)
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if np.any(~(w > 0)):
        raise DomainError("bose_occupation requires omega > 0")
    x = beta * w
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(x)
    if out.ndim == 0:
        return float(out)
    return out


def w_continuum(z, params: PhysParams, side: int | None = None) -> complex:
    """Continuum secular function W(z) on the sheet fixed by Im z.

    Upper half plane: z^2 + i pi g z - omega_bar^2; lower: z^2 - i pi g z - omega_bar^2.
    For real ``z`` pass ``side=+1`` (limit from above) or ``side=-1``.
    """
    z = complex(z)
    if z.imag > 0:
        s = 1
    elif z.imag < 0:
        s = -1
    else:
        if side not in (1, -1):
            raise AmbiguousBranchError("real argument needs side=+1 or side=-1")
        s = side
    return z * z + s * 1j * math.pi * params.g * z - params.omega_bar**2


def lorentzian_weight(omega, params: PhysParams):
    """Continuum spectral weight 2 g Omega^2 / ((Omega^2 - wb^2)^2 + pi^2 g^2 Omega^2).

    This is the density (t_0^Omega)^2 of the particle in the normal modes; it
    integrates to one over (0, inf).
    """
    w = np.asarray(omega, dtype=float)
    wb2 = params.omega_bar**2
    den = (w * w - wb2) ** 2 + (math.pi * params.g * w) ** 2
    return 2.0 * params.g * w * w / den
