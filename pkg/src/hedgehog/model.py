"""Model parameters, bulk potential and nondimensionalization.

Everything downstream works in the doubly rescaled variables: lengths in
units of ``xi / sqrt(t)`` and the order parameter in units of the bulk
amplitude ``h_plus``.  Physical units only appear in :class:`PhysicalParams`
and :class:`ReducedGeometry`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DomainError",
    "PhysicalParams",
    "ModelParams",
    "ReducedGeometry",
    "derive_model_params",
    "nondimensionalize",
    "bulk_potential",
    "bulk_potential_derivative",
    "ode_rhs",
]


class DomainError(ValueError):
    """Raised when an input lies outside the regime the model is defined on."""


@dataclass(frozen=True)
class PhysicalParams:
    """Material constants and droplet radius in SI units.

    ``a2`` is the thermotropic coefficient already multiplied by the
    temperature offset, so all of ``a2, b2, c2`` are in N/m^2.
    """

    a2: float
    b2: float
    c2: float
    L: float
    R_real: float

    def __post_init__(self):
        for name in ("a2", "b2", "c2", "L", "R_real"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    t: float
    h_plus: float
    lambda_t_sq: float
    C_t: float
    farfield_coeff: float

    @property
    def cubic_ratio(self) -> float:
        """``3 h_plus / t``, the weight of the cubic bulk term in the ODE."""
        return 3.0 * self.h_plus / self.t


@dataclass(frozen=True)
class ReducedGeometry:
    xi: float
    R_bar: float
    R_tilde: float


def derive_model_params(t: float, relaxed: bool = False) -> ModelParams:
    """Closed-form constants for reduced temperature ``t``.

    The model assumes ``t > 1``.  ``relaxed=True`` admits ``t >= 1`` for
    boundary probes.
    """
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"reduced temperature must be finite, got {t!r}")
    if relaxed:
        if t < 1.0:
            raise DomainError(f"reduced temperature t={t!r} must satisfy t >= 1 (relaxed mode)")
    elif t <= 1.0:
        raise DomainError(
            f"reduced temperature t={t!r} must satisfy t > 1 "
            "(the model assumes t > 1 throughout; use relaxed mode for t = 1 probes)"
        )
    root = math.sqrt(9.0 + 8.0 * t)
    h_plus = (3.0 + root) / 4.0
    lambda_t_sq = 24.0 / (9.0 + 8.0 * t + 3.0 * root)
    C_t = 0.5 + h_plus / t - h_plus**2 / (2.0 * t)
    farfield_coeff = 6.0 / (2.0 + 3.0 * h_plus / t)
    return ModelParams(t, h_plus, lambda_t_sq, C_t, farfield_coeff)


def correlation_length(b2: float, c2: float, L: float) -> float:
    return math.sqrt(27.0 * c2 * L / b2**2)


def nondimensionalize(p: PhysicalParams, relaxed: bool = False) -> tuple[float, ReducedGeometry]:
    """Reduced temperature and rescaled radii for physical inputs."""
    t = 27.0 * p.a2 * p.c2 / p.b2**2
    if t <= 1.0 and not (relaxed and t >= 1.0):
        raise DomainError(f"computed reduced temperature t={t!r} is outside the regime t > 1")
    xi = correlation_length(p.b2, p.c2, p.L)
    R_bar = p.R_real / xi
    return t, ReducedGeometry(xi=xi, R_bar=R_bar, R_tilde=math.sqrt(t) * R_bar)


def bulk_potential(h, m: ModelParams):
    """Rescaled bulk energy density f(h); vanishes at its minimum h = 1.

    Works elementwise on numpy arrays.
    """
    return -0.5 * h**2 - (m.h_plus / m.t) * h**3 + (m.h_plus**2 / (2.0 * m.t)) * h**4 + m.C_t


def bulk_potential_derivative(h, m: ModelParams):
    return -h - 3.0 * (m.h_plus / m.t) * h**2 + 2.0 * (m.h_plus**2 / m.t) * h**3


def ode_rhs(r: float, h: float, dh: float, m: ModelParams) -> tuple[float, float]:
    """First-order form of the hedgehog ODE: returns ``(h', h'')``.

    Singular at r = 0; start from the series launch state instead.
    """
    if r <= 0:
        raise DomainError("ode_rhs is singular at r <= 0; launch from the core series")
    k = m.cubic_ratio
    d2h = -2.0 * dh / r + 6.0 * h / r**2 - h + h**3 + k * (h**3 - h**2)
    return dh, d2h
