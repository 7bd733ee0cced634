"""Energies and pointwise checks on solved profiles."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _rk
from .model import ModelParams, bulk_potential
from .profile import Profile

__all__ = [
    "EnergyReport",
    "BoundCheck",
    "FarFieldFit",
    "reduced_energy",
    "check_bounds",
    "farfield_fit",
    "farfield_residuals",
    "gradient_bound",
    "hedgehog_tensor",
    "tensor_residual",
    "tensor_residual_matrix",
]


@dataclass(frozen=True)
class EnergyReport:
    I_h: float
    I_tensor: float
    bound_3R: float
    quadrature_error: float


@dataclass(frozen=True)
class BoundCheck:
    lower_ok: bool
    upper_ok: bool
    max_lower_violation: float
    max_upper_violation: float
    checked_range: tuple[float, float]


@dataclass(frozen=True)
class FarFieldFit:
    coeff_empirical: float
    coeff_closed_form: float
    window: tuple[float, float]
    residuals: dict = field(default_factory=dict)

    @property
    def relative_error(self) -> float:
        return abs(self.coeff_empirical - self.coeff_closed_form) / self.coeff_closed_form


def _energy_density(r, h, dh, m):
    # r^2 * (3 h^2 / r^2) is written as 3 h^2, so the origin needs no special case
    return 0.5 * r**2 * dh**2 + 3.0 * h**2 + r**2 * bulk_potential(h, m)


def _simpson(y, dx):
    return dx / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def reduced_energy(p: Profile, m: ModelParams, n_panels: int = 4000) -> EnergyReport:
    """Reduced energy of ``p`` on ``[0, R]`` by composite Simpson.

    The quadrature error is the Richardson estimate from halving the panel
    count.
    """
    if n_panels % 4:
        n_panels += 4 - n_panels % 4
    R = p.r_end
    r = np.linspace(0.0, R, n_panels + 1)
    h, dh = p.evaluate(r)
    y = _energy_density(r, h, dh, m)
    dx = R / n_panels
    fine = _simpson(y, dx)
    coarse = _simpson(y[::2], 2 * dx)
    return EnergyReport(fine, 4.0 * math.pi * fine, 3.0 * R, abs(fine - coarse) / 15.0)


def check_bounds(p: Profile, m: ModelParams, tol: float = 1e-6,
                 r_range: tuple[float, float] | None = None) -> BoundCheck:
    """Compare ``h`` with ``r^2/(r^2+14)`` and ``r^2/(r^2 + t lambda_t^2)``.

    These envelopes are large-domain statements; a warning is issued for
    balls smaller than radius 20.
    """
    if p.domain.get("kind") == "ball" and p.domain.get("R", np.inf) < 20:
        warnings.warn("pointwise envelopes only hold for large domains", RuntimeWarning,
                      stacklevel=2)
    r = p.grid
    mask = np.ones_like(r, dtype=bool)
    if r_range is not None:
        mask = (r >= r_range[0]) & (r <= r_range[1])
    r, h = r[mask], p.h[mask]
    lower = r**2 / (r**2 + 14.0)
    upper = r**2 / (r**2 + m.t * m.lambda_t_sq)
    lo_v = float(max(0.0, np.max(lower - h)))
    up_v = float(max(0.0, np.max(h - upper)))
    return BoundCheck(lo_v <= tol, up_v <= tol, lo_v, up_v, (float(r[0]), float(r[-1])))


def a2_interval(m: ModelParams) -> tuple[float, float]:
    """Range of core amplitudes allowed by the large-domain envelopes."""
    return 1.0 / 14.0, 1.0 / 3.0 + 3.0 / (8.0 * m.t) + math.sqrt(9.0 + 8.0 * m.t) / (8.0 * m.t)


def farfield_fit(p: Profile, m: ModelParams, window: tuple[float, float] = (25.0, 45.0)) -> FarFieldFit:
    """Far-field coefficient of ``1 - h ~ c / r^2``.

    ``c`` is ``r^2 (1 - h)`` at the window midpoint, corrected for the next
    ``1/r^2`` term using the two window endpoints.  The three far-field
    residuals (curvature, slope, balance) are reported at the midpoint.
    """
    r1, r2 = map(float, window)
    if r1 < 10 or r2 > p.r_end or r2 <= r1:
        raise ValueError(f"window {window} must lie in [10, {p.r_end}]")
    rm = 0.5 * (r1 + r2)
    rs = np.array([r1, rm, r2])
    h, dh = p.evaluate(rs)
    g = rs**2 * (1.0 - h)
    d = (g[0] - g[2]) / (1.0 / r1**2 - 1.0 / r2**2)
    coeff = g[1] - d / rm**2
    residuals = farfield_residuals(p, m, rm)
    return FarFieldFit(float(coeff), m.farfield_coeff, (r1, r2), residuals)


def farfield_residuals(p: Profile, m: ModelParams, r: float) -> dict:
    """Curvature ``r^2 |h''|``, slope ``r |h'|`` and balance
    ``|6 - r^2 h (1-h)(1 + (1+k) h)|`` at radius ``r``; all tend to 0."""
    h, dh = p.evaluate(np.array([float(r)]))
    hm, dm = float(h[0]), float(dh[0])
    k = m.cubic_ratio
    d2h = -2.0 * dm / r + 6.0 * hm / r**2 - hm + hm**3 + k * (hm**3 - hm**2)
    return {
        "r": float(r),
        "curvature": r**2 * abs(d2h),
        "slope": r * abs(dm),
        "balance": abs(6.0 - r**2 * hm * (1.0 - hm) * (1.0 + (1.0 + k) * hm)),
    }


def gradient_bound(p: Profile, r_range: tuple[float, float] | None = None) -> float:
    """Max over grid points of ``sqrt(h'^2 + 3 h^2 / r^2)``.

    At ``r = 0`` the ratio term takes its series limit ``3 a2^2 r^2 -> 0``.
    """
    r, h, dh = p.grid, p.h, p.dh
    if r_range is not None:
        mask = (r >= r_range[0]) & (r <= r_range[1])
        r, h, dh = r[mask], h[mask], dh[mask]
    ratio = np.zeros_like(r)
    nz = r > 0
    ratio[nz] = 3.0 * h[nz] ** 2 / r[nz] ** 2
    return float(np.sqrt(np.max(dh**2 + ratio)))


# --------------------------------------------------------------------------
# tensor reconstruction


def hedgehog_tensor(x: np.ndarray, h: float) -> np.ndarray:
    """``sqrt(3/2) h (x x / |x|^2 - I/3)`` at a single point."""
    x = np.asarray(x, dtype=float)
    n = x / np.linalg.norm(x)
    return math.sqrt(1.5) * h * (np.outer(n, n) - np.eye(3) / 3.0)


def _euler_lagrange_rhs(Q: np.ndarray, m: ModelParams) -> np.ndarray:
    tr2 = np.trace(Q @ Q)
    return (-Q - 3.0 * math.sqrt(6.0) * m.h_plus / m.t * (Q @ Q - np.eye(3) * tr2 / 3.0)
            + 2.0 * m.h_plus**2 / m.t * Q * tr2)


def _stencil(x: np.ndarray, spacing: float) -> list[np.ndarray]:
    pts = [x]
    for i in range(3):
        e = np.zeros(3)
        e[i] = spacing
        pts += [x + e, x - e]
    return pts


def _local_values(p, radii: np.ndarray) -> np.ndarray:
    """``h`` at closely spaced radii with errors that are smooth across them.

    For solved profiles the ODE is re-integrated from the smallest radius
    with steps no longer than the radius gaps, so each step is exact to
    round-off and the finite-difference Laplacian sees no integrator noise.
    """
    if callable(p) and not isinstance(p, Profile):
        return np.asarray(p(radii), dtype=float)
    if not p.segments:
        return p.evaluate(radii)[0]
    order = np.argsort(radii)
    srt = radii[order]
    uniq, inv = np.unique(srt, return_inverse=True)
    h0, d0 = p.evaluate(uniq[:1])
    m = p.model
    st, _, _, _, h_out, _, n_out, _, _ = _rk.run(
        float(uniq[0]), float(h0[0]), float(d0[0]), float(uniq[-1]), m.cubic_ratio,
        1e-15, 1e-18, np.ascontiguousarray(uniq[1:]), 0, 0.0, 100000, float(uniq[1] - uniq[0]),
    )
    vals = np.concatenate([h0, h_out])
    out = np.empty_like(srt)
    out[order] = vals[inv]
    return out


def tensor_residual_matrix(p, m: ModelParams, x, spacing: float = 1e-3) -> np.ndarray:
    """Defect ``Delta Q - rhs(Q)`` of the tensor equations at point ``x``.

    ``p`` is a :class:`Profile` or any vectorised callable ``h(r)``.
    """
    x = np.asarray(x, dtype=float)
    pts = _stencil(x, spacing)
    radii = np.array([np.linalg.norm(q) for q in pts])
    if isinstance(p, Profile) and (radii.min() <= 0 or radii.max() > p.r_end):
        raise ValueError("finite-difference stencil leaves the profile domain")
    hs = _local_values(p, radii)
    Qs = [hedgehog_tensor(q, hv) for q, hv in zip(pts, hs)]
    lap = (sum(Qs[1:]) - 6.0 * Qs[0]) / spacing**2
    return lap - _euler_lagrange_rhs(Qs[0], m)


def tensor_residual(p, m: ModelParams, sample_radii: Sequence[float], spacing: float = 1e-3,
                    direction: Sequence[float] = (1.0, 2.0, 3.0)) -> float:
    """Largest componentwise defect of the tensor equations for the
    hedgehog built from ``p``, sampled along ``direction``."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    worst = 0.0
    for r in sample_radii:
        res = tensor_residual_matrix(p, m, r * u, spacing)
        worst = max(worst, float(np.max(np.abs(res))))
    return worst
