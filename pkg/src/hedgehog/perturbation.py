"""Biaxial perturbations, second variations and the small-ball criterion.

Perturbations have the form ``p(r) M`` with a fixed tensor direction
``M``: either ``z z - I/3`` (the biaxial direction) or ``r r - I/3`` (the
hedgehog's own direction).  Angular integrals over the sphere are done in
closed form, leaving one-dimensional radial quadratures.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .model import ModelParams, ReducedGeometry, derive_model_params
from .profile import Profile, SolverError, solve_finite_ball

__all__ = [
    "BiaxialPerturbation",
    "PerturbationReport",
    "StabilityVerdict",
    "FAMILIES",
    "amplitude_family",
    "rational_perturbation",
    "biaxial_delta",
    "second_variation_biaxial",
    "second_variation_general",
    "stability_threshold",
    "stability_map",
    "sigma_scan",
]

FAMILIES = ("rational", "quadratic", "cosine")
DIRECTIONS = ("z", "radial")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class BiaxialPerturbation:
    """Radial amplitude supported on ``[inner, sigma]``.

    ``dp`` is the analytic derivative when known; otherwise central
    differences are used.
    """

    p: Callable[[np.ndarray], np.ndarray]
    sigma: float
    description: str
    dp: Callable[[np.ndarray], np.ndarray] | None = None
    inner: float = 0.0
    scale: float = 1.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.scale * np.where((r >= self.inner) & (r <= self.sigma), self.p(r), 0.0)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.dp is not None:
            d = self.dp(r)
        else:
            eps = 1e-6 * max(self.sigma, 1.0)
            d = (self.p(r + eps) - self.p(r - eps)) / (2.0 * eps)
        return self.scale * np.where((r >= self.inner) & (r <= self.sigma), d, 0.0)

    def scaled(self, factor: float) -> "BiaxialPerturbation":
        return replace(self, scale=self.scale * factor)


def rational_perturbation(sigma: float = 10.0) -> BiaxialPerturbation:
    """``(1 - r/sigma) / (r^2 + 12)^2`` on ``[0, sigma]``."""
    return amplitude_family("rational", sigma)


def amplitude_family(name: str, sigma: float, inner: float = 0.0) -> BiaxialPerturbation:
    """Built-in amplitude shapes.

    With ``inner = 0`` the shapes live on ``[0, sigma]`` and vanish at
    ``sigma``.  With ``inner > 0`` they are written in the shifted variable
    ``s = r - inner`` over the width ``w = sigma - inner`` and also vanish
    at ``inner``, as needed for perturbations kept away from the core.
    """
    if name not in FAMILIES:
        raise ValueError(f"unknown amplitude family {name!r}; choose from {FAMILIES}")
    if not sigma > inner >= 0:
        raise ValueError("support must satisfy 0 <= inner < sigma")
    a, w = inner, sigma - inner
    if name == "rational":
        if a == 0:
            def p(r):
                return (1.0 - r / w) / (r**2 + 12.0) ** 2

            def dp(r):
                q = r**2 + 12.0
                return -1.0 / (w * q**2) - 4.0 * r * (1.0 - r / w) / q**3
        else:
            def p(r):
                s = r - a
                return (1.0 - s / w) * (s / w) / (s**2 + 12.0) ** 2

            def dp(r):
                s = r - a
                q = s**2 + 12.0
                return ((1.0 - 2.0 * s / w) / w) / q**2 - 4.0 * s * (1.0 - s / w) * (s / w) / q**3
    elif name == "quadratic":
        def p(r):
            s = r - a
            return (1.0 - s / w) * s**2

        def dp(r):
            s = r - a
            return 2.0 * s - 3.0 * s**2 / w
    else:
        if a == 0:
            def p(r):
                return 0.5 * (1.0 + np.cos(np.pi * r / w))

            def dp(r):
                return -0.5 * np.pi / w * np.sin(np.pi * r / w)
        else:
            def p(r):
                return 0.5 * (1.0 - np.cos(2.0 * np.pi * (r - a) / w))

            def dp(r):
                return np.pi / w * np.sin(2.0 * np.pi * (r - a) / w)
    return BiaxialPerturbation(p, float(sigma), f"{name}[{inner:g},{sigma:g}]", dp, float(inner))


@dataclass(frozen=True)
class PerturbationReport:
    delta_I_exact: float
    delta_I_bound: float
    quadratic_part: float
    verdict: str
    quadrature_error: float = 0.0
    sigma: float = 0.0
    description: str = ""


@dataclass(frozen=True)
class StabilityVerdict:
    R_threshold: float
    R_threshold_real: float | None = None
    stable: bool | None = None


def _gauss_panels(a: float, b: float, n_panels: int):
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, w


def _profile_h(profile, r):
    if callable(profile) and not isinstance(profile, Profile):
        return np.asarray(profile(r), dtype=float)
    return profile.evaluate(r)[0]


def _check_support(pert: BiaxialPerturbation, profile) -> None:
    if isinstance(profile, Profile) and pert.sigma > profile.r_end * (1 + 1e-12):
        raise ValueError(f"perturbation support {pert.sigma} exceeds the profile domain {profile.r_end}")


def _biaxial_integrals(pert, profile, m, n_panels, h_override=None):
    r, w = _gauss_panels(pert.inner, pert.sigma, n_panels)
    p = pert.value(r)
    dp = pert.derivative(r)
    hstar = _profile_h(profile, r) if h_override is None else h_override(r)
    hp, t = m.h_plus, m.t
    quad = r**2 / 3.0 * dp**2 - r**2 / 3.0 * p**2 + (14.0 / 15.0) * hp**2 / t * r**2 * hstar**2 * p**2
    full = (quad - 2.0 * math.sqrt(6.0) * hp / (9.0 * t) * r**2 * p**3
            + r**2 * hp**2 / (2.0 * t) * (4.0 / 9.0) * p**4)
    return float(np.dot(w, full)), float(np.dot(w, quad))


def biaxial_delta(pert: BiaxialPerturbation, profile, m: ModelParams,
                  n_panels: int = 400) -> PerturbationReport:
    """Energy change (per 4 pi) from adding ``p(r) (z z - I/3)`` to the hedgehog.

    ``delta_I_exact`` uses the solved profile; ``delta_I_bound`` replaces it
    by the upper envelope ``r^2 / (r^2 + t lambda_t^2)``.  Both use composite
    8-point Gauss-Legendre; the error estimate compares ``n_panels`` with
    ``n_panels // 2``.
    """
    _check_support(pert, profile)
    exact, quad = _biaxial_integrals(pert, profile, m, n_panels)
    coarse, _ = _biaxial_integrals(pert, profile, m, max(1, n_panels // 2))
    env = lambda r: r**2 / (r**2 + m.t * m.lambda_t_sq)  # noqa: E731
    bound, _ = _biaxial_integrals(pert, profile, m, n_panels, h_override=env)
    verdict = "unstable" if exact < 0 else "stable-along-family"
    return PerturbationReport(exact, bound, quad, verdict, abs(exact - coarse), pert.sigma,
                              pert.description)


def second_variation_biaxial(pert: BiaxialPerturbation, profile, m: ModelParams,
                             n_panels: int = 400) -> float:
    """Quadratic part of :func:`biaxial_delta`; negative means linearly unstable."""
    _check_support(pert, profile)
    return _biaxial_integrals(pert, profile, m, n_panels)[1]


def second_variation_general(pert: BiaxialPerturbation, profile, m: ModelParams, R: float,
                             direction: str = "z", n_panels: int = 400,
                             far_field_cutoff: float | None = None) -> float:
    """Second variation of the full tensor energy along ``p(r) M``.

    Evaluated on the unit ball after rescaling ``r = R * rhat``, where the
    gradient term keeps weight 1 and the bulk terms pick up ``R^2``.  ``M``
    is ``z z - I/3`` (``direction="z"``) or ``r r - I/3``
    (``direction="radial"``).  The amplitude must vanish at ``r = R``; with
    ``far_field_cutoff`` it must also vanish on ``[0, far_field_cutoff]``.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unsupported tensor direction {direction!r}; choose from {DIRECTIONS}")
    if pert.sigma > R * (1 + 1e-12):
        raise ValueError("amplitude support exceeds the ball")
    if pert.sigma >= R * (1 - 1e-12) and abs(float(pert.value(np.array([R]))[0])) > 1e-12:
        raise ValueError("amplitude must vanish on the outer boundary")
    if far_field_cutoff is not None:
        if pert.inner < far_field_cutoff - 1e-12:
            raise ValueError("far-field amplitude must vanish inside the cutoff radius")
    rh, w = _gauss_panels(pert.inner / R, pert.sigma / R, n_panels)
    r = R * rh
    p = pert.value(r)
    dp = R * pert.derivative(r)  # derivative in rhat
    h = _profile_h(profile, r)
    hp, t = m.h_plus, m.t
    R2 = R * R
    if direction == "z":
        # |M|^2 = 2/3; <tr(M^2 N)> = 0; <(N:M)^2> = 4/45 with N = rr - I/3
        integrand = (2.0 / 3.0 * dp**2 - R2 * 2.0 / 3.0 * p**2
                     + hp**2 * R2 / (2.0 * t) * (8.0 * 1.5 * (4.0 / 45.0) + 4.0 * 2.0 / 3.0) * h**2 * p**2)
    else:
        # |grad(p N)|^2 = 2/3 p'^2 + 4 p^2 / rhat^2; tr(N^3) = 2/9; N:N = 2/3
        cubic = 6.0 * math.sqrt(6.0) * hp / t * R2 * math.sqrt(1.5) * (2.0 / 9.0) * h * p**2
        integrand = (2.0 / 3.0 * dp**2 + 4.0 * p**2 / np.where(rh > 0, rh, 1.0) ** 2
                     - R2 * 2.0 / 3.0 * p**2 - cubic
                     + hp**2 * R2 / (2.0 * t) * (8.0 * 1.5 * (4.0 / 9.0) + 4.0 * 2.0 / 3.0) * h**2 * p**2)
    return float(4.0 * math.pi * np.dot(w, rh**2 * integrand))


def stability_threshold(m: ModelParams, geom: ReducedGeometry | None = None,
                        R: float | None = None) -> StabilityVerdict:
    """Ball radius below which the hedgehog is stable against every
    perturbation vanishing on the boundary."""
    factor = 1.0 + 4.0 * math.sqrt(6.0) * m.h_plus / m.t
    R_thr = math.sqrt(0.25 / factor)
    real = None
    if geom is not None:
        real = geom.xi / (2.0 * math.sqrt(m.t)) / math.sqrt(factor)
    return StabilityVerdict(R_thr, real, None if R is None else bool(R < R_thr))


def sigma_scan(profile, m: ModelParams, sigmas: Sequence[float], family: str = "rational",
               n_panels: int = 400) -> list[PerturbationReport]:
    return [biaxial_delta(amplitude_family(family, float(s)), profile, m, n_panels) for s in sigmas]


# --------------------------------------------------------------------------
# (t, R) sweep


@dataclass(frozen=True)
class MapCell:
    t: float
    R: float
    R_threshold: float
    threshold_flag: str  # "below-threshold" | "above-threshold"
    delta_sign: int | None  # sign of the rational-family energy change, None on failure
    delta: float | None
    status: str  # "provably-stable" | "unstable-witnessed" | "undetermined" | "error: ..."


def _map_cell(args) -> MapCell:
    t, R, sigma = args
    m = derive_model_params(t)
    thr = stability_threshold(m).R_threshold
    flag = "below-threshold" if R < thr else "above-threshold"
    try:
        prof = solve_finite_ball(m, R)
        s = min(sigma, R)
        rep = biaxial_delta(rational_perturbation(s), prof, m)
        delta = rep.delta_I_exact
        sign = int(np.sign(delta))
    except (SolverError, ValueError) as exc:
        return MapCell(t, R, thr, flag, None, None, f"error: {exc}")
    if flag == "below-threshold":
        status = "provably-stable"
    elif sign < 0:
        status = "unstable-witnessed"
    else:
        status = "undetermined"
    if flag == "below-threshold" and sign < 0:
        status = "inconsistent"
    return MapCell(t, R, thr, flag, sign, delta, status)


def stability_map(t_grid: Sequence[float], R_grid: Sequence[float], sigma: float = 10.0,
                  workers: int = 1) -> list[MapCell]:
    """Classify each ``(t, R)`` cell by the small-ball threshold and the sign
    of the rational-family energy change (support ``min(sigma, R)``)."""
    if not len(t_grid) or not len(R_grid):
        raise ValueError("grids must be non-empty")
    for t in t_grid:
        derive_model_params(t)
    jobs = [(float(t), float(R), float(sigma)) for t in t_grid for R in R_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_map_cell, jobs))
    return [_map_cell(j) for j in jobs]
