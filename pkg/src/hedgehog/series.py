"""Power series of the hedgehog profile about the isotropic core."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .model import ModelParams

__all__ = ["SeriesExpansion", "series_coefficients", "launch_state"]


@dataclass(frozen=True)
class SeriesExpansion:
    """Core expansion ``h(r) = sum_n coeffs[n] r**n``.

    ``coeffs`` is indexed by power and includes the odd slots, which the
    recurrence produces as exact zeros.
    """

    a2: float
    t: float
    coeffs: tuple[float, ...]
    cubic_ratio: float

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def even(self) -> tuple[float, ...]:
        """``(a2, a4, a6, ...)``."""
        return self.coeffs[2::2]

    def __call__(self, r: float) -> tuple[float, float]:
        h = 0.0
        dh = 0.0
        # Horner on h and h' separately
        for n in range(self.order, 0, -1):
            h = h * r + self.coeffs[n]
            dh = dh * r + n * self.coeffs[n]
        return h * r, dh


def recurrence(a2, cubic_ratio, order: int) -> list:
    """Coefficients ``a_0 .. a_order``; exact when given ``Fraction`` inputs."""
    # m (m+5) a_{m+2} = [r^m] ( -h + (1 + k) h^3 - k h^2 ),  k = 3 h_plus / t
    zero = a2 * 0
    a = [zero] * (order + 1)
    if order >= 2:
        a[2] = a2
    k = cubic_ratio
    sq = [zero] * (order + 1)  # coefficients of h^2
    for m in range(1, order - 1):
        # h^2 and h^3 at r^m only involve a_j with j <= m - 2, all known here
        sq[m] = sum(a[i] * a[m - i] for i in range(m + 1))
        cube = sum(sq[i] * a[m - i] for i in range(m + 1))
        b = -a[m] + (1 + k) * cube - k * sq[m]
        a[m + 2] = b / (m * (m + 5))
    return a


def series_coefficients(a2: float, m: ModelParams, order: int = 6) -> SeriesExpansion:
    if order < 4:
        raise ValueError(f"series order must be at least 4, got {order}")
    coeffs = tuple(recurrence(a2, m.cubic_ratio, order))
    return SeriesExpansion(a2=float(a2), t=m.t, coeffs=coeffs, cubic_ratio=m.cubic_ratio)


def launch_state(s: SeriesExpansion, r0: float = 1e-3) -> tuple[float, float, float]:
    """Evaluate ``(h, dh)`` at ``r0`` and the size of the first omitted term.

    Warns when the omitted term exceeds ``1e-12 * h(r0)``.
    """
    if not r0 > 0:
        raise ValueError("launch radius must be positive")
    h, dh = s(r0)
    nxt = recurrence(s.a2, s.cubic_ratio, s.order + 2)[s.order + 1 :]
    omitted = max(abs(c) * r0 ** (s.order + 1 + i) for i, c in enumerate(nxt))
    if omitted > 1e-12 * abs(h):
        warnings.warn(
            f"series truncation term {omitted:.3e} exceeds 1e-12*h(r0) at r0={r0}",
            RuntimeWarning,
            stacklevel=2,
        )
    return h, dh, omitted

