"""Shooting solver for the hedgehog profile.

Trajectories are launched from the core series at a small radius and
integrated with the compiled DOP853 stepper in :mod:`hedgehog._rk`.  The
far field is linearly unstable (perturbations grow like
``exp(sqrt(2 + 3 h_plus / t) r)``), so a single bisection on ``a2`` only
pins the solution down to the radius where the two bracketing shots
separate.  The solvers therefore march: once the bracket trajectories
separate, the state is frozen at the last radius where they still agree
and the slope there is re-bisected.  Each piece is a genuine ODE
trajectory, which keeps the profile reproducible from its stored pieces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _rk
from .model import DomainError, ModelParams, derive_model_params
from .series import launch_state, series_coefficients

__all__ = [
    "SolverError",
    "BracketNotFound",
    "NoRootError",
    "Trajectory",
    "ShotOutcome",
    "Profile",
    "integrate",
    "classify_shot",
    "scan_shots",
    "solve_semi_infinite",
    "solve_finite_ball",
]

R0_DEFAULT = 1e-3
SERIES_ORDER = 6
RTOL = 1e-12
ATOL = 1e-14
OVERSHOOT_MARGIN = 1e-9
MATCH_TOL = 1e-10
MAX_STEPS = 2_000_000

_STATUS = {
    _rk.ST_END: "end",
    _rk.ST_STATIONARY: "stationary",
    _rk.ST_OVERSHOOT: "overshoot",
    _rk.ST_NEGATIVE: "negative",
}
_EVENT_BITS = {
    "stationary": _rk.EV_STATIONARY,
    "overshoot": _rk.EV_OVERSHOOT,
    "negative": _rk.EV_NEGATIVE,
}


class SolverError(RuntimeError):
    """Integration or root finding failed."""


class BracketNotFound(SolverError):
    pass


class NoRootError(SolverError):
    pass


@dataclass(frozen=True)
class Trajectory:
    r: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    status: str
    r_stop: float
    h_stop: float
    dh_stop: float
    n_steps: int
    n_rejected: int
    launch_error: float = 0.0


def _run(r_start, h_start, dh_start, r_end, k, out_r, events, margin=OVERSHOOT_MARGIN,
         rtol=RTOL, atol=ATOL, first_step=None) -> Trajectory:
    mask = 0
    for name in events:
        mask |= _EVENT_BITS[name]
    out_r = np.ascontiguousarray(out_r, dtype=np.float64)
    if first_step is None:
        first_step = 1e-2 * max(r_start, 1e-2)
    st, rs, hs, ds, h_out, dh_out, n_out, n_steps, n_rej = _rk.run(
        float(r_start), float(h_start), float(dh_start), float(r_end), float(k),
        float(rtol), float(atol), out_r, mask, float(margin), MAX_STEPS, float(first_step),
    )
    if st == _rk.ST_UNDERFLOW:
        raise SolverError(f"step size underflow at r={rs!r}")
    if st == _rk.ST_MAXSTEPS:
        raise SolverError(f"step limit exceeded at r={rs!r}")
    return Trajectory(out_r[:n_out], h_out[:n_out], dh_out[:n_out], _STATUS[st],
                      rs, hs, ds, int(n_steps), int(n_rej))


def _launch(a2: float, m: ModelParams, r0: float):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        h, dh, err = launch_state(series_coefficients(a2, m, SERIES_ORDER), r0)
    return h, dh, err


def integrate(a2: float, m: ModelParams, r_end: float, tol: float = RTOL,
              grid: Sequence[float] | None = None, events: Sequence[str] = (),
              r0: float = R0_DEFAULT) -> Trajectory:
    """Shoot from the core series with amplitude ``a2`` out to ``r_end``.

    ``grid`` radii inside ``[0, r0]`` are filled from the series; the rest
    come from the integrator.  ``events`` may contain ``"stationary"``,
    ``"overshoot"`` and ``"negative"``; the first one to fire stops the
    integration and the remaining grid entries are dropped.
    """
    if a2 < 0:
        raise ValueError("a2 must be non-negative")
    if not r_end > r0:
        raise ValueError(f"r_end={r_end} must exceed the launch radius {r0}")
    grid = np.asarray([] if grid is None else grid, dtype=np.float64)
    inner = grid[grid <= r0]
    outer = grid[grid > r0]
    s = series_coefficients(a2, m, SERIES_ORDER)
    h0, dh0, err = _launch(a2, m, r0)
    traj = _run(r0, h0, dh0, r_end, m.cubic_ratio, outer, events, rtol=tol, atol=tol * 1e-2)
    if inner.size:
        hi = np.array([s(x)[0] for x in inner])
        di = np.array([s(x)[1] for x in inner])
        traj = Trajectory(np.concatenate([inner, traj.r]), np.concatenate([hi, traj.h]),
                          np.concatenate([di, traj.dh]), traj.status, traj.r_stop,
                          traj.h_stop, traj.dh_stop, traj.n_steps, traj.n_rejected)
    return Trajectory(traj.r, traj.h, traj.dh, traj.status, traj.r_stop, traj.h_stop,
                      traj.dh_stop, traj.n_steps, traj.n_rejected, err)


@dataclass(frozen=True)
class ShotOutcome:
    cls: str  # "P", "Q", "R" or "inconclusive"
    witness_r: float | None
    a2: float


def classify_shot(a2: float, m: ModelParams, r_max: float = 50.0, tol: float = RTOL,
                  slack: float = 0.1) -> ShotOutcome:
    """Sort one shot into P (turns over below 1), R (overshoots 1) or Q."""
    if not a2 > 0:
        raise ValueError("shooting parameter must be positive")
    traj = integrate(a2, m, r_max, tol=tol, events=("stationary", "overshoot", "negative"))
    return _outcome(traj, a2, slack)


def _outcome(traj: Trajectory, a2: float, slack: float = 0.1) -> ShotOutcome:
    if traj.status in ("stationary", "negative"):
        return ShotOutcome("P", traj.r_stop, a2)
    if traj.status == "overshoot":
        return ShotOutcome("R", traj.r_stop, a2)
    if 1.0 - traj.h_stop > slack and traj.dh_stop > 1e-3:
        return ShotOutcome("inconclusive", None, a2)
    return ShotOutcome("Q", None, a2)


def scan_shots(m: ModelParams, a2_values, r_max: float = 50.0) -> list[ShotOutcome]:
    return [classify_shot(float(a), m, r_max) for a in a2_values]


# --------------------------------------------------------------------------
# marching shooter


@dataclass(frozen=True)
class _Problem:
    """Boundary behaviour that decides which side of the root a shot is on."""

    k: float
    r_end: float
    events: tuple[str, ...]
    margin: float
    horizon: float  # shots are classified by integrating out to here

    def side(self, traj: Trajectory) -> int:
        # -1 undershoot, +1 overshoot, 0 undecided (reached r_end quietly)
        if traj.status in ("stationary", "negative"):
            return -1
        if traj.status == "overshoot":
            return 1
        return 0


def _semi_infinite_problem(m: ModelParams, r_max: float, extra: float = 25.0) -> _Problem:
    # Classifying beyond r_max keeps P/R decisions sharp right up to r_max.
    return _Problem(m.cubic_ratio, r_max, ("stationary", "overshoot", "negative"),
                    OVERSHOOT_MARGIN, r_max + extra)


class _BallProblem(_Problem):
    def side(self, traj: Trajectory) -> int:
        if traj.status == "overshoot":
            return 1
        return -1


def _ball_problem(m: ModelParams, R: float) -> _Problem:
    return _BallProblem(m.cubic_ratio, R, ("overshoot", "negative"), 0.0, R)


def _bisect(shoot: Callable[[float], Trajectory], side, lo: float, hi: float, width: float):
    """Bisect until the bracket is narrower than ``width`` or stops shrinking.

    Returns ``(lo, hi, undecided_mid)``; ``undecided_mid`` is a parameter
    whose shot reached the end of the domain without an event, if one was hit.
    """
    n = 0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = side(shoot(mid))
        n += 1
        if s < 0:
            lo = mid
        elif s > 0:
            hi = mid
        else:
            return lo, hi, mid, n
    return lo, hi, None, n


def _first_split(a: Trajectory, b: Trajectory, tol: float) -> int:
    """Number of leading grid points on which two shots agree to ``tol``."""
    n = min(a.r.size, b.r.size)
    bad = np.nonzero(
        (np.abs(a.h[:n] - b.h[:n]) > tol)
        | (np.abs(a.dh[:n] - b.dh[:n]) > tol * (1.0 + np.abs(a.dh[:n])))
    )[0]
    return int(bad[0]) if bad.size else n


def _march(problem: _Problem, m: ModelParams, a2_lo: float, a2_hi: float, a2_tol: float,
           r0: float, orientation: int = 1, check_step: float = 0.05, max_pieces: int = 500):
    """Return the pieces ``(r_start, h, dh, r_stop)`` and the final a2 bracket.

    ``orientation=-1`` handles brackets where the larger ``a2`` undershoots.
    Slopes always overshoot when increased.
    """
    k = problem.k
    r_end = problem.r_end
    horizon = problem.horizon
    # growth rate of the unstable linearisation about h = 1
    max_piece = math.log(1e3) / math.sqrt(2.0 + k)
    side = problem.side

    def core_shot(a2, out=()):
        h0, dh0, _ = _launch(a2, m, r0)
        return _run(r0, h0, dh0, horizon, k, out, problem.events, problem.margin)

    lo, hi, undecided, n_core = _bisect(core_shot, lambda tr: orientation * side(tr),
                                        a2_lo, a2_hi, a2_tol)
    a2 = undecided if undecided is not None else 0.5 * (lo + hi)
    h0, dh0, _ = _launch(a2, m, r0)
    pieces = []
    stats = {"core_bisections": n_core, "slope_bisections": 0}
    r_cur, h_cur, dh_cur = r0, h0, dh0
    if undecided is not None:
        pieces.append((r_cur, h_cur, dh_cur, r_end))
        return pieces, (lo, hi), a2, stats

    def shot_from(r_s, h_s):
        return lambda s, out=(): _run(r_s, h_s, s, horizon, k, out, problem.events, problem.margin)

    make_lo = lambda out: core_shot(lo, out)  # noqa: E731
    make_hi = lambda out: core_shot(hi, out)  # noqa: E731
    make_mid = lambda out: core_shot(a2, out)  # noqa: E731
    for _ in range(max_pieces):
        n_chk = max(2, int(math.ceil((r_end - r_cur) / check_step)))
        chk = np.linspace(r_cur, r_end, n_chk + 1)[1:]
        t_lo, t_hi = make_lo(chk), make_hi(chk)
        n_ok = _first_split(t_lo, t_hi, MATCH_TOL)
        if (n_ok >= min(t_lo.r.size, t_hi.r.size) and n_ok >= chk.size - 1
                and r_end - r_cur <= max_piece):
            # the bracket shots agree until (at most) the last check interval
            pieces.append((r_cur, h_cur, dh_cur, r_end))
            return pieces, (lo, hi), a2, stats
        if n_ok == 0:
            raise SolverError(f"marching stalled at r={r_cur!r}")
        # cap the piece so integrator round-off amplified by the unstable mode stays small
        n_ok = min(n_ok, max(1, int(max_piece / check_step)))
        r_m = float(chk[n_ok - 1])
        mid = make_mid(chk[:n_ok])
        if mid.r.size < n_ok:
            raise SolverError(f"reference shot stopped early near r={r_cur!r}")
        h_m = float(mid.h[n_ok - 1])
        pieces.append((r_cur, h_cur, dh_cur, r_m))
        # new bracket on the slope at r_m
        shoot = shot_from(r_m, h_m)
        s_mid = float(mid.dh[n_ok - 1])
        s_lo, s_hi = float(t_lo.dh[n_ok - 1]), float(t_hi.dh[n_ok - 1])
        delta = max(abs(s_hi - s_lo), 1e-15 * (abs(s_mid) + 1e-3))
        s_lo, s_hi = min(s_lo, s_mid - delta), max(s_hi, s_mid + delta)
        for _grow in range(200):
            a, b = side(shoot(s_lo)), side(shoot(s_hi))
            if a < 0 and b > 0:
                break
            if a == 0 or b == 0:
                # one end already runs quietly to the boundary
                s_good = s_lo if a == 0 else s_hi
                pieces.append((r_m, h_m, s_good, r_end))
                return pieces, (lo, hi), a2, stats
            if a >= 0:
                s_lo -= delta
            if b <= 0:
                s_hi += delta
            delta *= 2.0
        else:
            raise BracketNotFound(f"no slope bracket at r={r_m!r}")
        s_lo, s_hi, undecided, n_sl = _bisect(shoot, side, s_lo, s_hi, 0.0)
        stats["slope_bisections"] += n_sl
        s_new = undecided if undecided is not None else 0.5 * (s_lo + s_hi)
        r_cur, h_cur, dh_cur = r_m, h_m, s_new
        if undecided is not None:
            pieces.append((r_cur, h_cur, dh_cur, r_end))
            return pieces, (lo, hi), a2, stats
        make_lo = (lambda sl: lambda out: shoot(sl, out))(s_lo)
        make_hi = (lambda sh: lambda out: shoot(sh, out))(s_hi)
        make_mid = (lambda sm: lambda out: shoot(sm, out))(s_new)
    raise SolverError("too many marching pieces")


# --------------------------------------------------------------------------
# profiles


@dataclass(frozen=True, eq=False)
class Profile:
    """Hedgehog profile sampled on ``grid`` with its shooting record.

    ``segments`` holds ``(r_start, h, dh, r_stop)`` for each ODE piece, which
    lets :meth:`evaluate` recompute the solution at arbitrary radii to
    integrator accuracy.  Profiles built from arrays alone (no segments)
    fall back to cubic Hermite interpolation.
    """

    grid: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    a2: float
    domain: dict
    solver_meta: dict = field(default_factory=dict)
    t: float | None = None
    segments: tuple = ()
    r0: float = R0_DEFAULT

    @classmethod
    def from_arrays(cls, grid, h, dh, a2: float = 0.0, domain: dict | None = None,
                    t: float | None = None) -> "Profile":
        grid = np.asarray(grid, dtype=float)
        if domain is None:
            domain = {"kind": "ball", "R": float(grid[-1])}
        return cls(grid, np.asarray(h, dtype=float), np.asarray(dh, dtype=float), float(a2),
                   domain, {"source": "arrays"}, t)

    @property
    def r_end(self) -> float:
        return float(self.grid[-1])

    @property
    def model(self) -> ModelParams:
        if self.t is None:
            raise ValueError("profile carries no reduced temperature")
        return derive_model_params(self.t, relaxed=True)

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """``(h, dh)`` at arbitrary radii in ``[0, r_end]``."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        if flat.size and (flat.min() < 0 or flat.max() > self.r_end * (1 + 1e-12)):
            raise DomainError("evaluation radius outside the profile domain")
        if not self.segments:
            spline = CubicHermiteSpline(self.grid, self.h, self.dh)
            return spline(r), spline(r, 1)
        order = np.argsort(flat, kind="stable")
        srt = flat[order]
        h_out = np.empty_like(srt)
        d_out = np.empty_like(srt)
        m = self.model
        s = series_coefficients(self.a2, m, SERIES_ORDER)
        done = 0
        inner = np.searchsorted(srt, self.r0, side="right")
        for i in range(inner):
            h_out[i], d_out[i] = s(srt[i])
        done = inner
        for j, (r_a, h_a, d_a, r_b) in enumerate(self.segments):
            last = j == len(self.segments) - 1
            stop = srt.size if last else np.searchsorted(srt, r_b, side="right")
            if stop <= done:
                continue
            pts = srt[done:stop]
            # equal radii must be integrated once; pts is sorted
            uniq, inv = np.unique(pts, return_inverse=True)
            at_start = uniq <= r_a
            out = uniq[~at_start]
            hu = np.full(uniq.size, h_a)
            du = np.full(uniq.size, d_a)
            if out.size:
                traj = _run(r_a, h_a, d_a, out[-1], m.cubic_ratio, out, ())
                hu[~at_start] = traj.h
                du[~at_start] = traj.dh
            h_out[done:stop] = hu[inv]
            d_out[done:stop] = du[inv]
            done = stop
        res_h = np.empty_like(srt)
        res_d = np.empty_like(srt)
        res_h[order] = h_out
        res_d[order] = d_out
        return res_h.reshape(r.shape), res_d.reshape(r.shape)


def _default_grid(r_end: float, n_grid: int) -> np.ndarray:
    return np.linspace(0.0, r_end, n_grid)


def _assemble(pieces, m: ModelParams, a2: float, grid: np.ndarray, domain: dict, meta: dict,
              r0: float) -> Profile:
    prof = Profile(grid, grid, grid, a2, domain, meta, m.t, tuple(pieces), r0)
    h, dh = prof.evaluate(grid)
    return Profile(grid, h, dh, a2, domain, meta, m.t, tuple(pieces), r0)


def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def _transitions(sides: Sequence[int]) -> list[int]:
    return [i for i in range(len(sides) - 1) if sides[i] != sides[i + 1]]


def solve_semi_infinite(m: ModelParams, r_max: float = 50.0, tol: float = 1e-12,
                        n_grid: int = 2001, scan: tuple[float, float, int] = (1e-4, 1e2, 61),
                        r0: float = R0_DEFAULT) -> Profile:
    """Hedgehog profile on ``[0, r_max]`` approximating the unbounded domain.

    A logarithmic scan over ``a2`` locates a P -> R pair, bisection on
    ``a2`` narrows it to ``tol``, and marching carries the solution out to
    ``r_max``.
    """
    if r_max < 30:
        warnings.warn("r_max below 30 leaves the far field poorly resolved", RuntimeWarning,
                      stacklevel=2)
    problem = _semi_infinite_problem(m, r_max)
    a_scan = _log_grid(*scan)
    outcomes = [_outcome(integrate(float(a), m, problem.horizon, events=problem.events, r0=r0),
                         float(a)) for a in a_scan]
    classes = [o.cls for o in outcomes]
    pair = next((i for i in range(len(classes) - 1)
                 if classes[i] == "P" and classes[i + 1] == "R"), None)
    if pair is None:
        raise BracketNotFound(f"no P/R pair in a2 scan over [{scan[0]}, {scan[1]}] for t={m.t}")
    pieces, bracket, a2, stats = _march(problem, m, float(a_scan[pair]),
                                        float(a_scan[pair + 1]), tol, r0)
    meta = {
        "method": "series launch + DOP853 shooting with marching restarts",
        "rtol": RTOL,
        "atol": ATOL,
        "r0": r0,
        "series_order": SERIES_ORDER,
        "a2_tol": tol,
        "a2_bracket": [bracket[0], bracket[1]],
        "match_tol": MATCH_TOL,
        "overshoot_margin": OVERSHOOT_MARGIN,
        "n_pieces": len(pieces),
        "scan_classes": "".join(c[0] for c in classes),
        "scan_range": [scan[0], scan[1], scan[2]],
        **stats,
    }
    return _assemble(pieces, m, a2, _default_grid(r_max, n_grid),
                     {"kind": "semi-infinite", "r_max": float(r_max)}, meta, r0)


def solve_finite_ball(m: ModelParams, R: float, tol: float = 1e-12, n_grid: int = 2001,
                      scan_points: int = 81, r0: float | None = None) -> Profile:
    """Solve on the ball of radius ``R`` with ``h(R) = 1``.

    Every sign change of the shot's position relative to 1 at ``r = R``
    across the ``a2`` scan is refined; the root with the lowest reduced
    energy is returned.
    """
    from .analysis import reduced_energy  # circular at import time

    if not R > 0:
        raise DomainError("ball radius must be positive")
    if r0 is None:
        r0 = min(R0_DEFAULT, R / 100.0)
    problem = _ball_problem(m, R)
    a_hi = max(10.0, 100.0 / R**2)
    a_scan = _log_grid(1e-4, a_hi, scan_points)
    sides = [problem.side(integrate(float(a), m, R, events=problem.events, r0=r0)) for a in a_scan]
    idx = _transitions(sides)
    if not idx:
        raise NoRootError(f"h(R) never reaches 1 for a2 in [1e-4, {a_hi}] at R={R}, t={m.t}")
    grid = _default_grid(R, n_grid)
    candidates = []
    for i in idx:
        lo, hi = float(a_scan[i]), float(a_scan[i + 1])
        orientation = -1 if sides[i] > 0 else 1
        pieces, bracket, a2, stats = _march(problem, m, lo, hi, tol, r0, orientation)
        meta = {
            "method": "series launch + DOP853 shooting with marching restarts",
            "rtol": RTOL,
            "atol": ATOL,
            "r0": r0,
            "series_order": SERIES_ORDER,
            "a2_tol": tol,
            "a2_bracket": [bracket[0], bracket[1]],
            "match_tol": MATCH_TOL,
            "n_pieces": len(pieces),
            "n_roots_scanned": len(idx),
            **stats,
        }
        prof = _assemble(pieces, m, a2, grid, {"kind": "ball", "R": float(R)}, meta, r0)
        candidates.append((reduced_energy(prof, m).I_h, prof))
    energies = [e for e, _ in candidates]
    best = min(range(len(candidates)), key=lambda j: energies[j])
    prof = candidates[best][1]
    prof.solver_meta["root_energies"] = energies
    prof.solver_meta["root_a2"] = [p.a2 for _, p in candidates]
    return prof

