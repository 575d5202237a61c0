"""Blow-up detection, blow-up time extrapolation and threshold scans."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from fracdamp.oracles import in_theorem_range
from fracdamp.solver import DEFAULT_CAP, ProblemSpec, Status, Trajectory, solve

TAIL_NODES = 20
MIN_TAIL_NODES = 8


class EstimationError(ValueError):
    """Not enough trajectory data to extrapolate a blow-up time."""


@dataclass(frozen=True)
class BlowupReport:
    status: Status
    t_escape: float | None = None
    t_star_estimate: float | None = None
    fit_quality: float | None = None

    def __post_init__(self) -> None:
        if (self.status == "blowup") != (self.t_escape is not None):
            raise ValueError("t_escape must be given exactly when status is 'blowup'")
        if self.t_star_estimate is not None and self.status != "blowup":
            raise ValueError("t_star_estimate requires status 'blowup'")


@dataclass(frozen=True)
class ScanCell:
    gamma: float
    m: float
    report: BlowupReport
    in_theorem_range: bool


def _tail(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    t, y = traj.t, np.abs(traj.y)
    keep = np.isfinite(y) & (y > 0) & (y <= math.sqrt(traj.cap))
    keep[0] = False
    idx = np.flatnonzero(keep)[-TAIL_NODES:]
    if idx.size < MIN_TAIL_NODES:
        raise EstimationError(
            f"need at least {MIN_TAIL_NODES} tail nodes below sqrt(cap), got {idx.size}"
        )
    return t[idx], y[idx]


def _fit(t_star: float, t: np.ndarray, logy: np.ndarray) -> tuple[float, float]:
    """Least-squares line through ``(log(t* - t), log y)``; returns (SSR, R^2)."""
    x = np.log(t_star - t)
    xc = x - x.mean()
    yc = logy - logy.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0 or syy == 0:
        return syy, 0.0
    ssr = syy - float(xc @ yc) ** 2 / sxx
    return max(ssr, 0.0), 1.0 - max(ssr, 0.0) / syy


def estimate_blowup_time(traj: Trajectory, m: float) -> tuple[float, float]:
    r"""Extrapolate the blow-up time from the ansatz :math:`y \approx C (t^* - t)^{-q}`.

    Both :math:`C` and :math:`q` are fitted for each trial :math:`t^*`; the
    residual is minimized over :math:`t^*` by a log-spaced scan refined with
    a bounded scalar search. The classical rate :math:`q = 1/(m - 1)` only
    seeds the scan. Returns :math:`t^*` and the :math:`R^2` of the fit.
    """
    if not m > 1:
        raise ValueError(f"m must exceed 1: {m}")
    if traj.status != "blowup" or traj.t_escape is None:
        raise EstimationError(f"trajectory did not blow up: {traj.status}")

    t, y = _tail(traj)
    logy = np.log(y)
    h = traj.h

    lower = max(t[-1], traj.t_escape - h)
    horizon = traj.t_end if math.isfinite(traj.t_end) else traj.t_escape
    upper = 1.1 * horizon
    if not upper > lower:
        raise EstimationError("no room to place the blow-up time inside the horizon")

    # distances from `lower`, log-spaced from a tiny fraction of a step to the horizon
    deltas = np.geomspace(1.0e-6 * h, upper - lower, 400)

    # seed from the last two nodes with the classical rate
    q = 1.0 / (m - 1.0)
    r = (y[-1] / y[-2]) ** (1.0 / q)
    if r > 1:
        seed = (r * t[-1] - t[-2]) / (r - 1.0) - lower
        if 0 < seed < upper - lower:
            deltas = np.sort(np.append(deltas, seed))

    ssr = np.array([_fit(lower + d, t, logy)[0] for d in deltas])
    i = int(np.argmin(ssr))
    lo = math.log(deltas[max(i - 1, 0)])
    hi = math.log(deltas[min(i + 1, deltas.size - 1)])

    if hi > lo:
        res = optimize.minimize_scalar(
            lambda s: _fit(lower + math.exp(s), t, logy)[0],
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1.0e-10},
        )
        best = math.exp(res.x) if res.fun <= ssr[i] else deltas[i]
    else:
        best = deltas[i]

    t_star = lower + best
    return float(t_star), float(max(_fit(t_star, t, logy)[1], 0.0))


def detect(traj: Trajectory, cap: float = DEFAULT_CAP, m: float | None = None) -> BlowupReport:
    """Classify a trajectory.

    When *m* is given and the trajectory blew up, the report also carries the
    extrapolated blow-up time, or leaves it empty if the tail is too short.
    """
    if cap != traj.cap:
        raise ValueError(f"cap {cap} differs from the cap {traj.cap} used by the solver")
    if traj.status != "blowup":
        return BlowupReport(status=traj.status)
    if m is None:
        return BlowupReport(status="blowup", t_escape=traj.t_escape)

    try:
        t_star, quality = estimate_blowup_time(traj, m)
    except EstimationError:
        return BlowupReport(status="blowup", t_escape=traj.t_escape)
    return BlowupReport(
        status="blowup", t_escape=traj.t_escape, t_star_estimate=t_star, fit_quality=quality
    )


def _scan_cell(args: tuple) -> ScanCell:
    alpha, beta, b, gamma, m, horizon, n, cap = args
    flag = in_theorem_range(alpha, beta, gamma, m)
    try:
        spec = ProblemSpec(alpha=alpha, beta=beta, gamma=gamma, m=m, b=b)
        rep = detect(solve(spec, horizon, n, cap), cap, m)
    except (ValueError, ArithmeticError):
        rep = BlowupReport(status="stagnated")
    return ScanCell(gamma=gamma, m=m, report=rep, in_theorem_range=flag)


def scan(
    alpha: float,
    beta: float,
    b: float,
    gamma_grid: Sequence[float],
    m_grid: Sequence[float],
    horizon: float,
    n: int,
    cap: float = DEFAULT_CAP,
    workers: int = 1,
) -> list[ScanCell]:
    """Solve the power-source problem on every ``(gamma, m)`` cell.

    Cells are ordered row-major (``gamma`` outer, ``m`` inner) regardless of
    *workers*. A cell whose solve fails is reported as ``stagnated``.
    """
    if not gamma_grid or not m_grid:
        raise ValueError("gamma and m grids must be nonempty")
    if not 0 <= beta <= alpha <= 1 or alpha == 0:
        raise ValueError(f"need 0 <= beta <= alpha <= 1: alpha = {alpha}, beta = {beta}")
    if any(not m > 1 for m in m_grid):
        raise ValueError(f"every m must exceed 1: {list(m_grid)}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1: {workers}")

    tasks = [
        (alpha, beta, b, float(g), float(m), horizon, n, cap)
        for g in gamma_grid
        for m in m_grid
    ]
    if workers == 1:
        return [_scan_cell(task) for task in tasks]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_cell, tasks))
