"""Stability constants, per-level time-step bound checks, and decay fitting.

For theta >= 1/2 the scheme is unconditionally stable and admits an
exponential decay rate bound; for theta < 1/2 stability is conditional on
five time-step ceilings that depend on the running solution's sup-norm, so
they are evaluated a-posteriori per level (and a-priori only through a
caller-chosen proxy for that sup-norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .grid import GridSpec, ModelParams

UNCONDITIONAL = "unconditional"
CONDITIONAL = "conditional"

_LIMIT_NAMES = ("k1", "k2", "k3", "k4", "k5")


class InsufficientDataError(ValueError):
    """Too few usable levels to fit a decay rate."""


@dataclass(frozen=True)
class StabilityBounds:
    """Stability constants at one parameter/grid/state point.

    In the unconditional regime (theta >= 1/2) only alpha_max is meaningful.
    In the conditional regime k_limits holds the five step ceilings and
    betas the corresponding positivity margins at the current step size:
    index 0 the diffusion/transport/convection row, 1 and 2 the left-end
    linear and cubic gains, 3 and 4 the right-end ones.
    """

    regime: str
    alpha_max: float
    k_limits: Tuple[float, ...] = ()
    betas: Tuple[float, ...] = ()

    @property
    def k_min(self) -> float:
        return min(self.k_limits) if self.k_limits else math.inf


def decay_exponent_bound(params: ModelParams) -> float:
    """Admissible exponential decay rate, (theta^2/2) min(nu, (c0+wd)/2,
    (c1+3wd)/2). Requires theta >= 1/2."""
    if params.theta < 0.5:
        raise ValueError("decay exponent bound applies to theta >= 1/2 only")
    m = min(params.nu, (params.c0 + params.wd) / 2.0,
            (params.c1 + 3.0 * params.wd) / 2.0)
    return (params.theta ** 2 / 2.0) * m


def alpha_admissible(params: ModelParams, k: float, alpha: float) -> bool:
    """Step-size condition tying the decay rate to k:
    exp(2 alpha k) <= 1 + theta^2 k min(nu, (c0+wd)/2, (c1+3wd)/2).

    Strictly false at alpha = decay_exponent_bound for every k > 0 (the
    exponential beats its tangent), so certified rates sit strictly below
    the bound; see feasible_decay_exponent.
    """
    m = min(params.nu, (params.c0 + params.wd) / 2.0,
            (params.c1 + 3.0 * params.wd) / 2.0)
    return math.exp(2.0 * alpha * k) <= 1.0 + params.theta ** 2 * k * m


def feasible_decay_exponent(params: ModelParams, k: float) -> float:
    """Largest decay rate certifiable at step size k: the bound capped by
    the step condition, min(bound, ln(1 + theta^2 k m) / (2k))."""
    bound = decay_exponent_bound(params)
    m = min(params.nu, (params.c0 + params.wd) / 2.0,
            (params.c1 + 3.0 * params.wd) / 2.0)
    return min(bound, math.log1p(params.theta ** 2 * k * m) / (2.0 * k))


def beta_star(params: ModelParams, k: float, alpha: float) -> float:
    """Summed-dissipation coefficient for the unconditional-regime decay
    estimate; diagnostic only, never used to gate execution."""
    e = math.exp(-2.0 * alpha * k)
    growth = (1.0 - e) / k
    t2 = params.theta ** 2
    return min(t2 * params.nu * e - growth,
               e * t2 * (params.c0 + params.wd) / 2.0 - growth,
               e * t2 * (params.c1 + 3.0 * params.wd) / 2.0 - growth)


def timestep_limits(params: ModelParams, grid: GridSpec,
                    w_inf: float) -> StabilityBounds:
    """Conditional-regime step ceilings k1..k5 and margins at the current k.

    w_inf is the caller's proxy for the sup-norm of the theta-combined
    state; ceilings that divide by it are +inf when it is zero. Requires
    theta < 1/2.
    """
    if params.theta >= 0.5:
        raise ValueError("timestep limits apply to theta < 1/2 only")
    if math.isnan(w_inf):
        raise ValueError("w_inf must not be NaN")
    w_inf = abs(float(w_inf))
    f = 1.0 - 2.0 * params.theta
    h = grid.h
    nu, wd, c0, c1 = params.nu, params.wd, params.c0, params.c1
    wsq = w_inf * w_inf

    k1 = 12.0 * nu * h * h / (f * (108.0 * nu * nu + 18.0 * h * h * wd * wd
                                   + 19.0 * h * h * wsq))
    k2 = h / (f * 24.0 * (c0 + wd))
    k4 = h / (f * 24.0 * (c1 + wd))
    if wsq > 0.0 and np.isfinite(wsq):
        k3 = 9.0 * c0 * h / (f * 32.0 * wsq)
        k5 = 9.0 * c1 * h / (f * 32.0 * wsq)
    elif not np.isfinite(wsq):
        k3 = 0.0
        k5 = 0.0
    else:
        k3 = math.inf
        k5 = math.inf

    k = grid.k
    b1 = 2.0 * nu - k * f * (18.0 * nu * nu / (h * h) + 3.0 * wd * wd
                             + (19.0 / 6.0) * wsq)
    b2 = (c0 + wd) - k * f * (24.0 / h) * (c0 + wd) ** 2
    b3 = 1.0 / (3.0 * c0) - k * f * (32.0 / (27.0 * c0 * c0 * h)) * wsq
    b4 = (c1 + wd) - k * f * (24.0 / h) * (c1 + wd) ** 2
    b5 = 1.0 / (3.0 * c1) - k * f * (32.0 / (27.0 * c1 * c1 * h)) * wsq

    alpha = (params.theta ** 2 / 4.0) * min(b1, b2, b4)
    return StabilityBounds(regime=CONDITIONAL, alpha_max=max(0.0, alpha),
                           k_limits=(k1, k2, k3, k4, k5),
                           betas=(b1, b2, b3, b4, b5))


def stability_bounds(params: ModelParams, grid: GridSpec,
                     w_inf: float = 0.0) -> StabilityBounds:
    """Regime-dispatching view of the stability constants."""
    if params.unconditional:
        return StabilityBounds(regime=UNCONDITIONAL,
                               alpha_max=decay_exponent_bound(params))
    return timestep_limits(params, grid, w_inf)


@dataclass(frozen=True)
class BoundVerdict:
    """Whether the current step size clears every a-posteriori ceiling."""

    satisfied: bool
    offending: Optional[str]
    k_min: float


def check_step(params: ModelParams, grid: GridSpec, w_inf: float) -> BoundVerdict:
    """A-posteriori verdict at one level: k against the ceilings recomputed
    with the achieved sup-norm w_inf. Requires theta < 1/2."""
    bounds = timestep_limits(params, grid, w_inf)
    for name, limit in zip(_LIMIT_NAMES, bounds.k_limits):
        if grid.k >= limit:
            return BoundVerdict(satisfied=False, offending=name,
                                k_min=bounds.k_min)
    return BoundVerdict(satisfied=True, offending=None, k_min=bounds.k_min)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential decay rate of the weighted L2 norm."""

    alpha_hat: float
    window: Tuple[float, float]
    r_squared: float


def fit_decay(traj, window_fraction: float = 0.5) -> DecayFit:
    """Fit ln(l2 norm) against time over the trailing window of a run.

    Only levels with positive norm participate; the default window skips the
    initial transient. Raises InsufficientDataError below 3 usable points.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must lie in (0, 1]")
    n_levels = traj.times.size
    start = int(round(n_levels * (1.0 - window_fraction)))
    start = min(start, n_levels - 1)
    t = traj.times[start:]
    v = traj.l2[start:]
    keep = v > 0.0
    t, v = t[keep], v[keep]
    if t.size < 3:
        raise InsufficientDataError(
            f"decay fit needs at least 3 levels with positive norm, got {t.size}")
    y = np.log(v)
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return DecayFit(alpha_hat=float(-slope),
                    window=(float(t[0]), float(t[-1])),
                    r_squared=float(r2))
