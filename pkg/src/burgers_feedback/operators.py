"""Discrete difference operators, boundary feedback laws, and norms.

All functions act on plain 1-d float arrays of N+1 nodal values; the grid
enters only through the spacing h. The weighted discrete L2 inner product
uses trapezoid weights (h/2, h, ..., h, h/2); the interior product sums
indices 1..N with weight h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import ModelParams


def dx_forward(w: np.ndarray, i: int, h: float) -> float:
    """(w[i+1] - w[i]) / h, valid for 0 <= i <= N-1."""
    if not 0 <= i <= w.shape[0] - 2:
        raise IndexError(f"forward difference needs 0 <= i <= N-1, got {i}")
    return (w[i + 1] - w[i]) / h


def dx_backward(w: np.ndarray, i: int, h: float) -> float:
    """(w[i] - w[i-1]) / h, valid for 1 <= i <= N."""
    if not 1 <= i <= w.shape[0] - 1:
        raise IndexError(f"backward difference needs 1 <= i <= N, got {i}")
    return (w[i] - w[i - 1]) / h


def dx_central(w: np.ndarray, i: int, h: float) -> float:
    """(w[i+1] - w[i-1]) / (2h), valid for 1 <= i <= N-1."""
    if not 1 <= i <= w.shape[0] - 2:
        raise IndexError(f"central difference needs 1 <= i <= N-1, got {i}")
    return (w[i + 1] - w[i - 1]) / (2.0 * h)


def dx2_interior(w: np.ndarray, i: int, h: float) -> float:
    """(w[i+1] - 2 w[i] + w[i-1]) / h^2, valid for 1 <= i <= N-1."""
    if not 1 <= i <= w.shape[0] - 2:
        raise IndexError(f"second difference needs 1 <= i <= N-1, got {i}")
    return (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h)


def theta_combine(wn: np.ndarray, wnp1: np.ndarray, theta: float) -> np.ndarray:
    """Pointwise convex combination theta*wnp1 + (1-theta)*wn."""
    wn = np.asarray(wn, dtype=float)
    wnp1 = np.asarray(wnp1, dtype=float)
    if wn.shape != wnp1.shape:
        raise ValueError(f"length mismatch: {wn.shape} vs {wnp1.shape}")
    return theta * wnp1 + (1.0 - theta) * wn


def nonlinear_term(w: np.ndarray, i: int, h: float) -> float:
    """Skew-averaged discretization of the convection product w*w_x at node i.

    Derived from writing w*w_x as (w*w_x + (w^2)_x)/3; the one-sided boundary
    forms keep the discrete cubic identity exact (see nonlinear_term_field).
    """
    n = w.shape[0] - 1
    if not 0 <= i <= n:
        raise IndexError(f"node index out of range: {i}")
    if i == 0:
        return (2.0 * w[0] + w[1]) * (w[1] - w[0]) / (3.0 * h)
    if i == n:
        return (2.0 * w[n] + w[n - 1]) * (w[n] - w[n - 1]) / (3.0 * h)
    return (w[i - 1] + w[i] + w[i + 1]) * (w[i + 1] - w[i - 1]) / (6.0 * h)


def nonlinear_term_field(w: np.ndarray, h: float) -> np.ndarray:
    """Whole-field convenience form of nonlinear_term.

    Satisfies the exact cubic identity
    inner_l2(nonlinear_term_field(w), w) = (w_N^3 - w_0^3) / 3.
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    out[0] = (2.0 * w[0] + w[1]) * (w[1] - w[0]) / (3.0 * h)
    out[1:-1] = (w[:-2] + w[1:-1] + w[2:]) * (w[2:] - w[:-2]) / (6.0 * h)
    out[-1] = (2.0 * w[-1] + w[-2]) * (w[-1] - w[-2]) / (3.0 * h)
    return out


def feedback_flux_left(w0: float, params: ModelParams) -> float:
    """Feedback Neumann datum at x=0: ((c0+wd) w0 + 2 w0^3 / (9 c0)) / nu."""
    return _kernels.flux_left(float(w0), params.nu, params.wd, params.c0)


def feedback_flux_right(wN: float, params: ModelParams) -> float:
    """Feedback Neumann datum at x=1: -((c1+wd) wN + 2 wN^3 / (9 c1)) / nu."""
    return _kernels.flux_right(float(wN), params.nu, params.wd, params.c1)


def feedback_flux_left_deriv(w0: float, params: ModelParams) -> float:
    """d/dw0 of feedback_flux_left."""
    return _kernels.flux_left_deriv(float(w0), params.nu, params.wd, params.c0)


def feedback_flux_right_deriv(wN: float, params: ModelParams) -> float:
    """d/dwN of feedback_flux_right."""
    return _kernels.flux_right_deriv(float(wN), params.nu, params.wd, params.c1)


@dataclass(frozen=True)
class BoundaryControllerEval:
    """Controller values at the two boundary nodes.

    Both vanish at the target state; for wd >= 0 the left value has the sign
    of the boundary state and the right value the opposite sign.
    """

    g0: float
    gN: float


def evaluate_controllers(w: np.ndarray, params: ModelParams) -> BoundaryControllerEval:
    """Evaluate both feedback laws at the endpoints of a state."""
    return BoundaryControllerEval(
        g0=feedback_flux_left(w[0], params),
        gN=feedback_flux_right(w[-1], params),
    )


def dx2_boundary(w: np.ndarray, params: ModelParams, end: str, h: float) -> float:
    """Boundary second difference folding in the feedback Neumann datum.

    left:  (2/h) (dx_forward(w, 0) - g0(w[0]))
    right: (2/h) (-dx_backward(w, N) + gN(w[N]))
    """
    if end == "left":
        return (2.0 / h) * ((w[1] - w[0]) / h - feedback_flux_left(w[0], params))
    if end == "right":
        n = w.shape[0] - 1
        return (2.0 / h) * (-(w[n] - w[n - 1]) / h
                            + feedback_flux_right(w[n], params))
    raise ValueError(f"end must be 'left' or 'right', got {end!r}")


def inner_l2(w: np.ndarray, v: np.ndarray, h: float) -> float:
    """Weighted discrete L2 inner product with trapezoid endpoint weights."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {v.shape}")
    p = w * v
    return h * (0.5 * p[0] + p[1:-1].sum() + 0.5 * p[-1])


def inner_h(w: np.ndarray, v: np.ndarray, h: float) -> float:
    """Interior inner product h * sum_{i=1..N} w_i v_i."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {v.shape}")
    return h * float(np.dot(w[1:], v[1:]))


@dataclass(frozen=True)
class NormReport:
    """Norms of one state: weighted L2, interior L2, sup, and the backward-
    difference seminorm (discrete H1)."""

    l2: float
    lh: float
    linf: float
    h1_semi: float


def norms(w: np.ndarray, h: float) -> NormReport:
    """All discrete norms used by the stability and error machinery."""
    w = np.asarray(w, dtype=float)
    diffs = (w[1:] - w[:-1]) / h
    return NormReport(
        l2=float(np.sqrt(inner_l2(w, w, h))),
        lh=float(np.sqrt(h * np.dot(w[1:], w[1:]))),
        linf=float(np.max(np.abs(w))),
        h1_semi=float(np.sqrt(h * np.dot(diffs, diffs))),
    )


def initial_energy_proxy(w: np.ndarray, h: float) -> float:
    """Seminorm^2 + endpoint squares + endpoint fourth powers.

    Diagnostic only: the mix of quadratic and quartic endpoint terms is not
    homogeneous, so this is not a norm. It is the quantity that bounds the
    decay estimates' right-hand sides, reported as-is.
    """
    w = np.asarray(w, dtype=float)
    diffs = (w[1:] - w[:-1]) / h
    return float(h * np.dot(diffs, diffs) + w[0] ** 2 + w[-1] ** 2
                 + w[0] ** 4 + w[-1] ** 4)
