"""Mesh construction, model parameters, and initial data.

The solver works in the shifted variable w = y - w_d, where w_d >= 0 is the
constant target state, so stabilization means driving w to zero. A state is
a vector of N+1 nodal values on the uniform grid x_i = i*h, i = 0..N.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

IC_KINDS = ("quadratic5", "cosine2", "tabulated")


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time mesh on [0,1] x [0,T].

    h and k are stored explicitly so that every operator sees one and the
    same rounding of 1/N and T/M.
    """

    N: int
    M: int
    T: float
    h: float
    k: float

    def xs(self) -> np.ndarray:
        """Spatial nodes x_i = i*h, i = 0..N."""
        return np.arange(self.N + 1, dtype=float) * self.h

    def ts(self) -> np.ndarray:
        """Time levels t_n = n*k, n = 0..M."""
        return np.arange(self.M + 1, dtype=float) * self.k


def make_grid(N: int, M: int, T: float) -> GridSpec:
    """Build a uniform mesh with N spatial intervals and M time steps.

    Parameters
    ----------
    N : int
        Number of spatial intervals, N >= 2 (N+1 nodes).
    M : int
        Number of time steps, M >= 1.
    T : float
        Final time, T > 0.
    """
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"M must be an integer >= 1, got {M!r}")
    T = float(T)
    if not np.isfinite(T) or T <= 0.0:
        raise ValueError(f"T must be a positive finite time, got {T!r}")
    return GridSpec(N=int(N), M=int(M), T=T, h=1.0 / N, k=T / M)


@dataclass(frozen=True)
class ModelParams:
    """Physical and control constants.

    nu    -- viscosity, > 0
    wd    -- target steady state, >= 0
    c0    -- feedback gain at x=0, > 0
    c1    -- feedback gain at x=1, > 0
    theta -- time-weighting of the scheme, in [0, 1] (0 explicit, 1 implicit,
             1/2 Crank-Nicolson type)
    """

    nu: float
    wd: float
    c0: float
    c1: float
    theta: float

    def __post_init__(self):
        for name in ("nu", "wd", "c0", "c1", "theta"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.nu <= 0.0:
            raise ValueError(f"nu must be > 0, got {self.nu!r}")
        if self.wd < 0.0:
            raise ValueError(f"wd must be >= 0, got {self.wd!r}")
        if self.c0 <= 0.0:
            raise ValueError(f"c0 must be > 0, got {self.c0!r}")
        if self.c1 <= 0.0:
            raise ValueError(f"c1 must be > 0, got {self.c1!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta!r}")

    @property
    def unconditional(self) -> bool:
        """True in the unconditionally stable regime theta >= 1/2."""
        return self.theta >= 0.5


@dataclass(frozen=True)
class StateField:
    """One time level of the grid function: N+1 nodal values of w."""

    values: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("state must be a 1-d vector of at least 2 nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("state contains non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class InitialCondition:
    """Initial data for the shifted variable w(x, 0).

    kind "quadratic5":  w0(x) = 5x(x-1) - wd
    kind "cosine2":     w0(x) = 2cos(pi x) - wd
    kind "tabulated":   explicit nodal values, already in the shifted
                        variable, length N+1
    """

    kind: str
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ValueError(f"unknown initial-condition kind {self.kind!r}, "
                             f"expected one of {IC_KINDS}")
        if self.kind == "tabulated":
            if self.values is None:
                raise ValueError("tabulated initial condition requires values")
            v = np.asarray(self.values, dtype=float)
            if v.ndim != 1:
                raise ValueError("tabulated values must be a 1-d vector")
            object.__setattr__(self, "values", v)
        elif self.values is not None:
            raise ValueError(f"kind {self.kind!r} takes no tabulated values")


def sample_initial(ic: InitialCondition, grid: GridSpec,
                   params: ModelParams) -> StateField:
    """Sample the initial condition on the grid nodes.

    The closed-form kinds subtract params.wd at sampling time; tabulated
    values are used verbatim and must have length N+1.
    """
    x = grid.xs()
    if ic.kind == "quadratic5":
        v = 5.0 * x * (x - 1.0) - params.wd
    elif ic.kind == "cosine2":
        v = 2.0 * np.cos(np.pi * x) - params.wd
    else:
        if ic.values.size != grid.N + 1:
            raise ValueError(f"tabulated initial condition has length "
                             f"{ic.values.size}, grid needs {grid.N + 1}")
        v = ic.values.astype(float, copy=True)
    return StateField(values=v, time_index=0)
