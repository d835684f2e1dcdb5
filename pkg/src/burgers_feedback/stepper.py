"""Time stepping: one-step advancement and full-trajectory runs.

theta = 0 advances explicitly; theta > 0 solves the nonlinear tridiagonal
system for the next level with Newton's method, warm-started from the
previous level, with a pivot-free Thomas solve of each linearization.

Boundary data are either the feedback controllers (controlled runs), zero
Neumann data (uncontrolled runs), or caller-supplied flux values (the bypass
used by truncation studies); see the `flux` argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .grid import GridSpec, InitialCondition, ModelParams, StateField, sample_initial
from .operators import feedback_flux_left, feedback_flux_right, norms

BLOWUP_LIMIT = 1e8

FluxPair = Optional[Tuple[float, float]]


class SingularTridiagonalError(RuntimeError):
    """A Thomas pivot fell below the detection threshold (degenerate
    linearization)."""


class NonConvergenceError(RuntimeError):
    """Newton exhausted its iteration budget or diverged; the step failed."""

    def __init__(self, message, stats=None, trajectory=None, time_index=None):
        super().__init__(message)
        self.stats = stats
        self.trajectory = trajectory
        self.time_index = time_index


class BlowUpError(RuntimeError):
    """The state left the finite range (non-finite entries or sup-norm beyond
    BLOWUP_LIMIT); witness of instability."""

    def __init__(self, message, time_index=None, trajectory=None):
        super().__init__(message)
        self.time_index = time_index
        self.trajectory = trajectory


@dataclass(frozen=True)
class Tridiagonal:
    """Banded storage of an (N+1) x (N+1) tridiagonal matrix."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def to_dense(self) -> np.ndarray:
        n = self.diag.size
        a = np.zeros((n, n))
        a[np.arange(n), np.arange(n)] = self.diag
        a[np.arange(1, n), np.arange(n - 1)] = self.lower
        a[np.arange(n - 1), np.arange(1, n)] = self.upper
        return a


@dataclass(frozen=True)
class NewtonStats:
    """Convergence record of one implicit step."""

    iterations: int
    final_residual_inf: float
    final_step_inf: float
    converged: bool


def _flux_args(flux: FluxPair) -> Tuple[bool, float, float]:
    if flux is None:
        return True, 0.0, 0.0
    f0, f1 = flux
    return False, float(f0), float(f1)


def _check_candidate(w: np.ndarray, grid: GridSpec, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.N + 1,):
        raise ValueError(f"{name} has shape {w.shape}, grid needs ({grid.N + 1},)")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} contains non-finite entries")
    return w


def residual(w_next: np.ndarray, w_n: np.ndarray, grid: GridSpec,
             params: ModelParams, flux: FluxPair = None) -> np.ndarray:
    """Scheme rows F_i at candidate w_next given level w_n.

    F vanishes identically exactly when w_next satisfies the step.
    """
    w_next = _check_candidate(w_next, grid, "candidate state")
    w_n = _check_candidate(w_n, grid, "previous state")
    use_fb, f0, f1 = _flux_args(flux)
    return _kernels.residual_rows(w_next, w_n, grid.h, grid.k, params.theta,
                                  params.nu, params.wd, params.c0, params.c1,
                                  use_fb, f0, f1)


def jacobian(w_next: np.ndarray, w_n: np.ndarray, grid: GridSpec,
             params: ModelParams, flux: FluxPair = None) -> Tridiagonal:
    """Analytic derivative of the residual rows with respect to w_next."""
    if params.theta == 0.0:
        raise ValueError("theta=0 is the explicit path and has no Jacobian")
    w_next = _check_candidate(w_next, grid, "candidate state")
    w_n = _check_candidate(w_n, grid, "previous state")
    use_fb, _, _ = _flux_args(flux)
    lo, di, up = _kernels.jacobian_bands(w_next, w_n, grid.h, grid.k,
                                         params.theta, params.nu, params.wd,
                                         params.c0, params.c1, use_fb)
    return Tridiagonal(lower=lo, diag=di, upper=up)


def thomas_solve(tri: Tridiagonal, rhs: np.ndarray) -> np.ndarray:
    """Solve tri * x = rhs by the Thomas algorithm (no pivoting)."""
    x, st = _kernels.thomas(tri.lower, tri.diag, tri.upper,
                            np.asarray(rhs, dtype=float))
    if st == _kernels.SINGULAR:
        raise SingularTridiagonalError("zero pivot in tridiagonal solve")
    return x


def newton_step(w_n: np.ndarray, grid: GridSpec, params: ModelParams,
                tol: float = 1e-12, max_iter: int = 50,
                flux: FluxPair = None) -> Tuple[np.ndarray, NewtonStats]:
    """Advance one implicit step by Newton iteration started at w_n.

    Convergence means the residual sup-norm or the last update sup-norm
    dropped to tol; in double precision the residual floor grows like
    nu/h^2 * eps, so on fine meshes the update criterion is the one that
    fires.
    """
    if params.theta == 0.0:
        raise ValueError("theta=0 is the explicit path; use explicit_step")
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol!r}")
    w_n = _check_candidate(w_n, grid, "previous state")
    use_fb, f0, f1 = _flux_args(flux)
    w, it, res, step, status = _kernels.newton_solve(
        w_n, grid.h, grid.k, params.theta, params.nu, params.wd,
        params.c0, params.c1, use_fb, f0, f1, float(tol), int(max_iter))
    stats = NewtonStats(iterations=int(it), final_residual_inf=float(res),
                        final_step_inf=float(step),
                        converged=status == _kernels.OK)
    if status == _kernels.SINGULAR:
        raise SingularTridiagonalError(
            f"zero pivot in Newton linearization after {it} iterations")
    if status == _kernels.NONFINITE:
        raise NonConvergenceError(
            f"Newton iterate became non-finite after {it} iterations",
            stats=stats)
    if status == _kernels.MAXITER:
        raise NonConvergenceError(
            f"Newton did not converge in {max_iter} iterations "
            f"(residual {res:.3e}, step {step:.3e})", stats=stats)
    return w, stats


def explicit_step(w_n: np.ndarray, grid: GridSpec, params: ModelParams,
                  flux: FluxPair = None) -> np.ndarray:
    """One explicit update w_next = w_n - k * S(w_n) (theta = 0 only)."""
    if params.theta != 0.0:
        raise ValueError("explicit_step requires theta=0")
    w_n = _check_candidate(w_n, grid, "previous state")
    use_fb, f0, f1 = _flux_args(flux)
    w = _kernels.explicit_rows(w_n, grid.h, grid.k, params.nu, params.wd,
                               params.c0, params.c1, use_fb, f0, f1)
    if not np.all(np.isfinite(w)):
        raise BlowUpError("explicit update produced non-finite entries")
    return w


@dataclass
class RunTrajectory:
    """Per-level scalar records of a run, plus the final state.

    For a completed run every array has M+1 entries (levels 0..M); a run
    aborted by blow-up or Newton failure retains the levels reached. g0/gN
    are the boundary flux values actually applied (zero when uncontrolled).
    """

    grid: GridSpec
    params: ModelParams
    controlled: bool
    times: np.ndarray
    l2: np.ndarray
    h1_semi: np.ndarray
    linf: np.ndarray
    w0: np.ndarray
    wN: np.ndarray
    g0: np.ndarray
    gN: np.ndarray
    newton_iters: np.ndarray
    newton_residuals: np.ndarray
    final: StateField
    status: str = "completed"
    failure_index: Optional[int] = None
    history: Optional[np.ndarray] = None
    bound_checks: Optional[list] = None

    @property
    def levels(self) -> int:
        return self.times.size

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def run(ic: InitialCondition, grid: GridSpec, params: ModelParams, *,
        controlled: bool = True, store_history: bool = False,
        monitors: bool = True, newton_tol: float = 1e-12,
        newton_max_iter: int = 50) -> RunTrajectory:
    """Advance M steps from the sampled initial condition.

    Records norms, boundary values, applied controller values, and Newton
    stats at every level. With monitors on and theta < 1/2, the a-posteriori
    time-step bounds are checked per level. Raises BlowUpError or
    NonConvergenceError with the partial trajectory attached.
    """
    from .stability import check_step  # local import to avoid a cycle

    w = sample_initial(ic, grid, params).values.copy()
    flux = None if controlled else (0.0, 0.0)
    use_monitors = monitors and params.theta < 0.5

    m1 = grid.M + 1
    times = grid.ts()
    l2 = np.empty(m1)
    h1 = np.empty(m1)
    linf = np.empty(m1)
    w0 = np.empty(m1)
    wN = np.empty(m1)
    g0 = np.empty(m1)
    gN = np.empty(m1)
    iters = np.zeros(m1, dtype=int)
    resid = np.zeros(m1)
    history = np.empty((m1, grid.N + 1)) if store_history else None
    checks = [] if use_monitors else None

    def record(level: int, state: np.ndarray) -> None:
        rep = norms(state, grid.h)
        l2[level] = rep.l2
        h1[level] = rep.h1_semi
        linf[level] = rep.linf
        w0[level] = state[0]
        wN[level] = state[-1]
        if controlled:
            g0[level] = feedback_flux_left(state[0], params)
            gN[level] = feedback_flux_right(state[-1], params)
        else:
            g0[level] = 0.0
            gN[level] = 0.0
        if history is not None:
            history[level] = state
        if checks is not None:
            checks.append(check_step(params, grid, rep.linf))

    def partial(level_count: int, state: np.ndarray, status: str,
                fail_index: int) -> RunTrajectory:
        sl = slice(0, level_count)
        return RunTrajectory(
            grid=grid, params=params, controlled=controlled,
            times=times[sl].copy(), l2=l2[sl].copy(), h1_semi=h1[sl].copy(),
            linf=linf[sl].copy(), w0=w0[sl].copy(), wN=wN[sl].copy(),
            g0=g0[sl].copy(), gN=gN[sl].copy(),
            newton_iters=iters[sl].copy(), newton_residuals=resid[sl].copy(),
            final=StateField(values=state, time_index=level_count - 1),
            status=status, failure_index=fail_index,
            history=history[sl].copy() if history is not None else None,
            bound_checks=checks)

    record(0, w)
    for n in range(grid.M):
        try:
            if params.theta == 0.0:
                w_next = explicit_step(w, grid, params, flux=flux)
            else:
                w_next, stats = newton_step(w, grid, params, tol=newton_tol,
                                            max_iter=newton_max_iter, flux=flux)
                iters[n + 1] = stats.iterations
                resid[n + 1] = stats.final_residual_inf
        except BlowUpError as err:
            raise BlowUpError(f"blow-up at time level {n + 1}",
                              time_index=n + 1,
                              trajectory=partial(n + 1, w, "blowup", n + 1)) from err
        except NonConvergenceError as err:
            raise NonConvergenceError(
                f"Newton failure at time level {n + 1}: {err}",
                stats=err.stats, time_index=n + 1,
                trajectory=partial(n + 1, w, "nonconvergence", n + 1)) from err
        if not np.all(np.isfinite(w_next)) or np.max(np.abs(w_next)) > BLOWUP_LIMIT:
            raise BlowUpError(f"blow-up at time level {n + 1}",
                              time_index=n + 1,
                              trajectory=partial(n + 1, w, "blowup", n + 1))
        w = w_next
        record(n + 1, w)

    return RunTrajectory(
        grid=grid, params=params, controlled=controlled,
        times=times, l2=l2, h1_semi=h1, linf=linf, w0=w0, wN=wN,
        g0=g0, gN=gN, newton_iters=iters, newton_residuals=resid,
        final=StateField(values=w, time_index=grid.M),
        status="completed", failure_index=None,
        history=history, bound_checks=checks)
