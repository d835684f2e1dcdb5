"""Self-convergence studies, controller-error measurement, and truncation
order verification.

No closed-form solution exists for the controlled problem, so errors are
self-convergence errors between a run and the run at doubled resolution,
compared on shared nodes (spatial) or coinciding time levels (temporal).
Each study row reports the error of one (coarse, fine) pair, labeled by the
finer resolution, and the observed order log2 of the ratio of successive
row errors.

State errors default to the final-level difference (sample="final"), which
is what the golden tables report; sample="all" takes the max over every
coinciding level instead, where the incompatible-corner startup transient
dominates. Controller errors always take the max over coinciding levels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .grid import GridSpec, InitialCondition, ModelParams, make_grid
from .stepper import RunTrajectory, residual, run

SPATIAL = "spatial"
TEMPORAL = "temporal"
STATE = "state"
CONTROLLER = "controller"


def _coarse_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def _require_history(traj: RunTrajectory, name: str) -> np.ndarray:
    if traj.history is None:
        raise ValueError(f"{name} was run without store_history")
    return traj.history


def _errs_from_diff(diff: np.ndarray, grid) -> Tuple[float, float]:
    err_inf = float(np.max(np.abs(diff)))
    weights = _coarse_weights(grid.N, grid.h)
    per_level = np.sqrt((diff * diff) @ weights)
    return err_inf, float(np.max(per_level))


def spatial_self_error(run_h: RunTrajectory, run_h2: RunTrajectory,
                       sample: str = "final") -> Tuple[float, float]:
    """Errors between a run and its half-h companion on the coarse nodes.

    Returns (max-norm error, weighted discrete L2 error with coarse-grid
    weights). sample="final" compares the final states; sample="all" takes
    the max over every stored level (requires store_history on both runs).
    Both runs must share M, T, and params, with run_h2 at doubled N.
    """
    if run_h2.grid.N != 2 * run_h.grid.N:
        raise ValueError(f"fine run must double N: {run_h.grid.N} vs "
                         f"{run_h2.grid.N}")
    if run_h.grid.M != run_h2.grid.M:
        raise ValueError(f"M mismatch: {run_h.grid.M} vs {run_h2.grid.M}")
    if sample == "final":
        diff = run_h2.final.values[::2] - run_h.final.values
    elif sample == "all":
        diff = _require_history(run_h2, "fine run")[:, ::2] \
            - _require_history(run_h, "coarse run")
    else:
        raise ValueError(f"sample must be 'final' or 'all', got {sample!r}")
    return _errs_from_diff(diff, run_h.grid)


def temporal_self_error(run_k: RunTrajectory, run_k2: RunTrajectory,
                        sample: str = "final") -> Tuple[float, float]:
    """Errors between a run and its half-k companion at coinciding levels.

    Level n of the coarse run coincides with level 2n of the fine run; the
    norms match the spatial comparison. Requires equal N and doubled M.
    """
    if run_k.grid.N != run_k2.grid.N:
        raise ValueError(f"N mismatch: {run_k.grid.N} vs {run_k2.grid.N}")
    if run_k2.grid.M != 2 * run_k.grid.M:
        raise ValueError(f"fine run must double M: {run_k.grid.M} vs "
                         f"{run_k2.grid.M}")
    if sample == "final":
        diff = run_k2.final.values - run_k.final.values
    elif sample == "all":
        diff = _require_history(run_k2, "fine run")[::2] \
            - _require_history(run_k, "coarse run")
    else:
        raise ValueError(f"sample must be 'final' or 'all', got {sample!r}")
    return _errs_from_diff(diff, run_k.grid)


def controller_error(run_a: RunTrajectory, run_b: RunTrajectory,
                     sample: str = "all") -> Tuple[float, float]:
    """Controller-value differences at coinciding levels.

    Works for both spatial pairs (equal M) and temporal pairs (doubled M);
    uses the per-level boundary-controller records, so full history is not
    needed. sample="all" (the default, and what the golden controller table
    reports) takes the max over every coinciding level; sample="final"
    compares the last level only. Returns (error at x=0, error at x=1).
    """
    la, lb = run_a.times.size, run_b.times.size
    if (lb - 1) % (la - 1) != 0:
        raise ValueError(f"level counts incompatible: {la} vs {lb}")
    ratio = (lb - 1) // (la - 1)
    if sample == "all":
        err0 = float(np.max(np.abs(run_b.g0[::ratio] - run_a.g0)))
        err1 = float(np.max(np.abs(run_b.gN[::ratio] - run_a.gN)))
    elif sample == "final":
        err0 = float(abs(run_b.g0[-1] - run_a.g0[-1]))
        err1 = float(abs(run_b.gN[-1] - run_a.gN[-1]))
    else:
        raise ValueError(f"sample must be 'all' or 'final', got {sample!r}")
    return err0, err1


@dataclass(frozen=True)
class ConvergenceRow:
    """One (coarse, fine) pair of a state study, labeled by the finer
    resolution; orders absent on the first row."""

    resolution: int
    err_inf: float
    err_l2: float
    order_inf: Optional[float] = None
    order_l2: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class ControllerRow:
    """One pair of a controller study: max-norm controller errors at the two
    boundary points."""

    resolution: int
    err_x0: float
    err_x1: float
    order_x0: Optional[float] = None
    order_x1: Optional[float] = None
    note: str = ""


StudyRow = Union[ConvergenceRow, ControllerRow]


@dataclass(frozen=True)
class StudyPlan:
    """A doubling ladder of resolutions plus the held-fixed complement.

    mode "spatial" varies N at fixed M; mode "temporal" varies M at fixed N.
    quantity selects state or controller errors. sample=None picks the
    golden-table convention per quantity: final-level differences for state
    errors, max over coinciding levels for controller errors. Each adjacent
    pair runs independently (the fine grid of one pair is re-run as the
    coarse grid of the next).
    """

    mode: str
    resolutions: Sequence[int]
    fixed_other: int
    ic: InitialCondition
    params: ModelParams
    T: float
    quantity: str = STATE
    sample: Optional[str] = None

    def __post_init__(self):
        if self.mode not in (SPATIAL, TEMPORAL):
            raise ValueError(f"mode must be '{SPATIAL}' or '{TEMPORAL}'")
        if self.quantity not in (STATE, CONTROLLER):
            raise ValueError(f"quantity must be '{STATE}' or '{CONTROLLER}'")
        if self.sample not in (None, "final", "all"):
            raise ValueError("sample must be 'final', 'all', or None")
        res = list(self.resolutions)
        if len(res) < 3:
            raise ValueError("resolution ladder needs at least 3 entries")
        for a, b in zip(res, res[1:]):
            if b != 2 * a:
                raise ValueError(f"ladder must strictly double: {a} -> {b}")

    @property
    def effective_sample(self) -> str:
        if self.sample is not None:
            return self.sample
        return "final" if self.quantity == STATE else "all"


def _study_grid(plan: StudyPlan, resolution: int) -> GridSpec:
    if plan.mode == SPATIAL:
        return make_grid(resolution, plan.fixed_other, plan.T)
    return make_grid(plan.fixed_other, resolution, plan.T)


def _study_run(plan: StudyPlan, resolution: int) -> RunTrajectory:
    grid = _study_grid(plan, resolution)
    needs_history = plan.quantity == STATE and plan.effective_sample == "all"
    return run(plan.ic, grid, plan.params,
               store_history=needs_history, monitors=False)


def _order(prev: Optional[float], cur: float) -> Optional[float]:
    if prev is None or prev <= 0.0 or cur <= 0.0:
        return None
    return math.log2(prev / cur)


def run_study(plan: StudyPlan, jobs: int = 1) -> List[StudyRow]:
    """Execute the ladder pairwise and assemble table rows.

    A failed run annotates its row (errors NaN) rather than aborting the
    study. jobs > 1 runs the ladder's simulations in a thread pool.
    """
    res = list(plan.resolutions)
    pairs = list(zip(res[:-1], res[1:]))
    wanted = [r for pair in pairs for r in pair]

    results = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_study_run, plan, r): i
                       for i, r in enumerate(wanted)}
            for fut, i in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as err:  # noqa: BLE001 - annotate the row
                    results[i] = err
    else:
        for i, r in enumerate(wanted):
            try:
                results[i] = _study_run(plan, r)
            except Exception as err:  # noqa: BLE001
                results[i] = err

    rows: List[StudyRow] = []
    prev_a: Optional[float] = None
    prev_b: Optional[float] = None
    for j, (coarse, fine) in enumerate(pairs):
        run_c = results[2 * j]
        run_f = results[2 * j + 1]
        note = ""
        if isinstance(run_c, Exception) or isinstance(run_f, Exception):
            bad = run_c if isinstance(run_c, Exception) else run_f
            err_a = err_b = float("nan")
            note = f"run failed: {bad}"
            prev_a = prev_b = None
            order_a = order_b = None
        else:
            sample = plan.effective_sample
            if plan.quantity == CONTROLLER:
                err_a, err_b = controller_error(run_c, run_f, sample)
            elif plan.mode == SPATIAL:
                err_a, err_b = spatial_self_error(run_c, run_f, sample)
            else:
                err_a, err_b = temporal_self_error(run_c, run_f, sample)
            order_a = _order(prev_a, err_a)
            order_b = _order(prev_b, err_b)
            prev_a, prev_b = err_a, err_b
        if plan.quantity == CONTROLLER:
            rows.append(ControllerRow(resolution=fine, err_x0=err_a,
                                      err_x1=err_b, order_x0=order_a,
                                      order_x1=order_b, note=note))
        else:
            rows.append(ConvergenceRow(resolution=fine, err_inf=err_a,
                                       err_l2=err_b, order_inf=order_a,
                                       order_l2=order_b, note=note))
    return rows


# ---------------------------------------------------------------------------
# Truncation order verification on a manufactured smooth field
# ---------------------------------------------------------------------------

def manufactured_field(x, t):
    """Smooth test field exp(-t) (x^3/3 - x^2/2); its normal derivative
    vanishes at both ends, and its fourth x-derivative is zero."""
    return np.exp(-t) * (x ** 3 / 3.0 - x ** 2 / 2.0)


def manufactured_field_dx(x, t):
    return np.exp(-t) * (x * x - x)


def manufactured_source(x, t, params: ModelParams):
    """Forcing that makes the manufactured field an exact solution of the
    transported Burgers equation in the shifted variable."""
    w = manufactured_field(x, t)
    wx = manufactured_field_dx(x, t)
    wxx = np.exp(-t) * (2.0 * x - 1.0)
    return -w - params.nu * wxx + params.wd * wx + w * wx


def truncation_errors(grid: GridSpec, params: ModelParams,
                      step: int = 0) -> Tuple[float, float]:
    """Scheme rows on the exact manufactured field minus the exact forcing.

    The field is sampled at levels `step` and `step`+1, the boundary data
    are bypassed with the exact normal derivatives at the theta-combined
    time, and the forcing is taken at the half-level, where the time
    difference is centered. Returns (max interior row, max boundary row).
    """
    x = grid.xs()
    t0 = step * grid.k
    t1 = (step + 1) * grid.k
    t_theta = t0 + params.theta * grid.k
    t_half = t0 + 0.5 * grid.k
    w0 = manufactured_field(x, t0)
    w1 = manufactured_field(x, t1)
    flux = (float(manufactured_field_dx(0.0, t_theta)),
            float(manufactured_field_dx(1.0, t_theta)))
    rows = residual(w1, w0, grid, params, flux=flux)
    trunc = rows - manufactured_source(x, t_half, params)
    interior = float(np.max(np.abs(trunc[1:-1])))
    boundary = float(max(abs(trunc[0]), abs(trunc[-1])))
    return interior, boundary


@dataclass(frozen=True)
class TruncationRow:
    resolution: int
    interior_err: float
    boundary_err: float
    interior_order: Optional[float] = None
    boundary_order: Optional[float] = None


def truncation_study(mode: str, theta: float, sizes: Sequence[int],
                     nu: float = 0.7, wd: float = 2.0) -> List[TruncationRow]:
    """Truncation errors over a doubling ladder of resolutions.

    Spatial mode refines N with k locked to h^2, so the interior rows decay
    at the spatial rate; temporal mode refines N and M together (h = k), so
    the interior rows decay at the slower of the two rates.
    """
    params = ModelParams(nu=nu, wd=wd, c0=1.0, c1=1.0, theta=theta)
    rows: List[TruncationRow] = []
    prev_i = prev_b = None
    for size in sizes:
        if mode == SPATIAL:
            h = 1.0 / size
            grid = make_grid(size, 1, h * h)
        elif mode == TEMPORAL:
            grid = make_grid(size, size, 1.0)
        else:
            raise ValueError(f"mode must be '{SPATIAL}' or '{TEMPORAL}'")
        ei, eb = truncation_errors(grid, params)
        rows.append(TruncationRow(
            resolution=size, interior_err=ei, boundary_err=eb,
            interior_order=_order(prev_i, ei),
            boundary_order=_order(prev_b, eb)))
        prev_i, prev_b = ei, eb
    return rows
