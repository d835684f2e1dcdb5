"""Command-line front end: presets, config handling, run orchestration, and
flat-file artifact emission.

Subcommands: simulate, converge-space, converge-time, converge-controller,
sweep, stability-probe. Configuration is a flat mapping of dotted keys
(e.g. "grid.N", "params.theta"); precedence is preset < config file < --set
overrides. Exit codes: 0 success, 2 config error, 3 numerical failure,
4 baseline-comparison failure in converge subcommands.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, baselines
from .analysis import (CONTROLLER, SPATIAL, STATE, TEMPORAL, ControllerRow,
                       StudyPlan, run_study)
from .grid import (IC_KINDS, GridSpec, InitialCondition, ModelParams,
                   make_grid, sample_initial)
from .stability import (CONDITIONAL, UNCONDITIONAL, InsufficientDataError,
                        beta_star, decay_exponent_bound,
                        feasible_decay_exponent, fit_decay, timestep_limits)
from .stepper import (BlowUpError, NonConvergenceError, RunTrajectory,
                      SingularTridiagonalError, run)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration (flat view of the dotted keys)."""

    N: int = 100
    M: int = 1000
    T: float = 1.0
    nu: float = 1.0
    wd: float = 0.0
    c0: float = 1.0
    c1: float = 1.0
    theta: float = 1.0
    ic_kind: str = "quadratic5"
    ic_values: Optional[Tuple[float, ...]] = None
    controlled: bool = True
    store_history: bool = False
    monitors: bool = True
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    directory: str = "out"
    formats: Tuple[str, ...] = ("csv", "json", "dat")

    def grid(self) -> GridSpec:
        return make_grid(self.N, self.M, self.T)

    def params(self) -> ModelParams:
        return ModelParams(nu=self.nu, wd=self.wd, c0=self.c0, c1=self.c1,
                           theta=self.theta)

    def initial(self) -> InitialCondition:
        if self.ic_kind == "tabulated":
            values = None if self.ic_values is None else np.asarray(
                self.ic_values, dtype=float)
            return InitialCondition(kind="tabulated", values=values)
        return InitialCondition(kind=self.ic_kind)


def _parse_bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_formats(s):
    if isinstance(s, (list, tuple)):
        items = [str(x) for x in s]
    else:
        items = [t.strip() for t in str(s).split(",") if t.strip()]
    for item in items:
        if item not in ("csv", "json", "dat"):
            raise ValueError(f"unknown format {item!r}")
    return tuple(items)


def _parse_ic_kind(s):
    s = str(s)
    if s not in IC_KINDS:
        raise ValueError(f"expected one of {IC_KINDS}, got {s!r}")
    return s


def _parse_values(s):
    if s is None:
        return None
    if isinstance(s, (list, tuple)):
        return tuple(float(x) for x in s)
    return tuple(float(tok) for tok in str(s).split(",") if tok.strip())


# dotted key -> (RunConfig attribute, parser)
CONFIG_KEYS = {
    "grid.N": ("N", int),
    "grid.M": ("M", int),
    "grid.T": ("T", float),
    "params.nu": ("nu", float),
    "params.wd": ("wd", float),
    "params.c0": ("c0", float),
    "params.c1": ("c1", float),
    "params.theta": ("theta", float),
    "ic.kind": ("ic_kind", _parse_ic_kind),
    "ic.values": ("ic_values", _parse_values),
    "toggles.controlled": ("controlled", _parse_bool),
    "toggles.store_history": ("store_history", _parse_bool),
    "toggles.monitors": ("monitors", _parse_bool),
    "newton.tol": ("newton_tol", float),
    "newton.max_iter": ("newton_max_iter", int),
    "output.directory": ("directory", str),
    "output.formats": ("formats", _parse_formats),
}

PRESETS = {
    "example51": {
        "params.nu": 1.0, "params.wd": 5.0, "params.c0": 1.0,
        "params.c1": 1.0, "params.theta": 1.0, "grid.T": 1.0,
        "grid.N": 100, "grid.M": 1000, "ic.kind": "quadratic5",
    },
    "example52": {
        "params.nu": 0.1, "params.wd": 3.0, "params.c0": 1.0,
        "params.c1": 1.0, "params.theta": 0.5, "grid.T": 1.0,
        "grid.N": 100, "grid.M": 1000, "ic.kind": "cosine2",
    },
}


def _apply(cfg: RunConfig, key: str, value) -> RunConfig:
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    attr, parser = CONFIG_KEYS[key]
    try:
        parsed = parser(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid value for {key!r}: {err}") from err
    return replace(cfg, **{attr: parsed})


def _validate(cfg: RunConfig) -> RunConfig:
    try:
        cfg.grid()
        cfg.params()
        cfg.initial()
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if cfg.ic_values is not None and cfg.ic_kind != "tabulated":
        raise ConfigError("ic.values requires ic.kind=tabulated")
    if cfg.newton_tol <= 0.0:
        raise ConfigError(f"newton.tol must be > 0, got {cfg.newton_tol!r}")
    if cfg.newton_max_iter < 1:
        raise ConfigError("newton.max_iter must be >= 1, "
                          f"got {cfg.newton_max_iter!r}")
    return cfg


def parse_config(preset: Optional[str] = None,
                 config_path: Optional[str] = None,
                 overrides: Sequence[str] = ()) -> RunConfig:
    """Resolve a RunConfig from preset, JSON file, and key=value overrides.

    The preset expands first, file values override it, and --set overrides
    beat both. The result is fully validated.
    """
    cfg = RunConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, "
                              f"expected one of {sorted(PRESETS)}")
        for key, value in PRESETS[preset].items():
            cfg = _apply(cfg, key, value)
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
        for key, value in data.items():
            cfg = _apply(cfg, key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg = _apply(cfg, key.strip(), value.strip())
    return _validate(cfg)


def effective_config(cfg: RunConfig) -> Dict[str, object]:
    """Dotted-key echo of the complete configuration, defaults included."""
    out: Dict[str, object] = {}
    for key, (attr, _) in CONFIG_KEYS.items():
        value = getattr(cfg, attr)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.15e}"


def _write_trajectory_csv(path: Path, traj: RunTrajectory) -> None:
    lines = ["n,t,l2,h1_semi,linf,W0,WN,g0,gN,newton_iters"]
    for n in range(traj.levels):
        lines.append(",".join([
            str(n), _fmt(traj.times[n]), _fmt(traj.l2[n]),
            _fmt(traj.h1_semi[n]), _fmt(traj.linf[n]), _fmt(traj.w0[n]),
            _fmt(traj.wN[n]), _fmt(traj.g0[n]), _fmt(traj.gN[n]),
            str(int(traj.newton_iters[n])),
        ]))
    path.write_text("\n".join(lines) + "\n")


def _write_dat(path: Path, xs: np.ndarray, ys: np.ndarray) -> None:
    lines = [f"{_fmt(x)} {_fmt(y)}" for x, y in zip(xs, ys)]
    path.write_text("\n".join(lines) + "\n")


def _stability_report(cfg: RunConfig, traj: RunTrajectory) -> Dict[str, object]:
    params = traj.params
    grid = traj.grid
    # the decay estimates are driven by this (non-homogeneous) diagnostic of
    # the initial data; reconstructable from the level-0 scalar records
    energy0 = None
    if traj.levels:
        energy0 = float(traj.h1_semi[0] ** 2 + traj.w0[0] ** 2
                        + traj.wN[0] ** 2 + traj.w0[0] ** 4
                        + traj.wN[0] ** 4)
    if params.unconditional:
        alpha = decay_exponent_bound(params)
        feasible = feasible_decay_exponent(params, grid.k)
        return {
            "regime": UNCONDITIONAL,
            "alpha_bound": alpha,
            "alpha_feasible_at_k": feasible,
            "beta_star": beta_star(params, grid.k, feasible),
            "initial_energy_proxy": energy0,
        }
    w0_inf = float(traj.linf[0]) if traj.levels else 0.0
    apriori = timestep_limits(params, grid, 2.0 * w0_inf)
    report: Dict[str, object] = {
        "regime": CONDITIONAL,
        "apriori_w_inf_proxy": 2.0 * w0_inf,
        "apriori_k_limits": list(apriori.k_limits),
        "apriori_k_min": apriori.k_min,
        "k": grid.k,
        "initial_energy_proxy": energy0,
    }
    if traj.bound_checks:
        ok = [v.satisfied for v in traj.bound_checks]
        report["verdicts_all_satisfied"] = all(ok)
        if not all(ok):
            first = next(i for i, good in enumerate(ok) if not good)
            report["first_violation_level"] = first
            report["first_violation_bound"] = traj.bound_checks[first].offending
    return report


def _decay_report(traj: RunTrajectory) -> Optional[Dict[str, object]]:
    try:
        fit = fit_decay(traj)
    except InsufficientDataError:
        return None
    return {"alpha_hat": fit.alpha_hat, "r_squared": fit.r_squared,
            "window": list(fit.window)}


def _write_metadata(path: Path, cfg: RunConfig, traj: RunTrajectory,
                    extra: Optional[Dict[str, object]] = None) -> None:
    meta: Dict[str, object] = {
        "config": effective_config(cfg),
        "status": traj.status,
        "failure_index": traj.failure_index,
        "levels": traj.levels,
        "final_l2": float(traj.l2[-1]) if traj.levels else None,
        "stability": _stability_report(cfg, traj),
        "decay_fit": _decay_report(traj),
        "accelerated_kernels": _kernels.NUMBA_ENABLED,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _emit_run_artifacts(cfg: RunConfig, out_dir: Path, traj: RunTrajectory,
                        extra: Optional[Dict[str, object]] = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        _write_trajectory_csv(out_dir / "trajectory.csv", traj)
    if "json" in cfg.formats:
        _write_metadata(out_dir / "metadata.json", cfg, traj, extra)
    if "dat" in cfg.formats:
        _write_dat(out_dir / "l2_norm.dat", traj.times, traj.l2)
        _write_dat(out_dir / "controller_x0.dat", traj.times, traj.g0)
        _write_dat(out_dir / "controller_x1.dat", traj.times, traj.gN)


def _run_config(cfg: RunConfig) -> RunTrajectory:
    return run(cfg.initial(), cfg.grid(), cfg.params(),
               controlled=cfg.controlled, store_history=cfg.store_history,
               monitors=cfg.monitors, newton_tol=cfg.newton_tol,
               newton_max_iter=cfg.newton_max_iter)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    """Run one trajectory and write CSV, metadata, and plot-data files."""
    target = Path(out_dir or cfg.directory)
    try:
        traj = _run_config(cfg)
    except (BlowUpError, NonConvergenceError) as err:
        traj = err.trajectory
        if traj is not None:
            _emit_run_artifacts(cfg, target, traj,
                                extra={"failure": str(err),
                                       "partial_artifacts": True})
        print(f"simulate: numerical failure: {err}", file=sys.stderr)
        return 3
    _emit_run_artifacts(cfg, target, traj)
    return 0


def _write_state_rows_csv(path: Path, rows) -> None:
    lines = ["resolution,err_inf,order_inf,err_l2,order_l2"]
    for r in rows:
        lines.append(",".join([
            str(r.resolution), _fmt(r.err_inf),
            "" if r.order_inf is None else f"{r.order_inf:.6f}",
            _fmt(r.err_l2),
            "" if r.order_l2 is None else f"{r.order_l2:.6f}",
        ]))
    path.write_text("\n".join(lines) + "\n")


def _write_controller_rows_csv(path: Path, rows) -> None:
    lines = ["resolution,err_x0,order_x0,err_x1,order_x1"]
    for r in rows:
        lines.append(",".join([
            str(r.resolution), _fmt(r.err_x0),
            "" if r.order_x0 is None else f"{r.order_x0:.6f}",
            _fmt(r.err_x1),
            "" if r.order_x1 is None else f"{r.order_x1:.6f}",
        ]))
    path.write_text("\n".join(lines) + "\n")


def _rows_json(rows) -> List[Dict[str, object]]:
    out = []
    for r in rows:
        if isinstance(r, ControllerRow):
            out.append({"resolution": r.resolution, "err_x0": r.err_x0,
                        "order_x0": r.order_x0, "err_x1": r.err_x1,
                        "order_x1": r.order_x1, "note": r.note})
        else:
            out.append({"resolution": r.resolution, "err_inf": r.err_inf,
                        "order_inf": r.order_inf, "err_l2": r.err_l2,
                        "order_l2": r.order_l2, "note": r.note})
    return out


def _is_quadratic_preset(cfg: RunConfig) -> bool:
    return (cfg.ic_kind == "quadratic5" and cfg.nu == 1.0 and cfg.wd == 5.0
            and cfg.c0 == 1.0 and cfg.c1 == 1.0 and cfg.controlled)


def _select_baseline(mode: str, quantity: str, cfg: RunConfig,
                     fixed_other: int):
    """Golden table and graded columns for a study config, if one applies."""
    if not _is_quadratic_preset(cfg):
        return None
    if mode == SPATIAL and quantity == STATE and cfg.theta == 1.0 \
            and fixed_other == 10000:
        return baselines.SPACE_STATE, (0, 1)
    if mode == SPATIAL and quantity == CONTROLLER and cfg.theta == 1.0 \
            and fixed_other == 10000:
        return baselines.SPACE_CONTROLLER, (0, 1)
    if mode == TEMPORAL and quantity == STATE and fixed_other == 100:
        if cfg.theta == 0.5:
            return baselines.TIME_STATE, (0,)
        if cfg.theta == 1.0:
            return baselines.TIME_STATE, (1,)
    return None


def cmd_converge(mode: str, quantity: str, cfg: RunConfig,
                 ladder: Sequence[int], fixed_other: int,
                 out_dir: Optional[str] = None, jobs: int = 1,
                 sample: Optional[str] = None) -> int:
    """Run a convergence study, write its rows, and grade against the golden
    baselines when the configuration matches one."""
    plan = StudyPlan(mode=mode, resolutions=list(ladder),
                     fixed_other=fixed_other, ic=cfg.initial(),
                     params=cfg.params(), T=cfg.T, quantity=quantity,
                     sample=sample)
    rows = run_study(plan, jobs=jobs)

    target = Path(out_dir or cfg.directory)
    target.mkdir(parents=True, exist_ok=True)
    if quantity == CONTROLLER:
        _write_controller_rows_csv(target / "rows.csv", rows)
    else:
        _write_state_rows_csv(target / "rows.csv", rows)

    selected = _select_baseline(mode, quantity, cfg, fixed_other)
    comparison = None
    passed = None
    if selected is not None:
        table, columns = selected
        checks = baselines.compare_to_baseline(rows, table, columns=columns)
        passed = baselines.all_passed(checks)
        comparison = [{"resolution": c.resolution, "kind": c.kind,
                       "column": c.column, "expected": c.expected,
                       "observed": c.observed, "passed": c.passed}
                      for c in checks]

    manifest = {
        "mode": mode,
        "quantity": quantity,
        "sample": plan.effective_sample,
        "fixed_other": fixed_other,
        "resolutions": list(ladder),
        "config": effective_config(cfg),
        "rows": _rows_json(rows),
        "baseline_comparison": comparison,
        "baseline_passed": passed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (target / "study.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    if passed is False:
        print("converge: baseline comparison failed", file=sys.stderr)
        return 4
    return 0


def _sweep_points(spec: Sequence[str]) -> List[List[Tuple[str, str]]]:
    """Cartesian product of `key=v1,v2,...` axes, flag order preserved."""
    axes: List[List[Tuple[str, str]]] = []
    for item in spec:
        if "=" not in item:
            raise ConfigError(f"--sweep expects key=v1,v2,..., got {item!r}")
        key, _, values = item.partition("=")
        key = key.strip()
        tokens = [v.strip() for v in values.split(",") if v.strip()]
        if not tokens:
            raise ConfigError(f"--sweep axis {key!r} has no values")
        axes.append([(key, tok) for tok in tokens])
    points: List[List[Tuple[str, str]]] = [[]]
    for axis in axes:
        points = [p + [kv] for p in points for kv in axis]
    return points


def _apply_sweep_point(cfg: RunConfig,
                       point: Sequence[Tuple[str, str]]) -> RunConfig:
    for key, value in point:
        if key == "grid.k":
            # step-size axis realized through M at fixed T
            k = float(value)
            if k <= 0:
                raise ConfigError(f"grid.k must be > 0, got {value!r}")
            cfg = _apply(cfg, "grid.M", max(1, round(cfg.T / k)))
        else:
            cfg = _apply(cfg, key, value)
    return _validate(cfg)


def cmd_sweep(cfg: RunConfig, sweep_spec: Sequence[str],
              out_dir: Optional[str] = None, jobs: int = 1) -> int:
    """Run the cartesian sweep, one artifact directory per point, plus a
    summary CSV. Individual failures are recorded and the sweep continues."""
    points = _sweep_points(sweep_spec)
    target = Path(out_dir or cfg.directory)
    target.mkdir(parents=True, exist_ok=True)

    header = ["point"]
    if points and points[0]:
        header += [key for key, _ in points[0]]
    header += ["status", "final_l2", "alpha_hat", "stability"]
    lines = [",".join(header)]

    for i, point in enumerate(points):
        label = f"{i:03d}" + "".join(
            f"_{key.split('.')[-1]}{val}" for key, val in point)
        sub = target / label
        try:
            point_cfg = _apply_sweep_point(cfg, point)
        except ConfigError as err:
            print(f"sweep point {label}: {err}", file=sys.stderr)
            lines.append(",".join([label] + [v for _, v in point]
                                  + ["config-error", "", "", ""]))
            continue
        status = "completed"
        try:
            traj = _run_config(point_cfg)
        except (BlowUpError, NonConvergenceError) as err:
            traj = err.trajectory
            status = traj.status if traj is not None else "failed"
        if traj is not None:
            _emit_run_artifacts(point_cfg, sub, traj)
        fit = _decay_report(traj) if traj is not None else None
        stab = _stability_report(point_cfg, traj) if traj is not None else {}
        if point_cfg.theta >= 0.5:
            verdict = UNCONDITIONAL
        elif stab.get("verdicts_all_satisfied") is True:
            verdict = "satisfied"
        elif stab.get("verdicts_all_satisfied") is False:
            verdict = f"violated:{stab.get('first_violation_bound')}"
        else:
            verdict = "unmonitored"
        lines.append(",".join(
            [label] + [v for _, v in point]
            + [status,
               _fmt(float(traj.l2[-1])) if traj is not None and traj.levels else "",
               _fmt(fit["alpha_hat"]) if fit else "",
               verdict]))

    (target / "summary.csv").write_text("\n".join(lines) + "\n")
    return 0


def cmd_stability_probe(cfg: RunConfig, multipliers: Sequence[float],
                        out_dir: Optional[str] = None) -> int:
    """Probe the conditional-stability ceilings: for each multiplier m, run
    with k = m * min(k1..k5) evaluated at the initial state's sup-norm, and
    report completion/blow-up against the bound verdict."""
    if cfg.theta >= 0.5:
        raise ConfigError("params.theta must be < 0.5 for the stability "
                          f"probe, got {cfg.theta!r}")
    params = cfg.params()
    base_grid = cfg.grid()
    w0 = sample_initial(cfg.initial(), base_grid, params)
    w0_inf = float(np.max(np.abs(w0.values)))
    k_min = timestep_limits(params, base_grid, w0_inf).k_min
    if not math.isfinite(k_min) or k_min <= 0:
        raise ConfigError("stability ceilings are unbounded for this config; "
                          "nothing to probe")

    target = Path(out_dir or cfg.directory)
    target.mkdir(parents=True, exist_ok=True)
    lines = ["multiplier,k,M,outcome,bound_satisfied,final_l2"]
    records = []
    for m in multipliers:
        k_target = m * k_min
        steps = max(1, math.ceil(cfg.T / k_target))
        probe_cfg = _validate(replace(cfg, M=steps))
        outcome = "completed"
        try:
            traj = _run_config(probe_cfg)
        except BlowUpError as err:
            traj = err.trajectory
            outcome = "blowup"
        except NonConvergenceError as err:
            traj = err.trajectory
            outcome = "nonconvergence"
        sub = target / f"m_{m:g}"
        if traj is not None:
            _emit_run_artifacts(probe_cfg, sub, traj,
                                extra={"probe_multiplier": m,
                                       "probe_k_min": k_min})
        satisfied = (all(v.satisfied for v in traj.bound_checks)
                     if traj is not None and traj.bound_checks else None)
        final_l2 = float(traj.l2[-1]) if traj is not None and traj.levels else None
        lines.append(",".join([
            f"{m:g}", _fmt(probe_cfg.T / steps), str(steps), outcome,
            "" if satisfied is None else str(satisfied).lower(),
            "" if final_l2 is None else _fmt(final_l2)]))
        records.append({"multiplier": m, "k": probe_cfg.T / steps,
                        "M": steps, "outcome": outcome,
                        "bound_satisfied": satisfied, "final_l2": final_l2})

    (target / "probe.csv").write_text("\n".join(lines) + "\n")
    (target / "probe.json").write_text(json.dumps(
        {"k_min": k_min, "w_inf_proxy": w0_inf,
         "config": effective_config(cfg), "runs": records},
        indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="expand a built-in experiment preset first")
    p.add_argument("--config", default=None,
                   help="flat JSON config file with dotted keys")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key "
                   "(repeatable; beats preset and file)")
    p.add_argument("--out", default=None,
                   help="output directory (beats output.directory)")


def _parse_int_list(s: str) -> List[int]:
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _parse_float_list(s: str) -> List[float]:
    return [float(tok) for tok in s.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burgers-feedback",
        description="Theta-scheme solver for the boundary-feedback "
                    "stabilized viscous Burgers equation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory")
    _add_config_flags(p)

    for name, mode, quantity, fixed_help in (
            ("converge-space", SPATIAL, STATE, "held-fixed M"),
            ("converge-time", TEMPORAL, STATE, "held-fixed N"),
            ("converge-controller", SPATIAL, CONTROLLER, "held-fixed M")):
        p = sub.add_parser(name, help=f"{mode} {quantity} convergence study")
        _add_config_flags(p)
        p.add_argument("--ladder", required=True, type=_parse_int_list,
                       help="comma-separated doubling resolutions")
        p.add_argument("--fixed", required=True, type=int, help=fixed_help)
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel runs in the study")
        p.add_argument("--sample", choices=["final", "all"], default=None,
                       help="error sampling over levels (default: final for "
                            "state, all for controller)")
        p.set_defaults(mode=mode, quantity=quantity)

    p = sub.add_parser("sweep", help="cartesian parameter sweep")
    _add_config_flags(p)
    p.add_argument("--sweep", dest="sweep_spec", action="append", default=[],
                   metavar="KEY=V1,V2,...", help="one sweep axis (repeatable)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("stability-probe",
                       help="probe the conditional-stability step ceilings")
    _add_config_flags(p)
    p.add_argument("--multipliers", type=_parse_float_list,
                   default=[0.5, 1.0, 2.0, 10.0],
                   help="k multipliers relative to min(k1..k5)")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(preset=args.preset, config_path=args.config,
                           overrides=args.overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir=args.out)
        if args.command in ("converge-space", "converge-time",
                            "converge-controller"):
            return cmd_converge(args.mode, args.quantity, cfg,
                                ladder=args.ladder, fixed_other=args.fixed,
                                out_dir=args.out, jobs=args.jobs,
                                sample=args.sample)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.sweep_spec, out_dir=args.out,
                             jobs=args.jobs)
        if args.command == "stability-probe":
            return cmd_stability_probe(cfg, args.multipliers,
                                       out_dir=args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (ValueError,) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (BlowUpError, NonConvergenceError, SingularTridiagonalError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
