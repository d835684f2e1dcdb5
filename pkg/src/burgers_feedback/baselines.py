"""Golden baselines for the built-in convergence experiments.

Each table keys rows by the finer resolution of its (coarse, fine) pair.
SPACE_STATE: spatial state study, quadratic preset, theta=1, M=10000.
TIME_STATE: temporal state study, quadratic preset, N=100; the max-norm
column belongs to the theta=1/2 study and the L2 column to theta=1.
SPACE_CONTROLLER: spatial controller study, theta=1, M=10000; the last row
of the source table is labeled 6120 but sits on the doubling ladder at 5120.

Comparison policy: observed orders within +/-0.15 and raw errors within a
factor of 2, checked at the finest rows that both sides share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

ORDER_TOL = 0.15
ERROR_FACTOR = 2.0
ROWS_CHECKED = 2

# resolution -> (err_inf, order_inf, err_l2, order_l2)
SPACE_STATE = {
    40: (6.76e-07, None, 3.86e-07, None),
    80: (1.66e-07, 2.03, 9.46e-08, 2.03),
    160: (4.11e-08, 2.01, 2.35e-08, 2.01),
    320: (1.03e-08, 2.00, 5.87e-09, 2.00),
    640: (2.56e-09, 2.00, 1.47e-09, 2.00),
}

# resolution -> (err_inf at theta=1/2, its order, err_l2 at theta=1, its order)
TIME_STATE = {
    200: (4.64e-06, None, 1.151e-04, None),
    400: (5.89e-07, 2.97, 4.96e-05, 1.22),
    800: (1.48e-07, 1.99, 2.29e-05, 1.11),
    1600: (3.73e-08, 1.99, 1.10e-05, 1.06),
    3200: (9.35e-09, 1.99, 5.40e-06, 1.03),
}

# resolution -> (err at x=0, its order, err at x=1, its order)
SPACE_CONTROLLER = {
    80: (1.816, None, 1.808, None),
    160: (0.804, 1.17, 0.799, 1.18),
    320: (0.246, 1.71, 0.244, 1.71),
    640: (0.065, 1.92, 0.065, 1.92),
    1280: (0.017, 1.98, 0.016, 1.98),
    2560: (0.004, 1.99, 0.004, 1.99),
    5120: (0.0010, 1.99, 0.0010, 1.99),
}


@dataclass(frozen=True)
class BaselineCheck:
    resolution: int
    kind: str            # "order" or "error"
    column: str
    expected: float
    observed: Optional[float]
    passed: bool


def _row_values(row):
    # (first error, first order, second error, second order) for either row type
    if hasattr(row, "err_inf"):
        return row.err_inf, row.order_inf, row.err_l2, row.order_l2
    return row.err_x0, row.order_x0, row.err_x1, row.order_x1


def compare_to_baseline(rows: Sequence, baseline: dict,
                        columns: Sequence[int] = (0, 1),
                        order_tol: float = ORDER_TOL,
                        error_factor: float = ERROR_FACTOR,
                        rows_checked: int = ROWS_CHECKED) -> List[BaselineCheck]:
    """Grade study rows against a golden table.

    columns selects which of the two (error, order) column pairs to grade
    (0 = first, 1 = second); the check covers the `rows_checked` finest
    resolutions present on both sides.
    """
    matched = [r for r in rows if r.resolution in baseline and not r.note]
    matched.sort(key=lambda r: r.resolution)
    checked = matched[-rows_checked:]
    col_names = ("inf", "l2") if (matched and hasattr(matched[0], "err_inf")) \
        else ("x0", "x1")
    out: List[BaselineCheck] = []
    for row in checked:
        vals = _row_values(row)
        base = baseline[row.resolution]
        for c in columns:
            err_obs, order_obs = vals[2 * c], vals[2 * c + 1]
            err_exp, order_exp = base[2 * c], base[2 * c + 1]
            if err_exp is not None:
                ok = (err_obs == err_obs  # not NaN
                      and err_exp / error_factor <= err_obs
                      <= err_exp * error_factor)
                out.append(BaselineCheck(row.resolution, "error",
                                         col_names[c], err_exp, err_obs, ok))
            if order_exp is not None:
                ok = order_obs is not None and abs(order_obs - order_exp) <= order_tol
                out.append(BaselineCheck(row.resolution, "order",
                                         col_names[c], order_exp, order_obs, ok))
    return out


def all_passed(checks: Sequence[BaselineCheck]) -> bool:
    return bool(checks) and all(c.passed for c in checks)
