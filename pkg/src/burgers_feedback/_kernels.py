"""Hot loops of the solver: scheme rows, Jacobian bands, Thomas solve, Newton.

Single-source kernels written in loop form. When numba is importable they are
JIT-compiled (IEEE semantics, no fastmath, so results are bit-identical to the
pure-Python fallback); without numba they still run, just slowly.

Boundary handling: `use_feedback` selects the cubic feedback controllers as
Neumann data; otherwise the supplied constants (flux0, flux1) are used, which
covers both the uncontrolled runs (0, 0) and the exact-flux bypass used by the
truncation studies.
"""

import numpy as np

try:
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


PIVOT_MIN = 1e-300

# Newton status codes shared with the stepper wrappers.
OK = 0
NONFINITE = 1
SINGULAR = 2
MAXITER = 3


@njit(cache=True, nogil=True)
def flux_left(z, nu, wd, c0):
    """Feedback Neumann datum at x=0 for boundary state z."""
    return ((c0 + wd) * z + (2.0 / (9.0 * c0)) * z * z * z) / nu


@njit(cache=True, nogil=True)
def flux_right(z, nu, wd, c1):
    """Feedback Neumann datum at x=1 for boundary state z."""
    return -((c1 + wd) * z + (2.0 / (9.0 * c1)) * z * z * z) / nu


@njit(cache=True, nogil=True)
def flux_left_deriv(z, nu, wd, c0):
    return ((c0 + wd) + (2.0 / (3.0 * c0)) * z * z) / nu


@njit(cache=True, nogil=True)
def flux_right_deriv(z, nu, wd, c1):
    return -((c1 + wd) + (2.0 / (3.0 * c1)) * z * z) / nu


@njit(cache=True, nogil=True)
def residual_rows(w_next, w_n, h, k, theta, nu, wd, c0, c1,
                  use_feedback, flux0, flux1):
    """Rows F_i of the scheme at candidate w_next, given level w_n.

    F_i = 0 for all i exactly when w_next satisfies the step.
    """
    n = w_next.shape[0] - 1
    out = np.empty(n + 1)
    z = np.empty(n + 1)
    one_m = 1.0 - theta
    for i in range(n + 1):
        z[i] = theta * w_next[i] + one_m * w_n[i]

    if use_feedback:
        g0 = flux_left(z[0], nu, wd, c0)
        g1 = flux_right(z[n], nu, wd, c1)
    else:
        g0 = flux0
        g1 = flux1

    r = 2.0 * nu / (h * h)
    out[0] = ((w_next[0] - w_n[0]) / k
              - r * (z[1] - z[0] - h * g0)
              + wd * (z[1] - z[0]) / h
              + (2.0 * z[0] + z[1]) * (z[1] - z[0]) / (3.0 * h))
    for i in range(1, n):
        out[i] = ((w_next[i] - w_n[i]) / k
                  - nu * (z[i + 1] - 2.0 * z[i] + z[i - 1]) / (h * h)
                  + wd * (z[i + 1] - z[i - 1]) / (2.0 * h)
                  + (z[i - 1] + z[i] + z[i + 1])
                  * (z[i + 1] - z[i - 1]) / (6.0 * h))
    out[n] = ((w_next[n] - w_n[n]) / k
              - r * (z[n - 1] - z[n] + h * g1)
              + wd * (z[n] - z[n - 1]) / h
              + (2.0 * z[n] + z[n - 1]) * (z[n] - z[n - 1]) / (3.0 * h))
    return out


@njit(cache=True, nogil=True)
def jacobian_bands(w_next, w_n, h, k, theta, nu, wd, c0, c1, use_feedback):
    """Tridiagonal bands of dF/dw_next (lower, diagonal, upper)."""
    n = w_next.shape[0] - 1
    lo = np.empty(n)
    di = np.empty(n + 1)
    up = np.empty(n)
    z = np.empty(n + 1)
    one_m = 1.0 - theta
    for i in range(n + 1):
        z[i] = theta * w_next[i] + one_m * w_n[i]

    if use_feedback:
        dg0 = flux_left_deriv(z[0], nu, wd, c0)
        dg1 = flux_right_deriv(z[n], nu, wd, c1)
    else:
        dg0 = 0.0
        dg1 = 0.0

    r = 2.0 * nu / (h * h)
    inv_k = 1.0 / k
    di[0] = inv_k + theta * (r * (1.0 + h * dg0) - wd / h
                             + (2.0 * (z[1] - z[0]) - (2.0 * z[0] + z[1]))
                             / (3.0 * h))
    up[0] = theta * (-r + wd / h
                     + ((z[1] - z[0]) + (2.0 * z[0] + z[1])) / (3.0 * h))
    for i in range(1, n):
        s = z[i - 1] + z[i] + z[i + 1]
        d = z[i + 1] - z[i - 1]
        lo[i - 1] = theta * (-nu / (h * h) - wd / (2.0 * h)
                             + (d - s) / (6.0 * h))
        di[i] = inv_k + theta * (2.0 * nu / (h * h) + d / (6.0 * h))
        up[i] = theta * (-nu / (h * h) + wd / (2.0 * h)
                         + (d + s) / (6.0 * h))
    lo[n - 1] = theta * (-r - wd / h
                         + ((z[n] - z[n - 1]) - (2.0 * z[n] + z[n - 1]))
                         / (3.0 * h))
    di[n] = inv_k + theta * (r * (1.0 - h * dg1) + wd / h
                             + (2.0 * (z[n] - z[n - 1])
                                + (2.0 * z[n] + z[n - 1])) / (3.0 * h))
    return lo, di, up


@njit(cache=True, nogil=True)
def thomas(lo, di, up, rhs):
    """Tridiagonal solve without pivoting. Returns (x, status).

    status 0 on success, SINGULAR when a pivot falls below PIVOT_MIN.
    """
    n = di.shape[0]
    cp = np.empty(n)
    x = np.empty(n)
    piv = di[0]
    if abs(piv) < PIVOT_MIN:
        return x, SINGULAR
    if n > 1:
        cp[0] = up[0] / piv
    x[0] = rhs[0] / piv
    for i in range(1, n):
        piv = di[i] - lo[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_MIN:
            return x, SINGULAR
        if i < n - 1:
            cp[i] = up[i] / piv
        x[i] = (rhs[i] - lo[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x, OK


@njit(cache=True, nogil=True)
def _inf_norm(v):
    m = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > m:
            m = a
    return m


@njit(cache=True, nogil=True)
def newton_solve(w_n, h, k, theta, nu, wd, c0, c1, use_feedback,
                 flux0, flux1, tol, max_iter):
    """Newton iteration for one implicit step, starting at w_n.

    Returns (w_next, iterations, residual_inf, step_inf, status).
    Stops when the residual sup-norm or the update sup-norm drops to tol.
    """
    n1 = w_n.shape[0]
    w = w_n.copy()
    F = residual_rows(w, w_n, h, k, theta, nu, wd, c0, c1,
                      use_feedback, flux0, flux1)
    res = _inf_norm(F)
    step = np.inf
    if not np.isfinite(res):
        return w, 0, res, step, NONFINITE
    if res <= tol:
        return w, 0, res, 0.0, OK
    it = 0
    rhs = np.empty(n1)
    while it < max_iter:
        lo, di, up = jacobian_bands(w, w_n, h, k, theta, nu, wd, c0, c1,
                                    use_feedback)
        for j in range(n1):
            rhs[j] = -F[j]
        dx, st = thomas(lo, di, up, rhs)
        if st != OK:
            return w, it, res, step, st
        for j in range(n1):
            w[j] += dx[j]
        it += 1
        step = _inf_norm(dx)
        F = residual_rows(w, w_n, h, k, theta, nu, wd, c0, c1,
                          use_feedback, flux0, flux1)
        res = _inf_norm(F)
        if not np.isfinite(res) or not np.isfinite(step):
            return w, it, res, step, NONFINITE
        if res <= tol or step <= tol:
            return w, it, res, step, OK
    return w, it, res, step, MAXITER


@njit(cache=True, nogil=True)
def explicit_rows(w_n, h, k, nu, wd, c0, c1, use_feedback, flux0, flux1):
    """One explicit step: w_next = w_n - k * S(w_n).

    The spatial part S is exactly the residual rows evaluated at
    w_next = w_n, where the time-difference term vanishes.
    """
    s = residual_rows(w_n, w_n, h, k, 0.0, nu, wd, c0, c1,
                      use_feedback, flux0, flux1)
    n1 = w_n.shape[0]
    out = np.empty(n1)
    for i in range(n1):
        out[i] = w_n[i] - k * s[i]
    return out
