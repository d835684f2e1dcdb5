"""Independent oracles shared by the unit and acceptance suites.

These deliberately share no code with the package: plain index loops,
each term transcribed from its definition.
"""

import numpy as np


def oracle_residual(w_next, w_n, h, k, theta, nu, wd, c0, c1,
                    feedback=True, flux=(0.0, 0.0)):
    """Term-by-term re-implementation of the scheme rows."""
    N = len(w_n) - 1
    z = [theta * w_next[i] + (1.0 - theta) * w_n[i] for i in range(N + 1)]
    if feedback:
        v0 = (1.0 / nu) * ((c0 + wd) * z[0] + (2.0 / (9.0 * c0)) * z[0] ** 3)
        v1 = -(1.0 / nu) * ((c1 + wd) * z[N] + (2.0 / (9.0 * c1)) * z[N] ** 3)
    else:
        v0, v1 = flux
    rows = np.empty(N + 1)
    dxp0 = (z[1] - z[0]) / h
    phi0 = (1.0 / 3.0) * (2.0 * z[0] + z[1]) * dxp0
    rows[0] = (w_next[0] - w_n[0]) / k \
        - (2.0 * nu / h ** 2) * (z[1] - z[0] - h * v0) + wd * dxp0 + phi0
    for i in range(1, N):
        dxc = (z[i + 1] - z[i - 1]) / (2.0 * h)
        dx2 = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / h ** 2
        phi = (1.0 / 3.0) * (z[i - 1] + z[i] + z[i + 1]) * dxc
        rows[i] = (w_next[i] - w_n[i]) / k - nu * dx2 + wd * dxc + phi
    dxmN = (z[N] - z[N - 1]) / h
    phiN = (1.0 / 3.0) * (2.0 * z[N] + z[N - 1]) * dxmN
    rows[N] = (w_next[N] - w_n[N]) / k \
        - (2.0 * nu / h ** 2) * (z[N - 1] - z[N] + h * v1) + wd * dxmN + phiN
    return rows
