"""Pure-numpy fallback with the same interface as the compiled ``_rk4`` kernel."""

import numpy as np


def rk4_integrate(c, L, qi, qj, qk, qw, x0, dt, nsteps, blowup):
    c = np.asarray(c, dtype=float)
    L = np.asarray(L, dtype=float)
    n = c.shape[0]
    # dense (n, n*n) operator: f(x) = Qm @ vec(x x^T)
    Qm = np.zeros((n, n * n))
    np.add.at(Qm, (np.asarray(qi), np.asarray(qj) * n + np.asarray(qk)), np.asarray(qw, dtype=float))

    def rhs(x):
        return c + L @ x + Qm @ np.outer(x, x).ravel()

    out = np.empty((nsteps + 1, n))
    x = np.array(x0, dtype=float)
    out[0] = x
    h2, h6 = 0.5 * dt, dt / 6.0
    b2 = blowup * blowup
    for s in range(1, nsteps + 1):
        k1 = rhs(x)
        k2 = rhs(x + h2 * k1)
        k3 = rhs(x + h2 * k2)
        k4 = rhs(x + dt * k3)
        x = x + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm2 = float(x @ x)
        if not np.isfinite(nrm2):
            return out[:s], 2, s
        if nrm2 > b2:
            return out[:s], 1, s
        out[s] = x
    return out, 0, -1
