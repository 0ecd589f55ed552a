"""Independent reference computations used by the tests.

These deliberately avoid the package's phase-plane formulation: the
eigenvalue is found by shooting the second-order ODE in ω directly, and ω_*
at p = 2 by a collocation BVP solve.
"""

import math

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.optimize import brentq


def eigen_end_value(beta, N, p, theta0=1e-6):
    """ω(π/2) for (sin^{N-2} A^m ω')' + βΛ sin^{N-2} A^m ω = 0, ω(0) = 1."""
    lam = beta * (p - 1) + p - N
    m = (p - 2) / 2

    def rhs(th, y):
        w, wp = y
        A = beta * beta * w * w + wp * wp
        cot = math.cos(th) / math.sin(th)
        # A^m [w'' + (N-2)cot w' + βΛ w] + m A^{m-1} A' w' = 0, A' = 2β²w w' + 2w' w''
        num = -(N - 2) * cot * wp * A - beta * lam * A * w - 2 * m * beta * beta * w * wp * wp
        return [wp, num / (A + 2 * m * wp * wp)]

    w2 = -beta * lam / (N - 1)
    y0 = [1 + 0.5 * w2 * theta0 ** 2, w2 * theta0]
    sol = solve_ivp(rhs, (theta0, math.pi / 2), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[0, -1]


def beta_star_oracle(N, p, step=0.02):
    """First sign change of ω(π/2; β) above max((N-p)/(p-1), 0), refined by brentq."""
    lo = max((N - p) / (p - 1), 0.0) + 1e-3
    f_lo = eigen_end_value(lo, N, p)
    b = lo
    while True:
        b2 = b + step
        f2 = eigen_end_value(b2, N, p)
        if f_lo * f2 < 0:
            return brentq(eigen_end_value, b, b2, args=(N, p), xtol=1e-13)
        b, f_lo = b2, f2
        if b > 100:
            raise RuntimeError("no sign change")


def omega_star_p2_oracle(N, q, guess_scale, theta0=1e-4, tol=1e-7):
    """ω_* at p = 2 from ω'' + (N-2)cot θ ω' + β(β+2-N)ω = (β²ω² + ω'²)^{q/2}."""
    beta = (2 - q) / (q - 1)

    def rhs(th, y):
        w, wp = y
        return np.vstack([wp, -(N - 2) * np.cos(th) / np.sin(th) * wp - beta * (beta + 2 - N) * w
                          + (beta * beta * w * w + wp * wp) ** (q / 2)])

    def bc(ya, yb):
        return np.array([ya[1], yb[0]])

    th = np.linspace(theta0, math.pi / 2, 400)
    y0 = np.vstack([guess_scale * np.cos(th), -guess_scale * np.sin(th)])
    sol = solve_bvp(rhs, bc, th, y0, tol=tol, max_nodes=500000)
    if not sol.success:
        raise RuntimeError(sol.message)
    return float(sol.sol(theta0)[0]), sol
