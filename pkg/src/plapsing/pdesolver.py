"""Steady solver for -Δ_p u + |∇u|^q = 0 on an axisymmetric half-annulus.

The domain is {ε <= r <= 1, 0 <= θ <= π/2}, with the flat boundary at θ = π/2.
We solve for the scaled unknown v = r^β u in t = ln r, so that a separable
solution r^{-β} ω(θ) becomes v = ω(θ), independent of t.  In these variables

    -e^{Λt} ∂_t(e^{-Λt} κ (v_t - βv)) - sin^{2-N}θ ∂_θ(sin^{N-2}θ κ v_θ)
        + e^{νt} (W + δ²)^{q/2} = 0,

where W = (v_t - βv)² + v_θ², κ = (W + δ²)^{(p-2)/2}, Λ = β(p-1) + p - N and
ν = 1 - (β+1)(q+1-p).  The physical residual is this one times
r^{-(β+1)(p-1)-1}.  The grid is uniform in (t, θ), i.e. geometric in r.

The angular direction uses finite volumes with the exact sin^{N-2}θ cell
weights; the axis θ = 0 is a symmetry face.  Dirichlet data: the inner
boundary carries the singular data, u = 0 at r = 1 and at θ = π/2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial.legendre import leggauss

from .eigensolver import solve_beta_star
from .exponents import ProblemParams, beta_q, beta_star_closed_form
from .profiles import c2_nominal, c2_sharp, solve_omega_star

log = logging.getLogger(__name__)

MODES = ("weak", "strong", "flat")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PolarGrid:
    eps: float
    n_r: int
    n_theta: int
    N: int

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError("need 0 < eps < 1")
        if self.n_r < 16 or self.n_theta < 16:
            raise ValueError("need at least 16 nodes in each direction")

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(math.log(self.eps), 0.0, self.n_r)

    @property
    def r_nodes(self) -> np.ndarray:
        r = np.exp(self.t_nodes)
        r[0], r[-1] = self.eps, 1.0
        return r

    @property
    def theta_nodes(self) -> np.ndarray:
        return np.linspace(0.0, math.pi / 2, self.n_theta)

    def refined(self, factor: int = 2) -> "PolarGrid":
        return PolarGrid(self.eps, (self.n_r - 1) * factor + 1,
                         (self.n_theta - 1) * factor + 1, self.N)


@dataclass
class PolarField:
    grid: PolarGrid
    u: np.ndarray
    boundary_mode: str
    params: ProblemParams
    beta: float
    amplitude: float
    solver_stats: dict = field(default_factory=dict)

    @property
    def v(self) -> np.ndarray:
        return self.u * (self.grid.r_nodes ** self.beta)[:, None]

    @property
    def converged(self) -> bool:
        return bool(self.solver_stats.get("converged", False))


@dataclass
class ExponentFit:
    beta_hat: float
    r_window: tuple
    r2: float
    profile_at_mid: np.ndarray
    r_mid: float
    shells: int

    def as_dict(self):
        return {"beta_hat": self.beta_hat, "r_window": list(self.r_window), "r2": self.r2}


class ScaledOperator:
    """Discrete residual of the scaled equation on a PolarGrid."""

    def __init__(self, grid: PolarGrid, p: float, q: float, beta: float, delta: float,
                 absorption: float = 1.0):
        self.grid = grid
        self.N = grid.N
        self.p, self.q, self.beta = p, q, beta
        self.delta = delta
        self.absorption = absorption
        self.t = grid.t_nodes
        self.th = grid.theta_nodes
        self.dt = self.t[1] - self.t[0]
        self.dth = self.th[1] - self.th[0]
        self.lam = beta * (p - 1.0) + p - self.N
        self.nu = 1.0 - (beta + 1.0) * (q + 1.0 - p)
        self.shape = (grid.n_r, grid.n_theta)
        x, w = leggauss(8)
        V = np.empty(grid.n_theta)
        for j, c in enumerate(self.th):
            a = max(c - self.dth / 2, 0.0)
            b = min(c + self.dth / 2, math.pi / 2)
            V[j] = 0.5 * (b - a) * np.sum(w * np.sin(0.5 * (b - a) * x + 0.5 * (a + b)) ** (self.N - 2))
        self.V = V
        self.s_face = np.sin(self.th[:-1] + self.dth / 2) ** (self.N - 2)
        self._colors = None

    def _derivatives(self, v):
        vth = np.zeros_like(v)
        vth[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * self.dth)
        vth[:, -1] = (3 * v[:, -1] - 4 * v[:, -2] + v[:, -3]) / (2 * self.dth)
        vt = np.zeros_like(v)
        vt[1:-1] = (v[2:] - v[:-2]) / (2 * self.dt)
        return vt, vth

    def coefficients(self, v):
        """Diffusivities on the t- and θ-faces and the absorption term at nodes."""
        b, d2 = self.beta, self.delta ** 2
        vt, vth = self._derivatives(v)
        g = (v[1:] - v[:-1]) / self.dt - b * 0.5 * (v[1:] + v[:-1])
        h = 0.5 * (vth[1:] + vth[:-1])
        k_t = (g * g + h * h + d2) ** ((self.p - 2) / 2)
        gth = (v[:, 1:] - v[:, :-1]) / self.dth
        gt = 0.5 * (vt[:, 1:] + vt[:, :-1]) - b * 0.5 * (v[:, 1:] + v[:, :-1])
        k_th = (gt * gt + gth * gth + d2) ** ((self.p - 2) / 2)
        W = (vt - b * v) ** 2 + vth ** 2
        S = self.absorption * np.exp((self.nu - self.lam) * self.t)[:, None] * (W + d2) ** (self.q / 2)
        return k_t, k_th, S

    def residual(self, v, bc, frozen=None):
        """Scaled residual; with frozen=(k_t, k_th, S) it is affine in v."""
        k_t, k_th, S = frozen if frozen is not None else self.coefficients(v)
        b = self.beta
        tf = 0.5 * (self.t[1:] + self.t[:-1])
        g = (v[1:] - v[:-1]) / self.dt - b * 0.5 * (v[1:] + v[:-1])
        Ft = np.exp(-self.lam * tf)[:, None] * k_t * g
        gth = (v[:, 1:] - v[:, :-1]) / self.dth
        Fth = np.exp(-self.lam * self.t)[:, None] * self.s_face[None, :] * k_th * gth
        div_th = np.zeros_like(v)
        div_th[:, :-1] += Fth
        div_th[:, 1:] -= Fth
        R = np.empty_like(v)
        inner = (-self.V[None, :] * (Ft[1:] - Ft[:-1]) / self.dt - div_th[1:-1]
                 + self.V[None, :] * S[1:-1])
        R[1:-1] = inner * np.exp(self.lam * self.t[1:-1])[:, None] / self.V[None, :]
        R[0] = v[0] - bc[0]
        R[-1] = v[-1] - bc[-1]
        R[:, -1] = v[:, -1] - bc[:, -1]
        return R

    def _color_masks(self):
        if self._colors is None:
            I, J = np.meshgrid(np.arange(self.shape[0]), np.arange(self.shape[1]), indexing="ij")
            self._colors = (I, J, [(I % 3 == a) & (J % 3 == c) for a in range(3) for c in range(3)])
        return self._colors

    def jacobian(self, v, bc, frozen=None, linear=False):
        """Sparse Jacobian by 3x3 coloring (exact columns when frozen and linear)."""
        nr, nth = self.shape
        I, J, masks = self._color_masks()
        R0 = self.residual(v, bc, frozen)
        if linear:
            h = np.ones_like(v)
        else:
            h = 1e-7 * np.maximum(np.abs(v), 1e-3 * max(np.abs(v).max(), 1e-30))
        rows, cols, vals = [], [], []
        for mask in masks:
            vp = v.copy()
            vp[mask] += h[mask]
            dR = self.residual(vp, bc, frozen) - R0
            si, sj = I[mask], J[mask]
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = si + di, sj + dj
                    ok = (ii >= 0) & (ii < nr) & (jj >= 0) & (jj < nth)
                    rows.append(ii[ok] * nth + jj[ok])
                    cols.append(si[ok] * nth + sj[ok])
                    vals.append(dR[ii[ok], jj[ok]] / h[si[ok], sj[ok]])
        n = v.size
        Jm = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(n, n))
        return Jm, R0


def _converged(R, v, dv, tol):
    scale = max(1.0, float(np.abs(v).max()))
    return float(np.abs(R).max()) <= 1e-9 * scale and float(np.abs(dv).max()) <= tol * scale


def _picard(op, bc, v, tol, max_iter, stats, damping=0.5):
    """Damped frozen-coefficient iteration.

    Returns (best iterate by residual, converged).  Stops on stall: three slow
    updates in a row or two consecutive residual increases.
    """
    best, best_r = v.copy(), float(np.abs(op.residual(v, bc)).max())
    prev_upd, prev_r = None, best_r
    slow = grow = 0
    for _ in range(max_iter):
        frozen = op.coefficients(v)
        A, R = op.jacobian(v, bc, frozen, linear=True)
        stats["picard_iterations"] += 1
        try:
            step = spla.spsolve(A.tocsc(), -R.ravel()).reshape(v.shape)
        except RuntimeError:
            break
        if not np.all(np.isfinite(step)):
            break
        dv = damping * step
        v = v + dv
        stats["clamp_events"] += int(np.count_nonzero(v[1:-1] < 0))
        v[1:-1] = np.maximum(v[1:-1], 0.0)
        upd = float(np.abs(dv).max())
        stats["final_update"] = upd
        Rn = op.residual(v, bc)
        rn = float(np.abs(Rn).max())
        if rn < best_r:
            best, best_r = v.copy(), rn
        if _converged(Rn, v, dv, tol):
            return v, True
        slow = slow + 1 if prev_upd is not None and upd > 0.9 * prev_upd else 0
        grow = grow + 1 if rn > prev_r else 0
        if slow >= 3 or grow >= 2:
            break
        prev_upd, prev_r = upd, rn
    return best, False


def _ptc(op, bc, v, tol, max_iter, stats, dtau=1.0):
    """Pseudo-transient continuation with switched evolution relaxation."""
    r_old = None
    n = v.size
    for _ in range(max_iter):
        J, R = op.jacobian(v, bc)
        rn = float(np.abs(R).max())
        if not math.isfinite(rn):
            return v, False
        if r_old is not None:
            dtau = min(dtau * r_old / max(rn, 1e-300), 1e14)
        r_old = rn
        stats["ptc_iterations"] += 1
        dv = spla.spsolve((J + sp.identity(n) / dtau).tocsc(), -R.ravel()).reshape(v.shape)
        if not np.all(np.isfinite(dv)):
            return v, False
        v = v + dv
        stats["clamp_events"] += int(np.count_nonzero(v[1:-1] < 0))
        v[1:-1] = np.maximum(v[1:-1], 0.0)
        stats["final_update"] = float(np.abs(dv).max())
        if _converged(op.residual(v, bc), v, dv, tol):
            return v, True
    return v, False


def _solve_one(op, bc, v0, tol, max_iter, stats, picard_iter):
    v, ok = _picard(op, bc, v0.copy(), tol, picard_iter, stats)
    if ok:
        return v, True
    # a stalled Picard iterate is a poor Newton start; restart from the predictor
    stats["fallback"] = True
    return _ptc(op, bc, v0.copy(), tol, max_iter, stats)


def boundary_profile(mode: str, params: ProblemParams, theta: np.ndarray, beta_star: float = None):
    """Angular factor of the inner data: ψ_*, ω_* or 1, sampled at theta."""
    if mode == "weak":
        res = solve_beta_star(params.with_q(None)) if beta_star is None else None
        if res is None:
            from .eigensolver import integrate_phase, reconstruct_profile
            prof = reconstruct_profile(integrate_phase(beta_star, params.with_q(None)))
        else:
            prof = res.profile
        out = np.interp(theta, prof.theta, prof.omega)
    elif mode == "strong":
        out = np.interp(theta, *_omega_star_cached(params))
    elif mode == "flat":
        out = np.ones_like(theta)
    else:
        raise ValueError(f"unknown mode {mode}")
    out[-1] = 0.0
    return np.maximum(out, 0.0)


_OMEGA_CACHE = {}


def _omega_star_cached(params):
    key = (params.N, params.p, params.q)
    if key not in _OMEGA_CACHE:
        res = solve_omega_star(params)
        _OMEGA_CACHE[key] = (res.profile.theta, res.profile.omega)
    return _OMEGA_CACHE[key]


def get_beta_star(params: ProblemParams) -> float:
    bs = beta_star_closed_form(params)
    return bs if bs is not None else solve_beta_star(params.with_q(None)).beta_star


def solve_steady(grid: PolarGrid, boundary_mode: str, params: ProblemParams,
                 amplitude: float = 1.0, reg_delta: float = 1e-6, max_iter: int = 60,
                 tol: float = 1e-10, absorption: float = 1.0, beta_star: float = None,
                 picard_iter: int = 10, continuation_factor: float = 10.0,
                 profile: np.ndarray = None) -> PolarField:
    """Solve with inner data amplitude·ε^{-β}·profile(θ) (flat: amplitude·1).

    reg_delta is relative: δ = reg_delta × (sup of the scaled inner data), which
    equals reg_delta × (data scale/ε) in gradient units at r = ε.  Large
    amplitudes are reached by continuation from amplitude 1, halving the
    logarithmic step when a solve fails.
    """
    if boundary_mode not in MODES:
        raise ValueError(f"boundary_mode must be one of {MODES}")
    if not reg_delta > 0:
        raise ValueError("reg_delta must be positive")
    q = params.require_q()
    bs = beta_star if beta_star is not None else get_beta_star(params)
    beta = bs if boundary_mode == "weak" else beta_q(params)
    th = grid.theta_nodes
    t = grid.t_nodes
    shape = np.asarray(profile, dtype=float) if profile is not None else \
        boundary_profile(boundary_mode, params, th, bs)
    inner_factor = grid.eps ** beta if boundary_mode == "flat" else 1.0

    def data(a):
        bc = np.zeros((grid.n_r, grid.n_theta))
        bc[0] = a * inner_factor * shape
        return bc

    stats = {"picard_iterations": 0, "ptc_iterations": 0, "clamp_events": 0,
             "final_update": None, "fallback": False, "continuation_steps": 0}
    decay = (1.0 - np.exp((beta + 1.0) * t)) / (1.0 - math.exp((beta + 1.0) * t[0]))
    start = min(amplitude, 1.0 if boundary_mode != "flat" else 10.0)
    a_prev = None
    a = start
    v = np.outer(decay, data(a)[0])
    log_step = math.log(continuation_factor)
    ok = False
    while True:
        bc = data(a)
        delta = reg_delta * max(float(np.abs(bc[0]).max()), 1e-300)
        op = ScaledOperator(grid, params.p, q, beta, delta, absorption)
        guess = v.copy()
        guess[0] = bc[0]
        v_new, ok = _solve_one(op, bc, guess, tol, max_iter, stats, picard_iter)
        log.debug("amplitude %.4g converged=%s picard=%d ptc=%d", a, ok,
                  stats["picard_iterations"], stats["ptc_iterations"])
        stats["continuation_steps"] += 1
        if ok:
            v, a_prev = v_new, a
            if a >= amplitude:
                break
            a = min(amplitude, a * math.exp(log_step))
        else:
            if a_prev is None or log_step < math.log(continuation_factor) / 32:
                v = v_new
                break
            log_step *= 0.5
            a = min(amplitude, a_prev * math.exp(log_step))
    r = grid.r_nodes
    u = v * (r ** (-beta))[:, None]
    stats.update({
        "converged": bool(ok and a_prev is not None and a_prev >= amplitude),
        "iterations": stats["picard_iterations"] + stats["ptc_iterations"],
        "residual": float(np.abs(op.residual(v, bc)).max()),
        "reg_delta_scaled": delta,
        "reg_delta_gradient_at_eps": delta * grid.eps ** (-beta - 1.0),
        "beta_scaling": beta,
        "beta_star": bs,
    })
    return PolarField(grid, u, boundary_mode, params, beta, amplitude, stats)


def default_window(field_: PolarField) -> tuple:
    eps = field_.grid.eps
    if field_.boundary_mode == "strong":
        return (100.0 * eps, min(1000.0 * eps, 0.5))
    return (4.0 * eps, min(40.0 * eps, 0.5))


def fit_exponent(field_: PolarField, window: Optional[tuple] = None) -> ExponentFit:
    """Least-squares slope of log max_θ u against log r over the window."""
    eps = field_.grid.eps
    lo, hi = window if window is not None else default_window(field_)
    if lo <= 3.0 * eps:
        raise FitError("window must start beyond 3 eps")
    r = field_.grid.r_nodes
    sel = (r >= lo) & (r <= hi)
    if np.count_nonzero(sel) < 8:
        raise FitError(f"window [{lo}, {hi}] holds fewer than 8 shells")
    umax = field_.u[sel].max(axis=1)
    if np.any(umax <= 0) or not np.all(np.isfinite(umax)):
        raise FitError("field is not positive in the window")
    x, y = np.log(r[sel]), np.log(umax)
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    i_mid = int(np.argmin(np.abs(np.log(r) - 0.5 * (math.log(lo) + math.log(hi)))))
    prof = field_.u[i_mid] / field_.u[i_mid].max()
    return ExponentFit(float(-slope), (lo, hi), r2, prof, float(r[i_mid]), int(sel.sum()))


def profile_distance(fit: ExponentFit, theta: np.ndarray, ref_theta: np.ndarray,
                     ref_omega: np.ndarray) -> float:
    """Sup distance between the fitted profile and a max-normalized reference."""
    ref = np.interp(theta, ref_theta, ref_omega)
    ref = ref / ref.max()
    return float(np.max(np.abs(fit.profile_at_mid - ref)))


def _gradient(field_: PolarField):
    r = field_.grid.r_nodes
    u_t = np.gradient(field_.u, field_.grid.t_nodes, axis=0)
    u_th = np.gradient(field_.u, field_.grid.theta_nodes, axis=1)
    return np.sqrt(u_t ** 2 + u_th ** 2) / r[:, None]


def distance_to_flat(grid: PolarGrid) -> np.ndarray:
    """d = r sin(π/2 - θ), the distance to the hyperplane θ = π/2."""
    return grid.r_nodes[:, None] * np.sin(math.pi / 2 - grid.theta_nodes)[None, :]


def gradient_estimate_check(field_: PolarField, params: ProblemParams,
                            r_range: Optional[tuple] = None) -> tuple:
    """sup |∇u| d^{1/(q+1-p)} over interior nodes with r in r_range."""
    grid = field_.grid
    lo, hi = r_range if r_range is not None else (3.0 * grid.eps, 0.5)
    r = grid.r_nodes
    rows = (r >= lo) & (r <= hi)
    expo = 1.0 / (params.require_q() + 1.0 - params.p)
    val = _gradient(field_) * distance_to_flat(grid) ** expo
    const = float(np.max(val[rows][:, :-1]))
    return const, bool(math.isfinite(const))


@dataclass
class HarnackReport:
    max_ratio: float
    guard_triggered: bool
    excluded_nodes: int
    per_shell: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return {"max_ratio": self.max_ratio, "guard_triggered": self.guard_triggered,
                "excluded_nodes": self.excluded_nodes}


def harnack_spot_check(field_: PolarField, r_range: Optional[tuple] = None) -> HarnackReport:
    """max over pairs with |x|/2 <= |y| <= 2|x| of [u(x)/d(x)] / [u(y)/d(y)]."""
    grid = field_.grid
    lo, hi = r_range if r_range is not None else (3.0 * grid.eps, 0.25)
    r = grid.r_nodes
    u = field_.u[:, :-1]
    d = distance_to_flat(grid)[:, :-1]
    bad = ~(u > 0)
    f = np.where(bad, np.nan, u / d)
    shells = np.flatnonzero((r >= lo) & (r <= hi))
    guard = bool(np.any(bad[shells]))
    fmax = np.nanmax(f, axis=1)
    fmin = np.nanmin(f, axis=1)
    per = np.full(shells.size, np.nan)
    for k, i in enumerate(shells):
        nb = np.flatnonzero((r >= 0.5 * r[i]) & (r <= 2.0 * r[i]) & (r >= lo) & (r <= hi))
        per[k] = fmax[i] / np.nanmin(fmin[nb])
    return HarnackReport(float(np.nanmax(per)), guard, int(np.count_nonzero(bad[shells])), per)


def physical_residual(grid: PolarGrid, params: ProblemParams, w: np.ndarray,
                      delta: float = 0.0) -> np.ndarray:
    """Discrete -Δ_p w + |∇w|^q at interior nodes (NaN on the boundary)."""
    op = ScaledOperator(grid, params.p, params.require_q(), 0.0, delta)
    R = op.residual(w, w)
    out = R * (grid.r_nodes ** (-params.p))[:, None]
    out[0] = out[-1] = np.nan
    out[:, -1] = np.nan
    return out


def scaling_invariance_check(params: ProblemParams, ell: float, grid: PolarGrid = None,
                             w: Callable = None) -> float:
    """Relative sup gap between R_h[T_ℓ w](x) and ℓ^{q/(q+1-p)} R_h[w](ℓx).

    T_ℓ[w](x) = ℓ^{β_q} w(ℓx) leaves the equation invariant, so the gap only
    reflects discretization and the linear interpolation in ln r.
    """
    if not (0.0 < ell <= 1.0):
        raise ValueError("ell must lie in (0, 1]")
    grid = grid or PolarGrid(1e-2, 129, 33, params.N)
    bq = beta_q(params)
    if w is None:
        def w(r, th):
            return r ** (-bq) * np.cos(th)
    R, TH = np.meshgrid(grid.r_nodes, grid.theta_nodes, indexing="ij")
    base = physical_residual(grid, params, w(R, TH))
    scaled = physical_residual(grid, params, ell ** bq * w(ell * R, TH))
    power = params.require_q() / (params.require_q() + 1.0 - params.p)
    t = grid.t_nodes
    shifted = t + math.log(ell)
    rows = np.flatnonzero((shifted >= t[1] - 1e-12) & (np.arange(t.size) > 0) & (np.arange(t.size) < t.size - 1))
    if rows.size == 0:
        raise ValueError("no common nodes for this ell")
    ref = np.empty((rows.size, grid.n_theta - 1))
    for j in range(grid.n_theta - 1):
        col = base[1:-1, j]
        ref[:, j] = ell ** power * np.interp(shifted[rows], t[1:-1], col)
    diff = scaled[rows, :-1] - ref
    return float(np.max(np.abs(diff)) / np.max(np.abs(ref)))


def universal_bound_ratio(field_: PolarField, c2_rule: str = "sharp", shifted: bool = False) -> float:
    """max over r in [2ε, 1) of max_θ u / (c₂(r^{-β_q} - 1)).

    With shifted=True the barrier is c₂((r-ε)^{-β_q} - (1-ε)^{-β_q}), the
    supersolution centred on the inner sphere.
    """
    params = field_.params
    c2 = c2_sharp(params) if c2_rule == "sharp" else c2_nominal(params)
    bq = beta_q(params)
    eps = field_.grid.eps
    r = field_.grid.r_nodes
    mask = (r >= 2.0 * eps) & (r < 1.0)
    if shifted:
        bound = c2 * ((r[mask] - eps) ** (-bq) - (1.0 - eps) ** (-bq))
    else:
        bound = c2 * (r[mask] ** (-bq) - 1.0)
    return float(np.max(field_.u[mask].max(axis=1) / bound))


def delta_halving_study(grid: PolarGrid, mode: str, params: ProblemParams, amplitude: float = 1.0,
                        reg_delta: float = 1e-6, **kw) -> dict:
    """Solve at δ and δ/2; report the relative field change and the change in β̂."""
    a = solve_steady(grid, mode, params, amplitude, reg_delta=reg_delta, **kw)
    b = solve_steady(grid, mode, params, amplitude, reg_delta=reg_delta / 2, **kw)
    rows = slice(1, -1)
    change = float(np.max(np.abs(a.u[rows] - b.u[rows])) / np.max(np.abs(b.u[rows])))
    out = {"reg_delta": reg_delta, "field_change": change,
           "converged": a.converged and b.converged}
    try:
        out["beta_hat_change"] = abs(fit_exponent(a).beta_hat - fit_exponent(b).beta_hat)
    except FitError:
        out["beta_hat_change"] = None
    return out


def monotone_in_k(fields, tol: float = 1e-10) -> bool:
    """Nodewise u_{k1} <= u_{k2} for fields ordered by increasing amplitude."""
    for lo, hi in zip(fields, fields[1:]):
        scale = max(1.0, float(np.max(np.abs(hi.u))))
        if np.any(lo.u - hi.u > tol * scale):
            return False
    return True


# ---------------------------------------------------------------- experiments

def dichotomy_experiment(params: ProblemParams, grid: PolarGrid, k: float = 1.0,
                         A: float = 1e4, reg_delta: float = 1e-6) -> dict:
    """Weak and strong runs with exponent fits and profile distances."""
    bs = get_beta_star(params)
    eig = solve_beta_star(params.with_q(None))
    om = solve_omega_star(params)
    th = grid.theta_nodes
    weak = solve_steady(grid, "weak", params, amplitude=k, reg_delta=reg_delta, beta_star=bs,
                        profile=_data_profile(th, eig.profile.theta, eig.profile.omega))
    strong = solve_steady(grid, "strong", params, amplitude=A, reg_delta=reg_delta, beta_star=bs,
                          profile=_data_profile(th, om.profile.theta, om.profile.omega))
    fw, fs = fit_exponent(weak), fit_exponent(strong)
    bq = beta_q(params)
    return {
        "beta_star": bs, "beta_q": bq,
        "weak": {"fit": fw.as_dict(), "rel_error": abs(fw.beta_hat - bs) / bs,
                 "profile_distance": profile_distance(fw, th, eig.profile.theta, eig.profile.omega),
                 "converged": weak.converged, "stats": weak.solver_stats},
        "strong": {"fit": fs.as_dict(), "rel_error": abs(fs.beta_hat - bq) / bq,
                   "profile_distance": profile_distance(fs, th, om.profile.theta, om.profile.omega),
                   "distance_to_eigenprofile": profile_distance(fs, th, eig.profile.theta,
                                                                eig.profile.omega),
                   "converged": strong.converged, "stats": strong.solver_stats},
        "fields": (weak, strong),
    }


def _data_profile(theta, ref_theta, ref_omega):
    out = np.interp(theta, ref_theta, ref_omega)
    out[-1] = 0.0
    return np.maximum(out, 0.0)


def removability_experiment(params: ProblemParams, amplitudes=(10.0, 1e3, 1e6),
                            eps_list=(1e-3, 1e-4), n_r: int = 256, n_theta: int = 64,
                            probe=(0.1, 0.0), reg_delta: float = 1e-6) -> dict:
    """Flat-data runs at q >= q_*: barrier bound, A-independence and decay in ε."""
    bq = beta_q(params)
    c2 = c2_sharp(params)
    rows = []
    for eps in eps_list:
        grid = PolarGrid(eps, n_r, n_theta, params.N)
        r = grid.r_nodes
        i_probe = int(np.argmin(np.abs(r - probe[0])))
        j_probe = int(np.argmin(np.abs(grid.theta_nodes - probe[1])))
        for A in amplitudes:
            f = solve_steady(grid, "flat", params, amplitude=A, reg_delta=reg_delta)
            mask = (r >= 2 * eps) & (r < 1.0)
            umax = f.u[mask].max(axis=1)
            rows.append({
                "eps": eps, "A": A, "converged": f.converged,
                "sup_scaled": float(np.max(umax * r[mask] ** bq)),
                "barrier_ratio": universal_bound_ratio(f, "sharp", shifted=True),
                "nominal_barrier_ratio": universal_bound_ratio(f, "nominal", shifted=True),
                "probe_value": float(f.u[i_probe, j_probe]),
                "iterations": f.solver_stats["iterations"],
            })
    return {"beta_q": bq, "c2_sharp": c2, "runs": rows}
