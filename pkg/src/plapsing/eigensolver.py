"""Spherical p-harmonic eigenproblem on the upper half sphere.

A separable p-harmonic function r^{-β} ω(θ) vanishing on the flat boundary
θ = π/2 exists only for β = β_*.  For axisymmetric ω the profile equation is

    -ω'' - (N-2) cot θ ω' - (p-2)(β²ω + ω'')ω'^2 / (β²ω² + ω'^2) = β Λ_β ω,

with ω'(0) = 0 and ω(π/2) = 0.  Writing ω = r cos φ, -ω' = β r sin φ turns it
into a first-order phase equation for φ plus a quadrature for log r.  We shoot
on β so that φ(π/2) = π/2 and recover ω from (r, φ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import ode, simpson

from .exponents import ProblemParams, lambda_of

THETA0 = 1e-6
RTOL = 1e-12
ATOL = 1e-14
MIN_M = 64


class IntegrationFailure(RuntimeError):
    """The phase left [0, π] or the step control gave up."""

    def __init__(self, message, theta_exit=None):
        super().__init__(message)
        self.theta_exit = theta_exit


class NoSignChange(RuntimeError):
    pass


@dataclass
class PhasePath:
    beta: float
    params: ProblemParams
    theta: np.ndarray
    phi: np.ndarray
    log_r: np.ndarray
    defect: float

    @property
    def phi_theta(self) -> np.ndarray:
        f = phase_rhs(self.beta, self.params)
        return np.array([f(t, (ph, 0.0))[0] for t, ph in zip(self.theta, self.phi)])


@dataclass
class AzimuthalProfile:
    beta: float
    theta: np.ndarray
    omega: np.ndarray
    omega_theta: np.ndarray
    residual_sup: float
    kind: str  # "eigen" or "singular"
    omega_thetatheta: np.ndarray = None


@dataclass
class EigenResult:
    beta_star: float
    profile: AzimuthalProfile
    iterations: int
    bracket: tuple
    identity_gap: float
    path: PhasePath = field(default=None, repr=False)


def phase_rhs(beta: float, params: ProblemParams):
    """Right-hand side of the regularized (φ, log r) system."""
    N, p = params.N, params.p
    lam = lambda_of(beta, params)

    def f(theta, y):
        s, c = math.sin(y[0]), math.cos(y[0])
        den = (p - 1.0) * s * s + c * c
        cot = math.cos(theta) / math.sin(theta)
        dphi = ((2 - N) * cot * s * c + (p - 1.0) * beta * s * s + lam * c * c) / den
        dlogr = ((2 - N) * cot * s * s + (lam - beta) * s * c) / den
        return [dphi, dlogr]

    return f


def _start(beta, params):
    lam = lambda_of(beta, params)
    return [lam / (params.N - 1) * THETA0, 0.0]


def theta_grid(M: int) -> np.ndarray:
    """Uniform grid on [0, π/2] with M intervals."""
    return np.linspace(0.0, math.pi / 2, M + 1)


def integrate_phase(beta: float, params: ProblemParams, M: int = 4096) -> PhasePath:
    """Integrate the phase system on the uniform grid, first node moved to θ₀."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if M < MIN_M:
        raise ValueError(f"M must be >= {MIN_M}, got {M}")
    theta = theta_grid(M)
    theta[0] = THETA0
    solver = ode(phase_rhs(beta, params)).set_integrator(
        "dop853", rtol=RTOL, atol=ATOL, nsteps=200000)
    solver.set_initial_value(_start(beta, params), THETA0)
    phi = np.empty(M + 1)
    log_r = np.empty(M + 1)
    phi[0], log_r[0] = solver.y
    for j in range(1, M + 1):
        y = solver.integrate(theta[j])
        if not solver.successful():
            raise IntegrationFailure(f"step control failed near theta={theta[j]:.6g}", theta[j])
        if not (0.0 <= y[0] <= math.pi):
            raise IntegrationFailure(
                f"phase left [0, pi] near theta={theta[j]:.6g} (phi={y[0]:.6g})", theta[j])
        phi[j], log_r[j] = y
    return PhasePath(beta, params, theta, phi, log_r, phi[-1] - math.pi / 2)


def shooting_defect(beta: float, params: ProblemParams, checkpoints: int = 64) -> float:
    """φ(π/2) - π/2, with exits above π (below 0) mapped to +∞ (-∞)."""
    solver = ode(phase_rhs(beta, params)).set_integrator(
        "dop853", rtol=RTOL, atol=ATOL, nsteps=200000)
    solver.set_initial_value(_start(beta, params), THETA0)
    for t in np.linspace(THETA0, math.pi / 2, checkpoints + 1)[1:]:
        y = solver.integrate(t)
        if not solver.successful():
            raise IntegrationFailure(f"step control failed near theta={t:.6g}", t)
        if y[0] > math.pi:
            return math.inf
        if y[0] < 0.0:
            return -math.inf
    return y[0] - math.pi / 2


def initial_bracket(params: ProblemParams) -> tuple:
    N, p = params.N, params.p
    lo = max((N - p) / (p - 1.0), 0.0) + 1e-9
    hi = (N - 1.0) / (p - 1.0) + (1.0 if p >= 2.0 else 0.0)
    return lo, hi


def solve_beta_star(params: ProblemParams, tol: float = 1e-10, M: int = 4096) -> EigenResult:
    """Bisection on the shooting defect; the defect is negative below β_*."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = initial_bracket(params)
    d_lo = shooting_defect(lo, params)
    d_hi = shooting_defect(hi, params)
    for _ in range(60):
        if d_hi > 0:
            break
        lo, d_lo = hi, d_hi
        hi *= 2.0
        d_hi = shooting_defect(hi, params)
    if not (d_lo < 0 < d_hi):
        raise NoSignChange(
            f"defect has no sign change on [{lo}, {hi}]: {d_lo}, {d_hi}")
    iterations = 0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        d_mid = shooting_defect(mid, params)
        iterations += 1
        if d_mid == 0.0:
            lo = hi = mid
            break
        if d_mid < 0:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    path = integrate_phase(beta, params, M)
    profile = reconstruct_profile(path)
    gap = eigen_identity_gap(profile, params)
    return EigenResult(beta, profile, iterations, (lo, hi), gap, path)


def omega_thetatheta(theta, omega, omega_theta, beta, params, absorption=None):
    """Solve the divided profile equation for ω''; absorption adds D^{(q+2-p)/2}."""
    N, p = params.N, params.p
    lam = lambda_of(beta, params)
    theta = np.asarray(theta, dtype=float)
    w = np.asarray(omega, dtype=float)
    wp = np.asarray(omega_theta, dtype=float)
    D = beta * beta * w * w + wp * wp
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.where(theta > 0, np.cos(theta) / np.sin(theta), 0.0)
        ratio = np.where(D > 0, wp * wp / D, 0.0)
        num = -(N - 2) * cot * wp - (p - 2) * beta * beta * w * ratio - beta * lam * w
        if absorption is not None:
            num = num + D ** ((absorption + 2.0 - p) / 2.0)
        out = num / (1.0 + (p - 2) * ratio)
    # pole limit: ω'' = 2a with the series coefficient a
    at_pole = theta == 0
    if np.any(at_pole):
        w0 = w[at_pole]
        extra = (beta * w0) ** (absorption + 2.0 - p) if absorption is not None else 0.0
        out[at_pole] = (extra - beta * lam * w0) / (N - 1)
    return out


def eigen_residual(theta, omega, omega_theta, omega_tt, beta, params):
    """Divided-form residual of the profile equation."""
    N, p = params.N, params.p
    lam = lambda_of(beta, params)
    D = beta * beta * omega * omega + omega_theta * omega_theta
    cot = np.cos(theta) / np.sin(theta)
    return (-omega_tt - (N - 2) * cot * omega_theta
            - (p - 2) * (beta * beta * omega + omega_tt) * omega_theta ** 2 / D
            - beta * lam * omega)


def reconstruct_profile(path: PhasePath) -> AzimuthalProfile:
    """ω = r cos φ, ω_θ = -β r sin φ on [0, π/2], normalized so that ω(0) = 1."""
    beta = path.beta
    r = np.exp(path.log_r)
    theta = path.theta.copy()
    theta[0] = 0.0
    omega = r * np.cos(path.phi)
    omega_theta = -beta * r * np.sin(path.phi)
    omega[0], omega_theta[0] = 1.0, 0.0
    scale = omega[0]
    omega = omega / scale
    omega_theta = omega_theta / scale
    w_tt = omega_thetatheta(theta, omega, omega_theta, beta, path.params)
    h = theta[2] - theta[1]
    fd = (omega_theta[2:] - omega_theta[:-2]) / (2 * h)
    res = eigen_residual(theta[1:-1], omega[1:-1], omega_theta[1:-1], fd, beta, path.params)
    return AzimuthalProfile(beta, theta, omega, omega_theta, float(np.max(np.abs(res))),
                            "eigen", w_tt)


def eigen_identity_gap(profile: AzimuthalProfile, params: ProblemParams) -> float:
    """Relative gap between the two sides of the integrated eigenvalue identity.

    Multiplying the profile equation by cos θ sin^{N-2} θ and integrating by
    parts gives

        (2-p) ∫ (β²ω + ω'')/(β²ω² + ω'^2) ω'^2 cos θ sin^{N-2} θ
            = ((p-1)β - (N-1))(β+1) ∫ ω cos θ sin^{N-2} θ.

    Both sides are of degree one in ω.
    """
    if profile.kind != "eigen":
        raise ValueError("identity gap needs an eigen profile")
    N, p, beta = params.N, params.p, profile.beta
    if p == 2.0 or p == N:
        # degenerate cases: at p = 2 both prefactors vanish, at p = N the
        # profile is cos θ so β²ω + ω'' and (p-1)β - (N-1) are both zero
        return 0.0
    th, w, wt = profile.theta, profile.omega, profile.omega_theta
    wtt = profile.omega_thetatheta
    if wtt is None:
        wtt = omega_thetatheta(th, w, wt, beta, params)
    weight = np.cos(th) * np.sin(th) ** (N - 2)
    D = beta * beta * w * w + wt * wt
    with np.errstate(invalid="ignore", divide="ignore"):
        lhs_f = np.where(D > 0, (beta * beta * w + wtt) / D * wt * wt, 0.0) * weight
    lhs = (2.0 - p) * simpson(lhs_f, x=th)
    base = simpson(w * weight, x=th)
    rhs = ((p - 1.0) * beta - (N - 1.0)) * (beta + 1.0) * base
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) / denom


@dataclass
class PropertyReport:
    phi_monotone_ok: bool
    max_phi_theta_excess: float
    phi_theta_constant: bool
    convexity_ok: bool
    min_convexity: float
    laplacian_ratio_c: float
    endpoint_slope_ok: bool
    endpoint_slope_error: float
    failing_nodes: dict

    def as_dict(self):
        return {k: (v if not isinstance(v, (np.floating, np.bool_)) else v.item())
                for k, v in self.__dict__.items()}


def certify_properties(path: PhasePath, profile: AzimuthalProfile, tol: float = 1e-8,
                       endpoint_tol: float = 1e-6) -> PropertyReport:
    """Nodewise checks of φ_θ <= β, β²ω + ω_θθ >= 0, |Δ'ω| <= cω and φ_θ(π/2) = β."""
    if len(path.theta) < MIN_M + 1:
        raise ValueError(f"need at least {MIN_M} intervals")
    beta = path.beta
    params = path.params
    phi_t = path.phi_theta
    excess = phi_t - beta
    conv = beta * beta * profile.omega + profile.omega_thetatheta
    th = profile.theta
    inner = slice(1, -1)
    cot = np.cos(th[inner]) / np.sin(th[inner])
    lap = profile.omega_thetatheta[inner] + (params.N - 2) * cot * profile.omega_theta[inner]
    ratio = np.abs(lap) / profile.omega[inner]
    end_err = abs(phi_t[-1] - beta)
    return PropertyReport(
        phi_monotone_ok=bool(np.all(excess <= tol)),
        max_phi_theta_excess=float(np.max(excess)),
        phi_theta_constant=bool(np.ptp(phi_t) <= tol),
        convexity_ok=bool(np.all(conv >= -tol)),
        min_convexity=float(np.min(conv)),
        laplacian_ratio_c=float(np.max(ratio)),
        endpoint_slope_ok=bool(end_err <= endpoint_tol),
        endpoint_slope_error=float(end_err),
        failing_nodes={
            "phi_theta": np.flatnonzero(excess > tol).tolist(),
            "convexity": np.flatnonzero(conv < -tol).tolist(),
        },
    )
