"""Strongly singular profiles, explicit barriers and subsolution residuals.

The separable solutions u = r^{-β_q} ω(θ) of -Δ_p u + |∇u|^q = 0 vanishing on
the flat boundary satisfy the azimuthal equation

    -ω'' - (N-2) cot θ ω' - (p-2)(β²ω + ω'')ω'^2/D + D^{(q+2-p)/2} - βΛ_β ω = 0,

with D = β²ω² + ω'^2 and β = β_q.  A positive solution ω_* exists exactly when
q < q_*.  We shoot from the pole on ω(0): small starts cross zero before π/2,
large starts stay positive (or blow up), and ω_*(0) sits at the transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .eigensolver import (THETA0, AzimuthalProfile, EigenResult, omega_thetatheta,
                          solve_beta_star, theta_grid)
from .exponents import (DomainError, ProblemParams, beta_q, beta_star_closed_form,
                        lambda_of, nu_of, q_star)

BLOWUP = 1e8
SWEEP = (1e-6, 1e6, 25)


class ThresholdError(RuntimeError):
    """No crossed_zero / reached_end bracket: the q >= q_* signature."""

    def __init__(self, message, outcomes=None):
        super().__init__(message)
        self.outcomes = outcomes or []


class DegeneratePoint(ValueError):
    pass


@dataclass
class ShotOutcome:
    omega0: float
    exit: str  # reached_end | crossed_zero | derivative_blowup
    end_value: float
    theta_cross: Optional[float] = None
    theta_exit: Optional[float] = None

    def as_dict(self):
        return {"omega0": self.omega0, "exit": self.exit, "end_value": self.end_value}


def hj_residual(omega, omega_theta, omega_thetatheta, theta, beta, params: ProblemParams,
                absorption: bool = True):
    """Divided-form residual of the azimuthal Hamilton-Jacobi profile equation.

    With absorption=False the residual reduces to the eigen equation.
    """
    N, p = params.N, params.p
    w = np.asarray(omega, dtype=float)
    wt = np.asarray(omega_theta, dtype=float)
    wtt = np.asarray(omega_thetatheta, dtype=float)
    th = np.asarray(theta, dtype=float)
    D = beta * beta * w * w + wt * wt
    if np.any(D == 0):
        raise DegeneratePoint("beta^2 omega^2 + omega_theta^2 vanishes")
    lam = lambda_of(beta, params)
    res = (-wtt - (N - 2) * np.cos(th) / np.sin(th) * wt
           - (p - 2) * (beta * beta * w + wtt) * wt * wt / D - beta * lam * w)
    if absorption:
        res = res + D ** ((params.require_q() + 2.0 - p) / 2.0)
    return res


def _profile_rhs(beta, params):
    N, p, q = params.N, params.p, params.require_q()
    lam = lambda_of(beta, params)
    e = (q + 2.0 - p) / 2.0

    def f(th, y):
        w, wp = y
        D = beta * beta * w * w + wp * wp
        ratio = wp * wp / D if D > 0 else 0.0
        cot = math.cos(th) / math.sin(th)
        num = -(N - 2) * cot * wp - (p - 2) * beta * beta * w * ratio + D ** e - beta * lam * w
        return [wp, num / (1.0 + (p - 2) * ratio)]

    return f


def _pole_series(omega0, beta, params):
    q, p = params.require_q(), params.p
    lam = lambda_of(beta, params)
    a = ((beta * omega0) ** (q + 2.0 - p) - beta * lam * omega0) / (2.0 * (params.N - 1))
    return [omega0 + a * THETA0 ** 2, 2.0 * a * THETA0]


def natural_scale(params: ProblemParams) -> float:
    """Pole value where absorption balances the linear term: (βω)^{q+2-p} = β|Λ|ω."""
    bq = beta_q(params)
    lam = max(abs(lambda_of(bq, params)), 1e-3)
    m = params.require_q() + 1.0 - params.p
    return (lam * bq ** (-m)) ** (1.0 / m)


def _integrate(omega0, params, t_eval=None):
    beta = beta_q(params)

    def crossing(th, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    def blowup(th, y):
        return abs(y[1]) - BLOWUP * omega0
    blowup.terminal = True

    return solve_ivp(_profile_rhs(beta, params), (THETA0, math.pi / 2),
                     _pole_series(omega0, beta, params), method="DOP853",
                     rtol=1e-11, atol=1e-13 * omega0, events=[crossing, blowup], t_eval=t_eval)


def shoot_profile(omega0: float, params: ProblemParams, M: int = 4096) -> ShotOutcome:
    """Integrate from the pole with ω(0) = omega0 and classify the exit."""
    if not omega0 > 0:
        raise DomainError("omega0 must be positive")
    sol = _integrate(omega0, params)
    if sol.t_events[0].size:
        return ShotOutcome(omega0, "crossed_zero", 0.0, theta_cross=float(sol.t_events[0][0]))
    if sol.t_events[1].size or sol.status < 0:
        th = float(sol.t_events[1][0]) if sol.t_events[1].size else float(sol.t[-1])
        return ShotOutcome(omega0, "derivative_blowup", 0.0, theta_exit=th)
    return ShotOutcome(omega0, "reached_end", float(sol.y[0, -1]))


def sweep(params: ProblemParams, spec=SWEEP) -> list:
    """Log-spaced ω(0) sweep; the range is relative to natural_scale(params)."""
    lo, hi, n = spec
    w_s = natural_scale(params)
    return [shoot_profile(float(w), params) for w in w_s * np.geomspace(lo, hi, int(n))]


def _brackets(outcomes):
    """Adjacent (crossed_zero, reached_end) pairs in a sweep."""
    return [(a, b) for a, b in zip(outcomes, outcomes[1:])
            if a.exit == "crossed_zero" and b.exit == "reached_end"]


def _beta_star(params, beta_star=None):
    if beta_star is not None:
        return beta_star
    bs = beta_star_closed_form(params)
    return bs if bs is not None else solve_beta_star(params.with_q(None)).beta_star


@dataclass
class OmegaStarResult:
    profile: AzimuthalProfile
    omega0: float
    bracket: tuple
    end_value: float
    sign_changes: int
    outcomes: list = field(default_factory=list, repr=False)


def solve_omega_star(params: ProblemParams, tol: float = 1e-12, M: int = 4096,
                     sweep_spec=SWEEP) -> OmegaStarResult:
    """Bisection on ω(0) between a zero crossing and a positive end value."""
    outcomes = sweep(params, sweep_spec)
    pairs = _brackets(outcomes)
    if not pairs:
        raise ThresholdError(
            f"no crossed_zero/reached_end bracket for q={params.q} "
            f"over omega0/scale in [{sweep_spec[0]}, {sweep_spec[1]}]", outcomes)
    lo, hi = pairs[0][0].omega0, pairs[0][1].omega0
    while (hi - lo) > tol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        out = shoot_profile(mid, params)
        if out.exit == "crossed_zero":
            lo = mid
        elif out.exit == "reached_end":
            hi = mid
        else:
            raise RuntimeError(f"derivative blowup inside the bracket at omega0={mid}")
    profile = omega_profile(hi, params, M)
    changes = sum(1 for a, b in zip(outcomes, outcomes[1:])
                  if (a.exit == "crossed_zero") != (b.exit == "crossed_zero"))
    return OmegaStarResult(profile, hi, (lo, hi), float(profile.omega[-1]), changes, outcomes)


def omega_profile(omega0: float, params: ProblemParams, M: int = 4096) -> AzimuthalProfile:
    """Profile for a given pole value on the uniform grid of M intervals."""
    beta = beta_q(params)
    theta = theta_grid(M)
    t_eval = theta.copy()
    t_eval[0] = THETA0
    sol = _integrate(omega0, params, t_eval=t_eval)
    if sol.y.shape[1] != M + 1:
        raise RuntimeError("profile did not reach pi/2")
    omega = sol.y[0].copy()
    omega_t = sol.y[1].copy()
    omega[0], omega_t[0] = omega0, 0.0
    q = params.require_q()
    wtt = omega_thetatheta(theta, omega, omega_t, beta, params, absorption=q)
    h = theta[1] - theta[0]
    fd = (omega_t[2:] - omega_t[:-2]) / (2 * h)
    res = hj_residual(omega[1:-1], omega_t[1:-1], fd, theta[1:-1], beta, params)
    # relative to the pole value, which can be astronomically large for q near p - 1
    sup = float(np.max(np.abs(res))) / max(1.0, omega0)
    return AzimuthalProfile(beta, theta, omega, omega_t, sup, "singular", wtt)


@dataclass
class NonexistenceReport:
    q: float
    q_star: float
    bracket_found: bool
    signature: str
    outcomes: list

    def as_dict(self):
        return {"q": self.q, "q_star": self.q_star, "bracket_found": self.bracket_found,
                "signature": self.signature, "outcomes": [o.as_dict() for o in self.outcomes]}


def _signature(outcomes):
    code = {"crossed_zero": "c", "reached_end": "e", "derivative_blowup": "b"}
    return "".join(code[o.exit] for o in outcomes)


def nonexistence_scan(params: ProblemParams, sweep_spec=SWEEP, beta_star=None,
                      check_pre: bool = True) -> NonexistenceReport:
    """Sweep ω(0) and confirm no crossed_zero/reached_end bracket exists."""
    bs = _beta_star(params, beta_star)
    qs = q_star(bs, params)
    q = params.require_q()
    if check_pre and q < qs - 1e-8:
        raise DomainError(f"nonexistence scan needs q >= q_* = {qs}, got {q}")
    outcomes = sweep(params, sweep_spec)
    return NonexistenceReport(q, qs, bool(_brackets(outcomes)), _signature(outcomes), outcomes)


def has_bracket(params: ProblemParams, sweep_spec=SWEEP) -> bool:
    return bool(_brackets(sweep(params, sweep_spec)))


def locate_threshold(N: int, p: float, q_lo: float, q_hi: float, rel_tol: float = 1e-3,
                     sweep_spec=SWEEP) -> tuple:
    """Bisection in q between a value with an ω_* bracket and one without."""
    ok_lo = has_bracket(ProblemParams(N, p, q_lo), sweep_spec)
    ok_hi = has_bracket(ProblemParams(N, p, q_hi), sweep_spec)
    if not ok_lo or ok_hi:
        raise ValueError("need existence at q_lo and nonexistence at q_hi")
    while q_hi - q_lo > rel_tol * q_hi:
        mid = 0.5 * (q_lo + q_hi)
        if has_bracket(ProblemParams(N, p, mid), sweep_spec):
            q_lo = mid
        else:
            q_hi = mid
    return q_lo, q_hi


# ---------------------------------------------------------------- barriers

@dataclass
class BarrierSpec:
    """Radial barrier.

    power:      c₂((s-ε)^{-β_q} - (R-ε)^{-β_q}) on (ε, R]
    log:        (p-1) ln((R-ε)/(s-ε)) on (ε, R], the q = p case
    tangential: a(r'-s)^{-β_q} - b on [τ, r')
    """

    kind: str
    eps: float = 0.1
    R: float = 1.0
    a: float = 1.0
    b: float = 0.0
    c2_rule: str = "nominal"
    c2_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "log", "tangential"):
            raise DomainError(f"unknown barrier kind {self.kind}")
        if self.kind == "tangential":
            if not (0 < self.eps <= self.R / 2):
                raise DomainError("need 0 < tau <= r'/2")
        elif not (0 < self.eps < self.R):
            raise DomainError("need 0 < eps < R")


def c2_nominal(params: ProblemParams) -> float:
    """The nominal constant (p-q)^{-1} (q+p-1)^{(q-p)/(q+1-p)}."""
    p, q = params.p, params.require_q()
    return (p - q) ** -1 * (q + p - 1.0) ** ((q - p) / (q + 1.0 - p))


def c2_sharp(params: ProblemParams) -> float:
    """Smallest c₂ making the shifted power barrier a supersolution.

    The residual is proportional to (c₂β_q)^{q+1-p} - (p-1)/(q+1-p) + (N-1)(s-ε)/s,
    so the sharp constant is (p-q)^{-1}(q+1-p)^{(q-p)/(q+1-p)}(p-1)^{1/(q+1-p)}.
    """
    p, q = params.p, params.require_q()
    m = q + 1.0 - p
    return (p - q) ** -1 * m ** ((q - p) / m) * (p - 1.0) ** (1.0 / m)


def tangential_amplitude(params: ProblemParams, tau: float, r_prime: float) -> float:
    """Smallest a with (aβ_q)^{q+1-p} >= (p-1)/(q+1-p) + (N-1)(r'-τ)/τ."""
    p, q = params.p, params.require_q()
    m = q + 1.0 - p
    rhs = (p - 1.0) / m + (params.N - 1) * (r_prime - tau) / tau
    return rhs ** (1.0 / m) / beta_q(params)


def radial_residual(s, v1, v2, params: ProblemParams, q: float):
    """|v'|^{p-2}(-(p-1)v'' - (N-1)v'/s) + |v'|^q."""
    p = params.p
    a = np.abs(v1)
    if np.any(a == 0):
        raise DegeneratePoint("v' vanishes on the grid")
    return a ** (p - 2) * (-(p - 1.0) * v2 - (params.N - 1) * v1 / s) + a ** q


@dataclass
class BarrierReport:
    min_residual: float
    min_normalized: float
    sign_ok: bool
    c2: Optional[float] = None
    amplitude_ok: Optional[bool] = None
    s: np.ndarray = field(default=None, repr=False)
    residual: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return {"min_residual": self.min_residual, "min_normalized": self.min_normalized,
                "sign_ok": self.sign_ok, "c2": self.c2, "amplitude_ok": self.amplitude_ok}


def barrier_residual(spec: BarrierSpec, params: ProblemParams, n: int = 1000,
                     tol: float = 1e-10) -> BarrierReport:
    """Evaluate the radial residual with exact derivatives on an n-point grid.

    The sign test uses the residual divided by |v'|^{p-1}/(s - ε), the natural
    scale of each term, so that tol is dimensionless.
    """
    p = params.p
    c2 = None
    amp_ok = None
    if spec.kind == "tangential":
        bq = beta_q(params)
        q = params.require_q()
        tau, rp = spec.eps, spec.R
        s = tau + (rp - tau) * np.arange(n) / n
        d = rp - s
        v1 = spec.a * bq * d ** (-bq - 1)
        v2 = spec.a * bq * (bq + 1) * d ** (-bq - 2)
        m = q + 1.0 - p
        lhs = (spec.a * bq) ** m
        amp_ok = bool(np.all(lhs >= ((p - 1.0) / m + (params.N - 1) * d / s) * (1 - 1e-12)))
    else:
        eps, R = spec.eps, spec.R
        s = eps + (R - eps) * np.arange(1, n + 1) / n
        d = s - eps
        if spec.kind == "power":
            bq = beta_q(params)
            q = params.require_q()
            c2 = {"nominal": c2_nominal, "sharp": c2_sharp}[spec.c2_rule](params) * spec.c2_scale
            v1 = -c2 * bq * d ** (-bq - 1)
            v2 = c2 * bq * (bq + 1) * d ** (-bq - 2)
        else:
            q = p
            v1 = -(p - 1.0) / d
            v2 = (p - 1.0) / d ** 2
    res = radial_residual(s, v1, v2, params, q)
    scale = np.abs(v1) ** (p - 1) / d
    norm = res / scale
    return BarrierReport(float(np.min(res)), float(np.min(norm)), bool(np.min(norm) >= -tol),
                         c2, amp_ok, s, res)


# ------------------------------------------------------------- subsolution

@dataclass
class SubsolutionSpec:
    gamma: float
    k: float = 0.0
    epsilon0: Optional[float] = None
    g_choice: str = "linear"  # linear | damped | power | glued

    def __post_init__(self):
        if self.g_choice not in ("linear", "damped", "power", "glued"):
            raise DomainError(f"unknown g choice {self.g_choice}")
        if self.gamma < 0 or self.k < 0:
            raise DomainError("gamma and k must be nonnegative")


@dataclass
class SubsolutionReport:
    theta: np.ndarray
    psi: np.ndarray
    Q1: np.ndarray
    region: np.ndarray
    gamma: float
    gamma0: float
    gamma_ok: bool
    C: float
    epsilon0: float
    k0: Optional[float]
    max_Q1_region: float
    fraction_nonpositive: float
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        return {"gamma": self.gamma, "gamma0": self.gamma0, "gamma_ok": self.gamma_ok,
                "C": self.C, "epsilon0": self.epsilon0, "k0": self.k0,
                "max_Q1_region": self.max_Q1_region,
                "fraction_nonpositive": self.fraction_nonpositive}


def _eigen_data(eigen: EigenResult, params: ProblemParams):
    prof = eigen.profile
    beta = eigen.beta_star
    th, psi, pt, ptt = prof.theta, prof.omega.copy(), prof.omega_theta, prof.omega_thetatheta
    psi[-1] = max(psi[-1], 0.0)
    N = params.N
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = ptt + (N - 2) * np.where(th > 0, np.cos(th) / np.sin(th), 0.0) * pt
    lap[0] = (N - 1) * ptt[0]
    return beta, lambda_of(beta, params), th, psi, pt, ptt, lap


def gamma_bound(beta, lam, params: ProblemParams) -> tuple:
    """(C, min{C/2, ν, β_*}) with C = Λ + β_* + (p-2)(β_* + 2)."""
    p = params.p
    C = lam + beta + (p - 2.0) * (beta + 2.0)
    return C, min(C / 2.0, nu_of(beta, params), beta)


def q1_general(gamma, G1, G2, beta, lam, psi, pt, lap, p):
    """Q₁ for a test function g, given G1 = ψg'/g and G2 = ψ²g''/g nodewise."""
    D = beta * beta * psi * psi + pt * pt
    F = 1.0 + (p - 2.0) * beta * beta * psi * psi / D
    E = (p - 4.0) * beta * lam * psi - 2.0 * lap
    with np.errstate(divide="ignore", invalid="ignore"):
        last = np.where(G2 == 0, 0.0, (p - 1.0) * G2 * pt * pt / (psi * psi))
    return ((gamma - lam) * (gamma - beta) * F
            - (p - 1.0) * beta * lam * G1
            + E * (gamma - beta * (1.0 - G1)) * beta * psi / D
            - (p - 2.0) * (G1 * ((beta + 1.0) * gamma - beta * lam + beta)
                           + gamma - beta + beta * G2) * pt * pt / D
            + last)


def effective_constant(beta, lam, psi, pt, lap, p):
    """C_eff with Q₁(g = ψ) = Fγ(γ - C_eff); tends to C as ψ → 0."""
    D = beta * beta * psi * psi + pt * pt
    F = 1.0 + (p - 2.0) * beta * beta * psi * psi / D
    E = (p - 4.0) * beta * lam * psi - 2.0 * lap
    B = (lam + beta) * F - E * beta * psi / D + (p - 2.0) * (beta + 2.0) * pt * pt / D
    return B / F, F


def choose_epsilon0(beta, lam, psi, pt, lap, params) -> float:
    """Largest ψ level such that C_eff > C/2 at every node with ψ at or below it."""
    C, _ = gamma_bound(beta, lam, params)
    ceff, _ = effective_constant(beta, lam, psi, pt, lap, params.p)
    order = np.argsort(psi)
    good = ceff[order] > C / 2.0
    if np.all(good):
        return float(psi.max())
    first_bad = int(np.argmin(good))
    if first_bad == 0:
        return 0.0
    return float(psi[order][first_bad - 1])


def damped_terms(psi, k):
    """G1, G2 for g = ψ e^{-kψ}."""
    return 1.0 - k * psi, psi * (-2.0 * k + k * k * psi)


def power_terms(psi, gamma, beta):
    """G1, G2 for g = c ψ^{1-γ/β}."""
    e = 1.0 - gamma / beta
    return np.full_like(psi, e), np.full_like(psi, e * (e - 1.0))


def q1_power_closed_form(gamma, beta, psi, pt, p):
    """(1-p)[γ(β-γ) + γ(β-γ)/β² ψ_θ²/ψ²] for g = c ψ^{1-γ/β}."""
    return (1.0 - p) * (gamma * (beta - gamma) + gamma * (beta - gamma) / beta ** 2 * pt * pt / psi ** 2)


def q1_linear_bound(gamma, beta, lam, psi, pt, p):
    """Upper bound γF(γ - K) for g = ψ, used when 1 < p < 2."""
    D = beta * beta * psi * psi + pt * pt
    F = 1.0 + (p - 2.0) * beta * beta * psi * psi / D
    K = (((lam + (p - 1.0) * beta) * beta ** 2 * psi ** 2
          + (lam + beta * (p - 1.0) + 2.0 * (p - 2.0)) * pt * pt)
         / ((p - 1.0) * beta ** 2 * psi ** 2 + pt * pt))
    return gamma * F * (gamma - K)


def perturbation_inequality(k, beta, lam, psi, pt, p):
    """Nodewise truth of the first-order k-correction inequality for g = ψ e^{-kψ}.

    It is a small-ψ statement; it is reported as a diagnostic only.
    """
    lhs = k * (1.0 - p) * beta * lam * psi + (p - 1.0) * (2.0 * k / psi - k * k) * pt ** 2
    rhs = 0.5 * max(2.0 - p, 0.0) * beta * (-2.0 * k + k * k) * psi
    return lhs >= rhs


def choose_k0(gamma, beta, lam, psi, pt, lap, p, region, kmin=2.0 ** -30) -> Optional[float]:
    """Largest k in {1, 1/2, 1/4, ...} with Q₁ <= 0 for g = ψ e^{-kψ} on the region."""
    ps, pts, laps = psi[region], pt[region], lap[region]
    k = 1.0
    while k >= kmin:
        G1, G2 = damped_terms(ps, k)
        if np.all(q1_general(gamma, G1, G2, beta, lam, ps, pts, laps, p) <= 0):
            return k
        k *= 0.5
    return None


def subsolution_Q1(spec: SubsolutionSpec, eigen: EigenResult, params: ProblemParams,
                   tol: float = 1e-10) -> SubsolutionReport:
    """Evaluate Q₁ nodewise on the eigenprofile grid for the chosen test function."""
    p = params.p
    beta, lam, th, psi, pt, ptt, lap = _eigen_data(eigen, params)
    C, bound = gamma_bound(beta, lam, params)
    gamma = spec.gamma
    eps0 = spec.epsilon0
    if eps0 is None:
        eps0 = choose_epsilon0(beta, lam, psi, pt, lap, params)
    positive = psi > 0
    low = positive & (psi <= eps0)
    high = positive & (psi >= eps0)
    extras = {}
    k0 = None
    if spec.g_choice == "linear":
        Q = q1_general(gamma, np.ones_like(psi), np.zeros_like(psi), beta, lam, psi, pt, lap, p)
        region = np.ones_like(psi, dtype=bool) if p < 2 else (psi <= eps0)
        extras["bound"] = q1_linear_bound(gamma, beta, lam, psi, pt, p)
        ceff, F = effective_constant(beta, lam, psi, pt, lap, p)
        extras["C_eff"] = ceff
    elif spec.g_choice == "damped":
        G1, G2 = damped_terms(psi, spec.k)
        Q = np.full_like(psi, -np.inf)
        Q[positive] = q1_general(gamma, G1[positive], G2[positive], beta, lam,
                                 psi[positive], pt[positive], lap[positive], p)
        region = low
        k0 = choose_k0(gamma, beta, lam, psi, pt, lap, p, low) if gamma > 0 else None
        ok = perturbation_inequality(spec.k, beta, lam, psi[low], pt[low], p)
        extras["perturbation_fraction"] = float(np.mean(ok)) if ok.size else 1.0
    elif spec.g_choice == "power":
        G1, G2 = power_terms(psi, gamma, beta)
        Q = np.full_like(psi, -np.inf)
        Q[positive] = q1_general(gamma, G1[positive], G2[positive], beta, lam,
                                 psi[positive], pt[positive], lap[positive], p)
        region = high
        closed = np.full_like(psi, np.nan)
        closed[positive] = q1_power_closed_form(gamma, beta, psi[positive], pt[positive], p)
        extras["closed_form"] = closed
    else:
        k = spec.k
        Q = np.full_like(psi, -np.inf)
        G1d, G2d = damped_terms(psi, k)
        G1p, G2p = power_terms(psi, gamma, beta)
        G1 = np.where(psi <= eps0, G1d, G1p)
        G2 = np.where(psi <= eps0, G2d, G2p)
        Q[positive] = q1_general(gamma, G1[positive], G2[positive], beta, lam,
                                 psi[positive], pt[positive], lap[positive], p)
        region = positive
        k0 = choose_k0(gamma, beta, lam, psi, pt, lap, p, low) if gamma > 0 else None
    inreg = Q[region]
    max_q = float(np.max(inreg)) if inreg.size else -math.inf
    frac = float(np.mean(inreg <= tol)) if inreg.size else 1.0
    return SubsolutionReport(th, psi, Q, region, gamma, bound, bool(gamma < bound or gamma == 0),
                             C, eps0, k0, max_q, frac, extras)
