"""Closed-form exponent arithmetic for -Δ_p u + |∇u|^q = 0 near a boundary point.

The similarity exponent of the Hamilton-Jacobi scaling is

    β_q = (p - q) / (q + 1 - p),

the spherical p-harmonic exponent β_* comes from the eigensolver (or from a
closed form in a few special cases), and the critical absorption exponent is
q_* = p - β_*/(β_* + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

EQUALITY_RTOL = 1e-8


class DomainError(ValueError):
    """Raised when an argument lies outside the admissible range."""


@dataclass(frozen=True)
class ProblemParams:
    """Dimension N, diffusion exponent p and (optionally) absorption exponent q."""

    N: int
    p: float
    q: Optional[float] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")
        if not (1.0 < self.p <= self.N):
            raise DomainError(f"need 1 < p <= N, got p={self.p}, N={self.N}")
        if self.q is not None and not (self.p - 1.0 < self.q < self.p):
            raise DomainError(f"need p-1 < q < p, got q={self.q}, p={self.p}")

    def require_q(self) -> float:
        if self.q is None:
            raise DomainError("this operation needs the absorption exponent q")
        return self.q

    def with_q(self, q: Optional[float]) -> "ProblemParams":
        return ProblemParams(self.N, self.p, q)


@dataclass
class ExponentReport:
    beta_q: Optional[float]
    lambda_beta_q: Optional[float]
    beta_star: float
    lambda_beta_star: float
    q_star: float
    regime: Optional[str]
    bound_checks: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "beta_q": self.beta_q,
            "lambda_beta_q": self.lambda_beta_q,
            "beta_star": self.beta_star,
            "lambda_beta_star": self.lambda_beta_star,
            "q_star": self.q_star,
            "regime": self.regime,
            "bound_checks": [{"name": n, "satisfied": bool(s)} for n, s in self.bound_checks],
        }


def beta_q(params: ProblemParams) -> float:
    """Hamilton-Jacobi similarity exponent (p - q)/(q + 1 - p)."""
    q = params.require_q()
    p = params.p
    if not (p - 1.0 < q < p):
        raise DomainError(f"q={q} outside (p-1, p)")
    return (p - q) / (q + 1.0 - p)


def lambda_of(beta: float, params: ProblemParams) -> float:
    """Λ_β = β(p-1) + p - N."""
    return beta * (params.p - 1.0) + params.p - params.N


def q_star(beta_star: float, params: ProblemParams) -> float:
    """Critical absorption exponent p - β_*/(β_* + 1)."""
    if not beta_star > 0:
        raise DomainError(f"beta_star must be positive, got {beta_star}")
    return params.p - beta_star / (beta_star + 1.0)


def nu_of(beta: float, params: ProblemParams) -> float:
    """ν = 1 - (β + 1)(q + 1 - p), the gap exponent between diffusion and absorption."""
    q = params.require_q()
    return 1.0 - (beta + 1.0) * (q + 1.0 - params.p)


def beta_star_n2(p: float) -> float:
    """Exact β_* for N = 2, 1 < p <= 2.

    In two dimensions the phase equation has constant coefficients, and the
    shooting condition integrates to a quadratic in β with positive root
    (3 - p + 2 sqrt(p^2 - 3p + 3)) / (3(p - 1)).
    """
    if not (1.0 < p <= 2.0):
        raise DomainError(f"N=2 closed form needs 1 < p <= 2, got {p}")
    return (3.0 - p + 2.0 * math.sqrt(p * p - 3.0 * p + 3.0)) / (3.0 * (p - 1.0))


def beta_star_n2_nominal(p: float) -> float:
    """The nominal N = 2 expression (3 - p + 2 sqrt(p^2 - 5p + 7))/(3(p - 1)).

    Kept as a diagnostic: it agrees with the shooting value only at p = 2.
    """
    return (3.0 - p + 2.0 * math.sqrt(p * p - 5.0 * p + 7.0)) / (3.0 * (p - 1.0))


def beta_star_n2_alternate(p: float) -> float:
    """The alternate N = 2 expression (1 + 2 sqrt(p^2 - 3p + 3))/(3(p - 1)).

    Diagnostic only: for p < 2 it violates β_* > 1/(p - 1).
    """
    return (1.0 + 2.0 * math.sqrt(p * p - 3.0 * p + 3.0)) / (3.0 * (p - 1.0))


def beta_star_closed_form(params: ProblemParams) -> Optional[float]:
    """β_* where it is known in closed form, otherwise None."""
    N, p = params.N, params.p
    if p == 2.0:
        return float(N - 1)
    if p == N:
        return 1.0
    if N == 2 and 1.0 < p <= 2.0:
        return beta_star_n2(p)
    return None


def n2_formula_diagnostics(p: float, beta_star: float) -> dict:
    """Compare a computed N = 2 β_* with the three candidate closed forms."""
    out = {}
    for name, fn in (("exact", beta_star_n2), ("nominal", beta_star_n2_nominal),
                     ("alternate", beta_star_n2_alternate)):
        val = fn(p)
        out[name] = {
            "value": val,
            "abs_error": abs(val - beta_star),
            "above_lower_bound": val > 1.0 / (p - 1.0) or p == 2.0,
        }
    return out


def _close(a: float, b: float, rtol: float = EQUALITY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1.0)


def check_bounds(beta_star: float, params: ProblemParams) -> list:
    """Evaluate the analytic bounds on β_*; failures are reported, never raised."""
    if not beta_star > 0:
        raise DomainError(f"beta_star must be positive, got {beta_star}")
    N, p = params.N, params.p
    serrin = (N - p) / (p - 1.0)
    linear = (N - 1.0) / (p - 1.0)
    checks = []
    if p < N:
        checks.append(("beta_star > (N-p)/(p-1)", beta_star > serrin))
    if 2.0 < p < N:
        checks.append(("beta_star < (N-1)/(p-1)", beta_star < linear))
    if 1.0 < p < 2.0:
        checks.append(("beta_star > (N-1)/(p-1)", beta_star > linear))
    if p == 2.0 or p == N:
        checks.append(("equality beta_star = (N-1)/(p-1)", _close(beta_star, linear)))
    lower = max(1.0, serrin)
    checks.append(("beta_star >= max(1, (N-p)/(p-1))",
                   beta_star >= lower or _close(beta_star, lower)))
    return checks


def exponent_report(params: ProblemParams, beta_star: float) -> ExponentReport:
    lam_s = lambda_of(beta_star, params)
    qs = q_star(beta_star, params)
    if params.q is not None:
        bq = beta_q(params)
        lam_q = lambda_of(bq, params)
        regime = "subcritical" if bq > beta_star else "critical_or_above"
    else:
        bq = lam_q = regime = None
    return ExponentReport(bq, lam_q, beta_star, lam_s, qs, regime,
                          check_bounds(beta_star, params))
