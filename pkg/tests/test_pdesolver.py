import math

import numpy as np
import pytest

from plapsing.exponents import ProblemParams, beta_q
from plapsing.pdesolver import (FitError, PolarField, PolarGrid, ScaledOperator, delta_halving_study,
                                fit_exponent, gradient_estimate_check, harnack_spot_check,
                                monotone_in_k, profile_distance,
                                scaling_invariance_check, solve_steady, universal_bound_ratio)

PMID = ProblemParams(2, 1.5, 0.658494)


def test_grid_geometry():
    g = PolarGrid(1e-3, 65, 17, 3)
    r = g.r_nodes
    assert r[0] == 1e-3 and r[-1] == 1.0
    assert np.allclose(np.diff(np.log(r)), np.log(1e3) / 64)
    assert g.theta_nodes[-1] == pytest.approx(math.pi / 2)
    assert g.refined().n_r == 129


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=1.0), dict(n_r=8)])
def test_grid_validation(kw):
    args = dict(eps=1e-3, n_r=65, n_theta=17, N=3)
    args.update(kw)
    with pytest.raises(ValueError):
        PolarGrid(**args)


def _harmonic_residual(n_r, n_th):
    # x_N / |x|^N is harmonic and vanishes on the flat boundary
    g = PolarGrid(1e-2, n_r, n_th, 3)
    R, TH = np.meshgrid(g.r_nodes, g.theta_nodes, indexing="ij")
    w = R ** -2 * np.cos(TH)
    op = ScaledOperator(g, 2.0, 1.5, 0.0, 0.0, absorption=0.0)
    lin = op.residual(w, w) * (g.r_nodes ** -2.0)[:, None]
    return float(np.nanmax(np.abs(lin[1:-1, :-1]) * (g.r_nodes[1:-1, None] ** 4)))


def test_discrete_laplacian_second_order():
    e1, e2 = _harmonic_residual(65, 17), _harmonic_residual(129, 33)
    assert e2 < e1 / 3


def test_linear_annulus_solution():
    # p = 2 without absorption: u = c(r^{-2} - r)cos θ solves the N = 3 problem exactly
    P = ProblemParams(3, 2.0, 1.5)
    g = PolarGrid(1e-2, 129, 33, 3)
    f = solve_steady(g, "weak", P, 1.0, absorption=0.0)
    assert f.converged
    R, TH = np.meshgrid(g.r_nodes, g.theta_nodes, indexing="ij")
    eps = g.eps
    exact = eps ** -2 * np.cos(TH) * (R ** -2 - R) / (eps ** -2 - eps)
    exact[:, -1] = 0.0
    assert np.max(np.abs(f.u - exact)) / np.max(exact) < 1e-3


def test_weak_mode_tracks_beta_star_and_is_monotone_in_k():
    g = PolarGrid(1e-4, 129, 33, 2)
    fields = [solve_steady(g, "weak", PMID, k) for k in (0.5, 1.0, 2.0)]
    assert all(f.converged for f in fields)
    fits = [fit_exponent(f).beta_hat for f in fields]
    bs = 2.1547005383792515
    assert all(abs(b - bs) / bs < 0.05 for b in fits)
    assert max(fits) - min(fits) < 0.02
    assert monotone_in_k(fields)
    assert fields[0].solver_stats["reg_delta_scaled"] > 0


def test_strong_mode_small_grid():
    g = PolarGrid(1e-4, 129, 33, 2)
    f = solve_steady(g, "strong", PMID, 1e3)
    assert f.converged and f.solver_stats["continuation_steps"] >= 4
    fit = fit_exponent(f)
    assert abs(fit.beta_hat - beta_q(PMID)) / beta_q(PMID) < 0.05


def test_fit_errors():
    g = PolarGrid(1e-3, 65, 17, 2)
    zero = PolarField(g, np.zeros((65, 17)), "weak", PMID, 1.0, 1.0)
    with pytest.raises(FitError):
        fit_exponent(zero, (4e-3, 0.1))
    pos = PolarField(g, np.ones((65, 17)), "weak", PMID, 1.0, 1.0)
    with pytest.raises(FitError):
        fit_exponent(pos, (2e-3, 0.1))
    with pytest.raises(FitError):
        fit_exponent(pos, (4e-3, 5e-3))


def test_fit_exact_power():
    g = PolarGrid(1e-4, 129, 33, 2)
    R, TH = np.meshgrid(g.r_nodes, g.theta_nodes, indexing="ij")
    f = PolarField(g, R ** -3.0 * np.cos(TH), "weak", PMID, 3.0, 1.0)
    fit = fit_exponent(f)
    assert fit.beta_hat == pytest.approx(3.0, abs=1e-10) and fit.r2 == pytest.approx(1.0)
    assert profile_distance(fit, g.theta_nodes, g.theta_nodes, np.cos(g.theta_nodes)) < 1e-12


def test_harnack_guard_flags_zero_node():
    g = PolarGrid(1e-3, 65, 17, 2)
    R, TH = np.meshgrid(g.r_nodes, g.theta_nodes, indexing="ij")
    u = R ** -2.0 * np.cos(TH)
    clean = harnack_spot_check(PolarField(g, u, "weak", PMID, 2.0, 1.0))
    assert not clean.guard_triggered and clean.max_ratio < 20
    u = u.copy()
    u[20, 5] = 0.0
    rep = harnack_spot_check(PolarField(g, u, "weak", PMID, 2.0, 1.0))
    assert rep.guard_triggered and rep.excluded_nodes == 1 and math.isfinite(rep.max_ratio)


def test_gradient_estimate_exact_for_similarity_solution():
    # u = r^{-β} cos θ with β = 1/(q+1-p) - 1: |∇u| d^{β+1} = β-independent constant
    g = PolarGrid(1e-3, 129, 33, 2)
    b = beta_q(PMID)
    R, TH = np.meshgrid(g.r_nodes, g.theta_nodes, indexing="ij")
    f = PolarField(g, R ** -b * np.cos(TH), "strong", PMID, b, 1.0)
    c, ok = gradient_estimate_check(f, PMID)
    assert ok and 0 < c < 10


def test_scaling_identity_and_order():
    assert scaling_invariance_check(PMID, 1.0) == 0.0
    errs = [scaling_invariance_check(PMID, 0.5, PolarGrid(1e-2, n, m, 2)) for n, m in ((65, 17), (129, 33))]
    assert errs[1] < errs[0] / 2


def test_scaling_non_homogeneous_w():
    b = beta_q(PMID)

    def w(r, th):
        return r ** -b * np.cos(th) + (1 - r * r) * np.cos(th)

    errs = [scaling_invariance_check(PMID, 0.25, PolarGrid(1e-2, n, m, 2), w) for n, m in ((65, 17), (129, 33))]
    assert errs[1] < errs[0] / 2


def test_scaling_rejects_bad_ell():
    with pytest.raises(ValueError):
        scaling_invariance_check(PMID, 1.5)


def test_delta_halving_small_effect():
    rep = delta_halving_study(PolarGrid(1e-3, 65, 17, 2), "weak", PMID, 1.0)
    assert rep["converged"] and rep["field_change"] < 1e-3


def test_flat_mode_below_universal_bound():
    P = ProblemParams(2, 1.5, 0.95)
    f = solve_steady(PolarGrid(1e-3, 129, 33, 2), "flat", P, 1e3)
    assert f.converged
    assert universal_bound_ratio(f, "sharp", shifted=True) < 1.0


def test_solve_rejects_bad_inputs():
    g = PolarGrid(1e-3, 65, 17, 2)
    with pytest.raises(ValueError):
        solve_steady(g, "medium", PMID)
    with pytest.raises(ValueError):
        solve_steady(g, "weak", PMID, reg_delta=0.0)
