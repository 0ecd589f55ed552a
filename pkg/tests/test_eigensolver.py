
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from plapsing.eigensolver import (IntegrationFailure, certify_properties, eigen_identity_gap,
                                  integrate_phase, reconstruct_profile, shooting_defect,
                                  solve_beta_star)
from plapsing.exponents import ProblemParams, beta_star_n2, check_bounds


@pytest.fixture(scope="module")
def res_3_25():
    return solve_beta_star(ProblemParams(3, 2.5))


@pytest.mark.parametrize("N,p,expected", [(3, 2.0, 2.0), (5, 2.0, 4.0), (3, 3.0, 1.0), (2, 2.0, 1.0)])
def test_special_cases(N, p, expected):
    assert solve_beta_star(ProblemParams(N, p)).beta_star == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("N,p", [(3, 2.5), (4, 3.0), (6, 1.5), (2, 1.3), (5, 4.5)])
def test_matches_independent_shooting_oracle(N, p):
    assert solve_beta_star(ProblemParams(N, p)).beta_star == pytest.approx(
        oracles.beta_star_oracle(N, p), abs=1e-8)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_n2_exact_closed_form(p):
    assert solve_beta_star(ProblemParams(2, p)).beta_star == pytest.approx(beta_star_n2(p), abs=1e-8)


def test_defect_sign_convention():
    P = ProblemParams(3, 2.5)
    assert shooting_defect(1.0, P) < 0 < shooting_defect(2.0, P)


def test_profile_normalized_and_vanishing(res_3_25):
    prof = res_3_25.profile
    assert prof.omega[0] == pytest.approx(1.0)
    assert abs(prof.omega[-1]) < 1e-8
    assert np.all(prof.omega[:-1] > 0)
    assert prof.kind == "eigen"


def test_residual_second_order():
    P = ProblemParams(3, 2.5)
    b = solve_beta_star(P).beta_star
    r = [reconstruct_profile(integrate_phase(b, P, M)).residual_sup for M in (256, 512, 1024)]
    assert r[1] < r[0] / 3 and r[2] < r[1] / 3


def test_identity_gap_small_and_shrinking():
    P = ProblemParams(4, 3.0)
    b = solve_beta_star(P).beta_star
    gaps = [eigen_identity_gap(reconstruct_profile(integrate_phase(b, P, M)), P) for M in (256, 1024, 4096)]
    assert gaps[-1] < 1e-5
    assert gaps[-1] <= max(gaps[0], 1e-9)


def test_identity_degenerate_cases_vanish():
    for P in (ProblemParams(3, 2.0), ProblemParams(3, 3.0)):
        assert solve_beta_star(P).identity_gap == 0.0


def test_certified_properties(res_3_25):
    rep = certify_properties(res_3_25.path, res_3_25.profile)
    assert rep.phi_monotone_ok and rep.convexity_ok and rep.endpoint_slope_ok


def test_phi_theta_constant_only_in_plane_linear_case():
    r = solve_beta_star(ProblemParams(2, 2.0))
    assert certify_properties(r.path, r.profile).phi_theta_constant
    r = solve_beta_star(ProblemParams(3, 2.0))
    assert not certify_properties(r.path, r.profile).phi_theta_constant


def test_phase_leaves_range_for_large_beta():
    with pytest.raises(IntegrationFailure) as exc:
        integrate_phase(10.0, ProblemParams(3, 2.5))
    assert exc.value.theta_exit is not None


def test_rejects_small_grid():
    with pytest.raises(ValueError):
        integrate_phase(1.3, ProblemParams(3, 2.5), M=10)


@settings(max_examples=8, deadline=None)
@given(N=st.integers(2, 6), frac=st.floats(0.05, 0.95))
def test_bounds_hold_for_random_pairs(N, frac):
    p = 1.0 + frac * (N - 1.0)
    b = solve_beta_star(ProblemParams(N, p), M=256).beta_star
    assert all(ok for _, ok in check_bounds(b, ProblemParams(N, p)))


@pytest.mark.parametrize("N,p", [(3, 2.5), (6, 1.5), (4, 3.0)])
def test_defect_has_single_sign_change(N, p):
    betas = np.linspace(0.05, 12.0, 120)
    signs = np.sign([shooting_defect(b, ProblemParams(N, p)) for b in betas])
    assert np.count_nonzero(signs[1:] != signs[:-1]) == 1
