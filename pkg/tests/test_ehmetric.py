"""Interpolated Kaehler profile on the resolved C^2/Z2: construction
invariants, positivity/volume certificates, and closedness."""
import json
import math

import numpy as np
import pytest

from g2calc.ehmetric import (ConstructionFailed, EHProfile, Infeasible,
                             _adaptive_simpson, build_profile,
                             certificate_to_json, closedness_residual,
                             default_t_for_epsilon, eh_aprime,
                             feasibility_threshold, measure_dlam_constant,
                             omega_at, positivity_and_volume_certificate,
                             positivity_budget, ricci_residual)


@pytest.fixture(scope="module")
def profile():
    return build_profile(1.0, 4.0, 1.0)


# --------------------------------------------------------------------------
# feasibility and failure modes
# --------------------------------------------------------------------------

def test_feasibility_threshold_formula():
    assert feasibility_threshold(1.0) == pytest.approx((32 / 15) ** 0.25)
    with pytest.raises(ValueError):
        feasibility_threshold(0.0)
    with pytest.raises(ValueError):
        feasibility_threshold(2.0)


def test_infeasible_radius_rejected():
    with pytest.raises(Infeasible):
        build_profile(1.0, 0.95 * feasibility_threshold(1.0), 1.0)


def test_construction_fails_when_bump_hits_the_boundary():
    # just above the feasibility threshold the required mass pushes the
    # bump's right edge onto the outer boundary of the interpolation zone
    with pytest.raises(ConstructionFailed):
        build_profile(1.0, 1.21, 1.0)


def test_invalid_t_rejected():
    with pytest.raises(ValueError):
        build_profile(0.0, 4.0, 1.0)


# --------------------------------------------------------------------------
# profile invariants
# --------------------------------------------------------------------------

def test_mass_identity_exact(profile):
    # integral of k over [0, q] equals -t^4, via the analytic moment
    t = profile.t
    assert abs(profile.h(profile.q) + t ** 4) < 1e-10 * t ** 4


def test_mass_identity_independent_quadrature(profile):
    # re-integrate k with adaptive Simpson, splitting at the mollifier
    # shoulders (a blind integrator can miss the narrow bump entirely)
    q, rho = profile.q, profile.rho
    cuts = sorted({0.0, (profile.p_lo - rho) * q, (profile.p_lo + rho) * q,
                   (profile.p_hi - rho) * q, (profile.p_hi + rho) * q, q})
    total = sum(_adaptive_simpson(profile.k, a, b, 1e-15)
                for a, b in zip(cuts, cuts[1:]))
    assert abs(total + profile.t ** 4) < 1e-10 * profile.t ** 4


def test_equality_attained_at_the_marked_radius(profile):
    lam = profile.r_frak ** 2
    assert profile.k(lam) == -profile.c * lam


def test_pinching_bound_holds_everywhere(profile):
    lams = np.linspace(1e-6, 1.05 * profile.q, 4000)
    slack = np.array([profile.k(l) + profile.c * l for l in lams])
    assert slack.min() >= -1e-14


def test_support_of_the_modification(profile):
    q = profile.q
    for lam in (0.0, q / 8, q / 4, 0.995 * q, q, 2 * q):
        if q / 4 < lam < 0.995 * q:
            continue
        assert profile.k(lam) == 0.0
    # and it is genuinely nonzero somewhere in between
    assert profile.k(profile.r_frak ** 2) < 0.0


def test_scale_equivariance_is_exact():
    p1 = build_profile(1.0, 4.0, 1.0)
    s = 3.0
    p2 = build_profile(s, 4.0, 1.0)
    for lam in np.linspace(0.05, 1.2 * p1.q, 50):
        assert p2.k(s * s * lam) == pytest.approx(s * s * p1.k(lam),
                                                  abs=1e-13)
        assert p2.h(s * s * lam) == pytest.approx(s ** 4 * p1.h(lam),
                                                  rel=1e-12, abs=1e-13)


def test_slope_matches_pure_eh_in_the_core(profile):
    # below q/4 the modification vanishes: alpha' = pure Eguchi-Hanson slope
    for lam in (0.01, 0.1, profile.q / 4):
        assert profile.aprime(lam) == pytest.approx(
            eh_aprime(profile.t, lam), rel=1e-14)


def test_slope_is_flat_outside(profile):
    # at lam >= q the interpolation has absorbed the full -t^4, so
    # alpha'^2 = 1 + (t^4 + h)/lam^2 = 1 exactly
    assert profile.aprime(profile.q) == 1.0
    assert profile.aprime(2 * profile.q) == 1.0


def test_ricci_flat_closed_form():
    assert ricci_residual(1.0, np.linspace(0.5, 40.0, 25)) < 1e-8


# --------------------------------------------------------------------------
# the 2-form field omega
# --------------------------------------------------------------------------

def test_omega_flat_outside_and_eh_inside(profile):
    t, q = profile.t, profile.q
    r_out = math.sqrt(1.5 * q)
    M = omega_at((r_out, 0.0, 0.0, 0.0), profile=profile)
    assert np.array_equal(np.asarray(M, float),
                          np.array([[0, 1, 0, 0], [-1, 0, 0, 0],
                                    [0, 0, 0, 1], [0, 0, -1, 0]], float))
    r_in = math.sqrt(q / 8)
    M_in = np.asarray(omega_at((r_in, 0.0, 0.0, 0.0), profile=profile), float)
    M_eh = np.asarray(omega_at((r_in, 0.0, 0.0, 0.0), t=t), float)
    assert np.allclose(M_in, M_eh, atol=1e-14)


def test_positivity_and_volume_certificate(profile):
    rep = positivity_and_volume_certificate(profile, n_r=300, n_ang=12)
    assert rep["positivity_ok"] and rep["volume_ok"]
    assert 0.0 < rep["min_margin"] < 1.0
    floor = 2.0 * profile.upsilon ** 2
    assert rep["min_ratio"] >= floor - 1e-9
    # the floor is attained (the pinching equality is realised on the grid)
    assert abs(rep["min_ratio"] - floor) < 1e-6


def test_upsilon_stable_across_t():
    vals = []
    for t in (0.01, 0.1, 1.0):
        p = build_profile(t, 4.0, 1.0)
        rep = positivity_and_volume_certificate(p, n_r=100, n_ang=8)
        vals.append(rep["upsilon_measured"])
    assert (max(vals) - min(vals)) / max(vals) < 0.01


def test_closedness_residual(profile):
    assert closedness_residual(profile) < 1e-6


def test_measured_quadratic_constant_and_budget():
    assert measure_dlam_constant(n_r=20, n_ang=10) == pytest.approx(1.0,
                                                                    abs=1e-12)
    out = positivity_budget(4.0)
    assert out["ok"] and out["budget"] < 1.0


def test_default_t_matches_the_gluing_radius():
    # t is chosen so the interpolation zone ends exactly at r = eps/2
    t = default_t_for_epsilon(0.1, 4.0)
    p = build_profile(t, 4.0, 1.0)
    assert math.sqrt(p.q) == pytest.approx(0.05, rel=1e-15)


# --------------------------------------------------------------------------
# exports
# --------------------------------------------------------------------------

def test_profile_csv_export(tmp_path, profile):
    path = tmp_path / "profile.csv"
    profile.export_csv(path, n=50)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[0] == "lambda"
    assert len(lines) == 51


def test_certificate_json_export(tmp_path, profile):
    rep = positivity_and_volume_certificate(profile, n_r=60, n_ang=6)
    path = tmp_path / "cert.json"
    certificate_to_json(rep, path)
    data = json.loads(path.read_text())
    assert set(data) == {"t", "R", "c", "upsilon", "r_frak",
                         "min_margin", "min_ratio"}
