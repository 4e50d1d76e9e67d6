"""Collapse premises: rescaled metric convergence, lower bounds, fiber
diameter decay, and the limit length structure."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2calc import collapse, ehmetric
from g2calc.collapse import (MetricSample, base_pullback, decay_to_csv,
                             fiber_diameter_probe, ffkm_region_metrics,
                             interior_limit_metric, largest_lambda,
                             lc_vs_norm_holds, limit_quasi_finsler,
                             lower_bound_global, measure_metric_comparison,
                             nakamura_metric, premise_check, region_gap_decay,
                             report_to_json, rescaled_decay_exponents,
                             resolution_equality_probe, w_limit_metric,
                             w_outer_closed_form)

UPS = math.sqrt(0.5)


@pytest.fixture(scope="module")
def profile():
    return ehmetric.build_profile(ehmetric.default_t_for_epsilon(0.1, 4.0), 4.0)


# --------------------------------------------------------------------------
# product model
# --------------------------------------------------------------------------

def test_nakamura_metric_unit_parameters():
    s = nakamura_metric(1, 1, 1, 1)
    assert np.array_equal(s.matrix, np.eye(7))


def test_nakamura_metric_closed_form_cross_checked():
    # the constructor itself raises if the closed form drifts more than
    # 1e-10 from the metric computed from the 3-form; exercise a spread
    for mu in (1, 2, 8, 32):
        nakamura_metric(2, 1, (1, 1), mu)
        nakamura_metric(3, 2, (1, -2), mu, rescaled=True)


def test_rescaled_limit_is_the_circle_metric():
    s = nakamura_metric(2, 1, (1, 1), 16, rescaled=True)
    # alpha^2 / L^{2/3} with alpha = 2 and L = |1 + i|^2 = 2
    assert s.limit[0, 0] == pytest.approx(4.0 / 2 ** (2 / 3), rel=1e-14)
    assert np.count_nonzero(s.limit) == 1
    assert s.gap() < 1e-3


def test_tail_decay_exponents():
    out = rescaled_decay_exponents(2, 1, (1, 1), 8, 16)
    assert out["omega_block"] == pytest.approx(-6.0, abs=0.06)
    assert out["transverse_block"] == pytest.approx(-12.0, abs=0.12)


def test_lambda_is_one_along_the_family():
    base = nakamura_metric(2, 1, (1, 1), 2, rescaled=True).limit
    samples = [nakamura_metric(2, 1, (1, 1), mu, rescaled=True)
               for mu in (1, 2, 4, 8, 16, 32)]
    rep = premise_check(samples, base)
    assert rep["pass"]
    for lam in rep["lambdas"].values():
        assert lam == pytest.approx(1.0, abs=1e-6)
    gaps = [rep["sup_gaps"][mu] for mu in rep["mus"]]
    assert gaps == sorted(gaps, reverse=True)


def _synthetic(mu, factor):
    g = 1e-3 * np.eye(7)
    g[0, 0] = factor
    return MetricSample("syn", (), mu, g)


def test_premise_check_accepts_shrinking_defect():
    base = np.zeros((7, 7))
    base[0, 0] = 1.0
    samples = [_synthetic(mu, 1.0 - 1.0 / mu) for mu in (2, 4, 8, 16)]
    assert premise_check(samples, base)["pass"]


def test_premise_check_rejects_stalled_defect():
    base = np.zeros((7, 7))
    base[0, 0] = 1.0
    samples = [_synthetic(mu, 0.5) for mu in (2, 4, 8, 16)]
    assert not premise_check(samples, base)["pass"]


def test_largest_lambda_bisection_value():
    base = np.eye(7)
    assert largest_lambda([0.25 * np.eye(7)], base) == pytest.approx(0.5,
                                                                     abs=1e-9)


# --------------------------------------------------------------------------
# resolved nilmanifold regions
# --------------------------------------------------------------------------

def test_interior_metric_and_limit():
    s = ffkm_region_metrics("interior", (), 8)
    assert np.allclose(s.matrix, np.diag([1.0] * 3 + [8.0 ** -6] * 4))
    assert np.array_equal(s.limit, interior_limit_metric())


def test_annulus_closed_form_cross_checked():
    # ffkm_region_metrics raises internally if the displayed closed form
    # disagrees with the metric of the actual form beyond 1e-10
    for y1 in (-0.5, 0.0, 0.3):
        for mu in (2, 8):
            s = ffkm_region_metrics("w_outer", {"y1": y1}, mu)
            assert np.allclose(s.matrix, w_outer_closed_form(y1, mu))
            assert np.array_equal(s.limit, w_limit_metric(y1))


def test_unknown_region_rejected():
    with pytest.raises(ValueError):
        ffkm_region_metrics("nowhere", (), 2)


@pytest.mark.parametrize("region,point,mus", [
    ("interior", (), (2, 4, 8)),
    ("w_outer", {"y1": 0.3}, (2, 4, 8)),
    ("chart", {"y1": 0.02, "y2": 0.01, "y4": 0.3, "y5": 0.015,
               "y6": 0.01, "y7": 0.2}, (4, 8, 16)),
])
def test_region_gaps_decay(region, point, mus):
    out = region_gap_decay(region, point, mus)
    assert out["gaps"] == sorted(out["gaps"], reverse=True)
    assert out["rate"] <= -2.7


# --------------------------------------------------------------------------
# global lower bound
# --------------------------------------------------------------------------

def test_lower_bound_psd_at_region_samples():
    mc = measure_metric_comparison(n=150)
    samples = [ffkm_region_metrics("interior", (), 8),
               ffkm_region_metrics("w_outer", {"y1": 0.3}, 8),
               ffkm_region_metrics("chart", {"y1": 0.02, "y4": 0.3,
                                             "y7": 0.2}, 8)]
    rep = lower_bound_global(8, samples, UPS, C=1.0, Delta0=mc["Delta0"])
    assert rep["pass"]
    assert rep["prefactor"] < UPS ** (4 / 3)


def test_lower_bound_raises_on_violation():
    flat = MetricSample("syn", (), 8, 1e-6 * np.eye(7))
    with pytest.raises(AssertionError):
        lower_bound_global(8, [flat], UPS, C=1.0, Delta0=1.0)


def test_resolution_equality_at_the_marked_radius(profile):
    out = resolution_equality_probe(profile, 8)
    assert out["pass"]
    assert out["min_nu"] == pytest.approx(profile.upsilon, abs=1e-9)
    assert out["equality_gap"] < 1e-12


# --------------------------------------------------------------------------
# limit length structure
# --------------------------------------------------------------------------

def test_limit_lengths():
    assert limit_quasi_finsler("generic", [0, 0, 1], UPS) == pytest.approx(1.0)
    got = limit_quasi_finsler("singular", [0, 0, 1], UPS,
                              y1_samples=(0.0, 0.4))
    assert got == pytest.approx(UPS ** (2 / 3), rel=1e-12)


def test_singular_stratum_rejects_transverse_directions():
    with pytest.raises(ValueError):
        limit_quasi_finsler("singular", [1, 0, 0], UPS)
    with pytest.raises(ValueError):
        limit_quasi_finsler("generic", [0, 0, 0], UPS)


@given(st.floats(-4, 4).filter(lambda s: abs(s) > 1e-3))
def test_limit_length_is_homogeneous(s):
    base = limit_quasi_finsler("generic", [0.3, -1.0, 2.0], UPS)
    scaled = limit_quasi_finsler("generic", [0.3 * s, -1.0 * s, 2.0 * s], UPS)
    assert scaled == pytest.approx(abs(s) * base, rel=1e-9)


# --------------------------------------------------------------------------
# comparison constants
# --------------------------------------------------------------------------

def test_metric_comparison_constants_reproducible():
    a = measure_metric_comparison(n=100, seed=3)
    b = measure_metric_comparison(n=100, seed=3)
    assert a == b
    assert 0.0 < a["Delta0"] < 10.0
    assert a["delta1"] > 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_symmetric_form_bounded_by_its_norm(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(7, 7))
    h = A + A.T
    B = rng.normal(size=(7, 7))
    g = B @ B.T + 0.05 * np.eye(7)
    assert lc_vs_norm_holds(h, g)


def test_lc_vs_norm_requires_definite_g():
    with pytest.raises(ValueError):
        lc_vs_norm_holds(np.eye(7), np.zeros((7, 7)))


# --------------------------------------------------------------------------
# fiber diameters
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def probe(profile):
    return fiber_diameter_probe(profile=profile)


def test_fiber_diameter_exponent(probe):
    assert probe["exponent"] <= -3.0 + 0.3
    assert probe["exponent_ok"]


def test_fiber_diameter_monotone_and_uniform(probe):
    assert probe["monotone_in_k"]
    assert probe["mu_uniform"]
    for spread in probe["constant_spread"].values():
        assert spread <= 2.0


def test_exports(tmp_path, probe):
    csv_path = tmp_path / "decay.csv"
    decay_to_csv(probe, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "k,mu,diameter"
    assert len(lines) > 3
    json_path = tmp_path / "report.json"
    report_to_json({"exponent": probe["exponent"],
                    "base": base_pullback()}, json_path)
    import json as _json
    data = _json.loads(json_path.read_text())
    assert data["exponent"] == probe["exponent"]
    assert data["base"][2][2] == 1.0
