"""The two 7-manifold models: closed families, class map, gluing identities."""
import math
from fractions import Fraction

import numpy as np
import pytest

from g2calc import catalog, ehmetric
from g2calc.catalog import (ResolutionForms, ch_map, ffkm_model,
                            glued_form_at, master_identity_check,
                            measure_quadlem_constant, nakamura_model,
                            phi_abl, phi_abl_mu, phi_check_mu,
                            primitive_ledger, pullback_invariant_form,
                            resolution_boundary_identity, xi_mu_metric_diag)
from g2calc.forms import KForm
from g2calc.g2core import is_g2_type
from g2calc.liecdga import d_invariant
from g2calc.rings import FLT, RAT

Q = Fraction


# --------------------------------------------------------------------------
# product model
# --------------------------------------------------------------------------

def test_product_family_closed_and_definite():
    m = nakamura_model()
    for a, b, lam in ((1, 1, 1), (2, 3, (1, 2)), (Q(1, 2), 5, (Q(-1, 3), Q(2, 7)))):
        phi = phi_abl(a, b, lam, m)
        assert d_invariant(m.eqs, phi).is_zero()
        is_g2_type(phi.in_ring(FLT))  # raises if indefinite


def test_mu_family_closed_with_exact_primitive():
    m = nakamura_model()
    rho, _ = m.witnesses["two_g1_wedge_omega"]
    for mu in (1, 2, 5):
        phi_mu = phi_abl_mu(3, 1, 1, mu, m)
        assert d_invariant(m.eqs, phi_mu).is_zero()
        prim = (Q(mu) ** 6 - 1) * Q(1, 2) * 3 * rho
        assert d_invariant(m.eqs, prim) == phi_mu - phi_abl(3, 1, 1, m)


def test_mu_family_volume_is_mu_fourth():
    v1 = is_g2_type(phi_abl(1, 1, 1)).sqrt_det
    for mu in (2, 3):
        assert is_g2_type(phi_abl_mu(1, 1, 1, mu)).sqrt_det == Q(mu) ** 4 * v1


def test_mu_below_one_rejected():
    with pytest.raises(ValueError):
        phi_abl_mu(1, 1, 1, Q(1, 2))
    with pytest.raises(ValueError):
        phi_abl(0, 1, 1)


def test_class_map_values_and_injectivity():
    seen = {}
    for a in (1, 2, Q(1, 2), 3):
        for b in (1, Q(1, 3), 2, 5):
            for lam in ((1, 0), (0, 1), (2, 1), (Q(1, 2), Q(-3, 4))):
                re, im = Q(lam[0]), Q(lam[1])
                got = ch_map(phi_abl(a, b, lam))
                assert got == (Q(a) * b, re, im, b * re, b * im)
                assert got not in seen, f"collision with {seen[got]}"
                seen[got] = (a, b, lam)


def test_class_map_invariant_under_mu():
    # phi^mu differs from phi by an exact form, so the class map agrees
    assert ch_map(phi_abl_mu(2, 3, (1, 1), 4)) == ch_map(phi_abl(2, 3, (1, 1)))


# --------------------------------------------------------------------------
# nilmanifold model
# --------------------------------------------------------------------------

def test_nilmanifold_family_closed():
    m = ffkm_model()
    for mu in (1, 2, 3):
        assert d_invariant(m.eqs, phi_check_mu(mu)).is_zero()


def test_nilmanifold_volume_is_mu_squared():
    v1 = is_g2_type(phi_check_mu(1)).sqrt_det
    for mu in (2, 3):
        assert is_g2_type(phi_check_mu(mu)).sqrt_det == Q(mu) ** 2 * v1


def test_primitive_ledger_all_pass():
    for mu in (1, 2, 3):
        rows = primitive_ledger(mu)
        assert rows, "ledger must not be empty"
        bad = [r for r in rows if r["status"] != "pass"]
        assert not bad, bad


def test_master_gluing_identity_exact():
    # phi^mu - xi^mu = y1 dy^{147} + d(alpha), symbolic in (y, mu)
    assert master_identity_check()


def test_boundary_rescaling_identity_exact():
    assert resolution_boundary_identity()


def test_pullback_of_invariant_forms_is_closed():
    m = ffkm_model()
    phi = m.named_forms["phi"]
    pulled = pullback_invariant_form(phi)
    assert pulled.d_chart().is_zero()


# --------------------------------------------------------------------------
# glued forms on charts
# --------------------------------------------------------------------------

def test_glued_form_definite_and_gap_small():
    rng = np.random.default_rng(0)
    for mu in (1, 2, 8):
        for _ in range(8):
            pt = {f"y{i}": float(rng.uniform(-0.05, 0.05)) for i in range(1, 8)}
            out = glued_form_at(pt, mu)
            assert out["g2"] is not None
            assert out["gap"] < 1.0


def test_glued_form_outside_chart_rejected():
    with pytest.raises(ValueError):
        glued_form_at({"y1": 10.0}, 2)


def test_glued_form_outer_region_is_invariant():
    # once the cutoff saturates (r/eps >= 0.99 within tolerance of 1) the
    # glued form coincides with the invariant xi^mu plus the bump term
    pt = {"y1": 0.099, "y2": 0.0, "y5": 0.0, "y6": 0.0, "y4": 0.3, "y7": 0.1}
    out = glued_form_at(pt, 2)
    assert out["f"] == pytest.approx(1.0)
    assert out["fprime"] == 0.0


def test_xi_metric_diagonal():
    assert np.array_equal(xi_mu_metric_diag(2),
                          np.diag([16.0] * 3 + [0.25] * 4))


def test_quadlem_constant_stable_under_refinement():
    c1 = measure_quadlem_constant(n=150, seed=0)["C"]
    c2 = measure_quadlem_constant(n=300, seed=1)["C"]
    assert abs(c1 - c2) <= 0.2 * max(c1, c2)


# --------------------------------------------------------------------------
# resolution surgery forms
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def profile():
    return ehmetric.build_profile(ehmetric.default_t_for_epsilon(0.1, 4.0), 4.0)


def test_resolution_margins_certified(profile):
    out = ResolutionForms(8, 0.1, profile=profile).margins(n=60, seed=0)
    assert out["g2_certified"]
    assert out["inner_bound_ok"]
    assert out["outer_gap"] <= 0.05 + 1e-12


def test_sigma_vanishes_at_exceptional_locus(profile):
    rf = ResolutionForms(4, 0.1, profile=profile)
    s = rf.sigma_at({"y1": 0.0, "y2": 0.0, "y5": 0.0, "y6": 0.0})
    assert s.is_zero()


def test_sigma_saturates_outside(profile):
    rf = ResolutionForms(4, 0.1, profile=profile)
    s = rf.sigma_at({"y1": 0.2})
    assert s.coeffs[(1, 4, 7)] == pytest.approx(0.2)


def test_zeta_mu_definite_across_regions(profile):
    rf = ResolutionForms(8, 0.1, profile=profile)
    for r in (0.02, 0.05, 0.2, 1.0):
        is_g2_type(rf.zeta_mu_at({"y1": r}))  # raises if indefinite
