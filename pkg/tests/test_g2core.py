"""Induced metric, Hodge star, and the SU(2)-fiber assembly lemma."""
import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from g2calc.forms import KForm
from g2calc.g2core import (DegenerateFiberError, G2Data, NotStableError,
                           SU2FiberData, hodge_star, is_g2_type, metric_batch,
                           norm, phi_to_vector, standard_phi, su2_assemble,
                           vector_to_phi)
from g2calc.rings import FLT, RAT

DIM = 7


def th(*idx, ring=RAT):
    return KForm.basis(DIM, idx, ring)


# --------------------------------------------------------------------------
# the standard form
# --------------------------------------------------------------------------

def test_standard_form_gives_euclidean_metric():
    data = is_g2_type(standard_phi())
    assert np.array_equal(data.metric_array(), np.eye(DIM))
    assert data.sqrt_det == 1


def test_negative_orientation_rejected():
    with pytest.raises((NotStableError, Exception)):
        is_g2_type(-1 * standard_phi())


def test_degenerate_form_rejected():
    # a decomposable 3-form is nowhere definite
    with pytest.raises(NotStableError):
        is_g2_type(th(1, 2, 3))


# --------------------------------------------------------------------------
# Hodge star identities on random definite forms
# --------------------------------------------------------------------------

def _random_definite(rng, scale=0.2):
    v = phi_to_vector(standard_phi().in_ring(FLT))
    return vector_to_phi(v + scale * rng.normal(size=v.shape))


def test_star_star_is_identity():
    rng = np.random.default_rng(0)
    worst = 0.0
    count = 0
    while count < 100:
        try:
            data = is_g2_type(_random_definite(rng))
        except NotStableError:
            continue
        count += 1
        for k in (1, 2, 3):
            a = KForm(DIM, k, FLT,
                      {idx: float(rng.normal())
                       for idx in combinations(range(1, DIM + 1), k)})
            diff = hodge_star(data, hodge_star(data, a)) - a
            worst = max(worst, max((abs(float(c)) for c in diff.coeffs.values()),
                                   default=0.0))
    assert worst < 1e-9


def test_phi_wedge_star_phi_is_seven_vol():
    rng = np.random.default_rng(1)
    for _ in range(100):
        try:
            phi = _random_definite(rng)
            data = is_g2_type(phi)
        except NotStableError:
            continue
        top = float(phi.wedge(hodge_star(data, phi)).top_coefficient())
        assert abs(top - 7.0 * float(data.sqrt_det)) < 1e-10


def test_star_exact_on_standard_form():
    data = is_g2_type(standard_phi())
    star = hodge_star(data, standard_phi())
    # *phi0 is the standard 4-form; check two representative coefficients
    assert star.coeffs[(4, 5, 6, 7)] == 1
    assert star.degree == 4
    assert standard_phi().wedge(star).top_coefficient() == 7


def test_norm_of_unit_basis_form():
    data = is_g2_type(standard_phi())
    assert norm(data, th(1, 2, 3, ring=RAT).in_ring(FLT)) == pytest.approx(1.0)


def test_metric_batch_matches_single_evaluation():
    rng = np.random.default_rng(2)
    v0 = phi_to_vector(standard_phi().in_ring(FLT))
    vs = v0[None, :] + 0.05 * rng.normal(size=(8, v0.size))
    gs, vols = metric_batch(vs)
    for row, g, vol in zip(vs, gs, vols):
        data = is_g2_type(vector_to_phi(row))
        assert np.allclose(g, data.metric_array(), atol=1e-13)
        assert math.isclose(float(vol), float(data.sqrt_det), rel_tol=1e-13)


# --------------------------------------------------------------------------
# SU(2) fiber assembly: closed forms for metric, volume, *phi'
# --------------------------------------------------------------------------

def _fiber(nu, ring=RAT):
    om = nu * (th(4, 5, ring=ring) + th(6, 7, ring=ring))
    re = th(4, 6, ring=ring) - th(5, 7, ring=ring)
    im = th(4, 7, ring=ring) + th(5, 6, ring=ring)
    return SU2FiberData(om, re, im, (4, 5, 6, 7))


def test_su2_normalisation_constant():
    assert _fiber(Fraction(8)).nu == Fraction(8)
    assert _fiber(Fraction(9, 4)).nu == Fraction(9, 4)


def test_su2_closed_forms_exact_at_nu_8():
    nu = Fraction(8)
    fiber = _fiber(nu)
    phi = su2_assemble(th(1), th(2), th(3), fiber)
    data = is_g2_type(phi)
    # metric: nu^{4/3} on g^1, nu^{-2/3} on g^2, g^3, nu^{1/3} on the fiber
    assert np.array_equal(data.metric_array(),
                          np.diag([16.0, 0.25, 0.25, 2.0, 2.0, 2.0, 2.0]))
    # volume: nu^{2/3}
    assert data.sqrt_det == Fraction(4)
    # *phi': nu^{2/3}/4 Om^conj(Om) + nu^{-4/3} g^{23}^om
    #        + nu^{2/3} g^{13}^Re(Om) + nu^{2/3} g^{12}^Im(Om)
    want = (Fraction(4) * th(4, 5, 6, 7)
            + Fraction(1, 16) * th(2, 3).wedge(fiber.omega)
            + Fraction(4) * th(1, 3).wedge(fiber.omega_re)
            + Fraction(4) * th(1, 2).wedge(fiber.omega_im))
    assert hodge_star(data, phi) == want


@pytest.mark.parametrize("seed", [0, 1])
def test_su2_closed_forms_random_nu(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        nu = float(rng.uniform(0.2, 6.0))
        fiber = _fiber(nu, FLT)
        phi = su2_assemble(th(1, ring=FLT), th(2, ring=FLT), th(3, ring=FLT),
                           fiber)
        data = is_g2_type(phi)
        expect = np.diag([nu ** (4 / 3)] + [nu ** (-2 / 3)] * 2
                         + [nu ** (1 / 3)] * 4)
        assert np.allclose(data.metric_array(), expect,
                           rtol=1e-12, atol=1e-12 * nu ** (4 / 3))
        assert float(data.sqrt_det) == pytest.approx(nu ** (2 / 3),
                                                     rel=1e-12)
        want = (nu ** (2 / 3) * th(4, 5, 6, 7, ring=FLT)
                + nu ** (-4 / 3) * th(2, 3, ring=FLT).wedge(fiber.omega)
                + nu ** (2 / 3) * th(1, 3, ring=FLT).wedge(fiber.omega_re)
                + nu ** (2 / 3) * th(1, 2, ring=FLT).wedge(fiber.omega_im))
        diff = hodge_star(data, phi) - want
        rel = max((abs(float(c)) for c in diff.coeffs.values()),
                  default=0.0) / nu ** (2 / 3)
        assert rel < 1e-12


def test_su2_degenerate_fiber_rejected():
    om = th(4, 5)  # omega^2 misses the theta^{67} factor entirely
    re = th(4, 6) - th(5, 7)
    im = th(4, 7) + th(5, 6)
    with pytest.raises(DegenerateFiberError):
        SU2FiberData(om, re, im, (4, 5, 6, 7))
