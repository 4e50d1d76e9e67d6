'''Command-line driver: identity suites and artifact sweeps.

`g2calc verify` runs every identity suite and exits 0 only if all exact
identities hold and all numeric certificates are within tolerance; `scan`,
`flow`, `eh`, `collapse` emit the per-module CSV/JSON artifacts.  Exit
codes: 0 pass, 1 failure (first failing check is named), 2 usage error.
'''
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import catalog, collapse, ehmetric, flow, g2core, scaling
from .forms import KForm, PolynomialMap, poly_ring
from .g2core import (SU2FiberData, hodge_star, is_g2_type, standard_phi,
                     su2_assemble)
from .liecdga import (JacobiError, StructureEqs, check_d_squared, d_invariant,
                      load_model, model_from_dict, model_to_dict)
from .rings import FLT, RAT, Poly

DIM = 7


def _thread_cap() -> int:
    try:
        n = int(os.environ.get("G2CALC_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, n)


# ===========================================================================
# verify suites
# ===========================================================================
# Each check is (check_id, fn) with fn() -> (ok, detail).  IDs are stable
# labels of the identity being certified, grouped by suite prefix.

def _rand_invariant_form(rng, k, dim=DIM, lo=-4, hi=4) -> KForm:
    coeffs = {}
    for idx in combinations(range(1, dim + 1), k):
        c = int(rng.integers(lo, hi + 1))
        if c:
            coeffs[idx] = Fraction(c)
    return KForm(dim, k, RAT, coeffs)


def _check_graded_commutativity(rng):
    for _ in range(100):
        k, l = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        a, b = _rand_invariant_form(rng, k), _rand_invariant_form(rng, l)
        sign = (-1) ** (k * l)
        if a.wedge(b) != sign * b.wedge(a):
            return False, f"a^b != (-1)^kl b^a at degrees ({k},{l})"
    return True, "100 random pairs, exact"


def _check_wedge_associativity(rng):
    for _ in range(100):
        a = _rand_invariant_form(rng, int(rng.integers(1, 3)))
        b = _rand_invariant_form(rng, int(rng.integers(1, 3)))
        c = _rand_invariant_form(rng, int(rng.integers(1, 3)))
        if a.wedge(b).wedge(c) != a.wedge(b.wedge(c)):
            return False, "associativity failure"
    return True, "100 random triples, exact"


def _rand_poly_form(rng, k, vars) -> KForm:
    ring = poly_ring(vars)
    coeffs = {}
    for idx in combinations(range(1, DIM + 1), k):
        if rng.random() < 0.5:
            continue
        p = Poly.const(vars, Fraction(int(rng.integers(-3, 4))))
        for v in rng.choice(vars, size=2, replace=True):
            if rng.random() < 0.6:
                p = p * Poly.var(vars, str(v))
        coeffs[idx] = p
    return KForm(DIM, k, ring, coeffs)


def _check_d_chart_squared(rng):
    vars = tuple(f"y{i}" for i in range(1, 8))
    for _ in range(60):
        a = _rand_poly_form(rng, int(rng.integers(0, 3)), vars)
        if not a.d_chart().d_chart().is_zero():
            return False, "d(d a) != 0"
    return True, "60 random polynomial forms, exact"


def _check_pullback_commutes_d(rng):
    vars = tuple(f"y{i}" for i in range(1, 8))
    # fixed quadratic self-map of the chart
    comps = {}
    for i, v in enumerate(vars):
        p = Poly.var(vars, v)
        w = vars[(i + 2) % 7]
        p = p + Poly.var(vars, w) * Poly.var(vars, w) * Fraction(1, 3)
        comps[v] = p
    F = PolynomialMap(vars, vars, comps)
    for _ in range(40):
        a = _rand_poly_form(rng, int(rng.integers(1, 3)), vars)
        if F.pullback(a.d_chart()) != F.pullback(a).d_chart():
            return False, "F^* d != d F^*"
    return True, "40 random polynomial forms, exact"


def _check_leibniz(rng):
    eqs = catalog.ffkm_model().eqs
    for _ in range(100):
        k, l = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        a, b = _rand_invariant_form(rng, k), _rand_invariant_form(rng, l)
        lhs = d_invariant(eqs, a.wedge(b))
        rhs = d_invariant(eqs, a).wedge(b) + (-1) ** k * a.wedge(d_invariant(eqs, b))
        if lhs != rhs:
            return False, f"Leibniz failure at degrees ({k},{l})"
    return True, "100 random pairs, exact"


def _check_d_squared_model(model_fn, label):
    def run():
        try:
            check_d_squared(model_fn().eqs)
        except JacobiError as e:
            return False, f"{label}: {e}"
        return True, f"{label}: d^2 = 0 on all generators, exact"
    return run


def _check_model_roundtrip(rng):
    m = catalog.nakamura_model()
    m2 = model_from_dict(model_to_dict(m))
    same = (m2.eqs.d_gen == m.eqs.d_gen
            and m2.eqs.generators == m.eqs.generators
            and set(m2.named_forms) == set(m.named_forms)
            and all(m2.named_forms[k] == m.named_forms[k] for k in m.named_forms))
    return same, "JSON round-trip preserves structure equations and named forms"


def _check_standard_metric(rng):
    data = is_g2_type(standard_phi())
    g = data.metric_array()
    ok = np.array_equal(g, np.eye(DIM)) and data.sqrt_det == 1
    return ok, "g_phi0 = id, vol = 1, exact"


def _rand_definite_phi(rng, scale=0.2):
    v = g2core.phi_to_vector(standard_phi().in_ring(FLT))
    v = v + scale * rng.normal(size=v.shape)
    return g2core.vector_to_phi(v)


def _check_star_star(rng):
    worst = 0.0
    for _ in range(100):
        phi = _rand_definite_phi(rng)
        try:
            data = is_g2_type(phi)
        except g2core.NotStableError:
            continue
        for k in (2, 3):
            a = KForm(DIM, k, FLT, {
                idx: float(rng.normal())
                for idx in list(combinations(range(1, DIM + 1), k))[:10]})
            back = hodge_star(data, hodge_star(data, a))
            diff = back - a
            worst = max(worst, max((abs(float(c)) for c in diff.coeffs.values()),
                                   default=0.0))
    return worst < 1e-10, f"max |**a - a| = {worst:.3e} over random definite metrics"


def _check_seven_vol(rng):
    worst = 0.0
    for _ in range(100):
        phi = _rand_definite_phi(rng)
        try:
            data = is_g2_type(phi)
        except g2core.NotStableError:
            continue
        top = phi.wedge(hodge_star(data, phi)).top_coefficient()
        worst = max(worst, abs(float(top) - 7.0 * float(data.sqrt_det)))
    return worst < 1e-10, f"max |phi ^ *phi - 7 vol| = {worst:.3e}"


def _su2_family(nu, ring=RAT):
    th = lambda *i: KForm.basis(DIM, i, ring)
    om = nu * (th(4, 5) + th(6, 7))
    re = th(4, 6) - th(5, 7)
    im = th(4, 7) + th(5, 6)
    fiber = SU2FiberData(om, re, im, (4, 5, 6, 7))
    phi = su2_assemble(th(1), th(2), th(3), fiber)
    return phi, fiber, om, re, im


def _check_su2_nu8(rng):
    nu = Fraction(8)
    phi, fiber, om, re, im = _su2_family(nu)
    if fiber.nu != nu:
        return False, f"normalisation constant {fiber.nu} != 8"
    data = is_g2_type(phi)
    g = data.metric_array()
    expect = np.diag([16.0, 0.25, 0.25, 2.0, 2.0, 2.0, 2.0])
    if not np.array_equal(g, expect):
        return False, "metric disagrees with the displayed diagonal"
    if data.sqrt_det != Fraction(4):   # nu^{2/3} = 4
        return False, f"volume {data.sqrt_det} != nu^(2/3)"
    th = lambda *i: KForm.basis(DIM, i, RAT)
    star_expected = (Fraction(4) * th(4, 5, 6, 7)
                     + Fraction(1, 16) * th(2, 3).wedge(om)
                     + Fraction(4) * th(1, 3).wedge(re)
                     + Fraction(4) * th(1, 2).wedge(im))
    if hodge_star(data, phi) != star_expected:
        return False, "*phi disagrees with the displayed closed form"
    return True, "metric, volume and *phi match the closed forms exactly at nu = 8"


def _check_su2_random_nu(rng):
    worst = 0.0
    for _ in range(20):
        nu = float(rng.uniform(0.2, 5.0))
        phi, fiber, om, re, im = _su2_family(nu, FLT)
        data = is_g2_type(phi)
        g = data.metric_array()
        expect = np.diag([nu ** (4 / 3)] + [nu ** (-2 / 3)] * 2 + [nu ** (1 / 3)] * 4)
        worst = max(worst, float(np.abs(g - expect).max()) / nu ** (4 / 3))
        worst = max(worst, abs(float(data.sqrt_det) - nu ** (2 / 3)) / nu ** (2 / 3))
        th = lambda *i: KForm.basis(DIM, i, FLT)
        star = hodge_star(data, phi)
        star_exp = (nu ** (2 / 3) * th(4, 5, 6, 7)
                    + nu ** (-4 / 3) * th(2, 3).wedge(om)
                    + nu ** (2 / 3) * th(1, 3).wedge(re)
                    + nu ** (2 / 3) * th(1, 2).wedge(im))
        diff = star - star_exp
        worst = max(worst, max((abs(float(c)) for c in diff.coeffs.values()),
                               default=0.0) / nu ** (2 / 3))
    return worst < 1e-12, f"20 random nu, worst relative error {worst:.3e}"


def _rand_cube_lambdas(rng):
    """Seven random positive rationals whose product is a perfect cube."""
    lams = [Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 9))) ** 3
            for _ in range(6)]
    lams.append(Fraction(int(rng.integers(1, 5))) ** 3)
    return lams


def _check_volume_law(rng):
    for _ in range(50):
        lams = _rand_cube_lambdas(rng)
        # scaled_volume_factor itself raises if the closed law and the
        # induced-metric volume disagree in exact arithmetic
        vol = scaling.scaled_volume_factor(lams)
        if not isinstance(vol, Fraction):
            return False, f"inexact volume at {lams}"
    return True, "50 random rational tuples with perfect-cube product, exact"


def _check_hitchin_exponent(size, rng):
    # phi(la) = phi0 + la * (sum of |I| standard terms): volume ratio
    # (1 + la)^{|I|/3}; exact whenever 1 + la is a rational cube
    def run():
        rho = Fraction(3, 2)
        lam = rho ** 3 - 1
        lams = [1 + lam if i < size else Fraction(1) for i in range(DIM)]
        vol = scaling.scaled_volume_factor(lams)
        if vol != rho ** size:
            return False, f"exact ratio {vol} != (1+la)^({size}/3)"
        worst = 0.0
        for _ in range(10):
            la = float(rng.uniform(0.1, 9.0))
            vals = [1 + la if i < size else 1.0 for i in range(DIM)]
            v = float(scaling.scaled_volume_factor(vals))
            worst = max(worst, abs(v - (1 + la) ** (size / 3.0)) / v)
        return worst < 1e-12, (f"exact at cube 1+la, worst relative error "
                               f"{worst:.3e} at 10 random la")
    return run


def _check_mu4_hitchin(rng):
    v1 = is_g2_type(catalog.phi_abl(1, 1, 1)).sqrt_det
    for mu in (2, 3):
        vm = is_g2_type(catalog.phi_abl_mu(1, 1, 1, mu)).sqrt_det
        if vm != Fraction(mu) ** 4 * v1:
            return False, f"volume ratio at mu={mu} is {vm / v1}, not mu^4"
    # generic parameters give irrational volumes; the ratio is still mu^4
    v1 = float(is_g2_type(catalog.phi_abl(2, 3, (1, 2)).in_ring(FLT)).sqrt_det)
    for mu in (2, 5):
        vm = float(is_g2_type(
            catalog.phi_abl_mu(2, 3, (1, 2), mu).in_ring(FLT)).sqrt_det)
        if abs(vm / v1 - mu ** 4) > 1e-12 * mu ** 4:
            return False, f"volume ratio at mu={mu} off by more than 1e-12"
    return True, ("exact at (1,1,1) for mu = 2, 3; within 1e-12 at generic "
                  "parameters")


def _check_mu2_volume(rng):
    v1 = is_g2_type(catalog.phi_check_mu(1)).sqrt_det
    for mu in (2, 3):
        vm = is_g2_type(catalog.phi_check_mu(mu)).sqrt_det
        if vm != Fraction(mu) ** 2 * v1:
            return False, f"volume ratio at mu={mu} is {vm / v1}, not mu^2"
    return True, "vol(phi-check^mu) = mu^2 vol(phi-check), exact at mu = 2, 3"


def _check_closed_families(rng):
    nak = catalog.nakamura_model()
    for a, b in ((1, 1), (2, 3)):
        for lam in ((1, 0), (2, 5), (Fraction(1, 3), Fraction(-2, 7))):
            for mu in (1, 2):
                phi = catalog.phi_abl_mu(a, b, lam, mu, nak)
                if not d_invariant(nak.eqs, phi).is_zero():
                    return False, f"d phi != 0 at ({a},{b},{lam};{mu})"
    ffkm = catalog.ffkm_model()
    for mu in (1, 2, 3):
        if not d_invariant(ffkm.eqs, catalog.phi_check_mu(mu)).is_zero():
            return False, f"d phi-check^{mu} != 0"
    return True, "both families closed, exact on a rational parameter grid"


def _check_exactness_witness(rng):
    m = catalog.nakamura_model()
    rho, target = m.witnesses["two_g1_wedge_omega"]
    ok = d_invariant(m.eqs, rho) == target
    # and the class primitive of phi^mu - phi
    mu = Fraction(2)
    prim = (mu ** 6 - 1) * Fraction(1, 2) * Fraction(3) * rho  # alpha = 3
    diff = catalog.phi_abl_mu(3, 1, 1, mu, m) - catalog.phi_abl(3, 1, 1, m)
    ok = ok and d_invariant(m.eqs, prim) == diff
    return ok, "d(rho) = 2 g^1^omega and the mu-family primitive, exact"


def _check_primitive_ledger(rng):
    for mu in (1, 2):
        rows = catalog.primitive_ledger(mu)
        bad = [r for r in rows if r["status"] != "pass"]
        if bad:
            return False, f"mu={mu}: {bad[0]['check']}"
    return True, "all region primitives verify at mu = 1, 2"


def _check_master_identity(rng):
    return catalog.master_identity_check(), \
        "phi^mu - xi^mu = y1 dy^147 + d(alpha), exact polynomial identity"


def _check_boundary_identity(rng):
    return catalog.resolution_boundary_identity(), \
        "homothety-rescaled boundary match, exact in (y, mu^3)"


def _check_ch_map(rng):
    seen = {}
    for a in (1, 2, 3, Fraction(1, 2)):
        for b in (1, 2, Fraction(1, 3), 5):
            for lam in ((1, 0), (2, 1), (0, 1), (Fraction(1, 2), Fraction(-3, 4))):
                re, im = Fraction(lam[0]), Fraction(lam[1])
                got = catalog.ch_map(catalog.phi_abl(a, b, lam))
                want = (Fraction(a) * b, re, im, b * re, b * im)
                if got != want:
                    return False, f"ch at ({a},{b},{lam}): {got} != {want}"
                if want in seen and seen[want] != (a, b, lam):
                    return False, f"collision between {(a, b, lam)} and {seen[want]}"
                seen[want] = (a, b, lam)
    return True, "4x4x4 rational grid, exact values and pairwise injective"


def _check_quadlem_constant(rng):
    out = catalog.measure_quadlem_constant(n=200, seed=0)
    out2 = catalog.measure_quadlem_constant(n=400, seed=1)
    c1, c2 = out["C"], out2["C"]
    stable = abs(c1 - c2) <= 0.2 * max(c1, c2)
    return stable, f"C = {c1:.4f} (n=200) vs {c2:.4f} (n=400)"


def _check_glued_definite(rng):
    for mu in (1, 2, 8):
        for _ in range(10):
            pt = {f"y{i}": float(rng.uniform(-0.05, 0.05)) for i in range(1, 8)}
            out = catalog.glued_form_at(pt, mu)
            if out["g2"] is None:
                return False, f"indefinite at mu={mu}"
    return True, "glued form definite at 10 random chart points per mu in {1,2,8}"


def _check_resolution_margins(rng):
    prof = ehmetric.build_profile(ehmetric.default_t_for_epsilon(0.1, 4.0), 4.0)
    out = catalog.ResolutionForms(8, 0.1, profile=prof).margins(n=80, seed=0)
    return out["g2_certified"] and out["inner_bound_ok"], \
        f"outer gap {out['outer_gap']:.3e} <= eps/2, inner C = {out['inner_C']:.3f}"


def _check_flow_unit(rng):
    m = catalog.nakamura_model()
    lap = flow.laplacian(catalog.phi_abl_mu(1, 1, 1, 1, m), m)
    want = 4 * m.named_forms["g1"].wedge(m.named_forms["omega"])
    return lap == want, "Delta phi(1,1,1) = 4 g^1 ^ omega, exact"


def _check_flow_family(rng):
    gap = flow.check_flow_consistency(2, 1, (1, 1), 2.0)
    return gap < 1e-10, f"relative gap to 4 L^(2/3)/(alpha mu^2) g^1^omega: {gap:.3e}"


def _check_flow_ffkm(rng):
    m = catalog.ffkm_model()
    lap = flow.laplacian(m.named_forms["phi"], m)
    th = lambda *i: KForm.basis(DIM, i, RAT)
    want = 2 * th(1, 2, 3) + 2 * th(1, 4, 5) - th(1, 3, 6) + th(1, 2, 7)
    return lap == want, "Delta phi-check matches its four-term display, exact"


def _check_flow_torus(rng):
    eqs = StructureEqs(DIM, [None] * DIM, tuple(f"t{i}" for i in range(1, 8)))
    from .liecdga import InvariantModel
    m = InvariantModel(eqs, {}, label="flat torus")
    lap = flow.laplacian(standard_phi(), m)
    return lap.is_zero(), "flat-torus Laplacian vanishes, exact"


def _check_flow_trajectory(rng):
    rows = flow.flow_integrate(1, 1, (1, 1), 1.0, 10000)
    err = max(r[3] for r in rows)
    return err < 1e-10, f"max |mu_RK4 - mu_closed| = {err:.3e} at 10^4 steps"


def _check_flow_order(rng):
    e1 = flow.flow_integrate(1, 1, (2, 1), 1.0, 40)[-1][3]
    e2 = flow.flow_integrate(1, 1, (2, 1), 1.0, 80)[-1][3]
    ratio = e1 / e2
    return 12.0 < ratio < 20.0, f"halving-step error ratio {ratio:.2f} (expect ~16)"


_EH_PROFILE = None


def _eh_profile():
    global _EH_PROFILE
    if _EH_PROFILE is None:
        _EH_PROFILE = ehmetric.build_profile(1.0, 4.0, 1.0)
    return _EH_PROFILE


def _check_eh_ricci(rng):
    res = ehmetric.ricci_residual(1.0, np.linspace(0.5, 40.0, 25))
    return res < 1e-8, f"max |d/dlam[lam^2 a'^2] - 2 lam| = {res:.3e}"


def _check_eh_mass(rng):
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        p = ehmetric.build_profile(t, 4.0, 1.0)
        worst = max(worst, abs(p.h(p.q) + t ** 4) / t ** 4)
    return worst < 1e-10, f"relative defect of integral(k) = -t^4: {worst:.3e}"


def _check_eh_certificate(rng):
    rep = ehmetric.positivity_and_volume_certificate(_eh_profile(),
                                                     n_r=300, n_ang=12)
    floor = 2.0 * _eh_profile().upsilon ** 2
    ok = rep["positivity_ok"] and rep["min_margin"] > 0 \
        and rep["min_ratio"] >= floor - 1e-9 \
        and abs(rep["min_ratio"] - floor) < 1e-6
    return ok, (f"margin {rep['min_margin']:.4f}, volume ratio "
                f"{rep['min_ratio']:.12f} vs floor {floor:.12f}")


def _check_eh_upsilon(rng):
    vals = []
    for t in (0.01, 0.1, 1.0):
        p = ehmetric.build_profile(t, 4.0, 1.0)
        rep = ehmetric.positivity_and_volume_certificate(p, n_r=120, n_ang=8)
        vals.append(rep["upsilon_measured"])
    spread = (max(vals) - min(vals)) / max(vals)
    return spread < 0.01, f"upsilon spread across t = 0.01/0.1/1: {spread:.2e}"


def _check_eh_equivariance(rng):
    p1 = ehmetric.build_profile(1.0, 4.0, 1.0)
    s = 3.0
    p2 = ehmetric.build_profile(s, 4.0, 1.0)
    worst = 0.0
    for lam in np.linspace(0.1, 1.2 * p1.q, 40):
        worst = max(worst, abs(p2.k(s * s * lam) - s * s * p1.k(lam)))
    return worst < 1e-12, f"max |k_st(s^2 lam) - s^2 k_t(lam)| = {worst:.3e}"


def _check_eh_closedness(rng):
    res = ehmetric.closedness_residual(_eh_profile())
    return res < 1e-6, f"finite-difference d omega residual {res:.3e}"


def _check_eh_budget(rng):
    c_meas = ehmetric.measure_dlam_constant(n_r=20, n_ang=10)
    out = ehmetric.positivity_budget(4.0)
    return out["ok"] and abs(c_meas - 1.0) < 1e-12, \
        f"measured |dlam ^ dclam|/4r^2 constant {c_meas}, budget {out['budget']:.4f} < 1"


def _check_eh_infeasible(rng):
    try:
        ehmetric.build_profile(1.0, 0.9 * ehmetric.feasibility_threshold(1.0), 1.0)
    except ehmetric.Infeasible:
        return True, "radii below the feasibility threshold are rejected"
    return False, "no Infeasible raised below the threshold"


def _check_collapse_lambda(rng):
    base = collapse.nakamura_metric(2, 1, (1, 1), 2, rescaled=True).limit
    samples = [collapse.nakamura_metric(2, 1, (1, 1), mu, rescaled=True)
               for mu in (1, 2, 4, 8, 16, 32)]
    rep = collapse.premise_check(samples, base)
    worst = max(abs(v - 1.0) for v in rep["lambdas"].values())
    return rep["pass"] and worst < 1e-6, \
        f"Lambda_mu = 1 within {worst:.2e} on mu in 1..32, gaps nonincreasing"


def _check_collapse_product_rates(rng):
    out = collapse.rescaled_decay_exponents(2, 1, (1, 1), 8, 16)
    ok = abs(out["omega_block"] + 6) < 0.06 and abs(out["transverse_block"] + 12) < 0.12
    return ok, f"measured block rates {out}"


def _check_collapse_region_rates(rng):
    pt = {"y1": 0.02, "y2": 0.01, "y4": 0.3, "y5": 0.015, "y6": 0.01, "y7": 0.2}
    chart = collapse.region_gap_decay("chart", pt, (4, 8, 16))["rate"]
    wreg = collapse.region_gap_decay("w_outer", {"y1": 0.3}, (2, 4, 8))["rate"]
    ok = chart <= -2.7 and wreg <= -2.7
    return ok, f"sup-gap rates: chart {chart:.3f}, annulus {wreg:.3f} (need <= -2.7)"


def _check_collapse_lower_bound(rng):
    mc = collapse.measure_metric_comparison(n=200)
    mu = 8
    samples = [collapse.ffkm_region_metrics("interior", (), mu),
               collapse.ffkm_region_metrics("w_outer", {"y1": 0.3}, mu),
               collapse.ffkm_region_metrics("chart", {"y1": 0.02, "y4": 0.3,
                                                      "y7": 0.2}, mu)]
    ups = math.sqrt(0.5)
    rep = collapse.lower_bound_global(mu, samples, ups, C=1.0,
                                      Delta0=mc["Delta0"])
    prof = ehmetric.build_profile(ehmetric.default_t_for_epsilon(0.1, 4.0), 4.0)
    res = collapse.resolution_equality_probe(prof, mu)
    return rep["pass"] and res["pass"], \
        (f"PSD margin {rep['min_eig_margin']:.3e}; resolution equality gap "
         f"{res['equality_gap']:.3e} at the tight radius")


def _check_collapse_fiber_diameter(rng):
    prof = ehmetric.build_profile(ehmetric.default_t_for_epsilon(0.1, 4.0), 4.0)
    out = collapse.fiber_diameter_probe(profile=prof)
    ok = out["exponent_ok"] and out["monotone_in_k"] and out["mu_uniform"]
    return ok, f"decay exponent {out['exponent']:.4f} (need <= -2.7)"


def _check_collapse_finsler(rng):
    ups = math.sqrt(0.5)
    generic = collapse.limit_quasi_finsler("generic", [0, 0, 1], ups)
    sing = collapse.limit_quasi_finsler("singular", [0, 0, 1], ups,
                                        y1_samples=(0.0, 0.4))
    ok = abs(generic - 1.0) < 1e-12 and abs(sing - ups ** (2 / 3)) < 1e-12
    return ok, f"lengths: generic {generic}, singular {sing} = ups^(2/3)"


def _check_collapse_comparison(rng):
    mc = collapse.measure_metric_comparison(n=200)
    ok = 0.0 < mc["Delta0"] < 10.0 and mc["delta1"] > 0
    for _ in range(30):
        A = rng.normal(size=(DIM, DIM))
        h = A + A.T
        B = rng.normal(size=(DIM, DIM))
        g = B @ B.T + 0.1 * np.eye(DIM)
        ok = ok and collapse.lc_vs_norm_holds(h, g)
    return ok, (f"Delta0 = {mc['Delta0']:.4f}, delta1 = {mc['delta1']}; "
                "h <= |h|_g g on 30 random pairs")


def build_suites(seed: int) -> dict:
    """check id -> callable returning (ok, detail)."""

    def seeded(fn):
        def run():
            return fn(np.random.default_rng(seed))
        return run

    return {
        "forms": [
            ("forms.graded_commutativity", seeded(_check_graded_commutativity)),
            ("forms.wedge_associativity", seeded(_check_wedge_associativity)),
            ("forms.chart_d_squared", seeded(_check_d_chart_squared)),
            ("forms.pullback_commutes_with_d", seeded(_check_pullback_commutes_d)),
        ],
        "liecdga": [
            ("liecdga.check_d_squared.product_model",
             _check_d_squared_model(catalog.nakamura_model, "product model")),
            ("liecdga.check_d_squared.nilmanifold_model",
             _check_d_squared_model(catalog.ffkm_model, "nilmanifold model")),
            ("liecdga.leibniz", seeded(_check_leibniz)),
            ("liecdga.model_json_roundtrip", seeded(_check_model_roundtrip)),
        ],
        "g2core": [
            ("g2core.standard_metric_identity", seeded(_check_standard_metric)),
            ("g2core.star_star_identity", seeded(_check_star_star)),
            ("g2core.phi_wedge_star_phi_7vol", seeded(_check_seven_vol)),
            ("g2core.su2_closed_forms_nu8", seeded(_check_su2_nu8)),
            ("g2core.su2_closed_forms_random_nu", seeded(_check_su2_random_nu)),
        ],
        "scaling": [
            ("scaling.volume_law_exact", seeded(_check_volume_law)),
            ("scaling.hitchin_exponent_two_thirds",
             _check_hitchin_exponent(2, np.random.default_rng(seed))),
            ("scaling.hitchin_exponent_four_thirds",
             _check_hitchin_exponent(4, np.random.default_rng(seed))),
            ("scaling.hitchin_mu_fourth", seeded(_check_mu4_hitchin)),
            ("scaling.volume_mu_squared", seeded(_check_mu2_volume)),
        ],
        "catalog": [
            ("catalog.families_closed", seeded(_check_closed_families)),
            ("catalog.exactness_witnesses", seeded(_check_exactness_witness)),
            ("catalog.class_map_grid", seeded(_check_ch_map)),
            ("catalog.master_gluing_identity", seeded(_check_master_identity)),
            ("catalog.boundary_rescaling_identity", seeded(_check_boundary_identity)),
            ("catalog.primitive_ledger", seeded(_check_primitive_ledger)),
            ("catalog.gap_constant_stability", seeded(_check_quadlem_constant)),
            ("catalog.glued_form_definite", seeded(_check_glued_definite)),
            ("catalog.resolution_margins", seeded(_check_resolution_margins)),
        ],
        "flow": [
            ("flow.laplacian_unit_point", seeded(_check_flow_unit)),
            ("flow.laplacian_family_point", seeded(_check_flow_family)),
            ("flow.laplacian_nilmanifold", seeded(_check_flow_ffkm)),
            ("flow.flat_torus_harmonic", seeded(_check_flow_torus)),
            ("flow.closed_form_trajectory", seeded(_check_flow_trajectory)),
            ("flow.rk4_convergence_order", seeded(_check_flow_order)),
        ],
        "eh": [
            ("eh.ricci_flat_profile", seeded(_check_eh_ricci)),
            ("eh.interpolation_mass", seeded(_check_eh_mass)),
            ("eh.positivity_and_volume", seeded(_check_eh_certificate)),
            ("eh.volume_floor_stability", seeded(_check_eh_upsilon)),
            ("eh.scale_equivariance", seeded(_check_eh_equivariance)),
            ("eh.closedness_residual", seeded(_check_eh_closedness)),
            ("eh.feasibility_budget", seeded(_check_eh_budget)),
            ("eh.infeasible_guard", seeded(_check_eh_infeasible)),
        ],
        "collapse": [
            ("collapse.product_lambda_one", seeded(_check_collapse_lambda)),
            ("collapse.product_decay_rates", seeded(_check_collapse_product_rates)),
            ("collapse.region_gap_rates", seeded(_check_collapse_region_rates)),
            ("collapse.global_lower_bound", seeded(_check_collapse_lower_bound)),
            ("collapse.fiber_diameter_decay", seeded(_check_collapse_fiber_diameter)),
            ("collapse.limit_length_structure", seeded(_check_collapse_finsler)),
            ("collapse.metric_comparison_constants", seeded(_check_collapse_comparison)),
        ],
    }


def cmd_verify(args) -> int:
    suites = build_suites(args.seed)
    if args.suite:
        if args.suite not in suites:
            print(f"unknown suite {args.suite!r}; choose from "
                  f"{sorted(suites)}", file=sys.stderr)
            return 2
        suites = {args.suite: suites[args.suite]}
    checks = [c for entries in suites.values() for c in entries]
    if args.model:
        def custom_model_check():
            try:
                check_d_squared(load_model(args.model).eqs)
            except JacobiError as e:
                return False, f"check_d_squared: {e}"
            return True, "check_d_squared: d^2 = 0 on the supplied model"
        checks.insert(0, ("liecdga.check_d_squared.custom_model",
                          custom_model_check))

    def run_one(item):
        cid, fn = item
        try:
            ok, detail = fn()
        except Exception as e:  # a raised invariant is a failure, not a crash
            ok, detail = False, f"{type(e).__name__}: {e}"
        return cid, ok, detail

    cap = _thread_cap()
    if cap > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            results = list(pool.map(run_one, checks))
    else:
        results = [run_one(c) for c in checks]

    rows = [{"id": cid, "status": "pass" if ok else "fail", "detail": detail}
            for cid, ok, detail in results]
    width = max(len(r["id"]) for r in rows)
    for r in rows:
        print(f"{r['id']:<{width}}  {r['status']:4}  {r['detail']}")
    failures = [r for r in rows if r["status"] == "fail"]
    print(f"\n{len(rows) - len(failures)}/{len(rows)} checks passed")
    if failures:
        print(f"first failure: {failures[0]['id']}: {failures[0]['detail']}",
              file=sys.stderr)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"checks": rows, "seed": args.seed,
                       "passed": len(rows) - len(failures),
                       "failed": len(failures)}, fh, indent=2)
    return 1 if failures else 0


# ===========================================================================
# artifact sweeps
# ===========================================================================

def cmd_scan(args) -> int:
    """Volume-scaling sweep over random rational frame scalings."""
    import csv as _csv
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.grid):
        lams = _rand_cube_lambdas(rng)
        out = scaling.hitchin_scaling_law(lams)
        rows.append([str(l) for l in out["lambdas"]]
                    + [str(out["volume_factor"]), str(out["exact"])])
    path = args.out or "scan.csv"
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow([f"lambda{i}" for i in range(1, 8)]
                   + ["volume_factor", "exact"])
        w.writerows(rows)
    print(f"wrote {len(rows)} scaling samples to {path}")
    return 0


def _parse_lambda(s):
    if "," in s:
        re, im = s.split(",", 1)
        return (float(re), float(im))
    return float(s)


def cmd_flow(args) -> int:
    rows = flow.flow_integrate(args.alpha, args.beta,
                               _parse_lambda(args.lam), args.t_end, args.steps)
    path = args.out or "flow_trajectory.csv"
    flow.trajectory_to_csv(rows, path)
    err = max(r[3] for r in rows)
    print(f"wrote {len(rows)} trajectory rows to {path}; "
          f"max |mu_numeric - mu_closed| = {err:.3e}")
    return 0 if err < args.tol else 1


def cmd_eh(args) -> int:
    c = 1.0 if args.c == "auto" else float(args.c)
    if args.R == "auto":
        R = max(4.0, 1.05 * ehmetric.feasibility_threshold(c))
    else:
        R = float(args.R)
    try:
        profile = ehmetric.build_profile(args.t, R, c)
    except (ehmetric.Infeasible, ehmetric.ConstructionFailed) as e:
        print(f"profile construction failed: {e}", file=sys.stderr)
        return 1
    prefix = args.out or "eh"
    profile.export_csv(f"{prefix}_profile.csv", n=args.grid)
    rep = ehmetric.positivity_and_volume_certificate(
        profile, n_r=args.grid, n_ang=20, seed=args.seed)
    ehmetric.certificate_to_json(rep, f"{prefix}_certificate.json")
    print(f"wrote {prefix}_profile.csv and {prefix}_certificate.json; "
          f"margin {rep['min_margin']:.4f}, ratio {rep['min_ratio']:.6f}")
    return 0 if rep["positivity_ok"] and rep["volume_ok"] else 1


def cmd_collapse(args) -> int:
    mus = [float(m) for m in args.mu.split(",")]
    if args.model == "nakamura":
        base = collapse.nakamura_metric(2, 1, (1, 1), 2, rescaled=True).limit
        samples = [collapse.nakamura_metric(2, 1, (1, 1), mu, rescaled=True)
                   for mu in mus]
        rep = collapse.premise_check(samples, base)
        rep["model"] = "nakamura"
    elif args.model == "ffkm":
        pt = {"y1": 0.02, "y2": 0.01, "y4": 0.3, "y5": 0.015, "y6": 0.01,
              "y7": 0.2}
        rep = {"model": "ffkm",
               "chart": collapse.region_gap_decay("chart", pt, mus,
                                                  args.epsilon),
               "interior": collapse.region_gap_decay("interior", (), mus,
                                                     args.epsilon)}
        rep["pass"] = (rep["chart"]["rate"] <= -2.7
                       and rep["interior"]["rate"] <= -2.7)
    else:
        print(f"unknown model {args.model!r}", file=sys.stderr)
        return 2
    path = args.out or "collapse_report.json"
    collapse.report_to_json(rep, path)
    print(f"wrote {path}; pass = {rep['pass']}")
    return 0 if rep["pass"] else 1


# ===========================================================================
# argument parsing
# ===========================================================================

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="g2calc",
        description="verification suites for closed definite 3-form families")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity suites")
    v.add_argument("--suite", help="run a single suite (e.g. flow)")
    v.add_argument("--model", help="model JSON whose structure equations are "
                                   "checked first")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--out", help="write the report as JSON")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("scan", help="volume-scaling sweep")
    s.add_argument("--grid", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_scan)

    f = sub.add_parser("flow", help="integrate the flow line and export CSV")
    f.add_argument("--alpha", type=float, default=1.0)
    f.add_argument("--beta", type=float, default=1.0)
    f.add_argument("--lambda", dest="lam", default="1", help="'re' or 're,im'")
    f.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    f.add_argument("--steps", type=int, default=10000)
    f.add_argument("--tol", type=float, default=1e-10)
    f.add_argument("--out")
    f.set_defaults(fn=cmd_flow)

    e = sub.add_parser("eh", help="build an interpolation profile and certify it")
    e.add_argument("--t", type=float, default=0.1)
    e.add_argument("--R", default="auto")
    e.add_argument("--c", default="auto")
    e.add_argument("--grid", type=int, default=400)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="output path prefix")
    e.set_defaults(fn=cmd_eh)

    c = sub.add_parser("collapse", help="convergence-premise report")
    c.add_argument("--model", default="nakamura", choices=("nakamura", "ffkm"))
    c.add_argument("--mu", default="1,2,4,8,16")
    c.add_argument("--epsilon", type=float, default=0.1)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_collapse)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("tol",):
        if hasattr(args, name) and getattr(args, name) is not None \
                and getattr(args, name) <= 0:
            print(f"--{name} must be positive", file=sys.stderr)
            return 2
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
