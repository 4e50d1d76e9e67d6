'''Anisotropic scaling of the standard definite 3-form.

Writing phi_0 = phi_1 + ... + phi_7 for its seven basis terms, the family
phi_(lambda) = sum_i lambda_i phi_i stays definite for positive lambda and
its frame can be re-scaled to bring it back to standard shape: putting
theta^i -> mu_i theta^i requires solving a 7x7 linear system in the logs of
the mu_i, one equation per basis term.  The induced volume obeys

    vol_(lambda) = (prod_i lambda_i)^{1/3} vol.

The solve is exact whenever the lambda_i are rationals whose relevant
products are perfect cubes; otherwise results degrade to floats.
'''
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .forms import KForm
from .g2core import DIM, G2Data, is_g2_type, inverse_exact, standard_phi
from .g2core import STANDARD_PHI_TERMS
from .rings import RAT, fraction_pow, nth_root_fraction

#: index triples of the seven terms of the standard form, in order
SCALING_TRIPLES = tuple(idx for _, idx in STANDARD_PHI_TERMS)

#: incidence matrix M of the log-linear system: row t, column i is 1 when
#: axis i appears in triple t, so that M log(mu) = log(lambda)
INCIDENCE = [[1 if i in t else 0 for i in range(1, DIM + 1)] for t in SCALING_TRIPLES]

INCIDENCE_INV = inverse_exact(INCIDENCE)   # entries in (1/3)Z


class NonPositiveScaleError(ValueError):
    """Scaling coefficients must all be positive."""


@dataclass
class ScalingExponents:
    """Frame scales mu with (mu_i theta^i)-pullback matching phi_(lambda)."""
    lambdas: tuple
    mus: tuple
    exact: bool

    def volume_factor(self):
        """(prod lambda)^{1/3} = prod mu."""
        prod = 1
        for m in self.mus:
            prod = prod * m
        return prod


def solve_scaling(lambdas) -> ScalingExponents:
    """Solve mu_a mu_b mu_c = lambda_t over the seven triples {abc}."""
    lambdas = tuple(lambdas)
    if len(lambdas) != DIM:
        raise ValueError("need seven scaling coefficients")
    exact_in = all(isinstance(l, (int, Fraction)) for l in lambdas)
    if any((l <= 0) for l in lambdas):
        raise NonPositiveScaleError(f"non-positive scaling coefficients in {lambdas}")
    mus = []
    exact = exact_in
    if exact_in:
        lams = [Fraction(l) for l in lambdas]
        for i in range(DIM):
            # mu_i = prod_t lambda_t^{Minv[i][t]}; exponents have denominator
            # dividing 6, so collect one integer radicand and a sixth root
            radicand = Fraction(1)
            for t in range(DIM):
                e = INCIDENCE_INV[i][t] * 6
                if e.denominator != 1:
                    raise AssertionError("incidence inverse should be sixth-integral")
                radicand *= lams[t] ** int(e)
            root = nth_root_fraction(radicand, 6)
            if root is None:
                mus.append(float(radicand) ** (1.0 / 6.0))
                exact = False
            else:
                mus.append(root)
    else:
        logs = [math.log(float(l)) for l in lambdas]
        for i in range(DIM):
            mus.append(math.exp(sum(float(INCIDENCE_INV[i][t]) * logs[t]
                                    for t in range(DIM))))
        exact = False
    if exact:
        return ScalingExponents(tuple(Fraction(l) for l in lambdas), tuple(mus), True)
    return ScalingExponents(tuple(lambdas), tuple(float(m) for m in mus), False)


def scaled_form(lambdas) -> KForm:
    """phi_(lambda) = sum_i lambda_i phi_i."""
    lambdas = tuple(lambdas)
    if len(lambdas) != DIM:
        raise ValueError("need seven scaling coefficients")
    ring = RAT if all(isinstance(l, (int, Fraction)) for l in lambdas) else "float"
    if ring == RAT:
        coeffs = {idx: Fraction(l) * c for l, (c, idx) in zip(lambdas, STANDARD_PHI_TERMS)}
        return KForm(DIM, 3, RAT, coeffs)
    from .rings import FLT
    return KForm(DIM, 3, FLT,
                 {idx: float(l) * float(c) for l, (c, idx) in zip(lambdas, STANDARD_PHI_TERMS)})


def scaled_volume_factor(lambdas):
    """Volume of phi_(lambda) relative to the standard volume, computed two
    independent ways (closed law and the induced-metric volume) with the
    exact route preferred; raises on disagreement."""
    lambdas = tuple(lambdas)
    if any(l <= 0 for l in lambdas):
        raise NonPositiveScaleError(f"non-positive scaling coefficients in {lambdas}")
    prod = 1
    for l in lambdas:
        prod = prod * l
    if all(isinstance(l, (int, Fraction)) for l in lambdas):
        law = fraction_pow(Fraction(prod), Fraction(1, 3))
    else:
        law = float(prod) ** (1.0 / 3.0)
    data = is_g2_type(scaled_form(lambdas))
    measured = data.sqrt_det
    if isinstance(law, Fraction) and isinstance(measured, Fraction):
        if law != measured:
            raise AssertionError(f"volume law {law} != induced volume {measured}")
        return law
    if abs(float(law) - float(measured)) > 1e-10 * max(1.0, abs(float(law))):
        raise AssertionError(f"volume law {float(law)} != induced volume {float(measured)}")
    return law


def hitchin_scaling_law(lambdas) -> dict:
    """Bundle (mu, volume factor, definiteness certificate) for one lambda."""
    expo = solve_scaling(lambdas)
    vol = scaled_volume_factor(lambdas)
    pm = 1
    for m in expo.mus:
        pm = pm * m
    ok = (pm == vol) if expo.exact and isinstance(vol, Fraction) \
        else abs(float(pm) - float(vol)) <= 1e-10 * max(1.0, abs(float(vol)))
    if not ok:
        raise AssertionError("prod(mu) disagrees with the volume factor")
    return {"lambdas": expo.lambdas, "mus": expo.mus, "exact": expo.exact,
            "volume_factor": vol}
