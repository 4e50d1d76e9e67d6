'''Premise checks for the Gromov-Hausdorff collapse of the two families.

The collapse theorems consume four kinds of sampled inequalities, which this
module certifies pointwise (the GH conclusion itself is a black-box theorem
and is never recomputed):

  * uniform convergence g^mu -> pi^* g of the rescaled metric families,
  * two-sided bounds g^mu >= La_mu^2 pi^* g with La_mu -> 1,
  * intrinsic fiber diameter decay in the shrinking surgery regions,
  * the global lower bound g^mu >= (1 - C De_0 / mu^3) ups^{4/3} f*g_E.

Region conventions for the resolved nilmanifold family: "interior" is the
bulk where the form is left-invariant (theta-coframe); "chart" is a lattice
chart around a singular circle where the glued form phi^mu = xi^mu +
y1 dy^{147} + d[f alpha] lives (y-coordinates); "w_outer" is the surgery
annulus carrying mu^{-6}{...six fiber terms... + y1 dy^{147}} (y-coordinates).
'''
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .catalog import (DEFAULT_CUTOFF, DEFAULT_EPSILON, ResolutionForms,
                      _lam_parts, glued_form_at, nakamura_model, phi_abl_mu,
                      phi_check_mu)
from .forms import KForm
from .g2core import DIM, is_g2_type, standard_phi, phi_to_vector, metric_batch
from .rings import FLT


@dataclass
class MetricSample:
    """One evaluated metric: a symmetric 7x7 matrix at a tagged point."""
    region: str
    point: tuple
    mu: float
    matrix: np.ndarray
    limit: np.ndarray | None = None   # matching closed-form g^infty, if any

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (DIM, DIM):
            raise ValueError("metric samples are 7x7")
        if not np.allclose(self.matrix, self.matrix.T, atol=1e-12):
            raise ValueError("metric sample must be symmetric")

    def gap(self) -> float:
        """Operator-norm distance to the closed-form limit."""
        if self.limit is None:
            raise ValueError("sample has no attached limit metric")
        return float(np.linalg.norm(self.matrix - self.limit, ord=2))


def _op_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float), ord=2))


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m, dtype=float))[0])


# ----- product model: closed-form metric family ------------------------------

def _lam_modulus_sq(lam) -> float:
    re, im = _lam_parts(lam)
    return float(re) ** 2 + float(im) ** 2


def nakamura_metric(alpha, beta, lam, mu, rescaled: bool = False) -> MetricSample:
    """Closed-form metric of phi(alpha, beta, lambda; mu) on the product
    model, in the invariant coframe (g^1, g^2, g^3, theta^4..theta^7);
    cross-checked against the from-scratch computation on the form itself.

    The rescaled flag applies mu^{-12} to the form, i.e. mu^{-8} to the
    metric, which is the normalization whose large-mu limit is the circle."""
    a, b, m = float(alpha), float(beta), float(mu)
    L = _lam_modulus_sq(lam)
    L13, L23 = L ** (1.0 / 3.0), L ** (2.0 / 3.0)
    diag = [m ** 8 * a ** 2 / L23, b ** 2 * L13 / m ** 4, L13 / m ** 4] \
        + [m ** 2 * L13] * 4
    g = np.diag(diag)
    model = nakamura_model()
    phi = phi_abl_mu(alpha, beta, lam, mu, model).in_ring(FLT)
    computed = is_g2_type(phi).metric_array()
    gap = _op_norm(g - computed) / max(1.0, _op_norm(g))
    if gap > 1e-10:
        raise AssertionError(f"closed-form metric disagrees with the "
                             f"computed one (relative gap {gap})")
    if rescaled:
        g = g / m ** 8
    limit = np.zeros((DIM, DIM))
    limit[0, 0] = a ** 2 / L23
    return MetricSample("product", (), m, g, limit=limit if rescaled else None)


def rescaled_decay_exponents(alpha, beta, lam, mu1: float, mu2: float) -> dict:
    """Measured decay rates of the two tail blocks of the rescaled metric:
    the fiber sympletic block (expected mu^-6) and the (g^2, g^3) block
    (expected mu^-12)."""
    g1 = nakamura_metric(alpha, beta, lam, mu1, rescaled=True).matrix
    g2 = nakamura_metric(alpha, beta, lam, mu2, rescaled=True).matrix
    s = math.log(mu2 / mu1)
    return {"omega_block": math.log(g2[3, 3] / g1[3, 3]) / s,
            "transverse_block": math.log(g2[1, 1] / g1[1, 1]) / s}


# ----- convergence premises ---------------------------------------------------

def largest_lambda(mats, base, tol: float = 1e-10) -> float:
    """Largest La with g - La^2 * base PSD at every sample (bisection)."""
    mats = [np.asarray(m, float) for m in mats]
    base = np.asarray(base, float)
    scale = max(1.0, max(_op_norm(m) for m in mats))

    def ok(la):
        return all(_min_eig(m - la * la * base) >= -tol * scale for m in mats)

    if not ok(0.0):
        return 0.0
    hi = 1.0
    while ok(hi) and hi < 4.0:
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def premise_check(samples, base) -> dict:
    """Certify the convergence premises on a mu-grid of samples: the largest
    La_mu with g^mu >= La_mu^2 * base everywhere, and sup|g^mu - base|.
    Verdict passes iff 1 - La_mu contracts along the grid (geometric factor
    0.9 per step, with additive slack 1e-9) and the sup-gap never grows."""
    if not samples:
        raise ValueError("no samples")
    base = np.asarray(base, float)
    by_mu: dict = {}
    for s in samples:
        by_mu.setdefault(float(s.mu), []).append(s.matrix)
    mus = sorted(by_mu)
    lambdas = {mu: largest_lambda(by_mu[mu], base) for mu in mus}
    gaps = {mu: max(_op_norm(m - base) for m in by_mu[mu]) for mu in mus}
    ok = True
    for prev, nxt in zip(mus, mus[1:]):
        if (1.0 - lambdas[nxt]) > 0.9 * (1.0 - lambdas[prev]) + 1e-9:
            ok = False
        if gaps[nxt] > gaps[prev] + 1e-12:
            ok = False
    return {"mus": mus, "lambdas": lambdas, "sup_gaps": gaps, "pass": ok}


# ----- resolved nilmanifold: region metrics -----------------------------------

_W_TAIL = (((1, 4, 5), 1), ((1, 6, 7), 1), ((2, 4, 6), -1), ((2, 5, 7), 1),
           ((3, 4, 7), 1), ((3, 5, 6), 1))


def _w_outer_form(y1: float, mu: float) -> KForm:
    """upphi^mu on the surgery annulus (outside the resolution core):
    dy^{123} + mu^{-6}{dy^{145} + ... + dy^{356} + y1 dy^{147}}."""
    c = float(mu) ** -6
    coeffs = {(1, 2, 3): 1.0}
    for idx, s in _W_TAIL:
        coeffs[idx] = c * s
    coeffs[(1, 4, 7)] = c * float(y1)
    return KForm(DIM, 3, FLT, coeffs)


def w_outer_closed_form(y1: float, mu: float) -> np.ndarray:
    """The displayed closed form of g^mu on the annulus."""
    y1, m6 = float(y1), float(mu) ** -6
    fac = (1.0 - y1 ** 2 / 4.0) ** (-1.0 / 3.0)
    g = np.zeros((DIM, DIM))
    for i in range(3):
        g[i, i] = 1.0
    g[0, 2] = g[2, 0] = 0.5 * y1
    for i in range(3, 7):
        g[i, i] = m6
    g[3, 5] = g[5, 3] = 0.5 * y1 * m6
    g[4, 6] = g[6, 4] = 0.5 * y1 * m6
    return fac * g


def w_limit_metric(y1: float) -> np.ndarray:
    """g^infty on the annulus: the base block of the closed form."""
    g = w_outer_closed_form(y1, 1.0)
    g[3:, :] = 0.0
    g[:, 3:] = 0.0
    return g


def interior_limit_metric() -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])


def _chart_limit_metric(phi_hat: KForm) -> np.ndarray:
    """Large-mu limit of g^mu on a gluing chart.  In the adapted coframe
    (dy^1, dy^2, dy^3, mu^{-3} dy^4, ..., mu^{-3} dy^7) the form phi^mu
    becomes a mu-independent perturbation of the standard 3-form plus
    O(mu^{-3}) terms; the limit metric is the base block of the metric of
    that perturbation, extended by zero on the fiber."""
    coeffs = {}
    for idx, c in phi_hat.coeffs.items():
        fiber = sum(1 for i in idx if i >= 4)
        if fiber == 2:
            coeffs[idx] = float(c)
    coeffs[(1, 2, 3)] = 1.0
    g = is_g2_type(KForm(DIM, 3, FLT, coeffs)).metric_array()
    g[3:, :] = 0.0
    g[:, 3:] = 0.0
    return g


def ffkm_region_metrics(region: str, point, mu, epsilon: float = DEFAULT_EPSILON,
                        cutoff=DEFAULT_CUTOFF) -> MetricSample:
    """Evaluate g^mu from the actual forms of the resolved family, attach the
    matching closed-form limit metric g^infty, and cross-check any displayed
    closed form for g^mu itself."""
    m = float(mu)
    if region == "interior":
        g2 = is_g2_type(phi_check_mu(m).in_ring(FLT))
        g = g2.metric_array() / m ** 4
        closed = np.diag([1.0] * 3 + [m ** -6] * 4)
        if _op_norm(g - closed) > 1e-10:
            raise AssertionError("interior metric disagrees with its display")
        return MetricSample(region, tuple(point or ()), m, g,
                            limit=interior_limit_metric())
    if region == "w_outer":
        pt = dict(point)
        y1 = float(pt.get("y1", 0.0))
        g = is_g2_type(_w_outer_form(y1, m)).metric_array()
        closed = w_outer_closed_form(y1, m)
        if _op_norm(g - closed) > 1e-10 * max(1.0, _op_norm(closed)):
            raise AssertionError("annulus metric disagrees with its display")
        return MetricSample(region, tuple(sorted(pt.items())), m, g,
                            limit=w_limit_metric(y1))
    if region == "chart":
        pt = dict(point)
        res = glued_form_at(pt, m, epsilon, cutoff)
        g = res["g2"].metric_array() / m ** 4
        return MetricSample(region, tuple(sorted(pt.items())), m, g,
                            limit=_chart_limit_metric(res["phi"]))
    raise ValueError(f"unknown region {region!r}")


def region_gap_decay(region: str, point, mus, epsilon: float = DEFAULT_EPSILON) -> dict:
    """sup|g^mu - g^infty| over the mu grid and the fitted decay exponent."""
    gaps = [ffkm_region_metrics(region, point, mu, epsilon).gap() for mu in mus]
    xs = [math.log(float(mu)) for mu in mus]
    ys = [math.log(max(gp, 1e-300)) for gp in gaps]
    n = len(xs)
    xbar, ybar = sum(xs) / n, sum(ys) / n
    slope = (sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
             / sum((x - xbar) ** 2 for x in xs))
    return {"mus": list(mus), "gaps": gaps, "rate": slope}


# ----- global lower bound ------------------------------------------------------

def base_pullback() -> np.ndarray:
    """f*g_E: the pullback of the unit Euclidean metric on the base circle
    (the third coordinate in every region's coframe)."""
    g = np.zeros((DIM, DIM))
    g[2, 2] = 1.0
    return g


def lower_bound_global(mu, samples, upsilon: float, C: float,
                       Delta0: float) -> dict:
    """Check g^mu >= (1 - C De_0 / mu^3) ups^{4/3} f*g_E at every sample."""
    m = float(mu)
    pref = (1.0 - C * Delta0 / m ** 3) * upsilon ** (4.0 / 3.0)
    target = pref * base_pullback()
    worst, worst_sample = math.inf, None
    for s in samples:
        me = _min_eig(s.matrix - target)
        if me < worst:
            worst, worst_sample = me, (s.region, s.point)
    ok = worst >= -1e-10
    report = {"mu": m, "prefactor": pref, "min_eig_margin": worst,
              "worst_sample": worst_sample, "pass": ok}
    if not ok:
        raise AssertionError(f"lower bound fails at {worst_sample} "
                             f"(margin {worst})")
    return report


def resolution_equality_probe(profile, mu, epsilon: float = DEFAULT_EPSILON,
                              n: int = 60) -> dict:
    """On the resolution region the bound's tight direction is dy^3 at the
    equality radius of the fiber volume estimate: the coefficient nu(r) with
    g_zeta >= nu^{4/3} (dy^3)^{x2} attains its minimum ups there."""
    rf = ResolutionForms(mu, epsilon, profile=profile)
    ups = profile.upsilon
    r_eq = profile.r_frak
    radii = np.append(np.linspace(0.55 * r_eq, 1.45 * r_eq, n), r_eq)
    min_nu, bound_margin = math.inf, math.inf
    for r in radii:
        lam = r * r
        nu = math.sqrt(1.0 + profile.k(lam) / (2.0 * lam))
        min_nu = min(min_nu, nu)
        g = is_g2_type(rf.zeta_at({"y1": float(r)})).metric_array()
        bound_margin = min(bound_margin, _min_eig(
            g - ups ** (4.0 / 3.0) * base_pullback()))
    g_eq = is_g2_type(rf.zeta_at({"y1": float(r_eq)})).metric_array()
    return {"upsilon": ups, "min_nu": min_nu,
            "equality_gap": abs(g_eq[2, 2] - ups ** (4.0 / 3.0)),
            "bound_margin": bound_margin,
            "pass": (bound_margin >= -1e-10
                     and abs(min_nu - ups) <= 1e-9)}


# ----- limit quasi-Finsler structure -------------------------------------------

def _lift_norm(G: np.ndarray, u) -> float:
    """min |u'|_G over lifts u' with the base projection (first three
    coordinates) equal to u: a 4-variable constrained least-squares."""
    G = np.asarray(G, float)
    u = np.asarray(u, float)
    Gbb, Gbf, Gff = G[:3, :3], G[:3, 3:], G[3:, 3:]
    z, *_ = np.linalg.lstsq(Gff, -Gbf.T @ u, rcond=None)
    val = u @ Gbb @ u + 2.0 * u @ Gbf @ z + z @ Gff @ z
    return math.sqrt(max(val, 0.0))


def limit_quasi_finsler(base_tag: str, direction, upsilon: float,
                        y1_samples=(0.0,)) -> float:
    """Length assigned to a base tangent direction by the limit structure:
    the min over fiber strata of the g^infty-norm of the cheapest lift."""
    u = np.asarray(direction, float)
    if not u.any():
        raise ValueError("direction must be nonzero")
    if base_tag == "generic":
        strata = [interior_limit_metric()]
    elif base_tag == "singular":
        if u[0] != 0.0 or u[1] != 0.0:
            raise ValueError("singular strata are tangent to the circle "
                             "direction only")
        sing = np.zeros((DIM, DIM))
        sing[2, 2] = upsilon ** (4.0 / 3.0)
        strata = [w_limit_metric(y1) for y1 in y1_samples] + [sing]
    else:
        raise ValueError(f"unknown base stratum {base_tag!r}")
    return min(_lift_norm(G, u) for G in strata)


# ----- measured comparison constants -------------------------------------------

def measure_metric_comparison(n: int = 400, delta: float = 1e-4,
                              seed: int = 0) -> dict:
    """Measured constants (delta_1, De_0) of the pointwise comparison
    |g_phi - g_phi0| <= De_0 |phi - phi0| near the standard form: De_0 from
    the linearization at scale delta, delta_1 as the largest tested radius
    at which every sampled perturbation still yields a definite form."""
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n, 35))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    v0 = phi_to_vector(standard_phi().in_ring(FLT))
    gs, _ = metric_batch(v0[None, :] + delta * dirs)
    eye = np.eye(DIM)
    Delta0 = float(np.linalg.norm(gs - eye, axis=(1, 2)).max()) / delta
    delta1 = 0.0
    for d1 in (0.5, 0.25, 0.125, 0.0625):
        try:
            metric_batch(v0[None, :] + d1 * dirs)
            delta1 = d1
            break
        except Exception:
            continue
    return {"Delta0": Delta0, "delta1": delta1, "n": n, "delta": delta,
            "seed": seed}


def lc_vs_norm_holds(h, g, tol: float = 1e-10) -> bool:
    """h <= ||h||_g * g for a symmetric form h and an inner product g."""
    h = np.asarray(h, float)
    g = np.asarray(g, float)
    w, V = np.linalg.eigh(g)
    if w.min() <= 0:
        raise ValueError("g must be positive definite")
    S = V @ np.diag(w ** -0.5) @ V.T
    M = S @ h @ S
    norm = float(np.linalg.norm(M))
    return _min_eig(norm * np.eye(len(M)) - M) >= -tol * max(norm, 1.0)


# ----- fiber diameter decay -----------------------------------------------------

def _path_length(rf: ResolutionForms, points) -> float:
    total = 0.0
    pts = [np.asarray(p, float) for p in points]
    names = ("y1", "y2", "y3", "y4", "y5", "y6", "y7")
    for a, b in zip(pts, pts[1:]):
        mid = dict(zip(names, 0.5 * (a + b)))
        g = is_g2_type(rf.zeta_mu_at(mid)).metric_array()
        v = b - a
        total += math.sqrt(max(v @ g @ v, 0.0))
    return total


def _arc(p1, d2, n_seg):
    """Half great-circle from p1 to -p1 through the direction d2."""
    r = np.linalg.norm(p1)
    d1 = p1 / r
    pts = []
    for th in np.linspace(0.0, math.pi, n_seg + 1):
        pts.append(r * (math.cos(th) * d1 + math.sin(th) * d2))
    return pts


def fiber_diameter_probe(ks=(2, 4, 8), mus=(8, 16, 32),
                         epsilon: float = DEFAULT_EPSILON, profile=None,
                         n_seg: int = 16) -> dict:
    """Path-length estimates of the intrinsic fiber diameters in the
    shrinking surgery regions.  Working in resolution coordinates, the
    fiber over a circle point inside the k-th region is the product of the
    resolved ball of radius eps/2 (mu/k)^3 with a 2-torus, carrying the
    resolved 3-form; coordinate-frame diameters are rescaled by mu^{-3}.
    Fits the decay exponent in k at the largest mu."""
    emb = {(1,): 0, (2,): 1, (5,): 2, (6,): 3}
    table = {}
    for mu in mus:
        rf = ResolutionForms(mu, epsilon, profile=profile)
        for k in ks:
            # at mu close to k the rescaled torus factor (size ~ mu^-3, not
            # k^-3) would dominate the estimate, so keep mu >= 2k
            if mu < 2 * k:
                continue
            R = 0.5 * epsilon * (float(mu) / k) ** 3
            best = 0.0
            # antipodal pairs on the boundary sphere of the resolved ball,
            # joined by half great-circles (paths avoid the exceptional set)
            axes = [np.array([1.0, 0, 0, 0, 0, 0, 0]),
                    np.array([0, 1.0, 0, 0, 0, 0, 0]),
                    np.array([0, 0, 0, 0, 1.0, 0, 0])]
            for i, d1 in enumerate(axes):
                d2 = axes[(i + 1) % len(axes)]
                best = max(best, _path_length(rf, _arc(R * d1, d2, n_seg)))
            # torus direction: half-period displacement along y^4
            start = R * axes[0]
            stop = start + np.array([0, 0, 0, 0.5, 0, 0, 0])
            steps = [start + t * (stop - start)
                     for t in np.linspace(0.0, 1.0, 5)]
            best = max(best, _path_length(rf, steps))
            table[(k, float(mu))] = best / float(mu) ** 3
    mu_top = float(max(mus))
    ks_fit = [k for k in ks if (k, mu_top) in table]
    xs = [math.log(k) for k in ks_fit]
    ys = [math.log(table[(k, mu_top)]) for k in ks_fit]
    n = len(xs)
    xbar, ybar = sum(xs) / n, sum(ys) / n
    slope = (sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
             / sum((x - xbar) ** 2 for x in xs))
    monotone = all(table[(k1, float(mu))] >= table[(k2, float(mu))] - 1e-12
                   for mu in mus
                   for k1, k2 in zip(ks, ks[1:])
                   if (k1, float(mu)) in table and (k2, float(mu)) in table)
    const_spread = {}
    for k in ks:
        vals = [table[(k, float(mu))] * k ** 3 for mu in mus
                if (k, float(mu)) in table]
        if len(vals) > 1:
            const_spread[k] = max(vals) / min(vals)
    return {"table": table, "exponent": slope,
            "exponent_ok": slope <= -3.0 + 0.3,
            "monotone_in_k": monotone,
            "constant_spread": const_spread,
            "mu_uniform": all(v <= 2.0 for v in const_spread.values())}


# ----- exports ------------------------------------------------------------------

def decay_to_csv(probe: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "mu", "diameter"])
        for (k, mu), d in sorted(probe["table"].items()):
            w.writerow([f"{k:.17g}", f"{mu:.17g}", f"{d:.17g}"])


def report_to_json(report: dict, path) -> None:
    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.bool_):
            return bool(obj)
        return obj
    with open(path, "w") as fh:
        json.dump(clean(report), fh, indent=2)
