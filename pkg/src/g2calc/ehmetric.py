'''Eguchi-Hanson interpolation on C^2/{+-1} minus the origin.

The Kaehler ansatz om = a'(lam) om_hat + (1/4) a''(lam) d(lam) ^ d^c(lam),
lam = r^2, is Ricci-flat exactly when d/dlam [lam^2 a'^2] = 2 lam; integrating
gives the Eguchi-Hanson potential slope a'_t = sqrt(1 + t^4/lam^2).

To glue this into a compactly supported modification of the flat form, the
slope is deformed to

    al'_t(lam) = sqrt(1 + t^4/lam^2 + h_t(lam)/lam^2),

where h_t(lam) = int_0^lam k_t and the bump k_t satisfies, with q = t^2 R^2:
k_t == 0 on [0, q/4] and near q; int_0^q k_t = -t^4; k_t(lam) >= -c lam with
equality attained at some radius fr_t in (tR/2, tR).  Then the interpolated
form om_check_t agrees with the Eguchi-Hanson form for r <= tR/2, with the
flat form om_hat for r >= tR, and its volume ratio om_check^2 / vol_0 =
2 + k_t(r^2)/r^2 never drops below 2 ups^2, ups = sqrt(1 - c/2).

Construction of k_t: a mollified plateau, k_t(lam) = -c lam B(lam/q) with
B = chi_[p_lo, p_hi] * psi_rho (indicator convolved with a C-infinity bump).
Mollification preserves the first moment, so int_0^q k_t =
-c q^2 (p_hi^2 - p_lo^2)/2 exactly and p_hi is solved in closed form; B == 1
on the plateau [p_lo + rho, p_hi - rho], which pins the equality radius.  All
shape parameters depend only on (c, R), giving exact scale equivariance
k_{s t}(s^2 lam) = s^2 k_t(lam).
'''
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np


class Infeasible(ValueError):
    """R below the feasibility threshold R0(c) = (32/(15c))^{1/4}."""


class ConstructionFailed(RuntimeError):
    """The smoothed bump could not satisfy all profile requirements."""


def feasibility_threshold(c: float) -> float:
    """R0(c): the mass budget 15 c R^4 / 32 > 1 needs R > R0(c)."""
    if not 0.0 < c < 2.0:
        raise ValueError("c must lie in (0, 2)")
    return (32.0 / (15.0 * c)) ** 0.25


# ----- mollifier kernel ------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _gl(f, a, b) -> float:
    """Gauss-Legendre integral of a smooth vectorized integrand; the kernel
    is flat to all orders at its endpoints, so 96 nodes reach roundoff."""
    if b <= a:
        return 0.0
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    return float(half * np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))


_BUMP_MASS = _gl(_bump, -1.0, 1.0)


def _psi(x):
    """Kernel CDF on [-1, 1], vectorized."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.float64(_psi(x[None])[0])
    out = np.empty_like(x)
    lo, hi = x <= -1.0, x >= 1.0
    out[lo], out[hi] = 0.0, 1.0
    mid = ~(lo | hi)
    if mid.any():
        xm = x[mid]
        half = 0.5 * (xm + 1.0)
        centers = 0.5 * (xm - 1.0)
        vals = _bump(centers[:, None] + half[:, None] * _GL_NODES[None, :])
        out[mid] = half * (vals @ _GL_WEIGHTS) / _BUMP_MASS
    return out


@dataclass
class EHProfile:
    """Interpolation profile data; all lengths in lam = r^2 units."""
    t: float
    R: float
    c: float
    q: float                     # t^2 R^2, outer edge of the bump's domain
    p_lo: float                  # plateau parameters, in units of q
    p_hi: float
    rho: float                   # mollifier half-width, in units of q
    upsilon: float = field(init=False)
    r_frak: float = field(init=False)

    def __post_init__(self):
        self.upsilon = math.sqrt(1.0 - self.c / 2.0)
        # equality radius: plateau midpoint
        self.r_frak = math.sqrt(0.5 * (self.p_lo + self.p_hi) * self.q)
        # cumulative tables of v B(v) over the two mollifier shoulders,
        # endpoint-pinned to a Simpson total so the overall first moment
        # is the one the mass correction in build_profile targeted
    def _shoulder_moment(self, p: float, u: float) -> float:
        """int v B(v) dv over one mollifier shoulder [p - rho, min(u, p + rho)]."""
        return _gl(lambda v: v * self.bump(v), p - self.rho,
                   min(u, p + self.rho))

    # -- profile functions ----------------------------------------------
    def bump(self, u):
        """B(u) = (indicator * mollifier)(u), 0 <= B <= 1, == 1 on plateau."""
        return (_psi((np.asarray(u, dtype=float) - self.p_lo) / self.rho)
                - _psi((np.asarray(u, dtype=float) - self.p_hi) / self.rho))

    def k(self, lam: float) -> float:
        if lam <= 0:
            return 0.0
        return -self.c * lam * float(self.bump(lam / self.q))

    def _moment(self, u: float) -> float:
        """int_0^u v B(v) dv: shoulder tables plus the analytic plateau."""
        if u <= self.p_lo - self.rho:
            return 0.0
        total = self._shoulder_moment(self.p_lo, u)
        if u > self.p_lo + self.rho:
            total += 0.5 * (min(u, self.p_hi - self.rho) ** 2
                            - (self.p_lo + self.rho) ** 2)
        if u > self.p_hi - self.rho:
            total += self._shoulder_moment(self.p_hi, u)
        return total

    def h(self, lam: float) -> float:
        """h_t(lam) = int_0^lam k_t, in [-t^4, 0]."""
        if lam <= 0:
            return 0.0
        return -self.c * self.q ** 2 * self._moment(lam / self.q)

    def aprime(self, lam: float) -> float:
        """Interpolated slope al'_t(lam)."""
        if lam <= 0:
            raise ValueError("lam must be positive")
        val = 1.0 + (self.t ** 4 + self.h(lam)) / lam ** 2
        if val <= 0:
            raise ConstructionFailed(f"al'^2 = {val} <= 0 at lam = {lam}")
        return math.sqrt(val)

    def asecond(self, lam: float) -> float:
        if lam <= 0:
            raise ValueError("lam must be positive")
        num = self.k(lam) / lam ** 2 - 2.0 * (self.t ** 4 + self.h(lam)) / lam ** 3
        return 0.5 * num / self.aprime(lam)

    # -- matrix evaluation ------------------------------------------------
    def omega_matrix_at(self, point) -> list:
        """om_check_t at (x1, y1, x2, y2) as an antisymmetric 4x4 matrix."""
        return omega_at(point, profile=self)

    def export_csv(self, path, n: int = 400) -> None:
        lams = np.linspace(self.q / 8.0, self.q * 1.05, n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "k", "h", "aprime"])
            for lam in lams:
                w.writerow([f"{v:.17g}" for v in
                            (lam, self.k(lam), self.h(lam), self.aprime(lam))])


def _adaptive_simpson(f, a, b, tol, fa=None, fb=None, fm=None, depth=30):
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    m = 0.5 * (a + b)
    fm = f(m) if fm is None else fm
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_adaptive_simpson(f, a, m, tol / 2.0, fa, fm, flm, depth - 1)
            + _adaptive_simpson(f, m, b, tol / 2.0, fm, fb, frm, depth - 1))


def build_profile(t: float, R: float, c: float = 1.0) -> EHProfile:
    """Construct the smoothed bump k_t for parameters (t, R, c)."""
    if t <= 0:
        raise ValueError("t must be positive")
    R0 = feasibility_threshold(c)
    if R <= R0:
        raise Infeasible(f"R = {R} <= R0(c) = {R0}")
    q = t ** 2 * R ** 2
    # needed first moment of B, in q-units: int u B(u) du = t^4 / (c q^2)
    moment = 1.0 / (c * R ** 4)
    p_lo = 0.3
    p_hi_sq = p_lo ** 2 + 2.0 * moment
    p_hi = math.sqrt(p_hi_sq)
    if p_hi >= 0.97:
        raise ConstructionFailed(
            f"bump upper edge {p_hi} leaves no room below q "
            f"(R = {R} too close to the threshold {R0})")
    rho = min(1.0 / 40.0, 0.25 * (p_hi - p_lo), 0.5 * (1.0 - p_hi))
    if rho <= 0:
        raise ConstructionFailed("degenerate plateau")
    # exact mass correction: mollification preserves the first moment
    # analytically, but the evaluated (tabulated) bump carries quadrature
    # error; nudge p_hi so the moment of the function as evaluated hits the
    # target (d moment / d p_hi = p_hi, the kernel mean at the right edge)
    profile = None
    for _ in range(4):
        profile = EHProfile(t=float(t), R=float(R), c=float(c), q=q,
                            p_lo=p_lo, p_hi=p_hi, rho=rho)
        gap = moment - profile._moment(1.0)
        if abs(gap) <= 1e-16 * moment:
            break
        p_hi += gap / p_hi
    if abs(moment - profile._moment(1.0)) > 1e-12 * moment:
        raise ConstructionFailed("mass correction did not converge")
    return profile


def default_t_for_epsilon(epsilon: float, R: float) -> float:
    """Default linkage t = epsilon / (2R): the interpolation annulus
    (tR/2, tR) then sits inside (epsilon/4, epsilon/2)."""
    if epsilon <= 0 or R <= 0:
        raise ValueError("epsilon and R must be positive")
    return epsilon / (2.0 * R)


# ----- pointwise matrix evaluation -------------------------------------------

_J0 = ((0.0, 1.0, 0.0, 0.0),
       (-1.0, 0.0, 0.0, 0.0),
       (0.0, 0.0, 0.0, 1.0),
       (0.0, 0.0, -1.0, 0.0))


def eh_aprime(t: float, lam: float) -> float:
    """Pure Eguchi-Hanson slope sqrt(1 + t^4/lam^2)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return math.sqrt(1.0 + float(t) ** 4 / float(lam) ** 2)


def _eh_asecond(t: float, lam: float) -> float:
    return -(float(t) ** 4 / float(lam) ** 3) / eh_aprime(t, lam)


def _matrix(point, ap: float, app: float) -> list:
    x1, y1, x2, y2 = (float(v) for v in point)
    u = (2.0 * x1, 2.0 * y1, 2.0 * x2, 2.0 * y2)       # d(lam)
    v = (-2.0 * y1, 2.0 * x1, -2.0 * y2, 2.0 * x2)     # d^c(lam)
    return [[ap * _J0[i][j] + 0.25 * app * (u[i] * v[j] - v[i] * u[j])
             for j in range(4)] for i in range(4)]


def omega_at(point, profile: EHProfile | None = None, t: float | None = None):
    """Evaluate om_tilde_t (pure t) or om_check_t (profile) at a point of
    C^2/{+-1} minus the origin, coordinates (x1, y1, x2, y2)."""
    lam = sum(float(v) ** 2 for v in point)
    if profile is None:
        if t is None:
            raise ValueError("need a profile or a pure-EH parameter t")
        if t == 0:
            return [list(row) for row in _J0]
        if lam <= 0:
            raise ValueError("the origin is excluded")
        return _matrix(point, eh_aprime(t, lam), _eh_asecond(t, lam))
    if lam <= 0:
        raise ValueError("the origin is excluded")
    q = profile.q
    if lam >= q:                      # h == -t^4: exactly flat
        return [list(row) for row in _J0]
    if lam <= 0.25 * q:               # h == 0: exactly Eguchi-Hanson
        return _matrix(point, eh_aprime(profile.t, lam),
                       _eh_asecond(profile.t, lam))
    return _matrix(point, profile.aprime(lam), profile.asecond(lam))


def _pfaffian4(M) -> float:
    return (M[0][1] * M[2][3] - M[0][2] * M[1][3] + M[0][3] * M[1][2])


def _two_form_norm(M) -> float:
    """|eta|_{om_hat} with the normalization |om_hat| = sqrt(2)."""
    return math.sqrt(sum(M[i][j] ** 2 for i in range(4) for j in range(i + 1, 4)))


def _directions(n_ang: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_ang, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs


# ----- certification ---------------------------------------------------------

def ricci_residual(t: float, lams) -> float:
    """Finite-difference residual of d/dlam[lam^2 a'^2] - 2 lam = 0."""
    worst = 0.0
    for lam in lams:
        # central differences are exact for the quadratic lam^2 a'^2, so a
        # generous step only suppresses rounding in the difference quotient
        dl = 1e-4 * lam
        f = lambda x: x ** 2 * eh_aprime(t, x) ** 2
        deriv = (f(lam + dl) - f(lam - dl)) / (2.0 * dl)
        worst = max(worst, abs(deriv - 2.0 * lam))
    return worst


def positivity_and_volume_certificate(profile: EHProfile, n_r: int = 1000,
                                      n_ang: int = 20, delta: float = 0.05,
                                      seed: int = 0) -> dict:
    """Grid certificate over r in [tR/2 (1-delta), tR (1+delta)]:
    positivity margin |om_hat - om_check|_{om_hat} < 1, volume ratio
    om_check^2 / vol_0 >= 2 ups^2, and the closed-form ratio cross-check."""
    t, R = profile.t, profile.R
    radii = np.linspace(0.5 * t * R * (1.0 - delta), t * R * (1.0 + delta), n_r)
    dirs = _directions(n_ang, seed)
    min_margin = math.inf        # 1 - |om_hat - om_check|
    min_ratio = math.inf
    worst_r = None
    max_formula_gap = 0.0
    for r in radii:
        lam = r * r
        ratio_formula = 2.0 + profile.k(lam) / lam
        for d in dirs:
            pt = r * d
            M = omega_at(pt, profile=profile)
            D = [[_J0[i][j] - M[i][j] for j in range(4)] for i in range(4)]
            margin = 1.0 - _two_form_norm(D)
            ratio = 2.0 * _pfaffian4(M)
            max_formula_gap = max(max_formula_gap, abs(ratio - ratio_formula))
            if margin < min_margin:
                min_margin, worst_r = margin, float(r)
            min_ratio = min(min_ratio, ratio)
    floor = 2.0 * profile.upsilon ** 2
    report = {"t": t, "R": R, "c": profile.c, "upsilon": profile.upsilon,
              "upsilon_measured": math.sqrt(max(min_ratio, 0.0) / 2.0),
              "r_frak": profile.r_frak, "min_margin": min_margin,
              "min_ratio": min_ratio, "volume_floor": floor,
              "pfaffian_vs_formula": max_formula_gap,
              "positivity_ok": min_margin > 0.0,
              "volume_ok": min_ratio >= floor - 1e-9,
              "worst_r": worst_r}
    if not report["positivity_ok"]:
        raise ConstructionFailed(
            f"positivity margin {min_margin} violated at r = {worst_r}")
    return report


def certificate_to_json(report: dict, path) -> None:
    keep = {k: report[k] for k in
            ("t", "R", "c", "upsilon", "r_frak", "min_margin", "min_ratio")}
    with open(path, "w") as fh:
        json.dump(keep, fh, indent=2)


def closedness_residual(profile: EHProfile, n: int = 6, step: float = 3e-6) -> float:
    """Finite-difference d(om_check) on interior points of the annulus;
    om_check is d of a potential, so this should vanish to FD accuracy."""
    t, R = profile.t, profile.R
    rng = np.random.default_rng(1)
    hstep = step * t * R
    worst = 0.0
    for _ in range(n):
        d = rng.normal(size=4)
        d /= np.linalg.norm(d)
        pt = np.array(d) * rng.uniform(0.55, 0.95) * t * R
        def M_at(p):
            return omega_at(p, profile=profile)
        grads = []
        for a in range(4):
            e = np.zeros(4)
            e[a] = hstep
            Mp, Mm = M_at(pt + e), M_at(pt - e)
            grads.append([[(Mp[i][j] - Mm[i][j]) / (2.0 * hstep)
                           for j in range(4)] for i in range(4)])
        for i in range(4):
            for j in range(i + 1, 4):
                for k in range(j + 1, 4):
                    val = grads[i][j][k] - grads[j][i][k] + grads[k][i][j]
                    worst = max(worst, abs(val))
    return worst


def measure_dlam_constant(n_r: int = 50, n_ang: int = 20, seed: int = 0) -> float:
    """Smallest C with |d(r^2) ^ d^c(r^2)|_{om_hat} <= 4 C r^2, by grid
    maximization of the ratio (scale-invariant, so radii are a formality)."""
    dirs = _directions(n_ang, seed)
    best = 0.0
    for r in np.linspace(0.1, 2.0, n_r):
        for d in dirs:
            M = _matrix(r * d, 0.0, 1.0)   # (1/4) dlam ^ dclam scaled by 4
            best = max(best, 4.0 * _two_form_norm(M) / (4.0 * r * r))
    return best


def positivity_budget(R: float, C: float | None = None) -> dict:
    """The proof's sufficient condition 4 sqrt(2)/R^2 + 16 C / R^4 + C c / 2 < 1
    with c = 1/C; reports the measured C by default."""
    C = measure_dlam_constant() if C is None else float(C)
    c = 1.0 / C
    total = 4.0 * math.sqrt(2.0) / R ** 2 + 16.0 * C / R ** 4 + C * c / 2.0
    return {"R": R, "C": C, "c": c, "budget": total, "ok": total < 1.0}
