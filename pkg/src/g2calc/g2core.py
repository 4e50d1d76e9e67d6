'''Pointwise linear algebra of definite 3-forms in dimension 7.

The central map sends a 3-form phi to the bilinear form
``B(u, v) = (i_u phi) ^ (i_v phi) ^ phi`` (values are 7-form coefficients).
A 3-form is of definite type exactly when B normalises to a positive
definite metric; the normalisation is fixed by ``g_phi vol_phi = B/6``,
which in coordinates reads ``g = B / (36 det B)^{1/9}``.

Everything is done in exact rational arithmetic whenever the ninth and
square roots involved are rational; otherwise the metric degrades to floats
(flagged on the result).  A vectorised numpy path over precomputed
structure tables serves the sampling-heavy callers.
'''
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from .forms import KForm, merge_sign, sort_with_sign
from .rings import FLT, RAT, Poly, nth_root_fraction

DIM = 7
TRIPLES = list(combinations(range(1, 8), 3))
TRIPLE_POS = {t: i for i, t in enumerate(TRIPLES)}

#: the reference definite 3-form; its metric is the identity
STANDARD_PHI_TERMS = (
    (Fraction(1), (1, 2, 3)), (Fraction(1), (1, 4, 5)), (Fraction(1), (1, 6, 7)),
    (Fraction(1), (2, 4, 6)), (Fraction(-1), (2, 5, 7)),
    (Fraction(-1), (3, 4, 7)), (Fraction(-1), (3, 5, 6)),
)


def standard_phi(ring=RAT) -> KForm:
    return KForm(DIM, 3, RAT, {idx: c for c, idx in STANDARD_PHI_TERMS}).in_ring(ring)


class NotStableError(ValueError):
    """The 3-form is not of definite type."""


class OrientationMismatchError(ValueError):
    """Definite type, but for the opposite orientation of the frame."""


class DegenerateFiberError(ValueError):
    """Fiber data does not determine a positive normalisation constant."""


# --------------------------------------------------------------------------
# B(u, v) = (i_u phi)^(i_v phi)^phi
# --------------------------------------------------------------------------

def bilinear_from_3form(phi: KForm):
    """7x7 matrix of top-form coefficients of (i_u phi)^(i_v phi)^phi.

    Returns a list of lists of scalars in phi's ring.  Symmetry of the
    result is a theorem, not an assumption: all 49 entries are computed.
    """
    if phi.degree != 3 or phi.dim != DIM:
        raise ValueError("expected a 3-form in dimension 7")
    basis_vecs = [{i: 1} for i in range(1, DIM + 1)]
    contr = [phi.contract(v) for v in basis_vecs]
    B = []
    for i in range(DIM):
        row = []
        for j in range(DIM):
            top = contr[i].wedge(contr[j]).wedge(phi)
            row.append(top.top_coefficient())
        B.append(row)
    return B


# ---- vectorised path ------------------------------------------------------

def _build_bilinear_tables():
    """Sparse cubic tables: B_ij = sum_k s_k phi[A_k] phi[B_k] phi[C_k]."""
    tables = []
    for i in range(1, DIM + 1):
        for j in range(1, DIM + 1):
            entries = []
            for A in TRIPLES:
                if i not in A:
                    continue
                pa = A.index(i)
                restA = A[:pa] + A[pa + 1:]
                sa = -1 if pa % 2 else 1
                for Bidx in TRIPLES:
                    if j not in Bidx:
                        continue
                    pb = Bidx.index(j)
                    restB = Bidx[:pb] + Bidx[pb + 1:]
                    sb = -1 if pb % 2 else 1
                    m1, s1 = merge_sign(restA, restB)
                    if s1 == 0:
                        continue
                    C = tuple(sorted(set(range(1, 8)) - set(m1)))
                    m2, s2 = merge_sign(m1, C)
                    if s2 == 0:
                        continue
                    entries.append((TRIPLE_POS[A], TRIPLE_POS[Bidx],
                                    TRIPLE_POS[C], sa * sb * s1 * s2))
            tables.append((np.array([e[0] for e in entries]),
                           np.array([e[1] for e in entries]),
                           np.array([e[2] for e in entries]),
                           np.array([e[3] for e in entries], dtype=float)))
    return tables

_BILINEAR_TABLES = _build_bilinear_tables()


def phi_to_vector(phi: KForm) -> np.ndarray:
    v = np.zeros(len(TRIPLES))
    for idx, c in phi.coeffs.items():
        v[TRIPLE_POS[idx]] = float(c)
    return v


def vector_to_phi(v) -> KForm:
    return KForm(DIM, 3, FLT, {t: float(v[i]) for i, t in enumerate(TRIPLES)})


def bilinear_batch(phis: np.ndarray) -> np.ndarray:
    """B matrices for a batch of 3-forms given as (n, 35) coefficient rows."""
    phis = np.atleast_2d(np.asarray(phis, dtype=float))
    n = phis.shape[0]
    B = np.empty((n, DIM, DIM))
    k = 0
    for i in range(DIM):
        for j in range(DIM):
            ia, ib, ic, s = _BILINEAR_TABLES[k]
            B[:, i, j] = (phis[:, ia] * phis[:, ib] * phis[:, ic] * s).sum(axis=1)
            k += 1
    return B


def metric_batch(phis: np.ndarray):
    """(g, sqrt_det_g) arrays for a batch of coefficient rows.

    Raises NotStableError as soon as one row fails definiteness.
    """
    B = bilinear_batch(phis)
    detB = np.linalg.det(B)
    if np.any(detB <= 0):
        bad = int(np.argmax(detB <= 0))
        raise NotStableError(f"det B = {detB[bad]:.3e} <= 0 at sample {bad}")
    g = B / (36.0 * detB[:, None, None]) ** (1.0 / 9.0)
    eig = np.linalg.eigvalsh(g)
    if np.any(eig[:, 0] <= 0):
        bad = int(np.argmax(eig[:, 0] <= 0))
        raise NotStableError(f"normalised metric not positive definite at sample {bad}")
    return g, np.sqrt(np.linalg.det(g))


# --------------------------------------------------------------------------
# exact linear algebra helpers
# --------------------------------------------------------------------------

def det_exact(M):
    """Determinant by fraction-free-ish Gaussian elimination on Fractions."""
    n = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        inv = 1 / A[col][col]
        for r in range(col + 1, n):
            f = A[r][col] * inv
            if f:
                for c in range(col, n):
                    A[r][c] -= f * A[col][c]
    return det


def inverse_exact(M):
    n = len(M)
    A = [[Fraction(x) for x in M[r]] + [Fraction(1 if c == r else 0) for c in range(n)]
         for r in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


def is_positive_definite_exact(M) -> bool:
    # Sylvester: all leading principal minors positive
    n = len(M)
    for k in range(1, n + 1):
        if det_exact([row[:k] for row in M[:k]]) <= 0:
            return False
    return True


# --------------------------------------------------------------------------
# G2Data
# --------------------------------------------------------------------------

@dataclass
class G2Data:
    """Metric package of a definite 3-form on a framed 7-dim space."""
    phi: KForm
    metric: list                 # 7x7, Fractions or floats
    metric_inv: list
    sqrt_det: object             # Fraction or float; vol = sqrt_det * theta^{1..7}
    exact: bool
    orientation: int = 1

    @property
    def vol(self) -> KForm:
        ring = RAT if self.exact else FLT
        return KForm(DIM, DIM, ring, {tuple(range(1, 8)): self.sqrt_det})

    def metric_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.metric])


def is_g2_type(phi: KForm, tol: float = 1e-12) -> G2Data:
    """Normalise B(phi) into a metric; raise NotStableError /
    OrientationMismatchError when phi is not definite for the given frame.

    Exact rational output whenever 36 det B is a rational ninth power and
    det g a rational square; float (exact=False) otherwise.
    """
    if isinstance(phi.ring, tuple):
        raise TypeError("evaluate polynomial forms at a point first")
    B = bilinear_from_3form(phi)
    if phi.ring == RAT:
        detB = det_exact(B)
        if detB == 0:
            raise NotStableError("det B = 0")
        if detB < 0:
            _diagnose_negative(phi, float(detB))
        root = nth_root_fraction(36 * detB, 9)
        if root is not None:
            g = [[x / root for x in row] for row in B]
            if not is_positive_definite_exact(g):
                raise NotStableError("normalised metric not positive definite")
            detg = det_exact(g)
            sq = nth_root_fraction(detg, 2)
            if sq is not None:
                return G2Data(phi, g, inverse_exact(g), sq, exact=True)
            return G2Data(phi,
                          [[float(x) for x in row] for row in g],
                          np.linalg.inv(np.array(g, dtype=float)).tolist(),
                          float(detg) ** 0.5, exact=False)
        Bf = np.array([[float(x) for x in row] for row in B])
        detBf = float(detB)
    else:
        Bf = np.array([[float(x) for x in row] for row in B])
        detBf = float(np.linalg.det(Bf))
        if detBf == 0.0:
            raise NotStableError("det B vanishes to working precision")
        if detBf < 0:
            _diagnose_negative(phi, detBf)
    g = Bf / (36.0 * detBf) ** (1.0 / 9.0)
    eig = np.linalg.eigvalsh(g)
    if eig[0] <= 0:
        raise NotStableError(f"normalised metric has eigenvalue {eig[0]:.3e} <= 0")
    return G2Data(vector_to_phi(phi_to_vector(phi)) if phi.ring == RAT else phi,
                  g.tolist(), np.linalg.inv(g).tolist(),
                  float(np.sqrt(np.linalg.det(g))), exact=False)


def _diagnose_negative(phi: KForm, detBf: float):
    # det B < 0: definite for the reversed frame, or genuinely unstable?
    Bf = np.array([[float(x) for x in row]
                   for row in bilinear_from_3form(phi.in_ring(FLT))])
    g = -Bf / (-36.0 * float(np.linalg.det(Bf))) ** (1.0 / 9.0)
    if np.linalg.eigvalsh(g)[0] > 0:
        raise OrientationMismatchError(
            "3-form is definite for the opposite orientation of this frame")
    raise NotStableError(f"det B = {detBf:.3e} < 0 and no orientation flip helps")


# --------------------------------------------------------------------------
# Hodge star and norms
# --------------------------------------------------------------------------

def _gram_entry(ginv, I, J):
    k = len(I)
    if k == 0:
        return ginv[0][0] * 0 + 1 if isinstance(ginv[0][0], Fraction) else 1.0
    M = [[ginv[a - 1][b - 1] for b in J] for a in I]
    if isinstance(M[0][0], Fraction):
        return det_exact(M)
    return float(np.linalg.det(np.array(M, dtype=float))) if k > 1 else M[0][0]


def inner_product(data: G2Data, a: KForm, b: KForm):
    """<a, b>_g as a scalar (Fraction when everything is exact)."""
    if a.degree != b.degree:
        raise ValueError("inner product needs equal degrees")
    exact = data.exact and a.ring == RAT and b.ring == RAT
    ginv = data.metric_inv if exact else [[float(x) for x in row] for row in data.metric_inv]
    total = Fraction(0) if exact else 0.0
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            gIJ = _gram_entry(ginv, I, J)
            if exact:
                total += Fraction(ca) * Fraction(cb) * gIJ
            else:
                total += float(ca) * float(cb) * float(gIJ)
    return total


def norm(data: G2Data, a: KForm) -> float:
    """|a|_g = sqrt(<a, a>)."""
    return float(inner_product(data, a, a)) ** 0.5


def norm_sq(data: G2Data, a: KForm):
    return inner_product(data, a, a)


def hodge_star(data: G2Data, a: KForm) -> KForm:
    """Hodge star for the metric of `data`, defined by a ^ *b = <a,b> vol."""
    k = a.degree
    exact = data.exact and a.ring == RAT
    ginv = data.metric_inv if exact else [[float(x) for x in row] for row in data.metric_inv]
    sq = data.sqrt_det if exact else float(data.sqrt_det)
    ring = RAT if exact else FLT
    out = {}
    for I in combinations(range(1, 8), k):
        s = Fraction(0) if exact else 0.0
        for J, c in a.coeffs.items():
            gIJ = _gram_entry(ginv, I, J)
            s = s + (Fraction(c) if exact else float(c)) * gIJ
        if s == 0:
            continue
        comp = tuple(sorted(set(range(1, 8)) - set(I)))
        _, sign = merge_sign(I, comp)
        val = s * sq * sign
        if comp in out:
            out[comp] = out[comp] + val
        else:
            out[comp] = val
    return KForm(DIM, DIM - k, ring, out)


# --------------------------------------------------------------------------
# SU(2)-structure assembly on a 4-dim fiber inside the 7-dim frame
# --------------------------------------------------------------------------

@dataclass
class SU2FiberData:
    """Fiber data (omega, Omega) on axes `fiber_axes`, with the
    normalisation nu fixed by 2 omega^2 = nu^2 Omega ^ conj(Omega)."""
    omega: KForm
    omega_re: KForm      # Re Omega
    omega_im: KForm      # Im Omega
    fiber_axes: tuple
    nu: object = field(init=False)

    def __post_init__(self):
        conj_wedge = self.omega_re.wedge(self.omega_re) + self.omega_im.wedge(self.omega_im)
        two_om2 = self.omega.wedge(self.omega) + self.omega.wedge(self.omega)
        ratio = None
        for idx, c in conj_wedge.coeffs.items():
            if c == 0:
                continue
            top = two_om2.coeffs.get(idx)
            if top is None:
                raise DegenerateFiberError("2 omega^2 not proportional to Omega^conj(Omega)")
            r = Fraction(top) / Fraction(c) if self.omega.ring == RAT else float(top) / float(c)
            if ratio is None:
                ratio = r
            elif ratio != r:
                raise DegenerateFiberError("2 omega^2 not proportional to Omega^conj(Omega)")
        if ratio is None or ratio <= 0:
            raise DegenerateFiberError("normalisation nu^2 must be positive")
        sq = nth_root_fraction(ratio, 2) if isinstance(ratio, Fraction) else None
        self.nu = sq if sq is not None else float(ratio) ** 0.5


def su2_assemble(g1: KForm, g2: KForm, g3: KForm, fiber: SU2FiberData) -> KForm:
    """phi = g1^g2^g3 + g1^omega - g2^Re(Omega) + g3^Im(Omega)."""
    return (g1.wedge(g2).wedge(g3)
            + g1.wedge(fiber.omega)
            - g2.wedge(fiber.omega_re)
            + g3.wedge(fiber.omega_im))
