'''Exterior algebra on a framed manifold of dimension <= 7.

A :class:`KForm` is a finite sum ``sum_I c_I theta^I`` where I runs over
strictly increasing multi-indices from the axis set {1..dim} and the
coefficients c_I live in one of the rings of :mod:`g2calc.rings`
(rationals, floats, or polynomials in named chart coordinates).

Operations: wedge, contraction with a vector, chart exterior derivative
(polynomial ring only) and pullback along a polynomial map.
'''
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .rings import (FLT, RAT, MixedRingError, Poly, coerce_to, ring_of,
                    ring_zero, scalar_is_zero)

MultiIndex = tuple  # strictly increasing tuple of axis labels (1-based ints)


def check_multi_index(idx, dim) -> MultiIndex:
    idx = tuple(idx)
    if any(not isinstance(i, int) for i in idx):
        raise ValueError(f"multi-index entries must be ints: {idx}")
    if any(i < 1 or i > dim for i in idx):
        raise ValueError(f"multi-index {idx} out of range 1..{dim}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ValueError(f"multi-index {idx} must be strictly increasing")
    return idx


def sort_with_sign(idx):
    """Sort a repeated-free index tuple; return (sorted tuple, sign) or
    (None, 0) when an axis repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return None, 0
    sign = 1
    # insertion sort, counting transpositions; tuples are tiny
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return tuple(idx), sign


def merge_sign(a: MultiIndex, b: MultiIndex):
    """Merge two increasing multi-indices; return (merged, sign) or (None, 0)."""
    if set(a) & set(b):
        return None, 0
    merged, sign = sort_with_sign(a + b)
    return merged, sign


class KForm:
    """Sparse k-form with coefficients in a single scalar ring."""

    __slots__ = ("dim", "degree", "ring", "coeffs")

    def __init__(self, dim: int, degree: int, ring, coeffs: Mapping[MultiIndex, object]):
        if not (0 <= degree <= dim <= 7):
            raise ValueError("need 0 <= degree <= dim <= 7")
        self.dim = dim
        self.degree = degree
        self.ring = ring
        clean = {}
        for idx, c in coeffs.items():
            idx = check_multi_index(idx, dim)
            if len(idx) != degree:
                raise ValueError(f"index {idx} has wrong length for a {degree}-form")
            c = coerce_to(ring, c)
            if not scalar_is_zero(c):
                clean[idx] = c
        self.coeffs = clean

    # ----- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, dim, degree, ring=RAT):
        return cls(dim, degree, ring, {})

    @classmethod
    def basis(cls, dim, idx, ring=RAT, coeff=1):
        idx = tuple(idx)
        return cls(dim, len(idx), ring, {idx: coeff})

    @classmethod
    def from_terms(cls, dim, degree, terms, ring=RAT):
        """Build from possibly unsorted index tuples; signs handled here."""
        coeffs = {}
        r0 = ring
        for idx, c in terms:
            sidx, sign = sort_with_sign(tuple(idx))
            if sign == 0:
                continue
            c = coerce_to(r0, c) if sign == 1 else coerce_to(r0, c) * (-1)
            if sidx in coeffs:
                coeffs[sidx] = coeffs[sidx] + c
            else:
                coeffs[sidx] = c
        return cls(dim, degree, r0, coeffs)

    # ----- ring handling ----------------------------------------------------
    def _match(self, other: "KForm"):
        if self.dim != other.dim:
            raise ValueError("forms live on spaces of different dimension")
        if self.ring != other.ring:
            # rationals upgrade silently into floats or polynomials; anything
            # else (float meets poly, polys over different charts) is an error
            if self.ring == RAT:
                return other.ring
            if other.ring == RAT:
                return self.ring
            raise MixedRingError(f"cannot combine rings {self.ring} and {other.ring}")
        return self.ring

    def in_ring(self, ring) -> "KForm":
        if ring == self.ring:
            return self
        return KForm(self.dim, self.degree, ring,
                     {i: coerce_to(ring, c) for i, c in self.coeffs.items()})

    # ----- vector space ops ---------------------------------------------
    def __add__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        ring = self._match(other)
        a, b = self.in_ring(ring), other.in_ring(ring)
        coeffs = dict(a.coeffs)
        for i, c in b.coeffs.items():
            coeffs[i] = coeffs.get(i, ring_zero(ring)) + c
        return KForm(self.dim, self.degree, ring, coeffs)

    def __neg__(self):
        return KForm(self.dim, self.degree, self.ring,
                     {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        return self + (-other)

    def scale(self, s) -> "KForm":
        tag = ring_of(s)
        ring = self.ring
        if tag != ring:
            if tag == RAT:
                s = coerce_to(ring, s)
            elif ring == RAT:
                ring = tag
            else:
                raise MixedRingError(f"cannot scale {ring} form by {tag} scalar")
        return KForm(self.dim, self.degree, ring,
                     {i: coerce_to(ring, c) * s for i, c in self.in_ring(ring).coeffs.items()})

    def __rmul__(self, s):
        return self.scale(s)

    def __eq__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        return (self.dim == other.dim and self.degree == other.degree
                and self.ring == other.ring and self.coeffs == other.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    # ----- multiplicative structure ----------------------------------------
    def wedge(self, other: "KForm") -> "KForm":
        ring = self._match(other)
        a, b = self.in_ring(ring), other.in_ring(ring)
        deg = self.degree + other.degree
        if deg > self.dim:
            return KForm.zero(self.dim, min(deg, self.dim), ring)
        out = {}
        for i1, c1 in a.coeffs.items():
            for i2, c2 in b.coeffs.items():
                merged, sign = merge_sign(i1, i2)
                if sign == 0:
                    continue
                c = c1 * c2 if sign == 1 else -(c1 * c2)
                if merged in out:
                    out[merged] = out[merged] + c
                else:
                    out[merged] = c
        return KForm(self.dim, deg, ring, out)

    def __xor__(self, other):
        return self.wedge(other)

    def contract(self, vector) -> "KForm":
        """Interior product with a vector given as components over axes 1..dim
        (sequence, or mapping axis->component)."""
        if self.degree == 0:
            raise ValueError("cannot contract a 0-form")
        if isinstance(vector, Mapping):
            comp = {int(k): v for k, v in vector.items()}
        else:
            comp = {i + 1: v for i, v in enumerate(vector)}
        out = {}
        ring = self.ring
        for idx, c in self.coeffs.items():
            for pos, axis in enumerate(idx):
                v = comp.get(axis, 0)
                if isinstance(v, (int, Fraction)) and v == 0:
                    continue
                rest = idx[:pos] + idx[pos + 1:]
                term = coerce_to(ring, v) * c if ring_of(v) in (RAT, ring) else None
                if term is None:
                    raise MixedRingError("vector components live in a different ring")
                if pos % 2 == 1:
                    term = -term
                if rest in out:
                    out[rest] = out[rest] + term
                else:
                    out[rest] = term
        return KForm(self.dim, self.degree - 1, ring, out)

    # ----- calculus in a chart ------------------------------------------
    def d_chart(self) -> "KForm":
        """Exterior derivative for polynomial coefficients.

        Axis i corresponds to coordinate ``vars[i-1]`` of the polynomial ring.
        """
        if not (isinstance(self.ring, tuple) and self.ring[0] == "poly"):
            raise TypeError("d_chart needs polynomial coefficients")
        coords = self.ring[1]
        out = KForm.zero(self.dim, min(self.degree + 1, self.dim), self.ring)
        if self.degree + 1 > self.dim:
            return out
        terms = {}
        for idx, c in self.coeffs.items():
            for axis in range(1, self.dim + 1):
                dc = c.diff(coords[axis - 1])
                if not dc:
                    continue
                merged, sign = merge_sign((axis,), idx)
                if sign == 0:
                    continue
                val = dc if sign == 1 else -dc
                if merged in terms:
                    terms[merged] = terms[merged] + val
                else:
                    terms[merged] = val
        return KForm(self.dim, self.degree + 1, self.ring, terms)

    def eval_at(self, point: Mapping[str, float]) -> "KForm":
        """Evaluate polynomial coefficients at a chart point -> float form."""
        if not (isinstance(self.ring, tuple) and self.ring[0] == "poly"):
            return self.in_ring(FLT)
        return KForm(self.dim, self.degree, FLT,
                     {i: c.eval(point) for i, c in self.coeffs.items()})

    def eval_exact(self, point: Mapping[str, Fraction]) -> "KForm":
        if not (isinstance(self.ring, tuple) and self.ring[0] == "poly"):
            return self.in_ring(RAT)
        return KForm(self.dim, self.degree, RAT,
                     {i: c.eval_exact(point) for i, c in self.coeffs.items()})

    # ----- misc ----------------------------------------------------------
    def map_coeffs(self, fn, ring=None) -> "KForm":
        return KForm(self.dim, self.degree, ring if ring is not None else self.ring,
                     {i: fn(c) for i, c in self.coeffs.items()})

    def top_coefficient(self):
        """Coefficient of theta^{1..dim}; zero scalar if absent."""
        full = tuple(range(1, self.dim + 1))
        if self.degree != self.dim:
            raise ValueError("not a top-degree form")
        return self.coeffs.get(full, ring_zero(self.ring))

    def __str__(self):
        if not self.coeffs:
            return "0"
        bits = []
        for idx in sorted(self.coeffs):
            c = self.coeffs[idx]
            label = "e" + "".join(str(i) for i in idx) if idx else "1"
            bits.append(f"({c})*{label}")
        return " + ".join(bits)

    __repr__ = __str__


class PolynomialMap:
    """Polynomial map between chart coordinate systems.

    ``outputs[i]`` is the i-th target coordinate expressed as a Poly in the
    source coordinates; target axis i corresponds to target_vars[i-1].
    """

    def __init__(self, source_vars, target_vars, components: Mapping[str, Poly]):
        self.source_vars = tuple(source_vars)
        self.target_vars = tuple(target_vars)
        self.components = {}
        for v in self.target_vars:
            p = components[v]
            if p.vars != self.source_vars:
                raise MixedRingError(f"component {v} not a polynomial in the source chart")
            self.components[v] = p

    def pullback(self, form: KForm) -> KForm:
        """Pull a polynomial form on the target chart back to the source chart."""
        if not (isinstance(form.ring, tuple) and form.ring[0] == "poly"
                and form.ring[1] == self.target_vars):
            if form.ring == RAT:
                form = form.in_ring(("poly", self.target_vars))
            else:
                raise MixedRingError("form is not written in the target chart")
        src_ring = ("poly", self.source_vars)
        # d(target coordinate) pulled back, per axis
        dcomp = []
        for v in self.target_vars:
            p = self.components[v]
            one = KForm.zero(form.dim, 1, src_ring)
            terms = {}
            for j, sv in enumerate(self.source_vars[:form.dim]):
                dp = p.diff(sv)
                if dp:
                    terms[(j + 1,)] = dp
            dcomp.append(KForm(form.dim, 1, src_ring, terms))
        subs = dict(self.components)
        out = KForm.zero(form.dim, form.degree, src_ring)
        for idx, c in form.coeffs.items():
            piece = KForm(form.dim, 0, src_ring, {(): c.subs(subs)})
            for axis in idx:
                piece = piece.wedge(dcomp[axis - 1])
            out = out + piece
        return out

    def compose(self, inner: "PolynomialMap") -> "PolynomialMap":
        """self after inner (inner maps into self's source chart)."""
        if inner.target_vars != self.source_vars:
            raise MixedRingError("charts do not line up for composition")
        comps = {v: p.subs(inner.components) for v, p in self.components.items()}
        return PolynomialMap(inner.source_vars, self.target_vars, comps)


def poly_ring(vars) -> tuple:
    return ("poly", tuple(vars))


def chart_vars(prefix: str, dim: int) -> tuple:
    return tuple(f"{prefix}{i}" for i in range(1, dim + 1))
