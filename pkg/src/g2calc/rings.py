'''Scalar coefficient rings for the form calculus.

Three rings are supported:

* exact rationals (``fractions.Fraction``),
* floats,
* multivariate polynomials with rational coefficients over a fixed,
  named coordinate tuple (class :class:`Poly`).

Mixing scalars from different rings inside one form is a hard error, raised
by the form layer (see :mod:`g2calc.forms`).  Helpers here also provide
exact n-th roots of rationals where they exist, with a documented float
fallback.
'''
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

Q = Fraction

RAT = "rational"
FLT = "float"


class MixedRingError(TypeError):
    """Raised when scalars from different coefficient rings are combined."""


def _int_nth_root(n: int, k: int):
    # exact integer k-th root, or None
    if n < 0:
        if k % 2 == 0:
            return None
        r = _int_nth_root(-n, k)
        return None if r is None else -r
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def nth_root_fraction(q: Fraction, k: int):
    """Exact k-th root of a Fraction, or None when irrational."""
    q = Fraction(q)
    num = _int_nth_root(q.numerator, k)
    if num is None:
        return None
    den = _int_nth_root(q.denominator, k)
    if den is None:
        return None
    return Fraction(num, den)


def fraction_pow(base, expo: Fraction):
    """base**expo, exact Fraction when possible, float otherwise.

    `base` must be positive (callers deal with signs); `expo` is a Fraction.
    """
    expo = Fraction(expo)
    if isinstance(base, Fraction) or isinstance(base, int):
        base = Fraction(base)
        if base <= 0:
            raise ValueError("fraction_pow needs a positive base")
        powed = base ** expo.numerator
        root = nth_root_fraction(powed, expo.denominator)
        if root is not None:
            return root
        return float(powed) ** (1.0 / expo.denominator)
    return float(base) ** float(expo)


class Poly:
    '''Multivariate polynomial with Fraction coefficients.

    Monomials are stored in a dict keyed by exponent tuples aligned with
    ``self.vars``; zero coefficients are pruned so equality is syntactic.
    The canonical term order used by __str__ is graded lexicographic.
    '''

    __slots__ = ("vars", "terms")

    def __init__(self, vars: tuple, terms: Mapping[tuple, Fraction] | None = None):
        self.vars = tuple(vars)
        clean = {}
        if terms:
            for expo, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    if len(expo) != len(self.vars):
                        raise ValueError("exponent tuple does not match variables")
                    clean[tuple(expo)] = c
        self.terms = clean

    # ----- constructors -------------------------------------------------
    @classmethod
    def const(cls, vars, c):
        vars = tuple(vars)
        return cls(vars, {(0,) * len(vars): Fraction(c)})

    @classmethod
    def var(cls, vars, name):
        vars = tuple(vars)
        i = vars.index(name)
        expo = tuple(1 if j == i else 0 for j in range(len(vars)))
        return cls(vars, {expo: Fraction(1)})

    # ----- ring structure ------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.vars != self.vars:
                raise MixedRingError(
                    f"polynomials over different coordinates: {self.vars} vs {other.vars}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.vars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return Poly(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Poly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = Poly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.vars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # ----- calculus -------------------------------------------------------
    def diff(self, name: str) -> "Poly":
        i = self.vars.index(name)
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            de = list(e)
            de[i] -= 1
            out[tuple(de)] = out.get(tuple(de), Fraction(0)) + c * e[i]
        return Poly(self.vars, out)

    def subs(self, assignment: Mapping[str, "Poly"]) -> "Poly":
        """Substitute polynomials (all over one common variable tuple) for
        every variable of self."""
        new_vars = None
        for v in self.vars:
            p = assignment[v]
            if new_vars is None:
                new_vars = p.vars
            elif p.vars != new_vars:
                raise MixedRingError("substitution images live over different coordinates")
        out = Poly.const(new_vars, 0)
        for e, c in self.terms.items():
            term = Poly.const(new_vars, c)
            for v, k in zip(self.vars, e):
                if k:
                    term = term * assignment[v] ** k
            out = out + term
        return out

    def eval(self, point: Mapping[str, float]) -> float:
        total = 0.0
        for e, c in self.terms.items():
            val = float(c)
            for v, k in zip(self.vars, e):
                if k:
                    val *= float(point[v]) ** k
            total += val
        return total

    def eval_exact(self, point: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            val = c
            for v, k in zip(self.vars, e):
                if k:
                    val *= Fraction(point[v]) ** k
            total += val
        return total

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _key(self, e):
        return (sum(e), tuple(-x for x in e))

    def __str__(self):
        if not self.terms:
            return "0"
        bits = []
        for e in sorted(self.terms, key=self._key):
            c = self.terms[e]
            mono = "*".join(f"{v}^{k}" if k > 1 else v
                            for v, k in zip(self.vars, e) if k)
            bits.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)

    __repr__ = __str__


ScalarLike = Union[int, Fraction, float, Poly]


def ring_of(s) -> object:
    """Ring tag of one scalar: RAT, FLT or ('poly', vars)."""
    if isinstance(s, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(s, (int, Fraction)):
        return RAT
    if isinstance(s, float):
        return FLT
    if isinstance(s, Poly):
        return ("poly", s.vars)
    raise TypeError(f"unsupported scalar {s!r}")


def ring_zero(ring):
    if ring == RAT:
        return Fraction(0)
    if ring == FLT:
        return 0.0
    return Poly.const(ring[1], 0)


def coerce_to(ring, s):
    """Coerce integers/Fractions into `ring`; anything else must already match."""
    tag = ring_of(s)
    if tag == ring:
        if ring == RAT:
            return Fraction(s)
        return s
    if tag == RAT:
        if ring == FLT:
            return float(s)
        if isinstance(ring, tuple):
            return Poly.const(ring[1], Fraction(s))
    raise MixedRingError(f"cannot place scalar of ring {tag} into ring {ring}")


def scalar_is_zero(s) -> bool:
    if isinstance(s, Poly):
        return not s.terms
    return s == 0
