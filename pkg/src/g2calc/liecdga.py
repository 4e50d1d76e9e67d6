'''Invariant differential on a framed Lie-group quotient.

Structure equations prescribe d of each coframe generator as a constant
2-form; d extends to all invariant forms as a degree-one derivation.  This
module also handles the JSON model-file format used by the built-in
catalogue and by the command line tool.
'''
from __future__ import annotations

import json
from fractions import Fraction

from .forms import KForm, merge_sign
from .rings import FLT, RAT, coerce_to


class JacobiError(ValueError):
    """Structure equations fail d^2 = 0."""


class PrimitiveMismatch(ValueError):
    """A claimed primitive does not differentiate to its target."""


class StructureEqs:
    """d(theta^i) for each generator, as constant-coefficient 2-forms."""

    def __init__(self, dim: int, d_gen, generators=None):
        self.dim = dim
        self.generators = tuple(generators) if generators else tuple(
            f"t{i}" for i in range(1, dim + 1))
        if len(self.generators) != dim:
            raise ValueError("need one generator name per axis")
        self.d_gen = []
        for i in range(dim):
            f = d_gen[i]
            if f is None:
                f = KForm.zero(dim, 2, RAT)
            if f.degree != 2 or f.dim != dim:
                raise ValueError("structure equations must be 2-forms")
            self.d_gen.append(f)

    def axis_of(self, name: str) -> int:
        return self.generators.index(name) + 1


def d_invariant(eqs: StructureEqs, form: KForm) -> KForm:
    """Derivation extension of the structure equations.

    d(theta^I) = sum_k (-1)^{k-1} theta^{i_1..} ^ d(theta^{i_k}) ^ ..theta^{i_m},
    collected with constant coefficients (rational or float).
    """
    dim = eqs.dim
    if form.degree >= dim:
        return KForm.zero(dim, dim, form.ring)
    out = KForm.zero(dim, form.degree + 1, form.ring)
    for idx, c in form.coeffs.items():
        for pos, axis in enumerate(idx):
            dg = eqs.d_gen[axis - 1]
            if dg.is_zero():
                continue
            rest = idx[:pos] + idx[pos + 1:]
            for pair, c2 in dg.coeffs.items():
                merged, sign = merge_sign(pair, rest)
                if sign == 0:
                    continue
                total = c * coerce_to(form.ring, c2)
                if (sign == 1) != (pos % 2 == 0):
                    total = -total
                out = out + KForm(dim, form.degree + 1, form.ring, {merged: total})
    return out


def check_d_squared(eqs: StructureEqs) -> None:
    """Raise JacobiError unless d^2 vanishes on every generator."""
    for i in range(eqs.dim):
        theta = KForm.basis(eqs.dim, (i + 1,), RAT)
        dd = d_invariant(eqs, d_invariant(eqs, theta))
        if not dd.is_zero():
            raise JacobiError(
                f"d^2({eqs.generators[i]}) = {dd} != 0; structure constants "
                "do not satisfy the Jacobi identity")


def verify_primitive(eqs: StructureEqs, primitive: KForm, target: KForm) -> None:
    """Check d(primitive) == target in exact arithmetic, else raise."""
    got = d_invariant(eqs, primitive)
    if got != target.in_ring(got.ring):
        raise PrimitiveMismatch(f"d(primitive) = {got}, expected {target}")


# --------------------------------------------------------------------------
# JSON model files
#
# {"dim": 7,
#  "generators": ["t1", ...],
#  "d": {"t4": [["1", [1,2]]], ...},          # omitted generators are closed
#  "named_forms": {"phi": [["1",[1,2,3]], ...]},   # optional, any degree
#  "involution": {"t1": "-1", ...},           # optional diagonal pullback
#  "witnesses": {"name": {"primitive": [...], "target": [...]}},  # optional
#  "domain_volume": "2.0"}                    # optional float constant
# --------------------------------------------------------------------------

def _frac(s) -> Fraction:
    if isinstance(s, str):
        return Fraction(s)
    if isinstance(s, int):
        return Fraction(s)
    raise ValueError(f"rationals must be strings or ints, got {s!r}")


def _form_from_json(dim, entries) -> KForm:
    terms = [( tuple(idx), _frac(c)) for c, idx in entries]
    deg = len(terms[0][0]) if terms else 0
    return KForm.from_terms(dim, deg, terms, RAT)


def _form_to_json(form: KForm):
    return [[str(c), list(idx)] for idx, c in sorted(form.coeffs.items())]


class InvariantModel:
    """Structure equations plus optional named forms / involution / witnesses."""

    def __init__(self, eqs: StructureEqs, named_forms=None, involution=None,
                 witnesses=None, domain_volume=None, label=""):
        self.eqs = eqs
        self.named_forms = dict(named_forms or {})
        self.involution = dict(involution or {})   # generator -> Fraction(+-1 etc.)
        self.witnesses = dict(witnesses or {})     # name -> (primitive, target)
        self.domain_volume = domain_volume
        self.label = label

    @property
    def dim(self):
        return self.eqs.dim

    def involution_pullback(self, form: KForm) -> KForm:
        if not self.involution:
            raise ValueError("model carries no involution")
        out = {}
        for idx, c in form.coeffs.items():
            s = Fraction(1)
            for axis in idx:
                s *= self.involution[self.eqs.generators[axis - 1]]
            out[idx] = c * coerce_to(form.ring, s)
        return KForm(form.dim, form.degree, form.ring, out)


def load_model(path) -> InvariantModel:
    with open(path) as fh:
        data = json.load(fh)
    return model_from_dict(data)


def model_from_dict(data) -> InvariantModel:
    dim = int(data["dim"])
    gens = list(data["generators"])
    dmap = data.get("d", {})
    d_gen = []
    for g in gens:
        if g in dmap:
            d_gen.append(_form_from_json(dim, dmap[g]))
        else:
            d_gen.append(KForm.zero(dim, 2, RAT))
    eqs = StructureEqs(dim, d_gen, gens)
    check_d_squared(eqs)
    named = {k: _form_from_json(dim, v) for k, v in data.get("named_forms", {}).items()}
    invo = {k: _frac(v) for k, v in data.get("involution", {}).items()}
    wits = {}
    for name, w in data.get("witnesses", {}).items():
        wits[name] = (_form_from_json(dim, w["primitive"]),
                      _form_from_json(dim, w["target"]))
    vol = float(data["domain_volume"]) if "domain_volume" in data else None
    return InvariantModel(eqs, named, invo, wits, vol, label=data.get("label", ""))


def model_to_dict(model: InvariantModel) -> dict:
    eqs = model.eqs
    data = {"dim": eqs.dim, "generators": list(eqs.generators), "d": {}}
    for g, f in zip(eqs.generators, eqs.d_gen):
        if not f.is_zero():
            data["d"][g] = _form_to_json(f)
    if model.named_forms:
        data["named_forms"] = {k: _form_to_json(v) for k, v in model.named_forms.items()}
    if model.involution:
        data["involution"] = {k: str(v) for k, v in model.involution.items()}
    if model.witnesses:
        data["witnesses"] = {k: {"primitive": _form_to_json(p), "target": _form_to_json(t)}
                             for k, (p, t) in model.witnesses.items()}
    if model.domain_volume is not None:
        data["domain_volume"] = repr(model.domain_volume)
    if model.label:
        data["label"] = model.label
    return data


def save_model(model: InvariantModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")
