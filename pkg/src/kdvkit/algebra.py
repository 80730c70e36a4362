"""Differential polynomial algebra over Q(i, sqrt2).

Generators come in two kinds.  A Family owns an infinite ladder of jet
variables indexed by a multiset of derivation names (u, u_t1, u_t1t1,
u_t3t1, ...).  A Symbol is a single generator whose image under each
derivation is a fixed polynomial (usually zero; t0 maps to 1 under d/dt0).

A derivation acts on a family either by bumping the family's own jet
index ("jet" profile) or through a chain rule onto other jet slots with
polynomial coefficients, which is how changes of variables are driven.

Monomial keys are ((name, didx), exp) tuples; didx is a sorted tuple of
(derivation, count) pairs, empty for plain symbols.  Exponents may be
negative only for symbols declared invertible.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    NonTerminating,
    NotExact,
    NotJetFamily,
    UnknownDerivation,
    UnsupportedTerm,
)
from .scalars import ONE, Scalar, ZERO, rat

# ---------------------------------------------------------------------------
# generator registry


class Family:
    """A jet family: one dependent variable and all its derivatives.

    derivations maps a derivation name to either the string "jet" (the
    derivation bumps this family's own index for that name) or to a list
    of (target_derivation, coefficient DiffPoly) chain-rule pairs.
    primary is the derivation used for plain-index rendering (v_3) and
    for Euler operators / total-derivative integration.
    """

    __slots__ = ("name", "derivations", "primary")

    def __init__(self, name: str, derivations, primary: str):
        self.name = name
        self.derivations = dict(derivations)
        self.primary = primary

    def __repr__(self):
        return f"Family({self.name!r})"


class Symbol:
    """A plain generator. images maps derivation -> DiffPoly (default 0)."""

    __slots__ = ("name", "images", "invertible")

    def __init__(self, name: str, images=None, invertible: bool = False):
        self.name = name
        self.images = dict(images or {})
        self.invertible = invertible

    def __repr__(self):
        return f"Symbol({self.name!r})"


_REGISTRY: dict = {}


def reset_generators(prefix: Optional[str] = None) -> None:
    """Drop registered generators (all, or those starting with prefix)."""
    if prefix is None:
        _REGISTRY.clear()
        return
    for k in [k for k in _REGISTRY if k.startswith(prefix)]:
        del _REGISTRY[k]


def family(name: str, derivations=None, primary: Optional[str] = None) -> Family:
    got = _REGISTRY.get(name)
    if got is not None:
        if not isinstance(got, Family):
            raise NotJetFamily(f"{name} is already a plain symbol")
        if derivations is not None:
            got.derivations = dict(derivations)
        if primary is not None:
            got.primary = primary
        return got
    if derivations is None:
        derivations = {"t1": "jet"}
    if primary is None:
        jet_names = [d for d, v in derivations.items() if v == "jet"]
        primary = jet_names[0] if jet_names else next(iter(derivations))
    fam = Family(name, derivations, primary)
    _REGISTRY[name] = fam
    return fam


def symbol(name: str, images=None, invertible: bool = False) -> Symbol:
    got = _REGISTRY.get(name)
    if got is not None:
        if isinstance(got, Family):
            raise NotJetFamily(f"{name} is already a jet family")
        if images is not None:
            got.images = dict(images)
        if invertible:
            got.invertible = True
        return got
    sym = Symbol(name, images, invertible)
    _REGISTRY[name] = sym
    return sym


def _lookup(name: str):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownDerivation(f"generator {name!r} is not registered") from None


# ---------------------------------------------------------------------------
# keys and monomials

Didx = tuple  # tuple[(dname, count), ...] sorted by dname
Key = tuple   # (name, Didx)
Monomial = tuple  # tuple[(Key, exp), ...] sorted by Key

EMPTY_MONOMIAL: Monomial = ()


def didx_bump(didx: Didx, dname: str, by: int = 1) -> Didx:
    d = dict(didx)
    d[dname] = d.get(dname, 0) + by
    if d[dname] < 0:
        raise ValueError("negative derivation count")
    return tuple(sorted((k, v) for k, v in d.items() if v))


def didx_count(didx: Didx, dname: str) -> int:
    for k, v in didx:
        if k == dname:
            return v
    return 0


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for key, exp in m2:

        e = d.get(key, 0) + exp
        if e:
            d[key] = e
        elif key in d:
            del d[key]
    return tuple(sorted(d.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(abs(e) for _, e in m)


# ---------------------------------------------------------------------------
# DiffPoly


class DiffPoly:
    """Immutable-by-convention polynomial: dict Monomial -> Scalar."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Scalar]] = None):
        t = {}
        if terms:
            for m, c in terms.items():
                if not c.is_zero():
                    t[m] = c
        self.terms = t

    # -- constructors --

    @staticmethod
    def zero() -> "DiffPoly":
        return DiffPoly()

    @staticmethod
    def const(c) -> "DiffPoly":
        c = Scalar.of(c)
        if c.is_zero():
            return DiffPoly()
        return DiffPoly({EMPTY_MONOMIAL: c})

    @staticmethod
    def one() -> "DiffPoly":
        return DiffPoly.const(ONE)

    @staticmethod
    def gen(name: str, exp: int = 1) -> "DiffPoly":
        obj = _lookup(name)
        if isinstance(obj, Family):
            return DiffPoly.jet(name, {}, exp)
        if exp < 0 and not obj.invertible:
            raise UnsupportedTerm(f"{name} is not invertible")
        if exp == 0:
            return DiffPoly.one()
        return DiffPoly({(((name, ()), exp),): ONE})

    @staticmethod
    def jet(fam: str, counts: Mapping[str, int], exp: int = 1) -> "DiffPoly":
        obj = _lookup(fam)
        if not isinstance(obj, Family):
            raise NotJetFamily(f"{fam} is a plain symbol, not a family")
        didx = tuple(sorted((k, v) for k, v in counts.items() if v))
        for dname, _ in didx:
            if dname not in obj.derivations:
                raise UnknownDerivation(f"{fam} has no derivation {dname}")
        if exp == 0:
            return DiffPoly.one()
        if exp < 0:
            raise UnsupportedTerm("jet variables are not invertible")
        return DiffPoly({(((fam, didx), exp),): ONE})

    # -- basic predicates --

    def is_zero(self) -> bool:
        return not self.terms

    def constant_part(self) -> Scalar:
        return self.terms.get(EMPTY_MONOMIAL, ZERO)

    def as_scalar(self) -> Scalar:
        if not self.terms:
            return ZERO
        if len(self.terms) == 1 and EMPTY_MONOMIAL in self.terms:
            return self.terms[EMPTY_MONOMIAL]
        raise UnsupportedTerm("polynomial is not a constant")

    # -- ring operations --

    def __add__(self, other):
        other = _coerce(other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m)
            if s is None:
                t[m] = c
            else:
                s = s + c
                if s.is_zero():
                    del t[m]
                else:
                    t[m] = s
        out = DiffPoly.__new__(DiffPoly)
        out.terms = t
        return out

    __radd__ = __add__

    def __neg__(self):
        out = DiffPoly.__new__(DiffPoly)
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            c = Scalar.of(other)
            if c.is_zero():
                return DiffPoly()
            out = DiffPoly.__new__(DiffPoly)
            out.terms = {m: k * c for m, k in self.terms.items()}
            return out
        other = _coerce(other)
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                s = t.get(m)
                if s is None:
                    t[m] = c
                else:
                    s = s + c
                    if s.is_zero():
                        del t[m]
                    else:
                        t[m] = s
        out = DiffPoly.__new__(DiffPoly)
        out.terms = t
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise UnsupportedTerm("negative polynomial powers are not defined")
        out = DiffPoly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Scalar, Fraction)):
            other = DiffPoly.const(Scalar.of(other))
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus --

    def derive(self, dname: str) -> "DiffPoly":
        out = DiffPoly()
        for m, c in self.terms.items():
            for idx, (key, exp) in enumerate(m):
                dfactor = _derive_factor(key, dname)
                if dfactor.is_zero():
                    continue
                rest = list(m)
                if exp == 1:
                    del rest[idx]
                else:
                    rest[idx] = (key, exp - 1)
                piece = DiffPoly({tuple(rest): c * rat(exp)}) * dfactor
                out = out + piece
        return out

    def partial(self, key: Key) -> "DiffPoly":
        """Formal partial derivative with respect to one generator/jet."""
        out: dict = {}
        for m, c in self.terms.items():
            d = dict(m)
            exp = d.get(key)
            if not exp:
                continue
            if exp == 1:
                del d[key]
            else:
                d[key] = exp - 1
            mono = tuple(sorted(d.items()))
            s = out.get(mono)
            nc = c * rat(exp)
            out[mono] = nc if s is None else s + nc
        return DiffPoly(out)

    def degree_in(self, key: Key) -> int:
        deg = 0
        for m, _ in self.terms.items():
            d = dict(m)
            deg = max(deg, d.get(key, 0))
        return deg

    def max_order(self, fam: str, dname: str) -> int:
        """Highest dname-count among jets of fam (-1 if fam absent)."""
        best = -1
        for m in self.terms:
            for (name, didx), _ in m:
                if name == fam:
                    best = max(best, didx_count(didx, dname))
        return best

    def contains(self, name: str) -> bool:
        return any(key[0] == name for m in self.terms for key, _ in m)

    def keys_of(self, name: str) -> set:
        return {key for m in self.terms for key, _ in m if key[0] == name}

    def total_degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    # -- substitution --

    def subs(self, mapping: Mapping[Key, "DiffPoly"],
             max_passes: int = 64) -> "DiffPoly":
        """Repeatedly rewrite whole factor keys until a fixed point."""
        cur = self
        for _ in range(max_passes):
            nxt = cur._subs_once(mapping)
            if nxt.terms == cur.terms:
                return cur
            cur = nxt
        raise NonTerminating("substitution did not stabilise")

    def _subs_once(self, mapping: Mapping[Key, "DiffPoly"]) -> "DiffPoly":
        out = DiffPoly()
        for m, c in self.terms.items():
            piece = DiffPoly({EMPTY_MONOMIAL: c})
            plain: list = []
            for key, exp in m:
                rep = mapping.get(key)
                if rep is None:
                    plain.append((key, exp))
                else:
                    if exp < 0:
                        raise UnsupportedTerm(
                            f"cannot substitute into negative power of {key}")
                    piece = piece * rep ** exp
            if plain:
                piece = piece * DiffPoly({tuple(sorted(plain)): ONE})
            out = out + piece
        return out

    def map_generators(self,
                       scalar_map: Optional[Callable[[Scalar], Scalar]] = None,
                       key_map: Optional[Callable[[Key], tuple]] = None
                       ) -> "DiffPoly":
        """Ring morphism: transform coefficients and/or rescale-rename keys.

        key_map returns (new_key, Scalar factor) applied once per exponent.
        """
        out: dict = {}
        for m, c in self.terms.items():
            if scalar_map is not None:
                c = scalar_map(c)
            factors = []
            for key, exp in m:
                if key_map is not None:
                    key, scale = key_map(key)
                    if scale is not ONE and scale != ONE:
                        c = c * scale ** exp
                factors.append((key, exp))
            mono = tuple(sorted(factors))
            s = out.get(mono)
            out[mono] = c if s is None else s + c
        return DiffPoly(out)

    def shift_family(self, src: str, dname: str, dst: str) -> "DiffPoly":
        """Rewrite src-jets carrying >=1 dname derivative as dst-jets with
        one fewer; a bare src factor (no dname derivative) is an error."""
        out: dict = {}
        for m, c in self.terms.items():
            factors = []
            for (name, didx), exp in m:
                if name == src:
                    n = didx_count(didx, dname)
                    if n < 1:
                        raise UnsupportedTerm(
                            f"bare {src} jet cannot shift to {dst}")
                    factors.append(((dst, didx_bump(didx, dname, -1)), exp))
                else:
                    factors.append(((name, didx), exp))
            mono = tuple(sorted(factors))
            s = out.get(mono)
            out[mono] = c if s is None else s + c
        return DiffPoly(out)

    # -- rendering --

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (_mono_degree(kv[0]), kv[0]))

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            parts.append(_term_text(m, c))
        s = parts[0]
        for p in parts[1:]:
            s += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return s

    def json_obj(self) -> dict:
        monos = []
        for m, c in self.sorted_terms():
            factors = []
            for (name, didx), exp in m:
                factors.append({"gen": _gen_label(name, didx),
                                "order": _primary_order(name, didx),
                                "exp": exp})
            monos.append({"factors": factors, "coeff": c.json_obj()})
        return {"monomials": monos}

    def json_text(self) -> str:
        return json.dumps(self.json_obj(), sort_keys=True)

    @staticmethod
    def from_json(obj) -> "DiffPoly":
        out = DiffPoly()
        for mono in obj["monomials"]:
            c = Scalar.from_json(mono["coeff"])
            factors = []
            for f in mono["factors"]:
                name, didx = _parse_gen_label(f["gen"], f["order"])
                factors.append(((name, didx), f["exp"]))
            out = out + DiffPoly({tuple(sorted(factors)): c})
        return out

    def __repr__(self):
        return f"DiffPoly({self.text()})"

    def __str__(self):
        return self.text()


def _coerce(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (int, Fraction, Scalar)):
        return DiffPoly.const(Scalar.of(x))
    raise TypeError(f"cannot coerce {type(x).__name__} to DiffPoly")


# ---------------------------------------------------------------------------
# derivation of a single factor


def _derive_factor(key: Key, dname: str) -> DiffPoly:
    name, didx = key
    obj = _lookup(name)
    if isinstance(obj, Symbol):
        img = obj.images.get(dname)
        if img is None:
            return DiffPoly.zero()
        return img if isinstance(img, DiffPoly) else DiffPoly.const(Scalar.of(img))
    profile = obj.derivations.get(dname)
    if profile is None:
        raise UnknownDerivation(f"{name} has no derivation {dname}")
    if profile == "jet":
        return DiffPoly({(((name, didx_bump(didx, dname)), 1),): ONE})
    out = DiffPoly()
    for target_dname, coeff in profile:
        bumped = DiffPoly({(((name, didx_bump(didx, target_dname)), 1),): ONE})
        out = out + _coerce(coeff) * bumped
    return out


# ---------------------------------------------------------------------------
# Euler operator and formal integration


def euler_derivative(p: DiffPoly, fam: str, dname: Optional[str] = None) -> DiffPoly:
    """Variational derivative of p with respect to fam along dname jets.

    Vanishes exactly iff p is a total dname-derivative (plus a constant).
    Jets of fam carrying other derivations are not supported here.
    """
    obj = _lookup(fam)
    if not isinstance(obj, Family):
        raise NotJetFamily(f"{fam} is a plain symbol")
    if dname is None:
        dname = obj.primary
    for m in p.terms:
        for (name, didx), _ in m:
            if name == fam:
                for dn, _cnt in didx:
                    if dn != dname:
                        raise UnsupportedTerm(
                            f"mixed jet {name},{didx} in Euler operator")
    top = p.max_order(fam, dname)
    out = DiffPoly()
    for n in range(0, top + 1):
        key = (fam, didx_bump((), dname, n) if n else ())
        part = p.partial(key)
        for _ in range(n):
            part = part.derive(dname)
        out = out + part * (ONE if n % 2 == 0 else Scalar.of(-1))
    return out


def integrate_total(p: DiffPoly, fams: Optional[Sequence[str]] = None,
                    dname: str = "t1", max_steps: int = 4096) -> DiffPoly:
    """Antiderivative q with q.derive(dname) == p, integration constant 0.

    Verifies exactness first through the Euler operator for every family
    present and raises NotExact otherwise.
    """
    if fams is None:
        fams = sorted({key[0] for m in p.terms for key, _ in m
                       if isinstance(_lookup(key[0]), Family)})
    for f in fams:
        if not euler_derivative(p, f, dname).is_zero():
            raise NotExact(f"Euler residual in {f} is nonzero")

    acc = DiffPoly()
    cur = p
    for _ in range(max_steps):
        if cur.is_zero():
            return acc
        const = cur.constant_part()
        if len(cur.terms) == 1 and EMPTY_MONOMIAL in cur.terms:
            raise NotExact(f"constant remainder {const} is not integrable")
        # find the family with the highest jet order present
        best = None
        for f in fams:
            n = cur.max_order(f, dname)
            if n >= 0 and (best is None or n > best[1]):
                best = (f, n)
        if best is None or best[1] == 0:
            raise NotExact("leftover terms contain no differentiated jet")
        f, n = best
        key = (f, didx_bump((), dname, n))
        if cur.degree_in(key) > 1:
            raise NotExact(f"top-order jet {key} appears nonlinearly")
        s = cur.partial(key)  # no u_n inside by linearity
        # integrate s with respect to u_{n-1} formally
        low = (f, didx_bump((), dname, n - 1) if n > 1 else ())
        q_inc = DiffPoly()
        for m, c in s.terms.items():
            d = dict(m)
            e = d.get(low, 0)
            d[low] = e + 1
            q_inc = q_inc + DiffPoly({tuple(sorted(d.items())): c / rat(e + 1)})
        acc = acc + q_inc
        cur = cur - q_inc.derive(dname)
    raise NonTerminating("integrate_total exceeded its step cap")


# ---------------------------------------------------------------------------
# on-shell reduction


class FlowRule:
    """One evolutionary rule: jets of fam along flow reduce through rhs.

    order k > 1 encodes a k-th order rule: a jet with at least k flow
    counts rewrites through rhs, carrying the surplus as derivatives.
    """

    __slots__ = ("fam", "flow", "rhs", "order")

    def __init__(self, fam: str, flow: str, rhs: DiffPoly, order: int = 1):
        self.fam = fam
        self.flow = flow
        self.rhs = rhs
        self.order = order


def reduce_on_shell(p: DiffPoly, rules: Iterable[FlowRule],
                    max_passes: int = 64) -> DiffPoly:
    """Eliminate flow-bearing jets using evolutionary rules.

    Each rule rewrites fam jets with >= order flow counts: the image of
    the jet is the rhs differentiated by the remaining index.  Rules
    whose rhs still contains jets the rule itself rewrites would never
    terminate and are rejected up front.
    """
    rules = list(rules)
    for r in rules:
        if r.rhs.max_order(r.fam, r.flow) >= r.order:
            raise NonTerminating(
                f"rule for ({r.fam},{r.flow}) has its own flow on the right")
    index = {(r.fam, r.flow): r for r in rules}
    memo: dict = {}

    def reduce_poly(q: DiffPoly, depth: int) -> DiffPoly:
        if depth > max_passes:
            raise NonTerminating("on-shell reduction recursion too deep")
        out = DiffPoly()
        for m, c in q.terms.items():
            piece = DiffPoly({EMPTY_MONOMIAL: c})
            plain = []
            for key, exp in m:
                img = jet_image(key, depth)
                if img is None:
                    plain.append((key, exp))
                else:
                    piece = piece * img ** exp
            if plain:
                piece = piece * DiffPoly({tuple(sorted(plain)): ONE})
            out = out + piece
        return out

    def jet_image(key: Key, depth: int) -> Optional[DiffPoly]:
        name, didx = key
        hit = False
        for (fam, flow), rule in index.items():
            if name == fam and didx_count(didx, flow) >= rule.order:
                hit = True
                break
        if not hit:
            return None
        if key in memo:
            return memo[key]
        rest = didx_bump(didx, flow, -rule.order)
        img = rule.rhs
        for dn, cnt in rest:
            for _ in range(cnt):
                img = img.derive(dn)
        img = reduce_poly(img, depth + 1)
        memo[key] = img
        return img

    return reduce_poly(p, 0)


# ---------------------------------------------------------------------------
# rendering helpers

_FLOW_LABEL = {
    "t1": "t1", "t3": "t3", "t5": "t5", "t7": "t7",
    "t0": "t0", "x0": "x0", "x1": "x1", "x2": "x2",
    "tau1": "t1", "tau3": "t3", "tau5": "t5", "tau7": "t7",
}


def _gen_label(name: str, didx: Didx) -> str:
    obj = _lookup(name)
    if isinstance(obj, Symbol):
        return name
    parts = [name]
    for dn, cnt in didx:
        if dn == obj.primary:
            continue
        parts.extend([_FLOW_LABEL.get(dn, dn)] * cnt)
    return "_".join(parts)


def _primary_order(name: str, didx: Didx) -> int:
    obj = _lookup(name)
    if isinstance(obj, Symbol):
        return 0
    return didx_count(didx, obj.primary)


def _unlabel_flow(obj: Family, part: str) -> str:
    if part in obj.derivations:
        return part
    cands = [dn for dn in obj.derivations if _FLOW_LABEL.get(dn, dn) == part]
    if len(cands) != 1:
        raise UnknownDerivation(
            f"flow label {part!r} is not a derivation of {obj.name}")
    return cands[0]


def _parse_gen_label(label: str, order: int) -> Key:
    parts = label.split("_")
    name = parts[0]
    obj = _lookup(name)
    if isinstance(obj, Symbol):
        return (name, ())
    counts: dict = {}
    for p in parts[1:]:
        dn = _unlabel_flow(obj, p)
        counts[dn] = counts.get(dn, 0) + 1
    if order:
        counts[obj.primary] = counts.get(obj.primary, 0) + order
    didx = tuple(sorted((k, v) for k, v in counts.items() if v))
    return (name, didx)


def _factor_text(key: Key, exp: int) -> str:
    name, didx = key
    obj = _lookup(name)
    if isinstance(obj, Symbol):
        base = name
    else:
        label = _gen_label(name, didx)
        n = _primary_order(name, didx)
        if label == name:
            base = f"{name}_{n}"
        else:
            base = label if n == 0 else f"{label}_{n}"
    return base if exp == 1 else f"{base}^{exp}"


def _term_text(m: Monomial, c: Scalar) -> str:
    factors = [_factor_text(key, exp) for key, exp in m]
    if not factors:
        return c.text()
    body = "*".join(factors)
    if c == ONE:
        return body
    if c == Scalar.of(-1):
        return "-" + body
    return f"{c.text()}*{body}"


def equation_text(lhs: Union[DiffPoly, str], rhs: DiffPoly) -> str:
    left = lhs if isinstance(lhs, str) else lhs.text()
    return f"{left} = {rhs.text()}"
