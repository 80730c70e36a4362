"""Table of named equations and printed constants.

Every equation the package certifies is transcribed here once, in fixed
canonical form, together with a neutral provenance string.  Derivation
code never reads its own output back from this table: the table is the
comparison target, so corrupting any single coefficient must be caught
by at least one certificate.

Fractional powers of the window scale s0 are carried exactly through the
invertible symbol g with g**7 = s0 = (7/2)*tau7; equations the sources
print with powers s0^(k/7) appear here with g**k instead.
"""

from __future__ import annotations

import copy
from fractions import Fraction
from typing import Dict, List, Optional

from .algebra import DiffPoly, equation_text, family, symbol
from .errors import MissingSymbol
from .scalars import ONE, rat

# ---------------------------------------------------------------------------
# generator declarations

_TAU_JETS = {"tau1": "jet", "tau3": "jet", "tau5": "jet", "tau7": "jet"}


def ensure_generators() -> None:
    """(Re)declare every family and symbol the equation table mentions.

    Idempotent and cheap; call before touching table polynomials so that
    a registry reset elsewhere cannot leave the table orphaned.
    """
    family("v", dict(_TAU_JETS), primary="tau1")
    family("u", dict(_TAU_JETS), primary="tau1")
    family("q", {"x0": "jet", "x1": "jet", "x2": "jet",
                 "tau1": "jet", "tau3": "jet"}, primary="x0")
    family("y", {"t0": "jet", "t1": "jet"}, primary="t0")
    family("h", {"t0": "jet", "t1": "jet"}, primary="t0")

    for tk in ("tau1", "tau3", "tau5", "tau7"):
        symbol(tk, images={tk: 1})
    for xk in ("x0", "x1", "x2"):
        symbol(xk, images={xk: 1})
    symbol("t0", images={"t0": 1})
    symbol("t1", images={"t1": 1})
    symbol("s1")
    symbol("z", images={"z": 1})
    symbol("xi")
    symbol("m0s")
    symbol("eta", invertible=True)
    symbol("c", invertible=True)
    symbol("ct", invertible=True)      # (14*tau7)^(-1/7) carrier
    g = symbol("g", invertible=True)   # s0^(1/7) = ((7/2)*tau7)^(1/7)
    g.images = {"tau7": DiffPoly.gen("g", -6) * rat(1, 2)}
    # rescale unknowns (inert constants)
    for name in ("k0", "k1", "k3", "n0", "n1", "n3"):
        symbol(name)


def _gen(name: str, exp: int = 1) -> DiffPoly:
    return DiffPoly.gen(name, exp)


def _jet(fam: str, counts: Dict[str, int], exp: int = 1) -> DiffPoly:
    return DiffPoly.jet(fam, counts, exp)


def _v(n: int, exp: int = 1) -> DiffPoly:
    return _jet("v", {"tau1": n}, exp)


def _u(n: int, exp: int = 1) -> DiffPoly:
    return _jet("u", {"tau1": n}, exp)


def _q(n: int, exp: int = 1) -> DiffPoly:
    return _jet("q", {"x0": n}, exp)


def _y(n: int, exp: int = 1) -> DiffPoly:
    return _jet("y", {"t0": n}, exp)


def _h(n: int, exp: int = 1) -> DiffPoly:
    return _jet("h", {"t0": n}, exp)


# ---------------------------------------------------------------------------
# entry types


class NamedEquation:
    """One registered identity: lhs = rhs with provenance.

    For evolution equations lhs is the single flow jet (family, flow);
    for plain identities flow is "" and lhs may be any polynomial.
    """

    __slots__ = ("name", "family", "flow", "lhs", "rhs", "citation")

    def __init__(self, name: str, fam: str, flow: str,
                 lhs: DiffPoly, rhs: DiffPoly, citation: str):
        self.name = name
        self.family = fam
        self.flow = flow
        self.lhs = lhs
        self.rhs = rhs
        self.citation = citation

    def residual(self) -> DiffPoly:
        return self.lhs - self.rhs

    def text(self) -> str:
        return equation_text(self.lhs, self.rhs)

    def json_obj(self) -> dict:
        return {"name": self.name, "family": self.family, "flow": self.flow,
                "lhs": self.lhs.json_obj(), "rhs": self.rhs.json_obj(),
                "citation": self.citation}

    def __repr__(self):
        return f"NamedEquation({self.name}: {self.text()})"


class ConstraintSet:
    """A finite set of polynomial relations among named unknowns."""

    __slots__ = ("name", "unknowns", "relations", "citation")

    def __init__(self, name: str, unknowns: List[str],
                 relations: List[DiffPoly], citation: str):
        self.name = name
        self.unknowns = list(unknowns)
        self.relations = list(relations)
        self.citation = citation

    def json_obj(self) -> dict:
        return {"name": self.name, "unknowns": self.unknowns,
                "relations": [r.json_obj() for r in self.relations],
                "citation": self.citation}

    def text(self) -> str:
        return "; ".join(r.text() + " = 0" for r in self.relations)


class RealConstant:
    """A printed real constant of the form sign * 2^a2 * 3^a3 * 7^a7.

    Exponents are exact Fractions; value() returns the float.  Used for
    quantities that live outside Q(i, sqrt2), e.g. fifth and seventh
    roots appearing in scaling factors.
    """

    __slots__ = ("name", "sign", "exps", "citation")

    def __init__(self, name: str, sign: int,
                 exps: Dict[int, Fraction], citation: str):
        self.name = name
        self.sign = sign
        self.exps = {int(b): Fraction(e) for b, e in exps.items()}
        self.citation = citation

    def value(self) -> float:
        out = float(self.sign)
        for base, e in self.exps.items():
            out *= float(base) ** float(e)
        return out

    def json_obj(self) -> dict:
        return {"name": self.name, "sign": self.sign,
                "exps": {str(b): str(e) for b, e in self.exps.items()},
                "citation": self.citation}


# ---------------------------------------------------------------------------
# the table


class Registry:
    def __init__(self, entries: Optional[dict] = None):
        self.entries = dict(entries or {})

    def add(self, entry) -> None:
        if entry.name in self.entries:
            raise MissingSymbol(f"duplicate registry entry {entry.name}")
        self.entries[entry.name] = entry

    def get(self, name: str):
        try:
            return self.entries[name]
        except KeyError:
            raise MissingSymbol(f"no registry entry named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> List[str]:
        return sorted(self.entries)

    def equations(self) -> List[NamedEquation]:
        return [e for e in self.entries.values()
                if isinstance(e, NamedEquation)]

    def mutated(self, name: str, slot: int = 0) -> "Registry":
        """Copy of the table with one coefficient of one entry corrupted."""
        out = Registry(copy.deepcopy(self.entries))
        entry = out.get(name)
        if hasattr(entry, "corrupt"):
            entry.corrupt(slot)
        elif isinstance(entry, NamedEquation):
            terms = entry.rhs.sorted_terms() or entry.lhs.sorted_terms()
            target = entry.rhs if entry.rhs.sorted_terms() else entry.lhs
            m, c0 = terms[slot % len(terms)]
            t = dict(target.terms)
            t[m] = c0 + ONE
            target.terms = {k: v for k, v in t.items() if not v.is_zero()}
        elif isinstance(entry, ConstraintSet):
            rel = entry.relations[slot % len(entry.relations)]
            m, c0 = rel.sorted_terms()[0]
            t = dict(rel.terms)
            t[m] = c0 + ONE
            rel.terms = {k: v for k, v in t.items() if not v.is_zero()}
        elif isinstance(entry, RealConstant):
            base = sorted(entry.exps)[slot % len(entry.exps)]
            entry.exps[base] = entry.exps[base] + Fraction(1, 2)
        else:
            raise MissingSymbol(f"cannot mutate entry {name!r}")
        return out

    def mutable_names(self) -> List[str]:
        return [n for n, e in sorted(self.entries.items())
                if hasattr(e, "corrupt")
                or isinstance(e, (NamedEquation, ConstraintSet, RealConstant))]


def _hierarchy_entries(reg: Registry) -> None:
    v0, v1, v2, v3, v4, v5 = (_v(n) for n in range(6))
    v7 = _v(7)

    reg.add(NamedEquation(
        "kdv1", "v", "tau3", _jet("v", {"tau3": 1}),
        rat(1, 4) * v3 + 3 * v0 * v1,
        "KdV hierarchy, first flow (normalized bihamiltonian form)"))
    reg.add(NamedEquation(
        "kdv2", "v", "tau5", _jet("v", {"tau5": 1}),
        rat(1, 16) * v5 + rat(5, 2) * v1 * v2 + rat(5, 4) * v0 * v3
        + rat(15, 2) * v0 ** 2 * v1,
        "KdV hierarchy, second flow"))
    reg.add(NamedEquation(
        "kdv3", "v", "tau7", _jet("v", {"tau7": 1}),
        rat(1, 64) * v7 + rat(35, 16) * v2 * v3 + rat(35, 2) * v0 * v1 * v2
        + rat(7, 16) * v0 * v5 + rat(35, 2) * v0 ** 3 * v1
        + rat(35, 8) * v1 ** 3 + rat(21, 16) * v1 * _v(4)
        + rat(35, 8) * v0 ** 2 * v3,
        "KdV hierarchy, third flow"))

    u1, u2, u3, u4, u5 = (_u(n) for n in range(1, 6))
    reg.add(NamedEquation(
        "pkdv1", "u", "tau3", _jet("u", {"tau3": 1}),
        rat(1, 4) * u3 + rat(3, 2) * u1 ** 2,
        "potential KdV hierarchy, first flow"))
    reg.add(NamedEquation(
        "pkdv2", "u", "tau5", _jet("u", {"tau5": 1}),
        rat(1, 16) * u5 + rat(5, 4) * u1 * u3 + rat(5, 8) * u2 ** 2
        + rat(5, 2) * u1 ** 3,
        "potential KdV hierarchy, second flow"))
    reg.add(NamedEquation(
        "pkdv3", "u", "tau7", _jet("u", {"tau7": 1}),
        rat(1, 64) * _u(7) + rat(7, 16) * u1 * u5 + rat(21, 32) * u3 ** 2
        + rat(7, 8) * u2 * u4 + rat(35, 8) * u3 * u1 ** 2
        + rat(35, 8) * u1 * u2 ** 2 + rat(35, 8) * u1 ** 4,
        "potential KdV hierarchy, third flow"))

    q0, q1, q2, q3, q4, q5 = (_q(n) for n in range(6))
    reg.add(NamedEquation(
        "mkdv1", "q", "x1", _jet("q", {"x1": 1}),
        2 * q0 ** 2 * q1 - rat(1, 3) * q3,
        "modified KdV hierarchy, first flow"))
    reg.add(NamedEquation(
        "mkdv2", "q", "x2", _jet("q", {"x2": 1}),
        -6 * q0 ** 4 * q1 + 2 * q0 ** 2 * q3 + 8 * q0 * q1 * q2
        + 2 * q1 ** 3 - rat(1, 5) * q5,
        "modified KdV hierarchy, second flow"))
    reg.add(NamedEquation(
        "pii3", "q", "", _q(6),
        _gen("x0") * q0
        + _gen("x1") * (2 * q0 ** 3 - q2)
        + _gen("x2") * (-6 * q0 ** 5 + 10 * q0 ** 2 * q2
                        + 10 * q0 * q1 ** 2 - q4)
        + 20 * q0 ** 7 - 70 * q0 ** 4 * q2 - 140 * q0 ** 3 * q1 ** 2
        + 14 * q0 ** 2 * q4 + 56 * q0 * q1 * q3 + 42 * q0 * q2 ** 2
        + 70 * q1 ** 2 * q2 - DiffPoly.const(rat(1, 2)),
        "Painleve II hierarchy, third member (sixth-order ODE)"))

    y0, y1, y2, y3, y4 = (_y(n) for n in range(5))
    reg.add(NamedEquation(
        "kdv_pi2", "y", "t1", _jet("y", {"t1": 1}),
        -(y0 * y1) - rat(1, 48) * y3,
        "KdV equation in self-similar normalization"))
    h1 = _h(1)
    reg.add(NamedEquation(
        "pkdv_pi2", "h", "t1", _jet("h", {"t1": 1}),
        -rat(1, 4) * h1 ** 2 - rat(1, 48) * _h(3),
        "potential KdV equation in self-similar normalization"))
    reg.add(NamedEquation(
        "pi2", "y", "", DiffPoly.zero(),
        rat(1, 64) * y4 + rat(5, 8) * (y1 ** 2 + 2 * y0 * y2)
        + 10 * y0 ** 3 + 4 * y0 * _gen("t1") - 4 * _gen("t0"),
        "second member of the Painleve I hierarchy"))
    reg.add(NamedEquation(
        "handy", "h", "t0", _jet("h", {"t0": 1}),
        2 * y0,
        "potential normalization linking h and y"))

    # Miura map and the flow it intertwines with the first KdV flow
    qq0 = _jet("q", {"tau1": 0})
    qq1 = _jet("q", {"tau1": 1})
    qq3 = _jet("q", {"tau1": 3})
    cc = _gen("c")
    reg.add(NamedEquation(
        "miura_map", "q", "", DiffPoly.zero(),
        rat(1, 2) * cc * qq1 - rat(1, 2) * cc ** 2 * qq0 ** 2,
        "Miura transformation with scale constant c"))
    reg.add(NamedEquation(
        "miura_flow", "q", "tau3", _jet("q", {"tau3": 1}),
        -rat(3, 2) * cc ** 2 * qq0 ** 2 * qq1 + rat(1, 4) * qq3,
        "modified KdV flow in hierarchy time, scale constant c"))
    reg.add(NamedEquation(
        "mkdv_tau", "q", "tau3", _jet("q", {"tau3": 1}),
        -6 * _gen("ct", 2) * qq0 ** 2 * qq1 + rat(1, 4) * qq3,
        "modified KdV flow in hierarchy time, ct = (14*tau7)^(-1/7)"))


def _coords_entries(reg: Registry) -> None:
    s1 = _gen("s1")
    t0 = _gen("t0")
    t1 = _gen("t1")
    g = _gen("g")
    tau1, tau3, tau5 = _gen("tau1"), _gen("tau3"), _gen("tau5")

    reg.add(NamedEquation(
        "tau1_of", "", "", _gen("tau1"),
        rat(5, 8) * s1 ** 3 * _gen("g", -14) + t1 * s1 * _gen("g", -4)
        - 2 * t0 * g,
        "coordinate change, tau1 line (g = s0^(1/7))"))
    reg.add(NamedEquation(
        "tau3_of", "", "", _gen("tau3"),
        rat(5, 4) * s1 ** 2 * _gen("g", -7) + rat(2, 3) * t1 * _gen("g", 3),
        "coordinate change, tau3 line"))
    reg.add(NamedEquation(
        "tau5_of", "", "", _gen("tau5"), s1,
        "coordinate change, tau5 line"))
    reg.add(NamedEquation(
        "tau7_of", "", "", _gen("tau7"), rat(2, 7) * _gen("g", 7),
        "coordinate change, tau7 line"))

    reg.add(NamedEquation(
        "t1_inv", "", "", _gen("t1"),
        rat(3, 2) * tau3 * _gen("g", -3)
        - rat(15, 8) * tau5 ** 2 * _gen("g", -10),
        "inverse coordinate change, t1 line"))
    reg.add(NamedEquation(
        "t0_inv", "", "", _gen("t0"),
        -rat(5, 8) * tau5 ** 3 * _gen("g", -15)
        + rat(3, 4) * tau3 * tau5 * _gen("g", -8)
        - rat(1, 2) * tau1 * _gen("g", -1),
        "inverse coordinate change, t0 line"))

    reg.add(NamedEquation(
        "ytilde", "y", "", DiffPoly.zero(),
        _gen("g", -2) * _y(0) - rat(1, 2) * tau5 * _gen("g", -7),
        "rescaled profile entering the first KdV flow"))
    reg.add(NamedEquation(
        "htilde", "h", "", DiffPoly.zero(),
        _gen("g", -1) * _h(0)
        - rat(3, 8) * tau3 * tau5 ** 2 * _gen("g", -14)
        + rat(15, 64) * tau5 ** 4 * _gen("g", -21)
        + rat(1, 2) * tau1 * tau5 * _gen("g", -7),
        "rescaled profile entering the first potential KdV flow"))

    reg.add(NamedEquation(
        "defeta", "", "", _gen("eta"),
        -(rat(2, 7) * _gen("g") * _gen("xi", 3)
          + tau5 * _gen("g", -4) * _gen("xi", 2)
          + tau3 * _gen("g", -2) * _gen("xi")
          + tau1),
        "local spectral variable of the saturated regime"))

    # stationary combination 5*tau5*R5 + 7*tau7*R7 (R's transcribed)
    v0, v1, v2, v3, v4 = (_v(n) for n in range(5))
    r5 = rat(1, 16) * v4 + rat(5, 4) * v0 * v2 + rat(5, 8) * v1 ** 2 \
        + rat(5, 2) * v0 ** 3
    r7 = rat(1, 64) * _v(6) + rat(7, 16) * v0 * v4 + rat(21, 32) * v2 ** 2 \
        + rat(7, 8) * v1 * v3 + rat(35, 8) * v0 ** 2 * v2 \
        + rat(35, 8) * v0 * v1 ** 2 + rat(35, 8) * v0 ** 4
    reg.add(NamedEquation(
        "statred", "v", "", DiffPoly.zero(),
        5 * _gen("tau5") * r5 + 7 * _gen("tau7") * r7,
        "stationary combination of conserved densities"))


def _rescale_entries(reg: Registry) -> None:
    k0, k1, k3 = _gen("k0"), _gen("k1"), _gen("k3")
    n0, n1, n3 = _gen("n0"), _gen("n1"), _gen("n3")
    reg.add(ConstraintSet(
        "rescale_kdv", ["k0", "k1", "k3"],
        [k0 - 4 * k1 ** 2, k3 + 12 * k1 ** 3],
        "scaling match between the two KdV normalizations"))
    reg.add(ConstraintSet(
        "rescale_pkdv", ["n0", "n1", "n3"],
        [n0 - 2 * n1, n3 + 12 * n1 ** 3],
        "scaling match between the two potential KdV normalizations"))
    reg.add(RealConstant(
        "kappa0", +1, {2: Fraction(2, 5), 3: Fraction(2, 5)},
        "quoted amplitude rescaling"))
    reg.add(RealConstant(
        "kappa1", +1, {2: Fraction(4, 5), 3: Fraction(1, 5)},
        "quoted first-argument rescaling"))
    reg.add(RealConstant(
        "kappa3", -1, {2: Fraction(2, 5), 3: Fraction(2, 5)},
        "quoted third-argument rescaling"))
    reg.add(RealConstant(
        "nu0", -1, {2: Fraction(-1, 4), 3: Fraction(1, 4)},
        "quoted potential amplitude rescaling"))
    reg.add(RealConstant(
        "nu1", -1, {2: Fraction(3, 4), 3: Fraction(1, 4)},
        "quoted potential first-argument rescaling"))
    reg.add(RealConstant(
        "nu3", +1, {2: Fraction(-1, 4), 3: Fraction(1, 4)},
        "quoted potential third-argument rescaling"))


def _sigma_entries(reg: Registry) -> None:
    eta = _gen("eta")
    m0 = _gen("m0s")
    reg.add(NamedEquation(
        "psigma", "", "", DiffPoly.zero(),
        rat(1, 2) * m0 * eta - rat(1, 8) * _gen("eta", -1),
        "small-argument expansion of the diagonal profile"))
    reg.add(NamedEquation(
        "qsigma", "", "", DiffPoly.zero(),
        rat(3, 16) * m0 + rat(9, 128) * _gen("eta", -2),
        "small-argument expansion of the first off-diagonal profile"))
    reg.add(NamedEquation(
        "rsigma", "", "", DiffPoly.zero(),
        -rat(9, 128) * m0 * _gen("eta", -1)
        + rat(39, 512) * _gen("eta", -3),
        "small-argument expansion of the second off-diagonal profile"))


_DEFAULT: Optional[Registry] = None


def build_registry() -> Registry:
    ensure_generators()
    reg = Registry()
    _hierarchy_entries(reg)
    _coords_entries(reg)
    _rescale_entries(reg)
    _sigma_entries(reg)
    from . import laxreg
    laxreg.add_entries(reg)
    return reg


def default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_registry()
    ensure_generators()
    return _DEFAULT
