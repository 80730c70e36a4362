"""Registered data for the connection matrices and expansion identities.

Conventions for the series side.  The expansion matrices of the outer
connection problem carry two scalar functions per half-integer order:
P{j} is the (1,1)-type entry and Q{j} the (1,2)-type entry of the j-th
coefficient matrix (odd orders are trace-free symmetric in the P/Q
pattern, even orders are rotation-like).  Flow derivatives of P{j}, Q{j}
are inert tag symbols dP{j}_{m} and dQ{j}_{m} for the four flow labels
m in {1, 3, 5, 7}.  The pencil entries below store one 2x2 block of
polynomials per power of the spectral variable.

The second connection problem expands in half powers of z; its printed
matrices involve only the y and h families, so no extra generators are
needed for them.
"""

from __future__ import annotations

import copy

from .algebra import DiffPoly, family, symbol
from .errors import MissingSymbol
from .scalars import I, ONE, Scalar, rat

MAX_ORDER = 12
FLOW_LABELS = (1, 3, 5, 7)

_TAU_JETS = {"tau1": "jet", "tau3": "jet", "tau5": "jet", "tau7": "jet"}
_B_NAMES = tuple(f"b{j}" for j in range(11))


def ensure_lax_generators() -> None:
    """Declare the series-side symbols and the pencil coefficient families."""
    for name in _B_NAMES:
        family(name, dict(_TAU_JETS), primary="tau1")
    for j in range(1, MAX_ORDER + 1):
        symbol(f"P{j}")
        symbol(f"Q{j}")
        for m in FLOW_LABELS:
            symbol(f"dP{j}_{m}")
            symbol(f"dQ{j}_{m}")
    symbol("gamma")
    symbol("alpha")
    symbol("c1")


def _g(name: str, exp: int = 1) -> DiffPoly:
    return DiffPoly.gen(name, exp)


def _jet(fam: str, counts, exp: int = 1) -> DiffPoly:
    return DiffPoly.jet(fam, counts, exp)


def _b(j: int) -> DiffPoly:
    return _jet(f"b{j}", {})


def _ut(*flows: str) -> DiffPoly:
    counts: dict = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return _jet("u", counts)


def P(j: int) -> DiffPoly:
    return _g(f"P{j}")


def Q(j: int) -> DiffPoly:
    return _g(f"Q{j}")


def dP(j: int, m: int) -> DiffPoly:
    return _g(f"dP{j}_{m}")


def dQ(j: int, m: int) -> DiffPoly:
    return _g(f"dQ{j}_{m}")


# ---------------------------------------------------------------------------
# entry types specific to this table


class NamedIdentity:
    """A registered identity lhs = rhs between differential polynomials."""

    __slots__ = ("name", "lhs", "rhs", "citation")

    def __init__(self, name: str, lhs: DiffPoly, rhs: DiffPoly,
                 citation: str):
        self.name = name
        self.lhs = lhs
        self.rhs = rhs
        self.citation = citation

    def residual(self) -> DiffPoly:
        return self.lhs - self.rhs

    def json_obj(self) -> dict:
        return {"name": self.name, "lhs": self.lhs.json_obj(),
                "rhs": self.rhs.json_obj(), "citation": self.citation}

    def corrupt(self, slot: int = 0) -> None:
        target = self.rhs if self.rhs.sorted_terms() else self.lhs
        terms = target.sorted_terms()
        m, c0 = terms[slot % len(terms)]
        t = dict(target.terms)
        t[m] = c0 + ONE
        target.terms = {k: v for k, v in t.items() if not v.is_zero()}

    def __repr__(self):
        return f"NamedIdentity({self.name})"


class MatrixPencil:
    """A 2x2 matrix polynomial in the spectral variable.

    entries maps an integer power to a row-major 4-tuple of DiffPolys.
    """

    __slots__ = ("name", "entries", "citation")

    def __init__(self, name: str, entries: dict, citation: str):
        self.name = name
        self.entries = {int(p): tuple(block) for p, block in entries.items()}
        self.citation = citation

    def block(self, power: int):
        z = DiffPoly.zero()
        return self.entries.get(power, (z, z, z, z))

    def powers(self):
        return sorted(self.entries)

    def json_obj(self) -> dict:
        return {"name": self.name,
                "entries": {str(p): [e.json_obj() for e in blk]
                            for p, blk in self.entries.items()},
                "citation": self.citation}

    def corrupt(self, slot: int = 0) -> None:
        flat = [(p, i) for p in self.powers() for i in range(4)
                if not self.entries[p][i].is_zero()]
        p, i = flat[slot % len(flat)]
        blk = list(self.entries[p])
        poly = blk[i]
        m, c0 = poly.sorted_terms()[0]
        t = dict(poly.terms)
        t[m] = c0 + ONE
        out = DiffPoly.__new__(DiffPoly)
        out.terms = {k: v for k, v in t.items() if not v.is_zero()}
        blk[i] = out
        self.entries[p] = tuple(blk)

    def __repr__(self):
        return f"MatrixPencil({self.name}, powers={self.powers()})"


class SeriesTargets:
    """Expected coefficients of a bilinear series collapse.

    table maps (power, oscillator exponent) to the exact expected value;
    every other retained coefficient is expected to vanish.
    """

    __slots__ = ("name", "table", "citation")

    def __init__(self, name: str, table: dict, citation: str):
        self.name = name
        self.table = {(int(a), int(b)): v for (a, b), v in table.items()}
        self.citation = citation

    def expected(self, power: int, osc: int) -> DiffPoly:
        return self.table.get((power, osc), DiffPoly.zero())

    def json_obj(self) -> dict:
        return {"name": self.name,
                "table": {f"{a},{b}": v.json_obj()
                          for (a, b), v in self.table.items()},
                "citation": self.citation}

    def corrupt(self, slot: int = 0) -> None:
        keys = sorted(self.table)
        key = keys[slot % len(keys)]
        self.table[key] = self.table[key] + DiffPoly.one()

    def __repr__(self):
        return f"SeriesTargets({self.name})"


# ---------------------------------------------------------------------------
# pencil shapes for the first connection problem


def _pencil_entries(reg) -> None:
    u1 = _ut("tau1")
    z = DiffPoly.zero()
    one = DiffPoly.one()

    reg.add(MatrixPencil("B1", {
        1: (z, z, one, z),
        0: (z, one, _b(0), z),
    }, "first connection pencil"))

    reg.add(MatrixPencil("B3", {
        2: (z, z, one, z),
        1: (z, one, -u1, z),
        0: (_b(1), u1, _b(2), -_b(1)),
    }, "second connection pencil"))

    reg.add(MatrixPencil("B5", {
        3: (z, z, one, z),
        2: (z, one, -u1, z),
        1: (_b(1), u1, _b(5), -_b(1)),
        0: (_b(3), _b(4), _b(6), -_b(3)),
    }, "third connection pencil"))

    reg.add(MatrixPencil("B7", {
        4: (z, z, one, z),
        3: (z, one, -u1, z),
        2: (_b(1), u1, _b(5), -_b(1)),
        1: (_b(3), _b(4), _b(9), -_b(3)),
        0: (_b(7), _b(8), _b(10), -_b(7)),
    }, "fourth connection pencil"))

    reg.add(NamedIdentity(
        "b5_def", _b(5), _b(2) + _ut("tau3"),
        "pencil side relation for the z^1 lower-left block"))
    reg.add(NamedIdentity(
        "b9_def", _b(9), _b(6) + _ut("tau5"),
        "pencil side relation for the z^1 lower-left block, fourth flow"))


def _coefficient_solutions(reg) -> None:
    """Printed images of the pencil coefficients in terms of u."""
    sols = {
        0: -2 * _ut("tau1"),
        1: -rat(1, 2) * _ut("tau1", "tau1"),
        2: -2 * _ut("tau1") ** 2 - rat(1, 2) * _ut("tau1", "tau1", "tau1"),
        3: -rat(1, 2) * _ut("tau1", "tau3"),
        4: _ut("tau3"),
        6: -2 * _ut("tau1") * _ut("tau3")
        - rat(1, 2) * _ut("tau3", "tau1", "tau1"),
        7: -rat(1, 2) * _ut("tau1", "tau5"),
        8: _ut("tau5"),
        10: -2 * _ut("tau5") * _ut("tau1")
        - rat(1, 2) * _ut("tau1", "tau1", "tau5"),
    }
    flow_of = {0: "first", 1: "first", 2: "first",
               3: "second", 4: "second", 6: "second",
               7: "third", 8: "third", 10: "third"}
    for j, rhs in sols.items():
        reg.add(NamedIdentity(
            f"b{j}_sol", _b(j), rhs,
            f"coefficient solution, {flow_of[j]} compatibility system"))

    reg.add(NamedIdentity(
        "proofkdv1",
        6 * _ut("tau1") * _ut("tau1", "tau1")
        + rat(1, 2) * _ut("tau1", "tau1", "tau1", "tau1")
        - 2 * _ut("tau3", "tau1"),
        DiffPoly.zero(),
        "leftover condition of the first compatibility system"))
    reg.add(NamedIdentity(
        "proofkdv2",
        4 * _ut("tau1") * _ut("tau3", "tau1")
        + 2 * _ut("tau1", "tau1") * _ut("tau3")
        - 2 * _ut("tau5", "tau1")
        + rat(1, 2) * _ut("tau3", "tau1", "tau1", "tau1"),
        DiffPoly.zero(),
        "leftover condition of the second compatibility system"))
    reg.add(NamedIdentity(
        "proofkdv3",
        4 * _ut("tau1") * _ut("tau5", "tau1")
        + 2 * _ut("tau1", "tau1") * _ut("tau5")
        - 2 * _ut("tau7", "tau1")
        + rat(1, 2) * _ut("tau5", "tau1", "tau1", "tau1"),
        DiffPoly.zero(),
        "leftover condition of the third compatibility system"))

    reg.add(NamedIdentity(
        "apppkdv1", _b(2),
        rat(1, 4) * _b(0) ** 2 - 2 * _ut("tau3"),
        "first potential-flow closure identity"))
    reg.add(NamedIdentity(
        "apppkdv2", _b(6),
        -_b(1) ** 2 + rat(1, 8) * _b(0) ** 3 - _b(0) * _b(4)
        - 2 * _ut("tau5"),
        "second potential-flow closure identity"))
    reg.add(NamedIdentity(
        "apppkdv3", _b(10),
        rat(1, 2) * _b(0) * _b(6) - 2 * _b(1) * _b(3) - _b(4) * _b(5)
        - 2 * _ut("tau7"),
        "third potential-flow closure identity"))


# ---------------------------------------------------------------------------
# series-side identities (expansion coefficients of the outer problem)


def _series_entries(reg) -> None:
    P1, P2, P3, P4, P5 = (P(j) for j in (1, 2, 3, 4, 5))
    Q1, Q2, Q3, Q4, Q5, Q6 = (Q(j) for j in range(1, 7))

    reg.add(NamedIdentity(
        "xrel2", P2, rat(1, 2) * (P1 ** 2 + Q1 ** 2),
        "second-order trace relation of the outer expansion"))
    reg.add(NamedIdentity(
        "xrel4", P4,
        -rat(1, 2) * (P2 ** 2 + Q2 ** 2) + P1 * P3 + Q1 * Q3,
        "fourth-order trace relation of the outer expansion"))

    reg.add(NamedIdentity(
        "u_x", _jet("u", {}), P1 + I * Q1,
        "series form of the first logarithmic-derivative coefficient"))

    reg.add(NamedIdentity(
        "v_x", _jet("v", {}),
        -2 * I * P1 * Q1 + 2 * Q1 ** 2 - 2 * I * Q2,
        "series form of the second logarithmic-derivative coefficient"))

    reg.add(NamedIdentity(
        "b1_x", _b(1),
        -2 * I * P1 ** 2 * Q1 + 4 * P1 * Q1 ** 2 - 2 * I * P1 * Q2
        + 2 * I * P2 * Q1 + 2 * I * Q1 ** 3 + 4 * Q1 * Q2 - 2 * I * Q3,
        "series image of the second-pencil diagonal coefficient"))

    reg.add(NamedIdentity(
        "b2_x", _b(2),
        2 * I * P1 ** 3 * Q1 - 6 * P1 ** 2 * Q1 ** 2
        + 2 * I * P1 ** 2 * Q2 - 4 * I * P1 * P2 * Q1
        - 6 * I * P1 * Q1 ** 3 - 8 * P1 * Q1 * Q2 + 2 * I * P1 * Q3
        + 4 * P2 * Q1 ** 2 - 2 * I * P2 * Q2 + 2 * I * P3 * Q1
        + 2 * Q1 ** 4 - 6 * I * Q1 ** 2 * Q2 - 4 * Q1 * Q3
        - 2 * Q2 ** 2 + 2 * I * Q4 - dP(1, 3) - I * dQ(1, 3),
        "series image of the second-pencil lower-left coefficient"))

    reg.add(NamedIdentity(
        "du3_x", dP(1, 3) + I * dQ(1, 3),
        -I * P1 ** 2 * Q2 - 2 * I * P1 * Q3 - 2 * I * P3 * Q1
        - I * Q1 ** 2 * Q2 + 4 * Q1 * Q3 - 2 * Q2 ** 2 - 2 * I * Q4,
        "series image of the second-flow derivative"))

    reg.add(NamedIdentity(
        "b3_x", _b(3),
        rat(1, 4) * I * P1 ** 4 * Q1 + rat(1, 2) * I * P1 ** 2 * Q1 ** 3
        + 2 * P1 ** 2 * Q1 * Q2 - I * P1 ** 2 * Q3
        - 2 * I * P1 * P3 * Q1 + 4 * P1 * Q1 * Q3 - 2 * I * P1 * Q4
        + 4 * P3 * Q1 ** 2 - 2 * I * P3 * Q2 + rat(1, 4) * I * Q1 ** 5
        + 2 * Q1 ** 3 * Q2 + 5 * I * Q1 ** 2 * Q3
        - 3 * I * Q1 * Q2 ** 2 + 4 * Q1 * Q4 - 2 * I * Q5,
        "series image of the third-pencil diagonal coefficient"))

    reg.add(NamedIdentity(
        "b4_x", _b(4),
        -2 * I * P1 ** 3 * Q1 + 2 * P1 ** 2 * Q1 ** 2
        - 2 * I * P1 ** 2 * Q2 + 4 * I * P1 * P2 * Q1
        - 2 * I * P1 * Q1 ** 3 - 2 * I * P1 * Q3 - 4 * P2 * Q1 ** 2
        + 2 * I * P2 * Q2 - 2 * I * P3 * Q1 + 2 * Q1 ** 4
        - 2 * I * Q1 ** 2 * Q2 + 4 * Q1 * Q3 - 2 * Q2 ** 2 - 2 * I * Q4,
        "series image of the third-pencil upper-right coefficient"))

    reg.add(NamedIdentity(
        "b6_x", _b(6),
        P1 ** 4 * Q1 ** 2 + 2 * P1 ** 2 * Q1 ** 4
        - 4 * I * P1 ** 2 * Q1 ** 2 * Q2 - 4 * P1 ** 2 * Q1 * Q3
        - 8 * P1 * P3 * Q1 ** 2 - 8 * I * P1 * Q1 ** 2 * Q3
        - 8 * P1 * Q1 * Q4 - 8 * I * P3 * Q1 ** 3 - 8 * P3 * Q1 * Q2
        + Q1 ** 6 - 4 * I * Q1 ** 4 * Q2 + 4 * Q1 ** 3 * Q3
        - 4 * Q1 ** 2 * Q2 ** 2 - 8 * I * Q1 ** 2 * Q4 - 8 * Q2 * Q4
        + 4 * Q3 ** 2 - 2 * dP(1, 5) - 2 * I * dQ(1, 5),
        "series image of the third-pencil lower-left coefficient"))

    reg.add(NamedIdentity(
        "b8_x", _b(8),
        rat(1, 4) * I * P1 ** 4 * Q2
        + rat(1, 2) * I * P1 ** 2 * Q1 ** 2 * Q2 - I * P1 ** 2 * Q4
        - 2 * I * P1 * P3 * Q2 - 2 * I * P1 * Q5 - 2 * I * P3 * Q3
        - 2 * I * P5 * Q1 + rat(1, 4) * I * Q1 ** 4 * Q2
        - I * Q1 ** 2 * Q4 - 2 * I * Q1 * Q2 * Q3 + 4 * Q1 * Q5
        + I * Q2 ** 3 - 4 * Q2 * Q4 + 2 * Q3 ** 2 - 2 * I * Q6,
        "series image of the fourth-pencil upper-right coefficient"))

    reg.add(NamedIdentity(
        "b10_x", _b(10),
        -rat(1, 2) * P1 ** 6 * Q1 ** 2 - rat(3, 2) * P1 ** 4 * Q1 ** 4
        + I * P1 ** 4 * Q1 ** 2 * Q2 + P1 ** 4 * Q1 * Q3
        + 4 * P1 ** 3 * P3 * Q1 ** 2 - rat(3, 2) * P1 ** 2 * Q1 ** 6
        + 2 * I * P1 ** 2 * Q1 ** 4 * Q2 + 6 * P1 ** 2 * Q1 ** 3 * Q3
        - 2 * P1 ** 2 * Q1 ** 2 * Q2 ** 2
        - 4 * I * P1 ** 2 * Q1 ** 2 * Q4 - 4 * P1 ** 2 * Q1 * Q5
        + 4 * P1 * P3 * Q1 ** 4 - 8 * I * P1 * P3 * Q1 ** 2 * Q2
        - 8 * P1 * P3 * Q1 * Q3 - 8 * P1 * P5 * Q1 ** 2
        - 8 * I * P1 * Q1 ** 2 * Q5 - 8 * P1 * Q1 * Q6
        - 4 * P3 ** 2 * Q1 ** 2 - 8 * I * P3 * Q1 ** 2 * Q3
        - 8 * P3 * Q1 * Q4 - 8 * I * P5 * Q1 ** 3 - 8 * P5 * Q1 * Q2
        - rat(1, 2) * Q1 ** 8 + I * Q1 ** 6 * Q2 + 5 * Q1 ** 5 * Q3
        - 2 * Q1 ** 4 * Q2 ** 2 - 4 * I * Q1 ** 4 * Q4
        - 8 * I * Q1 ** 3 * Q2 * Q3 + 4 * Q1 ** 3 * Q5
        + 4 * I * Q1 ** 2 * Q2 ** 3 - 8 * Q1 ** 2 * Q2 * Q4
        - 4 * Q1 ** 2 * Q3 ** 2 - 8 * I * Q1 ** 2 * Q6
        + 4 * Q1 * Q2 ** 2 * Q3 - 8 * Q2 * Q6 + 8 * Q3 * Q5
        - 4 * Q4 ** 2 - 2 * dP(1, 7) - 2 * I * dQ(1, 7),
        "series image of the fourth-pencil lower-left coefficient"))


# ---------------------------------------------------------------------------
# carrier-side identities for the first expansion coefficients


def _carrier_entries(reg) -> None:
    gamma = _g("gamma")
    alpha = _g("alpha")
    c1 = _g("c1")
    h = _jet("h", {})
    y = _jet("y", {})
    g = _g  # fractional carrier: g**7 = s0

    c1_val = rat(1, 4) * _g("s1", 2) * _g("t1") * g("g", -11) \
        - _g("s1") * _g("t0") * g("g", -6) \
        + rat(5, 64) * _g("s1", 4) * g("g", -21)

    reg.add(NamedIdentity(
        "c1_def", c1, c1_val,
        "shift constant of the first expansion coefficient"))

    reg.add(NamedIdentity(
        "x11_1", P(1),
        rat(1, 2) * gamma * g("g", -1) + c1 + h * g("g", -1),
        "first expansion coefficient, diagonal entry"))
    reg.add(NamedIdentity(
        "x12_1", Q(1),
        rat(1, 2) * I * gamma * g("g", -1),
        "first expansion coefficient, off-diagonal entry"))
    reg.add(NamedIdentity(
        "x11_2", P(2),
        rat(1, 2) * gamma * c1 * g("g", -1)
        + rat(1, 2) * gamma * h * g("g", -2) + rat(1, 2) * c1 ** 2
        + c1 * h * g("g", -1) + rat(1, 2) * h ** 2 * g("g", -2),
        "second expansion coefficient, diagonal entry"))
    reg.add(NamedIdentity(
        "x12_2", Q(2),
        I * (rat(1, 2) * gamma * c1 * g("g", -1)
             + rat(1, 2) * gamma * h * g("g", -2) + alpha * g("g", -2)
             - rat(1, 4) * _g("s1") * g("g", -7)
             + rat(1, 2) * y * g("g", -2)),
        "second expansion coefficient, off-diagonal entry"))

    reg.add(NamedIdentity(
        "uvsX", P(1) + I * Q(1),
        -gamma * g("g", -1) - h * g("g", -1) - c1_val,
        "carrier form of the first logarithmic-derivative coefficient"))
    reg.add(NamedIdentity(
        "vvsX", -2 * I * P(1) * Q(1) + 2 * Q(1) ** 2 - 2 * I * Q(2),
        2 * alpha * g("g", -2) - gamma ** 2 * g("g", -2)
        + y * g("g", -2) - rat(1, 2) * _g("s1") * g("g", -7),
        "carrier form of the second logarithmic-derivative coefficient"))


# ---------------------------------------------------------------------------
# second connection problem (half-power expansion in z)


def _inner_entries(reg) -> None:
    z = DiffPoly.zero()

    def yj(*flows: str) -> DiffPoly:
        counts: dict = {}
        for f in flows:
            counts[f] = counts.get(f, 0) + 1
        return _jet("y", counts)

    def hj(*flows: str) -> DiffPoly:
        counts: dict = {}
        for f in flows:
            counts[f] = counts.get(f, 0) + 1
        return _jet("h", counts)

    y = yj()
    y0 = yj("t0")
    y00 = yj("t0", "t0")
    y000 = yj("t0", "t0", "t0")
    t0 = _g("t0")
    t1 = _g("t1")

    reg.add(MatrixPencil("W", {
        1: (z, z, DiffPoly.const(Scalar.of(-2)), z),
        0: (z, DiffPoly.const(Scalar.of(-2)), 2 * y + hj("t0"), z),
    }, "first inner connection matrix"))

    reg.add(MatrixPencil("V", {
        2: (z, z, DiffPoly.const(rat(2, 3)), z),
        1: (z, DiffPoly.const(rat(2, 3)), -rat(2, 3) * y, z),
        0: (rat(1, 6) * y0, rat(2, 3) * y,
            rat(2, 3) * y ** 2 + 2 * hj("t1"), -rat(1, 6) * y0),
    }, "second inner connection matrix"))

    reg.add(MatrixPencil("U", {
        3: (z, z, DiffPoly.one(), z),
        2: (z, DiffPoly.one(), -y, z),
        1: (rat(1, 4) * y0, y,
            t1 - rat(1, 2) * y ** 2 - rat(1, 16) * y00,
            -rat(1, 4) * y0),
        0: (rat(3, 4) * y * y0 + rat(1, 64) * y000,
            rat(3, 2) * y ** 2 + rat(1, 16) * y00 + t1,
            2 * y ** 3 + rat(1, 8) * y * y00 - rat(1, 16) * y0 ** 2
            - 2 * t0,
            -rat(3, 4) * y * y0 - rat(1, 64) * y000),
    }, "spectral inner connection matrix"))

    reg.add(NamedIdentity(
        "density_mid", DiffPoly.zero(),
        rat(1, 4) * y0 * _g("z") - yj("t1"),
        "printed middle coefficient of the kernel bilinear form"))

    reg.add(NamedIdentity(
        "inner_trace", 3 * y ** 2 + rat(1, 8) * y00 + 3 * hj("t1"),
        DiffPoly.zero(),
        "trace relation from the spectral limit of the inner system"))

    reg.add(SeriesTargets(
        "density_targets",
        {(5, 0): 2 * I * DiffPoly.one(),
         (1, 0): 2 * I * _g("t1")},
        "edge coefficients of the kernel diagonal"))


def add_entries(reg) -> None:
    ensure_lax_generators()
    _pencil_entries(reg)
    _coefficient_solutions(reg)
    _series_entries(reg)
    _carrier_entries(reg)
    _inner_entries(reg)
