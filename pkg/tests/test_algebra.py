"""Differential algebra: derivations, Euler operator, formal integration."""

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from kdvkit import algebra as alg
from kdvkit.algebra import DiffPoly, FlowRule
from kdvkit.errors import NotExact, NotJetFamily, UnknownDerivation, UnsupportedTerm
from kdvkit.scalars import I, Scalar, rat


@pytest.fixture(autouse=True)
def fresh_registry():
    alg.reset_generators()
    alg.family("v", {"t1": "jet", "t3": "jet"}, primary="t1")
    alg.family("w", {"t1": "jet"}, primary="t1")
    alg.symbol("g", invertible=True)
    alg.symbol("c1")
    yield
    alg.reset_generators()


def v(n=0, **flows):
    counts = dict(flows)
    if n:
        counts["t1"] = counts.get("t1", 0) + n
    return DiffPoly.jet("v", counts)


def small_polys():
    coeffs = st.builds(lambda p, q: rat(p, q),
                       st.integers(-6, 6), st.integers(1, 4))
    mono = st.lists(st.integers(0, 3), min_size=0, max_size=3).map(
        lambda orders: _mono_from(orders))
    term = st.tuples(coeffs, mono).map(lambda t: t[1] * t[0])
    return st.lists(term, min_size=0, max_size=4).map(
        lambda ts: sum(ts, DiffPoly.zero()))


def _mono_from(orders):
    out = DiffPoly.one()
    for n in orders:
        out = out * v(n)
    return out


# -- ring structure --

@settings(max_examples=60)
@given(small_polys(), small_polys(), small_polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r


@settings(max_examples=60)
@given(small_polys(), small_polys())
def test_derive_is_leibniz(p, q):
    d = (p * q).derive("t1")
    assert d == p.derive("t1") * q + p * q.derive("t1")


def test_derive_chain_profile():
    # s derivation acts on v through the t1 slot with coefficient c1
    alg.family("z", {"t1": "jet", "s": [("t1", DiffPoly.gen("c1"))]},
               primary="t1")
    z = DiffPoly.jet("z", {})
    dz = z.derive("s")
    assert dz == DiffPoly.gen("c1") * DiffPoly.jet("z", {"t1": 1})
    # second derivative picks up the product rule on the coefficient
    dz2 = dz.derive("s")
    expect = DiffPoly.gen("c1") ** 2 * DiffPoly.jet("z", {"t1": 2})
    assert dz2 == expect


def test_symbol_images():
    alg.symbol("t0", images={"t0": DiffPoly.one()})
    p = DiffPoly.gen("t0") ** 2
    assert p.derive("t0") == DiffPoly.gen("t0") * 2
    assert p.derive("t1").is_zero()


def test_unknown_derivation_raises():
    with pytest.raises(UnknownDerivation):
        v().derive("t9")


def test_invertible_symbols():
    g = DiffPoly.gen("g", -2)
    assert (g * DiffPoly.gen("g", 2)) == DiffPoly.one()
    with pytest.raises(UnsupportedTerm):
        DiffPoly.gen("c1", -1)
    # derivative of a negative power
    alg.symbol("a", images={"t1": DiffPoly.one()})
    p = DiffPoly.gen("a")
    alg.symbol("h", invertible=True, images={"t1": p})
    q = DiffPoly.gen("h", -1)
    assert q.derive("t1") == DiffPoly.gen("h", -2) * p * -1


# -- Euler operator and integration --

def test_euler_kills_total_derivatives():
    p = (v(0) ** 3 + v(1) * v(2)).derive("t1")
    assert alg.euler_derivative(p, "v").is_zero()


def test_euler_frozen_value():
    # independently computed by hand: E(v w'') with w=v gives 2 v''
    p = v(0) * v(2)
    assert alg.euler_derivative(p, "v") == v(2) * 2


@settings(max_examples=40)
@given(small_polys())
def test_integrate_inverts_derive(q):
    q = q - DiffPoly.const(q.constant_part())
    p = q.derive("t1")
    got = alg.integrate_total(p)
    assert got.derive("t1") == p
    assert got.constant_part().is_zero()


def test_integrate_rejects_non_exact():
    with pytest.raises(NotExact):
        alg.integrate_total(v(0) * v(2))
    with pytest.raises(NotExact):
        alg.integrate_total(DiffPoly.one())


def test_integrate_known_form():
    # v v' integrates to v^2/2
    p = v(0) * v(1)
    assert alg.integrate_total(p) == v(0) ** 2 * rat(1, 2)
    # 3 v^2 v' -> v^3
    assert alg.integrate_total(v(0) ** 2 * v(1) * 3) == v(0) ** 3


def test_integrate_two_families():
    q = v(0) * DiffPoly.jet("w", {}) + v(1) * DiffPoly.jet("w", {"t1": 2})
    p = q.derive("t1")
    assert alg.integrate_total(p).derive("t1") == p


# -- substitution and reduction --

def test_subs_fixpoint():
    rhs = v(2) + v(0) ** 2
    p = DiffPoly.jet("v", {"t3": 1}) * v(0)
    got = p.subs({("v", (("t3", 1),)): rhs})
    assert got == rhs * v(0)


def test_reduce_on_shell_basic():
    rhs = v(3) * rat(1, 4) + v(0) * v(1) * 3
    rules = [FlowRule("v", "t3", rhs)]
    p = DiffPoly.jet("v", {"t3": 1})
    assert alg.reduce_on_shell(p, rules) == rhs
    # mixed jet v_{t3 t1} reduces to the t1 derivative of the rhs
    m = DiffPoly.jet("v", {"t3": 1, "t1": 1})
    assert alg.reduce_on_shell(m, rules) == rhs.derive("t1")


def test_reduce_on_shell_idempotent():
    rhs = v(3) * rat(1, 4) + v(0) * v(1) * 3
    rules = [FlowRule("v", "t3", rhs)]
    p = DiffPoly.jet("v", {"t3": 2}) + v(0) * DiffPoly.jet("v", {"t3": 1, "t1": 2})
    once = alg.reduce_on_shell(p, rules)
    assert alg.reduce_on_shell(once, rules) == once
    assert once.max_order("v", "t3") <= 0


def test_reduce_commutes_with_derive():
    rhs = v(3) * rat(1, 4) + v(0) * v(1) * 3
    rules = [FlowRule("v", "t3", rhs)]
    p = DiffPoly.jet("v", {"t3": 1}) * v(0) ** 2
    a = alg.reduce_on_shell(p.derive("t1"), rules)
    b = alg.reduce_on_shell(p, rules).derive("t1")
    assert a == b


def test_shift_family():
    alg.family("u", {"t1": "jet"}, primary="t1")
    p = DiffPoly.jet("u", {"t1": 3}) * DiffPoly.jet("u", {"t1": 1})
    got = p.shift_family("u", "t1", "v")
    assert got == v(2) * v(0)
    with pytest.raises(UnsupportedTerm):
        DiffPoly.jet("u", {}).shift_family("u", "t1", "v")


def test_map_generators_conjugation():
    p = v(0) * I + v(1) * 2
    got = p.map_generators(scalar_map=lambda s: s.conj_i())
    assert got == v(0) * -I + v(1) * 2


# -- rendering --

def test_text_canonical():
    rhs = v(3) * rat(1, 4) + v(0) * v(1) * 3
    assert rhs.text() == "1/4*v_3 + 3*v_0*v_1"
    lhs = DiffPoly.jet("v", {"t3": 1})
    assert alg.equation_text(lhs, rhs) == "v_t3 = 1/4*v_3 + 3*v_0*v_1"


def test_text_mixed_and_negative():
    p = DiffPoly.jet("v", {"t3": 1, "t1": 2}) - v(0) ** 2
    assert p.text() == "v_t3_2 - v_0^2"
    assert DiffPoly.zero().text() == "0"


@settings(max_examples=40)
@given(small_polys())
def test_json_round_trip(p):
    assert DiffPoly.from_json(p.json_obj()) == p


def test_json_symbols_round_trip():
    p = DiffPoly.gen("g", -3) * v(1) + DiffPoly.gen("c1") * v(0) * I
    assert DiffPoly.from_json(p.json_obj()) == p


def test_gen_guards():
    with pytest.raises(NotJetFamily):
        DiffPoly.jet("g", {})
    with pytest.raises(UnknownDerivation):
        DiffPoly.gen("nope")
