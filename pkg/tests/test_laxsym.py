"""Connection pencils, half-power series engines, and the density collapse."""

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from kdvkit import laxsym as lx
from kdvkit.algebra import DiffPoly, FlowRule, reduce_on_shell
from kdvkit.errors import (
    InconsistentSystem,
    NonCollapsing,
    TruncationTooShallow,
)
from kdvkit.hierarchy import (
    eval_at,
    exact_multiple,
    h_flow_rhs,
    handy_rhs,
    kdv_rhs,
    pi2_poly,
    y_flow_rhs,
)
from kdvkit.laxsym import HalfSeries, MatZPoly
from kdvkit.scalars import I, MINUS_ONE, ONE, Scalar, ZERO, rat


@pytest.fixture(autouse=True)
def _gens():
    lx.ensure_series_generators()
    yield
    lx.ensure_series_generators()


def jet(fam, counts, exp=1):
    return DiffPoly.jet(fam, counts, exp)


def gen(name, exp=1):
    return DiffPoly.gen(name, exp)


def u(n, exp=1):
    return jet("u", {"tau1": n}, exp)


def yj(*flows):
    counts = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return jet("y", counts)


def hj(*flows):
    counts = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return jet("h", counts)


# -- matrix ring --------------------------------------------------------


def small_entries():
    coeffs = st.builds(lambda p, q: rat(p, q),
                       st.integers(-4, 4), st.integers(1, 3))
    mono = st.lists(st.integers(0, 2), min_size=0, max_size=2).map(
        lambda orders: _mono_from(orders))
    term = st.tuples(coeffs, mono).map(lambda t: t[1] * t[0])
    return st.lists(term, min_size=0, max_size=3).map(
        lambda ts: sum(ts, DiffPoly.zero()))


def _mono_from(orders):
    out = DiffPoly.one()
    for n in orders:
        out = out * u(n)
    return out


def small_matrices():
    return st.builds(MatZPoly, small_entries(), small_entries(),
                     small_entries(), small_entries())


@settings(max_examples=25, deadline=None)
@given(small_matrices(), small_matrices())
def test_det_is_multiplicative(A, B):
    assert (A * B).det() == A.det() * B.det()


@settings(max_examples=25, deadline=None)
@given(small_matrices(), small_matrices())
def test_commutator_is_traceless(A, B):
    assert A.commutator(B).trace().is_zero()


def test_matrix_entry_layout():
    M = MatZPoly(DiffPoly.one(), DiffPoly.zero(),
                 u(0), DiffPoly.const(I))
    assert M.entry(0, 0) == DiffPoly.one()
    assert M.entry(1, 0) == u(0)
    assert M.entry(1, 1) == DiffPoly.const(I)


# -- half-power series --------------------------------------------------


def test_halfseries_product_floor():
    A = HalfSeries({0: MatZPoly.identity(), -3: MatZPoly.identity()}, -3)
    B = HalfSeries({0: MatZPoly.identity(), -2: MatZPoly.identity()}, -2)
    P = A * B
    # either factor's unknown tail can reach exponent -3 and below
    assert P.low == -2
    assert P.coeff(-2) == MatZPoly.identity()


def test_halfseries_floor_guard():
    A = HalfSeries({0: MatZPoly.identity()}, -1)
    with pytest.raises(TruncationTooShallow):
        A.coeff(-2)


def test_quarter_conj_moves_offdiagonal():
    M = MatZPoly(DiffPoly.zero(), DiffPoly.one(),
                 DiffPoly.one(), DiffPoly.zero())
    S = HalfSeries({0: M}, -2)
    K = S.quarter_conj()
    assert K.low == -1
    assert K.coeff(-1).entry(0, 1) == DiffPoly.one()
    assert K.coeff(1).entry(1, 0) == DiffPoly.one()


def test_n_matrix_inverts():
    assert (lx.n_matrix() * lx.n_matrix_inv()) == MatZPoly.identity()
    # quarter roots square to +-i
    assert lx._quarter_root(1) * lx._quarter_root(1) == I
    assert lx._quarter_root(-1) * lx._quarter_root(-1) == MINUS_ONE * I


# -- zero curvature for the polynomial pencils --------------------------


@pytest.mark.parametrize("k,names", [
    (3, {"b0", "b1", "b2"}),
    (5, {"b3", "b4", "b6"}),
    (7, {"b7", "b8", "b10"}),
])
def test_zero_curvature_solves_new_coefficients(k, names):
    rep = lx.zero_curvature(k)
    assert set(rep["solved"]) == names
    assert not rep["pde"].is_zero()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zero_curvature_reproduces_flows(k):
    rep = lx.zero_curvature_flow(k)
    assert rep["status"] == "PASS"
    assert rep["match"]


@pytest.mark.parametrize("j", [1, 2, 3])
def test_closure_residuals_vanish(j):
    assert lx.closure_residual(j).is_zero()


@pytest.mark.parametrize("j", [1, 2, 3])
def test_potential_reproduction(j):
    assert lx.potential_reproduction(j)["status"] == "PASS"


@pytest.mark.parametrize("k", [1, 2, 3])
def test_structural_pencils(k):
    rep = lx.verify_CAD(k)
    assert rep["status"] == "PASS"
    assert rep["residual"].is_zero()


# -- series relations in the algebraic symbols --------------------------


@pytest.mark.parametrize("m", [1, 3, 5, 7])
def test_series_relations_solve_all_tags(m):
    rep = lx.series_relations(m)
    assert not rep["leftovers"]
    assert len(rep["tags"]) == 8
    assert f"dP1_{m}" in rep["tags"]


def test_first_flow_matches_alias():
    assert (lx.u_flow_image(1) - lx.SymbolBank.v_alias()).is_zero()


def test_uv_consistency_report():
    rep = lx.uv_consistency()
    assert rep["status"] == "PASS"
    assert rep["residual"].is_zero()
    assert rep["negative_control_nonzero"]
    assert rep["trivial_zero"]


def test_first_determinant_relation():
    d = lx.det_relations()
    P1, P2 = lx.SymbolBank.P(1), lx.SymbolBank.P(2)
    Q1 = lx.SymbolBank.Q(1)
    assert d[2] == 2 * P2 - P1 ** 2 - Q1 ** 2


def test_determinant_relations_are_flow_flat():
    rep = lx.relation_flatness(8)
    assert all(r.is_zero() for r in rep["residuals"].values())


def test_even_elimination_normalizes_relations():
    for c in lx.det_relations().values():
        assert lx.normalize_even(c).is_zero()


def test_first_pencil_entry_frozen():
    P1 = lx.SymbolBank.P(1)
    Q1, Q2 = lx.SymbolBank.Q(1), lx.SymbolBank.Q(2)
    b0 = 4 * I * Q2 + 4 * I * P1 * Q1 - 4 * Q1 ** 2
    assert lx.pencil_entries(1)["b0"] == b0


def test_coefficient_closure_identities():
    assert lx.appendixA_identities()["status"] == "PASS"


def test_carrier_checks():
    rep = lx.carrier_checks()
    assert rep["status"] == "PASS"
    gamma = (-2 * hj() + 2 * gen("g", -5) * gen("s1") * gen("t0")
             - rat(1, 2) * gen("g", -10) * gen("s1", 2) * gen("t1")
             - rat(5, 32) * gen("g", -20) * gen("s1", 4))
    assert lx.gamma_image() == gamma


# -- inner connection system --------------------------------------------


def test_inner_compat_first_multipliers():
    rep = lx.compat_first()
    assert rep["multipliers"] == {(1, 1, 0): MINUS_ONE, (2, 2, 0): ONE}


def test_inner_compat_second_multiplier():
    rep = lx.compat_second()
    assert rep["multipliers"] == {(2, 1, 0): Scalar.of(2)}


def test_inner_compat_rejects_corruption():
    bad = lx.inner_v_twin() + MatZPoly(
        DiffPoly.zero(), DiffPoly.one(), DiffPoly.zero(), DiffPoly.zero())
    with pytest.raises(NonCollapsing):
        lx.compat_second(v_mat=bad)


def test_derived_first_connection_matches_twin():
    assert (lx.derived_inner_w() - lx.inner_w_twin()).is_zero()


def test_first_derivative_relation_extraction():
    rep = lx.handy_extraction()
    assert rep["multiplier"] == ONE
    assert rep["condition"] == hj("t0") - 2 * yj()


def test_trace_relation_reduces_to_zero():
    rules = [FlowRule("h", "t1", h_flow_rhs()),
             FlowRule("h", "t0", handy_rhs())]
    assert reduce_on_shell(lx.trace_relation_poly(), rules).is_zero()
    # the first-derivative variant does not close
    variant = 3 * yj() ** 2 + rat(1, 8) * yj("t0") + 3 * hj("t1")
    left = reduce_on_shell(variant, rules)
    assert left == rat(1, 8) * yj("t0") - rat(1, 8) * yj("t0", "t0")


def test_inner_lax_report():
    assert lx.appendixB_lax()["status"] == "PASS"


# -- spectral-derivative solution ---------------------------------------


def test_unknown_images_start():
    imgs = lx.inner_unknown_images()
    assert imgs["phr1"] == rat(1, 8) * yj("t0") + rat(1, 2) * hj() * yj()
    assert imgs["phw1"] == (rat(1, 32) * yj("t0", "t0")
                            + rat(1, 8) * hj() * yj("t0")
                            + rat(1, 2) * yj() ** 2
                            + rat(1, 4) * hj() ** 2 * yj())


def test_first_integral_is_flat():
    ints = lx.inner_first_integrals()
    assert len(ints) == 1
    rel = ints[0]
    assert rel.contains("h")
    flat = reduce_on_shell(rel.derive("t0"), list(lx.inner_rules()))
    assert flat.is_zero()


def test_fourth_order_rule_matches_equation():
    rule = lx._pi2_order4_rule()
    restored = rat(1, 64) * (jet("y", {"t0": 4}) - rule.rhs)
    assert (restored - pi2_poly()).is_zero()


# -- density collapse ----------------------------------------------------


def test_density_targets():
    s = lx.density_expansion()
    assert s.coeff(5) == DiffPoly.const(2 * I)
    assert s.coeff(1) == (2 * I) * gen("t1")
    for p in (0, 2, 3, 4):
        assert s.coeff(p).is_zero()


def test_density_mid_discrimination():
    rep = lx.density_report()
    assert rep["status"] == "PASS"
    assert rep["mid"] == "spectral-matrix diagonal"
    assert rep["other_mid_residual"]
    assert all("y_t1" in line for line in rep["other_mid_residual"])


def test_density_certified_mid_is_diagonal_entry():
    assert lx.density_mid_certified() == lx.inner_u_twin().entry(0, 0)


def test_displayed_mid_residual_is_flow_anchored():
    # verbatim residual equals i*(y_t1 + 3/4 y y' + 1/64 y''') at both
    # oscillator signs of the constant order
    _, failures = lx._density_check(False)
    assert len(failures) == 2
    resid = yj("t1") + rat(3, 4) * yj() * yj("t0") \
        + rat(1, 64) * yj("t0", "t0", "t0")
    # even on the evolution shell the difference survives
    on_shell = eval_at(resid, "y", yj()) - resid
    assert on_shell.is_zero()
    reduced = reduce_on_shell(resid, [FlowRule("y", "t1", y_flow_rhs())])
    assert not reduced.is_zero()


def test_density_depth_guard():
    with pytest.raises(TruncationTooShallow):
        lx.density_expansion(order=-20)


def test_density_deeper_order_exposes_next_terms():
    s = lx.density_expansion(order=-1)
    assert -1 in s.powers()
