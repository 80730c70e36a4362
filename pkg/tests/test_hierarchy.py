"""Exact checks for the recursion-built flows and cross-normalizations."""

import pytest

from kdvkit.algebra import DiffPoly, euler_derivative
from kdvkit.hierarchy import (
    chain_profile,
    commuting_residual,
    equation_line,
    exact_multiple,
    htilde_poly,
    kdv_rhs,
    lenard,
    lenard_closure_residual,
    miura_flow_rhs,
    miura_verify,
    pii3_flow_brackets,
    pii3_residual,
    pkdv_rhs,
    pkdv_to_kdv,
    rescale_constraints,
    rescale_residual,
    solve_triangular,
    stationary_reduction_verify,
    t0_inverse,
    t1_inverse,
    tilde_verify,
    ytilde_poly,
)
from kdvkit.registry import default_registry, ensure_generators
from kdvkit.scalars import Scalar, rat


@pytest.fixture(autouse=True)
def _gens():
    ensure_generators()
    yield
    ensure_generators()


def jet(fam, counts, exp=1):
    return DiffPoly.jet(fam, counts, exp)


def gen(name, exp=1):
    return DiffPoly.gen(name, exp)


def v(n, exp=1):
    return jet("v", {"tau1": n}, exp)


REG = default_registry()


# -- recursion ----------------------------------------------------------


def test_lenard_base_and_first_step():
    assert lenard(0) == v(0)
    assert lenard(1) == rat(1, 4) * v(2) + rat(3, 2) * v(0) ** 2


def test_lenard_second_element_frozen():
    expect = rat(1, 16) * v(4) + rat(5, 4) * v(0) * v(2) \
        + rat(5, 8) * v(1) ** 2 + rat(5, 2) * v(0) ** 3
    assert lenard(2) == expect


def test_lenard_closure_through_depth_five():
    for k in range(1, 6):
        assert lenard_closure_residual(k).is_zero()
    assert not lenard(5).is_zero()


def test_flow_rhs_total_derivatives():
    for k in (1, 2, 3):
        assert euler_derivative(kdv_rhs(k), "v", "tau1").is_zero()


# -- printed forms ------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kdv_rhs_matches_registered_form(k):
    entry = REG.get(f"kdv{k}")
    assert kdv_rhs(k) == entry.rhs
    assert entry.lhs == jet("v", {entry.flow: 1})


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pkdv_rhs_matches_registered_form(k):
    entry = REG.get(f"pkdv{k}")
    assert pkdv_rhs(k) == entry.rhs


def test_canonical_first_flow_line():
    assert equation_line("kdv", 1) == "v_t3 = 1/4*v_3 + 3*v_0*v_1"


def test_registry_mutation_breaks_comparison():
    bad = REG.mutated("kdv2")
    assert kdv_rhs(2) != bad.get("kdv2").rhs


# -- commutativity ------------------------------------------------------


def test_first_two_flows_commute():
    assert commuting_residual(1, 2).is_zero()


def test_first_and_third_flows_commute():
    assert commuting_residual(1, 3).is_zero()


# -- Miura --------------------------------------------------------------


def test_miura_verify_passes():
    rep = miura_verify()
    assert rep["status"] == "PASS"
    assert rep["residual"].is_zero()
    assert rep["negative_control_nonzero"]
    assert rep["trivial_zero"]


def test_miura_verify_with_registry_copy():
    rep = miura_verify(REG.get("miura_map").rhs)
    assert rep["status"] == "PASS"


def test_mkdv_tau_form_consistent_with_scale_constant():
    folded = miura_flow_rhs().subs({("c", ()): 2 * gen("ct")})
    assert folded == REG.get("mkdv_tau").rhs


# -- composed profiles --------------------------------------------------


def test_inverse_lines_match_registry():
    assert t0_inverse() == REG.get("t0_inv").rhs
    assert t1_inverse() == REG.get("t1_inv").rhs


def test_coordinate_change_roundtrip_exact():
    inv = {("s1", ()): gen("tau5"),
           ("t1", ()): t1_inverse(),
           ("t0", ()): t0_inverse()}
    assert REG.get("tau1_of").rhs.subs(inv) == gen("tau1")
    assert REG.get("tau3_of").rhs.subs(inv) == gen("tau3")
    assert REG.get("tau5_of").rhs == gen("s1")
    assert REG.get("tau7_of").rhs == rat(2, 7) * gen("g", 7)


def test_chain_profile_matches_inverse_lines():
    prof = chain_profile()
    assert prof["tau1"][0][1] == -rat(1, 2) * gen("g", -1)
    d3 = dict(prof["tau3"])
    assert d3["t0"] == rat(3, 4) * gen("tau5") * gen("g", -8)
    assert d3["t1"] == rat(3, 2) * gen("g", -3)


def test_tilde_profiles_match_registry():
    assert ytilde_poly() == REG.get("ytilde").rhs
    assert htilde_poly() == REG.get("htilde").rhs


def test_tilde_y_closes_exactly():
    rep = tilde_verify("y")
    assert rep["status"] == "PASS"
    assert rep["residual"].is_zero()


def test_tilde_h_closes_with_negated_sign():
    rep = tilde_verify("h")
    assert rep["status"] == "PASS"
    assert rep["closing_sign"] == "minus"
    assert not rep["other_residual"].is_zero()


# -- reductions ---------------------------------------------------------


def test_pkdv_to_kdv_multiplier_is_two():
    rep = pkdv_to_kdv()
    assert rep["status"] == "PASS"
    assert rep["multiplier"] == Scalar.of(2)
    assert rep["residual"].is_zero()


def test_stationary_reduction():
    rep = stationary_reduction_verify()
    assert rep["status"] == "PASS"
    assert rep["residual"].is_zero()
    assert rep["off_shell_nonzero"]
    assert rep["trivial_zero"]


def test_statred_registry_combination_matches_lenard():
    comb = 5 * gen("tau5") * lenard(2) + 7 * gen("tau7") * lenard(3)
    assert comb == REG.get("statred").rhs


# -- rescaling ----------------------------------------------------------


def test_rescale_residual_structure():
    red = rescale_residual("kdv")
    assert not red.is_zero()
    # y-jet monomials carry polynomial conditions in the scale unknowns
    assert red.contains("k0") and red.contains("k1") and red.contains("k3")


@pytest.mark.parametrize("target,names", [
    ("kdv", ("k0", "k1", "k3")),
    ("pkdv", ("n0", "n1", "n3")),
])
def test_rescale_constraints_sufficient_and_necessary(target, names):
    entry = REG.get(f"rescale_{target}")
    rep = rescale_constraints(target, entry.relations)
    assert rep["status"] == "PASS"
    assert rep["sufficient"] and rep["necessary"]
    assert rep["raw_conditions"]


def test_rescale_solved_forms_frozen():
    entry = REG.get("rescale_kdv")
    mapping = solve_triangular(entry.relations, entry.unknowns)
    assert mapping[("k0", ())] == 4 * gen("k1") ** 2
    assert mapping[("k3", ())] == -12 * gen("k1") ** 3
    entry = REG.get("rescale_pkdv")
    mapping = solve_triangular(entry.relations, entry.unknowns)
    assert mapping[("n0", ())] == 2 * gen("n1")
    assert mapping[("n3", ())] == -12 * gen("n1") ** 3


def test_rescale_mutated_set_loses_sufficiency():
    bad = REG.mutated("rescale_kdv")
    rep = rescale_constraints("kdv", bad.get("rescale_kdv").relations)
    assert not rep["sufficient"]


# -- sixth-order ODE ----------------------------------------------------


def test_pii3_residual_at_zero():
    assert pii3_residual(DiffPoly.zero()) == DiffPoly.const(rat(1, 2))


def test_pii3_residual_at_linear_profile():
    x0 = gen("x0")
    res = pii3_residual(x0, {"x1": 0, "x2": 0})
    expect = -x0 ** 2 - 20 * x0 ** 7 + 140 * x0 ** 3 \
        + DiffPoly.const(rat(1, 2))
    assert res == expect


def test_pii3_brackets_generate_modified_flows():
    b1, b2 = pii3_flow_brackets()
    assert b1.derive("x0") == 3 * REG.get("mkdv1").rhs
    assert b2.derive("x0") == 5 * REG.get("mkdv2").rhs


def test_pii3_registered_form_matches_twin():
    entry = REG.get("pii3")
    from kdvkit.hierarchy import pii3_poly
    assert entry.lhs - entry.rhs == pii3_poly()


# -- multiple detection helper ------------------------------------------


def test_exact_multiple():
    p = 6 * v(1) * v(0)
    q = 2 * v(1) * v(0)
    assert exact_multiple(p, q) == Scalar.of(3)
    assert exact_multiple(p, v(2)) is None
    assert exact_multiple(DiffPoly.zero(), q) == Scalar.of(0)
