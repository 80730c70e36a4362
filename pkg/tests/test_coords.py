"""Chart maps, spectral variables, regime logic, and profile evaluators."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdvkit.algebra import DiffPoly
from kdvkit.coords import (
    FOLD_C,
    PIVars,
    RegimeConstants,
    TauVars,
    asymptotic_profiles,
    eta_coefficients,
    eta_of_xi,
    from_tau,
    kappa_scales,
    random_window_points,
    regime_classify,
    regime_conditions,
    roundtrip_error,
    seventh_pow,
    spectral_maps,
    stokes_multiplier,
    symbolic_forward,
    symbolic_inverse,
    symbolic_roundtrip,
    to_tau,
    window_edge,
    x_from_kappa,
    x_variables,
    zeta_of_z,
    zeta_root,
)
from kdvkit.errors import DomainError, MissingInput
from kdvkit.registry import ensure_generators


@pytest.fixture(autouse=True)
def _gens():
    ensure_generators()


# ---------------------------------------------------------------------------
# chart maps

def test_zero_case():
    t = to_tau(PIVars(0.0, 0.0, 1.0, 0.0))
    assert (t.tau1, t.tau3, t.tau5) == (0.0, 0.0, 0.0)
    assert math.isclose(t.tau7, 2.0 / 7.0, rel_tol=0, abs_tol=0)


def test_unit_fixture():
    t = to_tau(PIVars(1.0, 1.0, 1.0, 1.0))
    assert math.isclose(t.tau1, -3.0 / 8.0, rel_tol=1e-14)
    assert math.isclose(t.tau3, 23.0 / 12.0, rel_tol=1e-14)
    assert t.tau5 == 1.0
    assert math.isclose(t.tau7, 2.0 / 7.0, rel_tol=1e-15)


def test_roundtrip_bulk():
    worst = max(roundtrip_error(p) for p in random_window_points(10000, seed=0))
    assert worst <= 1e-12


def test_roundtrip_reverse_direction():
    import random
    rng = random.Random(4)
    for _ in range(2000):
        t = TauVars(rng.uniform(-3, 3), rng.uniform(-3, 3),
                    rng.uniform(-3, 3), rng.uniform(0.1, 3.0))
        t2 = to_tau(from_tau(t))
        for lab in ("tau1", "tau3", "tau5", "tau7"):
            a, b = getattr(t, lab), getattr(t2, lab)
            assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


@given(st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0.25, 8.0), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_roundtrip_property(t0, t1, s0, s1):
    assert roundtrip_error(PIVars(t0, t1, s0, s1)) <= 1e-12


def test_domain_validation():
    with pytest.raises(DomainError):
        PIVars(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        PIVars(0.0, 0.0, -1.0, 0.0)
    with pytest.raises(DomainError):
        TauVars(0.0, 0.0, 0.0, -2.0)
    with pytest.raises(DomainError):
        seventh_pow(-1.0, 2)
    with pytest.raises(DomainError):
        RegimeConstants(M=-1.0)


# ---------------------------------------------------------------------------
# symbolic twin

def test_symbolic_roundtrip_exact():
    res = symbolic_roundtrip()
    assert set(res) == {"t0", "t1", "s0", "s1", "tau1", "tau3", "tau5", "tau7"}
    for name, poly in res.items():
        assert poly.is_zero(), name


def test_symbolic_forward_shape():
    fwd = symbolic_forward()
    assert fwd["tau5"] == DiffPoly.gen("s1")
    # the scale line is (2/7) g**7 and nothing else
    assert (fwd["tau7"] * 7 - DiffPoly.gen("g", 7) * 2).is_zero()


def test_symbolic_inverse_matches_flat_formula():
    # t1 line: (3/2) tau3 g**-3 - (15/8) tau5**2 g**-10
    from kdvkit.scalars import rat
    inv = symbolic_inverse()
    want = rat(3, 2) * DiffPoly.gen("tau3") * DiffPoly.gen("g", -3) \
        - rat(15, 8) * DiffPoly.gen("tau5") ** 2 * DiffPoly.gen("g", -10)
    assert (inv["t1"] - want).is_zero()


# ---------------------------------------------------------------------------
# spectral variables

def test_zeta_vanishes_at_root():
    for p in random_window_points(50, seed=3):
        z = zeta_root(p)
        assert abs(zeta_of_z(z, p)) <= 1e-13 * max(abs(p.s1 / p.s0), 1.0)


def test_eta_constant_term():
    for args in ((0.3, -0.2, 0.5, 0.7), (1.0, 1.0, 1.0, 1.0),
                 (-2.0, 0.1, -0.4, 0.05)):
        t = TauVars(*args)
        assert eta_of_xi(0.0, t) == -t.tau1


def test_eta_cubic_coefficients():
    t = TauVars(0.7, -1.3, 2.1, 0.9)
    s0 = 3.5 * t.tau7
    c3, c2, c1, c0 = eta_coefficients(t)
    assert math.isclose(c3, -(2.0 / 7.0) * s0 ** (1 / 7), rel_tol=1e-15)
    assert math.isclose(c2, -t.tau5 / s0 ** (4 / 7), rel_tol=1e-15)
    assert math.isclose(c1, -t.tau3 / s0 ** (2 / 7), rel_tol=1e-15)
    assert c0 == -t.tau1
    # Horner evaluation agrees with the naive cubic
    for xi in (-1.7, 0.4, 2.2):
        naive = c3 * xi ** 3 + c2 * xi ** 2 + c1 * xi + c0
        assert math.isclose(eta_of_xi(xi, t), naive, rel_tol=1e-14)


def test_x_variable_folding_agreement():
    for args in ((0.3, -0.2, 0.5, 0.7), (1.5, 2.5, -3.5, 0.01),
                 (-1.0, 0.0, 1.0, 5.0)):
        t = TauVars(*args)
        direct = x_variables(t)
        folded = x_from_kappa(kappa_scales(t))
        for a, b in zip(direct, folded):
            assert math.isclose(a, b, rel_tol=1e-13, abs_tol=1e-13)


def test_fold_constant_value():
    assert math.isclose(FOLD_C, 2.0 ** (-10.0 / 7.0), rel_tol=0, abs_tol=0)


def test_stokes_multiplier():
    assert stokes_multiplier(1.0) == 0j
    assert stokes_multiplier(0.5) == 1j * (-0.5)


def test_spectral_maps_umbrella():
    t = TauVars(0.3, -0.2, 0.5, 0.7)
    rep = spectral_maps(t)
    assert set(rep) == {"x_variables", "kappa", "x_from_kappa",
                        "fold_constant"}
    rep = spectral_maps(t, z=1.0, xi=0.0, iota=1.0)
    assert rep["stokes"] == 0j
    assert rep["eta"] == -t.tau1
    p = from_tau(t)
    assert math.isclose(rep["zeta"], zeta_of_z(1.0, p), rel_tol=1e-15)


# ---------------------------------------------------------------------------
# regime classification

def test_regime1_example():
    rep = regime_classify(TauVars(0.0, 0.0, 1.0, 1e-3))
    assert rep["regime"] == "regime1"
    conds = rep["conditions"]["regime1"]
    assert conds["tau5_large"]
    assert not conds["shape_alternative_a"]
    assert conds["shape_alternative_b"]


def test_regime2_example_for_any_M():
    for M in (0.001, 1.0, 10.0, 1e6):
        rep = regime_classify(TauVars(0.0, 0.0, 0.0, 1e-3),
                              RegimeConstants(M=M))
        assert rep["regime"] == "regime2"


def test_regime3_window_and_edge():
    t7 = 1e-6
    t = TauVars(-1.0, 0.0, -(t7 ** (9 / 14)), t7)
    # independent evaluation of the edge through the s0 form
    s0 = 3.5 * t7
    want = (-(2.0 / 7.0) * s0 ** (1 / 7) + t.tau5 / s0 ** (4 / 7)
            - abs(t.tau3) / s0 ** (2 / 7))
    rep = regime_classify(t)
    assert math.isclose(rep["x"], want, rel_tol=1e-12)
    assert math.isclose(window_edge(t), want, rel_tol=1e-12)
    # with defaults the tau5 band needs a smaller M2; every window
    # inequality is still evaluated and reported
    assert set(rep["conditions"]["regime3"]) == {
        "tau5_band", "tau3_small", "window_nonempty", "tau1_in_window"}
    assert rep["conditions"]["regime3"]["tau1_in_window"]
    assert rep["conditions"]["regime3"]["window_nonempty"]
    # constants under which the point is regime3 outright
    rep = regime_classify(t, RegimeConstants(M=0.5, M2=1.0))
    assert rep["regime"] == "regime3"
    assert all(rep["conditions"]["regime3"].values())


def test_classifier_total_and_deterministic():
    pts = [TauVars(a, b, c, d)
           for a in (-1.0, 0.0, 2.0)
           for b in (-0.5, 0.0, 1.5)
           for c in (-1.0, 0.0, 1.0)
           for d in (1e-6, 0.3, 4.0)]
    for t in pts:
        r1 = regime_classify(t)
        r2 = regime_classify(t)
        assert r1 == r2
        assert r1["regime"] in {"regime1", "regime2", "regime3", "none"}


@given(st.floats(-4, 4), st.floats(-4, 4),
       st.floats(-4, 4), st.floats(0.01, 4.0))
@settings(max_examples=120, deadline=None)
def test_regimes_1_and_2_mutually_exclusive(tau1, tau3, tau5, tau7):
    t = TauVars(tau1, tau3, tau5, tau7)
    conds = regime_conditions(t)
    bound = RegimeConstants().M * seventh_pow(tau7, 5)
    if conds["regime1"]["tau5_large"] and conds["regime2"]["tau5_small"]:
        # only possible exactly on the shared boundary tau5 = M tau7^{5/7}
        assert tau5 == bound


# ---------------------------------------------------------------------------
# profile evaluators

def test_regime1_profile_fixture():
    rep = asymptotic_profiles("regime1", TauVars(1.0, 1.0, 1.0, 1.0),
                              {"y": 0.0, "h": 0.0})
    want_u = -(1.0 / 7.0 - 3.0 / 98.0 + 15.0 / 2744.0)
    assert math.isclose(rep["u"], want_u, rel_tol=1e-14)
    assert math.isclose(rep["v"], -1.0 / 7.0, rel_tol=1e-14)


def test_regime2_profile_trivial_and_full():
    rep = asymptotic_profiles("regime2", TauVars(0.0, 0.0, 0.0, 1e-3),
                              {"p": 0.0, "q": 0.0})
    assert rep["u"] == 0.0
    assert rep["v"] is None and rep["v_requires"] == "q_tau1"
    t = TauVars(0.0, 0.0, 0.0, 2.0 / 7.0)
    b = 2.0 ** (5.0 / 7.0)  # (2**6 / (7 tau7))**(1/7) at tau7 = 2/7
    rep = asymptotic_profiles("regime2", t,
                              {"p": 1.0, "q": 2.0, "q_tau1": 4.0})
    assert math.isclose(rep["u"], b * 2.0, rel_tol=1e-14)
    assert math.isclose(rep["v"], b * (2.0 - b * 2.0), rel_tol=1e-14)


def test_regime3_profile_fixture():
    rep = asymptotic_profiles("regime3", TauVars(-1.0, 0.0, -0.1, 1e-3),
                              {"p_sigma": 2.0, "q_sigma": 3.0})
    assert rep["u"] == -2.0
    assert rep["v"] == 2.0
    assert len(rep["flagged_signs"]) == 2
    assert any("-p_sigma" in s for s in rep["flagged_signs"])


def test_profiles_missing_input_and_bad_regime():
    t = TauVars(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(MissingInput):
        asymptotic_profiles("regime1", t, {"y": 0.0})
    with pytest.raises(MissingInput):
        asymptotic_profiles("regime2", t, {})
    with pytest.raises(MissingInput):
        asymptotic_profiles("regime3", t, {"p_sigma": 1.0})
    with pytest.raises(DomainError):
        asymptotic_profiles("regime7", t, {})


def test_random_points_reproducible():
    assert random_window_points(5, seed=11) == random_window_points(5, seed=11)
    assert random_window_points(5, seed=11) != random_window_points(5, seed=12)
