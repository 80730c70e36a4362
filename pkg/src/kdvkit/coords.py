"""Coordinate charts, spectral variables, regime thresholds, and profile
evaluators.

Two charts cover the parameter space: the window chart (t0, t1, s0, s1)
with s0 > 0 and the scaled chart (tau1, tau3, tau5, tau7) with tau7 > 0.
The change of variables between them is polynomial except for seventh
roots of s0; floating evaluation carries those in binary64, while the
symbolic twin carries them exactly through the invertible generator g
with g**7 = s0 (the same proxy the equation table uses).

The regime classifier and the closed-form profile evaluators only
evaluate inequalities and arithmetic; whether supplied special-function
values (y, h, p, q, p_sigma, q_sigma) are the distinguished solutions is
out of scope here.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Mapping, Optional, Tuple

from .algebra import DiffPoly
from .errors import DomainError, MissingInput
from .hierarchy import t0_inverse, t1_inverse
from .registry import ensure_generators
from .scalars import rat


def _require_positive(value: float, label: str) -> None:
    if not value > 0:
        raise DomainError(f"{label} must be positive, got {value!r}")


@dataclass(frozen=True)
class PIVars:
    """Window-chart point: times (t0, t1), window scale s0 > 0, shift s1."""

    t0: float
    t1: float
    s0: float
    s1: float

    def __post_init__(self) -> None:
        _require_positive(self.s0, "window scale s0")


@dataclass(frozen=True)
class TauVars:
    """Scaled-chart point: tau1, tau3, tau5 free, tau7 > 0."""

    tau1: float
    tau3: float
    tau5: float
    tau7: float

    def __post_init__(self) -> None:
        _require_positive(self.tau7, "scale tau7")


@dataclass(frozen=True)
class RegimeConstants:
    """Threshold constants for the classifier; "large enough" defaults."""

    M: float = 10.0
    M1: float = 1.0
    M2: float = 10.0
    M3: float = 1.0
    eps: float = 0.01

    def __post_init__(self) -> None:
        for label in ("M", "M1", "M2", "M3", "eps"):
            _require_positive(getattr(self, label), f"constant {label}")


def seventh_pow(base: float, k: int) -> float:
    """base**(k/7) for positive base, binary64."""
    _require_positive(base, "fractional-power base")
    return base ** (k / 7.0)


# ---------------------------------------------------------------------------
# chart maps


def to_tau(p: PIVars) -> TauVars:
    """Forward chart map (t0, t1, s0, s1) -> (tau1, tau3, tau5, tau7)."""
    s0, s1 = p.s0, p.s1
    tau1 = (5.0 / 8.0) * s1 ** 3 / s0 ** 2 \
        + p.t1 * s1 / seventh_pow(s0, 4) - 2.0 * p.t0 * seventh_pow(s0, 1)
    tau3 = (5.0 / 4.0) * s1 ** 2 / s0 + (2.0 / 3.0) * p.t1 * seventh_pow(s0, 3)
    tau5 = s1
    tau7 = (2.0 / 7.0) * s0
    return TauVars(tau1, tau3, tau5, tau7)


def from_tau(t: TauVars) -> PIVars:
    """Closed-form inverse chart map."""
    s0 = (7.0 / 2.0) * t.tau7
    s1 = t.tau5
    t1 = (3.0 / 2.0) / seventh_pow(s0, 3) * (t.tau3 - (5.0 / 4.0) * s1 ** 2 / s0)
    t0 = ((5.0 / 8.0) * s1 ** 3 / s0 ** 2
          + t1 * s1 / seventh_pow(s0, 4) - t.tau1) / (2.0 * seventh_pow(s0, 1))
    return PIVars(t0, t1, s0, s1)


def _g(name: str, exp: int = 1) -> DiffPoly:
    return DiffPoly.gen(name, exp)


@lru_cache(maxsize=None)
def symbolic_forward() -> Dict[str, DiffPoly]:
    """Forward chart map over the jet algebra, exact in g**7 = s0.

    Images are polynomials in the symbols t0, t1, s1 and (both signs of)
    the invertible symbol g.
    """
    ensure_generators()
    return {
        "tau1": rat(5, 8) * _g("s1", 3) * _g("g", -14)
        + _g("t1") * _g("s1") * _g("g", -4) - 2 * _g("t0") * _g("g"),
        "tau3": rat(5, 4) * _g("s1", 2) * _g("g", -7)
        + rat(2, 3) * _g("t1") * _g("g", 3),
        "tau5": _g("s1"),
        "tau7": rat(2, 7) * _g("g", 7),
    }


@lru_cache(maxsize=None)
def symbolic_inverse() -> Dict[str, DiffPoly]:
    """Inverse chart map over the jet algebra; s0 appears as g**7."""
    ensure_generators()
    return {
        "t0": t0_inverse(),
        "t1": t1_inverse(),
        "s0": _g("g", 7),
        "s1": _g("tau5"),
    }


def symbolic_roundtrip() -> Dict[str, DiffPoly]:
    """Residuals of both exact round trips; every value must vanish.

    One direction substitutes the forward tau-images into the inverse
    lines and subtracts the bare window symbol; the other substitutes
    the inverse images into the forward lines and subtracts the bare
    tau symbol.  g is shared by both charts and stays untouched.
    """
    ensure_generators()
    fwd = symbolic_forward()
    inv = symbolic_inverse()
    tau_sub = {(name, ()): image for name, image in fwd.items()}
    win_sub = {(name, ()): image for name, image in inv.items()
               if name != "s0"}
    out: Dict[str, DiffPoly] = {}
    for name in ("t0", "t1", "s1"):
        out[name] = inv[name].subs(tau_sub) - _g(name)
    out["s0"] = inv["s0"] - fwd["tau7"] * rat(7, 2)
    for name in ("tau1", "tau3", "tau5"):
        out[name] = fwd[name].subs(win_sub) - _g(name)
    # the tau7 line is definitional under the proxy: its image must be
    # (2/7) times the s0 proxy rather than the free symbol tau7
    out["tau7"] = fwd["tau7"] - rat(2, 7) * inv["s0"]
    return out


# ---------------------------------------------------------------------------
# spectral variables


def zeta_of_z(z: complex, p: PIVars) -> complex:
    """Recentred spectral variable zeta = z*s0**(-2/7) - s1/s0."""
    return z * seventh_pow(p.s0, -2) - p.s1 / p.s0


def zeta_root(p: PIVars) -> float:
    """The unique z with zeta(z) = 0, namely s1*s0**(-5/7)."""
    return p.s1 * seventh_pow(p.s0, -5)


def eta_coefficients(t: TauVars) -> Tuple[float, float, float, float]:
    """Coefficients (c3, c2, c1, c0) of the cubic eta(xi)."""
    s0 = (7.0 / 2.0) * t.tau7
    return (
        -(2.0 / 7.0) * seventh_pow(s0, 1),
        -t.tau5 / seventh_pow(s0, 4),
        -t.tau3 / seventh_pow(s0, 2),
        -t.tau1,
    )


def eta_of_xi(xi: complex, t: TauVars) -> complex:
    """Phase cubic eta(xi) = c3*xi**3 + c2*xi**2 + c1*xi + c0."""
    c3, c2, c1, c0 = eta_coefficients(t)
    return ((c3 * xi + c2) * xi + c1) * xi + c0


_A_SCALE = (2.0 ** 6 / 7.0) ** (1.0 / 7.0)
FOLD_C = 2.0 ** (-10.0 / 7.0)


def kappa_scales(t: TauVars) -> Tuple[float, float, float]:
    """(kappa0, kappa1, kappa2) = (tau5, tau3, tau1) over s0**(5/7, 3/7, 1/7)."""
    s0 = (7.0 / 2.0) * t.tau7
    return (
        t.tau5 / seventh_pow(s0, 5),
        t.tau3 / seventh_pow(s0, 3),
        t.tau1 / seventh_pow(s0, 1),
    )


def x_variables(t: TauVars) -> Tuple[float, float, float]:
    """Second-regime variables (x0, x1, x2) with a = (2**6/7)**(1/7)."""
    a = _A_SCALE
    return (
        -a * t.tau1 / seventh_pow(t.tau7, 1),
        (3.0 * a ** 3 / 4.0) * t.tau3 / seventh_pow(t.tau7, 3),
        (5.0 * a ** 5 / 16.0) * t.tau5 / seventh_pow(t.tau7, 5),
    )


def x_from_kappa(kappas: Tuple[float, float, float]) -> Tuple[float, float, float]:
    """Folded form of the x-variables: powers of two times the kappas."""
    k0, k1, k2 = kappas
    return (
        -(2.0 ** (5.0 / 7.0)) * k2,
        3.0 * 2.0 ** (1.0 / 7.0) * k1,
        5.0 * 2.0 ** (-3.0 / 7.0) * k0,
    )


def stokes_multiplier(iota: float) -> complex:
    """Stokes parameter s = i*(iota - 1) attached to a thinning level."""
    return 1j * (iota - 1.0)


def spectral_maps(t: TauVars, z: Optional[complex] = None,
                  xi: Optional[complex] = None,
                  iota: Optional[float] = None) -> Dict[str, object]:
    """One-stop evaluation of the spectral-variable maps at a tau point.

    Always reports the x-variables, their kappa folding, and the folding
    constant; evaluates zeta at ``z`` / eta at ``xi`` / the Stokes
    parameter at ``iota`` when those arguments are given.
    """
    report: Dict[str, object] = {
        "x_variables": x_variables(t),
        "kappa": kappa_scales(t),
        "x_from_kappa": x_from_kappa(kappa_scales(t)),
        "fold_constant": FOLD_C,
    }
    if z is not None:
        report["zeta"] = zeta_of_z(z, from_tau(t))
        report["zeta_root"] = zeta_root(from_tau(t))
    if xi is not None:
        report["eta"] = eta_of_xi(xi, t)
    if iota is not None:
        report["stokes"] = stokes_multiplier(iota)
    return report


# ---------------------------------------------------------------------------
# regime classification


def window_edge(t: TauVars) -> float:
    """Upper edge x of the third-regime tau1 window."""
    w = 2.0 / (7.0 * t.tau7)
    return (-t.tau7 * w ** (6.0 / 7.0) + t.tau5 * w ** (4.0 / 7.0)
            - abs(t.tau3) * w ** (2.0 / 7.0))


def regime_conditions(t: TauVars,
                      constants: RegimeConstants = RegimeConstants()
                      ) -> Dict[str, Dict[str, bool]]:
    """Every threshold inequality, evaluated separately per regime."""
    c = constants
    s0 = (7.0 / 2.0) * t.tau7
    scale5 = c.M * seventh_pow(t.tau7, 5)

    # first regime: large tau5 plus one of two shape alternatives
    alt_a = (t.tau3 >= (5.0 / 4.0) * t.tau5 ** 2 / s0
             and t.tau1 >= (5.0 / 8.0) * t.tau5 ** 3 / s0 ** 2)
    alt_b = (t.tau5 > 0
             and t.tau3 <= (37.0 / 56.0 - c.eps) * t.tau5 ** 2 / s0
             + t.tau1 * s0 / t.tau5)
    first = {
        "tau5_large": t.tau5 >= scale5,
        "shape_alternative_a": alt_a,
        "shape_alternative_b": alt_b,
    }

    # second regime: every odd tau bounded by the matching tau7 power
    second = {
        "tau1_small": abs(t.tau1) <= c.M * seventh_pow(t.tau7, 1),
        "tau3_small": abs(t.tau3) <= c.M * seventh_pow(t.tau7, 3),
        "tau5_small": abs(t.tau5) <= scale5,
    }

    # third regime: tau5 in a negative band, tau3 small, tau1 in (-M3, x]
    x = window_edge(t)
    third = {
        "tau5_band": (-c.M1 * seventh_pow(t.tau7, 4) <= t.tau5
                      <= -c.M2 * seventh_pow(t.tau7, 5)),
        "tau3_small": abs(t.tau3) <= c.M1 * seventh_pow(t.tau7, 2),
        "window_nonempty": x > -c.M3,
        "tau1_in_window": -c.M3 <= t.tau1 <= x,
    }
    return {"regime1": first, "regime2": second, "regime3": third}


def regime_classify(t: TauVars,
                    constants: RegimeConstants = RegimeConstants()
                    ) -> Dict[str, object]:
    """Classify a tau point; total and deterministic.

    The tag is the first regime whose conditions all hold, in the order
    regime1, regime2, regime3, else "none"; regime1 needs the large-tau5
    bound plus at least one shape alternative.  The report carries every
    individual inequality and the third-regime window edge x.
    """
    conds = regime_conditions(t, constants)
    first = conds["regime1"]
    tag = "none"
    if first["tau5_large"] and (first["shape_alternative_a"]
                                or first["shape_alternative_b"]):
        tag = "regime1"
    elif all(conds["regime2"].values()):
        tag = "regime2"
    elif all(conds["regime3"].values()):
        tag = "regime3"
    return {"regime": tag, "conditions": conds, "x": window_edge(t)}


# ---------------------------------------------------------------------------
# closed-form profile evaluators


def _need(supplied: Mapping[str, float], keys: Tuple[str, ...],
          regime: str) -> None:
    missing = [k for k in keys if k not in supplied]
    if missing:
        raise MissingInput(
            f"{regime} profiles need supplied value(s) {missing}")


def asymptotic_profiles(regime: str, t: TauVars,
                        supplied: Mapping[str, float]) -> Dict[str, object]:
    """Evaluate the closed-form (u, v) profiles for one regime.

    ``supplied`` carries point values of the regime's special functions:
    {y, h} for regime1, {p, q} (plus q_tau1 for v) for regime2, and
    {p_sigma, q_sigma} for regime3.  The evaluator does arithmetic only;
    it never checks that the supplied values solve anything.
    """
    report: Dict[str, object] = {"regime": regime}
    if regime == "regime1":
        _need(supplied, ("y", "h"), regime)
        w = 2.0 / (7.0 * t.tau7)
        drift = (t.tau1 * t.tau5 / (7.0 * t.tau7)
                 - 3.0 * t.tau3 * t.tau5 ** 2 / (98.0 * t.tau7 ** 2)
                 + 15.0 * t.tau5 ** 4 / (2744.0 * t.tau7 ** 3))
        report["u"] = -w ** (1.0 / 7.0) * supplied["h"] - drift
        report["v"] = w ** (2.0 / 7.0) * supplied["y"] - t.tau5 / (7.0 * t.tau7)
    elif regime == "regime2":
        _need(supplied, ("p", "q"), regime)
        b = (2.0 ** 6 / (7.0 * t.tau7)) ** (1.0 / 7.0)
        report["u"] = b * (supplied["q"] / 2.0 + supplied["p"])
        if "q_tau1" in supplied:
            report["v"] = b * (supplied["q_tau1"] / 2.0
                               - b * supplied["q"] ** 2 / 2.0)
        else:
            report["v"] = None
            report["v_requires"] = "q_tau1"
    elif regime == "regime3":
        _need(supplied, ("p_sigma", "q_sigma"), regime)
        p, q = supplied["p_sigma"], supplied["q_sigma"]
        report["u"] = -p
        report["v"] = -p ** 2 + 2.0 * q
        # these two leading minus signs are easy to transcribe wrongly,
        # so the report records them explicitly for audit
        report["flagged_signs"] = ("u = -p_sigma(-tau1)",
                                   "v = -p_sigma(-tau1)**2 + 2*q_sigma(-tau1)")
    else:
        raise DomainError(f"unknown regime tag {regime!r}")
    return report


# ---------------------------------------------------------------------------
# sampling helper for round-trip checks


def random_window_points(n: int, seed: int = 0) -> Tuple[PIVars, ...]:
    """Reproducible sample of valid window-chart points.

    Ranges keep the chart well conditioned: recovering t0 from tau1
    divides out a cancellation of size |s1|**3/s0**2, so extreme shift
    to scale ratios would wash information out of binary64 before any
    inverse could recover it.
    """
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        out.append(PIVars(
            t0=rng.uniform(-3.0, 3.0),
            t1=rng.uniform(-3.0, 3.0),
            s0=rng.uniform(0.25, 8.0),
            s1=rng.uniform(-3.0, 3.0),
        ))
    return tuple(out)


def roundtrip_error(p: PIVars) -> float:
    """Largest relative error of from_tau(to_tau(p)) against p."""
    q = from_tau(to_tau(p))
    worst = 0.0
    for label in ("t0", "t1", "s0", "s1"):
        a, b = getattr(p, label), getattr(q, label)
        scale = max(abs(a), 1.0)
        worst = max(worst, abs(a - b) / scale)
    return worst
