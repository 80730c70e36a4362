"""2x2 matrix algebra over spectral-parameter polynomials and half-power
series.

Mechanizes four jobs: the zero-curvature derivation of the connection
pencil coefficients, the expansion-coefficient identities of the outer
problem, the inner Lax system in y and h, and the kernel-density
expansion on the negative axis.  Everything is exact over the working
scalar ring; residuals are differential polynomials compared to zero,
never floats.

Spectral bookkeeping: the pencil side treats zeta as an ordinary
commuting generator.  The series side works in the half-power variable
x with x^2 = zeta (or z), storing one matrix coefficient per integer
power of x and an explicit exactness floor, so conjugation by
zeta^(-sigma3/4) is a shift of off-diagonal x-exponents by +/-1 and no
fractional powers ever appear in coefficients.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .algebra import DiffPoly, FlowRule, family, reduce_on_shell, symbol
from .errors import (
    InconsistentSystem,
    NonCollapsing,
    ResidualNonzero,
    TruncationTooShallow,
    UnknownSurvivor,
    UnsupportedTerm,
)
from .hierarchy import (
    TAU_FLOWS,
    eval_at,
    exact_multiple,
    handy_rhs,
    h_flow_rhs,
    kdv_rhs,
    lenard,
    pi2_poly,
    pkdv_rhs,
    pkdv_rules,
    split_by_family,
    y_flow_rhs,
)
from .registry import ensure_generators
from .scalars import HALF, I, MINUS_ONE, ONE, SQRT2, Scalar, ZERO, rat

ZETA = "zeta"
OSC = "osc"  # oscillator square root: osc^2 = E = exp(-2*theta)

X_ORDER = 12  # truncation depth of the outer expansion
PHI_ORDER = 12  # truncation depth of the inner expansion


def _jet(fam: str, counts: Mapping[str, int], exp: int = 1) -> DiffPoly:
    return DiffPoly.jet(fam, counts, exp)


def _g(name: str, exp: int = 1) -> DiffPoly:
    return DiffPoly.gen(name, exp)


def _ut(*flows: str) -> DiffPoly:
    counts: Dict[str, int] = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return _jet("u", counts)


def ensure_series_generators() -> None:
    """Declare every generator the engines need (idempotent)."""
    ensure_generators()
    from .laxreg import ensure_lax_generators

    ensure_lax_generators()
    symbol(ZETA)
    symbol(OSC, invertible=True)
    for k in range(1, 6):
        for stem in ("phq", "phr", "phv", "phw"):
            family(f"{stem}{k}", {"t0": "jet", "t1": "jet"}, primary="t0")


# ---------------------------------------------------------------------------
# 2x2 matrices of differential polynomials


class MatZPoly:
    """2x2 matrix with DiffPoly entries; zeta is an ordinary generator."""

    __slots__ = ("m",)

    def __init__(self, a, b, c, d):
        self.m = (a, b, c, d)

    @staticmethod
    def zero() -> "MatZPoly":
        z = DiffPoly.zero()
        return MatZPoly(z, z, z, z)

    @staticmethod
    def identity() -> "MatZPoly":
        o, z = DiffPoly.one(), DiffPoly.zero()
        return MatZPoly(o, z, z, o)

    @staticmethod
    def diag(a, d) -> "MatZPoly":
        z = DiffPoly.zero()
        return MatZPoly(a, z, z, d)

    def entry(self, i: int, j: int) -> DiffPoly:
        return self.m[2 * i + j]

    def __add__(self, other: "MatZPoly") -> "MatZPoly":
        return MatZPoly(*(a + b for a, b in zip(self.m, other.m)))

    def __sub__(self, other: "MatZPoly") -> "MatZPoly":
        return MatZPoly(*(a - b for a, b in zip(self.m, other.m)))

    def __neg__(self) -> "MatZPoly":
        return MatZPoly(*(-a for a in self.m))

    def __mul__(self, other: "MatZPoly") -> "MatZPoly":
        a, b, c, d = self.m
        e, f, g, h = other.m
        return MatZPoly(a * e + b * g, a * f + b * h,
                        c * e + d * g, c * f + d * h)

    def scale(self, f) -> "MatZPoly":
        return MatZPoly(*(a * f for a in self.m))

    def commutator(self, other: "MatZPoly") -> "MatZPoly":
        return self * other - other * self

    def derive(self, dname: str) -> "MatZPoly":
        return MatZPoly(*(a.derive(dname) for a in self.m))

    def map(self, fn) -> "MatZPoly":
        return MatZPoly(*(fn(a) for a in self.m))

    def trace(self) -> DiffPoly:
        return self.m[0] + self.m[3]

    def det(self) -> DiffPoly:
        a, b, c, d = self.m
        return a * d - b * c

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatZPoly):
            return NotImplemented
        return all(a == b for a, b in zip(self.m, other.m))

    def __hash__(self):
        raise TypeError("MatZPoly is unhashable")

    def zeta_coeff(self, power: int) -> "MatZPoly":
        return self.map(lambda p: var_coeff(p, ZETA, power))

    def zeta_degree(self) -> int:
        return max(var_degree(p, ZETA) for p in self.m)

    def __repr__(self):
        return "MatZPoly([[{}, {}], [{}, {}]])".format(*self.m)


def var_coeff(p: DiffPoly, name: str, power: int) -> DiffPoly:
    """Coefficient of name**power in p (name treated as a plain variable)."""
    key = (name, ())
    out: dict = {}
    for m, c in p.terms.items():
        d = dict(m)
        e = d.pop(key, 0)
        if e != power:
            continue
        mono = tuple(sorted(d.items()))
        got = out.get(mono)
        out[mono] = c if got is None else got + c
    return DiffPoly(out)


def var_degree(p: DiffPoly, name: str) -> int:
    key = (name, ())
    deg = 0
    for m in p.terms:
        d = dict(m)
        deg = max(deg, d.get(key, 0))
    return deg


def pencil_matrix(entry) -> MatZPoly:
    """Assemble a registry pencil (power -> 4-tuple) into one MatZPoly."""
    total = MatZPoly.zero()
    for p in entry.powers():
        blk = MatZPoly(*entry.block(p))
        total = total + blk.scale(_g(ZETA, p) if p else DiffPoly.one())
    return total


# ---------------------------------------------------------------------------
# greedy triangular elimination shared by every coefficient system


def greedy_solve(equations: Iterable[DiffPoly],
                 unknowns: Iterable[str]
                 ) -> Tuple[Dict[str, DiffPoly], List[DiffPoly]]:
    """Solve a system that is triangular in bare occurrences of unknowns.

    An unknown is eliminated from an equation where it appears only as a
    bare generator (no derivative index) of degree one with an exact
    scalar coefficient.  Images are kept free of solved names.  Returns
    the images and the nonzero leftover equations.
    """
    eqs = [e for e in equations]
    pending = sorted(set(unknowns))
    solved: Dict[str, DiffPoly] = {}

    def _subst(p: DiffPoly) -> DiffPoly:
        for name, img in solved.items():
            if p.contains(name):
                p = eval_at(p, name, img)
        return p

    changed = True
    while changed:
        changed = False
        for i in range(len(eqs)):
            eq = _subst(eqs[i])
            eqs[i] = eq
            if eq.is_zero():
                continue
            for name in pending:
                if eq.keys_of(name) != {(name, ())}:
                    continue
                parts = split_by_family(eq, name)
                bare = (((name, ()), 1),)
                if set(parts) - {(), bare}:
                    continue
                coeff = parts.get(bare)
                if coeff is None:
                    continue
                try:
                    c = coeff.as_scalar()
                except UnsupportedTerm:
                    continue
                img = parts.get((), DiffPoly.zero()) * (-c.inverse())
                solved = {n: (eval_at(v, name, img) if v.contains(name)
                              else v)
                          for n, v in solved.items()}
                solved[name] = img
                pending.remove(name)
                eqs[i] = DiffPoly.zero()
                changed = True
                break
            if changed:
                break
    leftovers = [q for q in (_subst(e) for e in eqs) if not q.is_zero()]
    return solved, leftovers


# ---------------------------------------------------------------------------
# zero-curvature systems for the connection pencils


_FLOW_OF_K = {3: "tau3", 5: "tau5", 7: "tau7"}
# each system determines only the coefficients new to its pencil; the
# shared lower ones are seeded from the previous system
_UNKNOWNS_OF_K = {
    3: ("b0", "b1", "b2"),
    5: ("b3", "b4", "b6"),
    7: ("b7", "b8", "b10"),
}


def _bj(j: int) -> DiffPoly:
    return _jet(f"b{j}", {})


def ansatz(k: int, split_composites: bool = False) -> MatZPoly:
    """Pencil ansatz for the flow of order k in zeta-generator form.

    The z^1 lower-left slots of the higher pencils are the composites
    b2 + u_{tau3} and b6 + u_{tau5}; split_composites=True keeps them as
    the bare coefficients b5 and b9 instead (the display shape).
    """
    ensure_series_generators()
    z = _g(ZETA)
    u1 = _ut("tau1")
    zero, one = DiffPoly.zero(), DiffPoly.one()
    if split_composites:
        b5 = _bj(5)
        b9 = _bj(9)
    else:
        b5 = _bj(2) + _ut("tau3")
        b9 = _bj(6) + _ut("tau5")
    if k == 1:
        return MatZPoly(zero, one, z + _bj(0), zero)
    if k == 3:
        return MatZPoly(_bj(1), z + u1,
                        z ** 2 - u1 * z + _bj(2), -_bj(1))
    if k == 5:
        return MatZPoly(
            _bj(1) * z + _bj(3),
            z ** 2 + u1 * z + _bj(4),
            z ** 3 - u1 * z ** 2 + b5 * z + _bj(6),
            -(_bj(1) * z + _bj(3)))
    if k == 7:
        diag = _bj(1) * z ** 2 + _bj(3) * z + _bj(7)
        return MatZPoly(
            diag,
            z ** 3 + u1 * z ** 2 + _bj(4) * z + _bj(8),
            z ** 4 - u1 * z ** 3 + b5 * z ** 2 + b9 * z + _bj(10),
            -diag)
    raise ValueError("pencil order must be one of 1, 3, 5, 7")


@lru_cache(maxsize=None)
def zero_curvature(k: int) -> dict:
    """Solve the compatibility system of the order-k pencil with the
    order-1 pencil: per power of zeta and entry, eliminate the bare
    coefficients new to this pencil (lower ones are seeded from the
    previous system); the leftover scalar equation is the flow PDE."""
    if k not in (3, 5, 7):
        raise ValueError("compatibility system defined for k in {3, 5, 7}")
    ensure_series_generators()
    flow = _FLOW_OF_K[k]
    seeds: Dict[str, DiffPoly] = {}
    lower_pdes: List[DiffPoly] = []
    if k > 3:
        lower = zero_curvature(k - 2)
        seeds.update(lower["seeds"])
        seeds.update(lower["solved"])
        lower_pdes = [lower["pde"]] + lower["lower_pdes"]
    b_one = ansatz(1)
    b_k = ansatz(k)
    resid = b_k.derive("tau1") - b_one.derive(flow) \
        - b_one.commutator(b_k)
    top = resid.zeta_degree()
    equations = []
    for p in range(top + 1):
        blk = resid.zeta_coeff(p)
        for i in range(2):
            for j in range(2):
                q = blk.entry(i, j)
                for name, img in seeds.items():
                    if q.contains(name):
                        q = eval_at(q, name, img)
                if not q.is_zero():
                    equations.append(q)
    solved, leftovers = greedy_solve(equations, _UNKNOWNS_OF_K[k])
    # the new flow equation carries jets along this pencil's flow; any
    # other leftover must be an echo of a lower system's equation
    fresh = [q for q in leftovers if q.max_order("u", flow) >= 1]
    echoes = [q for q in leftovers if q.max_order("u", flow) < 1]
    if not fresh:
        raise InconsistentSystem(
            f"order-{k} compatibility system left no flow equation")
    pde = fresh[0]
    for other in fresh[1:]:
        if exact_multiple(other, pde) is None:
            raise InconsistentSystem(
                "independent leftover conditions in the order-"
                f"{k} compatibility system")
    for q in echoes:
        if not any(exact_multiple(q, low) is not None
                   for low in lower_pdes):
            raise InconsistentSystem(
                f"unrecognized leftover in the order-{k} system: {q!r}")
    missing = [n for n in _UNKNOWNS_OF_K[k] if n not in solved]
    if missing:
        raise InconsistentSystem(
            f"coefficients never determined: {missing}")
    return {"k": k, "flow": flow, "solved": solved, "pde": pde,
            "conditions": leftovers, "seeds": seeds,
            "lower_pdes": lower_pdes}


def solved_images(k: int = 7) -> Dict[str, DiffPoly]:
    """Coefficient images accumulated through order k, with the
    composite slots b5 and b9 spelled out."""
    zc = zero_curvature(k)
    images = dict(zc["seeds"])
    images.update(zc["solved"])
    if "b2" in images:
        images["b5"] = images["b2"] + _ut("tau3")
    if "b6" in images:
        images["b9"] = images["b6"] + _ut("tau5")
    return images


def flow_jet_solution(pde: DiffPoly, flow: str) -> DiffPoly:
    """Solve a leftover compatibility equation for the mixed jet
    u_{tau1, flow}: it must occur linearly with a scalar coefficient."""
    key = ("u", tuple(sorted(((("tau1"), 1), (flow, 1)))))
    if pde.degree_in(key) != 1:
        raise InconsistentSystem(
            f"mixed jet {key} does not occur linearly")
    coeff = pde.partial(key)
    c = coeff.as_scalar()
    rest = pde - _jet("u", dict(key[1])) * c
    return rest * (-c.inverse())


def zero_curvature_flow(k: int) -> dict:
    """Certify that the order-(2k+1) leftover equation is the k-th flow:
    solved for the mixed jet it equals kdv_rhs(k) at v = u_{tau1}, and
    it vanishes on the potential-flow shell."""
    zc = zero_curvature(2 * k + 1)
    pde = zc["pde"]
    if k > 1:
        # rewrite the lower mixed flows first; the top mixed jet stays
        pde = reduce_on_shell(pde, pkdv_rules(k - 1))
    derived = flow_jet_solution(pde, zc["flow"])
    target = eval_at(kdv_rhs(k), "v", _ut("tau1"))
    diff = derived - target
    on_shell = reduce_on_shell(zc["pde"], pkdv_rules(k))
    ok = diff.is_zero() and on_shell.is_zero()
    return {"name": f"flow reproduction {k}",
            "claim": "compatibility equation reproduces the k-th flow",
            "k": k, "match": diff.is_zero(),
            "on_shell_zero": on_shell.is_zero(),
            "status": "PASS" if ok else "FAIL",
            "residual": diff}


@lru_cache(maxsize=None)
def closure_identity(j: int) -> DiffPoly:
    """Residual form of the j-th potential-flow closure identity."""
    ensure_series_generators()
    if j == 1:
        return _bj(2) - (rat(1, 4) * _bj(0) ** 2 - 2 * _ut("tau3"))
    if j == 2:
        return _bj(6) - (-_bj(1) ** 2 + rat(1, 8) * _bj(0) ** 3
                         - _bj(0) * _bj(4) - 2 * _ut("tau5"))
    if j == 3:
        return _bj(10) - (rat(1, 2) * _bj(0) * _bj(6)
                          - 2 * _bj(1) * _bj(3) - _bj(4) * _bj(5)
                          - 2 * _ut("tau7"))
    raise ValueError("closure identities are numbered 1..3")


def closure_residual(j: int,
                     images: Optional[Dict[str, DiffPoly]] = None
                     ) -> DiffPoly:
    """Closure identity with the derived coefficient images substituted
    and lower potential flows reduced; zero certifies the identity."""
    imgs = solved_images() if images is None else images
    resid = closure_identity(j)
    for name, img in imgs.items():
        if resid.contains(name):
            resid = eval_at(resid, name, img)
    return reduce_on_shell(resid, pkdv_rules(3))


def potential_reproduction(j: int) -> dict:
    """The closure identity, solved for the bare flow jet, reproduces
    the j-th potential flow."""
    imgs = solved_images()
    resid = closure_identity(j)
    for name, img in imgs.items():
        if resid.contains(name):
            resid = eval_at(resid, name, img)
    flow = TAU_FLOWS[j - 1]
    key = ("u", ((flow, 1),))
    if resid.degree_in(key) != 1:
        raise InconsistentSystem("flow jet does not occur linearly")
    c = resid.partial(key).as_scalar()
    rest = resid - _jet("u", dict(key[1])) * c
    derived = reduce_on_shell(rest * (-c.inverse()), pkdv_rules(max(j - 1, 1))
                              if j > 1 else [])
    diff = derived - pkdv_rhs(j)
    return {"name": f"potential reproduction {j}", "k": j,
            "match": diff.is_zero(),
            "status": "PASS" if diff.is_zero() else "FAIL",
            "residual": diff}


# ---------------------------------------------------------------------------
# structural form of the derived pencils over the base field of v


def u_to_v(p: DiffPoly) -> DiffPoly:
    """Lower jets of u (each carrying at least one tau1) to jets of v."""

    def key_map(key):
        name, didx = key
        if name != "u":
            return key, ONE
        d = dict(didx)
        n1 = d.get("tau1", 0)
        if n1 < 1:
            raise UnsupportedTerm("bare u cannot be lowered to v")
        if n1 == 1:
            del d["tau1"]
        else:
            d["tau1"] = n1 - 1
        return ("v", tuple(sorted(d.items()))), ONE

    return p.map_generators(key_map=key_map)


def _second_symplectic(p: DiffPoly) -> DiffPoly:
    """((1/2) d1^2 + 2 R1) applied to p."""
    return rat(1, 2) * p.derive("tau1").derive("tau1") + 2 * lenard(0) * p


def cad_matrix(k: int) -> MatZPoly:
    """Structural pencil [[ -A_k, C_k ], [ D_k, A_k ]] built from the
    recursion elements over v."""
    if not 1 <= k <= 3:
        raise ValueError("structural pencils available for k = 1..3")
    ensure_series_generators()
    z = _g(ZETA)
    c_k = z ** k
    for j in range(1, k + 1):
        c_k = c_k + (z ** (k - j) if k - j else DiffPoly.one()) \
            * lenard(j - 1)
    a_k = rat(1, 2) * c_k.derive("tau1")
    d_k = z ** (k + 1) - lenard(0) * z ** k
    for j in range(2, k + 1):
        d_k = d_k + (lenard(j - 1) - _second_symplectic(lenard(j - 2))) \
            * z ** (k + 1 - j)
    d_k = d_k - _second_symplectic(lenard(k - 1))
    return MatZPoly(-a_k, c_k, d_k, a_k)


def verify_CAD(k: int) -> dict:
    """The solved order-(2k+1) pencil, reduced on the potential-flow
    shell and lowered to v, equals the structural pencil."""
    if not 1 <= k <= 3:
        raise ValueError("structural pencils available for k = 1..3")
    imgs = solved_images(2 * k + 1)
    mat = ansatz(2 * k + 1)

    def _close(p: DiffPoly) -> DiffPoly:
        for name, img in imgs.items():
            if p.contains(name):
                p = eval_at(p, name, img)
        return u_to_v(reduce_on_shell(p, pkdv_rules(3)))

    derived = mat.map(_close)
    resid = derived - cad_matrix(k)
    ok = resid.is_zero()
    if not ok:
        raise ResidualNonzero(
            f"structural pencil mismatch at k={k}: {resid!r}")
    return {"name": f"structural pencil {k}", "k": k,
            "status": "PASS", "residual": resid}


# ---------------------------------------------------------------------------
# half-power series


NEG_INF = -(10 ** 9)


class HalfSeries:
    """Matrix Laurent series in the half-power variable x (x**2 is the
    spectral variable): one MatZPoly coefficient per integer exponent.

    Coefficients at exponents >= low are exact; anything below low is
    unknown and silently dropped.  Finitely many terms above, so the
    exactness floor of a product is computable.
    """

    __slots__ = ("coeffs", "low")

    def __init__(self, coeffs: Mapping[int, MatZPoly], low: int):
        self.coeffs = {p: M for p, M in coeffs.items()
                       if p >= low and not M.is_zero()}
        self.low = low

    @staticmethod
    def zero() -> "HalfSeries":
        return HalfSeries({}, NEG_INF)

    @staticmethod
    def constant(M: MatZPoly) -> "HalfSeries":
        return HalfSeries({0: M}, NEG_INF)

    def coeff(self, p: int) -> MatZPoly:
        if p < self.low:
            raise TruncationTooShallow(
                f"exponent {p}/2 below the exactness floor {self.low}/2")
        got = self.coeffs.get(p)
        if got is not None:
            return got
        sample = next(iter(self.coeffs.values()), None)
        if isinstance(sample, DiffPoly):
            return DiffPoly.zero()
        return MatZPoly.zero()

    def _top(self) -> int:
        return max(self.coeffs, default=self.low - 1)

    def __add__(self, other: "HalfSeries") -> "HalfSeries":
        low = max(self.low, other.low)
        out = dict(self.coeffs)
        for p, M in other.coeffs.items():
            got = out.get(p)
            out[p] = M if got is None else got + M
        return HalfSeries(out, low)

    def __sub__(self, other: "HalfSeries") -> "HalfSeries":
        return self + other.scale_scalar(MINUS_ONE)

    def __mul__(self, other: "HalfSeries") -> "HalfSeries":
        low = max(self.low + other._top(), other.low + self._top(),
                  NEG_INF)
        out: Dict[int, MatZPoly] = {}
        for p, A in self.coeffs.items():
            for q, B in other.coeffs.items():
                if p + q < low:
                    continue
                got = out.get(p + q)
                prod = A * B
                out[p + q] = prod if got is None else got + prod
        return HalfSeries(out, low)

    def shift(self, n: int) -> "HalfSeries":
        return HalfSeries({p + n: M for p, M in self.coeffs.items()},
                          max(self.low + n, NEG_INF))

    def scale(self, f: DiffPoly) -> "HalfSeries":
        return HalfSeries({p: M.scale(f) for p, M in self.coeffs.items()},
                          self.low)

    def scale_scalar(self, c: Scalar) -> "HalfSeries":
        f = DiffPoly.const(c)
        return self.scale(f)

    def map(self, fn) -> "HalfSeries":
        return HalfSeries({p: M.map(fn) for p, M in self.coeffs.items()},
                          self.low)

    def conj_const(self, L: MatZPoly, R: MatZPoly) -> "HalfSeries":
        return HalfSeries({p: L * M * R for p, M in self.coeffs.items()},
                          self.low)

    def quarter_conj(self) -> "HalfSeries":
        """Conjugation by diag(x, 1/x) applied from the left-inverse
        side: off-diagonal exponents shift by -/+ 1."""
        out: Dict[int, MatZPoly] = {}

        def put(p, i, j, val):
            if val.is_zero():
                return
            got = out.get(p)
            if got is None:
                got = MatZPoly.zero()
            m = list(got.m)
            m[2 * i + j] = m[2 * i + j] + val
            out[p] = MatZPoly(*m)

        for p, M in self.coeffs.items():
            put(p, 0, 0, M.entry(0, 0))
            put(p, 1, 1, M.entry(1, 1))
            put(p - 1, 0, 1, M.entry(0, 1))
            put(p + 1, 1, 0, M.entry(1, 0))
        return HalfSeries(out, max(self.low + 1, NEG_INF))

    def powers(self) -> List[int]:
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __repr__(self):
        ps = self.powers()
        return f"HalfSeries(powers={ps}, low={self.low})"


SIGMA3 = MatZPoly.diag(DiffPoly.one(), DiffPoly.const(MINUS_ONE))


def _quarter_root(sign: int) -> Scalar:
    """exp(sign * i*pi/4) as an exact ring element."""
    return rat(1, 2) * SQRT2 * (ONE + (I if sign > 0 else -I))


@lru_cache(maxsize=None)
def n_matrix() -> MatZPoly:
    """Constant rotation factor of the outer normalization."""
    em = DiffPoly.const(rat(1, 2) * (ONE - I))
    ep = DiffPoly.const(rat(1, 2) * (ONE + I))
    return MatZPoly(em, ep, -em, ep)


@lru_cache(maxsize=None)
def n_matrix_inv() -> MatZPoly:
    em = DiffPoly.const(rat(1, 2) * (ONE - I))
    ep = DiffPoly.const(rat(1, 2) * (ONE + I))
    return MatZPoly(ep, -ep, em, em)


# ---------------------------------------------------------------------------
# outer expansion: symbols, series, flow pencils


class SymbolBank:
    """Accessors for the outer-expansion indeterminates.

    P(j), Q(j) are the two independent entries of the j-th coefficient
    matrix; dP(j, m), dQ(j, m) their flow-derivative tags (independent
    symbols); u_alias is the combination the flows evolve."""

    @staticmethod
    def P(j: int) -> DiffPoly:
        ensure_series_generators()
        return _g(f"P{j}")

    @staticmethod
    def Q(j: int) -> DiffPoly:
        ensure_series_generators()
        return _g(f"Q{j}")

    @staticmethod
    def dP(j: int, m: int) -> DiffPoly:
        ensure_series_generators()
        return _g(f"dP{j}_{m}")

    @staticmethod
    def dQ(j: int, m: int) -> DiffPoly:
        ensure_series_generators()
        return _g(f"dQ{j}_{m}")

    @staticmethod
    def u_alias() -> DiffPoly:
        return SymbolBank.P(1) + I * SymbolBank.Q(1)

    @staticmethod
    def v_alias() -> DiffPoly:
        P1, Q1, Q2 = SymbolBank.P(1), SymbolBank.Q(1), SymbolBank.Q(2)
        return -2 * I * P1 * Q1 + 2 * Q1 ** 2 - 2 * I * Q2


def x_coeff_matrix(j: int) -> MatZPoly:
    """The j-th outer coefficient: trace-free symmetric at odd order,
    rotation-like at even order."""
    P, Q = SymbolBank.P(j), SymbolBank.Q(j)
    if j % 2:
        return MatZPoly(P, Q, Q, -P)
    return MatZPoly(P, Q, -Q, P)


def x_tag_matrix(j: int, m: int) -> MatZPoly:
    dP, dQ = SymbolBank.dP(j, m), SymbolBank.dQ(j, m)
    if j % 2:
        return MatZPoly(dP, dQ, dQ, -dP)
    return MatZPoly(dP, dQ, -dQ, dP)


@lru_cache(maxsize=None)
def x_series(order: int = X_ORDER) -> HalfSeries:
    """S = I + sum_j X^(j) x^(-j), exact down to x^(-order)."""
    ensure_series_generators()
    coeffs = {0: MatZPoly.identity()}
    for j in range(1, order + 1):
        coeffs[-j] = x_coeff_matrix(j)
    return HalfSeries(coeffs, -order)


@lru_cache(maxsize=None)
def x_series_inverse(order: int = X_ORDER) -> HalfSeries:
    """Neumann inverse of the outer series, exact down to x^(-order)."""
    S = x_series(order)
    inv = {0: MatZPoly.identity()}
    for n in range(1, order + 1):
        acc = MatZPoly.zero()
        for j in range(1, n + 1):
            acc = acc + S.coeff(-j) * inv[-(n - j)]
        inv[-n] = -acc
    return HalfSeries(inv, -order)


@lru_cache(maxsize=None)
def x_flow_tag_series(m: int, order: int = X_ORDER) -> HalfSeries:
    """Flow derivative of the outer series, entries as tag symbols."""
    coeffs = {-j: x_tag_matrix(j, m) for j in range(1, order + 1)}
    return HalfSeries(coeffs, -order)


def gtilde() -> DiffPoly:
    """Residue parameter of the triangular prefactor."""
    return -2 * I * SymbolBank.Q(1)


def _a_conj(series: HalfSeries, g: DiffPoly) -> HalfSeries:
    """Conjugate by the unipotent prefactor [[1,0],[g,1]] entrywise."""

    def one(M: MatZPoly) -> MatZPoly:
        m11, m12, m21, m22 = M.m
        return MatZPoly(
            m11 - g * m12,
            m12,
            m21 + g * (m11 - m22) - g * g * m12,
            m22 + g * m12)

    return HalfSeries({p: one(M) for p, M in series.coeffs.items()},
                      series.low)


def _parity_check(series: HalfSeries) -> None:
    """Diagonal entries live at even exponents, off-diagonal at odd;
    wrong-parity coefficients must vanish identically."""
    for p, M in series.coeffs.items():
        for i in range(2):
            for j in range(2):
                q = M.entry(i, j)
                if q.is_zero():
                    continue
                want_even = (i == j)
                if (p % 2 == 0) != want_even:
                    raise InconsistentSystem(
                        f"parity violation at x^{p} entry ({i+1},{j+1}): "
                        f"{q}")


@lru_cache(maxsize=None)
def x_flow_raw(m: int, order: int = X_ORDER) -> HalfSeries:
    """(d_m X) X^(-1) pushed through the constant conjugations: the
    series whose nonnegative even part is the order-m pencil and whose
    negative even part must vanish."""
    if m not in (1, 3, 5, 7):
        raise ValueError("flows are labelled 1, 3, 5, 7")
    S = x_series(order)
    T = x_series_inverse(order)
    dS = x_flow_tag_series(m, order)
    core = dS * T - (S.conj_const(MatZPoly.identity(), SIGMA3) * T).shift(m)
    H = core.conj_const(n_matrix(), n_matrix_inv())
    _parity_check(H)
    K = H.quarter_conj()
    g = gtilde()
    B = _a_conj(K, g)
    dmat = MatZPoly(DiffPoly.zero(), DiffPoly.zero(),
                    -2 * I * SymbolBank.dQ(1, m), DiffPoly.zero())
    B = B + HalfSeries({0: dmat}, NEG_INF)
    for p in B.powers():
        if p % 2:
            raise InconsistentSystem(
                f"odd half-power x^{p} survives in the flow-{m} pencil: "
                f"{B.coeff(p)!r}")
    return B


@lru_cache(maxsize=None)
def series_relations(m: int, orders: frozenset = frozenset({1, 2}),
                     order: int = X_ORDER) -> dict:
    """Vanishing conditions of the order-m flow pencil at the requested
    negative spectral powers.  Solves the flow tags; every leftover
    condition must already vanish, since the algebraic relations among
    the coefficients enter through flow-constancy of the determinant,
    not as extra rows here."""
    B = x_flow_raw(m, order)
    needed = -2 * max(orders)
    if B.low > needed:
        raise TruncationTooShallow(
            f"flow {m} at depth {order} reaches x^{B.low}, need "
            f"x^{needed}")
    conditions = []
    tag_names = set()
    for n in sorted(orders):
        M = B.coeff(-2 * n)
        for i in range(2):
            for j in range(2):
                q = M.entry(i, j)
                if not q.is_zero():
                    conditions.append(q)
                for jj in range(1, order + 1):
                    if q.contains(f"dP{jj}_{m}"):
                        tag_names.add(f"dP{jj}_{m}")
                    if q.contains(f"dQ{jj}_{m}"):
                        tag_names.add(f"dQ{jj}_{m}")
    solved, leftovers = greedy_solve(conditions, sorted(tag_names))
    return {"flow": m, "orders": sorted(orders), "tags": solved,
            "leftovers": leftovers, "raw": B}


def _substitute_tags(p: DiffPoly, tags: Mapping[str, DiffPoly]) -> DiffPoly:
    for name, img in tags.items():
        if p.contains(name):
            p = eval_at(p, name, img)
    return p


def flow_derivative(p: DiffPoly, m: int, order: int = X_ORDER) -> DiffPoly:
    """Formal order-m flow derivative of a coefficient polynomial:
    Leibniz over the expansion symbols, images the derivative tags."""
    out = DiffPoly.zero()
    for j in range(1, order + 1):
        for stem, tag in (("P", "dP"), ("Q", "dQ")):
            name = f"{stem}{j}"
            if p.contains(name):
                out = out + p.partial((name, ())) * _g(f"{tag}{j}_{m}")
    return out


@lru_cache(maxsize=None)
def det_series(order: int = X_ORDER) -> Dict[int, DiffPoly]:
    """Coefficients of det S per power of the half-power variable;
    the unit-determinant normalization makes each negative-power
    coefficient an algebraic relation among the expansion symbols."""
    S = x_series(order)
    out: Dict[int, DiffPoly] = {}
    for p1, A in S.coeffs.items():
        for p2, B in S.coeffs.items():
            if p1 + p2 < -order:
                continue
            q = A.entry(0, 0) * B.entry(1, 1) - A.entry(0, 1) * B.entry(1, 0)
            got = out.get(p1 + p2)
            out[p1 + p2] = q if got is None else got + q
    return {p: q for p, q in out.items() if not q.is_zero()}


def det_relations(depth: int = 8) -> Dict[int, DiffPoly]:
    """The candidate relations: negative-power determinant coefficients
    down to x^(-depth)."""
    d = det_series()
    return {-p: d[p] for p in d if -depth <= p < 0}


@lru_cache(maxsize=None)
def relation_flatness(depth: int = 8) -> dict:
    """Derivation of the coefficient relations: each determinant
    coefficient is flat along the first flow once the expansion
    conditions are imposed, so with decaying normalization it vanishes
    identically.  Returns the (necessarily zero) flatness residuals."""
    orders = frozenset(range(1, depth // 2 + 1))
    rel = series_relations(1, orders)
    out = {}
    for n, c in sorted(det_relations(depth).items()):
        resid = _substitute_tags(flow_derivative(c, 1), rel["tags"])
        if not resid.is_zero():
            raise ResidualNonzero(
                f"determinant coefficient at x^-{n} is not flow-flat: "
                f"{resid}")
        out[n] = resid
    return {"depth": depth, "residuals": out}


@lru_cache(maxsize=None)
def even_elimination(depth: int = 8) -> Dict[str, DiffPoly]:
    """Solved form of the determinant relations: images for the
    even-index diagonal symbols, used to normalize series expressions
    before comparison."""
    eqs = [c for _, c in sorted(det_relations(depth).items())]
    names = [f"P{2 * n}" for n in range(1, depth // 2 + 1)]
    solved, leftovers = greedy_solve(eqs, names)
    if leftovers:
        raise InconsistentSystem(
            "determinant relations did not solve the even diagonal "
            f"symbols: {leftovers}")
    return solved


def normalize_even(p: DiffPoly, depth: int = 8) -> DiffPoly:
    """Eliminate the even-index diagonal symbols via the determinant
    relations."""
    return _substitute_tags(p, even_elimination(depth))


def derived_pencil(m: int, order: int = X_ORDER) -> MatZPoly:
    """Nonnegative part of the order-m flow series as a zeta pencil,
    with the solved flow tags substituted."""
    rel = series_relations(m, order=order)
    B = rel["raw"]
    z = _g(ZETA)
    total = MatZPoly.zero()
    for p in B.powers():
        if p < 0:
            continue
        M = B.coeff(p).map(lambda q: _substitute_tags(q, rel["tags"]))
        total = total + (M.scale(z ** (p // 2)) if p else M)
    return total


_PENCIL_SLOTS = {
    1: {("b0", 0, (1, 0))},
    3: {("b1", 0, (0, 0)), ("b2", 0, (1, 0))},
    5: {("b3", 0, (0, 0)), ("b4", 0, (0, 1)), ("b6", 0, (1, 0)),
        ("b5", 1, (1, 0))},
    7: {("b7", 0, (0, 0)), ("b8", 0, (0, 1)), ("b10", 0, (1, 0)),
        ("b9", 1, (1, 0))},
}


def _assert_no_tags(p: DiffPoly, m: int, what: str) -> DiffPoly:
    for j in range(1, X_ORDER + 1):
        for stem in ("dP", "dQ"):
            if p.contains(f"{stem}{j}_{m}"):
                raise UnknownSurvivor(
                    f"tag {stem}{j}_{m} survives in {what}")
    return p


@lru_cache(maxsize=None)
def pencil_entries(m: int) -> Dict[str, DiffPoly]:
    """Named coefficient images read off the derived order-m pencil;
    all flow tags must have cancelled."""
    mat = derived_pencil(m)
    out = {}
    for name, power, (i, j) in sorted(_PENCIL_SLOTS[m]):
        val = var_coeff(mat.entry(i, j), ZETA, power)
        out[name] = _assert_no_tags(val, m, f"pencil entry {name}")
    return out


@lru_cache(maxsize=None)
def u_flow_image(m: int) -> DiffPoly:
    """Derived image of the order-m flow derivative of the u alias;
    the free tags must cancel."""
    rel = series_relations(m)
    img = _substitute_tags(SymbolBank.dP(1, m) + I * SymbolBank.dQ(1, m),
                           rel["tags"])
    return _assert_no_tags(img, m, "the flow image of u")


def uv_consistency() -> dict:
    """The first-flow derivative of u, derived from the expansion
    conditions, equals the defining combination for v.  Includes a
    negative control with the second-coefficient term dropped and the
    trivial all-zero check."""
    derived = u_flow_image(1)
    full = derived - SymbolBank.v_alias()
    if not full.is_zero():
        raise ResidualNonzero(f"u-v consistency residual: {full}")
    broken = derived - (SymbolBank.v_alias() + 2 * I * SymbolBank.Q(2))
    zero_map = {}
    for j in range(1, X_ORDER + 1):
        zero_map[f"P{j}"] = DiffPoly.zero()
        zero_map[f"Q{j}"] = DiffPoly.zero()
    trivial = _substitute_tags(derived, zero_map) - \
        _substitute_tags(SymbolBank.v_alias(), zero_map)
    return {
        "name": "u-v consistency",
        "status": "PASS",
        "residual": full,
        "negative_control_nonzero": not broken.is_zero(),
        "trivial_zero": trivial.is_zero(),
    }


# ---------------------------------------------------------------------------
# carrier images of the leading expansion coefficients
#
# g is the invertible seventh root of the leading thinning datum, so
# every fractional power of that datum is an integer power of g.


def carrier_c1() -> DiffPoly:
    """Shift constant of the first expansion coefficient."""
    ensure_series_generators()
    return (rat(1, 4) * _g("s1", 2) * _g("t1") * _g("g", -11)
            - _g("s1") * _g("t0") * _g("g", -6)
            + rat(5, 64) * _g("s1", 4) * _g("g", -21))


@lru_cache(maxsize=None)
def carrier_twins() -> Dict[str, DiffPoly]:
    """Carrier-variable images of the leading expansion coefficients,
    with the shift constant expanded."""
    ensure_series_generators()
    gamma = _g("gamma")
    alpha = _g("alpha")
    h = _jet("h", {})
    y = _jet("y", {})
    c1 = carrier_c1()
    gi = lambda k: _g("g", -k)
    return {
        "x11_1": HALF * gamma * gi(1) + c1 + h * gi(1),
        "x12_1": HALF * I * gamma * gi(1),
        "x11_2": (HALF * gamma * c1 * gi(1) + HALF * gamma * h * gi(2)
                  + HALF * c1 ** 2 + c1 * h * gi(1)
                  + HALF * h ** 2 * gi(2)),
        "x12_2": I * (HALF * gamma * c1 * gi(1)
                      + HALF * gamma * h * gi(2) + alpha * gi(2)
                      - rat(1, 4) * _g("s1") * gi(7) + HALF * y * gi(2)),
        "u": -gamma * gi(1) - h * gi(1) - c1,
        "v": (2 * alpha * gi(2) - gamma ** 2 * gi(2) + y * gi(2)
              - HALF * _g("s1") * gi(7)),
    }


@lru_cache(maxsize=None)
def gamma_image() -> DiffPoly:
    """The residue parameter in carrier variables, derived by equating
    the two carrier forms of u."""
    tw = carrier_twins()
    diff = (tw["x11_1"] + I * tw["x12_1"]) - tw["u"]
    solved, leftovers = greedy_solve([diff * _g("g")], ["gamma"])
    if leftovers or "gamma" not in solved:
        raise InconsistentSystem(
            "carrier u-consistency did not determine gamma")
    return solved["gamma"]


def carrier_checks() -> dict:
    """Content checks on the carrier images: the second diagonal
    coefficient satisfies the determinant relation, the v-form is
    consistent after eliminating the residue parameter, and the
    triangular-prefactor residue matches."""
    tw = carrier_twins()
    gam = gamma_image()

    d2 = tw["x11_2"] - HALF * (tw["x11_1"] ** 2 + tw["x12_1"] ** 2)
    if not d2.is_zero():
        raise ResidualNonzero(f"carrier determinant relation fails: {d2}")

    v_from_entries = (-2 * I * tw["x11_1"] * tw["x12_1"]
                      + 2 * tw["x12_1"] ** 2 - 2 * I * tw["x12_2"])
    v_resid = eval_at(v_from_entries - tw["v"], "gamma", gam)
    if not v_resid.is_zero():
        raise ResidualNonzero(
            f"carrier v-consistency fails after gamma elimination: "
            f"{v_resid}")

    residue = -2 * I * tw["x12_1"] - _g("gamma") * _g("g", -1)
    if not residue.is_zero():
        raise ResidualNonzero(
            f"carrier residue identity fails: {residue}")

    return {"name": "carrier coefficient images", "status": "PASS",
            "gamma": gam, "residuals": {"determinant": d2,
                                        "v_consistency": v_resid,
                                        "residue": residue}}


# ---------------------------------------------------------------------------
# inner connection problem: twins, shell rules, half-power series in z


def _mz(a11, a12, a21, a22) -> MatZPoly:
    def lift(v):
        if isinstance(v, DiffPoly):
            return v
        return DiffPoly.const(Scalar.of(v))
    return MatZPoly(lift(a11), lift(a12), lift(a21), lift(a22))


def _yj(*flows: str) -> DiffPoly:
    counts: Dict[str, int] = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return _jet("y", counts)


def _hj(*flows: str) -> DiffPoly:
    counts: Dict[str, int] = {}
    for f in flows:
        counts[f] = counts.get(f, 0) + 1
    return _jet("h", counts)


@lru_cache(maxsize=None)
def inner_w_twin() -> MatZPoly:
    """First inner connection matrix, degree one in the spectral
    variable."""
    ensure_series_generators()
    z = _g(ZETA)
    return _mz(0, -2, -2 * z + 2 * _yj() + _hj("t0"), 0)


@lru_cache(maxsize=None)
def inner_v_twin() -> MatZPoly:
    ensure_series_generators()
    z = _g(ZETA)
    y, y0 = _yj(), _yj("t0")
    return _mz(
        rat(1, 6) * y0,
        rat(2, 3) * z + rat(2, 3) * y,
        rat(2, 3) * z ** 2 - rat(2, 3) * z * y + rat(2, 3) * y ** 2
        + 2 * _hj("t1"),
        -rat(1, 6) * y0)


@lru_cache(maxsize=None)
def inner_u_twin() -> MatZPoly:
    ensure_series_generators()
    z = _g(ZETA)
    y, y0, y00, y000 = _yj(), _yj("t0"), _yj("t0", "t0"), \
        _yj("t0", "t0", "t0")
    t0, t1 = _g("t0"), _g("t1")
    diag = rat(1, 4) * y0 * z + rat(3, 4) * y * y0 + rat(1, 64) * y000
    return MatZPoly(
        diag,
        z ** 2 + y * z + rat(3, 2) * y ** 2 + rat(1, 16) * y00 + t1,
        z ** 3 - y * z ** 2 + (t1 - rat(1, 2) * y ** 2
                               - rat(1, 16) * y00) * z
        + 2 * y ** 3 + rat(1, 8) * y * y00 - rat(1, 16) * y0 ** 2
        - 2 * t0,
        -diag)


@lru_cache(maxsize=None)
def kdv_inner_poly() -> DiffPoly:
    """Evolution polynomial for y in the inner variables: vanishes on
    the y-flow shell."""
    ensure_series_generators()
    return _yj("t1") - y_flow_rhs()


@lru_cache(maxsize=None)
def handy_poly() -> DiffPoly:
    ensure_series_generators()
    return _hj("t0") - handy_rhs()


@lru_cache(maxsize=None)
def trace_relation_poly() -> DiffPoly:
    """Trace relation from the spectral limit of the inner system;
    three times the potential-flow equation once the first-derivative
    relation is used."""
    ensure_series_generators()
    return 3 * _yj() ** 2 + rat(1, 8) * _yj("t0", "t0") + 3 * _hj("t1")


def _pi2_order4_rule() -> FlowRule:
    rest = pi2_poly() - rat(1, 64) * _jet("y", {"t0": 4})
    return FlowRule("y", "t0", Scalar.of(-64) * rest, order=4)


@lru_cache(maxsize=None)
def inner_rules() -> Tuple[FlowRule, ...]:
    """Shell rules of the inner variables: potential flow for h, first
    derivative of h, evolution of y, and the fourth-order equation."""
    ensure_series_generators()
    return (FlowRule("h", "t1", h_flow_rhs()),
            FlowRule("h", "t0", handy_rhs()),
            FlowRule("y", "t1", y_flow_rhs()),
            _pi2_order4_rule())


def var_derive(p: DiffPoly, name: str) -> DiffPoly:
    """Polynomial derivative in a plain generator."""
    key = (name, ())
    out: dict = {}
    for m, c in p.terms.items():
        d = dict(m)
        e = d.get(key, 0)
        if e == 0:
            continue
        if e == 1:
            del d[key]
        else:
            d[key] = e - 1
        mono = tuple(sorted(d.items()))
        cc = c * Scalar.of(e)
        got = out.get(mono)
        out[mono] = cc if got is None else got + cc
    return DiffPoly(out)


def _collapse_locations(resid: MatZPoly, target: DiffPoly,
                        rules: Tuple[FlowRule, ...],
                        claim: str) -> dict:
    """Reduce a pencil residual on the given shell; every surviving
    coefficient must be an exact scalar multiple of the target."""
    multipliers = {}
    for i in range(2):
        for j in range(2):
            q = reduce_on_shell(resid.entry(i, j), list(rules))
            if q.is_zero():
                continue
            deg = var_degree(q, ZETA)
            for k in range(deg + 1):
                c = var_coeff(q, ZETA, k)
                if c.is_zero():
                    continue
                lam = exact_multiple(c, target)
                if lam is None:
                    raise NonCollapsing(
                        f"{claim}: entry ({i+1},{j+1}) power {k} leaves "
                        f"{c}")
                multipliers[(i + 1, j + 1, k)] = lam
    if not multipliers:
        raise NonCollapsing(f"{claim}: residual vanished identically, "
                            "expected a nonzero multiple")
    return multipliers


def compat_first(u_mat: Optional[MatZPoly] = None) -> dict:
    """d/dz of the first inner matrix minus the t0-derivative of the
    spectral matrix plus their commutator: collapses to multiples of
    the fourth-order polynomial."""
    W = inner_w_twin()
    U = inner_u_twin() if u_mat is None else u_mat
    resid = W.map(lambda p: var_derive(p, ZETA)) \
        - U.map(lambda p: p.derive("t0")) + W.commutator(U)
    rules = (FlowRule("h", "t0", handy_rhs()),)
    mult = _collapse_locations(resid, pi2_poly(), rules,
                               "first compatibility")
    return {"name": "first compatibility", "status": "PASS",
            "multipliers": mult}


def compat_second(v_mat: Optional[MatZPoly] = None) -> dict:
    """t1-derivative of the first inner matrix minus the t0-derivative
    of the second plus their commutator: collapses to multiples of the
    y evolution polynomial on the potential-flow shell."""
    W = inner_w_twin()
    V = inner_v_twin() if v_mat is None else v_mat
    resid = W.map(lambda p: p.derive("t1")) \
        - V.map(lambda p: p.derive("t0")) + W.commutator(V)
    rules = (FlowRule("h", "t1", h_flow_rhs()),
             FlowRule("h", "t0", handy_rhs()))
    mult = _collapse_locations(resid, kdv_inner_poly(), rules,
                               "second compatibility")
    return {"name": "second compatibility", "status": "PASS",
            "multipliers": mult}


# ---------------------------------------------------------------------------
# inner half-power series and the first-flow connection


_PHI_UNKNOWNS = tuple(f"ph{stem}{k}" for stem in ("q", "r", "v", "w")
                      for k in range(1, 6))


def phi_coeff_matrix(j: int) -> MatZPoly:
    """j-th inner expansion coefficient: the first two are known in
    the inner scalars, the rest carry unknown real entries."""
    ensure_series_generators()
    if j == 1:
        h = _hj()
        return MatZPoly(-h, DiffPoly.zero(), DiffPoly.zero(), h)
    if j == 2:
        h, y = _hj(), _yj()
        return MatZPoly(HALF * h ** 2, HALF * I * y,
                        -HALF * I * y, HALF * h ** 2)
    k = (j - 1) // 2
    if j % 2:
        a, b = _jet(f"phq{k}", {}), _jet(f"phr{k}", {})
        return MatZPoly(a, I * b, I * b, -a)
    a, b = _jet(f"phv{k}", {}), _jet(f"phw{k}", {})
    return MatZPoly(a, I * b, -I * b, a)


@lru_cache(maxsize=None)
def phi_series(order: int = PHI_ORDER) -> HalfSeries:
    coeffs = {0: MatZPoly.identity()}
    for j in range(1, order + 1):
        coeffs[-j] = phi_coeff_matrix(j)
    return HalfSeries(coeffs, -order)


@lru_cache(maxsize=None)
def phi_series_inverse(order: int = PHI_ORDER) -> HalfSeries:
    S = phi_series(order)
    inv = {0: MatZPoly.identity()}
    for n in range(1, order + 1):
        acc = MatZPoly.zero()
        for j in range(1, n + 1):
            acc = acc + S.coeff(-j) * inv[-(n - j)]
        inv[-n] = -acc
    return HalfSeries(inv, -order)


@lru_cache(maxsize=None)
def inner_first_flow_series(order: int = PHI_ORDER) -> HalfSeries:
    """The t0-connection as a series in the half-power variable: the
    nonnegative part is the first inner matrix, the negative part
    carries the vanishing conditions."""
    S = phi_series(order)
    T = phi_series_inverse(order)
    dS = HalfSeries(
        {p: M.map(lambda q: q.derive("t0")) for p, M in S.coeffs.items()},
        S.low)
    core = dS * T + (S.conj_const(MatZPoly.identity(), SIGMA3) * T).shift(1) \
        .scale_scalar(Scalar.of(2))
    H = core.conj_const(n_matrix(), n_matrix_inv())
    _parity_check(H)
    return H.quarter_conj()


def derived_inner_w() -> MatZPoly:
    """Nonnegative part of the t0-connection series as a pencil in the
    spectral variable; involves only the first two expansion
    coefficients, so no unknowns enter."""
    B = inner_first_flow_series()
    z = _g(ZETA)
    total = MatZPoly.zero()
    for p in B.powers():
        if p < 0:
            continue
        if p % 2:
            raise InconsistentSystem(
                f"odd half-power x^{p} in the t0-connection: "
                f"{B.coeff(p)!r}")
        M = B.coeff(p)
        total = total + (M.scale(z ** (p // 2)) if p else M)
    return total


def handy_extraction() -> dict:
    """The upper-right vanishing condition of the t0-connection at the
    first negative power: an exact scalar multiple of the
    first-derivative relation between the inner scalars."""
    B = inner_first_flow_series()
    cond = B.coeff(-2).entry(0, 1)
    lam = exact_multiple(cond, handy_poly())
    if lam is None or lam == ZERO:
        raise NonCollapsing(
            f"first-flow limit condition does not collapse: {cond}")
    return {"name": "first-derivative relation", "status": "PASS",
            "condition": cond, "multiplier": lam}


def appendixB_lax() -> dict:
    """Inner Lax system report: both compatibility collapses and the
    series limit relation."""
    a = compat_first()
    b = compat_second()
    c = handy_extraction()
    w_resid = derived_inner_w() - inner_w_twin()
    if not w_resid.is_zero():
        raise NonCollapsing(
            f"derived t0-connection differs from its twin: {w_resid!r}")
    return {"name": "inner Lax system", "status": "PASS",
            "first": a, "second": b, "limit": c}


# ---------------------------------------------------------------------------
# spectral-derivative connection: determines the unknown expansion entries


def _embed_pencil(P: MatZPoly) -> HalfSeries:
    """Pencil in the spectral variable as a half-power series (z = x**2)."""
    deg = max(var_degree(P.entry(i, j), ZETA)
              for i in range(2) for j in range(2))
    out: Dict[int, MatZPoly] = {}
    for k in range(deg + 1):
        out[2 * k] = P.map(lambda p, k=k: var_coeff(p, ZETA, k))
    return HalfSeries(out, NEG_INF)


@lru_cache(maxsize=None)
def inner_z_series(order: int = PHI_ORDER) -> HalfSeries:
    """Connection series in the spectral derivative; its pencil part
    must match the cubic spectral matrix and its negative part must
    vanish, which together pin down the unknown expansion entries."""
    ensure_series_generators()
    S = phi_series(order)
    T = phi_series_inverse(order)
    dz: Dict[int, MatZPoly] = {}
    for p, M in S.coeffs.items():
        if p == 0:
            continue
        dz[p - 2] = M.scale(rat(p, 2))
    dzS = HalfSeries(dz, -order - 2)
    ssig = S.conj_const(MatZPoly.identity(), SIGMA3) * T
    theta = ssig.shift(5) + ssig.scale(_g("t1")).shift(1) \
        - ssig.scale(_g("t0")).shift(-1)
    core = dzS * T - theta
    H = core.conj_const(n_matrix(), n_matrix_inv())
    _parity_check(H)
    K = H.quarter_conj()
    return K + HalfSeries({-2: SIGMA3.scale(rat(-1, 4))}, NEG_INF)


@lru_cache(maxsize=None)
def _inner_solution(order: int = PHI_ORDER
                    ) -> Tuple[Mapping[str, DiffPoly],
                               Tuple[DiffPoly, ...]]:
    resid = inner_z_series(order) - _embed_pencil(inner_u_twin())
    equations: List[DiffPoly] = []
    for p in sorted(resid.powers(), reverse=True):
        M = resid.coeff(p)
        for i in range(2):
            for j in range(2):
                e = M.entry(i, j)
                if not e.is_zero():
                    equations.append(e)
    solved, leftovers = greedy_solve(equations, list(_PHI_UNKNOWNS))
    integrals: List[DiffPoly] = []
    rules = list(inner_rules())
    for lf in leftovers:
        if any(lf.contains(n) for n in _PHI_UNKNOWNS):
            # deep-order condition still coupling truncated entries
            continue
        flat = reduce_on_shell(lf.derive("t0"), rules)
        if not flat.is_zero():
            raise InconsistentSystem(
                f"spectral-derivative residual is not a first "
                f"integral: {lf}")
        integrals.append(lf)
    return solved, tuple(integrals)


def inner_unknown_images(order: int = PHI_ORDER
                         ) -> Mapping[str, DiffPoly]:
    """Unknown expansion entries as differential polynomials in the
    two inner scalars, solved from the spectral-derivative conditions.

    Unknown-free residuals of the solve are first integrals (constant
    along the first flow, normalized away); they are checked, not
    imposed."""
    return _inner_solution(order)[0]


def inner_first_integrals(order: int = PHI_ORDER) -> Tuple[DiffPoly, ...]:
    return _inner_solution(order)[1]


# ---------------------------------------------------------------------------
# kernel density on the negative axis


_MINUS_I = MINUS_ONE * I
_PHASES = (ONE, _MINUS_I, MINUS_ONE, I)   # powers of -i


def mid_printed() -> DiffPoly:
    """Middle coefficient of the density quadratic form as displayed
    in the corollary."""
    ensure_series_generators()
    return rat(1, 4) * _yj("t0") * _g(ZETA) - _yj("t1")


def _neg_axis(p: DiffPoly) -> Dict[int, DiffPoly]:
    """Substitute the spectral variable by -w**2, returning
    w-power -> coefficient."""
    out: Dict[int, DiffPoly] = {}
    for k in range(var_degree(p, ZETA) + 1):
        c = var_coeff(p, ZETA, k)
        if c.is_zero():
            continue
        out[2 * k] = c if k % 2 == 0 else -c
    return out


def _ws_mul(a: Dict[int, DiffPoly], alow: int,
            b: Dict[int, DiffPoly], blow: int
            ) -> Tuple[Dict[int, DiffPoly], int]:
    atop = max(a, default=alow - 1)
    btop = max(b, default=blow - 1)
    low = max(alow + btop, blow + atop)
    out: Dict[int, DiffPoly] = {}
    for p, cp in a.items():
        for q, cq in b.items():
            if p + q < low:
                continue
            prod = cp * cq
            got = out.get(p + q)
            out[p + q] = prod if got is None else got + prod
    return out, low


def _ws_poly_mul(poly: Dict[int, DiffPoly],
                 a: Dict[int, DiffPoly], alow: int
                 ) -> Tuple[Dict[int, DiffPoly], int]:
    # poly is exact at every order, so only its top power floors the result
    low = alow + max(poly, default=0)
    out: Dict[int, DiffPoly] = {}
    for k, ck in poly.items():
        for p, cp in a.items():
            if k + p < low:
                continue
            prod = ck * cp
            got = out.get(k + p)
            out[k + p] = prod if got is None else got + prod
    return out, low


@lru_cache(maxsize=None)
def inner_column(order: int) -> Tuple[Tuple[Tuple[int, DiffPoly], ...],
                                      Tuple[Tuple[int, DiffPoly], ...]]:
    """First column of the inner solution on the negative axis, after
    the jump factor, stripped of the outer quarter-power: two scalar
    series in w carrying the oscillator symbol.

    Branch bookkeeping: z^(1/2) = i*w there, so z^(-j/2) contributes
    the phase (-i)^j at w^(-j)."""
    ensure_series_generators()
    S = phi_series(order)
    N = n_matrix()
    osc, osci = _g(OSC), _g(OSC, -1)
    psi1: Dict[int, DiffPoly] = {}
    psi2: Dict[int, DiffPoly] = {}
    for p in S.powers():
        j = -p
        M = N * S.coeff(p)
        ph = _PHASES[j % 4]
        psi1[p] = (M.entry(0, 0) * osc + M.entry(0, 1) * osci) * ph
        psi2[p] = (M.entry(1, 0) * osc + M.entry(1, 1) * osci) * ph
    return tuple(sorted(psi1.items())), tuple(sorted(psi2.items()))


def _density_table(order: int, mid: DiffPoly, series_order: int
                   ) -> Tuple[Dict[int, DiffPoly], int]:
    p1, p2 = inner_column(series_order)
    psi1, psi2 = dict(p1), dict(p2)
    low = -series_order
    sq1, l1 = _ws_mul(psi1, low, psi1, low)
    sq2, l2 = _ws_mul(psi2, low, psi2, low)
    cross, lc = _ws_mul(psi1, low, psi2, low)
    U = inner_u_twin()
    dt = _neg_axis(U.entry(1, 0))
    ct = _neg_axis(U.entry(0, 1))
    md = _neg_axis(mid)

    # quarter powers of z on the negative axis square to -+i; the cross
    # term phase cancels
    t1d, f1 = _ws_poly_mul(dt, sq1, l1)
    t2d, f2 = _ws_poly_mul(md, cross, lc)
    t3d, f3 = _ws_poly_mul(ct, sq2, l2)
    total: Dict[int, DiffPoly] = {}
    floor = max(f1 - 1, f2, f3 + 1)

    def acc(term: Dict[int, DiffPoly], shift: int, factor: Scalar) -> None:
        for p, c in term.items():
            q = p + shift
            if q < floor:
                continue
            piece = c * factor
            got = total.get(q)
            total[q] = piece if got is None else got + piece

    acc(t1d, -1, _MINUS_I)
    acc(t2d, 0, Scalar.of(-2))
    acc(t3d, 1, _MINUS_I)
    if order < floor:
        raise TruncationTooShallow(
            f"density coefficients below w^{floor} need a deeper "
            f"expansion (requested w^{order})")
    return {p: c for p, c in total.items() if p >= order}, floor


def _osc_split(p: DiffPoly) -> Dict[int, DiffPoly]:
    """Group by oscillator exponent, stripping the oscillator symbol
    from each part."""
    key = (OSC, ())
    parts: Dict[int, dict] = {}
    for m, c in p.terms.items():
        d = dict(m)
        e = d.pop(key, 0)
        mono = tuple(sorted(d.items()))
        bucket = parts.setdefault(e, {})
        got = bucket.get(mono)
        bucket[mono] = c if got is None else got + c
    return {e: DiffPoly(t) for e, t in parts.items()
            if not DiffPoly(t).is_zero()}


def _unknown_content(p: DiffPoly) -> List[str]:
    return [name for name in _PHI_UNKNOWNS if p.contains(name)]


def density_expansion(order: int = 0,
                      mid: Optional[DiffPoly] = None) -> HalfSeries:
    """Diagonal kernel density series on the negative axis: scalar
    coefficients in w = |u|^(1/2) carrying oscillator powers, retained
    from w^order upward.

    The middle quadratic-form coefficient defaults to the one the
    collapse certifies; pass mid_printed() for the displayed one."""
    if mid is None:
        mid = density_mid_certified()
    # unknown families stop at the twelfth coefficient
    series_order = max(8, min(12, 6 - order))
    table, _ = _density_table(order, mid, series_order)
    return HalfSeries({p: _apply_images(c) for p, c in table.items()},
                      order)


def _apply_images(p: DiffPoly) -> DiffPoly:
    images = inner_unknown_images()
    for _ in range(3):
        names = [n for n in _unknown_content(p) if n in images]
        if not names:
            break
        for n in names:
            p = eval_at(p, n, images[n])
    return p


@lru_cache(maxsize=None)
def _density_check(use_lax_mid: bool) -> Tuple[dict, Tuple[str, ...]]:
    mid = inner_u_twin().entry(0, 0) if use_lax_mid else mid_printed()
    table, _ = _density_table(0, mid, 8)
    t1 = _g("t1")
    expected = {(5, 0): DiffPoly.const(2 * I),
                (1, 0): (2 * I) * t1}
    failures: List[str] = []
    slots: dict = {}
    for wp in sorted(table, reverse=True):
        for oe, part in sorted(_osc_split(table[wp]).items()):
            slots[(wp, oe // 2)] = _apply_images(part)
    for (wp, ep), part in sorted(slots.items(), reverse=True):
        want = expected.get((wp, ep))
        if want is not None:
            if not (part - want).is_zero():
                failures.append(
                    f"w^{wp} E^{ep}: got {part}, expected {want}")
            continue
        if not part.is_zero():
            names = _unknown_content(part)
            tag = f" (unknowns {', '.join(names)})" if names else ""
            failures.append(f"w^{wp} E^{ep}: nonzero{tag}: {part}")
    for slot, want in expected.items():
        if slot not in slots:
            failures.append(f"w^{slot[0]} E^{slot[1]}: absent, "
                            f"expected {want}")
    return slots, tuple(failures)


@lru_cache(maxsize=None)
def density_mid_certified() -> DiffPoly:
    """The middle coefficient that actually collapses the retained
    density orders; the spectral-matrix diagonal entry wins over the
    displayed expression, whose residual density_report carries."""
    _, fail_lax = _density_check(True)
    if not fail_lax:
        return inner_u_twin().entry(0, 0)
    _, fail_printed = _density_check(False)
    if not fail_printed:
        return mid_printed()
    raise UnknownSurvivor(
        "no middle coefficient collapses the density: "
        + "; ".join(fail_lax[:3]))


def density_report(order: int = 0) -> dict:
    """Density collapse report: certified coefficients per (w-power,
    oscillator power), which middle coefficient collapsed, and the
    other one's residual verbatim."""
    slots_lax, fail_lax = _density_check(True)
    slots_printed, fail_printed = _density_check(False)
    if not fail_lax:
        winner, loser = "spectral-matrix diagonal", "displayed"
        slots, fails = slots_lax, fail_printed
    elif not fail_printed:
        winner, loser = "displayed", "spectral-matrix diagonal"
        slots, fails = slots_printed, fail_lax
    else:
        raise UnknownSurvivor(
            "density does not collapse for either middle coefficient: "
            + "; ".join(fail_lax[:3]))
    series = density_expansion(order)
    return {"name": "density collapse", "status": "PASS",
            "mid": winner,
            "other_mid": loser,
            "other_mid_residual": list(fails),
            "coefficients": {f"w^{wp} E^{ep}": str(part)
                             for (wp, ep), part in sorted(
                                 slots.items(), reverse=True)
                             if not part.is_zero()},
            "series": series}


def appendixA_identities() -> dict:
    """The three coefficient closure identities as polynomial
    identities in the expansion symbols: substitute the derived series
    images for every pencil coefficient and flow derivative, eliminate
    the even diagonal symbols, and require exact zero."""
    b = {}
    for m in (1, 3, 5, 7):
        b.update(pencil_entries(m))
    f3, f5, f7 = u_flow_image(3), u_flow_image(5), u_flow_image(7)
    residuals = {
        "first": b["b2"] - (rat(1, 4) * b["b0"] ** 2 - 2 * f3),
        "second": b["b6"] - (-b["b1"] ** 2 + rat(1, 8) * b["b0"] ** 3
                             - b["b0"] * b["b4"] - 2 * f5),
        "third": b["b10"] - (HALF * b["b0"] * b["b6"]
                             - 2 * b["b1"] * b["b3"]
                             - b["b4"] * b["b5"] - 2 * f7),
    }
    report = {"name": "coefficient closure identities", "status": "PASS",
              "residuals": {}}
    for key, resid in residuals.items():
        resid = normalize_even(resid)
        if not resid.is_zero():
            raise ResidualNonzero(
                f"{key} closure identity leaves {resid}")
        report["residuals"][key] = resid
    return report
