"""Exact arithmetic in the field Q(i, sqrt2).

A Scalar is a + b*sqrt2 + c*i + d*i*sqrt2 with rational components.  This
is the smallest field containing every constant that appears in the
matrix conjugations (the normalizer N has entries built from e^{-i pi/4})
while staying exactly representable, so residuals that should vanish
vanish identically rather than to roundoff.
"""

from __future__ import annotations

from fractions import Fraction

_F0 = Fraction(0)
_F1 = Fraction(1)

_SQRT2 = 2 ** 0.5


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot build exact rational from {type(x).__name__}")


class Scalar:
    """Element of Q(i, sqrt2), immutable."""

    __slots__ = ("a", "b", "c", "d", "_hash")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))
        object.__setattr__(self, "c", _as_fraction(c))
        object.__setattr__(self, "d", _as_fraction(d))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *_):
        raise AttributeError("Scalar is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (Scalar, (self.a, self.b, self.c, self.d))

    # -- constructors --

    @staticmethod
    def of(x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return Scalar(_as_fraction(x))

    @staticmethod
    def rational(p, q=1) -> "Scalar":
        return Scalar(Fraction(p, q))

    # -- predicates --

    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.d)

    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    def is_real(self) -> bool:
        return not (self.c or self.d)

    # -- ring ops --

    def __add__(self, other):
        o = _coerce_operand(other)
        if o is None:
            return NotImplemented
        return Scalar(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        o = _coerce_operand(other)
        if o is None:
            return NotImplemented
        return Scalar(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __rsub__(self, other):
        o = _coerce_operand(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce_operand(other)
        if o is None:
            return NotImplemented
        a1, b1, c1, d1 = self.a, self.b, self.c, self.d
        a2, b2, c2, d2 = o.a, o.b, o.c, o.d
        # fast path: both pure rational
        if not (b1 or c1 or d1 or b2 or c2 or d2):
            return Scalar(a1 * a2)
        # (A1 + C1 i)(A2 + C2 i) with A, C in Q(sqrt2)
        # real part A1A2 - C1C2, imag part A1C2 + C1A2
        ra = a1 * a2 + 2 * b1 * b2 - (c1 * c2 + 2 * d1 * d2)
        rb = a1 * b2 + b1 * a2 - (c1 * d2 + d1 * c2)
        rc = a1 * c2 + 2 * b1 * d2 + c1 * a2 + 2 * d1 * b2
        rd = a1 * d2 + b1 * c2 + c1 * b2 + d1 * a2
        return Scalar(ra, rb, rc, rd)

    __rmul__ = __mul__

    def conj_i(self) -> "Scalar":
        """Galois conjugate i -> -i."""
        return Scalar(self.a, self.b, -self.c, -self.d)

    def conj_sqrt2(self) -> "Scalar":
        """Galois conjugate sqrt2 -> -sqrt2."""
        return Scalar(self.a, -self.b, self.c, -self.d)

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Scalar")
        # stage 1: clear i. z * conj_i(z) lies in Q(sqrt2).
        zi = self.conj_i()
        n1 = self * zi
        # stage 2: clear sqrt2. n1 * conj_sqrt2(n1) is rational.
        n1s = n1.conj_sqrt2()
        n2 = (n1 * n1s).a  # rational by construction
        inv_scale = Fraction(1) / n2
        num = zi * n1s
        return Scalar(num.a * inv_scale, num.b * inv_scale,
                      num.c * inv_scale, num.d * inv_scale)

    def __truediv__(self, other):
        return self * Scalar.of(other).inverse()

    def __rtruediv__(self, other):
        return Scalar.of(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("Scalar powers must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparisons / hash --

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Scalar.of(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return (self.a == other.a and self.b == other.b
                and self.c == other.c and self.d == other.d)

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.a, self.b, self.c, self.d))
            object.__setattr__(self, "_hash", h)
        return h

    # -- numeric conversion --

    def to_complex(self) -> complex:
        re = float(self.a) + float(self.b) * _SQRT2
        im = float(self.c) + float(self.d) * _SQRT2
        return complex(re, im)

    def to_float(self) -> float:
        if self.c or self.d:
            raise ValueError(f"{self!r} has an imaginary part")
        return float(self.a) + float(self.b) * _SQRT2

    # -- rendering --

    def _parts(self):
        out = []
        if self.a:
            out.append(str(self.a))
        if self.b:
            out.append(_unit_part(self.b, "sqrt2"))
        if self.c:
            out.append(_unit_part(self.c, "I"))
        if self.d:
            out.append(_unit_part(self.d, "I*sqrt2"))
        return out

    def text(self) -> str:
        """Canonical text form; parenthesized when it is a sum."""
        parts = self._parts()
        if not parts:
            return "0"
        if len(parts) == 1:
            return parts[0]
        joined = parts[0]
        for p in parts[1:]:
            joined += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return "(" + joined + ")"

    def json_obj(self) -> dict:
        return {"a": str(self.a), "b": str(self.b),
                "c": str(self.c), "d": str(self.d)}

    @staticmethod
    def from_json(obj) -> "Scalar":
        return Scalar(Fraction(obj["a"]), Fraction(obj["b"]),
                      Fraction(obj["c"]), Fraction(obj["d"]))

    def __repr__(self):
        return f"Scalar({self.a},{self.b},{self.c},{self.d})"

    def __str__(self):
        return self.text()


def _coerce_operand(x):
    """Scalar view of x, or None when another type should handle the op."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    return None


def _unit_part(coeff: Fraction, unit: str) -> str:
    if coeff == 1:
        return unit
    if coeff == -1:
        return "-" + unit
    return f"{coeff}*{unit}"


ZERO = Scalar(0)
ONE = Scalar(1)
TWO = Scalar(2)
HALF = Scalar(Fraction(1, 2))
I = Scalar(0, 0, 1, 0)
SQRT2 = Scalar(0, 1, 0, 0)
MINUS_ONE = Scalar(-1)


def rat(p, q=1) -> Scalar:
    """Shorthand for an exact rational Scalar."""
    return Scalar(Fraction(p, q))
