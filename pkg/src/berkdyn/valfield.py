"""Exact arithmetic over valued coefficient fields and univariate polynomials.

Two coefficient fields are supported:

* ``padic``: the rationals with the p-adic valuation (standing in for C_p).
* ``laurent``: finite sums of rational powers of a formal variable ``t`` with
  rational coefficients (a truncated Puiseux model; residue characteristic 0).

Absolute values are never stored directly.  Everything is kept in additive
log coordinates: ``log_p |x| = -v(x)``.  For the Laurent field the base is
``e`` and the valuation is the least exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

from sympy import divisors

INF = math.inf

Rational = Fraction
Valuation = Union[Fraction, float]  # float only ever holds +inf

Number = Union[int, Fraction]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def vp_int(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class FieldDescriptor:
    kind: str
    prime: int | None = None
    var: str | None = None

    def __post_init__(self):
        if self.kind == "padic":
            if self.prime is None or not _is_prime(self.prime):
                raise ValueError(f"padic field needs a prime, got {self.prime!r}")
        elif self.kind == "laurent":
            if not self.var or not self.var.isidentifier() or self.var == "z":
                raise ValueError(f"bad Laurent variable name {self.var!r}")
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def padic(cls, p: int) -> "FieldDescriptor":
        return cls("padic", prime=p)

    @classmethod
    def laurent(cls, var: str = "t") -> "FieldDescriptor":
        return cls("laurent", var=var)

    @classmethod
    def parse(cls, text: str) -> "FieldDescriptor":
        """Parse ``padic:<p>`` or ``laurent:<var>``."""
        kind, _, arg = text.partition(":")
        if kind == "padic":
            try:
                p = int(arg)
            except ValueError:
                raise ValueError(f"bad prime in field spec {text!r}") from None
            return cls.padic(p)
        if kind == "laurent":
            return cls.laurent(arg or "t")
        raise ValueError(f"unknown field spec {text!r}")

    @property
    def residue_char(self) -> int:
        return self.prime if self.kind == "padic" else 0

    def __str__(self) -> str:
        return f"padic:{self.prime}" if self.kind == "padic" else f"laurent:{self.var}"

    # element constructors

    def element(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            if value.field != self:
                raise ValueError("descriptor mismatch")
            return value
        if self.kind == "padic":
            return FieldElement(self, Fraction(value))
        value = Fraction(value)
        terms = ((Fraction(0), value),) if value else ()
        return FieldElement(self, terms)

    def gen(self, exponent: Number = 1) -> "FieldElement":
        """The monomial ``t**exponent`` (Laurent fields only)."""
        if self.kind != "laurent":
            raise ValueError("only Laurent fields have a coefficient variable")
        return FieldElement(self, ((Fraction(exponent), Fraction(1)),))

    @property
    def zero(self) -> "FieldElement":
        return self.element(0)

    @property
    def one(self) -> "FieldElement":
        return self.element(1)

    def uniformizer(self) -> "FieldElement":
        """An element of valuation 1 (``p`` or ``t``)."""
        return self.element(self.prime) if self.kind == "padic" else self.gen(1)

    def log_abs_int(self, m: int) -> Fraction:
        """``log_p |m|`` for a positive integer m viewed in the field."""
        if self.kind == "laurent":
            return Fraction(0)
        return Fraction(-vp_int(m, self.prime))


def _laurent_normalize(terms: Iterable[tuple[Fraction, Fraction]]):
    acc: dict[Fraction, Fraction] = {}
    for e, c in terms:
        acc[e] = acc.get(e, Fraction(0)) + c
    return tuple(sorted((e, c) for e, c in acc.items() if c != 0))


@dataclass(frozen=True)
class FieldElement:
    """An exact field element.

    ``data`` is a ``Fraction`` for p-adic fields and a sorted tuple of
    ``(exponent, coefficient)`` pairs for Laurent fields.
    """

    field: FieldDescriptor
    data: object

    def __post_init__(self):
        if self.field.kind == "laurent":
            object.__setattr__(self, "data", _laurent_normalize(self.data))

    # valuation

    @cached_property
    def valuation(self) -> Valuation:
        if self.field.kind == "padic":
            x: Fraction = self.data
            if x == 0:
                return INF
            p = self.field.prime
            return Fraction(vp_int(x.numerator, p) - vp_int(x.denominator, p))
        if not self.data:
            return INF
        return self.data[0][0]

    @property
    def log_abs(self) -> Valuation:
        """``log_p |x|``; ``-inf`` for zero."""
        return -self.valuation

    def is_zero(self) -> bool:
        return not self.data

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        """True when the element is a rational constant."""
        if self.field.kind == "padic":
            return True
        return all(e == 0 for e, _ in self.data)

    def to_fraction(self) -> Fraction:
        if self.field.kind == "padic":
            return self.data
        if not self.data:
            return Fraction(0)
        if not self.is_rational():
            raise ValueError(f"{self} is not a rational constant")
        return self.data[0][1]

    # arithmetic

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError(f"descriptor mismatch: {self.field} vs {other.field}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.element(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.field.kind == "padic":
            return FieldElement(self.field, self.data + other.data)
        return FieldElement(self.field, self.data + other.data)

    __radd__ = __add__

    def __neg__(self):
        if self.field.kind == "padic":
            return FieldElement(self.field, -self.data)
        return FieldElement(self.field, tuple((e, -c) for e, c in self.data))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.field.kind == "padic":
            return FieldElement(self.field, self.data * other.data)
        return FieldElement(
            self.field,
            tuple((e1 + e2, c1 * c2) for e1, c1 in self.data for e2, c2 in other.data),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("division by zero field element")
        if self.field.kind == "padic":
            return FieldElement(self.field, self.data / other.data)
        if len(other.data) != 1:
            raise ValueError(
                "division by a non-monomial Laurent element has no finite expansion"
            )
        (e2, c2), = other.data
        return FieldElement(self.field, tuple((e - e2, c / c2) for e, c in self.data))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.field.one / (self ** (-n))
        result = self.field.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.element(other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.field == other.field and self.data == other.data

    def __hash__(self):
        return hash((self.field, self.data))

    def __str__(self) -> str:
        if self.field.kind == "padic":
            return str(self.data)
        if not self.data:
            return "0"
        var = self.field.var
        parts = []
        for e, c in self.data:
            if e == 0:
                parts.append(str(c))
                continue
            mono = var if e == 1 else (f"{var}^{e}" if e.denominator == 1 and e > 0 else f"{var}^({e})")
            if c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"({c})*{mono}" if c.denominator != 1 else f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def canonical_center(x: FieldElement, logdiam: Valuation) -> FieldElement:
    """A canonical representative of the closed disk ``{y : log|y - x| <= logdiam}``."""
    if logdiam == -INF:
        return x
    if x.is_zero() or x.valuation >= -logdiam:
        return x.field.zero
    if x.field.kind == "laurent":
        return FieldElement(x.field, tuple((e, c) for e, c in x.data if e < -logdiam))
    p = x.field.prime
    v = int(x.valuation)
    digits = math.ceil(-logdiam) - v
    q = Fraction(x.data) / Fraction(p) ** v  # unit
    mod = p ** digits
    unit = (q.numerator * pow(q.denominator, -1, mod)) % mod
    return x.field.element(Fraction(unit) * Fraction(p) ** v)


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class ValuedPoly:
    """Dense univariate polynomial; ``coeffs[i]`` multiplies ``z**i``."""

    field: FieldDescriptor
    coeffs: tuple

    def __post_init__(self):
        cs = [self.field.element(c) for c in self.coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def z(cls, field: FieldDescriptor) -> "ValuedPoly":
        return cls(field, (0, 1))

    @classmethod
    def constant(cls, field: FieldDescriptor, c) -> "ValuedPoly":
        return cls(field, (c,))

    @classmethod
    def from_roots(cls, field, roots: Sequence, lead=1) -> "ValuedPoly":
        f = cls.constant(field, lead)
        z = cls.z(field)
        for r in roots:
            f = f * (z - cls.constant(field, r))
        return f

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    @property
    def leading(self) -> FieldElement:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def coeff(self, i: int) -> FieldElement:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else self.field.zero

    def __call__(self, x) -> FieldElement:
        x = self.field.element(x)
        acc = self.field.zero
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def _lift(self, other) -> "ValuedPoly":
        if isinstance(other, ValuedPoly):
            if other.field != self.field:
                raise ValueError("descriptor mismatch")
            return other
        return ValuedPoly.constant(self.field, other)

    def __add__(self, other):
        other = self._lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return ValuedPoly(self.field, tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    __radd__ = __add__

    def __neg__(self):
        return ValuedPoly(self.field, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        if self.is_zero() or other.is_zero():
            return ValuedPoly(self.field, ())
        out = [self.field.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ValuedPoly(self.field, tuple(out))

    __rmul__ = __mul__

    def scale(self, c) -> "ValuedPoly":
        c = self.field.element(c)
        return ValuedPoly(self.field, tuple(a * c for a in self.coeffs))

    def __truediv__(self, c):
        if isinstance(c, ValuedPoly):
            if not c.is_constant():
                raise ValueError("can only divide a polynomial by a constant")
            c = c.coeff(0)
        return self.scale(self.field.one / self.field.element(c))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial exponent must be a nonnegative integer")
        result = ValuedPoly.constant(self.field, 1)
        for _ in range(n):
            result = result * self
        return result

    def compose(self, inner: "ValuedPoly") -> "ValuedPoly":
        """Return ``self(inner(z))``."""
        acc = ValuedPoly(self.field, ())
        for c in reversed(self.coeffs):
            acc = acc * inner + ValuedPoly.constant(self.field, c)
        return acc

    def iterate(self, n: int) -> "ValuedPoly":
        g = ValuedPoly.z(self.field)
        for _ in range(n):
            g = self.compose(g)
        return g

    def derivative(self) -> "ValuedPoly":
        return ValuedPoly(self.field, tuple(c * i for i, c in enumerate(self.coeffs) if i > 0))

    def taylor(self, a) -> list[FieldElement]:
        """Coefficients ``c_i`` with ``f(z) = sum c_i (z - a)^i``."""
        return taylor_recenter(self, a)

    def __eq__(self, other):
        if not isinstance(other, ValuedPoly):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.field, self.coeffs))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i, c in reversed(list(enumerate(self.coeffs))):
            if c.is_zero():
                continue
            mono = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            cs = str(c)
            if not mono:
                parts.append(f"({cs})" if (" " in cs or "/" in cs) else cs)
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"({cs})*{mono}")
        return " + ".join(parts)

    __repr__ = __str__


def valuation(x: FieldElement) -> Valuation:
    return x.valuation


def arith(op: str, x: FieldElement, y: FieldElement) -> FieldElement:
    if x.field != y.field:
        raise ValueError("descriptor mismatch")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


def taylor_recenter(f: ValuedPoly, a) -> list[FieldElement]:
    a = f.field.element(a)
    cs = list(f.coeffs)
    n = len(cs)
    # repeated synthetic division by (z - a)
    for i in range(n):
        for j in range(n - 2, i - 1, -1):
            cs[j] = cs[j] + a * cs[j + 1]
    return cs


def derivative(f: ValuedPoly) -> ValuedPoly:
    return f.derivative()


def lower_hull(points: Sequence[tuple[Fraction, Valuation]]) -> list[tuple]:
    """Lower convex hull of points sorted by x (finite y only)."""
    hull: list[tuple] = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop middle point if it is on or above the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(f: ValuedPoly) -> list[tuple[Fraction, int]]:
    """Segments ``(slope, length)`` of the lower convex hull of ``(i, v(c_i))``.

    The segment of slope ``s`` and length ``n`` accounts for ``n`` roots of
    valuation ``-s``.  Roots at zero are excluded.
    """
    if f.is_zero():
        raise ValueError("Newton polygon of the zero polynomial")
    pts = [(i, c.valuation) for i, c in enumerate(f.coeffs) if not c.is_zero()]
    hull = lower_hull(pts)
    return [
        (Fraction(y2 - y1) / (x2 - x1), x2 - x1)
        for (x1, y1), (x2, y2) in zip(hull, hull[1:])
    ]


def _deflate(cs: list[Fraction], r: Fraction) -> list[Fraction]:
    # divide sum cs[i] z^i by (z - r); caller guarantees r is a root
    n = len(cs) - 1
    out = [Fraction(0)] * n
    acc = Fraction(0)
    for i in range(n, 0, -1):
        acc = acc * r + cs[i]
        out[i - 1] = acc
    return out


def rational_roots(f: ValuedPoly) -> list[FieldElement]:
    """All rational roots of ``f`` with multiplicity, in increasing order."""
    if f.is_zero():
        raise ValueError("zero polynomial has every element as a root")
    try:
        cs = [c.to_fraction() for c in f.coeffs]
    except ValueError:
        return []
    roots: list[Fraction] = []
    while len(cs) > 1 and cs[0] == 0:
        roots.append(Fraction(0))
        cs = cs[1:]
    while len(cs) > 1:
        den = math.lcm(*(c.denominator for c in cs))
        ints = [int(c * den) for c in cs]
        g = math.gcd(*ints)
        ints = [x // g for x in ints]
        found = None
        for q in divisors(abs(ints[-1])):
            for p_ in divisors(abs(ints[0])):
                for cand in (Fraction(p_, q), Fraction(-p_, q)):
                    acc = 0
                    for c in reversed(cs):
                        acc = acc * cand + c
                    if acc == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            break
        roots.append(found)
        cs = _deflate(cs, found)
    return [f.field.element(r) for r in sorted(roots)]


def hensel_preimage(f: ValuedPoly, y, guess, precision: int, steps: int = 64) -> FieldElement:
    """Rational approximation of a root of ``f(z) = y`` near ``guess`` (p-adic).

    Runs Newton's method and truncates each iterate so that it agrees with
    the previous one to valuation ``precision``.  The caller is expected to
    verify whatever closeness it needs exactly.
    """
    if f.field.kind != "padic":
        raise ValueError("hensel_preimage needs a p-adic field")
    y = f.field.element(y)
    x = f.field.element(guess)
    fp = f.derivative()
    for _ in range(steps):
        err = f(x) - y
        if err.is_zero() or err.valuation >= precision + max(0, -fp(x).valuation):
            break
        d = fp(x)
        if d.is_zero():
            raise ZeroDivisionError("Newton step at a critical point")
        x = canonical_center(x - err / d, Fraction(-precision - 8))
    return x
