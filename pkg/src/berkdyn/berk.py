"""Type I and type II points of the Berkovich affine line, plus the point at infinity.

A point is a closed disk ``{x : log|x - center| <= logdiam}``.  ``logdiam`` is
an exact rational, or ``-inf`` for a classical point.  Centers are reduced to
a canonical representative at construction time, so dataclass equality is
equality of disks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

from .valfield import INF, FieldDescriptor, FieldElement, canonical_center

LogDiam = Union[Fraction, float]


class Order(Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class BerkPoint:
    center: FieldElement | None
    logdiam: LogDiam

    def __post_init__(self):
        if self.center is None:
            if self.logdiam != INF:
                raise ValueError("only the point at infinity has no center")
            return
        r = self.logdiam
        if isinstance(r, float):
            if r != -INF:
                raise ValueError(f"logdiam must be rational or -inf, got {r!r}")
        else:
            r = Fraction(r)
            object.__setattr__(self, "logdiam", r)
        object.__setattr__(self, "center", canonical_center(self.center, r))

    @property
    def is_infinity(self) -> bool:
        return self.center is None

    @property
    def is_classical(self) -> bool:
        return self.logdiam == -INF

    @property
    def field(self) -> FieldDescriptor:
        return self.center.field

    def __str__(self) -> str:
        if self.is_infinity:
            return "inf"
        if self.is_classical:
            return f"classical({self.center})"
        return f"xi({self.center}; {self.logdiam})"

    __repr__ = __str__


INFINITY = BerkPoint(None, INF)


def xi(center, logdiam, field: FieldDescriptor | None = None) -> BerkPoint:
    """Convenience constructor accepting plain rationals when ``field`` is given."""
    if not isinstance(center, FieldElement):
        if field is None:
            raise ValueError("a field descriptor is needed for a bare center")
        center = field.element(center)
    return BerkPoint(center, logdiam)


def classical(x: FieldElement) -> BerkPoint:
    return BerkPoint(x, -INF)


def gauss_point(field: FieldDescriptor) -> BerkPoint:
    return BerkPoint(field.zero, Fraction(0))


def _dist_log(a: FieldElement, b: FieldElement) -> LogDiam:
    return -(a - b).valuation


def precedes(a: BerkPoint, b: BerkPoint) -> bool:
    """``a ⪯ b``: the disk of ``a`` lies in the disk of ``b``."""
    if b.is_infinity:
        return True
    if a.is_infinity:
        return False
    return a.logdiam <= b.logdiam and _dist_log(a.center, b.center) <= b.logdiam


def compare(a: BerkPoint, b: BerkPoint) -> Order:
    if a == b:
        return Order.EQUAL
    if precedes(a, b):
        return Order.LESS
    if precedes(b, a):
        return Order.GREATER
    return Order.INCOMPARABLE


def join(a: BerkPoint, b: BerkPoint) -> BerkPoint:
    if a.is_infinity or b.is_infinity:
        return INFINITY
    r = max(a.logdiam, b.logdiam, _dist_log(a.center, b.center))
    return BerkPoint(a.center, r)


def rho(a: BerkPoint, b: BerkPoint) -> LogDiam:
    """Hyperbolic path distance; ``inf`` when either end is classical or infinite."""
    if a == b:
        return Fraction(0)
    if a.is_infinity or b.is_infinity or a.is_classical or b.is_classical:
        return INF
    j = join(a, b).logdiam
    return 2 * j - a.logdiam - b.logdiam


def segment_contains(a: BerkPoint, m: BerkPoint, b: BerkPoint) -> bool:
    """Whether ``m`` lies on the segment ``[a, b]``."""
    top = join(a, b)
    return precedes(m, top) and (precedes(a, m) or precedes(b, m))


def ancestor(a: BerkPoint, logdiam: LogDiam) -> BerkPoint:
    """The point above ``a`` on ``[a, inf[`` with the given log-diameter."""
    if a.is_infinity or logdiam < a.logdiam:
        raise ValueError("ancestor must not lie below the starting point")
    if logdiam == INF:
        return INFINITY
    return BerkPoint(a.center, logdiam)


def is_type_ii(a: BerkPoint) -> bool:
    return not a.is_infinity and not a.is_classical and not math.isinf(a.logdiam)
