"""Polynomial action on Berkovich points and the basic dynamical invariants."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction

from .berk import BerkPoint, LogDiam, precedes
from .errors import InputError
from .valfield import (
    INF,
    FieldDescriptor,
    FieldElement,
    ValuedPoly,
    lower_hull,
    rational_roots,
    taylor_recenter,
)


def _check_finite(xi: BerkPoint) -> None:
    if xi.is_infinity:
        raise ValueError("operation undefined at the point at infinity")


def _profile_terms(g: ValuedPoly, xi: BerkPoint, start: int) -> list[tuple[int, Fraction]]:
    cs = taylor_recenter(g, xi.center)
    return [(i, -c.valuation + i * xi.logdiam) for i, c in enumerate(cs) if i >= start and not c.is_zero()]


def sup_norm(g: ValuedPoly, xi: BerkPoint) -> LogDiam:
    """``log_p ||g||_xi``; ``-inf`` for the zero polynomial or a zero at a classical point."""
    _check_finite(xi)
    if xi.is_classical:
        return g(xi.center).log_abs
    terms = _profile_terms(g, xi, 0)
    return max((t for _, t in terms), default=-INF)


def image_point(f: ValuedPoly, xi: BerkPoint) -> BerkPoint:
    if xi.is_infinity:
        return xi
    center = f(xi.center)
    if xi.is_classical:
        return BerkPoint(center, -INF)
    terms = _profile_terms(f, xi, 1)
    if not terms:
        return BerkPoint(center, -INF)
    return BerkPoint(center, max(t for _, t in terms))


def iterate_point(f: ValuedPoly, xi: BerkPoint, n: int) -> BerkPoint:
    for _ in range(n):
        xi = image_point(f, xi)
    return xi


def local_degree(f: ValuedPoly, xi: BerkPoint) -> int:
    """Weierstrass degree of ``f`` on the disk of ``xi`` (largest maximizing index)."""
    _check_finite(xi)
    if xi.is_classical:
        raise ValueError("local_degree needs a non-classical point; see local_degree_classical")
    terms = _profile_terms(f, xi, 1)
    if not terms:
        raise ValueError("constant polynomial has no local degree")
    top = max(t for _, t in terms)
    return max(i for i, t in terms if t == top)


def local_degree_classical(f: ValuedPoly, c) -> int:
    cs = taylor_recenter(f, c)
    for i, ci in enumerate(cs):
        if i >= 1 and not ci.is_zero():
            return i
    raise ValueError("constant polynomial has no local degree")


def chordal_derivative(f: ValuedPoly, xi: BerkPoint) -> LogDiam:
    """``log_p f^#(xi)`` for a point of the affine line."""
    _check_finite(xi)
    z = ValuedPoly.z(f.field)
    nz = sup_norm(z, xi)
    nf = sup_norm(f, xi)
    nd = sup_norm(f.derivative(), xi)
    if nd == -INF:
        return -INF
    return 2 * max(Fraction(0), nz) - 2 * max(Fraction(0), nf) + nd


def distortion_delta(g: ValuedPoly, xi: BerkPoint) -> Fraction:
    if xi.is_classical or xi.is_infinity:
        raise ValueError("distortion is defined at non-classical points")
    return xi.logdiam + sup_norm(g.derivative(), xi) - sup_norm(g, xi)


# ---------------------------------------------------------------------------
# base point


def rational_fixed_points(f: ValuedPoly) -> list[FieldElement]:
    g = f - ValuedPoly.z(f.field)
    if g.is_zero():
        return []
    return sorted(set(rational_roots(g)), key=lambda x: x.to_fraction())


def _choose_anchor(f: ValuedPoly) -> FieldElement:
    fixed = rational_fixed_points(f)
    if not fixed:
        raise InputError("no rational fixed point; supply an anchor in the filled Julia set")
    # smallest height first, for reproducible output
    return min(fixed, key=lambda x: (abs(x.to_fraction().denominator) + abs(x.to_fraction().numerator), x.to_fraction()))


def base_radius(f: ValuedPoly, anchor: FieldElement) -> Fraction:
    """Least log-radius r at which ``xi(anchor, r)`` has full degree and maps over itself."""
    d = f.degree
    cs = taylor_recenter(f, anchor)
    vd = cs[d].valuation
    cands = [Fraction(vd) / (d - 1)]
    for i in range(1, d):
        if not cs[i].is_zero():
            cands.append(Fraction(vd - cs[i].valuation, d - i))
    disp = (f(anchor) - anchor).valuation
    if disp != INF:
        cands.append(Fraction(vd - disp, d))
    return max(cands)


def base_point(f: ValuedPoly, anchor=None) -> BerkPoint:
    if f.degree < 2:
        raise InputError("base point needs degree at least 2")
    anchor = _choose_anchor(f) if anchor is None else f.field.element(anchor)
    r = base_radius(f, anchor)
    xi = BerkPoint(anchor, r)
    img = image_point(f, xi)
    assert local_degree(f, xi) == f.degree
    assert precedes(xi, img), "base point must map over itself"
    assert img.logdiam == f.leading.log_abs + f.degree * r
    return xi


# ---------------------------------------------------------------------------
# kappa and tameness


@dataclass(frozen=True)
class KappaBounds:
    """``kappa`` known only to lie in ``[lower, upper]``."""

    lower: Fraction
    upper: Fraction = Fraction(0)


def kappa_d(d: int, field: FieldDescriptor) -> Fraction:
    """``min_{1 <= l <= d} log_p |l|``."""
    if field.kind == "laurent":
        return Fraction(0)
    return min(field.log_abs_int(l) for l in range(1, d + 1))


def critical_points(f: ValuedPoly) -> list[tuple[FieldElement, int]] | None:
    """Rational critical points with their local degrees, or None if some are irrational."""
    fp = f.derivative()
    if fp.is_constant():
        return []
    roots = rational_roots(fp)
    if len(roots) < fp.degree:
        return None
    out = []
    for c in sorted(set(roots), key=lambda x: x.to_fraction()):
        out.append((c, local_degree_classical(f, c)))
    return out


def ray_degrees(f: ValuedPoly, a) -> set[int]:
    """Local degrees met along the segment from the classical point ``a`` to infinity.

    These are the vertex indices of the lower Newton hull of the Taylor
    coefficients at ``a`` (excluding the constant term).
    """
    cs = taylor_recenter(f, a)
    pts = [(i, c.valuation) for i, c in enumerate(cs) if i >= 1 and not c.is_zero()]
    return {i for i, _ in lower_hull(pts)}


def achieved_degrees(f: ValuedPoly) -> set[int] | None:
    crit = critical_points(f)
    if crit is None:
        return None
    degs = {1, f.degree}
    for c, _ in crit:
        degs |= ray_degrees(f, c)
    return degs


def kappa_of_f(f: ValuedPoly) -> Fraction | KappaBounds:
    if f.field.kind == "laurent":
        return Fraction(0)
    degs = achieved_degrees(f)
    if degs is None:
        return KappaBounds(kappa_d(f.degree, f.field))
    return min(f.field.log_abs_int(m) for m in degs)


def tameness_report(f: ValuedPoly) -> str:
    p = f.field.residue_char
    if p == 0 or p > f.degree:
        return "tame"
    degs = achieved_degrees(f)
    if degs is None:
        return "unknown"
    return "nontame" if any(m % p == 0 for m in degs) else "tame"


# ---------------------------------------------------------------------------
# context


@dataclass(frozen=True)
class DynamicsContext:
    f: ValuedPoly
    fprime: ValuedPoly
    anchor: FieldElement
    base_point: BerkPoint
    R_log: Fraction
    kappa: Fraction | KappaBounds
    Xi_log: Fraction | None
    simple: bool
    tame: str
    crit: tuple = dc_field(default=())  # ((point, local degree), ...) when rational
    crit_rational: bool = True

    @property
    def field(self) -> FieldDescriptor:
        return self.f.field

    @property
    def degree(self) -> int:
        return self.f.degree

    @property
    def kappa_exact(self) -> bool:
        return not isinstance(self.kappa, KappaBounds)

    @property
    def kappa_lower(self) -> Fraction:
        return self.kappa.lower if isinstance(self.kappa, KappaBounds) else self.kappa

    def image(self, xi: BerkPoint) -> BerkPoint:
        return image_point(self.f, xi)

    def in_base_disk(self, x: FieldElement) -> bool:
        return (x - self.anchor).log_abs <= self.R_log


def classify_simple(ctx: DynamicsContext) -> bool:
    return image_point(ctx.f, ctx.base_point) == ctx.base_point


def xi_factor(ctx: DynamicsContext) -> Fraction:
    if not ctx.kappa_exact:
        raise ValueError("kappa is only known as an interval")
    val = -ctx.kappa + sup_norm(ctx.fprime, ctx.base_point)
    assert val >= 0
    if not ctx.simple:
        assert val > 0
    return val


def analyze(f: ValuedPoly, anchor=None) -> DynamicsContext:
    if f.degree < 2:
        raise InputError("polynomial must have degree at least 2")
    anchor = _choose_anchor(f) if anchor is None else f.field.element(anchor)
    xi_f = base_point(f, anchor)
    crit = critical_points(f)
    ctx = DynamicsContext(
        f=f,
        fprime=f.derivative(),
        anchor=anchor,
        base_point=xi_f,
        R_log=xi_f.logdiam,
        kappa=kappa_of_f(f),
        Xi_log=None,
        simple=image_point(f, xi_f) == xi_f,
        tame=tameness_report(f),
        crit=tuple(crit or ()),
        crit_rational=crit is not None,
    )
    if ctx.kappa_exact:
        ctx = replace(ctx, Xi_log=xi_factor(ctx))
    return ctx


def orbit(f: ValuedPoly, z, n: int) -> list[FieldElement]:
    z = f.field.element(z)
    out = [z]
    for _ in range(n):
        z = f(z)
        out.append(z)
    return out
