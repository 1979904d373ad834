"""Dynamical points, geometric sequences and edge data above a classical point.

Everything here is driven by the diameter profile: the map
``r -> logdiam f^n(xi(z, r))``.  In log coordinates it is the maximum of
finitely many affine functions with positive integer slopes, so it can be
composed, evaluated and inverted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .berk import BerkPoint, join, precedes, rho
from .dyn import DynamicsContext, image_point, local_degree
from .errors import BudgetExceeded, InputError
from .valfield import INF, FieldElement, ValuedPoly, canonical_center, taylor_recenter

Line = tuple[int, Fraction]  # (slope, intercept)


def _upper_envelope(lines: Iterable[Line]) -> tuple[Line, ...]:
    best: dict[int, Fraction] = {}
    for k, b in lines:
        if k not in best or b > best[k]:
            best[k] = b
    hull: list[Line] = []
    for k, b in sorted(best.items()):
        while hull:
            k1, b1 = hull[-1]
            if len(hull) >= 2:
                k0, b0 = hull[-2]
                # line 1 is useless if line 2 overtakes line 0 no later than line 1 does
                if (b0 - b) * (k1 - k0) <= (b0 - b1) * (k - k0):
                    hull.pop()
                    continue
            break
        hull.append((k, b))
    return tuple(hull)


@dataclass(frozen=True)
class DiameterProfile:
    """``r -> max_j (intercept_j + slope_j * r)`` for the disks around ``center``."""

    center: FieldElement
    steps: int
    lines: tuple[Line, ...]

    @classmethod
    def identity(cls, center: FieldElement) -> "DiameterProfile":
        return cls(center, 0, ((1, Fraction(0)),))

    def evaluate(self, r: Fraction) -> Fraction:
        if r == -INF:
            return -INF
        return max(b + k * r for k, b in self.lines)

    def slope_at(self, r: Fraction) -> int:
        """Largest slope attaining the maximum (the degree of the iterate there)."""
        val = self.evaluate(r)
        return max(k for k, b in self.lines if b + k * r == val)

    def inverse(self, y: Fraction) -> Fraction:
        return min((y - b) / k for k, b in self.lines)

    def breakpoints(self) -> list[Fraction]:
        return [
            (b0 - b1) / (k1 - k0)
            for (k0, b0), (k1, b1) in zip(self.lines, self.lines[1:])
        ]

    def pieces(self) -> list[tuple[Fraction | float, Fraction | float, int, Fraction]]:
        """``(r_lo, r_hi, slope, intercept)`` for each linear piece."""
        bps = [-INF, *self.breakpoints(), INF]
        return [(bps[i], bps[i + 1], k, b) for i, (k, b) in enumerate(self.lines)]

    def then(self, step_lines: Sequence[Line], new_center: FieldElement) -> "DiameterProfile":
        """Compose with one more step whose own profile is ``step_lines``."""
        composed = (
            (i * k, a + i * b) for i, a in step_lines for k, b in self.lines
        )
        return DiameterProfile(new_center, self.steps + 1, _upper_envelope(composed))


def step_lines(f: ValuedPoly, w: FieldElement) -> tuple[Line, ...]:
    cs = taylor_recenter(f, w)
    return _upper_envelope((i, -c.valuation) for i, c in enumerate(cs) if i >= 1 and not c.is_zero())


class OrbitProfiles:
    """Lazily extended orbit of ``z`` together with its diameter profiles.

    ``precision`` (a log-radius) truncates orbit centers to disks of that
    size.  Results are then exact for all radii whose images stay above it.
    """

    def __init__(self, f: ValuedPoly, z, precision: Fraction | None = None):
        self.f = f
        z = f.field.element(z)
        self.precision = precision
        self.centers = [z]
        self.profiles = [DiameterProfile.identity(z)]

    def _trunc(self, x: FieldElement) -> FieldElement:
        return x if self.precision is None else canonical_center(x, self.precision)

    def extend(self, n: int) -> None:
        while len(self.profiles) <= n:
            w = self.centers[-1]
            nxt = self._trunc(self.f(w))
            self.profiles.append(self.profiles[-1].then(step_lines(self.f, w), nxt))
            self.centers.append(nxt)

    def center(self, n: int) -> FieldElement:
        self.extend(n)
        return self.centers[n]

    def profile(self, n: int) -> DiameterProfile:
        self.extend(n)
        return self.profiles[n]


def diameter_profile(ctx: DynamicsContext, z, n: int) -> DiameterProfile:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return OrbitProfiles(ctx.f, z).profile(n)


def escape_time(ctx: DynamicsContext, z, max_iter: int = 10_000) -> int | None:
    """First k with f^k(z) outside the base disk, or None if none within ``max_iter``.

    Orbit points are truncated to a fixed number of digits below the base
    radius.  Inside the base disk the error grows by at most the Lipschitz
    factor per step, and membership stays exact while the error is no larger
    than the radius; otherwise the orbit is redone with more digits.
    """
    z = ctx.field.element(z)
    lip = _lipschitz_log(ctx)
    enough = int(max_iter * lip) + 2
    digits = min(64, enough)
    while True:
        w, err = z, -INF
        for k in range(max_iter + 1):
            if not ctx.in_base_disk(w):
                return k
            if k == max_iter:
                return None
            fw = ctx.f(w)
            nxt = canonical_center(fw, ctx.R_log - digits)
            if err != -INF:
                err += lip
            if nxt != fw:
                err = max(err, ctx.R_log - digits)
            if err > ctx.R_log:
                break
            w = nxt
        digits = min(2 * digits, enough)


class Levels:
    """Dynamical points ``L_n`` above a fixed classical point."""

    def __init__(self, ctx: DynamicsContext, z, precision: Fraction | None = None):
        self.ctx = ctx
        self.z = ctx.field.element(z)
        self.orbit = OrbitProfiles(ctx.f, self.z, precision)

    def check_center(self, n: int) -> None:
        for k in range(n + 1):
            if not self.ctx.in_base_disk(self.orbit.center(k)):
                raise InputError(
                    f"orbit of {self.z} leaves the base disk at step {k}; no level-{n} point",
                    step=k,
                )

    def logdiam_at_value(self, n: int, target: Fraction) -> Fraction:
        """Log-radius r with ``logdiam f^n(xi(z, r)) = target``."""
        return self.orbit.profile(n).inverse(target)

    def point(self, n: int) -> BerkPoint:
        self.check_center(n)
        r = self.logdiam_at_value(n, self.ctx.R_log)
        return BerkPoint(self.z, r)


def dynamical_point(ctx: DynamicsContext, z, n: int) -> BerkPoint:
    lv = Levels(ctx, z)
    pt = lv.point(n)
    assert lv.orbit.profile(n).evaluate(pt.logdiam) == ctx.R_log
    if n >= 1:
        img = image_point(ctx.f, pt)
        assert Levels(ctx, ctx.f(pt.center)).orbit.profile(n - 1).evaluate(img.logdiam) == ctx.R_log
    return pt


# ---------------------------------------------------------------------------
# generators and geometric sequences


def _escape_step(ctx: DynamicsContext, c: FieldElement, max_iter: int) -> int:
    t = escape_time(ctx, c, max_iter)
    if t is None:
        raise InputError(f"critical point {c} does not escape within {max_iter} steps")
    if t == 0:
        raise InputError(f"critical point {c} lies outside the base disk")
    return t - 1


def escaping_boundary_point(ctx: DynamicsContext, c, max_iter: int = 10_000) -> tuple[BerkPoint, BerkPoint, int]:
    """For an escaping ``c``: the lowest tree point above ``c``, its image in
    ``]xi_f, f(xi_f)]`` and the number of steps between them."""
    c = ctx.field.element(c)
    N = _escape_step(ctx, c, max_iter)
    orb = OrbitProfiles(ctx.f, c)
    out = orb.center(N + 1)
    top = join(ctx.base_point, BerkPoint(out, -INF))
    r = orb.profile(N + 1).inverse(top.logdiam)
    return BerkPoint(c, r), top, N + 1


def generators_and_q(ctx: DynamicsContext, escaping_crit: Sequence, max_iter: int = 10_000) -> tuple[list[BerkPoint], int]:
    if ctx.simple:
        raise InputError("generators are defined for nonsimple polynomials")
    if not escaping_crit:
        raise InputError("at least one escaping critical point is required")
    zetas = {image_point(ctx.f, ctx.base_point)}
    for c in escaping_crit:
        el = ctx.field.element(c)
        if not el.is_rational() and ctx.field.kind == "padic":
            raise InputError(f"critical point {c} is not field-rational")
        if not ctx.fprime(el).is_zero():
            raise InputError(f"{c} is not a critical point")
        _, zeta, _ = escaping_boundary_point(ctx, el, max_iter)
        zetas.add(zeta)
    gens = sorted(zetas, key=lambda p: p.logdiam, reverse=True)
    return gens, len(gens)


@dataclass(frozen=True)
class GeometricSequence:
    base: FieldElement
    entries: tuple[BerkPoint, ...]
    q: int

    def level(self, n: int) -> BerkPoint:
        """``L_n = G_{qn}``."""
        return self.entries[self.q * n]


def geometric_sequence(ctx: DynamicsContext, z, depth: int, generators: Sequence[BerkPoint] | None = None) -> GeometricSequence:
    """``G_0, ..., G_depth`` above ``z``.

    With generators ``zeta_0 = f(xi_f) > zeta_1 > ... > zeta_{q-1}``,
    ``G_{qn+j}`` is the point above ``z`` that ``f^{n+1}`` sends to ``zeta_j``.
    """
    gens = list(generators) if generators else [image_point(ctx.f, ctx.base_point)]
    q = len(gens)
    lv = Levels(ctx, z)
    top_level = depth // q
    lv.check_center(top_level)
    entries = []
    for idx in range(depth + 1):
        n, j = divmod(idx, q)
        r = lv.orbit.profile(n + 1).inverse(gens[j].logdiam)
        entries.append(BerkPoint(lv.z, r))
    for a, b in zip(entries, entries[1:]):
        assert b.logdiam < a.logdiam
    return GeometricSequence(lv.z, tuple(entries), q)


# ---------------------------------------------------------------------------
# edges


def edge_degree(ctx: DynamicsContext, e: tuple[BerkPoint, BerkPoint]) -> int:
    a, b = e
    if precedes(b, a):
        a, b = b, a
    elif not precedes(a, b):
        raise InputError("edge endpoints are incomparable")
    if b.is_infinity or a.is_classical:
        raise InputError("edge must join two type II points")
    mid = BerkPoint(a.center, (a.logdiam + b.logdiam) / 2)
    low = BerkPoint(a.center, a.logdiam + (b.logdiam - a.logdiam) / 64)
    deg = local_degree(ctx.f, mid)
    if a != b:
        assert local_degree(ctx.f, low) == deg, "local degree not constant on edge"
    return deg


def edge_length(e: tuple[BerkPoint, BerkPoint]) -> Fraction:
    return rho(*e)


# ---------------------------------------------------------------------------
# omitted tree bound


def _lipschitz_log(ctx: DynamicsContext) -> Fraction:
    cs = taylor_recenter(ctx.f, ctx.anchor)
    r = max(ctx.R_log, Fraction(0))
    return max(
        [Fraction(0)]
        + [-c.valuation + (i - 1) * r for i, c in enumerate(cs) if i >= 1 and not c.is_zero()]
    )


def fatou_boundary_point(
    ctx: DynamicsContext, c, iter_cap: int = 64, period_cap: int = 32
) -> tuple[BerkPoint, int, int]:
    """Boundary of the bounded Fatou component containing ``c``.

    Returns ``(point, j, m)`` where ``f^j`` sends the point to a repelling
    type II cycle of period ``m``.  The point is the lowest such candidate on
    the segment from ``c`` to infinity over all ``j < iter_cap`` and
    ``m <= period_cap``.
    """
    c = ctx.field.element(c)
    lip = _lipschitz_log(ctx)
    floor = ctx.R_log - 64
    prec = floor - (iter_cap + period_cap + 2) * (lip + 1) - 16
    orb = OrbitProfiles(ctx.f, c, prec)
    best = None
    for j in range(iter_cap):
        w = orb.center(j)
        if not ctx.in_base_disk(w):
            raise InputError(f"{c} escapes; it has no bounded Fatou component")
        local = OrbitProfiles(ctx.f, w, prec)
        for m in range(1, period_cap + 1):
            prof = local.profile(m)
            if any(k == 1 and b > 0 for k, b in prof.lines):
                continue
            s = min((-b / (k - 1) for k, b in prof.lines if k >= 2), default=None)
            if s is None or s > ctx.R_log:
                continue
            if (local.center(m) - w).log_abs > s:
                continue
            if s < floor:
                raise BudgetExceeded("periodic point below the tracked precision", center=w)
            r0 = orb.profile(j).inverse(s)
            if best is None or r0 < best[0].logdiam:
                best = (BerkPoint(c, r0), j, m)
    if best is None:
        raise BudgetExceeded(
            f"no periodic Fatou boundary found for {c} within caps", iter_cap=iter_cap, period_cap=period_cap
        )
    return best


def omitted_tree_bound(
    ctx: DynamicsContext,
    c,
    others: Sequence,
    iter_cap: int = 64,
    period_cap: int = 32,
    max_iter: int = 10_000,
) -> Fraction:
    """Radius about the base point of the forward orbit of the non-distinguished critical data."""
    xi_f = ctx.base_point
    top = image_point(ctx.f, xi_f)
    alpha = Fraction(0)
    for cp in others:
        cp = ctx.field.element(cp)
        if escape_time(ctx, cp, max_iter) is not None:
            pt, _, _ = escaping_boundary_point(ctx, cp, max_iter)
            orbit_pts = [pt]
            for _ in range(max_iter):
                cur = orbit_pts[-1]
                if precedes(xi_f, cur) and cur != top and precedes(cur, top):
                    break
                orbit_pts.append(image_point(ctx.f, cur))
            else:
                raise BudgetExceeded("escaping critical orbit did not reach the fundamental edge")
        else:
            pt, _, _ = fatou_boundary_point(ctx, cp, iter_cap, period_cap)
            orbit_pts = [pt]
            seen = {pt}
            for _ in range(max_iter):
                nxt = image_point(ctx.f, orbit_pts[-1])
                if nxt in seen:
                    break
                seen.add(nxt)
                orbit_pts.append(nxt)
            else:
                raise BudgetExceeded("Fatou boundary orbit did not close up")
        alpha = max([alpha] + [rho(xi_f, p) for p in orbit_pts])
    return alpha
