"""Lyapunov-exponent estimates and exact checks of the derivative identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .berk import BerkPoint
from .dyn import (
    DynamicsContext,
    chordal_derivative,
    image_point,
    kappa_d,
    sup_norm,
)
from .errors import BudgetExceeded, InputError
from .grid import (
    LengthTable,
    MarkedGrid,
    grid_alpha,
    grid_derivative_sequence,
)
from .tree import OrbitProfiles, fatou_boundary_point, geometric_sequence
from .valfield import INF, FieldElement, ValuedPoly, canonical_center, hensel_preimage


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    margin: Fraction | None = None
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LyapunovReport:
    subject: str
    sequence: tuple  # (n, partial sum, partial sum / n)
    verdicts: tuple = ()


def _check(name: str, margin, **detail) -> Verdict:
    return Verdict(name, margin >= 0, margin, detail)


# ---------------------------------------------------------------------------
# orbits


class _LostPrecision(Exception):
    pass


def _lip_log(g: ValuedPoly, s) -> Fraction | float:
    """``log`` of a Lipschitz constant of ``g`` on ``{|y| <= p^s}``."""
    return max(
        (c.log_abs + (i - 1) * s for i, c in enumerate(g.coeffs) if i >= 1 and not c.is_zero()),
        default=-INF,
    )


def _exact(approx_log, err) -> bool:
    # |v| is determined by an approximation within err, or at least max(1, |v|) is
    return err == -INF or approx_log > err or (err <= 0 and approx_log <= 0)


def _orbit_logs_at(f: ValuedPoly, fp: ValuedPoly, z: FieldElement, n: int, digits: int) -> list:
    out = []
    w, err = z, -INF
    for _ in range(n):
        wl = w.log_abs
        s = max(wl, err, 0)
        dl = fp(w).log_abs
        fw = f(w)
        fl = fw.log_abs
        err_f = err + _lip_log(f, s) if err != -INF else -INF
        err_d = err + _lip_log(fp, s) if err != -INF else -INF
        if err_d != -INF and not dl > err_d:
            raise _LostPrecision
        if not (_exact(wl, err) and _exact(fl, err_f)):
            raise _LostPrecision
        out.append((dl, max(Fraction(0), wl), max(Fraction(0), fl)))
        level = max(fl, 0) - digits
        nxt = canonical_center(fw, level)
        err = err_f if nxt == fw else max(err_f, level)
        w = nxt
    return out


def classical_orbit_logs(f: ValuedPoly, z, n: int, digits: int = 64, max_digits: int = 1 << 14) -> list:
    """``(log|f'(w)|, log max(1,|w|), log max(1,|f(w)|))`` along the first ``n`` orbit points of ``z``.

    Exact rational orbits grow without bound, so centers are truncated to
    ``digits`` places below their size and the propagated error is tracked;
    when it could affect a reported value the orbit is redone with more digits.
    """
    z = f.field.element(z)
    fp = f.derivative()
    while True:
        try:
            return _orbit_logs_at(f, fp, z, n, digits)
        except _LostPrecision:
            digits *= 2
            if digits > max_digits:
                raise BudgetExceeded("orbit needs more working precision than allowed", digits=max_digits)


def orbit_derivative_log(ctx: DynamicsContext, z, n: int) -> Fraction | float:
    """``log_p |(f^n)'(z)|`` as a sum of valuations along the orbit; ``-inf`` if critical."""
    total: Fraction | float = Fraction(0)
    for dl, _, _ in classical_orbit_logs(ctx.f, z, n):
        total = total + dl
    return total


def lyapunov_sequence(ctx: DynamicsContext, xi: BerkPoint, N: int) -> LyapunovReport:
    if xi.is_classical:
        terms = [
            dl + 2 * wl - 2 * fl
            for dl, wl, fl in classical_orbit_logs(ctx.f, xi.center, N)
        ]
    else:
        terms = []
        cur = xi
        for _ in range(N):
            terms.append(chordal_derivative(ctx.f, cur))
            cur = image_point(ctx.f, cur)
    rows = []
    total: Fraction | float = Fraction(0)
    for n, t in enumerate(terms, start=1):
        total = total + t
        rows.append((n, total, total / n if total != -INF else -INF))
    return LyapunovReport(str(xi), tuple(rows))


# ---------------------------------------------------------------------------
# orbit measures


@dataclass(frozen=True)
class OrbitMeasure:
    support: tuple[BerkPoint, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.weights) or not self.support:
            raise InputError("orbit measure needs matching nonempty support and weights")
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in self.weights))
        if sum(self.weights) != 1 or any(w < 0 for w in self.weights):
            raise InputError("weights must be nonnegative and sum to 1")

    @classmethod
    def dirac(cls, xi: BerkPoint) -> "OrbitMeasure":
        return cls((xi,), (Fraction(1),))

    @classmethod
    def uniform_cycle(cls, ctx: DynamicsContext, xi: BerkPoint, max_period: int = 10_000) -> "OrbitMeasure":
        """Equidistribution on the cycle that the orbit of ``xi`` falls into."""
        seen: dict[BerkPoint, int] = {}
        orbit = []
        cur = xi
        for i in range(max_period + 1):
            if cur in seen:
                cyc = orbit[seen[cur]:]
                w = Fraction(1, len(cyc))
                return cls(tuple(cyc), (w,) * len(cyc))
            seen[cur] = i
            orbit.append(cur)
            cur = image_point(ctx.f, cur)
        raise BudgetExceeded("orbit did not become periodic", cap=max_period)

    def check_invariant(self, ctx: DynamicsContext) -> None:
        mass = dict(zip(self.support, self.weights))
        if len(mass) != len(self.support):
            raise InputError("support points must be distinct")
        pushed: dict[BerkPoint, Fraction] = {}
        for pt, w in mass.items():
            img = image_point(ctx.f, pt)
            if img not in mass:
                raise InputError("support is not invariant", point=pt)
            pushed[img] = pushed.get(img, Fraction(0)) + w
        if pushed != mass:
            raise InputError("weights are not invariant")


def orbit_measure_exponent(ctx: DynamicsContext, mu: OrbitMeasure) -> Fraction | float:
    mu.check_invariant(ctx)
    total: Fraction | float = Fraction(0)
    for pt, w in zip(mu.support, mu.weights):
        if w:
            total = total + w * sup_norm(ctx.fprime, pt)
    return total


def bound_check(ctx: DynamicsContext, mu: OrbitMeasure) -> list[Verdict]:
    L = orbit_measure_exponent(ctx, mu)
    out = []
    if ctx.kappa_exact:
        out.append(_check("exponent_at_least_kappa", L - ctx.kappa, L=L, kappa=ctx.kappa))
    else:
        kd = kappa_d(ctx.degree, ctx.field)
        out.append(_check("exponent_at_least_kappa_d", L - kd, L=L, kappa_d=kd))
    if ctx.tame == "tame":
        out.append(_check("tame_exponent_nonnegative", L, L=L))
        if all(not p.is_classical for p in mu.support):
            out.append(Verdict("tame_type_ii_exponent_zero", L == 0, L, {"L": L}))
    return out


# ---------------------------------------------------------------------------
# derivative as a ratio of diameters


def ratio_identity_check(
    ctx: DynamicsContext, z, n: int, m: int | None = None, generators=None, max_m: int = 1 << 10
) -> Verdict:
    z = ctx.field.element(z)
    lhs = orbit_derivative_log(ctx, z, n)
    if lhs == -INF:
        raise InputError("orbit meets a critical point", point=z)
    q = len(generators) if generators else 1
    if n == 0:
        return Verdict("ratio_identity", lhs == 0, Fraction(0), {"lhs": lhs, "rhs": Fraction(0), "m": 0})
    prof = OrbitProfiles(ctx.f, z).profile(n)
    fz = z
    for _ in range(n):
        fz = ctx.f(fz)
    if m is None:
        m = q * n + 1
        while True:
            seq = geometric_sequence(ctx, z, m, generators)
            if prof.slope_at(seq.entries[m].logdiam) == 1:
                break
            m *= 2
            if m > max_m:
                raise BudgetExceeded("no level with injective iterate found", cap=max_m)
    seq = geometric_sequence(ctx, z, m, generators)
    seq_img = geometric_sequence(ctx, fz, m - q * n, generators)
    rhs = seq_img.entries[m - q * n].logdiam - seq.entries[m].logdiam
    return Verdict("ratio_identity", lhs == rhs, rhs - lhs, {"lhs": lhs, "rhs": rhs, "m": m})


# ---------------------------------------------------------------------------
# grid-driven checks


def main_theorem_check(
    table: LengthTable, grid: MarkedGrid, alpha: Fraction | None = None,
    count: int | None = None, tail: int = 5, eps: Fraction = Fraction(1, 100),
) -> list[Verdict]:
    """``a_n >= -alpha`` on every computed term and a tail-window proxy for ``L^- >= 0``."""
    crit = sorted(set(grid.critical) | {0})
    if len(crit) > 1:
        return [Verdict("unique_critical_point", False, None, {"critical_columns": crit, "refused": True})]
    alpha = grid_alpha(table) if alpha is None else Fraction(alpha)
    rows = grid_derivative_sequence(table, grid, count)
    if not rows:
        raise InputError("grid too shallow for any derivative term")
    worst = min(r.a for r in rows)
    window = rows[-tail:]
    proxy = min(r.normalized for r in window)
    return [
        _check("derivative_at_least_minus_alpha", worst + alpha, alpha=alpha, min_a=worst, terms=len(rows)),
        _check("liminf_proxy", proxy + eps, window_min=proxy, last=rows[-1].normalized, eps=eps),
    ]


def liminf_gap_check(table: LengthTable, depth: int, levels: Sequence[int] | None = None) -> Verdict:
    """Whether the gaps stay bounded away from 0 over the computed range.

    Without ``levels`` the gaps are the single edges ``rho(G_n, G_{n+1})``;
    with ``levels`` they are the distances between consecutive listed levels.
    On a finite range "bounded away from 0" is read as: the minimum over the
    second half is at least half the minimum over the first half.  When that
    holds, the tail minimum ``A`` is reported; the normalized derivative is then
    at least ``eps * A`` for some unspecified ``eps > 0``.
    """
    if levels is None:
        gaps = [table.column0(l) for l in range(1, depth + 1)]
    else:
        gaps = table.gap_lengths(list(levels)[: depth + 1])
    if len(gaps) < 2:
        raise InputError("need at least two gaps")
    half = len(gaps) // 2
    head, tail = min(gaps[:half]), min(gaps[half:])
    holds = tail > 0 and 2 * tail >= head
    return Verdict(
        "liminf_gap",
        holds,
        tail - head / 2,
        {"tail_min": tail, "head_min": head, "A": tail if holds else None, "gaps": len(gaps)},
    )


# ---------------------------------------------------------------------------
# critical-value witnesses


def padic_preimage(f: ValuedPoly, y, precision: int, branch: int = 0) -> FieldElement:
    """A rational ``x`` with ``v(f(x) - y) >= precision`` on a simple root branch."""
    field_ = f.field
    if field_.kind != "padic":
        raise InputError("preimages are only searched in p-adic fields")
    p = field_.prime
    g = f - ValuedPoly.constant(field_, y)
    # rescale so that the coefficients are integral with a unit among them
    vmin = min(c.valuation for c in g.coeffs)
    g = g.scale(Fraction(p) ** (-int(math.floor(vmin))))
    gp = g.derivative()
    roots = []
    for a in range(p):
        if g(a).valuation >= 1 and gp(a).valuation == 0:
            roots.append(a)
    if branch >= len(roots):
        raise InputError("no simple root modulo p on the requested branch", y=y)
    x = hensel_preimage(f, y, roots[branch], precision)
    if (f(x) - field_.element(y)).valuation < precision:
        raise InputError("preimage did not converge", y=y)
    return x


def backward_orbit_point(ctx: DynamicsContext, target, n: int, precision: int, branch: int = 0) -> FieldElement:
    x = ctx.field.element(target)
    for _ in range(n):
        x = padic_preimage(ctx.f, x, precision, branch)
    return x


def kappa_witness_search(ctx: DynamicsContext, x0, n: int, c, theta) -> tuple[int, int] | None:
    """First ``(j, beta)`` with ``beta >= theta n`` meeting the derivative lower bound."""
    if not ctx.kappa_exact or ctx.Xi_log is None:
        raise InputError("kappa and Xi must be exact")
    theta = Fraction(theta)
    x0 = ctx.field.element(x0)
    c = ctx.field.element(c)
    orbit = [x0]
    for _ in range(n):
        orbit.append(ctx.f(orbit[-1]))
    if (orbit[n] - c).log_abs > ctx.R_log - n * ctx.Xi_log:
        raise InputError("hypothesis fails: f^n(x0) is not in the shrinking disk around c")
    logs = []
    for w in orbit[:n]:
        d = ctx.fprime(w)
        logs.append(d.log_abs if not d.is_zero() else -INF)
    target = -2 * n * ctx.Xi_log + n * ctx.kappa
    beta_min = max(1, math.ceil(theta * n))
    for j in range(n):
        acc: Fraction | float = Fraction(0)
        for beta in range(1, n - j + 1):
            acc = acc + logs[j + beta - 1]
            if beta >= beta_min and acc >= target:
                return j, beta
    return None


# ---------------------------------------------------------------------------
# Fatou critical points


def fatou_critical_check(
    ctx: DynamicsContext, c, steps: int = 32, iter_cap: int = 64, period_cap: int = 32
) -> tuple[int, LyapunovReport]:
    """Exponent along the orbit of a Fatou critical point after it leaves the critical components.

    Returns ``l0`` and the report for ``f^{l0}(c)``.  Along that orbit the
    components are mapped bijectively, so the partial sums telescope and
    return to the same value after every full period of the component cycle.
    """
    c = ctx.field.element(c)
    if ctx.tame != "tame":
        raise InputError("the Fatou critical check needs a tame polynomial")
    boundary, j, m = fatou_boundary_point(ctx, c, iter_cap, period_cap)
    crit = [cp for cp, _ in ctx.crit]
    pts = [boundary]
    centers = [c]
    for _ in range(j + 2 * m + 1):
        pts.append(image_point(ctx.f, pts[-1]))
        centers.append(ctx.f(centers[-1]))

    def holds_critical(i: int) -> bool:
        r = pts[i].logdiam
        return any((cp - centers[i]).log_abs < r for cp in crit)

    l0 = None
    for start in range(1, j + m + 1):
        if not any(holds_critical(i) for i in range(start, j + 2 * m + 1)):
            l0 = start
            break
    if l0 is None:
        raise BudgetExceeded("component orbit keeps meeting critical points within caps")
    x = centers[l0]
    rep = lyapunov_sequence(ctx, BerkPoint(x, -INF), steps)
    radii = [p.logdiam for p in pts[l0:]]
    spread = max(radii) - min(radii)
    logs = classical_orbit_logs(ctx.f, x, steps)
    zs = [wl for _, wl, _ in logs] + [logs[-1][2]]
    chordal_slack = 2 * max(zs)
    bound = spread + chordal_slack
    partial = [s for _, s, _ in rep.sequence]
    worst = max(abs(s) for s in partial)
    period_start = max(0, j - l0)
    cyc = [partial[i + m] - partial[i] for i in range(period_start, len(partial) - m)]
    verdicts = (
        _check("partial_sums_bounded", bound - worst, bound=bound, worst=worst),
        Verdict("cycle_sum_zero", all(d == 0 for d in cyc), Fraction(0), {"period": m, "preperiod": j}),
    )
    return l0, LyapunovReport(rep.subject, rep.sequence, verdicts)
