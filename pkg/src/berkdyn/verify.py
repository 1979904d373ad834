"""Seeded randomized verification suites.

Every instance draws from its own ``random.Random`` keyed by suite, seed and
index, so results do not depend on batch order or worker count.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources

from .berk import BerkPoint
from .dyn import analyze, image_point, kappa_of_f, sup_norm, tameness_report, KappaBounds
from .errors import InputError
from .grid import (
    FibonacciGrid,
    LengthTable,
    MarkedGrid,
    fibonacci_seeds,
    grid_derivative_sequence,
)
from .lyap import (
    OrbitMeasure,
    Verdict,
    bound_check,
    liminf_gap_check,
    main_theorem_check,
    ratio_identity_check,
)
from .valfield import FieldDescriptor, ValuedPoly

SUITES = ("distortion", "ratio", "bounds", "grid")
DEFAULT_COUNTS = {"distortion": 1000, "ratio": 200, "bounds": 100, "grid": 1}


def _rng(suite: str, seed: int, index: int) -> random.Random:
    return random.Random(f"{suite}:{seed}:{index}")


def _rat(rng: random.Random, p: int, spread: int = 2, size: int = 30) -> Fraction:
    num = rng.randint(-size, size) or 1
    return Fraction(num, rng.randint(1, 9)) * Fraction(p) ** rng.randint(-spread, spread)


def _point(rng: random.Random, field: FieldDescriptor, center=None) -> BerkPoint:
    if center is None:
        center = Fraction(rng.randint(-60, 60), rng.randint(1, 12))
    r = Fraction(rng.randint(-8, 8), rng.randint(1, 3))
    return BerkPoint(field.element(center), r)


# ---------------------------------------------------------------------------
# distortion


def tame_distortion_instance(rng: random.Random) -> Verdict:
    p = rng.choice([3, 5, 7, 11, 13])
    d = rng.randint(2, min(6, p - 1))
    F = FieldDescriptor.padic(p)
    coeffs = [_rat(rng, p) for _ in range(d)] + [_rat(rng, p)]
    f = ValuedPoly(F, coeffs)
    xi = _point(rng, F)
    lhs = sup_norm(f.derivative(), xi)
    rhs = image_point(f, xi).logdiam - xi.logdiam
    return Verdict("distortion_identity", lhs == rhs, lhs - rhs,
                   {"p": p, "poly": str(coeffs), "point": xi})


def nontame_polynomial(rng: random.Random) -> ValuedPoly:
    """Random polynomial with rational critical points and a p-divisible achieved degree."""
    while True:
        p = rng.choice([2, 3])
        d = rng.randint(max(2, p), 6)
        F = FieldDescriptor.padic(p)
        roots = [Fraction(rng.randint(-6, 6), rng.choice([1, 1, 2, 3])) for _ in range(d - 1)]
        # clump some critical points together to create higher local degrees
        if d > 2 and rng.random() < 0.5:
            roots[1] = roots[0]
        fp = ValuedPoly.from_roots(F, roots, _rat(rng, p, 1, 5))
        coeffs = [_rat(rng, p, 1, 5)] + [fp.coeff(i).to_fraction() / (i + 1) for i in range(fp.degree + 1)]
        f = ValuedPoly(F, coeffs)
        if tameness_report(f) == "nontame":
            return f


def nontame_distortion_instance(rng: random.Random) -> Verdict:
    f = nontame_polynomial(rng)
    F = f.field
    kappa = kappa_of_f(f)
    if isinstance(kappa, KappaBounds):
        kappa = kappa.lower
    crit = [c for c in _critical_values_hint(f)]
    center = None
    if crit and rng.random() < 0.7:
        c = rng.choice(crit)
        center = c + Fraction(rng.randint(-3, 3)) * Fraction(F.prime) ** rng.randint(0, 4)
    xi = _point(rng, F, center)
    lhs = sup_norm(f.derivative(), xi)
    rhs = kappa + image_point(f, xi).logdiam - xi.logdiam
    return Verdict("distortion_inequality", lhs >= rhs, lhs - rhs,
                   {"p": F.prime, "poly": [str(c) for c in f.coeffs], "point": xi, "kappa": kappa})


def _critical_values_hint(f: ValuedPoly) -> list[Fraction]:
    from .dyn import critical_points
    crit = critical_points(f) or []
    return [c.to_fraction() for c, _ in crit]


# ---------------------------------------------------------------------------
# ratio identity


def repelling_quadratic(rng: random.Random, tame: bool = True):
    """``r + lam (z - r) + a (z - r)^2`` with ``|lam| > 1``; returns ``(f, r)``."""
    p = rng.choice([3, 5, 7]) if tame else 2
    F = FieldDescriptor.padic(p)
    r = Fraction(rng.randint(-20, 20), rng.choice([1, 2, 4, 5, 7]))
    if r.denominator % p == 0:
        r = Fraction(r.numerator)
    unit = rng.choice([u for u in range(1, 3 * p) if u % p])
    lam = Fraction(unit * rng.choice([1, -1]), p ** rng.randint(1, 2))
    a = Fraction(rng.choice([u for u in range(1, 3 * p) if u % p]), rng.choice([1, 2, 4])) * Fraction(p) ** rng.randint(-1, 1)
    if a.denominator % p == 0 and a.denominator != p:
        a = Fraction(a.numerator, p)
    w = ValuedPoly.z(F) - ValuedPoly.constant(F, r)
    f = ValuedPoly.constant(F, r) + w.scale(lam) + (w * w).scale(a)
    return f, r


def ratio_instance(rng: random.Random) -> list[Verdict]:
    f, r = repelling_quadratic(rng)
    ctx = analyze(f, anchor=r)
    out = []
    for n in range(1, 9):
        v = ratio_identity_check(ctx, r, n)
        out.append(Verdict(v.name, v.passed, v.margin, {"n": n, "p": f.field.prime, "anchor": r, **v.detail}))
    return out


def worked_ratio() -> list[Verdict]:
    F = FieldDescriptor.padic(3)
    f = ValuedPoly(F, (0, Fraction(-1, 3), Fraction(1, 3)))
    ctx = analyze(f)
    out = []
    for n in range(1, 9):
        v = ratio_identity_check(ctx, 0, n)
        ok = v.passed and v.detail["lhs"] == n
        out.append(Verdict("worked_ratio_identity", ok, v.margin, {"n": n, **v.detail}))
    return out


# ---------------------------------------------------------------------------
# bounds on orbit measures


def good_reduction_cycle(rng: random.Random, tame: bool):
    """A conjugate of a good-reduction polynomial and a type II cycle measure for it."""
    while True:
        if tame:
            p = rng.choice([3, 5, 7])
            d = rng.randint(2, p - 1)
        else:
            p = rng.choice([2, 3])
            d = rng.randint(p, 5)
        F = FieldDescriptor.padic(p)
        coeffs = [rng.randint(-9, 9) for _ in range(d)] + [rng.choice([u for u in range(1, 3 * p) if u % p])]
        f = ValuedPoly(F, coeffs)
        a = Fraction(rng.randint(-9, 9), rng.choice([1, 2]) if p != 2 else 1)
        b = Fraction(p) ** rng.randint(-2, 2)
        # g(z) = a + b f((z - a) / b) fixes xi(a, log|b|)
        inner = (ValuedPoly.z(F) - ValuedPoly.constant(F, a)).scale(1 / b)
        g = ValuedPoly.constant(F, a) + f.compose(inner).scale(b)
        ctx = analyze(g, anchor=a)
        k = rng.randint(0, 3)
        x = rng.randint(0, p ** max(k, 1) - 1)
        start = BerkPoint(F.element(a + b * x), F.element(b).log_abs - k)
        if not _settles(ctx, start):
            continue
        return ctx, OrbitMeasure.uniform_cycle(ctx, start, max_period=200)


def _settles(ctx, start: BerkPoint, steps: int = 200, drop: int = 20) -> bool:
    """Whether the orbit of ``start`` becomes periodic without shrinking towards an attracting cycle."""
    seen = set()
    cur = start
    for _ in range(steps):
        if cur in seen:
            return True
        if cur.logdiam < start.logdiam - drop:
            return False
        seen.add(cur)
        cur = image_point(ctx.f, cur)
    return False


def bounds_instance(rng: random.Random, index: int) -> list[Verdict]:
    kind = index % 3
    if kind == 0:
        f, r = repelling_quadratic(rng, tame=rng.random() < 0.7)
        ctx = analyze(f, anchor=r)
        mu = OrbitMeasure.dirac(BerkPoint(f.field.element(r), float("-inf")))
        label = "repelling_fixed_point"
    else:
        ctx, mu = good_reduction_cycle(rng, tame=(kind == 1))
        label = "type_ii_cycle"
    out = []
    for v in bound_check(ctx, mu):
        out.append(Verdict(v.name, v.passed, v.margin, {"measure": label, "p": ctx.field.prime,
                                                      "period": len(mu.support), **v.detail}))
    return out


# ---------------------------------------------------------------------------
# grids


def fixture_names() -> list[str]:
    root = resources.files("berkdyn") / "fixtures"
    return sorted(e.name[:-5] for e in root.iterdir() if e.name.endswith(".grid"))


def load_fixture(name: str) -> MarkedGrid:
    path = resources.files("berkdyn") / "fixtures" / f"{name}.grid"
    if not path.is_file():
        raise InputError(f"no grid fixture named {name!r}", known=",".join(fixture_names()))
    return MarkedGrid.from_text(path.read_text())


def fixture_table(grid: MarkedGrid) -> LengthTable:
    seeds = grid.seeds if grid.seeds is not None else (Fraction(1),) * grid.q
    return LengthTable(grid, seeds)


def fibonacci_checks(depth: int = 40, x0=1, x1=1) -> list[Verdict]:
    grid = FibonacciGrid(depth)
    table = LengthTable(grid, fibonacci_seeds(x0, x1))
    xs = table.gap_lengths(grid.ell[: depth + 1])
    lo, hi = min(Fraction(x0), Fraction(x1)), max(Fraction(x0), Fraction(x1))
    rec = all(2 * xs[j] == xs[j - 1] + xs[j - 2] for j in range(2, len(xs)))
    out = [
        Verdict("fibonacci_gap_recurrence", rec, Fraction(0), {"gaps": len(xs)}),
        Verdict("fibonacci_gap_bounds", all(lo <= x <= hi for x in xs),
                min(min(x - lo, hi - x) for x in xs), {"lower": lo, "upper": hi}),
    ]
    rows = grid_derivative_sequence(table, grid)
    tail = [r for r in rows if r.n >= 25]
    worst = max(abs(r.normalized) for r in tail)
    out.append(Verdict("fibonacci_normalized_small", worst <= Fraction(1, 100), Fraction(1, 100) - worst,
                       {"from_n": 25, "max_abs": worst}))
    out.extend(main_theorem_check(table, grid))
    out.append(liminf_gap_check(table, depth - 1, levels=grid.ell))
    return out


def grid_suite() -> list[Verdict]:
    out = []
    for name in fixture_names():
        grid = load_fixture(name)
        if len(set(grid.critical) | {0}) > 1:
            continue
        for v in main_theorem_check(fixture_table(grid), grid):
            out.append(Verdict(v.name, v.passed, v.margin, {"fixture": name, **v.detail}))
    out.extend(fibonacci_checks())
    return out


# ---------------------------------------------------------------------------
# driver


def _instance(args: tuple[str, int, int]) -> list[Verdict]:
    suite, seed, index = args
    rng = _rng(suite, seed, index)
    if suite == "distortion":
        return [tame_distortion_instance(rng), nontame_distortion_instance(rng)]
    if suite == "ratio":
        return ratio_instance(rng)
    if suite == "bounds":
        return bounds_instance(rng, index)
    raise ValueError(suite)


def run_suite(suite: str, count: int | None = None, seed: int = 0, jobs: int = 1) -> list[dict]:
    """Verdict records for one suite, ordered by instance index."""
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}")
    if suite == "grid":
        return [_record(suite, 0, v) for v in grid_suite()]
    count = DEFAULT_COUNTS[suite] if count is None else count
    if count < 0:
        raise InputError("count must be nonnegative")
    tasks = [(suite, seed, i) for i in range(count)]
    if jobs > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_instance, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        results = [_instance(t) for t in tasks]
    records = []
    if suite == "ratio":
        records += [_record(suite, -1, v) for v in worked_ratio()]
    for i, vs in enumerate(results):
        records += [_record(suite, i, v) for v in vs]
    return records


def _record(suite: str, index: int, v: Verdict) -> dict:
    return {"suite": suite, "instance": index, "name": v.name, "passed": v.passed,
            "margin": v.margin, "detail": v.detail}


def run(suites, count: int | None = None, seed: int = 0, jobs: int = 1) -> dict:
    if isinstance(suites, str):
        suites = SUITES if suites == "all" else (suites,)
    records = []
    for s in suites:
        records += run_suite(s, count, seed, jobs)
    failed = sum(1 for r in records if not r["passed"])
    return {
        "command": "verify",
        "suites": list(suites),
        "seed": seed,
        "summary": {"total": len(records), "passed": len(records) - failed, "failed": failed},
        "verdicts": records,
    }
