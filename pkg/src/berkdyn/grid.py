"""Marked grids and the edge-length engine driven by them.

A grid is stored column-wise.  Marks in a column are downward closed, so a
column is just its depth: ``M[l][k] = 1`` iff ``l <= depth(k)``.  Row 0 and
column 0 are always marked (column 0 has infinite depth).
"""

from __future__ import annotations

import bisect
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .berk import rho
from .dyn import DynamicsContext, local_degree_classical
from .errors import InconsistentGrid, InputError
from .tree import escape_time, generators_and_q, geometric_sequence

UNBOUNDED = float("inf")


class MarkedGrid:
    """Sparse marked grid with ``depths[k]`` for the columns ``k >= 1`` that have marks below row 0."""

    def __init__(self, q: int, m: int, depths: dict[int, int] | None = None,
                 n_rows: int | None = None, n_cols: int | None = None, alpha: Fraction | None = None,
                 critical: Sequence[int] = (0,), seeds: Sequence[Fraction] | None = None):
        if q < 1 or m < 2:
            raise InputError("grid needs q >= 1 and critical multiplicity m >= 2")
        self.q = q
        self.m = m
        self.depths = {k: d for k, d in (depths or {}).items() if d > 0 and k > 0}
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.alpha = alpha
        # columns standing for distinct critical points; a unicritical grid has only column 0
        self.critical = tuple(critical)
        self.seeds = None if seeds is None else tuple(Fraction(x) for x in seeds)

    # basic queries

    def depth(self, k: int) -> float:
        if k == 0:
            return UNBOUNDED
        return self.depths.get(k, 0)

    def marked(self, row: int, col: int) -> bool:
        if row < 0 or col < 0:
            raise IndexError("negative grid index")
        return row <= self.depth(col)

    def listed_columns(self) -> list[int]:
        """Columns that may start a capture interval in the length engine."""
        return sorted(self.depths)

    def column_bound(self) -> int:
        if self.n_cols is not None:
            return self.n_cols
        return max(self.depths, default=0) + 1

    def row_bound(self) -> int:
        if self.n_rows is not None:
            return self.n_rows
        return max(self.depths.values(), default=0) + 1

    def dense(self, n_rows: int | None = None, n_cols: int | None = None) -> list[str]:
        n_rows = self.row_bound() if n_rows is None else n_rows
        n_cols = self.column_bound() if n_cols is None else n_cols
        return [
            "".join("1" if self.marked(r, c) else "0" for c in range(n_cols))
            for r in range(n_rows)
        ]

    # consistency

    def closure(self, max_col: int | None = None) -> "MarkedGrid":
        """Smallest grid containing this one that satisfies the consistency rule.

        Columns beyond ``max_col`` (default: the known column range) are not
        created.
        """
        limit = self.column_bound() if max_col is None else max_col
        depths = dict(self.depths)
        q = self.q
        changed = True
        while changed:
            changed = False
            for k in sorted(depths):
                dk = depths[k]
                partners = set(depths) | {c - k for c in depths if c > k}
                for j in sorted(partners):
                    if q * j > dk:
                        break
                    t = dk - q * j
                    a = min(t, depths.get(j, 0))
                    if k + j < limit:
                        b = min(t, depths.get(k + j, 0))
                        if a > b:
                            depths[k + j] = a
                            changed = True
                        elif b > a:
                            depths[j] = b
                            changed = True
        return MarkedGrid(self.q, self.m, depths, self.n_rows, self.n_cols, self.alpha, self.critical, self.seeds)

    def violations(self, max_col: int | None = None) -> list[tuple[int, int, int]]:
        """``(row, k, j)`` triples where the consistency rule fails."""
        limit = self.column_bound() if max_col is None else max_col
        out = []
        q = self.q
        cols = [0] + sorted(self.depths)
        for k in cols:
            dk = self.depth(k)
            if dk == UNBOUNDED:
                continue
            for j in range(1, dk // q + 1):
                if k + j >= limit:
                    break
                t = dk - q * j
                if min(t, self.depth(j)) != min(t, self.depth(k + j)):
                    out.append((dk, k, j))
        return out

    def is_consistent(self) -> bool:
        return not self.violations()

    # text format

    @classmethod
    def from_text(cls, text: str) -> "MarkedGrid":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise InputError("empty grid file")
        header = {}
        for tok in lines[0].split():
            key, sep, val = tok.partition("=")
            if not sep:
                raise InputError(f"bad grid header token {tok!r}")
            header[key] = val
        try:
            q = int(header["q"])
            m = int(header["m"])
            alpha = Fraction(header["alpha"]) if "alpha" in header else None
            critical = [int(c) for c in header.get("critical", "0").split(",")]
            seeds = [Fraction(x) for x in header["seeds"].split(",")] if "seeds" in header else None
        except (KeyError, ValueError, ZeroDivisionError):
            raise InputError("grid header must be 'q=<int> m=<int>' with optional alpha=, critical=, seeds=") from None
        unknown = set(header) - {"q", "m", "alpha", "critical", "seeds"}
        if unknown:
            raise InputError(f"unknown grid header keys: {sorted(unknown)}")
        rows = lines[1:]
        if not rows:
            raise InputError("grid has no rows")
        width = len(rows[0])
        if any(len(r) != width or set(r) - {"0", "1"} for r in rows):
            raise InputError("grid rows must be equal-length strings of 0 and 1")
        if set(rows[0]) != {"1"}:
            raise InconsistentGrid("inconsistent grid: row 0 must be fully marked")
        depths = {}
        for k in range(width):
            col = [r[k] == "1" for r in rows]
            d = col.index(False) - 1 if False in col else len(rows) - 1
            if any(col[d + 1:]):
                raise InconsistentGrid(f"inconsistent grid: column {k} is not downward closed", column=k)
            if k == 0 and d != len(rows) - 1:
                raise InconsistentGrid("inconsistent grid: column 0 must be fully marked")
            if k > 0:
                depths[k] = d
        grid = cls(q, m, depths, n_rows=len(rows), n_cols=width, alpha=alpha, critical=critical, seeds=seeds)
        bad = grid.violations()
        if bad:
            raise InconsistentGrid("inconsistent grid: consistency rule fails", first=bad[0])
        return grid

    def to_text(self, n_rows: int | None = None, n_cols: int | None = None) -> str:
        head = f"q={self.q} m={self.m}"
        if self.alpha is not None:
            head += f" alpha={self.alpha}"
        if self.critical != (0,):
            head += " critical=" + ",".join(map(str, self.critical))
        if self.seeds is not None:
            head += " seeds=" + ",".join(map(str, self.seeds))
        return "\n".join([head, *self.dense(n_rows, n_cols)]) + "\n"


def fibonacci_sequences(depth: int) -> tuple[list[int], list[int]]:
    """``(ell, k)`` with ``ell[0] = 0, k[0] = 1`` and entries up to index ``depth + 1``."""
    ell = [0, 1]
    ks = [1, 2, 3]
    while len(ell) < depth + 2:
        n = len(ell) - 1
        ell.append(ell[n] + ks[n])
        if len(ks) < len(ell) + 1:
            ks.append(ks[-1] + ks[-2])
    return ell, ks[: depth + 2]


class FibonacciGrid(MarkedGrid):
    """Closure of the marks ``(ell_n, k_n)``, ``1 <= n <= depth``, with ``q = 1`` and ``m = 2``.

    Depths of the closure are evaluated on demand, since the grid spans
    Fibonacci-many columns.
    """

    def __init__(self, depth: int):
        if depth < 1:
            raise InputError("fibonacci grid depth must be at least 1")
        self.mark_depth = depth
        self.ell, self.ks = fibonacci_sequences(depth)
        seeds = {self.ks[n]: self.ell[n] for n in range(1, depth + 1)}
        super().__init__(1, 2, seeds)
        self._cache: dict[int, int] = {}

    def depth(self, k: int) -> float:
        if k == 0:
            return UNBOUNDED
        return self._closure_depth(k)

    def _closure_depth(self, k: int) -> int:
        if k in self._cache:
            return self._cache[k]
        out = 0
        while True:
            n = bisect.bisect_right(self.ks, k, 1, self.mark_depth + 1) - 1
            if n < 1:
                break
            if k == self.ks[n]:
                out = self.ell[n]
                break
            span = self.ks[n + 1] - self.ks[n] if n + 1 <= self.mark_depth else self.ks[n - 1]
            j = k - self.ks[n]
            if j >= span:
                break
            out = max(0, min(self.ell[n] - j, self._closure_depth(j)))
            break
        self._cache[k] = out
        return out

    def column_bound(self) -> int:
        return self.ks[self.mark_depth] + self.ks[self.mark_depth - 1]

    def row_bound(self) -> int:
        return self.ell[self.mark_depth] + 1

    def materialize(self, max_col: int | None = None) -> MarkedGrid:
        """Explicit sparse copy of the closure up to ``max_col``."""
        limit = self.column_bound() if max_col is None else max_col
        depths = {k: self.depth(k) for k in range(1, limit)}
        return MarkedGrid(1, 2, depths, n_cols=limit)

    def closure(self, max_col: int | None = None) -> MarkedGrid:
        return self.materialize(max_col).closure(max_col)

    def violations(self, max_col: int | None = None):
        return self.materialize(max_col).violations(max_col)


def fibonacci_grid(depth: int) -> FibonacciGrid:
    return FibonacciGrid(depth)


def gamma(grid: MarkedGrid, m: int, k: int, j: int) -> int:
    """Smallest ``g >= 1`` with ``M[j + q g][k - g]`` marked."""
    if not (1 <= k <= m) or not (0 <= j <= m + 1 - k):
        raise InputError("gamma index out of range", m=m, k=k, j=j)
    for g in range(1, k + 1):
        if grid.marked(j + grid.q * g, k - g):
            return g
    raise AssertionError("column 0 is always marked")


def gamma_profile(grid: MarkedGrid, m: int, k: int) -> list[int]:
    vals = [gamma(grid, m, k, j) for j in range(m + 2 - k)]
    for a, b, j in zip(vals, vals[1:], range(len(vals))):
        assert a <= b
        assert j + grid.q * a < j + 1 + grid.q * b
    return vals


# ---------------------------------------------------------------------------
# length engine


@dataclass(frozen=True)
class Seeds:
    """Lengths of the top ``q`` edges.

    ``top[i-1]`` is the column-0 edge at level ``i``.  ``unmarked[i-1]`` is
    the edge at level ``i`` in a column that is not marked there; by default
    it maps with degree 1 onto the generator edge that the column-0 edge
    covers ``m`` times, so it is ``m`` times longer.
    """

    top: tuple[Fraction, ...]
    unmarked: tuple[Fraction, ...] | None = None


def fibonacci_seeds(x0, x1) -> Seeds:
    """Seeds realizing the gap lengths ``x0 = rho(L_1, L_0)`` and ``x1 = rho(L_3, L_1)``.

    Level 2 of column 0 pulls back an unmarked level-1 edge and level 3
    pulls back the marked one, so ``x1 = (u + x0) / 2`` where ``u`` is the
    unmarked top length.
    """
    x0, x1 = Fraction(x0), Fraction(x1)
    u = 2 * x1 - x0
    if x0 <= 0 or u <= 0:
        raise InputError("gap seeds need x0 > 0 and x1 > x0/2")
    return Seeds((x0,), (u,))


@dataclass(frozen=True)
class _Interval:
    lo: int  # exclusive
    hi: int  # inclusive
    col: int
    depth: float  # 0 for an unmarked top run


class LengthTable:
    """Edge lengths ``rho(e_l(f^k c))`` for a grid and top seeds.

    Below the top ``q`` levels every length follows from the pullback law:
    an edge maps onto the edge ``q`` levels up in the next column, with
    degree ``m`` where the grid is marked and 1 elsewhere.
    """

    def __init__(self, grid: MarkedGrid, seeds, max_level: int | None = None):
        if not isinstance(seeds, Seeds):
            seeds = Seeds(tuple(Fraction(x) for x in seeds))
        top = [Fraction(x) for x in seeds.top]
        unmarked = [grid.m * x for x in top] if seeds.unmarked is None else [Fraction(x) for x in seeds.unmarked]
        if len(top) != grid.q or len(unmarked) != grid.q:
            raise InputError(f"need exactly q={grid.q} top seed lengths")
        if any(x <= 0 for x in top + unmarked):
            raise InputError("seed lengths must be positive")
        self.grid = grid
        self.q = grid.q
        self.m = grid.m
        self.seeds = top
        self.unmarked = unmarked
        self.S = len(top)
        if max_level is None and grid.n_rows is not None:
            max_level = grid.n_rows - 1 + grid.q
        self.max_level = max_level
        self._intervals: list[_Interval] = []
        self._his: list[int] = []
        self._scan_col = 1
        self._runmax = 0
        self._listed = grid.listed_columns()
        self._listed_pos = 0
        self._dmemo: dict[int, Fraction] = {}
        self._cmemo: dict[tuple[int, int], Fraction] = {}

    # top-row helpers

    def _top(self, r: int) -> Fraction:
        """Column-0 length obtained by pulling back the unmarked top edge at row ``r``."""
        return self.unmarked[r - 1] / self.m

    def _top_sum(self, a: int, b: int) -> Fraction:
        """Sum of ``_top`` over levels ``(a, b]`` reduced mod q into rows ``1..q``."""
        if b <= a:
            return Fraction(0)
        q = self.q
        period = sum(self._top(r) for r in range(1, q + 1))
        total = Fraction(0)
        # align to whole periods
        first_full = -(-a // q) * q
        last_full = (b // q) * q
        if first_full >= last_full:
            return sum(self._top((i - 1) % q + 1) for i in range(a + 1, b + 1))
        total += sum(self._top((i - 1) % q + 1) for i in range(a + 1, first_full + 1))
        total += period * ((last_full - first_full) // q)
        total += sum(self._top((i - 1) % q + 1) for i in range(last_full + 1, b + 1))
        return total

    # capture intervals

    def _extend(self, level: int) -> None:
        q = self.q
        while self._runmax < level:
            k = self._scan_col
            nxt = self._listed[self._listed_pos] if self._listed_pos < len(self._listed) else None
            if nxt == k:
                d = self.grid.depth(k)
                v = max(d, q) + q * k
                if v > self._runmax:
                    self._intervals.append(_Interval(self._runmax, v, k, d))
                    self._his.append(v)
                    self._runmax = v
                self._listed_pos += 1
                self._scan_col = k + 1
                continue
            # a run of columns without marks below row 0
            last = nxt - 1 if nxt is not None else max(k, -(-level // q) - 1)
            v = q * (last + 1)
            if v > self._runmax:
                self._intervals.append(_Interval(self._runmax, v, -1, 0))
                self._his.append(v)
                self._runmax = v
            self._scan_col = last + 1

    def _interval_sum(self, iv: _Interval, a: int, b: int) -> Fraction:
        """Sum of column-0 lengths over levels ``(a, b]`` inside ``iv``."""
        if iv.col < 0:
            # level l sits at row ((l-1) mod q) + 1 of an unmarked column
            return self._top_sum(a, b)
        shift = self.q * iv.col
        ra, rb = a - shift, b - shift
        out = Fraction(0)
        if ra < iv.depth:
            out += (self.D(min(rb, iv.depth)) - self.D(ra)) / self.m
        lo = max(ra, iv.depth)
        if rb > lo:
            out += sum(self._top(r) for r in range(int(lo) + 1, rb + 1))
        return out

    def _check_level(self, level: int) -> None:
        if self.max_level is not None and level > self.max_level:
            raise InputError(f"level {level} exceeds the grid's known rows", max_level=self.max_level)

    def D(self, level) -> Fraction:
        """``sum_{i=1}^{level}`` of column-0 edge lengths, i.e. ``rho(xi_f, G_level(c))``."""
        level = int(level)
        if level <= 0:
            return Fraction(0)
        if level <= self.S:
            return sum(self.seeds[:level], Fraction(0))
        if level in self._dmemo:
            return self._dmemo[level]
        self._check_level(level)
        if sys.getrecursionlimit() < 20000:
            sys.setrecursionlimit(20000)
        self._extend(level)
        iv = self._intervals[bisect.bisect_left(self._his, level)]
        base = max(iv.lo, self.S)
        val = self.D(base) + self._interval_sum(iv, base, level)
        self._dmemo[level] = val
        return val

    def column0(self, level: int) -> Fraction:
        return self.D(level) - self.D(level - 1)

    def gap_lengths(self, ell: Sequence[int]) -> list[Fraction]:
        return [self.D(b) - self.D(a) for a, b in zip(ell, ell[1:])]

    # general columns

    def C(self, k: int, level: int) -> Fraction:
        """``sum_{i=1}^{level}`` of edge lengths above ``f^k(c)``."""
        if k == 0:
            return self.D(level)
        if level <= 0:
            return Fraction(0)
        key = (k, level)
        if key in self._cmemo:
            return self._cmemo[key]
        if sys.getrecursionlimit() < 20000:
            sys.setrecursionlimit(20000)
        d = self.grid.depth(k)
        q = self.q
        dprime = max(d, q)
        val = self.D(min(level, d))
        top_hi = min(level, q)
        if top_hi > d:
            val += sum(self.unmarked[r - 1] for r in range(int(d) + 1, top_hi + 1))
        if level > dprime:
            val += self.C(k + 1, level - q) - self.C(k + 1, dprime - q)
        self._cmemo[key] = val
        return val

    def length(self, level: int, k: int) -> Fraction:
        return self.C(k, level) - self.C(k, level - 1)


def length_engine(grid: MarkedGrid, seeds: Sequence, max_level: int | None = None) -> LengthTable:
    return LengthTable(grid, seeds, max_level)


# ---------------------------------------------------------------------------
# derivative sequences


@dataclass(frozen=True)
class GridDerivativeRow:
    n: int
    k: int
    ell: int
    a: Fraction
    normalized: Fraction


def top_stretch(table: LengthTable) -> Fraction:
    """``rho(xi_f, f(xi_f))``: the image of the top ``q`` column-0 edges, stretched by ``m``."""
    return table.m * sum(table.seeds[: table.q])


def fibonacci_derivative_sequence(table: LengthTable, grid: FibonacciGrid) -> list[GridDerivativeRow]:
    """``a_n = log|(f^{k_n - 1})'(v)|`` at the critical value, via the level recentring."""
    s = top_stretch(table)
    rows = []
    for n in range(1, grid.mark_depth):
        a = 2 * table.D(grid.ell[n + 1]) - table.D(grid.ell[n]) - s
        kn = grid.ks[n]
        rows.append(GridDerivativeRow(n, kn, grid.ell[n], a, a / (kn - 1)))
    return rows


def chain_level(grid: MarkedGrid, n: int, start: int = 1) -> int:
    """A level past every mark met by the diagonal from column ``start`` over ``n`` steps."""
    q = grid.q
    best = q * n + 1
    for i in range(n):
        d = grid.depth(start + i)
        if d == UNBOUNDED:
            raise InputError("critical orbit returns to the critical point; derivative vanishes")
        best = max(best, int(d) + q * i + 1)
    return best


def derivative_log(table: LengthTable, n: int) -> Fraction:
    """``log|(f^n)'(f(c))|`` from column prefix sums."""
    M = chain_level(table.grid, n)
    if table.max_level is not None and M > table.max_level:
        raise InputError(f"derivative term {n} needs level {M} beyond the grid's rows", max_level=table.max_level)
    return table.C(1, M) - table.C(n + 1, M - table.grid.q * n)


def general_derivative_sequence(table: LengthTable, count: int) -> list[GridDerivativeRow]:
    rows = []
    for n in range(1, count + 1):
        a = derivative_log(table, n)
        rows.append(GridDerivativeRow(n, n + 1, chain_level(table.grid, n), a, a / n))
    return rows


def grid_derivative_sequence(table: LengthTable, grid: MarkedGrid, count: int | None = None) -> list[GridDerivativeRow]:
    if isinstance(grid, FibonacciGrid):
        return fibonacci_derivative_sequence(table, grid)
    if count is None:
        count = max(1, (grid.row_bound() - 1) // grid.q - 1)
    rows = []
    for n in range(1, count + 1):
        try:
            a = derivative_log(table, n)
        except InputError:
            break
        rows.append(GridDerivativeRow(n, n + 1, chain_level(grid, n), a, a / n))
    return rows


def grid_alpha(table: LengthTable) -> Fraction:
    """Omitted-tree radius when the other critical points split off at the generators.

    With ``q = 1`` every escaping critical point leaves through the base
    point itself and the bound is 0.  Otherwise the generator
    ``zeta_j`` sits ``m * (seed_1 + ... + seed_j)`` below ``f(xi_f)``; the
    bound is the largest distance from the base point to any such generator
    or to its preimage on the degree-one side.
    """
    if table.grid.alpha is not None:
        return table.grid.alpha
    q, m = table.q, table.m
    s = top_stretch(table)
    best = Fraction(0)
    for j in range(1, q):
        below_top = m * sum(table.seeds[:j])
        best = max(best, s - below_top, below_top)
    return best


# ---------------------------------------------------------------------------
# grids computed from dynamics


def computed_grid(ctx: DynamicsContext, c0, xi, rows: int, cols: int) -> MarkedGrid:
    """Marked grid of ``xi`` against the critical point ``c0``."""
    field = ctx.field
    c0 = field.element(c0)
    xi = field.element(xi)
    if not ctx.fprime(c0).is_zero():
        raise InputError(f"{c0} is not a critical point")
    if escape_time(ctx, c0, rows + cols + 1) is not None:
        raise InputError("no Julia critical point: the chosen critical point escapes")
    escaping = [c for c, _ in ctx.crit if escape_time(ctx, c) is not None]
    gens = generators_and_q(ctx, escaping)[0] if escaping and not ctx.simple else None
    q = len(gens) if gens else 1
    seq = geometric_sequence(ctx, c0, rows - 1, gens)
    depths = {}
    w = xi
    for k in range(cols):
        if not ctx.in_base_disk(w):
            break
        d = 0
        for ell in range(1, rows):
            g = seq.entries[ell]
            if (w - g.center).log_abs <= g.logdiam:
                d = ell
            else:
                break
        if k > 0:
            depths[k] = d
        w = ctx.f(w)
    m = local_degree_classical(ctx.f, c0)
    return MarkedGrid(q, max(m, 2), depths, n_rows=rows, n_cols=cols)


def computed_seeds(ctx: DynamicsContext, c0, count: int, generators=None) -> list[Fraction]:
    """Column-0 edge lengths ``rho(G_l(c0), G_{l-1}(c0))`` for ``l = 1..count``."""
    seq = geometric_sequence(ctx, c0, count, generators)
    return [rho(a, b) for a, b in zip(seq.entries, seq.entries[1:])]
