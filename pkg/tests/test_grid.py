import sys
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from berkdyn.dyn import analyze
from berkdyn.errors import InconsistentGrid, InputError
from berkdyn.grid import (
    MarkedGrid,
    Seeds,
    chain_level,
    computed_grid,
    computed_seeds,
    derivative_log,
    fibonacci_grid,
    fibonacci_seeds,
    gamma,
    gamma_profile,
    grid_alpha,
    grid_derivative_sequence,
    length_engine,
)
from berkdyn.valfield import FieldDescriptor, ValuedPoly
from berkdyn.verify import fixture_names, load_fixture

sys.setrecursionlimit(20000)


# -- independent oracles -----------------------------------------------------


def dense_closure(marks, q, rows, cols):
    """Fixpoint of the consistency rule on an explicit 0/1 array."""
    M = [[r == 0 or c == 0 for c in range(cols)] for r in range(rows)]
    for r, c in marks:
        for rr in range(r + 1):
            M[rr][c] = True
    changed = True
    while changed:
        changed = False
        for l in range(rows):
            for k in range(1, cols):
                if not M[l][k]:
                    continue
                for j in range(1, l // q + 1):
                    if k + j >= cols:
                        break
                    row = l - q * j
                    if M[row][k + j] != M[row][j]:
                        M[row][k + j] = M[row][j] = True
                        changed = True
    return M


def depths_of(M):
    out = {}
    for k in range(1, len(M[0])):
        d = 0
        while d + 1 < len(M) and M[d + 1][k]:
            d += 1
        if d:
            out[k] = d
    return out


def naive_lengths(grid, top, unmarked):
    """Edge lengths from the pullback law by plain recursion."""
    q, m = grid.q, grid.m

    @lru_cache(None)
    def L(level, k):
        if k > 0 and grid.marked(level, k):
            return L(level, 0)
        if level <= q:
            return top[level - 1] if k == 0 else unmarked[level - 1]
        return L(level - q, k + 1) / (m if grid.marked(level, k) else 1)

    return L


def southwest_scan(M, q, k, j):
    g = 1
    while not M[j + q * g][k - g]:
        g += 1
    return g


# -- Fibonacci grid -----------------------------------------------------------


def test_fibonacci_marks():
    g = fibonacci_grid(6)
    assert g.ks[1:6] == [2, 3, 5, 8, 13]
    assert g.ell[1:6] == [1, 3, 6, 11, 19]
    for n, (l, k) in enumerate([(1, 2), (3, 3), (6, 5), (11, 8)], start=1):
        assert g.marked(l, k) and not g.marked(l + 1, k)
    assert all(g.marked(0, k) for k in range(60))
    assert all(g.marked(l, 0) for l in range(200))
    assert g.q == 1 and g.m == 2


def test_fibonacci_rejects_zero_depth():
    with pytest.raises(InputError):
        fibonacci_grid(0)


@pytest.mark.parametrize("depth", [3, 5, 7])
def test_fibonacci_closure_matches_dense_oracle(depth):
    g = fibonacci_grid(depth)
    cols = g.column_bound()
    rows = g.ell[depth] + 2
    marks = [(g.ell[n], g.ks[n]) for n in range(1, depth + 1)]
    M = dense_closure(marks, 1, rows, cols)
    assert depths_of(M) == {k: g.depth(k) for k in range(1, cols) if g.depth(k)}


def test_closure_is_idempotent_and_consistent():
    g = fibonacci_grid(7)
    once = g.closure()
    twice = once.closure()
    assert once.depths == twice.depths
    assert once.is_consistent() and not g.violations()
    assert once.dense()[0] == "1" * once.column_bound()


def test_fibonacci_small_fixture_is_the_materialized_grid():
    fx = load_fixture("fibonacci_small")
    g = fibonacci_grid(5).materialize(fx.n_cols)
    assert fx.dense() == g.dense(fx.n_rows, fx.n_cols)


# -- random grids ---------------------------------------------------------------

random_marks = st.lists(st.tuples(st.integers(1, 6), st.integers(1, 9)), max_size=5)


@given(random_marks, st.sampled_from([1, 2]))
def test_sparse_closure_matches_dense_oracle(marks, q):
    rows, cols = 14, 12
    depths = {}
    for r, c in marks:
        depths[c] = max(depths.get(c, 0), r)
    got = MarkedGrid(q, 2, depths, n_rows=rows, n_cols=cols).closure()
    assert got.depths == depths_of(dense_closure(marks, q, rows, cols))
    assert got.closure().depths == got.depths


@given(random_marks, st.sampled_from([1, 2]), st.data())
def test_gamma_matches_southwest_scan(marks, q, data):
    rows, cols = 40, 12
    M = dense_closure(marks, q, rows, cols)
    grid = MarkedGrid(q, 2, depths_of(M), n_rows=rows, n_cols=cols)
    m = data.draw(st.integers(1, 10))
    k = data.draw(st.integers(1, m))
    prof = gamma_profile(grid, m, k)
    for j, g in enumerate(prof):
        assert g == southwest_scan(M, q, k, j) and 1 <= g <= k


def test_gamma_examples():
    full = MarkedGrid(1, 2, {k: 50 for k in range(1, 10)})
    assert gamma_profile(full, 6, 4) == [1, 1, 1, 1]
    g = fibonacci_grid(5)
    assert gamma(g, 3, 3, 0) == 1  # M[1][2] is marked
    with pytest.raises(InputError):
        gamma(g, 3, 4, 0)
    with pytest.raises(InputError):
        gamma(g, 3, 2, 5)


# -- length engine ----------------------------------------------------------------


def test_gap_recurrence_examples():
    g = fibonacci_grid(20)
    xs = length_engine(g, fibonacci_seeds(1, 1)).gap_lengths(g.ell)
    assert set(xs) == {1}
    xs = length_engine(g, fibonacci_seeds(1, 2)).gap_lengths(g.ell)
    assert xs[:4] == [1, 2, Fraction(3, 2), Fraction(7, 4)]
    # closed form of the mean recurrence: 5/3 - (2/3)(-1/2)^j
    assert all(x == Fraction(5, 3) - Fraction(2, 3) * Fraction(-1, 2) ** j for j, x in enumerate(xs))
    assert all(1 < x < 2 for x in xs[2:])


@given(
    st.fractions(Fraction(1, 4), 4, max_denominator=12),
    st.fractions(Fraction(1, 4), 4, max_denominator=12),
)
def test_gap_recurrence_and_bounds(x0, x1):
    assume(2 * x1 > x0)
    g = fibonacci_grid(14)
    xs = length_engine(g, fibonacci_seeds(x0, x1)).gap_lengths(g.ell)
    assert xs[0] == x0 and xs[1] == x1
    for j in range(2, len(xs)):
        assert 2 * xs[j] == xs[j - 1] + xs[j - 2]
    assert min(x0, x1) <= min(xs) and max(xs) <= max(x0, x1)


@pytest.mark.parametrize(
    "seeds",
    [fibonacci_seeds(1, 2), fibonacci_seeds(1, 1), Seeds((Fraction(1),)), fibonacci_seeds(3, Fraction(5, 2))],
)
def test_engine_matches_naive_recursion(seeds):
    g = fibonacci_grid(7)
    t = length_engine(g, seeds)
    unmarked = seeds.unmarked or tuple(2 * x for x in seeds.top)
    L = naive_lengths(g, seeds.top, unmarked)
    assert all(t.column0(l) == L(l, 0) for l in range(1, g.ell[7] + 1))
    assert all(t.length(l, k) == L(l, k) for l in range(1, 40) for k in range(30))


@given(random_marks, st.fractions(Fraction(1, 3), 3, max_denominator=6), st.fractions(Fraction(1, 3), 3, max_denominator=6))
def test_engine_matches_naive_on_random_grids(marks, s1, s2):
    rows, cols = 16, 14
    M = dense_closure(marks, 2, rows, cols)
    grid = MarkedGrid(2, 2, depths_of(M))
    t = length_engine(grid, Seeds((s1, s2)))
    L = naive_lengths(grid, (s1, s2), (2 * s1, 2 * s2))
    assert all(t.length(l, k) == L(l, k) for l in range(1, 24) for k in range(10))


def test_seed_validation():
    g = fibonacci_grid(4)
    with pytest.raises(InputError):
        length_engine(g, [1, 2])
    with pytest.raises(InputError):
        length_engine(g, [0])
    with pytest.raises(InputError):
        fibonacci_seeds(2, 1)  # unmarked top length would be 0


@given(st.fractions(Fraction(1, 5), 5, max_denominator=7))
def test_seed_scaling(lam):
    g = fibonacci_grid(18)
    base = grid_derivative_sequence(length_engine(g, fibonacci_seeds(1, 1)), g)
    scaled = grid_derivative_sequence(length_engine(g, fibonacci_seeds(lam, lam)), g)
    for a, b in zip(base, scaled):
        assert b.a == lam * a.a and b.normalized == lam * a.normalized


# -- derivative sequences ----------------------------------------------------------


def test_fibonacci_derivative_sequence():
    g = fibonacci_grid(40)
    t = length_engine(g, fibonacci_seeds(1, 1))
    rows = grid_derivative_sequence(t, g)
    xs = t.gap_lengths(g.ell)
    big = max(xs)
    alpha = grid_alpha(t)
    assert alpha == 0
    for r in rows:
        assert r.k == g.ks[r.n] and r.normalized == r.a / (r.k - 1)
        assert r.a >= -alpha
        assert abs(r.normalized) <= big * (r.n + 2) / (r.k - 1)
        if r.n >= 25:
            assert r.normalized <= Fraction(1, 100)


def test_fibonacci_derivative_matches_general_chain():
    g = fibonacci_grid(8)
    t = length_engine(g, fibonacci_seeds(1, 2))
    for r in grid_derivative_sequence(t, g):
        assert r.a == derivative_log(t, r.k - 1)


def test_no_return_fixture():
    grid = load_fixture("no_return")
    t = length_engine(grid, grid.seeds)
    rows = grid_derivative_sequence(t, grid)
    # every column is unmarked below row 0, so each step contributes log m = 2 on a unit top edge
    assert [r.a for r in rows] == [2 * r.n for r in rows]
    assert all(r.a >= 0 for r in rows)


def test_q2_fixture():
    grid = load_fixture("q2_sparse")
    assert grid.q == 2 and grid.seeds == (1, Fraction(1, 2))
    t = length_engine(grid, grid.seeds)
    assert grid_alpha(t) == 2
    unmarked = tuple(2 * x for x in grid.seeds)
    L = naive_lengths(grid, grid.seeds, unmarked)
    assert all(t.length(l, k) == L(l, k) for l in range(1, grid.n_rows) for k in range(8))
    rows = grid_derivative_sequence(t, grid)
    assert rows and min(r.a for r in rows) == 3


def test_truncated_grid_refuses_deep_terms():
    grid = load_fixture("q2_sparse")
    t = length_engine(grid, grid.seeds)
    with pytest.raises(InputError):
        derivative_log(t, 40)


def test_chain_level_refuses_returning_orbit():
    with pytest.raises(InputError):
        chain_level(MarkedGrid(1, 2, {}), 3, start=0)


# -- text format ------------------------------------------------------------------------


@pytest.mark.parametrize("name", fixture_names())
def test_fixture_round_trip(name):
    g = load_fixture(name)
    again = MarkedGrid.from_text(g.to_text(g.n_rows, g.n_cols))
    assert again.depths == g.depths and again.q == g.q and again.seeds == g.seeds
    assert again.critical == g.critical


@pytest.mark.parametrize(
    "text, exc",
    [
        ("", InputError),
        ("q=1\n111\n100\n", InputError),
        ("q=1 m=2 colour=3\n111\n100\n", InputError),
        ("q=1 m=2\n", InputError),
        ("q=1 m=2\n111\n1x0\n", InputError),
        ("q=1 m=2\n110\n100\n", InconsistentGrid),
        ("q=1 m=2\n111\n100\n110\n", InconsistentGrid),
        ("q=1 m=2\n111\n000\n", InconsistentGrid),
        ("q=1 m=2\n1111\n1100\n1100\n", InconsistentGrid),
        ("q=0 m=2\n111\n100\n", InputError),
    ],
)
def test_from_text_rejects(text, exc):
    with pytest.raises(exc):
        MarkedGrid.from_text(text)


def test_from_text_reads_comments_and_header():
    g = MarkedGrid.from_text("# a grid\nq=1 m=3 alpha=1/2 seeds=2\n1111\n1000\n")
    assert g.m == 3 and g.alpha == Fraction(1, 2) and g.seeds == (2,)
    assert g.depths == {}


# -- grids computed from dynamics --------------------------------------------------------


def test_computed_grid_needs_julia_critical_point(worked):
    with pytest.raises(InputError):
        computed_grid(analyze(worked), Fraction(1, 2), 0, 6, 6)


@pytest.mark.parametrize("p", [5, 7])
@pytest.mark.parametrize("a_exp, e", [(1, 1), (2, 1), (3, 3), (3, "p")])
def test_engine_reproduces_dynamics(p, a_exp, e):
    """Cubic with 0 -> e -> e: the engine's lengths and derivative match the polynomial."""
    F = FieldDescriptor.padic(p)
    e = p if e == "p" else e
    a = Fraction(1, p**a_exp)
    f = ValuedPoly(F, (e, 0, -a * e, a))
    ctx = analyze(f, anchor=e)
    grid = computed_grid(ctx, 0, 0, 14, 10)
    assert all(grid.marked(0, k) for k in range(10)) and all(grid.marked(l, 0) for l in range(14))
    seeds = computed_seeds(ctx, 0, 13)
    t = length_engine(grid, seeds[: grid.q])
    assert [t.column0(l) for l in range(1, 13)] == seeds[:12]
    fz = F.element(e)
    for n in range(1, 5):
        assert derivative_log(t, n) == f.iterate(n).derivative()(fz).log_abs
