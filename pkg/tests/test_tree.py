from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from berkdyn.berk import precedes, rho, xi
from berkdyn.dyn import analyze, image_point, local_degree
from berkdyn.errors import InputError
from berkdyn.tree import (
    DiameterProfile,
    OrbitProfiles,
    diameter_profile,
    dynamical_point,
    edge_degree,
    edge_length,
    escape_time,
    escaping_boundary_point,
    generators_and_q,
    geometric_sequence,
    omitted_tree_bound,
)
from berkdyn.valfield import FieldDescriptor, ValuedPoly

from conftest import Q3, logdiams, poly, rationals


def pt(c, r):
    return xi(Fraction(c), Fraction(r), Q3)


@pytest.fixture
def ctx(worked):
    return analyze(worked)


def test_profile_examples(ctx):
    prof = diameter_profile(ctx, 0, 1)
    assert prof.evaluate(Fraction(0)) == 1
    piece = [p for p in prof.pieces() if p[0] == -float("inf")][0]
    assert piece[2:] == (1, 1) and piece[1] == 0  # radius up to 1
    sq = analyze(poly("z^2"))
    assert diameter_profile(sq, 0, 2).lines == ((4, Fraction(0)),)
    two = diameter_profile(ctx, 0, 2)
    for r in (-1, -3, Fraction(-7, 2)):
        assert two.evaluate(Fraction(r)) == r + 2
    # the closed disk at r = -1 already maps onto one holding the critical point
    assert two.breakpoints()[0] == -1 and two.slope_at(Fraction(-1)) == 2
    assert two.slope_at(Fraction(-3)) == 1


def test_profile_rejects_negative_steps(ctx):
    with pytest.raises(ValueError):
        diameter_profile(ctx, 0, -1)


def test_profile_inverse_round_trip():
    prof = DiameterProfile(Q3.zero, 2, ((1, Fraction(2)), (4, Fraction(-1))))
    for y in (Fraction(-5), Fraction(0), Fraction(3), Fraction(11, 2)):
        assert prof.evaluate(prof.inverse(y)) == y
    assert prof.breakpoints() == [1]


def test_dynamical_point_examples(ctx):
    assert dynamical_point(ctx, 0, 0) == ctx.base_point
    assert dynamical_point(ctx, 0, 1) == pt(0, -1)
    assert dynamical_point(ctx, 0, 2) == pt(0, -2)


def test_dynamical_point_needs_orbit_in_base_disk(ctx):
    # 2 is outside the base disk (f(2) = 2/3)
    with pytest.raises(InputError):
        dynamical_point(ctx, 2, 1)
    assert escape_time(ctx, 2) == 1
    assert escape_time(ctx, 0, max_iter=50) is None


def test_generators_examples(ctx):
    gens, q = generators_and_q(ctx, [Fraction(1, 2)])
    assert gens == [pt(0, 1)] and q == 1
    with pytest.raises(InputError):
        generators_and_q(ctx, [])
    with pytest.raises(InputError):
        generators_and_q(ctx, [Fraction(1, 3)])  # not critical
    with pytest.raises(InputError):
        generators_and_q(analyze(poly("z^2")), [0])  # simple


def test_geometric_sequence_example(ctx):
    seq = geometric_sequence(ctx, 0, 3)
    assert seq.q == 1
    assert list(seq.entries) == [pt(0, 0), pt(0, -1), pt(0, -2), pt(0, -3)]
    for n in range(1, 4):
        assert image_point(ctx.f, seq.entries[n]) == seq.entries[n - 1]
        assert seq.level(n) == dynamical_point(ctx, 0, n)


def test_edge_degree_examples(ctx):
    assert edge_degree(ctx, (pt(0, -1), pt(0, 0))) == 1
    assert edge_degree(ctx, (pt(0, 1), pt(0, 0))) == 2
    sq = analyze(poly("z^3"))
    for r in (-4, -1, 2):
        assert edge_degree(sq, (pt(0, r), pt(0, r + 1))) == 3
    with pytest.raises(InputError):
        edge_degree(ctx, (pt(0, -1), pt(1, -1)))


def test_escaping_boundary_point(ctx):
    low, top, steps = escaping_boundary_point(ctx, Fraction(1, 2))
    assert low == ctx.base_point and top == pt(0, 1) and steps == 1


def test_omitted_tree_bound_examples(ctx):
    assert omitted_tree_bound(ctx, 0, []) == 0
    assert omitted_tree_bound(ctx, 0, [Fraction(1, 2)]) == 0


def test_omitted_tree_bound_cubic():
    f = ValuedPoly(FieldDescriptor.padic(5), (0, 0, Fraction(9, 10), Fraction(1, 5)))
    c = analyze(f, anchor=0)
    # the other critical point -3 has its boundary point at the base point
    low, _, steps = escaping_boundary_point(c, -3)
    assert low == c.base_point and steps == 1
    assert omitted_tree_bound(c, 0, [-3]) == 0


# -- properties ---------------------------------------------------------------

# points of Z_3 whose orbit under (z^2 - z)/3 stays in the base disk for a while
orbit_points = st.builds(
    lambda e, u, s: Fraction(s) + Fraction(3) ** e * u,
    st.integers(2, 6),
    st.integers(-20, 20).filter(lambda u: u % 3),
    st.sampled_from([0, 1]),
)


def _levels(ctx, z):
    t = escape_time(ctx, z, max_iter=40)
    top = 8 if t is None else max(0, t - 1)
    return min(top, 8)


@given(orbit_points)
def test_level_law_and_nesting(z):
    c = analyze(poly("(z^2 - z)/3"))
    top = _levels(c, z)
    pts = [dynamical_point(c, z, n) for n in range(top + 1)]
    for a, b in zip(pts, pts[1:]):
        assert b.logdiam < a.logdiam and precedes(b, a)
    fz = c.f(c.field.element(z))
    for n in range(1, top + 1):
        assert image_point(c.f, pts[n]) == dynamical_point(c, fz, n - 1)


@given(orbit_points)
def test_edge_length_law(z):
    c = analyze(poly("(z^2 - z)/3"))
    top = _levels(c, z)
    seq = geometric_sequence(c, z, top)
    for n in range(1, top + 1):
        e = (seq.entries[n], seq.entries[n - 1])
        img = (image_point(c.f, e[0]), image_point(c.f, e[1]))
        assert edge_length(img) == edge_degree(c, e) * edge_length(e)
        assert seq.level(n) == seq.entries[n]


small_polys = st.lists(rationals(30, 6), min_size=3, max_size=5).filter(lambda cs: cs[-1] != 0)


@given(small_polys, rationals(40, 9), logdiams(), st.integers(0, 4))
def test_profile_matches_iterated_images(cs, z, r, n):
    f = ValuedPoly(Q3, cs)
    prof = OrbitProfiles(f, z).profile(n)
    x = pt(z, r)
    slope = 1
    for _ in range(n):
        slope *= local_degree(f, x)
        x = image_point(f, x)
    assert prof.evaluate(r) == x.logdiam
    # at a breakpoint the profile reports the larger slope; away from them the degrees agree
    if r not in prof.breakpoints():
        assert prof.slope_at(r) == slope


@given(small_polys, rationals(40, 9), st.integers(1, 3))
def test_profile_is_monotone_with_positive_slopes(cs, z, n):
    prof = OrbitProfiles(ValuedPoly(Q3, cs), z).profile(n)
    assert all(k >= 1 for k, _ in prof.lines)
    slopes = [k for k, _ in prof.lines]
    assert slopes == sorted(set(slopes))
    rs = [Fraction(i, 3) for i in range(-30, 30)]
    vals = [prof.evaluate(r) for r in rs]
    assert vals == sorted(vals)


@given(small_polys, rationals(40, 9), logdiams(), st.integers(1, 3))
def test_rho_of_nested_points_scales_by_slope(cs, z, r, n):
    f = ValuedPoly(Q3, cs)
    prof = OrbitProfiles(f, z).profile(n)
    lo, hi = r, r + Fraction(1, 64)
    if any(lo < b < hi for b in prof.breakpoints()) or lo in prof.breakpoints():
        return
    assert prof.evaluate(hi) - prof.evaluate(lo) == prof.slope_at(lo) * rho(pt(z, lo), pt(z, hi))


@given(st.sampled_from(["(z^2 - z)/3", "(z^3 - z)/9", "(z^2 - z)/9 + 3"]), st.integers(-(3**8), 3**8), st.sampled_from([1, 3]))
def test_escape_time_matches_exact_orbit(text, num, den):
    c = analyze(poly(text), anchor=0)
    z = Fraction(num, den)
    w, expected = c.field.element(z), None
    for k in range(13):
        if not c.in_base_disk(w):
            expected = k
            break
        w = c.f(w)
    assert escape_time(c, z, 12) == expected


def test_escape_time_long_bounded_orbit():
    # exact iterates of 0 under z^2 + 1 double in length every step
    c = analyze(poly("z^2 + 1"), anchor=0)
    assert escape_time(c, 0, max_iter=5000) is None
