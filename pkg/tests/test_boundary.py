"""Boundary ratios: exact examples, brute-force oracles, search behavior."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from foelner.boundary import (
    BoundaryReport,
    ElementSet,
    GeneratingSet,
    GroupSearchConfig,
    _neighbor_table,
    _subset_boundary_counts,
    ball_family_ratios,
    boundary_ratio,
    exhaustive_min_ratio,
    interior_boundary,
    local_search_min_ratio,
)
from foelner.errors import PreconditionError, SearchSpaceTooLarge, SeedRequired
from foelner.words import Word, ball, free_abelian, free_group, multiply

F2 = free_group(2)
Z1 = free_abelian(1)
Z2 = free_abelian(2)
XF2 = GeneratingSet.standard(F2)
XZ1 = GeneratingSet.standard(Z1)
XZ2 = GeneratingSet.standard(Z2)


def interval(lo, hi):
    return ElementSet.of(Z1, (Word.from_vector(Z1, (i,)) for i in range(lo, hi + 1)))


def box(side):
    return ElementSet.of(
        Z2, (Word.from_vector(Z2, (x, y)) for x in range(side) for y in range(side))
    )


# ---------------------------------------------------------------------------
# Oracle: direct-definition boundary and itertools subset enumeration.


def oracle_boundary(members, closure):
    ms = set(members)
    return {a for a in ms if any(multiply(a, x) not in ms for x in closure)}


def oracle_exhaustive(descriptor, X, radius):
    elems = ball(descriptor, radius).elements
    closure = X.closure()
    best = None
    for k in range(1, len(elems) + 1):
        for combo in itertools.combinations(range(len(elems)), k):
            members = [elems[i] for i in combo]
            ratio = Fraction(len(oracle_boundary(members, closure)), k)
            key = (ratio, k, combo)
            if best is None or key < best:
                best = key
    return best


# ---------------------------------------------------------------------------


def test_interior_boundary_ball_f2():
    A = ElementSet.of(F2, ball(F2, 2).elements)
    bd = interior_boundary(A, XF2)
    assert len(bd) == 12
    assert all(w.length() == 2 for w in bd.members)  # exactly the radius-2 sphere
    assert bd.members <= A.members


def test_interior_boundary_interval():
    A = interval(0, 9)
    bd = interior_boundary(A, XZ1)
    assert bd.members == {Word.from_vector(Z1, (0,)), Word.from_vector(Z1, (9,))}


def test_interior_boundary_singleton():
    A = ElementSet.of(F2, [Word.identity(F2)])
    assert interior_boundary(A, XF2).members == A.members


def test_interior_boundary_matches_oracle_on_random_subsets():
    rng = np.random.default_rng(5)
    elems = ball(F2, 2).elements
    closure = XF2.closure()
    for _ in range(50):
        take = rng.random(len(elems)) < 0.4
        members = [w for w, t in zip(elems, take) if t]
        if not members:
            continue
        A = ElementSet.of(F2, members)
        assert interior_boundary(A, XF2).members == oracle_boundary(members, closure)


def test_boundary_ratio_examples():
    assert boundary_ratio(ElementSet.of(F2, ball(F2, 2).elements), XF2).ratio == Fraction(12, 17)
    assert boundary_ratio(interval(0, 9), XZ1).ratio == Fraction(1, 5)
    rep = boundary_ratio(box(5), XZ2)
    assert rep.ratio == Fraction(16, 25)
    assert rep.boundary_size == 16 and rep.set_size == 25


def test_boundary_ratio_range():
    for r in (1, 2):
        rep = boundary_ratio(ElementSet.of(F2, ball(F2, r).elements), XF2)
        assert 0 <= rep.ratio <= 1


def test_empty_set_rejected():
    with pytest.raises(PreconditionError):
        interior_boundary(ElementSet(F2, frozenset()), XF2)
    with pytest.raises(PreconditionError):
        boundary_ratio(ElementSet(F2, frozenset()), XF2)


def test_monotone_generator_property():
    Xa = GeneratingSet.of(F2, [Word(F2, (1,))])
    rng = np.random.default_rng(11)
    elems = ball(F2, 2).elements
    for _ in range(30):
        take = rng.random(len(elems)) < 0.5
        members = [w for w, t in zip(elems, take) if t]
        if not members:
            continue
        A = ElementSet.of(F2, members)
        small = interior_boundary(A, Xa).members
        big = interior_boundary(A, XF2).members
        assert small <= big
        assert boundary_ratio(A, Xa).ratio <= boundary_ratio(A, XF2).ratio


def test_exhaustive_radius1_matches_bruteforce_oracle():
    best_set, report = exhaustive_min_ratio(F2, XF2, 1)
    ratio, size, combo = oracle_exhaustive(F2, XF2, 1)
    assert report.ratio == ratio == Fraction(4, 5)
    assert report.set_size == size == 5
    assert best_set.members == set(ball(F2, 1).elements)


def test_exhaustive_interval_matches_oracle():
    best_set, report = exhaustive_min_ratio(Z1, XZ1, 3)
    ratio, size, combo = oracle_exhaustive(Z1, XZ1, 3)
    assert report.ratio == ratio == Fraction(2, 7)
    assert size == 7
    assert best_set.members == set(ball(Z1, 3).elements)


def test_exhaustive_f2_radius2():
    best_set, report = exhaustive_min_ratio(F2, XF2, 2)
    assert report.ratio == Fraction(12, 17)
    assert report.ratio >= Fraction(2, 3)
    assert best_set.members == set(ball(F2, 2).elements)


def test_exhaustive_cap():
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_min_ratio(F2, XF2, 3)  # |ball| = 53 > 22


def test_exhaustive_minimum_nonincreasing_in_radius():
    f1 = exhaustive_min_ratio(F2, XF2, 1)[1].ratio
    f2 = exhaustive_min_ratio(F2, XF2, 2)[1].ratio
    assert f2 <= f1
    zs = [exhaustive_min_ratio(Z1, XZ1, r)[1].ratio for r in (1, 2, 3)]
    assert zs == sorted(zs, reverse=True)


def test_boundary_never_empty_at_small_radius():
    # every non-empty subset of ball(2) has a non-empty interior boundary
    for descriptor, X in ((F2, XF2), (Z2, XZ2)):
        b = ball(descriptor, 2)
        nbr = _neighbor_table(b, X)
        masks = np.arange(1, 1 << len(b), dtype=np.uint64)
        bcnt, _ = _subset_boundary_counts(masks, nbr)
        assert int(bcnt.min()) >= 1


def test_ball_family_f2():
    fam = ball_family_ratios(F2, XF2, 2)
    assert fam[-1].report.ratio == Fraction(12, 17)
    assert abs(fam[-1].report.ratio_float - 0.7059) < 1e-4


def test_ball_family_closed_form_matches_enumeration():
    for n in (2, 3):
        d = free_group(n)
        X = GeneratingSet.standard(d)
        enumerated = ball_family_ratios(d, X, 6, method="enumerate")
        closed = ball_family_ratios(d, X, 6, method="closed_form")
        for e, c in zip(enumerated, closed):
            assert e.report.ratio == c.report.ratio
            assert e.report.set_size == c.report.set_size


def test_ball_family_limits():
    # free: decreasing to (2n-2)/(2n-1)
    for n in (2, 3):
        d = free_group(n)
        fam = ball_family_ratios(d, GeneratingSet.standard(d), 12, method="closed_form")
        limit = Fraction(2 * n - 2, 2 * n - 1)
        ratios = [fr.report.ratio for fr in fam]
        assert all(r > limit for r in ratios)
        assert abs(float(ratios[-1] - limit)) < 1e-6
    # abelian: decreasing towards 0
    fam = ball_family_ratios(Z2, XZ2, 20)
    ratios = [fr.report.ratio for fr in fam]
    assert ratios == sorted(ratios, reverse=True)
    assert float(ratios[-1]) < 0.2


def test_closed_form_requires_standard_generators():
    skew = GeneratingSet.of(F2, [Word(F2, (1,)), Word(F2, (1, 2))])
    with pytest.raises(PreconditionError):
        ball_family_ratios(F2, skew, 3, method="closed_form")


def test_local_search_singleton_start():
    cfg = GroupSearchConfig(radius=2, mode="search", seed=0, iterations=0)
    res = local_search_min_ratio(F2, XF2, cfg)
    assert res.initial_report.ratio == 1
    assert res.report.ratio <= 1


def test_local_search_z2_beats_box():
    cfg = GroupSearchConfig(radius=12, mode="search", seed=2, iterations=10_000)
    res = local_search_min_ratio(Z2, XZ2, cfg)
    assert res.report.ratio <= Fraction(16, 25)
    assert res.report.ratio <= res.initial_report.ratio


def test_local_search_f2_respects_theorem_floor():
    cfg = GroupSearchConfig(radius=5, mode="search", seed=2, iterations=10_000)
    res = local_search_min_ratio(F2, XF2, cfg)
    assert res.report.ratio >= Fraction(2, 3)


def test_local_search_deterministic():
    cfg = GroupSearchConfig(radius=6, mode="search", seed=9, iterations=2000)
    a = local_search_min_ratio(Z2, XZ2, cfg)
    b = local_search_min_ratio(Z2, XZ2, cfg)
    assert a.report == b.report
    assert [(m.iteration, m.move) for m in a.history] == [(m.iteration, m.move) for m in b.history]


def test_local_search_requires_seed():
    with pytest.raises(SeedRequired):
        GroupSearchConfig(radius=3, mode="search", seed=None, iterations=10)


def test_report_exactness():
    rep = BoundaryReport.of(17, 12)
    assert rep.ratio == Fraction(12, 17)
    assert rep.ratio_float == 12 / 17
