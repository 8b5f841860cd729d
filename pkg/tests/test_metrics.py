import math
import random

import pytest
from hypothesis import assume, given, settings, strategies as st

from rps_districts.geo import DomainError, Plan
from rps_districts.metrics import (
    PlanMetrics,
    deviation,
    district_geometry,
    district_totals,
    efficiency_gap,
    efficiency_gap_votes,
    evaluate_plan,
    lopsided_margin_shares,
    mean_median_shares,
    polsby_popper,
    pop_stddev,
    population_deviation,
    pp_stats,
    pp_summary,
    seats_votes,
    seats_won,
    stddev_pp,
    wasted_votes,
)
from rps_districts.rps import as_plan, run_once

from conftest import BEST_PLAN_COLUMNS, make_dataset

# Best plan district shares as published, percent rounded to one decimal.
BEST_PLAN_SHARES = [7.7, 7.4, 7.5, 7.6, 8.0, 8.2, 7.9, 7.8, 7.9, 7.5, 7.0, 7.7, 7.8]

# 2016 U.S. House, official plan, approximate Democratic two-party share by district.
OFFICIAL_2016_DEM = [0.686, 0.433, 0.328, 0.682, 0.416, 0.413, 0.391, 0.412, 0.418, 0.369, 0.359, 0.670, 0.439]

shares_st = st.lists(st.floats(0.01, 0.99), min_size=1, max_size=13)
votes_st = st.lists(st.tuples(st.integers(1, 10**6), st.integers(1, 10**6)), min_size=1, max_size=13)


def row_of_squares(k):
    """k unit squares in a row, sharing unit edges."""
    return make_dataset([1] * k, [(i, i + 1) for i in range(1, k)], [1])


# --- geometry and compactness ---------------------------------------------------


def test_two_squares():
    assert district_geometry({1, 2}, row_of_squares(2)) == (2, 6)


def test_singleton_geometry():
    ds = make_dataset([1, 1], [(1, 2)], [1], geometry=[(3.5, 9.0), (1.0, 4.0)])
    assert district_geometry({1}, ds) == (3.5, 9.0)


def test_three_squares():
    assert district_geometry({1, 2, 3}, row_of_squares(3)) == (3, 8)


def test_geometry_uses_borders_not_growth_edges():
    ds = row_of_squares(2)
    cut = make_dataset([1, 1], [], [1], borders={(1, 2): 1.0})
    assert district_geometry({1, 2}, cut) == district_geometry({1, 2}, ds)


def test_geometry_empty():
    with pytest.raises(DomainError):
        district_geometry(set(), row_of_squares(2))


def test_pp_circle():
    r = 3.7
    assert polsby_popper(math.pi * r * r, 2 * math.pi * r) == pytest.approx(1.0, abs=1e-12)


def test_pp_square_and_rectangle():
    assert polsby_popper(1, 4) == pytest.approx(math.pi / 4, abs=1e-12)
    assert polsby_popper(2, 6) == pytest.approx(0.6981317007977318, abs=1e-12)


def test_pp_bad_inputs():
    with pytest.raises(DomainError):
        polsby_popper(1, 0)
    with pytest.raises(DomainError):
        polsby_popper(10, 1)


def test_pp_stats_mixed():
    avg, low = pp_stats([1.0] * 12 + [0.5])
    assert avg == pytest.approx(0.9615384615384616, abs=1e-12)
    assert low == 0.5


def test_pp_summary_thirteen_squares():
    ds = make_dataset([1] * 13, [(i, i + 1) for i in range(1, 13)], list(range(1, 14)))
    plan = Plan(tuple(range(1, 14)), tuple(range(1, 14)))
    avg, low = pp_summary(plan, ds)
    assert avg == pytest.approx(math.pi / 4, abs=1e-12)
    assert low == pytest.approx(math.pi / 4, abs=1e-12)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(1e-3, 1e3))
def test_pp_scale_invariant(w, h, lam):
    a, p = w * h, 2 * (w + h)
    assert polsby_popper(a * lam * lam, p * lam) == pytest.approx(polsby_popper(a, p), rel=1e-9)


def test_merging_never_adds_perimeter(nc):
    rng = random.Random(5)
    for i in range(200):
        plan = run_once(nc, 9, i).plan
        groups = plan.district_members()
        a, b = rng.sample(range(13), 2)
        _, pa = district_geometry(groups[a], nc)
        _, pb = district_geometry(groups[b], nc)
        _, pab = district_geometry(groups[a] | groups[b], nc)
        assert pab <= pa + pb + 1e-9


# --- population -------------------------------------------------------------------


def test_stddev_equal_districts():
    assert stddev_pp([100] * 13, 1300) == 0


def test_stddev_best_plan_rounded_shares():
    assert stddev_pp(BEST_PLAN_SHARES, 100.0) == pytest.approx(0.29, abs=0.01)


def test_stddev_one_heavy_district():
    ideal = 100 / 13
    shares = [ideal + 1.3] + [ideal - 1.3 / 12] * 12
    assert stddev_pp(shares, 100.0) == pytest.approx(0.37527767497325676, abs=1e-12)


def test_best_plan_on_fixture(nc):
    plan = as_plan(BEST_PLAN_COLUMNS, nc.n)
    assert pop_stddev(plan, nc) == pytest.approx(0.32, abs=0.05)


def test_best_plan_district_shares_round_to_published(nc):
    t = district_totals(as_plan(BEST_PLAN_COLUMNS, nc.n), nc)
    shares = [round(p / nc.state_population * 100, 1) for p in t["population"]]
    assert shares == BEST_PLAN_SHARES


def test_deviation_equal():
    d = deviation([10] * 13, 130)
    assert (d.rmspd, d.max_pe, d.hb92_pass) == (0, 0, True)


def test_deviation_strict_threshold():
    d = deviation([1_001_000] * 13, 13_000_000)
    assert d.rmspd == pytest.approx(0.001, abs=1e-15)
    assert d.max_pe == 0.001
    assert d.hb92_pass is False


def test_zero_stddev_iff_zero_deviation(nc):
    plan = as_plan(BEST_PLAN_COLUMNS, nc.n)
    dev = population_deviation(plan, nc)
    assert (pop_stddev(plan, nc) == 0) == (dev.max_pe == 0) == (dev.rmspd == 0)
    flat = deviation([7] * 13, 91)
    assert stddev_pp([7] * 13, 91) == flat.max_pe == flat.rmspd == 0


@given(st.lists(st.integers(1, 10**6), min_size=13, max_size=13))
def test_stddev_and_deviation_vanish_together(pops):
    total = sum(pops)
    dev = deviation(pops, total)
    zero_sd = stddev_pp(pops, total) < 1e-12
    assert zero_sd == (dev.max_pe < 1e-12) == (dev.rmspd < 1e-12)


# --- partisan -----------------------------------------------------------------------


def test_eg_single_symmetric_district():
    assert efficiency_gap_votes([75], [25]) == 0


def test_eg_two_district_toy():
    assert efficiency_gap_votes([75, 40], [25, 60]) == 0.15


def test_eg_tie_has_no_winner():
    # both sides waste votes minus half the district total
    assert wasted_votes(50, 50) == (0, 0)
    assert efficiency_gap_votes([50, 75], [50, 25]) == efficiency_gap_votes([75], [25])


def test_eg_zero_votes():
    with pytest.raises(DomainError):
        efficiency_gap_votes([0, 5], [0, 5])


def test_eg_on_plan():
    ds = make_dataset([1, 1], [(1, 2)], [1, 2], votes=[(75, 25), (40, 60)])
    assert efficiency_gap(Plan((1, 2), (1, 2)), ds) == 0.15


@given(votes_st)
def test_eg_bounded_and_antisymmetric(votes):
    dem, rep = [v[0] for v in votes], [v[1] for v in votes]
    eg = efficiency_gap_votes(dem, rep)
    assert -0.5 <= eg <= 0.5
    assert efficiency_gap_votes(rep, dem) == pytest.approx(-eg, abs=1e-12)


def test_mean_median_examples():
    assert mean_median_shares([0.60, 0.55, 0.35]) == pytest.approx(-5.0, abs=1e-12)
    assert mean_median_shares([0.4, 0.5, 0.6]) == pytest.approx(0, abs=1e-12)
    assert mean_median_shares([0.47] * 13) == pytest.approx(0, abs=1e-12)


@given(shares_st)
def test_mean_median_negates_under_swap(shares):
    swapped = [1 - s for s in shares]
    assert mean_median_shares(swapped) == pytest.approx(-mean_median_shares(shares), abs=1e-9)


def test_lopsided_examples():
    assert lopsided_margin_shares([0.70, 0.30]) == pytest.approx(0, abs=1e-12)
    got = lopsided_margin_shares([0.70, 0.68, 0.45, 0.43, 0.40])
    assert got == pytest.approx(69 - 172 / 3, abs=1e-9)
    assert got == pytest.approx(11.667, abs=1e-3)
    assert lopsided_margin_shares([0.6] * 13) is None


@given(shares_st)
def test_lopsided_negates_under_swap(shares):
    assume(all(abs(s - 0.5) > 1e-9 for s in shares))
    a = lopsided_margin_shares(shares)
    b = lopsided_margin_shares([1 - s for s in shares])
    assert (a is None) == (b is None)
    if a is not None:
        assert b == pytest.approx(-a, abs=1e-9)


def test_seats_official_2016():
    rep = [round(100_000 * (1 - s)) for s in OFFICIAL_2016_DEM]
    dem = [round(100_000 * s) for s in OFFICIAL_2016_DEM]
    assert seats_votes(dem, rep)[:2] == (3, 10)


def test_seats_all_dem():
    assert seats_votes([10] * 13, [0] * 13) == (13, 0, False)


def test_seats_tie_goes_republican_and_is_flagged():
    assert seats_votes([60] * 12 + [50], [40] * 12 + [50]) == (12, 1, True)


def test_seats_on_plan():
    ds = make_dataset([1, 1], [(1, 2)], [1, 2], votes=[(75, 25), (40, 60)])
    assert seats_won(Plan((1, 2), (1, 2)), ds) == (1, 1, False)


@given(votes_st, st.data())
def test_seats_monotone_in_dem_votes(votes, data):
    dem, rep = [v[0] for v in votes], [v[1] for v in votes]
    i = data.draw(st.integers(0, len(votes) - 1))
    bump = data.draw(st.integers(1, 10**6))
    more = list(dem)
    more[i] += bump
    assert seats_votes(more, rep).dem >= seats_votes(dem, rep).dem


# --- whole plan ---------------------------------------------------------------------


def test_vectorised_totals_match_direct_geometry(nc):
    for i in range(50):
        plan = run_once(nc, 21, i).plan
        t = district_totals(plan, nc)
        for label, members in enumerate(plan.district_members()):
            area, perim = district_geometry(members, nc)
            assert t["area"][label] == pytest.approx(area, rel=1e-12)
            assert t["perimeter"][label] == pytest.approx(perim, rel=1e-12)
            assert t["population"][label] == sum(nc.counties[m - 1].population for m in members)


def test_plan_metrics_round_trip(nc):
    m = evaluate_plan(as_plan(BEST_PLAN_COLUMNS, nc.n), nc)
    assert PlanMetrics.from_dict(m.to_dict()) == m
    assert m.pp_min <= m.pp_avg
    assert all(0 <= p <= 1 for p in m.pp_per_district)
    assert len(m.pp_per_district) == 13


@settings(max_examples=25, deadline=None)
@given(run_index=st.integers(0, 10**6))
def test_metric_invariants_on_generated_plans(nc, run_index):
    m = evaluate_plan(run_once(nc, 13, run_index).plan, nc)
    assert m.pp_min <= m.pp_avg <= 1
    assert -0.5 <= m.efficiency_gap <= 0.5
    assert 0 <= m.seats_dem <= 13
    assert (m.pop_stddev_pp == 0) == (m.max_pe == 0)
