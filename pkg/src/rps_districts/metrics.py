"""Plan metrics: compactness, population balance and partisan fairness.

Vote shares are two-party Democratic shares, dem / (dem + rep).  Results named
``*_pp`` are percentage points, so 0.32 means 0.32 pp.

Each plan-level function ``f(plan, dataset)`` has a lower-level companion that
works on plain per-district numbers, used by ``evaluate_plan`` and the tests.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .geo import DomainError, Plan
from .ingest import Dataset

# --- per-district totals -------------------------------------------------------


def district_totals(plan: Plan, dataset: Dataset) -> dict[str, np.ndarray]:
    """Population, votes, area and perimeter per district (index = label - 1)."""
    a = dataset.arrays
    k = plan.n_districts
    labels = np.asarray(plan.assignment, dtype=np.int64) - 1
    if len(labels) != dataset.n or labels.min() < 0 or labels.max() >= k:
        raise DomainError("plan does not match the dataset")
    bc = lambda w: np.bincount(labels, weights=w, minlength=k)  # noqa: E731
    li, lj = labels[a.edge_i], labels[a.edge_j]
    same = li == lj
    internal = np.bincount(li[same], weights=a.edge_len[same], minlength=k)
    return {
        "population": bc(a.population),
        "dem": bc(a.dem),
        "rep": bc(a.rep),
        "area": bc(a.area),
        "perimeter": bc(a.perimeter) - 2.0 * internal,
    }


# --- compactness -----------------------------------------------------------------


def district_geometry(members: Iterable[int], dataset: Dataset) -> tuple[float, float]:
    """(area, perimeter) of a set of counties; each shared border is removed twice."""
    members = set(members)
    if not members:
        raise DomainError("geometry of an empty district")
    area = sum(dataset.counties[m - 1].area for m in members)
    outer = sum(dataset.counties[m - 1].perimeter for m in members)
    internal = sum(
        length
        for (i, j), length in dataset.graph.border_lengths.items()
        if i in members and j in members
    )
    return area, outer - 2.0 * internal


def polsby_popper(area: float, perimeter: float) -> float:
    if perimeter <= 0 or area < 0:
        raise DomainError(f"polsby-popper needs perimeter > 0 and area >= 0, got {area}, {perimeter}")
    score = 4.0 * math.pi * area / perimeter**2
    if score > 1.0 + 1e-9:
        raise DomainError(f"polsby-popper score {score} above 1: inconsistent geometry")
    return min(score, 1.0)


def pp_scores(plan: Plan, dataset: Dataset) -> list[float]:
    t = district_totals(plan, dataset)
    return [polsby_popper(a, p) for a, p in zip(t["area"].tolist(), t["perimeter"].tolist())]


def pp_stats(scores: Sequence[float]) -> tuple[float, float]:
    """(mean, min) of district compactness scores."""
    if not scores:
        raise DomainError("no scores")
    return sum(scores) / len(scores), min(scores)


def pp_summary(plan: Plan, dataset: Dataset) -> tuple[float, float]:
    return pp_stats(pp_scores(plan, dataset))


# --- population --------------------------------------------------------------------


def stddev_pp(district_pops: Sequence[float], state_pop: float) -> float:
    """Population-form std dev of district shares around 100/k, in points."""
    k = len(district_pops)
    if k == 0 or state_pop <= 0:
        raise DomainError("need at least one district and a positive state population")
    ideal = 100.0 / k
    return math.sqrt(sum((p / state_pop * 100.0 - ideal) ** 2 for p in district_pops) / k)


def pop_stddev(plan: Plan, dataset: Dataset) -> float:
    pops = district_totals(plan, dataset)["population"].tolist()
    return stddev_pp(pops, dataset.state_population)


class PopulationDeviation(NamedTuple):
    rmspd: float
    max_pe: float
    hb92_pass: bool
    pe: tuple[float, ...]


def deviation(district_pops: Sequence[float], state_pop: float) -> PopulationDeviation:
    """Relative error of each district against state_pop / k, its RMS and max.

    ``hb92_pass`` is the strict test max_pe < 0.001.
    """
    k = len(district_pops)
    if k == 0 or state_pop <= 0:
        raise DomainError("need at least one district and a positive state population")
    ideal = state_pop / k
    pe = tuple(abs(p - ideal) / ideal for p in district_pops)
    max_pe = max(pe)
    return PopulationDeviation(
        math.sqrt(sum(e * e for e in pe) / k), max_pe, max_pe < 0.001, pe
    )


def population_deviation(plan: Plan, dataset: Dataset) -> PopulationDeviation:
    pops = district_totals(plan, dataset)["population"].tolist()
    return deviation(pops, dataset.state_population)


# --- partisan ------------------------------------------------------------------------


def _check_votes(dem: Sequence[float], rep: Sequence[float]) -> None:
    if len(dem) != len(rep) or not len(dem):
        raise DomainError("dem and rep vote lists must be non-empty and of equal length")
    for d, r in zip(dem, rep):
        if d < 0 or r < 0:
            raise DomainError("negative vote count")
        if d + r <= 0:
            raise DomainError("district with no two-party votes")


def dem_shares(dem: Sequence[float], rep: Sequence[float]) -> list[float]:
    _check_votes(dem, rep)
    return [d / (d + r) for d, r in zip(dem, rep)]


def wasted_votes(dem: float, rep: float) -> tuple[float, float]:
    """(dem, rep) wasted votes in one district.

    The loser wastes everything, the winner whatever is above half the district
    total.  On an exact tie both sides waste half.
    """
    half = (dem + rep) / 2.0
    if dem > rep:
        return dem - half, rep
    if rep > dem:
        return dem, rep - half
    return dem - half, rep - half


def efficiency_gap_votes(dem: Sequence[float], rep: Sequence[float]) -> float:
    _check_votes(dem, rep)
    wd = wr = 0.0
    for d, r in zip(dem, rep):
        a, b = wasted_votes(d, r)
        wd += a
        wr += b
    return (wd - wr) / (sum(dem) + sum(rep))


def efficiency_gap(plan: Plan, dataset: Dataset) -> float:
    t = district_totals(plan, dataset)
    return efficiency_gap_votes(t["dem"].tolist(), t["rep"].tolist())


def mean_median_shares(shares: Sequence[float]) -> float:
    if not len(shares):
        raise DomainError("no shares")
    return (statistics.fmean(shares) - statistics.median(shares)) * 100.0


def mean_median(plan: Plan, dataset: Dataset) -> float:
    t = district_totals(plan, dataset)
    return mean_median_shares(dem_shares(t["dem"].tolist(), t["rep"].tolist()))


def lopsided_margin_shares(shares: Sequence[float]) -> float | None:
    """Mean winning Dem share minus mean winning Rep share, in points.

    A district is Dem-won only above 0.5.  None when either party won nothing.
    """
    if not len(shares):
        raise DomainError("no shares")
    dem_wins = [s for s in shares if s > 0.5]
    rep_wins = [1.0 - s for s in shares if s <= 0.5]
    if not dem_wins or not rep_wins:
        return None
    return (statistics.fmean(dem_wins) - statistics.fmean(rep_wins)) * 100.0


def lopsided_margin(plan: Plan, dataset: Dataset) -> float | None:
    t = district_totals(plan, dataset)
    return lopsided_margin_shares(dem_shares(t["dem"].tolist(), t["rep"].tolist()))


class Seats(NamedTuple):
    dem: int
    rep: int
    tie: bool  # some district was an exact tie, scored Republican


def seats_votes(dem: Sequence[float], rep: Sequence[float]) -> Seats:
    _check_votes(dem, rep)
    d = sum(1 for a, b in zip(dem, rep) if a > b)
    return Seats(d, len(dem) - d, any(a == b for a, b in zip(dem, rep)))


def seats_won(plan: Plan, dataset: Dataset) -> Seats:
    t = district_totals(plan, dataset)
    return seats_votes(t["dem"].tolist(), t["rep"].tolist())


# --- whole plan -----------------------------------------------------------------


@dataclass(frozen=True)
class PlanMetrics:
    pop_stddev_pp: float
    pp_per_district: tuple[float, ...]
    pp_avg: float
    pp_min: float
    efficiency_gap: float
    mean_median_pp: float
    lopsided_margin_pp: float | None
    seats_dem: int
    seats_tie: bool
    rmspd: float
    max_pe: float
    hb92_pass: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pp_per_district"] = list(self.pp_per_district)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PlanMetrics":
        kw = {k: data[k] for k in cls.__dataclass_fields__}
        kw["pp_per_district"] = tuple(kw["pp_per_district"])
        return cls(**kw)


# metrics with one number per plan, usable for histograms
SCALAR_METRICS = (
    "pop_stddev_pp",
    "pp_avg",
    "pp_min",
    "efficiency_gap",
    "mean_median_pp",
    "lopsided_margin_pp",
    "seats_dem",
    "rmspd",
    "max_pe",
)


def evaluate_plan(plan: Plan, dataset: Dataset) -> PlanMetrics:
    t = district_totals(plan, dataset)
    pops = t["population"].tolist()
    dem = t["dem"].tolist()
    rep = t["rep"].tolist()
    state = dataset.state_population
    pp = tuple(polsby_popper(a, p) for a, p in zip(t["area"].tolist(), t["perimeter"].tolist()))
    pp_avg, pp_min = pp_stats(pp)
    dev = deviation(pops, state)
    shares = dem_shares(dem, rep)
    seats = seats_votes(dem, rep)
    return PlanMetrics(
        pop_stddev_pp=stddev_pp(pops, state),
        pp_per_district=pp,
        pp_avg=pp_avg,
        pp_min=pp_min,
        efficiency_gap=efficiency_gap_votes(dem, rep),
        mean_median_pp=mean_median_shares(shares),
        lopsided_margin_pp=lopsided_margin_shares(shares),
        seats_dem=seats.dem,
        seats_tie=seats.tie,
        rmspd=dev.rmspd,
        max_pe=dev.max_pe,
        hb92_pass=dev.hb92_pass,
    )
