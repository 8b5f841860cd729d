"""Load and validate the generalized-county dataset from CSV files.

Bundle layout (one directory)::

    counties.csv   id,name,pop_share,population,dem_votes,rep_votes,area_km2,perimeter_km
    splits.csv     parent,sub_name,dem_votes,rep_votes,area_km2,perimeter_km
    adjacency.csv  name_a,name_b,border_km,algo_adjacent
    seeds.csv      one generalized-county name per row, row order = district label
    overrides.csv  name_a,name_b   (optional; weak borders removed from growth)

Counties are listed before splitting.  Generalized-county ids follow the row
order of counties.csv with each split parent replaced in place by its subs.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geo import AdjacencyGraph, DomainError, GeneralizedCounty, _pair

log = logging.getLogger(__name__)

# 2010 census, North Carolina.
NC_STATE_POPULATION = 9_535_483
N_DISTRICTS = 13

SPLIT_VOTE_TOLERANCE = 0.005
SPLIT_AREA_TOLERANCE = 0.02


class DatasetError(ValueError):
    """A bundle file could not be parsed or failed validation."""


class ValidationError(DatasetError):
    def __init__(self, report: "ValidationReport"):
        super().__init__("; ".join(report.violations))
        self.report = report


@dataclass(frozen=True)
class SplitSpec:
    parent: str
    sub_names: tuple[str, ...]
    sub_votes: tuple[tuple[int, int], ...]  # (dem, rep) per sub
    sub_areas: tuple[float, ...]
    sub_perimeters: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.sub_names)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Dataset:
    counties: tuple[GeneralizedCounty, ...]
    graph: AdjacencyGraph
    seeds: tuple[int, ...]
    state_population: int
    name: str = "dataset"
    _by_name: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {c.name: c.id for c in self.counties})

    @property
    def n(self) -> int:
        return len(self.counties)

    @property
    def n_districts(self) -> int:
        return len(self.seeds)

    def county(self, ref: int | str) -> GeneralizedCounty:
        if isinstance(ref, str):
            if ref not in self._by_name:
                raise DomainError(f"unknown county name {ref!r}")
            ref = self._by_name[ref]
        if not 1 <= ref <= self.n:
            raise DomainError(f"unknown county id {ref}")
        return self.counties[ref - 1]

    def id_of(self, name: str) -> int:
        return self.county(name).id

    @cached_property
    def arrays(self) -> "DatasetArrays":
        return DatasetArrays.build(self)


@dataclass(frozen=True)
class DatasetArrays:
    """Column views of a dataset for vectorised scoring (index = id - 1)."""

    population: np.ndarray
    dem: np.ndarray
    rep: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_len: np.ndarray

    @classmethod
    def build(cls, d: Dataset) -> "DatasetArrays":
        pairs = sorted((i, j, v) for (i, j), v in d.graph.border_lengths.items() if v > 0)
        return cls(
            population=np.array([c.population for c in d.counties], dtype=np.float64),
            dem=np.array([c.dem_votes for c in d.counties], dtype=np.float64),
            rep=np.array([c.rep_votes for c in d.counties], dtype=np.float64),
            area=np.array([c.area for c in d.counties], dtype=np.float64),
            perimeter=np.array([c.perimeter for c in d.counties], dtype=np.float64),
            edge_i=np.array([p[0] - 1 for p in pairs], dtype=np.int64),
            edge_j=np.array([p[1] - 1 for p in pairs], dtype=np.int64),
            edge_len=np.array([p[2] for p in pairs], dtype=np.float64),
        )


def apply_split(parent: GeneralizedCounty, spec: SplitSpec) -> list[GeneralizedCounty]:
    """Replace ``parent`` by ``spec.k`` equal-population sub-counties.

    The population remainder goes to the lowest-numbered subs so the sum is
    exact.  Votes, areas and perimeters come from ``spec``.  Returned subs keep
    the parent's id; callers renumber.
    """
    if spec.k < 2:
        raise DatasetError(f"split of {parent.name} needs at least 2 sub-counties")
    if parent.total_votes > 0:
        for what, given, expected in (
            ("dem", sum(v[0] for v in spec.sub_votes), parent.dem_votes),
            ("rep", sum(v[1] for v in spec.sub_votes), parent.rep_votes),
        ):
            if abs(given - expected) > SPLIT_VOTE_TOLERANCE * max(expected, 1):
                raise DatasetError(
                    f"split of {parent.name}: sub-county {what} votes sum to {given}, "
                    f"parent has {expected}"
                )
    base, rem = divmod(parent.population, spec.k)
    subs = []
    for idx in range(spec.k):
        pop = base + (1 if idx < rem else 0)
        dem, rep = spec.sub_votes[idx]
        subs.append(
            GeneralizedCounty(
                id=parent.id,
                name=spec.sub_names[idx],
                population=pop,
                pop_share=parent.pop_share * pop / parent.population,
                dem_votes=dem,
                rep_votes=rep,
                area=spec.sub_areas[idx],
                perimeter=spec.sub_perimeters[idx],
                parent=parent.name,
            )
        )
    return subs


def apply_adjacency_overrides(
    graph: AdjacencyGraph,
    pairs: Iterable[tuple[str, str]],
    names: Sequence[str],
    aliases: Mapping[str, Sequence[str]] | None = None,
) -> AdjacencyGraph:
    """Drop the algorithmic edge for every listed pair, keeping border lengths.

    ``names[i - 1]`` names node ``i``.  ``aliases`` maps a split parent name to
    its sub-county names, so a pair naming the parent removes every sub-county
    edge to the other side.  Pairs with no geometric contact at all are logged
    and skipped.  Raises if the result is disconnected.
    """
    ids = {name: i for i, name in enumerate(names, start=1)}
    aliases = aliases or {}

    def resolve(name: str) -> list[int]:
        if name in ids:
            return [ids[name]]
        if name in aliases:
            return [ids[s] for s in aliases[name]]
        raise DomainError(f"unknown county name {name!r} in adjacency override")

    drop = set()
    for a, b in pairs:
        touched = False
        for i in resolve(a):
            for j in resolve(b):
                p = _pair(i, j)
                if p in graph.border_lengths or graph.has_edge(i, j):
                    touched = True
                    drop.add(p)
        if not touched:
            log.warning("override %s - %s: counties do not touch, nothing removed", a, b)
    out = graph.without_edges(drop)
    if not out.is_connected():
        raise DatasetError("adjacency overrides disconnect the county graph")
    return out


def _rows(path: Path, required: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")
        return [(reader.line_num, row) for row in reader]


def _num(path, line, row, key, kind=float, blank_ok=False):
    raw = (row.get(key) or "").strip()
    if not raw:
        if blank_ok:
            return None
        raise DatasetError(f"{path.name} line {line}: field {key!r} is empty")
    try:
        value = kind(raw)
    except ValueError:
        raise DatasetError(f"{path.name} line {line}: field {key!r}={raw!r} is not a number")
    if kind is float and not math.isfinite(value):
        raise DatasetError(f"{path.name} line {line}: field {key!r} is not finite")
    return value


def largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer apportionment of ``total`` proportional to ``weights``."""
    s = float(sum(weights))
    quotas = [w / s * total for w in weights]
    counts = [math.floor(q) for q in quotas]
    short = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def _read_counties(path: Path, state_population: int) -> list[GeneralizedCounty]:
    rows = _rows(path, ["id", "name", "pop_share", "dem_votes", "rep_votes", "area_km2", "perimeter_km"])
    seen: dict[str, int] = {}
    parsed = []
    for line, row in rows:
        name = (row["name"] or "").strip()
        if not name:
            raise DatasetError(f"{path.name} line {line}: empty name")
        if name in seen:
            raise DatasetError(f"{path.name} line {line}: duplicate county name {name!r} (first on line {seen[name]})")
        seen[name] = line
        parsed.append(
            dict(
                id=_num(path, line, row, "id", int),
                name=name,
                share=_num(path, line, row, "pop_share"),
                population=_num(path, line, row, "population", int, blank_ok=True),
                dem=_num(path, line, row, "dem_votes", int, blank_ok=True) or 0,
                rep=_num(path, line, row, "rep_votes", int, blank_ok=True) or 0,
                area=_num(path, line, row, "area_km2"),
                perimeter=_num(path, line, row, "perimeter_km"),
            )
        )
    parsed.sort(key=lambda r: r["id"])

    blanks = [r for r in parsed if r["population"] is None]
    if blanks:
        known = sum(r["population"] for r in parsed if r["population"] is not None)
        rest = state_population - known
        if rest <= 0:
            raise DatasetError(f"{path.name}: listed populations exceed the state population")
        for r, pop in zip(blanks, largest_remainder([r["share"] for r in blanks], rest)):
            r["population"] = pop
    total = sum(r["population"] for r in parsed)
    return [
        GeneralizedCounty(
            id=r["id"],
            name=r["name"],
            population=r["population"],
            pop_share=r["population"] / total,
            dem_votes=r["dem"],
            rep_votes=r["rep"],
            area=r["area"],
            perimeter=r["perimeter"],
        )
        for r in parsed
    ]


def _read_splits(path: Path) -> dict[str, SplitSpec]:
    grouped: dict[str, list] = {}
    for line, row in _rows(path, ["parent", "sub_name", "dem_votes", "rep_votes", "area_km2", "perimeter_km"]):
        grouped.setdefault(row["parent"].strip(), []).append(
            (
                row["sub_name"].strip(),
                (_num(path, line, row, "dem_votes", int), _num(path, line, row, "rep_votes", int)),
                _num(path, line, row, "area_km2"),
                _num(path, line, row, "perimeter_km"),
            )
        )
    return {
        parent: SplitSpec(
            parent,
            tuple(s[0] for s in subs),
            tuple(s[1] for s in subs),
            tuple(s[2] for s in subs),
            tuple(s[3] for s in subs),
        )
        for parent, subs in grouped.items()
    }


def _read_pairs(path: Path) -> list[tuple[str, str]]:
    return [(r["name_a"].strip(), r["name_b"].strip()) for _, r in _rows(path, ["name_a", "name_b"])]


def _read_seeds(path: Path) -> list[str]:
    try:
        with open(path, newline="") as fh:
            names = [row[0].strip() for row in csv.reader(fh) if row and row[0].strip()]
    except OSError as exc:
        raise DatasetError(f"{path}: cannot open ({exc.strerror})") from exc
    if names and names[0].lower() == "name":
        names = names[1:]
    return names


def load_dataset(
    county_file: str | Path,
    adjacency_file: str | Path,
    splits_file: str | Path,
    seeds_file: str | Path,
    overrides_file: str | Path | None = None,
    state_population: int = NC_STATE_POPULATION,
    n_districts: int | None = N_DISTRICTS,
    name: str = "dataset",
) -> Dataset:
    county_file, adjacency_file, splits_file, seeds_file = map(
        Path, (county_file, adjacency_file, splits_file, seeds_file)
    )
    parents = _read_counties(county_file, state_population)
    splits = _read_splits(splits_file)
    unknown = set(splits) - {c.name for c in parents}
    if unknown:
        raise DatasetError(f"{splits_file.name}: split parent(s) not in counties: {sorted(unknown)}")

    units: list[GeneralizedCounty] = []
    for parent in parents:
        spec = splits.get(parent.name)
        if spec is None:
            units.append(parent)
            continue
        if abs(sum(spec.sub_areas) - parent.area) > SPLIT_AREA_TOLERANCE * parent.area:
            raise DatasetError(
                f"{splits_file.name}: sub-county areas of {parent.name} sum to "
                f"{sum(spec.sub_areas):.1f} km2, parent is {parent.area:.1f} km2"
            )
        units.extend(apply_split(parent, spec))
    units = [replace(c, id=i) for i, c in enumerate(units, start=1)]
    ids = {c.name: c.id for c in units}
    if len(ids) != len(units):
        raise DatasetError("sub-county names collide with county names")

    algo, lengths = set(), {}
    for line, row in _rows(adjacency_file, ["name_a", "name_b", "border_km", "algo_adjacent"]):
        a, b = row["name_a"].strip(), row["name_b"].strip()
        for nm in (a, b):
            if nm not in ids:
                raise DatasetError(f"{adjacency_file.name} line {line}: unknown county {nm!r}")
        p = _pair(ids[a], ids[b])
        if p[0] == p[1]:
            raise DatasetError(f"{adjacency_file.name} line {line}: county adjacent to itself")
        if p in lengths:
            raise DatasetError(f"{adjacency_file.name} line {line}: duplicate pair {a} - {b}")
        lengths[p] = _num(adjacency_file, line, row, "border_km")
        flag = (row["algo_adjacent"] or "").strip()
        if flag not in ("0", "1"):
            raise DatasetError(f"{adjacency_file.name} line {line}: algo_adjacent must be 0 or 1")
        if flag == "1":
            algo.add(p)
    graph = AdjacencyGraph.from_edges(len(units), algo, lengths)

    if overrides_file is not None and Path(overrides_file).exists():
        aliases = {parent: spec.sub_names for parent, spec in splits.items()}
        graph = apply_adjacency_overrides(
            graph, _read_pairs(Path(overrides_file)), [c.name for c in units], aliases
        )

    seed_names = _read_seeds(seeds_file)
    missing = [s for s in seed_names if s not in ids]
    if missing:
        raise DatasetError(f"{seeds_file.name}: seed(s) not found: {missing}")
    dataset = Dataset(
        counties=tuple(units),
        graph=graph,
        seeds=tuple(ids[s] for s in seed_names),
        state_population=sum(c.population for c in units),
        name=name,
    )
    report = validate_dataset(dataset, n_districts=n_districts)
    if not report.ok:
        raise ValidationError(report)
    return dataset


BUNDLE_FILES = ("counties.csv", "adjacency.csv", "splits.csv", "seeds.csv")


def load_bundle(directory: str | Path, **kwargs) -> Dataset:
    """Load a bundle directory laid out as described in the module docstring."""
    d = Path(directory)
    for fname in BUNDLE_FILES:
        if not (d / fname).is_file():
            raise DatasetError(f"{d / fname}: file not found")
    kwargs.setdefault("name", d.name)
    return load_dataset(*(d / f for f in BUNDLE_FILES), overrides_file=d / "overrides.csv", **kwargs)


def nc_bundle_path() -> Path:
    return Path(str(resources.files("rps_districts") / "data" / "nc"))


def load_nc() -> Dataset:
    """The bundled 107-unit North Carolina dataset."""
    return load_bundle(nc_bundle_path(), name="nc")


def validate_dataset(d: Dataset, n_districts: int | None = N_DISTRICTS) -> ValidationReport:
    v = []
    total = sum(c.population for c in d.counties)
    if total != d.state_population:
        v.append(f"county populations sum to {total}, state population is {d.state_population}")
    share_sum = sum(c.pop_share for c in d.counties)
    if abs(share_sum - 1.0) > 1e-6:
        v.append(f"population shares sum to {share_sum:.9f}, not 1")
    for c in d.counties:
        if c.population <= 0:
            v.append(f"{c.name}: nonpositive population")
        if c.area <= 0 or c.perimeter <= 0:
            v.append(f"{c.name}: nonpositive geometry")
        if c.dem_votes < 0 or c.rep_votes < 0:
            v.append(f"{c.name}: negative vote count")
    g = d.graph
    for i, j in sorted(g.algo_edges):
        if not g.has_edge(j, i):
            v.append(f"asymmetric adjacency: {i} -> {j} without {j} -> {i}")
    for (i, j), length in sorted(g.border_lengths.items()):
        if length < 0:
            v.append(f"negative border length between {i} and {j}")
    for i, j in sorted(g.undirected_edges()):
        if (i, j) not in g.border_lengths:
            v.append(f"algorithmic edge {i}-{j} has no geometric border")
    if g.n and not g.is_connected():
        v.append("disconnected graph")
    if n_districts is not None and len(d.seeds) != n_districts:
        v.append(f"seed count {len(d.seeds)} != {n_districts}")
    for s in d.seeds:
        if not 1 <= s <= d.n:
            v.append(f"seed {s} not found")
    if len(set(d.seeds)) != len(d.seeds):
        v.append("duplicate seeds")
    return ValidationReport(tuple(v))
