"""Immutable domain model: generalized counties, adjacency, district plans."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


@dataclass(frozen=True)
class GeneralizedCounty:
    """An unsplit county or one sub-county of a split county."""

    id: int
    name: str
    population: int
    pop_share: float
    dem_votes: int
    rep_votes: int
    area: float  # km^2
    perimeter: float  # km
    parent: str | None = None

    @property
    def total_votes(self) -> int:
        return self.dem_votes + self.rep_votes


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Algorithmic adjacency plus geometric shared-border lengths.

    The two relations are independent: a weak border removed from growth still
    has a physical length that counts for perimeters.  Nodes are ``1..n``.
    ``algo_edges`` holds ordered pairs; a well-formed graph has both directions.
    """

    n: int
    algo_edges: frozenset[tuple[int, int]]
    border_lengths: Mapping[tuple[int, int], float] = field(default_factory=dict)
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: list[list[int]] = [[] for _ in range(self.n + 1)]
        for i, j in self.algo_edges:
            if i == j:
                raise DomainError(f"self loop on node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise DomainError(f"edge ({i}, {j}) outside 1..{self.n}")
            adj[i].append(j)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        border_lengths: Mapping[tuple[int, int], float] | None = None,
    ) -> "AdjacencyGraph":
        directed = set()
        for i, j in edges:
            directed.add((i, j))
            directed.add((j, i))
        lengths = {_pair(i, j): float(v) for (i, j), v in (border_lengths or {}).items()}
        return cls(n, frozenset(directed), lengths)

    @classmethod
    def from_matrix(cls, matrix, border_lengths=None) -> "AdjacencyGraph":
        """Build from a square 0/1 matrix; asymmetry is kept for validation to find."""
        n = len(matrix)
        directed = frozenset(
            (i + 1, j + 1) for i in range(n) for j in range(n) if matrix[i][j]
        )
        lengths = {_pair(i, j): float(v) for (i, j), v in (border_lengths or {}).items()}
        return cls(n, directed, lengths)

    def neighbors(self, node: int) -> tuple[int, ...]:
        if not 1 <= node <= self.n:
            raise DomainError(f"unknown county id {node}")
        return self._adj[node]

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.algo_edges

    def undirected_edges(self) -> set[tuple[int, int]]:
        return {_pair(i, j) for i, j in self.algo_edges}

    def is_symmetric(self) -> bool:
        return all((j, i) in self.algo_edges for i, j in self.algo_edges)

    def border(self, i: int, j: int) -> float:
        return self.border_lengths.get(_pair(i, j), 0.0)

    def is_connected(self) -> bool:
        return self.n == 0 or is_contiguous(range(1, self.n + 1), self)

    def without_edges(self, pairs: Iterable[tuple[int, int]]) -> "AdjacencyGraph":
        drop = set()
        for i, j in pairs:
            drop.add((i, j))
            drop.add((j, i))
        return AdjacencyGraph(self.n, self.algo_edges - drop, self.border_lengths)


def neighbors(graph: AdjacencyGraph, node: int) -> set[int]:
    return set(graph.neighbors(node))


def is_contiguous(members: Iterable[int], graph: AdjacencyGraph) -> bool:
    """True iff ``members`` induce a connected subgraph under algo_edges."""
    members = set(members)
    if not members:
        raise DomainError("contiguity of an empty set is undefined")
    for m in members:
        if not 1 <= m <= graph.n:
            raise DomainError(f"unknown county id {m}")
    start = next(iter(members))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if v in members and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(members)


@dataclass(frozen=True)
class District:
    label: int
    members: frozenset[int]
    population: int
    dem_votes: int
    rep_votes: int


@dataclass(frozen=True)
class Plan:
    """Assignment of every generalized county to a district label ``1..k``.

    ``assignment[i - 1]`` is the label of county ``i``.  ``seeds[j - 1]`` is the
    seed county of district ``j``; plans read from files may have no seeds.
    """

    assignment: tuple[int, ...]
    seeds: tuple[int, ...] | None = None

    @property
    def n_districts(self) -> int:
        return len(self.seeds) if self.seeds is not None else max(self.assignment)

    @property
    def seed_of(self) -> dict[int, int]:
        return {j: s for j, s in enumerate(self.seeds or (), start=1)}

    def members(self, label: int) -> frozenset[int]:
        return frozenset(i for i, d in enumerate(self.assignment, start=1) if d == label)

    def district_members(self) -> list[frozenset[int]]:
        groups: list[set[int]] = [set() for _ in range(self.n_districts)]
        for county, label in enumerate(self.assignment, start=1):
            if 1 <= label <= len(groups):
                groups[label - 1].add(county)
        return [frozenset(g) for g in groups]

    def districts(self, counties) -> list[District]:
        out = []
        for label, members in enumerate(self.district_members(), start=1):
            cs = [counties[i - 1] for i in members]
            out.append(
                District(
                    label,
                    members,
                    sum(c.population for c in cs),
                    sum(c.dem_votes for c in cs),
                    sum(c.rep_votes for c in cs),
                )
            )
        return out


def plan_violations(plan: Plan, graph: AdjacencyGraph, n_districts: int | None = None) -> list[str]:
    """List every broken plan invariant; an empty list means the plan is valid."""
    k = n_districts if n_districts is not None else plan.n_districts
    problems = []
    if len(plan.assignment) != graph.n:
        problems.append(f"assignment covers {len(plan.assignment)} counties, expected {graph.n}")
        return problems
    for county, label in enumerate(plan.assignment, start=1):
        if not 1 <= label <= k:
            problems.append(f"county {county} has label {label} outside 1..{k}")
    groups = plan.district_members()
    for label in range(1, k + 1):
        members = groups[label - 1] if label <= len(groups) else frozenset()
        if not members:
            problems.append(f"district {label} is empty")
            continue
        if plan.seeds is not None and plan.seeds[label - 1] not in members:
            problems.append(f"district {label} does not contain its seed {plan.seeds[label - 1]}")
        if not is_contiguous(members, graph):
            problems.append(f"district {label} is not contiguous")
    return problems
