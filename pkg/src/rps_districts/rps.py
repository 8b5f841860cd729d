"""Rocks-Pebbles-Sand growth: build districts outward from fixed seeds.

Row 1 holds the seeds.  Rows 2 and 3 add, per district, the most populous
unassigned neighbour of the district so far (ties broken at random).  From row 4
on, a district whose share already exceeds the row's cap sits the row out;
otherwise it draws one unassigned neighbour at random, each neighbour weighted
by how many current members it touches.  Columns are processed 1..k within a
row and every pick is visible to the next column immediately.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geo import AdjacencyGraph, DomainError, Plan
from .ingest import Dataset, DatasetError

MAX_ROWS = 60


@dataclass(frozen=True)
class CapSchedule:
    """Row cap ``base + floor((row - 3) / period) * step`` percent of the state."""

    base_bp: int = 600  # basis points, 6.00 %
    step_bp: int = 45  # 0.45 %
    period: int = 3
    first_row: int = 4

    def basis_points(self, row: int) -> int:
        if row < self.first_row:
            raise DomainError(f"no population cap before row {self.first_row} (got {row})")
        return self.base_bp + ((row - 3) // self.period) * self.step_bp

    def __call__(self, row: int) -> float:
        return self.basis_points(row) / 10_000


DEFAULT_CAPS = CapSchedule()


def cap(row: int) -> float:
    """Population cap for ``row`` as a fraction of the state population."""
    return DEFAULT_CAPS(row)


class Status(str, enum.Enum):
    COMPLETED = "completed"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class GrowthOutcome:
    status: Status
    plan: Plan | None
    rows_used: int
    sol: np.ndarray  # max_rows x k county ids, 0 = no pick

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED


class _Draws:
    """Uniform integers from a numpy Generator, drawn in blocks."""

    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator, block: int = 128):
        self.rng = rng
        self.buf = rng.random(block).tolist()
        self.pos = 0

    def below(self, n: int) -> int:
        if self.pos == len(self.buf):
            self.buf = self.rng.random(len(self.buf)).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return int(u * n)


def _as_draws(rng):
    # anything with below(n) -> int in [0, n) can stand in for the generator
    return rng if hasattr(rng, "below") else _Draws(rng)


def pick_largest_population(candidates: Iterable[int], dataset: Dataset, rng) -> int:
    """Most populous candidate; exact ties are broken uniformly at random."""
    cands = sorted(set(candidates))
    if not cands:
        raise DomainError("no candidates to pick from")
    pops = [dataset.counties[c - 1].population for c in cands]
    best = max(pops)
    ties = [c for c, p in zip(cands, pops) if p == best]
    if len(ties) == 1:
        return ties[0]
    return ties[_as_draws(rng).below(len(ties))]


def candidate_multiset(members: Iterable[int], graph: AdjacencyGraph, assigned) -> Counter:
    """Unassigned neighbours of ``members``, counted once per touching member."""
    members = list(members)
    if not members:
        raise DomainError("candidate multiset of an empty district")
    out: Counter = Counter()
    for m in members:
        for u in graph.neighbors(m):
            if u not in assigned:
                out[u] += 1
    return out


def grow_plan(
    dataset: Dataset,
    rng,
    schedule: CapSchedule = DEFAULT_CAPS,
    max_rows: int = MAX_ROWS,
) -> GrowthOutcome:
    """Run the growth algorithm once.  ``rng`` is the only source of randomness.

    ``rng`` is a numpy Generator, or any object with a ``below(n)`` method
    returning an integer in [0, n).
    """
    draws = _as_draws(rng)
    seeds = dataset.seeds
    k = len(seeds)
    n = dataset.n
    nbrs = dataset.graph._adj
    pops = [0] + [c.population for c in dataset.counties]
    state_pop = dataset.state_population

    sol = np.zeros((max_rows, k), dtype=np.int32)
    assigned = bytearray(n + 1)
    label = [0] * (n + 1)
    members: list[list[int]] = [[] for _ in range(k)]
    col_pop = [0] * k
    n_assigned = 0

    for j, s in enumerate(seeds):
        if assigned[s]:
            raise DatasetError(f"seed {s} used twice")
        assigned[s] = 1
        label[s] = j + 1
        members[j].append(s)
        col_pop[j] = pops[s]
        sol[0, j] = s
    n_assigned = k

    def finish(row: int) -> GrowthOutcome:
        plan = Plan(tuple(label[1:]), tuple(seeds))
        return GrowthOutcome(Status.COMPLETED, plan, row, sol)

    if n_assigned == n:
        return finish(1)

    # rows 2-3: most populous unassigned neighbour, no multiplicity
    for row in (2, 3):
        if row > max_rows:
            break
        for j in range(k):
            cands = {u for m in members[j] for u in nbrs[m] if not assigned[u]}
            if not cands:
                raise DatasetError(
                    f"district {j + 1} (seed {seeds[j]}) has no free neighbour at row {row}"
                )
            best = max(pops[u] for u in cands)
            ties = sorted(u for u in cands if pops[u] == best)
            u = ties[0] if len(ties) == 1 else ties[draws.below(len(ties))]
            assigned[u] = 1
            label[u] = j + 1
            members[j].append(u)
            col_pop[j] += pops[u]
            sol[row - 1, j] = u
            n_assigned += 1
            if n_assigned == n:
                return finish(row)

    # rows 4+: multiplicity-weighted random frontier under the cap
    frontier: list[dict[int, int]] = []
    for j in range(k):
        f: dict[int, int] = {}
        for m in members[j]:
            for u in nbrs[m]:
                if not assigned[u]:
                    f[u] = f.get(u, 0) + 1
        frontier.append(f)

    for row in range(4, max_rows + 1):
        limit = schedule.basis_points(row) * state_pop
        for j in range(k):
            if col_pop[j] * 10_000 > limit:
                continue
            f = frontier[j]
            if not f:
                continue
            r = draws.below(sum(f.values()))
            for u, w in f.items():
                r -= w
                if r < 0:
                    break
            assigned[u] = 1
            label[u] = j + 1
            members[j].append(u)
            col_pop[j] += pops[u]
            sol[row - 1, j] = u
            n_assigned += 1
            for g in frontier:
                g.pop(u, None)
            for v in nbrs[u]:
                if not assigned[v]:
                    f[v] = f.get(v, 0) + 1
            if n_assigned == n:
                return finish(row)

    return GrowthOutcome(Status.EXHAUSTED, None, max_rows, sol)


def make_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Independent counter-based stream for one run of an ensemble.

    Philox keyed through SeedSequence(master_seed, spawn_key=(run_index,)):
    distinct (master_seed, run_index) pairs give distinct, non-overlapping keys.
    """
    if master_seed < 0 or run_index < 0:
        raise DomainError("master_seed and run_index must be non-negative")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,))
    return np.random.Generator(np.random.Philox(ss))


def run_once(dataset: Dataset, master_seed: int, run_index: int, **kwargs) -> GrowthOutcome:
    return grow_plan(dataset, make_rng(master_seed, run_index), **kwargs)


def audit_caps(
    sol: np.ndarray,
    dataset: Dataset,
    schedule: CapSchedule = DEFAULT_CAPS,
) -> list[str]:
    """Check a growth trace against the cap rule, recomputing shares from ``sol``.

    Returns one message per pick at row >= 4 made while its district was
    already over the row's cap.
    """
    pops = np.array([0] + [c.population for c in dataset.counties], dtype=np.int64)
    state_pop = dataset.state_population
    running = np.zeros(sol.shape[1], dtype=np.int64)
    problems = []
    for r in range(sol.shape[0]):
        row = r + 1
        for j in range(sol.shape[1]):
            u = int(sol[r, j])
            if u == 0:
                continue
            if row >= schedule.first_row and running[j] * 10_000 > schedule.basis_points(row) * state_pop:
                problems.append(
                    f"row {row} district {j + 1}: share {running[j] / state_pop:.4%} "
                    f"over cap {schedule(row):.2%} before picking {u}"
                )
        running += pops[sol[r]]
    return problems


def sol_violations(sol: np.ndarray, dataset: Dataset) -> list[str]:
    """Structural checks on a trace: no county twice, each pick adjacent to its column."""
    problems = []
    seen: dict[int, tuple[int, int]] = {}
    cols: list[set[int]] = [set() for _ in range(sol.shape[1])]
    g = dataset.graph
    for r in range(sol.shape[0]):
        for j in range(sol.shape[1]):
            u = int(sol[r, j])
            if u == 0:
                continue
            if u in seen:
                problems.append(f"county {u} picked at {seen[u]} and {(r + 1, j + 1)}")
            seen[u] = (r + 1, j + 1)
            if r > 0 and not any(g.has_edge(u, m) for m in cols[j]):
                problems.append(f"row {r + 1} district {j + 1}: county {u} not adjacent to district")
            cols[j].add(u)
    return problems


def rows_2_3_table(sol: np.ndarray) -> np.ndarray:
    return sol[1:3].copy()


def sol_columns(sol: np.ndarray) -> list[list[int]]:
    return [[int(u) for u in sol[:, j] if u] for j in range(sol.shape[1])]


def as_plan(columns: Sequence[Sequence[int]], n: int) -> Plan:
    """Plan from column lists (first entry of each column is its seed)."""
    assignment = [0] * n
    for j, col in enumerate(columns, start=1):
        for u in col:
            assignment[u - 1] = j
    return Plan(tuple(assignment), tuple(col[0] for col in columns))
