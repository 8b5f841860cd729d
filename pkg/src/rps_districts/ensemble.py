"""Run many growth simulations, drop duplicates, score and summarize them."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geo import DomainError, Plan
from .ingest import Dataset
from .metrics import SCALAR_METRICS, PlanMetrics, evaluate_plan
from .rps import MAX_ROWS, grow_plan, make_rng

log = logging.getLogger(__name__)


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class EnsembleConfig:
    runs: int
    master_seed: int
    good_threshold_pp: float = 1.0
    max_rows: int = MAX_ROWS
    workers: int = 1
    bins: int = 20
    keep_plans: bool = True  # False keeps only metric columns (large runs)

    def __post_init__(self):
        if self.runs < 1:
            raise DomainError("runs must be at least 1")
        if not self.good_threshold_pp > 0:
            raise DomainError("good_threshold_pp must be positive")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")
        if self.master_seed < 0:
            raise DomainError("master_seed must be non-negative")


@dataclass(frozen=True)
class PlanRecord:
    run_index: int
    assignment: tuple[int, ...]
    metrics: PlanMetrics
    good: bool

    def to_dict(self) -> dict:
        return {
            "run_index": self.run_index,
            "assignment": list(self.assignment),
            "good": self.good,
            "metrics": self.metrics.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "PlanRecord":
        return cls(
            int(d["run_index"]),
            tuple(int(x) for x in d["assignment"]),
            PlanMetrics.from_dict(d["metrics"]),
            bool(d["good"]),
        )


@dataclass(frozen=True)
class Summary:
    count: int
    min: float
    max: float
    mean: float
    stddev: float
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "stddev": self.stddev,
            "edges": list(self.edges),
            "counts": list(self.counts),
        }


@dataclass
class EnsembleResult:
    runs: int
    completed: int
    exhausted: int
    duplicates_removed: int
    good: int
    good_threshold_pp: float
    records: list[PlanRecord]
    columns: dict[str, np.ndarray]  # per retained plan, run_index order; NaN = undefined
    summary: dict[str, Summary] = field(default_factory=dict)

    @property
    def retained(self) -> int:
        return self.completed - self.duplicates_removed

    @property
    def duplicate_fraction(self) -> float:
        return self.duplicates_removed / self.completed if self.completed else 0.0

    @property
    def good_fraction(self) -> float:
        return self.good / self.retained if self.retained else 0.0

    def counts(self) -> dict:
        return {
            "runs": self.runs,
            "completed": self.completed,
            "exhausted": self.exhausted,
            "duplicates_removed": self.duplicates_removed,
            "retained": self.retained,
            "good": self.good,
            "good_threshold_pp": self.good_threshold_pp,
        }


# --- canonical keys ----------------------------------------------------------------


def canonical_key(plan: Plan) -> str:
    """Sorted members of each district, districts in label order: '1,5,9|2,3|...'."""
    return "|".join(",".join(str(m) for m in sorted(g)) for g in plan.district_members())


def parse_key(key: str) -> Plan:
    groups = [[int(x) for x in part.split(",") if x] for part in key.split("|")]
    n = sum(len(g) for g in groups)
    assignment = [0] * n
    for label, g in enumerate(groups, start=1):
        for m in g:
            if not 1 <= m <= n or assignment[m - 1]:
                raise DomainError(f"malformed plan key near county {m}")
            assignment[m - 1] = label
    return Plan(tuple(assignment))


def _digest(key: str) -> bytes:
    return hashlib.blake2b(key.encode(), digest_size=16).digest()


# --- histogram summary ---------------------------------------------------------------


def histogram(values: Sequence[float], bins: int) -> tuple[list[float], list[int]]:
    """Equal-width bins over [min, max], left-closed except the last (closed both ends).

    A constant sample gets the range [v - 0.5, v + 0.5].
    """
    if bins < 1:
        raise DomainError("bins must be at least 1")
    if not len(values):
        raise DomainError("histogram of an empty sample")
    lo, hi = float(min(values)), float(max(values))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1).tolist()
    counts = [0] * bins
    for v in values:
        i = bisect_right(edges, v) - 1
        counts[min(i, bins - 1)] += 1
    return edges, counts


def summarize(values: Sequence[float], bins: int = 20) -> Summary:
    """Moments and histogram of a sample; NaN entries (undefined values) are skipped."""
    vals = [float(v) for v in values if v is not None and not math.isnan(v)]
    if not vals:
        raise DomainError("summary of an empty sample")
    arr = np.asarray(vals)
    edges, counts = histogram(vals, bins)
    return Summary(len(vals), float(arr.min()), float(arr.max()), float(arr.mean()),
                   float(arr.std()), tuple(edges), tuple(counts))


# --- running ---------------------------------------------------------------------------

_DATASET: Dataset | None = None


def _init_worker(dataset: Dataset) -> None:
    global _DATASET
    _DATASET = dataset


def _run_chunk(args) -> list[tuple[int, tuple[int, ...] | None, PlanMetrics | None]]:
    master_seed, start, stop, max_rows = args
    d = _DATASET
    out = []
    for i in range(start, stop):
        o = grow_plan(d, make_rng(master_seed, i), max_rows=max_rows)
        if o.completed:
            out.append((i, o.plan.assignment, evaluate_plan(o.plan, d)))
        else:
            out.append((i, None, None))
    return out


def _chunks(runs: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, min(2000, runs // (workers * 8) or 1))
    return [(s, min(s + size, runs)) for s in range(0, runs, size)]


def _outcomes(dataset: Dataset, config: EnsembleConfig) -> Iterable:
    jobs = [(config.master_seed, a, b, config.max_rows) for a, b in _chunks(config.runs, config.workers)]
    if config.workers == 1:
        _init_worker(dataset)
        for job in jobs:
            yield from _run_chunk(job)
        return
    with ProcessPoolExecutor(config.workers, initializer=_init_worker, initargs=(dataset,)) as ex:
        # map preserves submission order, so the merge is ordered by run_index
        for part in ex.map(_run_chunk, jobs):
            yield from part


def run_ensemble(dataset: Dataset, config: EnsembleConfig) -> EnsembleResult:
    """Execute runs 0..runs-1 and merge them in run_index order.

    Exhausted runs are counted and dropped; later copies of an already seen plan
    are counted as duplicates and dropped.  The result depends only on the
    dataset and config, never on the number of workers.
    """
    seen: set[bytes] = set()
    records: list[PlanRecord] = []
    cols: dict[str, list[float]] = {m: [] for m in SCALAR_METRICS}
    completed = exhausted = dups = good = 0
    for run_index, assignment, m in _outcomes(dataset, config):
        if assignment is None:
            exhausted += 1
            continue
        completed += 1
        h = _digest(canonical_key(Plan(assignment)))
        if h in seen:
            dups += 1
            continue
        seen.add(h)
        is_good = m.pop_stddev_pp <= config.good_threshold_pp
        good += is_good
        for name in SCALAR_METRICS:
            v = getattr(m, name)
            cols[name].append(math.nan if v is None else float(v))
        if config.keep_plans:
            records.append(PlanRecord(run_index, assignment, m, is_good))
    columns = {k: np.asarray(v, dtype=float) for k, v in cols.items()}
    summary = {}
    if completed - dups:
        for name, arr in columns.items():
            if not np.isnan(arr).all():
                summary[name] = summarize(arr, config.bins)
    log.info("ensemble: %d completed, %d exhausted, %d duplicates, %d good",
             completed, exhausted, dups, good)
    return EnsembleResult(config.runs, completed, exhausted, dups, good,
                          config.good_threshold_pp, records, columns, summary)


def filter_good(result: EnsembleResult, threshold_pp: float) -> list[PlanRecord]:
    return [r for r in result.records if r.metrics.pop_stddev_pp <= threshold_pp]
