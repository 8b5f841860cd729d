"""Command line: generate ensembles, evaluate one plan, compare against reference plans.

Exit codes: 0 success, 1 validation or domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .ensemble import EnsembleConfig, PlanRecord, default_workers, histogram, run_ensemble
from .geo import DomainError, Plan, plan_violations
from .ingest import Dataset, DatasetError, ValidationError, load_bundle, nc_bundle_path
from .metrics import SCALAR_METRICS, evaluate_plan

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

log = logging.getLogger("rps_districts")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_data(arg: str) -> Dataset:
    path = Path(arg)
    if not path.exists() and arg == "nc":
        path = nc_bundle_path()
    if not path.is_dir():
        raise CliError(f"{arg}: not a data directory", EXIT_INVALID)
    try:
        return load_bundle(path)
    except ValidationError as e:
        raise CliError("dataset validation failed:\n  " + "\n  ".join(e.report.violations), EXIT_INVALID)
    except DatasetError as e:
        raise CliError(str(e), EXIT_INVALID)


# --- generate -------------------------------------------------------------------


def cmd_generate(args) -> int:
    dataset = _load_data(args.data)
    config = EnsembleConfig(
        runs=args.runs,
        master_seed=args.seed,
        good_threshold_pp=args.good_threshold,
        workers=args.workers or default_workers(),
    )
    result = run_ensemble(dataset, config)
    written = 0
    try:
        with open(args.out, "w") as fh:
            for rec in result.records:
                if rec.good or args.keep_all:
                    fh.write(rec.to_json() + "\n")
                    written += 1
    except OSError as e:
        raise CliError(f"{args.out}: {e.strerror}", EXIT_IO)

    c = result.counts()
    print(f"runs        {c['runs']}")
    print(f"completed   {c['completed']}")
    print(f"exhausted   {c['exhausted']}")
    print(f"duplicates  {c['duplicates_removed']} ({result.duplicate_fraction:.4%} of completed)")
    print(f"good        {c['good']} of {c['retained']} ({result.good_fraction:.2%}, pop stddev <= {config.good_threshold_pp} pp)")
    s = result.summary.get("pop_stddev_pp")
    if s is not None:
        print(f"pop stddev  mean {s.mean:.3f} pp, min {s.min:.3f}, max {s.max:.3f}")
    print(f"wrote {written} plans to {args.out}")
    return EXIT_OK


# --- evaluate -------------------------------------------------------------------


def read_plan_file(path: str | Path, dataset: Dataset) -> tuple[Plan, list[str]]:
    """Read ``county_name,district_label`` rows; returns the plan and coverage problems."""
    problems = []
    labels: dict[int, int] = {}
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}", EXIT_IO)
    if rows and rows[0] and rows[0][0].strip().lower() == "county_name":
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            problems.append(f"line {lineno}: expected county_name,district_label")
            continue
        name, label = row[0].strip(), row[1].strip()
        try:
            cid = dataset.id_of(name)
        except (KeyError, DatasetError, DomainError):
            problems.append(f"line {lineno}: unknown county {name!r}")
            continue
        try:
            lab = int(label)
        except ValueError:
            problems.append(f"line {lineno}: district label {label!r} is not an integer")
            continue
        if cid in labels:
            problems.append(f"line {lineno}: county {name!r} assigned twice")
            continue
        labels[cid] = lab
    for c in dataset.counties:
        if c.id not in labels:
            problems.append(f"county {c.name!r} has no district")
    assignment = tuple(labels.get(i, 0) for i in range(1, dataset.n + 1))
    return Plan(assignment), problems


def cmd_evaluate(args) -> int:
    dataset = _load_data(args.data)
    plan, problems = read_plan_file(args.plan, dataset)
    if not problems:
        k = dataset.n_districts
        problems = plan_violations(plan, dataset.graph, k)
        names = {c.id: c.name for c in dataset.counties}
        for label in range(1, k + 1):
            members = plan.members(label)
            if members and f"district {label} is not contiguous" in problems:
                problems.append(f"  district {label}: " + ", ".join(names[m] for m in sorted(members)))
    if problems:
        print("plan is invalid:", file=sys.stderr)
        for p in problems:
            print("  " + p, file=sys.stderr)
        return EXIT_INVALID
    record = evaluate_plan(plan, dataset).to_dict()
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text)
        except OSError as e:
            raise CliError(f"{args.out}: {e.strerror}", EXIT_IO)
    return EXIT_OK


# --- compare --------------------------------------------------------------------


def read_ensemble(path: str | Path) -> list[PlanRecord]:
    try:
        with open(path) as fh:
            return [PlanRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}", EXIT_IO)
    except (ValueError, KeyError, TypeError) as e:
        raise CliError(f"{path}: malformed ensemble record ({e})", EXIT_INVALID)


def read_refs(path: str | Path) -> list[dict]:
    try:
        refs = json.loads(Path(path).read_text())
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}", EXIT_IO)
    except ValueError as e:
        raise CliError(f"{path}: invalid JSON ({e})", EXIT_INVALID)
    if not isinstance(refs, list) or not all(isinstance(r, dict) and "name" in r for r in refs):
        raise CliError(f"{path}: expected an array of objects with a name", EXIT_INVALID)
    names = [r["name"] for r in refs]
    if len(set(names)) != len(names):
        raise CliError(f"{path}: duplicate reference names", EXIT_INVALID)
    return refs


def cmd_compare(args) -> int:
    if args.metric not in SCALAR_METRICS:
        print(f"unknown metric {args.metric!r}; valid: {', '.join(SCALAR_METRICS)}", file=sys.stderr)
        return EXIT_INVALID
    if args.bins < 1:
        raise CliError("--bins must be at least 1", EXIT_INVALID)
    records = read_ensemble(args.ensemble)
    refs = read_refs(args.reference)
    values = [getattr(r.metrics, args.metric) for r in records]
    values = [float(v) for v in values if v is not None]
    if not values:
        raise CliError(f"{args.ensemble}: no plans with a defined {args.metric}", EXIT_INVALID)
    edges, counts = histogram(values, args.bins)
    arr = np.sort(np.asarray(values))
    try:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_low", "bin_high", "count"])
            for lo, hi, n in zip(edges, edges[1:], counts):
                w.writerow([repr(lo), repr(hi), n])
            for ref in refs:
                v = ref.get(args.metric)
                if v is None:
                    continue
                w.writerow(["ref", ref["name"], repr(float(v))])
                below = np.searchsorted(arr, float(v), side="left") / len(arr)
                print(f"{ref['name']}: {args.metric} = {v} (at percentile {below * 100:.1f} of {len(arr)} plans)")
    except OSError as e:
        raise CliError(f"{args.out}: {e.strerror}", EXIT_IO)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rps-districts", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run the growth algorithm many times")
    g.add_argument("--data", required=True, help="data directory ('nc' for the bundled one)")
    g.add_argument("--runs", type=int, required=True)
    g.add_argument("--seed", type=int, required=True, help="master seed")
    g.add_argument("--out", required=True, help="output .jsonl")
    g.add_argument("--good-threshold", type=float, default=1.0, help="pp, inclusive (default 1.0)")
    g.add_argument("--workers", type=int, default=None, help="default: available CPUs")
    g.add_argument("--keep-all", action="store_true", help="write every distinct plan, not just good ones")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="score a single plan")
    e.add_argument("--data", required=True)
    e.add_argument("--plan", required=True, help="CSV county_name,district_label")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="histogram one metric with reference overlays")
    c.add_argument("--ensemble", required=True)
    c.add_argument("--reference", required=True, help="refs.json")
    c.add_argument("--metric", required=True)
    c.add_argument("--bins", type=int, default=20)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
