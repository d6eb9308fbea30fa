"""runs.csv and per-run JSON files.

runs.csv holds only deterministic fields so that re-running a run with the
same config and seed reproduces its row byte for byte; wall-clock timings
live in the per-run JSON documents.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .pipeline import RunResult

CSV_VERSION = "# icn-saea runs v1"
RUN_FIELDS = ("problem", "name", "dim", "variant", "algorithm", "repeat", "master_seed", "seed",
              "status", "true_fitness", "surrogate_fitness", "n_offline", "true_calls")


def fmt_float(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.17g}"


def run_key(problem_label: str, algorithm: str, repeat: int) -> tuple:
    return (problem_label, algorithm, int(repeat))


def json_name(problem_label: str, algorithm: str, repeat: int) -> str:
    return f"{problem_label}__{algorithm.replace('+', '_')}__r{repeat:03d}.json"


def label_of(res: RunResult) -> str:
    return res.label


def csv_row(res: RunResult) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([
        label_of(res), res.problem, res.dim, res.variant, res.kind, res.repeat, res.master_seed,
        res.seed, res.status, fmt_float(res.true_fitness), fmt_float(res.surrogate_fitness),
        res.n_offline, res.true_calls,
    ])
    return buf.getvalue()


def header() -> str:
    return CSV_VERSION + "\n" + ",".join(RUN_FIELDS) + "\n"


def read_runs(path) -> tuple[list[dict], list[str]]:
    """Parse runs.csv; returns (rows, problems) where problems describe skipped lines."""
    path = Path(path)
    rows, bad = [], []
    lines = path.read_text(encoding="utf-8").splitlines()
    body = [(i + 1, l) for i, l in enumerate(lines) if l.strip() and not l.startswith("#")]
    if not body:
        return rows, bad
    lineno, head = body[0]
    if tuple(next(csv.reader([head]))) != RUN_FIELDS:
        bad.append(f"line {lineno}: unexpected header")
        return rows, bad
    for lineno, line in body[1:]:
        values = next(csv.reader([line]), [])
        if len(values) != len(RUN_FIELDS):
            bad.append(f"line {lineno}: expected {len(RUN_FIELDS)} fields, got {len(values)}")
            continue
        row = dict(zip(RUN_FIELDS, values))
        row["_line"] = line + "\n"
        try:
            row["dim"] = int(row["dim"])
            row["repeat"] = int(row["repeat"])
            row["true_fitness"] = float(row["true_fitness"])
            row["surrogate_fitness"] = float(row["surrogate_fitness"])
        except ValueError as exc:
            bad.append(f"line {lineno}: {exc}")
            continue
        if row["status"] not in ("ok", "failed"):
            bad.append(f"line {lineno}: unknown status {row['status']!r}")
            continue
        rows.append(row)
    return rows, bad


def write_json(path, res: RunResult) -> None:
    Path(path).write_text(json.dumps(res.to_dict(), indent=1) + "\n", encoding="utf-8")


def read_json(path) -> RunResult:
    return RunResult.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
