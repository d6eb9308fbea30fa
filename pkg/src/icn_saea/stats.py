"""Paired Wilcoxon signed-rank test and mean +/- std comparison tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError

ALPHA = 0.05
EXACT_MAX_N = 12


@dataclass(frozen=True)
class WilcoxonResult:
    w_plus: float
    w_minus: float
    p_value: float
    n: int  # pairs left after dropping zero differences
    method: str  # "exact", "normal" or "degenerate"

    @property
    def statistic(self) -> float:
        return min(self.w_plus, self.w_minus)

    @property
    def degenerate(self) -> bool:
        return self.method == "degenerate"


def _exact_p(ranks: np.ndarray, w_plus: float) -> float:
    """Two-sided p from the exact null distribution of W+.

    Ranks are doubled so tied (half-integer) ranks become integers, then the
    distribution over all 2^n sign patterns is built by convolution.
    """
    r2 = np.rint(2 * ranks).astype(np.int64)
    counts = np.zeros(int(r2.sum()) + 1)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    total = 2.0 ** ranks.size
    center = r2.sum() / 2.0
    dev = abs(2 * w_plus - center)
    support = np.arange(counts.size)
    extreme = np.abs(support - center) >= dev - 1e-9
    return min(1.0, float(counts[extreme].sum() / total))


def _normal_p(ranks: np.ndarray, w_plus: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    # continuity correction toward the mean
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sided test of paired samples ``a`` vs ``b``.

    Zero differences are dropped and tied |differences| get average ranks.
    Exact null distribution for n <= 12 pairs, normal approximation with
    tie and continuity corrections above that.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"paired samples must be 1-d and equal length, got {a.shape}, {b.shape}")
    diff = a - b
    diff = diff[diff != 0]
    n = diff.size
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 1.0, 0, "degenerate")
    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    if n <= EXACT_MAX_N:
        return WilcoxonResult(w_plus, w_minus, _exact_p(ranks, w_plus), n, "exact")
    return WilcoxonResult(w_plus, w_minus, _normal_p(ranks, w_plus), n, "normal")


def verdict(reference: Sequence[float], other: Sequence[float], alpha: float = ALPHA):
    """'+' if the reference is significantly better (lower), '-' if worse, else '≈'."""
    res = wilcoxon_signed_rank(reference, other)
    if res.degenerate or res.p_value >= alpha:
        return "≈", res
    med = float(np.median(np.asarray(other, dtype=np.float64) - np.asarray(reference, dtype=np.float64)))
    if med > 0:
        return "+", res
    if med < 0:
        return "-", res
    return "≈", res


@dataclass
class ComparisonCell:
    problem: str
    algorithm: str
    n: int
    mean: float
    std: float
    median: float
    verdict: str = "NA"  # vs the reference algorithm; NA on the reference itself
    p_value: float = math.nan
    best: bool = False


def summarize(runs: Iterable, reference: str, algorithms: Sequence[str] | None = None,
              alpha: float = ALPHA):
    """Group runs by (problem label, algorithm) and compare against ``reference``.

    ``runs`` are runs.csv rows (keys ``problem`` label, ``algorithm``,
    ``repeat``, ``true_fitness``) or RunResult objects.
    Returns (cells, missing) where missing lists (problem, algorithm) pairs
    with fewer than two usable runs.
    """
    table: dict = {}
    for run in runs:
        if isinstance(run, dict):
            problem, alg, repeat, val = (run[k] for k in ("problem", "algorithm", "repeat", "true_fitness"))
        else:
            problem, alg, repeat, val = run.label, run.algorithm, run.repeat, run.true_fitness
        val = float(val)
        if not math.isfinite(val):
            continue
        table.setdefault(problem, {}).setdefault(alg, {})[int(repeat)] = val
    if algorithms is None:
        algorithms = sorted({alg for row in table.values() for alg in row})
    cells, missing = [], []
    for problem in sorted(table, key=_problem_key):
        row = table[problem]
        ref = row.get(reference, {})
        row_cells = []
        for alg in algorithms:
            vals = row.get(alg, {})
            if len(vals) < 2:
                missing.append((problem, alg))
                continue
            v = np.array([vals[k] for k in sorted(vals)])
            cell = ComparisonCell(problem, alg, v.size, float(np.mean(v)), float(np.std(v, ddof=1)),
                                  float(np.median(v)))
            if alg != reference and len(ref) >= 2:
                common = sorted(set(ref) & set(vals))
                if common:
                    cell.verdict, res = verdict([ref[k] for k in common], [vals[k] for k in common], alpha)
                    cell.p_value = res.p_value
            row_cells.append(cell)
        if row_cells:
            min(row_cells, key=lambda c: c.mean).best = True
        cells.extend(row_cells)
    return cells, missing


def _problem_key(label: str):
    name, _, dim = label.rpartition("-")
    try:
        return (name, int(dim.rstrip("d")))
    except ValueError:
        return (label, 0)


def tally(cells: Sequence[ComparisonCell]) -> dict:
    """Per-algorithm counts of '+', '≈', '-' verdicts."""
    out: dict = {}
    for c in cells:
        if c.verdict in ("+", "≈", "-"):
            out.setdefault(c.algorithm, {"+": 0, "≈": 0, "-": 0})[c.verdict] += 1
    return out


CSV_FIELDS = ("problem", "algorithm", "n", "mean", "std", "median", "verdict", "p_value", "best")


def to_csv(cells: Sequence[ComparisonCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for c in cells:
        writer.writerow([c.problem, c.algorithm, c.n, f"{c.mean:.17g}", f"{c.std:.17g}",
                         f"{c.median:.17g}", c.verdict, f"{c.p_value:.17g}", int(c.best)])
    return buf.getvalue()


def render_text(cells: Sequence[ComparisonCell], reference: str) -> str:
    """Aligned mean +/- std table, one row per problem, verdicts in brackets."""
    algorithms = list(dict.fromkeys(c.algorithm for c in cells))
    problems = list(dict.fromkeys(c.problem for c in cells))
    lookup = {(c.problem, c.algorithm): c for c in cells}
    header = ["problem"] + algorithms
    rows = []
    for p in problems:
        row = [p]
        for alg in algorithms:
            c = lookup.get((p, alg))
            if c is None:
                row.append("missing")
                continue
            text = f"{c.mean:.3g} ± {c.std:.2g}"
            if c.verdict != "NA":
                text += f" ({c.verdict})"
            if c.best:
                text = "*" + text
            row.append(text)
        rows.append(row)
    counts = tally(cells)
    rows.append(["+/≈/-"] + [
        "NA" if alg == reference or alg not in counts
        else "{}/{}/{}".format(counts[alg]["+"], counts[alg]["≈"], counts[alg]["-"])
        for alg in algorithms
    ])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    lines.append(f"reference: {reference}; '+' reference significantly better (Wilcoxon, alpha={ALPHA}); * best mean")
    return "\n".join(lines) + "\n"
