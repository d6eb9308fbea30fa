"""Command line entry point: ``icn-saea {run,single-run,report,knowledge-demo}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchmarks, results, stats
from .benchmarks import ProblemSpec
from .config import ConfigError, ExperimentConfig, load_config
from .errors import ContractError, TrainingDiverged
from .icn import IcnConfig
from .knowledge import strong_rosenbrock_terms, train_augmented, weak_rosenbrock_terms
from .pipeline import RunResult, run_offline, run_seed
from .sampling import lhs

log = logging.getLogger("icn_saea")


def execute(cfg: ExperimentConfig, problem: ProblemSpec, algorithm: str, repeat: int) -> RunResult:
    """One grid cell, reproducible from (config, master seed, repeat)."""
    seed = run_seed(cfg.master_seed, problem.label, problem.dim, repeat)
    res = run_offline(problem, algorithm, cfg.icn, cfg.ea, seed, cfg.knowledge,
                      cfg.ensemble_size, cfg.n_offline)
    res.master_seed = cfg.master_seed
    res.repeat = repeat
    return res


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "jobs", None):
        cfg.jobs = args.jobs
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg.output_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps(), encoding="utf-8")
    runs_csv = out / "runs.csv"

    lines: dict = {}
    if runs_csv.exists():
        rows, bad = results.read_runs(runs_csv)
        for msg in bad:
            log.warning("runs.csv %s (will be recomputed)", msg)
        for row in rows:
            lines[results.run_key(row["problem"], row["algorithm"], row["repeat"])] = row["_line"]

    todo = [(p, a, r) for p, a, r in cfg.grid() if results.run_key(p.label, a, r) not in lines]
    grid_keys = [results.run_key(p.label, a, r) for p, a, r in cfg.grid()]
    log.info("%d runs in grid, %d to run", len(grid_keys), len(todo))

    with open(runs_csv, "a", encoding="utf-8") as fh:
        if fh.tell() == 0:
            fh.write(results.header())

        def record(res: RunResult):
            # the single writer: only the dispatching process touches the files
            results.write_json(out / "runs" / results.json_name(results.label_of(res), res.kind, res.repeat), res)
            line = results.csv_row(res)
            fh.write(line)
            fh.flush()
            lines[results.run_key(results.label_of(res), res.kind, res.repeat)] = line
            status = f"true={res.true_fitness:.4g}" if res.status == "ok" else f"FAILED {res.error}"
            log.info("%s %s r%d %s", results.label_of(res), res.kind, res.repeat, status)

        if cfg.jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                futures = [pool.submit(execute, cfg, p, a, r) for p, a, r in todo]
                for fut in as_completed(futures):
                    record(fut.result())
        else:
            for p, a, r in todo:
                record(execute(cfg, p, a, r))

    # rewrite in canonical grid order so the file does not depend on completion order
    ordered = [lines[k] for k in grid_keys if k in lines]
    extra = [v for k, v in lines.items() if k not in set(grid_keys)]
    runs_csv.write_text(results.header() + "".join(ordered + extra), encoding="utf-8")
    return _report(out, cfg.reference, cfg.algorithms)


def cmd_single_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    label = args.problem
    problem = next((p for p in cfg.problems if p.label == label), None)
    if problem is None:
        raise ConfigError(f"problem {label!r} not in config; known: {[p.label for p in cfg.problems]}")
    if args.algorithm not in cfg.algorithms:
        raise ConfigError(f"algorithm {args.algorithm!r} not in config")
    res = execute(cfg, problem, args.algorithm, args.repeat)
    sys.stdout.write(results.header() + results.csv_row(res))
    if args.json:
        results.write_json(args.json, res)
    return 0 if res.status == "ok" else 1


def _timing_report(out: Path, rows: list[dict]) -> str:
    phases: dict = {}
    for row in rows:
        path = out / "runs" / results.json_name(row["problem"], row["algorithm"], row["repeat"])
        if not path.exists():
            continue
        res = results.read_json(path)
        key = (row["problem"], row["algorithm"])
        for phase, secs in res.times.items():
            phases.setdefault(key, {}).setdefault(phase, []).append(secs)
    lines = [f"{'problem':<22}{'algorithm':<16}{'runs':>5}{'build s':>12}{'evolve s':>12}"]
    for (problem, alg), ph in sorted(phases.items()):
        n = len(ph.get("build", []))
        build = np.mean(ph["build"]) if ph.get("build") else float("nan")
        evo = np.mean(ph["evolve"]) if ph.get("evolve") else float("nan")
        lines.append(f"{problem:<22}{alg:<16}{n:>5}{build:>12.4f}{evo:>12.4f}")
    return "\n".join(lines) + "\n"


def _report(out: Path, reference: str | None = None, algorithms=None) -> int:
    runs_csv = out / "runs.csv"
    if not runs_csv.exists():
        log.error("no runs: %s does not exist", runs_csv)
        return 2
    rows, bad = results.read_runs(runs_csv)
    for msg in bad:
        log.warning("runs.csv %s: excluded", msg)
    if not rows:
        log.error("no runs in %s", runs_csv)
        return 2
    if algorithms is None:
        algorithms = list(dict.fromkeys(r["algorithm"] for r in rows))
    if reference is None:
        reference = "icn" if "icn" in algorithms else algorithms[0]
    ok = [r for r in rows if r["status"] == "ok"]
    for r in rows:
        if r["status"] != "ok":
            log.warning("failed run excluded: %s %s r%d", r["problem"], r["algorithm"], r["repeat"])
    cells, missing = stats.summarize(ok, reference, algorithms)
    for problem, alg in missing:
        log.warning("missing cell: %s %s (fewer than 2 completed runs)", problem, alg)
    (out / "summary.csv").write_text(stats.to_csv(cells), encoding="utf-8")
    text = stats.render_text(cells, reference)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    timing = _timing_report(out, rows)
    (out / "timing.txt").write_text(timing, encoding="utf-8")
    sys.stdout.write(text + "\n" + timing)
    return 0


def cmd_report(args) -> int:
    out = Path(args.results)
    reference = None
    algorithms = None
    cfg_path = out / "config.json"
    if cfg_path.exists():
        cfg = load_config(cfg_path)
        reference, algorithms = cfg.reference, cfg.algorithms
    return _report(out, args.reference or reference, algorithms)


def knowledge_demo(d: int, seeds, out: Path, cfg: IcnConfig | None = None,
                   variant: str = "canonical") -> dict:
    """Train none/weak/strong variants on Rosenbrock and write loss curves.

    Each seed draws 11*d LHS points; the last d are held out for testing.
    Returns the final train RMSE per variant, one entry per seed.
    """
    if d < 2:
        raise ContractError("knowledge demo needs d >= 2")
    cfg = cfg or IcnConfig()
    problem = ProblemSpec("Rosenbrock", d, variant)
    variants = {"none": [], "weak": weak_rosenbrock_terms(d), "strong": strong_rosenbrock_terms(d)}
    finals = {k: [] for k in variants}
    out.mkdir(parents=True, exist_ok=True)
    writers = {}
    files = {k: open(out / f"loss_{k}.csv", "w", encoding="utf-8", newline="") for k in variants}
    try:
        for k, fh in files.items():
            writers[k] = csv.writer(fh, lineterminator="\n")
            writers[k].writerow(["seed", "iteration", "train_rmse", "test_rmse"])
        for seed in seeds:
            x = lhs(11 * d, d, seed).points
            y = benchmarks.evaluate_batch(problem, x)
            xtr, ytr, xte, yte = x[: 10 * d], y[: 10 * d], x[10 * d:], y[10 * d:]
            for name, terms in variants.items():
                _, res = train_augmented(xtr, ytr, replace(cfg, seed=seed), terms, test=(xte, yte))
                for it, (tr, te) in enumerate(zip(res.curve, res.test_curve)):
                    writers[name].writerow([seed, it, f"{tr:.17g}", f"{te:.17g}"])
                finals[name].append(float(res.curve[-1]))
    finally:
        for fh in files.values():
            fh.close()
    return finals


def cmd_knowledge_demo(args) -> int:
    cfg = IcnConfig(mask_padding=not args.no_mask, iterations=args.iterations,
                    kernel_side=args.kernel_side)
    finals = knowledge_demo(args.dim, range(args.seeds), Path(args.out), cfg, args.variant)
    for name, vals in finals.items():
        print(f"{name:<7} median final train RMSE {np.median(vals):.4g} over {len(vals)} seed(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icn-saea", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every problem x algorithm x repeat in a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--jobs", type=int, help="concurrent runs")
    p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("single-run", help="reproduce one run and print its runs.csv row")
    p.add_argument("--config", required=True)
    p.add_argument("--problem", required=True, help="problem label, e.g. Ellipsoid-10d")
    p.add_argument("--algorithm", required=True)
    p.add_argument("--repeat", type=int, required=True)
    p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    p.add_argument("--json", help="also write the full run document here")
    p.set_defaults(func=cmd_single_run)

    p = sub.add_parser("report", help="rebuild summary and timing tables from a results dir")
    p.add_argument("results", nargs="?", default=None)
    p.add_argument("--out", dest="results_flag", help="results directory")
    p.add_argument("--reference")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("knowledge-demo", help="loss curves with no / weak / strong Rosenbrock knowledge")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (0..n-1)")
    p.add_argument("--out", default="knowledge")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--kernel-side", type=int, default=1)
    p.add_argument("--variant", choices=benchmarks.ROSENBROCK_VARIANTS, default="canonical")
    p.add_argument("--no-mask", action="store_true", help="count padding pixels in the loss")
    p.set_defaults(func=cmd_knowledge_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.command == "report":
        args.results = args.results or args.results_flag
        if not args.results:
            parser.error("report needs a results directory")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except (ContractError, TrainingDiverged) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
