"""Experiment configuration: a JSON document validated before anything runs.

Keys map onto the cost symbols used when comparing the algorithms:
``n_offline`` is N_INI (default 11*d), ``ensemble_size`` is M for the
ensemble baseline, ``icn.channels`` is K, ``icn.kernel_side`` is L,
``ea.generations`` is G and ``ea.pop_size`` is Q.  The RBFN center count C
is always ceil(sqrt(N_INI)).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .benchmarks import ProblemSpec
from .errors import ContractError
from .evolution import EaConfig
from .icn import IcnConfig
from .knowledge import resolve_terms
from .pipeline import SURROGATE_KINDS

TOP_KEYS = ("problems", "algorithms", "reference", "repeats", "master_seed", "output_dir",
            "jobs", "n_offline", "ensemble_size", "icn", "ea", "knowledge")
PROBLEM_KEYS = ("name", "dim", "variant")


class ConfigError(ContractError):
    def __init__(self, message: str, line: int | None = None, source: str = "config"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass
class ExperimentConfig:
    problems: list = field(default_factory=lambda: [ProblemSpec("Ellipsoid", 10)])
    algorithms: list = field(default_factory=lambda: ["icn", "rbfn", "rbfn-ensemble"])
    reference: str = "icn"
    repeats: int = 20
    master_seed: int = 0
    output_dir: str = "results"
    jobs: int = 1
    n_offline: int | None = None
    ensemble_size: int = 50
    icn: IcnConfig = field(default_factory=IcnConfig)
    ea: EaConfig = field(default_factory=EaConfig)
    knowledge: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "problems": [{"name": p.name, "dim": p.dim, "variant": p.variant} for p in self.problems],
            "algorithms": list(self.algorithms),
            "reference": self.reference,
            "repeats": self.repeats,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "jobs": self.jobs,
            "n_offline": self.n_offline,
            "ensemble_size": self.ensemble_size,
            "icn": self.icn.to_dict(),
            "ea": self.ea.to_dict(),
            "knowledge": [k if isinstance(k, str) else dict(k) for k in self.knowledge],
        }

    def dumps(self) -> str:
        """Canonical form: fixed key order, two-space indent."""
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def grid(self):
        """(problem, algorithm, repeat) in canonical order."""
        for p in self.problems:
            for alg in self.algorithms:
                for r in range(self.repeats):
                    yield p, alg, r


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str, source: str = "config") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, source) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", 1, source)

    def fail(msg, key):
        raise ConfigError(msg, _line_of(text, key), source)

    def check_keys(obj, allowed, where):
        for key in obj:
            if key not in allowed:
                fail(f"unknown key {key!r} in {where}", key)

    check_keys(raw, TOP_KEYS, "experiment")
    cfg = ExperimentConfig()
    try:
        if "problems" in raw:
            if not isinstance(raw["problems"], list) or not raw["problems"]:
                fail("problems must be a non-empty list", "problems")
            problems = []
            for entry in raw["problems"]:
                if not isinstance(entry, dict):
                    fail("each problem must be an object with name and dim", "problems")
                check_keys(entry, PROBLEM_KEYS, "problem")
                if "name" not in entry or "dim" not in entry:
                    fail("each problem needs name and dim", "problems")
                problems.append(ProblemSpec(entry["name"], entry["dim"], entry.get("variant", "canonical")))
            cfg.problems = problems
        if "algorithms" in raw:
            algs = raw["algorithms"]
            if not isinstance(algs, list) or not algs:
                fail("algorithms must be a non-empty list", "algorithms")
            for a in algs:
                if a not in SURROGATE_KINDS:
                    fail(f"unknown algorithm {a!r}; expected one of {list(SURROGATE_KINDS)}", "algorithms")
            if len(set(algs)) != len(algs):
                fail("algorithms must be distinct", "algorithms")
            cfg.algorithms = list(algs)
        for key in ("repeats", "master_seed", "jobs", "ensemble_size", "n_offline"):
            if key in raw:
                val = raw[key]
                if key == "n_offline" and val is None:
                    continue
                if not isinstance(val, int) or isinstance(val, bool) or val < (0 if key == "master_seed" else 1):
                    fail(f"{key} must be a {'non-negative' if key == 'master_seed' else 'positive'} integer", key)
                setattr(cfg, key, val)
        for key in ("reference", "output_dir"):
            if key in raw:
                if not isinstance(raw[key], str) or not raw[key]:
                    fail(f"{key} must be a non-empty string", key)
                setattr(cfg, key, raw[key])
        if "icn" in raw:
            if not isinstance(raw["icn"], dict):
                fail("icn must be an object", "icn")
            check_keys(raw["icn"], IcnConfig.__dataclass_fields__, "icn")
            cfg.icn = IcnConfig.from_dict(raw["icn"])
        if "ea" in raw:
            if not isinstance(raw["ea"], dict):
                fail("ea must be an object", "ea")
            check_keys(raw["ea"], EaConfig.__dataclass_fields__, "ea")
            cfg.ea = EaConfig.from_dict(raw["ea"])
        if "knowledge" in raw:
            if not isinstance(raw["knowledge"], list):
                fail("knowledge must be a list", "knowledge")
            cfg.knowledge = raw["knowledge"]
    except ConfigError:
        raise
    except (ContractError, TypeError, ValueError) as exc:
        key = next((k for k in reversed(list(raw)) if k in str(exc)), None) or next(iter(raw), "")
        raise ConfigError(str(exc), _line_of(text, key), source) from None

    if cfg.reference not in cfg.algorithms:
        fail(f"reference {cfg.reference!r} is not among the algorithms", "reference")
    if "icn+knowledge" in cfg.algorithms:
        if not cfg.knowledge:
            fail("icn+knowledge needs a non-empty knowledge list", "algorithms")
    for p in cfg.problems:
        try:
            resolve_terms(cfg.knowledge, p.dim)
        except ContractError as exc:
            fail(f"{p.label}: {exc}", "knowledge")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
