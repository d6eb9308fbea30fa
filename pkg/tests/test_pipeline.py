import json

import numpy as np
import pytest

from icn_saea.benchmarks import ProblemSpec
from icn_saea.errors import ContractError
from icn_saea.evolution import EaConfig
from icn_saea.icn import IcnConfig
from icn_saea.pipeline import SURROGATE_KINDS, CountingObjective, RunResult, run_offline, run_seed

SMALL_ICN = IcnConfig(iterations=30)
SMALL_EA = EaConfig(generations=15)


def small_run(kind, problem=ProblemSpec("Rosenbrock", 3), seed=0, **kw):
    kw.setdefault("knowledge", ["strong-rosenbrock"] if kind == "icn+knowledge" else [])
    return run_offline(problem, kind, SMALL_ICN, SMALL_EA, seed, ensemble_size=4, **kw)


@pytest.mark.parametrize("kind", SURROGATE_KINDS)
def test_offline_purity(kind):
    counter = CountingObjective(ProblemSpec("Rosenbrock", 3))
    res = small_run(kind, objective=counter)
    assert res.status == "ok"
    assert counter.calls == res.true_calls == res.n_offline + 1 == 34


@pytest.mark.parametrize("kind", SURROGATE_KINDS)
def test_deterministic(kind):
    a, b = small_run(kind, seed=7), small_run(kind, seed=7)
    da, db = a.to_dict(), b.to_dict()
    da.pop("times"), db.pop("times")
    assert da == db


def test_result_fields():
    res = small_run("icn")
    assert len(res.best) == 3 and all(0 <= v <= 1 for v in res.best)
    assert len(res.loss_curve) == 30 and len(res.history) == 16
    assert res.surrogate_fitness == res.history[-1]
    assert set(res.times) == {"sample", "build", "evolve"}
    assert res.label == "Rosenbrock-3d" and res.algorithm == "icn"


def test_serialization_lossless():
    res = small_run("rbfn", seed=3)
    back = RunResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert back == res


class RecordingObjective(CountingObjective):
    def __init__(self, problem):
        super().__init__(problem)
        self.seen = []

    def __call__(self, points):
        self.seen.append(np.array(points, copy=True))
        return super().__call__(points)


def test_algorithms_share_offline_data():
    p = ProblemSpec("Ellipsoid", 2)
    icn, rbfn = RecordingObjective(p), RecordingObjective(p)
    run_offline(p, "icn", SMALL_ICN, SMALL_EA, seed=5, objective=icn)
    run_offline(p, "rbfn", SMALL_ICN, SMALL_EA, seed=5, objective=rbfn)
    np.testing.assert_array_equal(icn.seen[0], rbfn.seen[0])


def test_divergence_recorded():
    cfg = IcnConfig(learn_rate=1e100, iterations=20)
    res = run_offline(ProblemSpec("Ellipsoid", 3), "icn", cfg, SMALL_EA, seed=0)
    assert res.status == "failed"
    assert res.error.startswith("build:")
    assert np.isnan(res.true_fitness)
    assert res.true_calls == res.n_offline


def test_unknown_kind():
    with pytest.raises(ContractError):
        run_offline(ProblemSpec("Ellipsoid", 3), "gp")


def test_knowledge_kind_needs_terms():
    with pytest.raises(ContractError):
        run_offline(ProblemSpec("Rosenbrock", 3), "icn+knowledge")


def test_run_seed():
    s = run_seed(0, "Ellipsoid-10d", 10, 0)
    assert s == run_seed(0, "Ellipsoid-10d", 10, 0)
    assert len({s, run_seed(1, "Ellipsoid-10d", 10, 0), run_seed(0, "Ellipsoid-10d", 10, 1),
                run_seed(0, "Rastrigin-10d", 10, 0)}) == 4
    assert 0 <= s < 2**63


def test_ellipsoid_icn_full_scale():
    res = run_offline(ProblemSpec("Ellipsoid", 10), "icn", seed=run_seed(0, "Ellipsoid-10d", 10, 0))
    assert res.status == "ok" and res.true_fitness < 1.0


def test_ellipsoid_rbfn_band():
    vals = [run_offline(ProblemSpec("Ellipsoid", 10), "rbfn", seed=s).true_fitness for s in range(5)]
    assert 0.3 <= np.median(vals) <= 3.0
