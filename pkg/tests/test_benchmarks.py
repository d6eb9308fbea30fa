import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from icn_saea.benchmarks import PROBLEMS, ProblemSpec, evaluate, evaluate_batch
from icn_saea.errors import ContractError


@pytest.mark.parametrize("d", [1, 2, 10, 30])
def test_known_optima(d):
    for name in PROBLEMS:
        p = ProblemSpec(name, d)
        if name == "Rosenbrock" and d == 1:
            continue
        assert evaluate(p, p.optimum) == pytest.approx(0.0, abs=1e-12)


def test_ellipsoid_value():
    assert evaluate(ProblemSpec("Ellipsoid", 3), [0.5, 0.5, 0.5]) == pytest.approx(1.5, rel=1e-15)


def test_rastrigin_value():
    assert evaluate(ProblemSpec("Rastrigin", 2), [0.5, 0.5]) == pytest.approx(40.5, rel=1e-15)


def test_rosenbrock_variants():
    x = np.array([0.2, 0.7, 0.1])
    canon = sum(100 * (x[i + 1] - x[i] ** 2) ** 2 + (1 - x[i]) ** 2 for i in range(2))
    literal = sum((1 - x[i]) ** 2 + 100 * (x[i + 1] - x[i] ** 2) for i in range(2))
    assert evaluate(ProblemSpec("Rosenbrock", 3), x) == pytest.approx(canon, rel=1e-14)
    assert evaluate(ProblemSpec("Rosenbrock", 3, "literal"), x) == pytest.approx(literal, rel=1e-14)
    assert evaluate(ProblemSpec("Rosenbrock", 2, "literal"), [1.0, 0.0]) == pytest.approx(-100.0)


def test_griewank_and_ackley_direct():
    x = np.array([0.3, 0.9])
    g = 1 + np.sum(x**2) / 4000 - np.cos(0.3 / 1) * np.cos(0.9 / np.sqrt(2))
    a = -20 * np.exp(-0.2 * np.sqrt(np.mean(x**2))) - np.exp(np.mean(np.cos(2 * np.pi * x))) + 20 + np.e
    assert evaluate(ProblemSpec("Griewank", 2), x) == pytest.approx(g, rel=1e-14)
    assert evaluate(ProblemSpec("Ackley", 2), x) == pytest.approx(a, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12).flatmap(lambda d: arrays(np.float64, d, elements=st.floats(0, 1))))
def test_nonnegative_on_box(x):
    for name in PROBLEMS:
        if name == "Rosenbrock" and x.size < 2:
            continue
        assert evaluate(ProblemSpec(name, x.size), x) >= 0.0


def test_batch_matches_single():
    p = ProblemSpec("Rastrigin", 5)
    pts = np.random.default_rng(0).random((7, 5))
    np.testing.assert_array_equal(evaluate_batch(p, pts), [evaluate(p, q) for q in pts])


def test_pure():
    p = ProblemSpec("Griewank", 4)
    x = np.random.default_rng(1).random(4)
    before = x.copy()
    assert evaluate(p, x) == evaluate(p, x)
    np.testing.assert_array_equal(x, before)


@pytest.mark.parametrize("bad", [[-0.1, 0.5], [0.5, 1.0000001], [np.nan, 0.2]])
def test_out_of_bounds(bad):
    with pytest.raises(ContractError):
        evaluate(ProblemSpec("Ellipsoid", 2), bad)


def test_wrong_length_and_names():
    with pytest.raises(ContractError):
        evaluate(ProblemSpec("Ellipsoid", 3), [0.1, 0.2])
    with pytest.raises(ContractError):
        ProblemSpec("Sphere", 3)
    assert ProblemSpec("rastrigin", 10).label == "Rastrigin-10d"
    with pytest.raises(ContractError):
        ProblemSpec("Ackley", 3, "literal")


def test_bounds_are_unit_box():
    p = ProblemSpec("Ackley", 4)
    np.testing.assert_array_equal(p.lower, 0.0)
    np.testing.assert_array_equal(p.upper, 1.0)
