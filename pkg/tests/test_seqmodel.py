import numpy as np
import pytest

from adaptci.seqmodel import (
    ConfidenceLevel,
    LinearFunctional,
    SequenceModel,
    coordinate_functional,
    derive_replicate_seed,
    evaluate,
    point_eval_functional,
    sample,
    sum_functional,
)


def test_model_invariant():
    m = SequenceModel.from_n(5, 100.0)
    assert abs(m.sigma * np.sqrt(m.n) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        SequenceModel(d=0, n=100.0, sigma=0.1)
    with pytest.raises(ValueError):
        SequenceModel(d=5, n=100.0, sigma=0.2)


def test_zero_noise_sample_is_identity():
    m = SequenceModel.noiseless(3)
    obs = sample(m, np.array([1.0, 2.0, 3.0]), seed=7)
    assert obs.vector.tolist() == [1.0, 2.0, 3.0]


def test_sample_determinism_and_dimension_check():
    m = SequenceModel.from_n(4, 50.0)
    f = np.array([0.0, 1.0, -1.0, 2.0])
    a = sample(m, f, seed=123)
    b = sample(m, f, seed=123)
    assert a.vector.tolist() == b.vector.tolist()
    c = sample(m, f, seed=124)
    assert a.vector.tolist() != c.vector.tolist()
    with pytest.raises(ValueError):
        sample(m, np.zeros(3), seed=1)


def test_noise_moments_over_replicates():
    # d=1, sigma=1 model: mean within 3/sqrt(R) of 0, variance within 5% of 1
    m = SequenceModel.from_n(1, 1.0)
    R = 10 ** 5
    master = 20240311
    draws = np.empty(R)
    f = np.zeros(1)
    for r in range(R):
        draws[r] = sample(m, f, derive_replicate_seed(master, r)).vector[0]
    assert abs(draws.mean()) < 3.0 / np.sqrt(R)
    assert abs(draws.var() - 1.0) < 0.05


def test_evaluate_inner_product():
    w = LinearFunctional((1.0, 1.0))
    assert evaluate(w, np.array([2.0, 3.0])) == 5.0
    e1 = coordinate_functional(4, 1)
    assert evaluate(e1, np.array([7.0, 1.0, 2.0, 3.0])) == 7.0
    d = 100
    w = sum_functional(d)
    f = np.zeros(d)
    f[:2] = 0.5
    assert evaluate(w, f) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evaluate(w, np.zeros(3))


def test_point_eval_functional_grid_convention():
    # odd d: the grid contains 0 exactly
    w = point_eval_functional(201)
    v = w.vector
    assert np.count_nonzero(v) == 1
    assert v[100] == pytest.approx(np.sqrt(201.0))
    # even d: tie between the two middle points resolves to the lower index
    w = point_eval_functional(10)
    assert np.flatnonzero(w.vector)[0] == 4


def test_confidence_level_quantiles():
    lvl = ConfidenceLevel.make(0.05)
    # independent oracle: bisection on the erf-based normal CDF
    from math import erf, sqrt

    def phi(x):
        return 0.5 * (1.0 + erf(x / sqrt(2.0)))

    lo, hi = 0.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0.95:
            lo = mid
        else:
            hi = mid
    assert abs(lvl.z_alpha - 0.5 * (lo + hi)) < 1e-10
    assert lvl.z_alpha_half > lvl.z_alpha > 0
    with pytest.raises(ValueError):
        ConfidenceLevel.make(0.5)


def test_seed_derivation_distinct_and_deterministic():
    master = 987654321
    seeds = {derive_replicate_seed(master, i) for i in range(10 ** 4)}
    assert len(seeds) == 10 ** 4
    assert derive_replicate_seed(master, 3) == derive_replicate_seed(master, 3)
    rng = np.random.default_rng(5)
    for m in rng.integers(0, 2 ** 63, size=10 ** 4):
        assert derive_replicate_seed(int(m), 0) != derive_replicate_seed(int(m), 1)
