import numpy as np
import pytest

from adaptci.projections import pava_nonincreasing
from adaptci.spaces import (
    UnsupportedHullError,
    grid_points,
    hull,
    make_box,
    make_full_space,
    make_lipschitz,
    make_monotone_lipschitz,
    make_piecewise_lipschitz,
    make_sparse_subspace,
)

D = 41


def catalog(d=D):
    return [
        make_lipschitz(1.0, 1.0, -0.5, 0.5, d),
        make_lipschitz(0.6, 2.0, -0.5, 0.5, d),
        make_lipschitz(1.0, 1.5, -0.25, 0.4, d),
        make_monotone_lipschitz(1.0, 1.0, d),
        make_monotone_lipschitz(0.5, 1.0, d),
        make_piecewise_lipschitz(1.0, 1.0, 0.5, 1.0, d, monotone=False),
        make_piecewise_lipschitz(0.8, 1.0, 0.4, 1.0, d, monotone=True),
        make_sparse_subspace([1, 2, 5], d),
        make_box(2.0, d),
        make_full_space(d),
    ]


def embed(oracle, func):
    t, delta = grid_points(oracle.dim)
    return np.sqrt(delta) * func(t)


def test_pava_nonincreasing_against_qp_oracle():
    from scipy.optimize import minimize

    rng = np.random.default_rng(0)
    for _ in range(20):
        y = rng.standard_normal(10)
        p = pava_nonincreasing(y)
        assert np.all(np.diff(p) <= 1e-12)
        cons = [{"type": "ineq", "fun": (lambda x, i=i: x[i] - x[i + 1])}
                for i in range(9)]
        ref = minimize(lambda x: ((x - y) ** 2).sum(), y, constraints=cons,
                       method="SLSQP", options={"maxiter": 400, "ftol": 1e-14})
        assert ((p - y) ** 2).sum() <= ((ref.x - y) ** 2).sum() + 1e-8


@pytest.mark.parametrize("idx", range(10))
def test_projection_scan_feasible_idempotent_contractive(idx):
    oracle = catalog()[idx]
    rng = np.random.default_rng(100 + idx)
    for _ in range(100):
        x = rng.standard_normal(oracle.dim) * rng.choice([0.1, 1.0, 3.0])
        p = oracle.project(x)
        assert oracle.contains(p, tol=1e-6)
        p2 = oracle.project(p)
        assert np.linalg.norm(p2 - p) < 1e-6
    for _ in range(25):
        x = rng.standard_normal(oracle.dim)
        y = rng.standard_normal(oracle.dim)
        lhs = np.linalg.norm(oracle.project(x) - oracle.project(y))
        assert lhs <= np.linalg.norm(x - y) + 1e-7


def test_projection_fixes_members():
    oracle = make_monotone_lipschitz(1.0, 1.0, D)
    x = embed(oracle, lambda t: -0.5 * t + 0.2)
    assert oracle.contains(x, tol=0.0)
    assert np.linalg.norm(oracle.project(x) - x) < 1e-9


def test_lipschitz_membership_boundary():
    oracle = make_lipschitz(1.0, 1.0, -0.5, 0.5, D)
    for c in (-3.0, 0.0, 7.5):
        x = embed(oracle, lambda t: np.full_like(t, c))
        assert oracle.contains(x, tol=0.0)
    ramp = embed(oracle, lambda t: 1.0 * t)
    assert oracle.contains(ramp, tol=1e-12)
    steep = embed(oracle, lambda t: 1.1 * t)
    assert not oracle.contains(steep, tol=1e-9)
    proj = oracle.project(steep)
    assert np.linalg.norm(proj - steep) > 0
    assert oracle.contains(proj, tol=1e-8)


def test_lipschitz_beta1_adjacent_equals_all_pairs():
    oracle = make_lipschitz(1.0, 1.3, -0.5, 0.5, D)
    rng = np.random.default_rng(3)
    t, delta = grid_points(D)
    cap = np.sqrt(delta) * 1.3 * delta
    for _ in range(200):
        x = rng.standard_normal(D) * 0.05
        adjacent_ok = np.all(np.abs(np.diff(x)) <= cap + 1e-12)
        assert adjacent_ok == oracle.contains(x, tol=1e-12)


def test_monotone_lipschitz_projection_is_monotone():
    oracle = make_monotone_lipschitz(1.0, 1.0, D)
    ramp = embed(oracle, lambda t: 0.8 * t)  # increasing, infeasible
    p = oracle.project(ramp)
    assert np.all(np.diff(p) <= 1e-9)
    dec = embed(oracle, lambda t: -1.0 * t)
    assert oracle.contains(dec, tol=1e-12)


def test_piecewise_membership_locality():
    oracle = make_piecewise_lipschitz(1.0, 1.0, 0.5, 1.0, D, monotone=False)
    t, delta = grid_points(D)
    zero = np.zeros(D)
    assert oracle.contains(zero, tol=0.0)
    # obeys the left class, violates the right one
    f = np.where(t <= 0, 0.0, np.sign(t) * 3.0 * np.abs(t) ** 0.5)
    x = np.sqrt(delta) * f
    assert not oracle.contains(x, tol=1e-9)
    left_only = np.sqrt(delta) * np.where(t <= 0, 0.9 * t, 0.0)
    assert oracle.contains(left_only, tol=1e-12)


def test_sparse_subspace_projection():
    d = 10
    oracle = make_sparse_subspace([1, 2], d)
    x = np.ones(d)
    p = oracle.project(x)
    assert p.tolist() == [1.0, 1.0] + [0.0] * 8
    y = np.zeros(d)
    y[0] = 3.0
    assert np.array_equal(oracle.project(y), y)
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = rng.standard_normal(d)
        p = oracle.project(x)
        assert np.linalg.norm(x - p) ** 2 == pytest.approx(
            float((x[2:] ** 2).sum()), abs=1e-12)
    with pytest.raises(ValueError):
        make_sparse_subspace([], d)


def test_hull_table():
    d = 12
    # nested monotone Lipschitz chain -> outermost member
    chain = [make_monotone_lipschitz(1.0, m, d) for m in (1.0, 2.0, 8.0)]
    h = hull(chain)
    assert h.descriptor.get("M") == 8.0
    # all m-subsets of coordinates -> full space
    from itertools import combinations
    fam = [make_sparse_subspace(list(c), 5) for c in combinations(range(1, 6), 2)]
    h = hull(fam)
    assert h.descriptor.kind == "full_space"
    # partial sparse union -> union-support subspace
    h = hull([make_sparse_subspace([1, 2], 8), make_sparse_subspace([2, 3], 8)])
    assert h.descriptor.kind == "sparse_subspace"
    assert h.descriptor.get("I") == (1, 2, 3)
    # unsupported family
    with pytest.raises(UnsupportedHullError):
        hull([make_box(1.0, d), make_monotone_lipschitz(1.0, 1.0, d)])
