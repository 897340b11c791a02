"""Catalog of convex parameter spaces exposed as projection oracles.

Function classes live on a uniform grid of ``d`` midpoints of [-1/2, 1/2]
with spacing ``delta = 1/d``; vectors store ``x_i = sqrt(delta) * f(t_i)`` so
the coordinate l2 norm matches the L2 function norm.  Sparse-mean classes use
raw coordinates (no grid scaling).

Each oracle is immutable and assembled from elementary sets with exact
projections (see :mod:`adaptci.projections`); projections onto intersections
run Dykstra's algorithm.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .projections import (
    BoxAbs,
    CoordinateSubspace,
    FullSpace,
    NonincreasingCone,
    PairBandGroup,
    dykstra,
)


class UnsupportedHullError(ValueError):
    """Raised when a family has no closed-form convex hull in the catalog."""


@dataclass(frozen=True)
class ClassDescriptor:
    """Structured identity of a catalog class: kind plus sorted parameters."""

    kind: str
    params: tuple

    def key(self):
        return (self.kind,) + self.params

    def to_dict(self):
        return {"kind": self.kind, **dict(self.params)}

    @staticmethod
    def make(kind, **params):
        items = tuple(sorted(params.items()))
        return ClassDescriptor(kind, items)

    def get(self, name, default=None):
        return dict(self.params).get(name, default)


def grid_points(d):
    """Midpoint grid t_i on [-1/2, 1/2] and its spacing."""
    delta = 1.0 / d
    t = -0.5 + (np.arange(d) + 0.5) * delta
    return t, delta


def grid_index_of_zero(d):
    """Index of the grid point nearest t = 0; ties go to the lower index."""
    t, _ = grid_points(d)
    dist = np.abs(t)
    best = np.min(dist)
    return int(np.where(dist <= best + 1e-15)[0][0])


class ConvexSetOracle:
    """A convex set seen through membership and Euclidean projection.

    Parameters
    ----------
    dim : int
        Ambient dimension.
    descriptor : ClassDescriptor
        Structured identity.
    sets : list
        Elementary sets whose intersection is the class.
    pair_constraints : tuple or None
        ``(idx_a, idx_b, caps)`` of the full pairwise constraint list, used
        for exhaustive membership checks; None when not applicable.
    recession : 'all', ndarray or None
        Orthonormal basis of known recession directions (directions along
        which the set is translation invariant); 'all' for the full space.
    closed_form_modulus : callable or None
        Optional hook ``(eps, other_descriptor) -> float`` for catalog pairs
        with a known modulus under the class's canonical functional.
    """

    def __init__(self, dim, descriptor, sets, pair_constraints=None,
                 recession=None, closed_form_modulus=None,
                 projection_tol=1e-10, max_sweeps=10000):
        self.dim = int(dim)
        self.descriptor = descriptor
        self.sets = list(sets)
        self.pair_constraints = pair_constraints
        self.recession = recession
        self.closed_form_modulus = closed_form_modulus
        self.projection_tol = float(projection_tol)
        self.max_sweeps = int(max_sweeps)

    def project(self, x, tol=None):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        tol = self.projection_tol if tol is None else float(tol)
        out, _ = dykstra(x, self.sets, tol=tol, max_sweeps=self.max_sweeps)
        return out

    def violation(self, x):
        """Worst constraint violation over the elementary sets."""
        x = np.asarray(x, dtype=float)
        return max(s.violation(x) for s in self.sets)

    def pairwise_violation(self, x):
        """Worst violation over the exhaustive pairwise constraint list."""
        if self.pair_constraints is None:
            return self.violation(x)
        ia, ib, caps = self.pair_constraints
        x = np.asarray(x, dtype=float)
        gaps = np.abs(x[ia] - x[ib]) - caps
        v = float(np.max(gaps, initial=0.0))
        extra = [s.violation(x) for s in self.sets
                 if not isinstance(s, PairBandGroup)]
        return max([v] + extra)

    def contains(self, x, tol=1e-9):
        return self.pairwise_violation(np.asarray(x, dtype=float)) <= tol

    def __repr__(self):
        return f"ConvexSetOracle({self.descriptor.kind}, dim={self.dim})"


def _offset_band_groups(indices, caps_for_offset):
    """Pair-band groups covering every pair of contiguous indices once.

    Round-robin tournament coloring: all n(n-1)/2 pairs are partitioned into
    n (n odd) or n-1 (n even) rounds of coordinate-disjoint pairs, so each
    round is a product set with an exact vectorized projection.
    """
    idx = np.asarray(indices, dtype=np.intp)
    n = idx.size
    caps = {k: caps_for_offset(k) for k in range(1, n)}
    m = n if n % 2 == 1 else n - 1   # circle size; n even adds a hub player
    groups = []
    for r in range(m):
        ia, ib, cc = [], [], []
        if n % 2 == 0:
            # hub pairs with the fixed player n-1
            a, b = sorted((r, n - 1))
            ia.append(a), ib.append(b), cc.append(caps[b - a])
        for s in range(1, (m + 1) // 2):
            a, b = (r - s) % m, (r + s) % m
            if a == b:
                continue
            a, b = sorted((a, b))
            ia.append(a), ib.append(b), cc.append(caps[b - a])
        if ia:
            groups.append(PairBandGroup(idx[np.asarray(ia)],
                                        idx[np.asarray(ib)],
                                        np.asarray(cc, dtype=float)))
    return groups


def _all_pairs(indices, caps_for_offset):
    idx = np.asarray(indices, dtype=np.intp)
    n = idx.size
    ia, ib, caps = [], [], []
    for k in range(1, n):
        cap = caps_for_offset(k)
        ia.append(idx[:n - k])
        ib.append(idx[k:])
        caps.append(np.full(n - k, cap))
    if not ia:
        return (np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0))
    return (np.concatenate(ia), np.concatenate(ib), np.concatenate(caps))


def _check_lipschitz_params(beta, M, a, b):
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if M <= 0:
        raise ValueError(f"M must be positive, got {M}")
    if not (-0.5 <= a < b <= 0.5):
        raise ValueError(f"need -1/2 <= a < b <= 1/2, got [{a}, {b}]")


def _interval_indices(t, a, b):
    return np.where((t >= a - 1e-12) & (t <= b + 1e-12))[0]


def _lipschitz_pieces(beta, M, a, b, d):
    """Elementary sets plus the exhaustive pair list for one Lipschitz piece."""
    t, delta = grid_points(d)
    idx = _interval_indices(t, a, b)
    if idx.size < 2:
        raise ValueError(f"interval [{a}, {b}] covers fewer than 2 of {d} grid points")
    caps_for_offset = lambda k: np.sqrt(delta) * M * (k * delta) ** beta
    if beta == 1.0:
        # Adjacent constraints already imply every pair on a uniform grid;
        # redundant dyadic offsets are added because long-range couplings
        # speed up the splitting solvers without changing the set.
        sets = _dyadic_band_groups(idx, caps_for_offset)
    else:
        sets = _offset_band_groups(idx, caps_for_offset)
    pairs = _all_pairs(idx, caps_for_offset)
    return sets, pairs, idx


def _dyadic_band_groups(indices, caps_for_offset):
    """Bands at offsets 1, 2, 4, ... split into coordinate-disjoint groups.

    For offset k the pairs (i, i+k) collide only when their starts differ
    by 0 or k, so splitting starts by the parity of (start // k) suffices.
    """
    idx = np.asarray(indices, dtype=np.intp)
    n = idx.size
    groups = []
    k = 1
    while k < n:
        cap = caps_for_offset(k)
        starts = np.arange(n - k)
        parity = (starts // k) % 2
        for p in (0, 1):
            sel = starts[parity == p]
            if sel.size:
                groups.append(PairBandGroup(
                    idx[sel], idx[sel + k], np.full(sel.size, cap)))
        k *= 2
    return groups


def _merge_pairs(*pair_lists):
    ia = np.concatenate([p[0] for p in pair_lists])
    ib = np.concatenate([p[1] for p in pair_lists])
    caps = np.concatenate([p[2] for p in pair_lists])
    return ia, ib, caps


def _interval_recession(d, idx):
    """Orthonormal recession basis: constants on the block, free outside."""
    cols = []
    v = np.zeros(d)
    v[idx] = 1.0 / np.sqrt(idx.size)
    cols.append(v)
    outside = np.setdiff1d(np.arange(d), idx)
    for i in outside:
        e = np.zeros(d)
        e[i] = 1.0
        cols.append(e)
    return np.column_stack(cols)


def make_lipschitz(beta, M, a=-0.5, b=0.5, d=None):
    """Grid embedding of the Lipschitz class over [a, b] with exponent beta."""
    _check_lipschitz_params(beta, M, a, b)
    if d is None or d < 2:
        raise ValueError("d must be an integer >= 2")
    sets, pairs, idx = _lipschitz_pieces(beta, M, a, b, d)
    desc = ClassDescriptor.make("lipschitz", beta=beta, M=M, a=a, b=b, d=d)
    return ConvexSetOracle(d, desc, sets, pair_constraints=pairs,
                           recession=_interval_recession(d, idx))


def make_monotone_lipschitz(beta, M, d):
    """Nonincreasing Lipschitz class on the full interval."""
    _check_lipschitz_params(beta, M, -0.5, 0.5)
    if d < 2:
        raise ValueError("d must be an integer >= 2")
    sets, pairs, _ = _lipschitz_pieces(beta, M, -0.5, 0.5, d)
    sets = sets + [NonincreasingCone()]
    desc = ClassDescriptor.make("monotone_lipschitz", beta=beta, M=M, d=d)
    ones = np.full((d, 1), 1.0 / np.sqrt(d))
    return ConvexSetOracle(d, desc, sets, pair_constraints=pairs,
                           recession=ones)


def make_piecewise_lipschitz(beta1, M1, beta2, M2, d, monotone=False):
    """Two Lipschitz pieces glued at 0: [−1/2, 0] and [0, 1/2], optional cone.

    With an odd ``d`` the grid contains t = 0 so both pieces share it, as in
    the continuum definition.
    """
    _check_lipschitz_params(beta1, M1, -0.5, 0.0)
    _check_lipschitz_params(beta2, M2, 0.0, 0.5)
    if d < 3:
        raise ValueError("d must be an integer >= 3")
    left_sets, left_pairs, _ = _lipschitz_pieces(beta1, M1, -0.5, 0.0, d)
    right_sets, right_pairs, _ = _lipschitz_pieces(beta2, M2, 0.0, 0.5, d)
    sets = left_sets + right_sets
    if monotone:
        sets = sets + [NonincreasingCone()]
    kind = "piecewise_lipschitz_monotone" if monotone else "piecewise_lipschitz"
    desc = ClassDescriptor.make(kind, beta1=beta1, M1=M1, beta2=beta2,
                                M2=M2, d=d)
    pairs = _merge_pairs(left_pairs, right_pairs)
    ones = np.full((d, 1), 1.0 / np.sqrt(d))
    return ConvexSetOracle(d, desc, sets, pair_constraints=pairs,
                           recession=ones)


def make_sparse_subspace(I, d):
    """Coordinate subspace {f : f(j) = 0 for j outside I}; 1-based indices."""
    I = sorted(set(int(i) for i in I))
    if not I:
        raise ValueError("support set I must be nonempty")
    if I[0] < 1 or I[-1] > d:
        raise ValueError(f"support indices must lie in 1..{d}")
    keep = np.zeros(d, dtype=bool)
    keep[np.asarray(I) - 1] = True
    desc = ClassDescriptor.make("sparse_subspace", I=tuple(I), d=d)
    basis = np.zeros((d, len(I)))
    for c, i in enumerate(I):
        basis[i - 1, c] = 1.0

    def cf_modulus(eps, other):
        if other.kind != "sparse_subspace":
            return None
        union = set(I) | set(other.get("I"))
        return np.sqrt(len(union)) * eps

    return ConvexSetOracle(d, desc, [CoordinateSubspace(keep)],
                           recession=basis, closed_form_modulus=cf_modulus)


def make_box(tau, d):
    """Hypercube |f(i)| <= tau."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    desc = ClassDescriptor.make("box", tau=tau, d=d)
    return ConvexSetOracle(d, desc, [BoxAbs(tau)], recession=None)


def make_full_space(d):
    desc = ClassDescriptor.make("full_space", d=d)
    return ConvexSetOracle(d, desc, [FullSpace()], recession="all")


def _nested_order(oracles):
    """Return oracles sorted inner-to-outer if they form a catalog chain."""
    kinds = {o.descriptor.kind for o in oracles}
    if len(kinds) != 1:
        return None
    kind = kinds.pop()
    if kind in ("lipschitz", "monotone_lipschitz"):
        fixed = {(o.descriptor.get("beta"), o.descriptor.get("a"),
                  o.descriptor.get("b"), o.descriptor.get("d"))
                 for o in oracles}
        if len(fixed) != 1:
            return None
        return sorted(oracles, key=lambda o: o.descriptor.get("M"))
    if kind in ("piecewise_lipschitz", "piecewise_lipschitz_monotone"):
        fixed = {(o.descriptor.get("beta1"), o.descriptor.get("beta2"),
                  o.descriptor.get("d")) for o in oracles}
        if len(fixed) != 1:
            return None
        ms = [(o.descriptor.get("M1"), o.descriptor.get("M2")) for o in oracles]
        order = sorted(range(len(oracles)), key=lambda i: ms[i])
        for a, b in zip(order, order[1:]):
            if not (ms[a][0] <= ms[b][0] and ms[a][1] <= ms[b][1]):
                return None
        return [oracles[i] for i in order]
    return None


def _spot_check_nested(inner, outer, rng, trials=8, tol=1e-6):
    for _ in range(trials):
        x = rng.standard_normal(inner.dim)
        p = inner.project(x)
        if not outer.contains(p, tol=max(tol, 10 * inner.projection_tol)):
            return False
    return True


def hull(oracles, rng=None):
    """Closed-form convex hull of a catalog family of oracles.

    Supported: a single class (itself); sparse subspaces (span of the union
    support, the full space when supports cover every coordinate); declared
    nested chains (outermost member, spot-checked).  Anything else raises
    UnsupportedHullError rather than approximating.
    """
    oracles = list(oracles)
    if not oracles:
        raise ValueError("empty family")
    if len(oracles) == 1:
        return oracles[0]
    d = oracles[0].dim
    if any(o.dim != d for o in oracles):
        raise ValueError("family members have mismatched dimensions")
    if all(o.descriptor.kind == "sparse_subspace" for o in oracles):
        union = set()
        for o in oracles:
            union |= set(o.descriptor.get("I"))
        if len(union) == d:
            return make_full_space(d)
        return make_sparse_subspace(sorted(union), d)
    chain = _nested_order(oracles)
    if chain is not None:
        rng = np.random.default_rng(0) if rng is None else rng
        outer = chain[-1]
        for inner in chain[:-1]:
            if not _spot_check_nested(inner, outer, rng):
                raise UnsupportedHullError(
                    "declared nested family failed the containment spot check")
        return outer
    raise UnsupportedHullError(
        f"no closed-form hull for kinds {[o.descriptor.kind for o in oracles]}")
