"""Euclidean projection machinery: elementary constraint sets and Dykstra's method.

Every parameter-space oracle in this package is assembled from a small list of
elementary closed convex sets, each of which admits an exact vectorized
projection.  Projections onto intersections are computed with Dykstra's
cyclic algorithm, which (unlike plain alternating projections) converges to
the true Euclidean projection.
"""

import numpy as np


def pava_nonincreasing(y):
    """L2 projection of ``y`` onto the cone of nonincreasing vectors.

    Pool-adjacent-violators with block merging, O(n) amortized.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    # Work on the reversed sequence so the target is nondecreasing.
    z = y[::-1]
    means = []
    counts = []
    for i in range(n):
        m, c = z[i], 1
        while means and means[-1] >= m:
            m0, c0 = means.pop(), counts.pop()
            m = (m * c + m0 * c0) / (c + c0)
            c += c0
        means.append(m)
        counts.append(c)
    out = np.empty(n)
    pos = 0
    for m, c in zip(means, counts):
        out[pos:pos + c] = m
        pos += c
    return out[::-1]


class FullSpace:
    """No constraint; projection is the identity."""

    def project(self, x):
        return x

    def violation(self, x):
        return 0.0


class NonincreasingCone:
    """x_1 >= x_2 >= ... >= x_d."""

    def project(self, x):
        return pava_nonincreasing(x)

    def violation(self, x):
        d = np.diff(x)
        return float(np.max(d, initial=0.0))


class BoxAbs:
    """|x_i| <= tau for all i."""

    def __init__(self, tau):
        self.tau = float(tau)

    def project(self, x):
        return np.clip(x, -self.tau, self.tau)

    def violation(self, x):
        return float(np.max(np.abs(x) - self.tau, initial=0.0))


class CoordinateSubspace:
    """x_j = 0 for all j outside a support mask."""

    def __init__(self, keep_mask):
        self.keep = np.asarray(keep_mask, dtype=bool)

    def project(self, x):
        out = np.where(self.keep, x, 0.0)
        return out

    def violation(self, x):
        off = x[~self.keep]
        return float(np.max(np.abs(off), initial=0.0))


class PairBandGroup:
    """|x_i - x_j| <= c for a family of index pairs with disjoint coordinates.

    Disjointness makes the group a product set, so the exact projection
    moves each violating pair symmetrically toward its band.
    """

    def __init__(self, idx_a, idx_b, caps):
        self.ia = np.asarray(idx_a, dtype=np.intp)
        self.ib = np.asarray(idx_b, dtype=np.intp)
        self.caps = np.asarray(caps, dtype=float)

    def project(self, x):
        out = x.copy()
        diff = out[self.ia] - out[self.ib]
        excess = np.abs(diff) - self.caps
        hit = excess > 0
        if np.any(hit):
            shift = 0.5 * excess[hit] * np.sign(diff[hit])
            out[self.ia[hit]] -= shift
            out[self.ib[hit]] += shift
        return out

    def violation(self, x):
        diff = np.abs(x[self.ia] - x[self.ib]) - self.caps
        return float(np.max(diff, initial=0.0))


def make_pair_band_groups(pairs_i, pairs_j, caps):
    """Split arbitrary index pairs into coordinate-disjoint PairBandGroups.

    Greedy coloring: a pair joins the first group that uses none of its two
    coordinates.  Grouping order is deterministic.
    """
    pairs_i = np.asarray(pairs_i, dtype=np.intp)
    pairs_j = np.asarray(pairs_j, dtype=np.intp)
    caps = np.asarray(caps, dtype=float)
    groups = []   # (used_coord_set, [k indices])
    for k in range(pairs_i.size):
        a, b = int(pairs_i[k]), int(pairs_j[k])
        placed = False
        for used, members in groups:
            if a not in used and b not in used:
                used.add(a)
                used.add(b)
                members.append(k)
                placed = True
                break
        if not placed:
            groups.append(({a, b}, [k]))
    return [
        PairBandGroup(pairs_i[m], pairs_j[m], caps[m]) for _, m in groups
    ]


def dykstra(x0, sets, tol=1e-9, max_sweeps=10000):
    """Project ``x0`` onto the intersection of ``sets`` by Dykstra's algorithm.

    Parameters
    ----------
    x0 : ndarray
        Point to project.
    sets : sequence
        Elementary sets exposing exact ``project`` and ``violation``.
    tol : float
        Stop when the sweep displacement and worst constraint violation both
        fall below ``tol`` (relative to 1 + ||x0||).
    max_sweeps : int
        Hard iteration cap.

    Returns
    -------
    x : ndarray
        Approximate projection.
    info : dict
        ``sweeps`` performed and final ``violation``.
    """
    x = np.array(x0, dtype=float)
    if len(sets) == 1:
        x = sets[0].project(x)
        return x, {"sweeps": 1, "violation": sets[0].violation(x)}
    scale = 1.0 + float(np.linalg.norm(x0))
    incs = [np.zeros_like(x) for _ in sets]
    for sweep in range(1, max_sweeps + 1):
        x_prev = x.copy()
        for k, s in enumerate(sets):
            y = x + incs[k]
            x = s.project(y)
            incs[k] = y - x
        move = float(np.max(np.abs(x - x_prev), initial=0.0))
        if move < tol * scale:
            viol = max(s.violation(x) for s in sets)
            if viol < tol * scale:
                return x, {"sweeps": sweep, "violation": viol}
    viol = max(s.violation(x) for s in sets)
    return x, {"sweeps": max_sweeps, "violation": viol}
