"""Ordered and between-class moduli of continuity.

The ordered modulus is the value of the concave program

    maximize  <w, g - f>   over  f in F, g in G, ||g - f||_2 <= eps.

A projected gradient ascent on the product variable (f, g) solves it using
only the projection oracles of F and G: each ascent step is followed by a
Dykstra projection onto the intersection of the class constraints and the
coupling ball, whose projection shrinks only the difference vector.  Closed
forms are provided for the catalog cases (Lipschitz point evaluation and
sparse sum-functional pairs).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .projections import dykstra


class SolverError(RuntimeError):
    """Non-convergence within the iteration budget; carries the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class UnsupportedFunctionalError(ValueError):
    """Closed form requested for a functional it does not cover."""


@dataclass(frozen=True)
class ModulusResult:
    """Value and attaining pair of one modulus evaluation."""

    value: float
    f_star: np.ndarray
    g_star: np.ndarray
    epsilon: float
    feasibility_gap: float
    method: str                 # "closed_form" | "numeric"
    direction: str              # "fg" (F -> G) or "gf"
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ModulusCurve:
    epsilons: np.ndarray
    values: np.ndarray
    results: tuple
    fitted_exponent: Optional[float]

    @property
    def all_converged(self):
        return all(r.converged for r in self.results)


@dataclass(frozen=True)
class AdaptationCase:
    case: int
    strongly_adaptive: bool


class _BlockSet:
    """Adapter exposing an elementary set on one block of a stacked vector."""

    def __init__(self, inner, sl):
        self.inner = inner
        self.sl = sl

    def project(self, z):
        out = z.copy()
        out[self.sl] = self.inner.project(z[self.sl])
        return out

    def violation(self, z):
        return self.inner.violation(z[self.sl])


class _CouplingBall:
    """{(f, g) : ||g - f|| <= eps}; projection rescales the difference only."""

    def __init__(self, d, eps):
        self.d = d
        self.eps = float(eps)

    def project(self, z):
        f, g = z[:self.d], z[self.d:]
        diff = g - f
        nrm = float(np.linalg.norm(diff))
        if nrm <= self.eps:
            return z
        mid = 0.5 * (f + g)
        half = 0.5 * (self.eps / nrm) * diff
        return np.concatenate([mid - half, mid + half])

    def violation(self, z):
        nrm = float(np.linalg.norm(z[self.d:] - z[:self.d]))
        return max(0.0, nrm - self.eps)


def _product_sets(F, G, eps):
    d = F.dim
    sets = [_BlockSet(s, slice(0, d)) for s in F.sets]
    sets += [_BlockSet(s, slice(d, 2 * d)) for s in G.sets]
    sets.append(_CouplingBall(d, eps))
    return sets


class _DenseBlock:
    """One non-pair elementary set acting on a slice of the stacked vector."""

    def __init__(self, sl, inner):
        self.sl = sl
        self.inner = inner
        self.u = None

    def init(self, dim_slice):
        self.u = np.zeros(dim_slice)


def _admm_maximize(blocks, dim, c, z0, obj_scale, tol, max_iter,
                   certify, check_every=250):
    """Maximize <c, z> over an intersection of elementary sets.

    Consensus ADMM with one block per elementary set.  Pair-band groups are
    batched: every pair's dual lives on its two coordinates only, so all
    band projections across all groups reduce to flat vectorized updates.
    ``certify`` maps a consensus iterate to a feasible point and its
    objective (a Dykstra hard projection); the best certified value is
    returned, making the result a valid lower bound regardless of the ADMM
    state.

    Returns (z_best, best_value, iterations, stalled).
    """
    from .projections import FullSpace, PairBandGroup

    pia, pib, pcap = [], [], []
    n_pair_groups = 0
    dense = []
    for sl, s in blocks:
        if isinstance(s, PairBandGroup):
            off = sl.start or 0
            pia.append(np.asarray(s.ia, dtype=np.intp) + off)
            pib.append(np.asarray(s.ib, dtype=np.intp) + off)
            pcap.append(np.asarray(s.caps, dtype=float))
            n_pair_groups += 1
        elif isinstance(s, FullSpace):
            continue
        else:
            dense.append(_DenseBlock(sl, s))
    have_pairs = n_pair_groups > 0
    if have_pairs:
        pia = np.concatenate(pia)
        pib = np.concatenate(pib)
        pcap = np.concatenate(pcap)
        dua = np.zeros(pia.size)
        dub = np.zeros(pib.size)
    n_blocks = n_pair_groups + len(dense)
    if n_blocks == 0:
        raise ValueError("objective is unbounded over an unconstrained set")

    zbar = z0.copy()
    for b in dense:
        b.init(zbar[b.sl].size)
    cnorm = float(np.linalg.norm(c))
    # rho controls the per-iteration drift ||c|| / (rho * N) along the
    # objective; residual balancing retunes it on the fly.
    rho = cnorm * n_blocks / (8.0 * max(obj_scale, 1e-300))
    drift = c / (rho * n_blocks)
    res_gate = max(1e-11, 0.02 * tol)

    # S tracks the running dual sum so the consensus average is O(dim).
    S = np.zeros(dim)
    z_best, best = certify(zbar)
    last_cert_best = best
    it = 0
    since_cert = 0
    stalled = False
    sqrt_n = np.sqrt(n_blocks)
    rel_res = np.inf
    while it < max_iter:
        for _ in range(check_every):
            it += 1
            dS = np.zeros(dim)
            r_pri_sq = 0.0
            if have_pairs:
                va = zbar[pia] - dua
                vb = zbar[pib] - dub
                diff = va - vb
                exc = np.abs(diff) - pcap
                shift = np.where(exc > 0, 0.5 * exc * np.sign(diff), 0.0)
                ndua = -shift
                ndub = shift
                r_pri_sq += float(((ndua - dua) ** 2).sum()
                                  + ((ndub - dub) ** 2).sum())
                dS += np.bincount(pia, weights=ndua - dua, minlength=dim)
                dS += np.bincount(pib, weights=ndub - dub, minlength=dim)
                dua, dub = ndua, ndub
            for b in dense:
                v = zbar[b.sl] - b.u
                nu = b.inner.project(v) - v
                r_pri_sq += float(((nu - b.u) ** 2).sum())
                dS[b.sl] += nu - b.u
                b.u = nu
            S_new = S + dS
            zbar_next = zbar + (S_new + dS) / n_blocks + drift
            S = S_new
            if it % 50 == 0:
                r_pri = np.sqrt(r_pri_sq)
                s_dual = rho * sqrt_n * float(np.linalg.norm(zbar_next - zbar))
                scale_change = 1.0
                if r_pri > 10.0 * s_dual:
                    rho *= 2.0
                    scale_change = 0.5
                elif s_dual > 10.0 * r_pri:
                    rho /= 2.0
                    scale_change = 2.0
                if scale_change != 1.0:
                    if have_pairs:
                        dua *= scale_change
                        dub *= scale_change
                    for b in dense:
                        b.u *= scale_change
                    S *= scale_change
                    drift = c / (rho * n_blocks)
                rel_res = r_pri / (sqrt_n * (1.0 + float(np.linalg.norm(zbar))))
            zbar = zbar_next
        # Hard projections are costly; certify only near consensus, with a
        # periodic fallback so progress is still tracked on slow runs.
        since_cert += check_every
        if rel_res > 25.0 * res_gate and since_cert < 8 * check_every:
            continue
        since_cert = 0
        z_cert, val = certify(zbar)
        if val > best:
            best = val
            z_best = z_cert
        if rel_res <= res_gate and best - last_cert_best <= tol * obj_scale:
            stalled = True
            break
        last_cert_best = best
    return z_best, best, it, stalled


def ordered_modulus(F, G, w, eps, tol=1e-6, common_point=None,
                    max_iter=100000, warm_start=None):
    """Ordered modulus omega(eps, F, G) = sup{Tg - Tf : ||g-f|| <= eps}.

    First-order ascent on the stacked pair (f, g) over the intersection of
    the class constraints and the coupling ball, driven by consensus
    operator splitting over the same projection oracles; the returned pair
    is hard-projected onto the feasible set by Dykstra's method, so its
    objective is a lower bound on the true modulus up to the reported
    feasibility gap.

    Parameters
    ----------
    F, G : ConvexSetOracle
        Classes for the f and g arguments; must share a common point
        (the origin by default).
    w : LinearFunctional
        Functional representer.
    eps : float
        Coupling radius, > 0.
    tol : float
        Stall threshold: stop once the certified objective gains less than
        ``tol * ||w|| * eps`` over a check window.
    warm_start : (f0, g0) or None
        Feasible-ish starting pair, e.g. from a neighboring eps.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if F.dim != G.dim:
        raise ValueError("F and G have mismatched dimensions")
    wv = w.vector
    if wv.shape != (F.dim,):
        raise ValueError("functional dimension does not match the classes")
    d = F.dim
    wnorm = float(np.linalg.norm(wv))
    cert_sets = _product_sets(F, G, eps)
    blocks = [(slice(0, d), s) for s in F.sets]
    blocks += [(slice(d, 2 * d), s) for s in G.sets]
    blocks.append((slice(0, 2 * d), _CouplingBall(d, eps)))
    grad = np.concatenate([-wv, wv])

    if warm_start is not None:
        z = np.concatenate([np.asarray(warm_start[0], float),
                            np.asarray(warm_start[1], float)])
    elif common_point is not None:
        cp = np.asarray(common_point, float)
        z = np.concatenate([cp, cp])
    else:
        z = np.zeros(2 * d)

    def certify(zz):
        out, _ = dykstra(zz, cert_sets, tol=1e-12, max_sweeps=3000)
        return out, float(grad @ out)

    z_best, best, it, stalled = _admm_maximize(
        blocks, 2 * d, grad, z, obj_scale=wnorm * eps, tol=tol,
        max_iter=max_iter, certify=certify)
    f_star, g_star = z_best[:d], z_best[d:]
    gap = max(F.pairwise_violation(f_star), G.pairwise_violation(g_star),
              max(0.0, float(np.linalg.norm(g_star - f_star)) - eps))
    result = ModulusResult(
        value=best, f_star=f_star, g_star=g_star, epsilon=float(eps),
        feasibility_gap=gap, method="numeric", direction="fg",
        iterations=it, converged=stalled)
    if not stalled:
        raise SolverError(
            f"modulus ascent did not stall within {max_iter} iterations",
            result=result)
    return result


def between_modulus(F, G, w, eps, tol=1e-6, common_point=None,
                    max_iter=100000, warm_start=None):
    """Between-class modulus: max of the two ordered moduli.

    Ties break toward the (F, G) direction.  ``warm_start`` carries a pair
    of starting pairs, one per direction.
    """
    ws_fg, ws_gf = (warm_start if warm_start is not None else (None, None))
    r_fg = ordered_modulus(F, G, w, eps, tol=tol, common_point=common_point,
                           max_iter=max_iter, warm_start=ws_fg)
    r_gf = ordered_modulus(G, F, w, eps, tol=tol, common_point=common_point,
                           max_iter=max_iter, warm_start=ws_gf)
    if r_fg.value >= r_gf.value:
        return r_fg
    return ModulusResult(
        value=r_gf.value, f_star=r_gf.f_star, g_star=r_gf.g_star,
        epsilon=r_gf.epsilon, feasibility_gap=r_gf.feasibility_gap,
        method=r_gf.method, direction="gf", iterations=r_gf.iterations,
        converged=r_gf.converged)


def lipschitz_modulus_closed_form(beta, M, eps):
    """Displayed closed form for the monotone Lipschitz chain modulus.

    Valid for M >= sqrt(2*beta + 1) * eps.
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if M <= 0 or eps <= 0:
        raise ValueError("M and eps must be positive")
    if M < np.sqrt(2.0 * beta + 1.0) * eps - 1e-12:
        raise ValueError(
            f"closed form requires M >= sqrt(2*beta+1)*eps; "
            f"got M={M}, threshold={np.sqrt(2 * beta + 1) * eps}")
    p = 2.0 * beta + 1.0
    return p ** (1.0 / p) * M ** (1.0 / p) * eps ** (2.0 * beta / p)


def sparse_modulus(I, J, eps, w=None):
    """Modulus between coordinate subspaces under the sum functional."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if w is not None:
        wv = w.vector
        if not np.allclose(wv, np.ones_like(wv)):
            raise UnsupportedFunctionalError(
                "sparse closed form covers the sum functional only; "
                "use the numeric solver")
    union = set(int(i) for i in I) | set(int(j) for j in J)
    return float(np.sqrt(len(union)) * eps)


def modulus_curve(F, G, w, eps_grid, tol=1e-6, common_point=None,
                  max_iter=100000):
    """Between-modulus along an increasing eps grid with warm starts.

    Fits the log-log least-squares slope as the Holder exponent estimate.
    Solver failures are flagged per grid point (converged=False) rather than
    aborting the curve.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size < 4:
        raise ValueError("eps grid needs at least 4 points")
    if np.any(np.diff(eps_grid) <= 0) or eps_grid[0] <= 0:
        raise ValueError("eps grid must be positive and strictly increasing")
    results = []
    warm_fg = warm_gf = None
    for eps in eps_grid:
        try:
            r_fg = ordered_modulus(F, G, w, eps, tol=tol,
                                   common_point=common_point,
                                   max_iter=max_iter, warm_start=warm_fg)
            warm_fg = (r_fg.f_star, r_fg.g_star)
        except SolverError as err:
            r_fg = err.result
        try:
            r_gf = ordered_modulus(G, F, w, eps, tol=tol,
                                   common_point=common_point,
                                   max_iter=max_iter, warm_start=warm_gf)
            warm_gf = (r_gf.f_star, r_gf.g_star)
        except SolverError as err:
            r_gf = err.result
        if r_fg.value >= r_gf.value:
            r = r_fg
        else:
            r = ModulusResult(
                value=r_gf.value, f_star=r_gf.f_star, g_star=r_gf.g_star,
                epsilon=r_gf.epsilon, feasibility_gap=r_gf.feasibility_gap,
                method=r_gf.method, direction="gf",
                iterations=r_gf.iterations, converged=r_gf.converged)
        results.append(r)
    values = np.array([r.value for r in results])
    if np.all(values > 0):
        slope = np.polyfit(np.log(eps_grid), np.log(values), 1)[0]
    else:
        slope = None
    return ModulusCurve(epsilons=eps_grid, values=values,
                        results=tuple(results),
                        fitted_exponent=None if slope is None else float(slope))


def classify_adaptation_case(q1, q2, q12, tol=1e-9):
    """Four-way cost-of-adaptation taxonomy from Holder exponents.

    Convention q1 >= q2.  Returns the case label and whether strongly
    adaptive intervals exist (q1 <= q12).  ``tol`` is the equality slack for
    comparing fitted exponents.
    """
    for name, q in (("q1", q1), ("q2", q2), ("q12", q12)):
        if not (0.0 < q <= 1.0 + tol):
            raise ValueError(f"{name} must lie in (0, 1], got {q}")
    if q1 < q2 - tol:
        raise ValueError(f"convention requires q1 >= q2, got q1={q1} < q2={q2}")
    if q12 >= q1 - tol:
        return AdaptationCase(case=1, strongly_adaptive=True)
    if abs(q12 - q2) <= tol:
        return AdaptationCase(case=2, strongly_adaptive=False)
    if q12 > q2:
        return AdaptationCase(case=3, strongly_adaptive=False)
    return AdaptationCase(case=4, strongly_adaptive=False)


def scaled_modulus_bound(omega_at_eps, b):
    """Certified upper bound b * omega(eps) for omega(b * eps), b >= 1."""
    if b < 1.0:
        raise ValueError(f"scaling requires b >= 1, got {b}")
    if omega_at_eps < 0:
        raise ValueError("modulus value must be nonnegative")
    return float(b) * float(omega_at_eps)


def maximize_linear(oracle, c, obj_scale, tol=1e-7, x0=None, max_iter=60000):
    """Maximize <c, x> over a projection oracle.

    Used for bias certification; the caller is responsible for removing any
    recession component of ``c`` so the objective is bounded on the set.
    ``obj_scale`` anchors the stall threshold ``tol * obj_scale``.
    Returns (x_star, value, converged).
    """
    c = np.asarray(c, dtype=float)
    d = oracle.dim
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, float)
    if float(np.linalg.norm(c)) == 0.0:
        x = oracle.project(x0)
        return x, float(c @ x), True

    def certify(xx):
        out, _ = dykstra(xx, oracle.sets, tol=1e-12, max_sweeps=3000)
        return out, float(c @ out)

    blocks = [(slice(0, d), s) for s in oracle.sets]
    x_best, best, _, stalled = _admm_maximize(
        blocks, d, c, x0, obj_scale=obj_scale, tol=tol, max_iter=max_iter,
        certify=certify)
    return x_best, best, stalled
