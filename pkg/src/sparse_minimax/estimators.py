"""Coefficient estimators: soft thresholding, Lasso, SLOPE, best-subset
search, the oracle estimator, and the Lasso/MLE aggregate.

All fits are pure functions of their inputs. Design matrices are converted
to Fortran order float64 on entry (a copy when the input is C-ordered), so
column access in the sweep kernels is contiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy.special import ndtri

from . import _kernels as _k


class CapacityError(RuntimeError):
    """Support enumeration would exceed the configured cap."""


def _enum_count(p: int, s: int, cap: int, what: str) -> int:
    count = math.comb(p, s)
    if count > cap:
        raise CapacityError(f"{what}: C({p},{s}) = {count} exceeds enumeration cap {cap}")
    return count


@dataclass(frozen=True)
class LassoConfig:
    """Penalty level and stopping rule for :func:`lasso_fit`.

    ``tol`` is the KKT residual target; ``None`` selects
    1e-8 * max(1, ||X'y/n||_inf) at fit time. ``max_iter`` caps the total
    number of coordinate sweeps.
    """

    lam: float
    tol: float | None = None
    max_iter: int = 100_000

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass(frozen=True)
class SlopeConfig:
    """Weight sequence and stopping rule for :func:`slope_fit`.

    ``lambda_seq`` must be non-increasing and nonnegative. ``lipschitz``
    optionally supplies sigma_max(X)^2/n when the caller already knows it
    (e.g. reused across fits on one design); ``None`` lets the solver
    estimate it.
    """

    lambda_seq: np.ndarray
    tol: float | None = None
    max_iter: int = 20_000
    lipschitz: float | None = None

    def __post_init__(self) -> None:
        seq = np.asarray(self.lambda_seq, dtype=np.float64)
        if seq.ndim != 1 or seq.size == 0:
            raise ValueError("lambda_seq must be a nonempty 1-D sequence")
        if np.any(np.diff(seq) > 0):
            raise ValueError("lambda_seq must be non-increasing")
        if seq[-1] < 0:
            raise ValueError("lambda_seq must be nonnegative")
        object.__setattr__(self, "lambda_seq", seq)
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError("lipschitz must be positive when given")


@dataclass(frozen=True)
class EstimatorResult:
    beta_hat: np.ndarray
    iterations: int
    kkt_residual: float
    objective: float
    converged: bool
    branch: str | None = None

    def to_json(self) -> dict:
        out = {
            "beta_hat": [float(v) for v in self.beta_hat],
            "iterations": int(self.iterations),
            "kkt_residual": float(self.kkt_residual),
            "objective": float(self.objective),
            "converged": bool(self.converged),
        }
        if self.branch is not None:
            out["branch"] = self.branch
        return out


def soft_threshold(u, lam: float) -> np.ndarray:
    """Elementwise sign(u) * max(|u| - lam, 0)."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    u = np.asarray(u, dtype=np.float64)
    return np.sign(u) * np.maximum(np.abs(u) - lam, 0.0)


def lambda_eps(eps: float, sigma: float, n: int, p: int, k: int) -> float:
    """Lasso tuning level (1+eps) * sigma * sqrt(2 log(p/k) / n)."""
    if k < 1 or p <= k:
        raise ValueError(f"need 1 <= k < p, got k={k}, p={p}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return (1.0 + eps) * sigma * math.sqrt(2.0 * math.log(p / k) / n)


def _as_design(X) -> np.ndarray:
    X = np.asfortranarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"design must be 2-D, got shape {X.shape}")
    return X


def _kkt_from_grad(gn: np.ndarray, b: np.ndarray, lam: float) -> float:
    """Max subgradient violation given gn = X'(y-Xb)/n."""
    on = b != 0.0
    viol = np.abs(gn) - lam
    np.maximum(viol, 0.0, out=viol)
    if np.any(on):
        viol[on] = np.abs(gn[on] - lam * np.sign(b[on]))
    return float(viol.max(initial=0.0))


def lasso_fit(X, y, config: LassoConfig, b0=None) -> EstimatorResult:
    """Solve argmin_b (1/2n)||y - Xb||^2 + lam*||b||_1 by cyclic coordinate
    minimization over an active set that grows on KKT violations.

    The returned ``kkt_residual`` is checked against the full design, so a
    ``converged`` result certifies every coordinate, not just active ones.
    ``b0`` warm-starts the sweep.
    """
    X = _as_design(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if config.lam <= 0:
        raise ValueError("lasso_fit requires lam > 0; zero penalty is plain least squares")

    lam = config.lam
    lam_n = lam * n
    col_sq = np.asarray(_k.col_sumsq(X))
    if b0 is None:
        w = np.zeros(p)
        r = y.copy()
        g = np.asarray(_k.xt_dot(X, y))
    else:
        w = np.array(b0, dtype=np.float64, copy=True)
        if w.shape != (p,):
            raise ValueError(f"b0 has shape {w.shape}, expected ({p},)")
        idx = np.flatnonzero(w)
        r = y - np.asarray(_k.x_dot_sparse(X, idx.astype(np.intp), w[idx]))
        g = np.asarray(_k.xt_dot(X, r))

    tol = config.tol
    if tol is None:
        gy = np.abs(np.asarray(_k.xt_dot(X, y))).max(initial=0.0) if b0 is not None else np.abs(g).max(initial=0.0)
        tol = 1e-8 * max(1.0, gy / n)

    active = np.union1d(np.flatnonzero(np.abs(g) > lam_n), np.flatnonzero(w)).astype(np.intp)
    delta_tol = 0.1 * tol * n / max(1.0, float(col_sq.max(initial=0.0)))
    total = 0
    converged = False
    kkt = math.inf
    while True:
        if active.size:
            budget = config.max_iter - total
            if budget <= 0:
                break
            total += int(_k.cd_sweeps(X, r, w, active, lam_n, col_sq, delta_tol, budget))
        g = np.asarray(_k.xt_dot(X, r))
        kkt = _kkt_from_grad(g / n, w, lam)
        if kkt <= tol:
            converged = True
            break
        if total >= config.max_iter:
            break
        grown = np.union1d(active, np.flatnonzero(np.abs(g) > lam_n)).astype(np.intp)
        if grown.size == active.size:
            delta_tol *= 0.1
            if delta_tol < 1e-300:
                break
        active = grown

    objective = 0.5 * float(r @ r) / n + lam * float(np.abs(w).sum())
    return EstimatorResult(w, total, kkt, objective, converged)


def lasso_kkt_residual(X, y, b, lam: float) -> float:
    """Max KKT violation of b for the Lasso program at level lam."""
    X = _as_design(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n = X.shape[0]
    idx = np.flatnonzero(b).astype(np.intp)
    r = y - np.asarray(_k.x_dot_sparse(X, idx, b[idx]))
    gn = np.asarray(_k.xt_dot(X, r)) / n
    return _kkt_from_grad(gn, b, lam)


def slope_lambda_seq(eps: float, sigma: float, n: int, p: int, q: float) -> np.ndarray:
    """Quantile weight sequence sigma*(1+eps)*Phi^{-1}(1 - iq/(2p))/sqrt(n).

    Strictly decreasing and positive for every i because iq/(2p) < 1/2
    whenever q < 1. The reference analysis takes eps in (0,1); values
    outside that range are accepted as long as eps >= 0, since the formula
    stays well defined.
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    i = np.arange(1, p + 1, dtype=np.float64)
    return sigma * (1.0 + eps) / math.sqrt(n) * ndtri(1.0 - i * q / (2.0 * p))


def prox_sorted_l1(v, lambda_seq) -> np.ndarray:
    """Exact prox of b -> sum_i lambda_i |b|_(i) at point v.

    Sort |v| descending, subtract the weights, project onto the
    non-increasing cone by pool-adjacent-violators, clamp at zero, undo the
    sort, restore signs.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    lam = np.ascontiguousarray(lambda_seq, dtype=np.float64)
    if v.shape != lam.shape or v.ndim != 1:
        raise ValueError(f"v and lambda_seq must be equal-length vectors, got {v.shape} and {lam.shape}")
    if np.any(np.diff(lam) > 0) or (lam.size and lam[-1] < 0):
        raise ValueError("lambda_seq must be non-increasing and nonnegative")
    a = np.abs(v)
    order = np.argsort(-a, kind="stable")
    w = np.asarray(_k.pava_decreasing(a[order] - lam))
    np.maximum(w, 0.0, out=w)
    out = np.empty_like(v)
    out[order] = w
    out *= np.sign(v)
    return out


def _slope_objective(r: np.ndarray, b: np.ndarray, lam: np.ndarray, n: int) -> float:
    pen = float(np.sort(np.abs(b))[::-1] @ lam)
    return 0.5 * float(r @ r) / n + pen


def _spectral_bound(X: np.ndarray) -> float:
    """sigma_max(X)^2 / n: exact for small matrices, power iteration with a
    safety factor otherwise."""
    n, p = X.shape
    if n * p <= 250_000:
        s = np.linalg.svd(X, compute_uv=False)
        return float(s[0] ** 2) / n if s.size else 0.0
    v = np.full(p, 1.0 / math.sqrt(p))
    for _ in range(30):
        u = np.asarray(_k.xt_dot(X, np.asarray(_k.x_dot_dense(X, v))))
        nu = float(np.linalg.norm(u))
        if nu == 0.0:
            return 0.0
        v = u / nu
    xv = np.asarray(_k.x_dot_dense(X, v))
    return 1.05 * float(xv @ xv) / n


def _fista_on_slab(Xw, y, lam_w, b_init, t, tol_inner, it_cap, n):
    """FISTA with backtracking and gradient restarts on a dense column slab.

    Returns (b, residual, iterations, t) where t is the (possibly shrunk)
    step that every accepted update satisfied the majorization test at.
    """
    b = b_init.copy()
    zv = b.copy()
    rb = y - Xw @ b
    rz = rb.copy()
    s = 1.0
    it = 0
    while it < it_cap:
        gz = (Xw.T @ rz) / n
        fz = 0.5 * float(rz @ rz) / n
        while True:
            cand = prox_sorted_l1(zv + t * gz, t * lam_w)
            d = cand - zv
            rc = y - Xw @ cand
            fc = 0.5 * float(rc @ rc) / n
            if fc <= fz - float(gz @ d) + float(d @ d) / (2.0 * t) + 1e-12 * max(1.0, fz):
                break
            t *= 0.5
        it += 1
        if float((zv - cand) @ (cand - b)) > 0.0:
            s = 1.0
            zv = cand.copy()
            rz = rc.copy()
        else:
            s_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * s * s))
            mom = (s - 1.0) / s_next
            zv = cand + mom * (cand - b)
            rz = rc + mom * (rc - rb)
            s = s_next
        b = cand
        rb = rc
        gb = (Xw.T @ rb) / n
        fp = float(np.abs(b - prox_sorted_l1(b + t * gb, t * lam_w)).max(initial=0.0)) / t
        if fp <= tol_inner:
            break
    return b, rb, it, t


def slope_fit(X, y, config: SlopeConfig, b0=None) -> EstimatorResult:
    """Solve argmin_b (1/2n)||y - Xb||^2 + sum_i lambda_i |b|_(i).

    Proximal gradient (FISTA) on a working set of columns, with the prox of
    the sorted-l1 norm computed exactly. Restricting weights to the first
    |W| entries of lambda_seq is exact for vectors supported on W: the
    off-set zeros absorb the smallest weights at zero cost. Convergence is
    certified on the full design: kkt_residual is the prox-gradient
    fixed-point residual ||b - prox_{t J}(b + t X'r/n)||_inf / t, which
    vanishes exactly at solutions for any step t > 0.
    """
    X = _as_design(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    lam = config.lambda_seq
    if lam.shape != (p,):
        raise ValueError(f"lambda_seq has length {lam.size}, expected {p}")

    if b0 is None:
        b = np.zeros(p)
    else:
        b = np.array(b0, dtype=np.float64, copy=True)
        if b.shape != (p,):
            raise ValueError(f"b0 has shape {b.shape}, expected ({p},)")
    idx = np.flatnonzero(b).astype(np.intp)
    r = y - np.asarray(_k.x_dot_sparse(X, idx, b[idx]))

    tol = config.tol
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.abs(np.asarray(_k.xt_dot(X, y))).max(initial=0.0)) / n)

    lip = config.lipschitz if config.lipschitz is not None else _spectral_bound(X)
    if lip <= 0.0:
        # Zero design: the data term is constant, so 0 minimizes the penalty.
        return EstimatorResult(np.zeros(p), 0, 0.0, _slope_objective(y, np.zeros(p), lam, n), True)
    t = 1.0 / lip

    total = 0
    converged = False
    fp = math.inf
    work = np.flatnonzero(b)
    tol_inner = 0.3 * tol
    while True:
        g = np.asarray(_k.xt_dot(X, r)) / n
        pb = prox_sorted_l1(b + t * g, t * lam)
        fp = float(np.abs(b - pb).max(initial=0.0)) / t
        if fp <= tol:
            converged = True
            break
        if total >= config.max_iter:
            break
        grown = np.union1d(work, np.flatnonzero(pb))
        if grown.size == work.size and np.array_equal(grown, work):
            tol_inner *= 0.1
        work = grown
        if work.size == 0:
            # prox keeps everything at zero yet fp > tol: numerically stuck
            break
        Xw = X[:, work]
        bw, rw, it, t = _fista_on_slab(
            Xw, y, lam[: work.size], b[work], t, tol_inner, config.max_iter - total, n
        )
        total += it
        b = np.zeros(p)
        b[work] = bw
        r = rw

    objective = _slope_objective(r, b, lam, n)
    return EstimatorResult(b, total, fp, objective, converged)


def mle_best_subset(X, y, k: int, enum_cap: int = 10**6) -> EstimatorResult:
    """Exact best-subset least squares over all supports of size k.

    Supports are visited in lexicographic order and ties kept at the first
    minimizer, so the reported support is the lexicographically smallest.
    Rank-deficient subproblems fall back to minimum-norm least squares.
    """
    X = _as_design(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if not 1 <= k <= p:
        raise ValueError(f"need 1 <= k <= p, got k={k}, p={p}")
    if k > n:
        raise ValueError(f"need k <= n for least squares on supports, got k={k}, n={n}")
    count = _enum_count(p, k, enum_cap, "mle_best_subset")

    c = X.T @ y
    yty = float(y @ y)
    gram = X.T @ X

    best_rss = math.inf
    best_support: tuple[int, ...] | None = None
    best_coef: np.ndarray | None = None
    for support in combinations(range(p), k):
        s = list(support)
        gs = gram[np.ix_(s, s)]
        cs = c[s]
        coef = None
        try:
            coef = np.linalg.solve(gs, cs)
            if not np.all(np.isfinite(coef)) or float(
                np.abs(gs @ coef - cs).max(initial=0.0)
            ) > 1e-8 * max(1.0, float(np.abs(cs).max(initial=0.0))):
                coef = None
        except np.linalg.LinAlgError:
            coef = None
        if coef is None:
            coef = np.linalg.lstsq(X[:, s], y, rcond=None)[0]
        rss = yty - 2.0 * float(coef @ cs) + float(coef @ (gs @ coef))
        rss = max(rss, 0.0)
        if rss < best_rss:
            best_rss = rss
            best_support = support
            best_coef = coef

    assert best_support is not None and best_coef is not None
    beta = np.zeros(p)
    beta[list(best_support)] = best_coef
    s = list(best_support)
    kkt = float(np.abs(X[:, s].T @ (y - X[:, s] @ best_coef)).max(initial=0.0)) / n
    return EstimatorResult(beta, count, kkt, best_rss, True)


def oracle_estimator(beta, X, z, lam: float) -> np.ndarray:
    """Soft-threshold the noise-corrupted truth: eta_lam(beta + X'z/n)."""
    X = _as_design(X)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    n, p = X.shape
    if beta.shape != (p,) or z.shape != (n,):
        raise ValueError(f"shape mismatch: X {X.shape}, beta {beta.shape}, z {z.shape}")
    return soft_threshold(beta + np.asarray(_k.xt_dot(X, z)) / n, lam)


def aggregated_estimate(
    instance, k: int, eps: float, restarts: int = 64, seed=0, lam: float | None = None
):
    """Lasso at level lambda_eps when the conditioning event holds, exact
    best-subset search otherwise.

    Returns (EstimatorResult, EventAReport). The event's cone constant is
    checked through an upper-bound estimate (see event_a_check), so the
    branch decision is a proxy; both branches are valid estimators either
    way, and the report records which test failed. ``lam`` overrides the
    Lasso level, for callers that set it from a reference scale instead of
    the instance's own noise level.
    """
    from .diagnostics import event_a_check

    X = instance.design.entries
    y = instance.response
    n, p = X.shape
    report = event_a_check(X, k, eps, restarts=restarts, seed=seed)
    if report.holds:
        if lam is None:
            sigma = instance.noise.sigma
            if sigma <= 0:
                raise ValueError("lasso branch needs sigma > 0 to set its penalty level")
            lam = lambda_eps(eps, sigma, n, p, k)
        result = lasso_fit(X, y, LassoConfig(lam=lam))
        branch = "lasso"
    else:
        result = mle_best_subset(X, y, k)
        branch = "mle"
    return replace(result, branch=branch), report
