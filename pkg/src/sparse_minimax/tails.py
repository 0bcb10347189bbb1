"""Registry of tail inequalities checked by Monte Carlo.

Every row names a sampler, a statistic, and a bound. Frequencies compare
against the bound with three binomial standard errors of slack; these are
theorems, so a failure beyond slack is a build-breaking bug rather than
bad luck. The one exception is sre_event, whose reference statement has
existential constants only; its level is a calibrated surrogate and the
row says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import event_a_check
from .estimators import _enum_count
from .events import resolvent_set
from .rng import ROLE_CELL, SeedSpec

_CHUNK_BUDGET = 4_000_000  # doubles per draw chunk


@dataclass(frozen=True)
class LemmaSpec:
    """One registered inequality: how to sample it, what to compare, which
    way the comparison goes ('freq_leq', 'mean_leq', or 'freq_geq')."""

    lemma_id: str
    description: str
    simulate: Callable[[dict, SeedSpec, int, int], tuple[np.ndarray, float]]
    bound: Callable[[dict], float]
    direction: str
    default_grid: tuple[dict, ...]
    note: str = ""


@dataclass(frozen=True)
class TailRow:
    params: dict
    empirical: float
    bound: float
    slack: float
    margin: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "params": dict(self.params),
            "empirical": float(self.empirical),
            "bound": float(self.bound),
            "slack": float(self.slack),
            "margin": float(self.margin),
            "passed": bool(self.passed),
        }


@dataclass(frozen=True)
class TailReport:
    lemma_id: str
    rows: tuple[TailRow, ...]
    passed: bool
    reps: int
    seed: int
    note: str = ""

    def to_json(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "rows": [r.to_json() for r in self.rows],
            "passed": bool(self.passed),
            "reps": int(self.reps),
            "seed": int(self.seed),
            "note": self.note,
        }


def _chunked(gen: np.random.Generator, reps: int, width: int, f) -> np.ndarray:
    """Apply f to (chunk, width) standard-normal blocks; the draw order is
    row-major and sequential, so the result is chunking-invariant."""
    out = np.empty(reps)
    step = max(1, _CHUNK_BUDGET // max(width, 1))
    pos = 0
    while pos < reps:
        m = min(step, reps - pos)
        out[pos : pos + m] = f(gen.standard_normal((m, width)))
        pos += m
    return out


def _top_abs(block: np.ndarray, count: int) -> np.ndarray:
    """Per-row 'count' largest |values|, sorted descending."""
    a = np.abs(block)
    p = a.shape[1]
    part = np.partition(a, p - count, axis=1)[:, p - count :]
    return -np.sort(-part, axis=1)


# --- samplers ---------------------------------------------------------------


def _sim_chi2_lower(point, spec, reps, slot):
    d, tau = point["d"], point["tau"]
    gen = spec.generator(ROLE_CELL, slot)
    vals = _chunked(gen, reps, d, lambda g: ((g * g).sum(axis=1) < d * (1.0 - tau)).astype(float))
    return vals, 0.0


def _bound_chi2_lower(point):
    d, tau = point["d"], point["tau"]
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return math.exp((d / 2.0) * (tau + math.log(1.0 - tau)))


def _sim_gauss_max(point, spec, reps, slot):
    p, u = point["p"], point["u"]
    level = math.sqrt(2.0 * math.log(p)) + u
    gen = spec.generator(ROLE_CELL, slot)
    vals = _chunked(gen, reps, p, lambda g: (np.abs(g).max(axis=1) >= level).astype(float))
    return vals, 0.0


def _sim_order_mean(point, spec, reps, slot):
    p, k = point["p"], point["k"]
    gen = spec.generator(ROLE_CELL, slot)
    vals = _chunked(gen, reps, p, lambda g: np.partition(np.abs(g), p - k, axis=1)[:, p - k])
    return vals, 0.0


def _bound_order_mean(point):
    p, k = point["p"], point["k"]
    if not 2 <= k <= p:
        raise ValueError(f"need 2 <= k <= p, got k={k}, p={p}")
    return math.sqrt(2.0 * math.log(2.0 * p / (k - 1)))


def _sim_order_conc(point, spec, reps, slot):
    p, k, u = point["p"], point["k"], point["u"]
    gen_pilot = spec.generator(ROLE_CELL, slot + 1)
    pilot = _chunked(gen_pilot, 100_000, p, lambda g: np.partition(np.abs(g), p - k, axis=1)[:, p - k])
    mu_hat = float(pilot.mean())
    pilot_stderr = float(pilot.std(ddof=1) / math.sqrt(pilot.size))
    gen = spec.generator(ROLE_CELL, slot)
    vals = _chunked(
        gen, reps, p, lambda g: (np.partition(np.abs(g), p - k, axis=1)[:, p - k] - mu_hat >= u).astype(float)
    )
    # the pilot's mean error shifts the event threshold; fold a generous
    # multiple into the frequency slack
    return vals, 10.0 * pilot_stderr


def _sim_topk_avg(point, spec, reps, slot):
    p, s, t = point["p"], point["s"], point["t"]
    level = t * math.log(2.0 * p / s)
    gen = spec.generator(ROLE_CELL, slot)

    def stat(g):
        sq = g * g
        top = np.partition(sq, p - s, axis=1)[:, p - s :]
        return (top.mean(axis=1) > level).astype(float)

    vals = _chunked(gen, reps, p, stat)
    return vals, 0.0


def _bound_topk_avg(point):
    p, s, t = point["p"], point["s"], point["t"]
    if not 1 <= s <= p:
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    return (2.0 * p / s) ** (1.0 - 3.0 * t / 8.0)


def _sim_median_event(point, spec, reps, slot):
    p, k, d1 = point["p"], point["k"], point["delta1"]
    head_levels = 4.0 * np.sqrt(np.log(2.0 * p / np.arange(1, k + 1)))
    tail_level = (1.0 + d1) * math.sqrt(2.0 * math.log(p / k))
    gen = spec.generator(ROLE_CELL, slot)

    def stat(g):
        top = _top_abs(g, k + 1)
        head_ok = (top[:, :k] <= head_levels).all(axis=1)
        tail_ok = top[:, k] <= tail_level
        return (head_ok & tail_ok).astype(float)

    vals = _chunked(gen, reps, p, stat)
    return vals, 0.0


def _bound_median_event(point):
    p, k, d1 = point["p"], point["k"], point["delta1"]
    if not 1 <= k < p:
        raise ValueError(f"need 1 <= k < p, got k={k}, p={p}")
    if d1 <= 0:
        raise ValueError(f"delta1 must be positive, got {d1}")
    gap = (1.0 + d1) * math.sqrt(2.0 * math.log(p / k)) - math.sqrt(2.0 * math.log(2.0 * p / k))
    return 1.0 - k / (2.0 * p) - math.exp(-0.5 * gap * gap)


def _sim_gauss_sv(point, spec, reps, slot):
    big_n, n, t = point["N"], point["n"], point["t"]
    lo = math.sqrt(big_n) - math.sqrt(n) - t
    hi = math.sqrt(big_n) + math.sqrt(n) + t
    gen = spec.generator(ROLE_CELL, slot)
    vals = np.empty(reps)
    for r in range(reps):
        s = np.linalg.svd(gen.standard_normal((big_n, n)), compute_uv=False)
        vals[r] = float(s[-1] < lo or s[0] > hi)
    return vals, 0.0


def _sim_resolvent_sv(point, spec, reps, slot):
    n, p, k, k_star, t, sigma = (
        point["n"],
        point["p"],
        point["k"],
        point["k_star"],
        point["t"],
        point["sigma"],
    )
    level = math.sqrt(1.0 - 1.0 / n) - math.sqrt(k_star / n) - t
    gen = spec.generator(ROLE_CELL, slot)
    support = np.arange(k)
    vals = np.empty(reps)
    for r in range(reps):
        X = gen.standard_normal((n, p))
        z = sigma * gen.standard_normal(n)
        s_star = resolvent_set(X, z, support, k_star)
        smin = np.linalg.svd(X[:, s_star], compute_uv=False)[-1] / math.sqrt(n)
        vals[r] = float(smin <= level)
    return vals, 0.0


def _bound_resolvent_sv(point):
    n, t = point["n"], point["t"]
    return math.exp(-n * t * t / 2.0)


def _sim_sup_xtz(point, spec, reps, slot):
    n, p, k_star, sigma = point["n"], point["p"], point["k_star"], point["sigma"]
    level = sigma * math.sqrt(32.0 * n * k_star * math.log(p / k_star))
    gen = spec.generator(ROLE_CELL, slot)
    vals = np.empty(reps)
    for r in range(reps):
        X = gen.standard_normal((n, p))
        z = sigma * gen.standard_normal(n)
        corr = X.T @ z
        top = np.partition(corr * corr, p - k_star)[p - k_star :]
        vals[r] = float(math.sqrt(float(top.sum())) > level)
    return vals, 0.0


def _bound_sup_xtz(point):
    n, p, k_star = point["n"], point["p"], point["k_star"]
    if not 1 <= k_star < p:
        raise ValueError(f"need 1 <= k_star < p, got k_star={k_star}, p={p}")
    return math.exp(-n / 2.0) + (math.sqrt(2.0) * math.e * k_star / p) ** k_star


def sup_xtz_exact(X, z, k_star: int, enum_cap: int = 10**5) -> float:
    """sup over supports |T| = k_star of ||X_T' z||_2, computed separably
    as the top k_star squared column correlations. The brute enumeration
    equivalent (capped at C(p, k_star) <= enum_cap) exists for
    cross-checks; the separable form is exact because the squared norm is
    a sum over T's members."""
    X = np.asarray(X, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    p = X.shape[1]
    if not 1 <= k_star <= p:
        raise ValueError(f"need 1 <= k_star <= p, got k_star={k_star}, p={p}")
    corr = X.T @ z
    sq = corr * corr
    top = np.partition(sq, p - k_star)[p - k_star :]
    return math.sqrt(float(top.sum()))


def sup_xtz_brute(X, z, k_star: int, enum_cap: int = 10**5) -> float:
    """Exhaustive version of sup_xtz_exact, for oracle cross-checks."""
    from itertools import combinations

    X = np.asarray(X, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    p = X.shape[1]
    _enum_count(p, k_star, enum_cap, "sup_xtz_brute")
    corr = X.T @ z
    best = 0.0
    for support in combinations(range(p), k_star):
        v = float(sum(corr[j] ** 2 for j in support))
        if v > best:
            best = v
    return math.sqrt(best)


def _sim_sre_event(point, spec, reps, slot):
    n, p, k, eps, restarts = (
        point["n"],
        point["p"],
        point["k"],
        point["eps"],
        point["restarts"],
    )
    gen = spec.generator(ROLE_CELL, slot)
    vals = np.empty(reps)
    for r in range(reps):
        X = gen.standard_normal((n, p))
        sub = SeedSpec(spec.master_seed, (slot << 32) | (r + 1))
        report = event_a_check(X, k, eps, restarts=restarts, seed=sub)
        vals[r] = float(not report.holds)
    return vals, 0.0


REGISTRY: dict[str, LemmaSpec] = {
    "chi2_lower": LemmaSpec(
        lemma_id="chi2_lower",
        description="sum of d squared normals below d(1-tau)",
        simulate=_sim_chi2_lower,
        bound=_bound_chi2_lower,
        direction="freq_leq",
        default_grid=(
            {"d": 50, "tau": 0.5},
            {"d": 50, "tau": 0.3},
            {"d": 200, "tau": 0.2},
        ),
    ),
    "gauss_max": LemmaSpec(
        lemma_id="gauss_max",
        description="max |g_i| of p normals above sqrt(2 log p) + u",
        simulate=_sim_gauss_max,
        bound=lambda point: math.exp(-point["u"] ** 2 / 2.0),
        direction="freq_leq",
        default_grid=(
            {"p": 100, "u": 0.0},
            {"p": 100, "u": 0.5},
            {"p": 1000, "u": 1.0},
        ),
    ),
    "order_mean": LemmaSpec(
        lemma_id="order_mean",
        description="mean of the k-th largest |g| among p normals",
        simulate=_sim_order_mean,
        bound=_bound_order_mean,
        direction="mean_leq",
        default_grid=(
            {"p": 1000, "k": 10},
            {"p": 100, "k": 5},
        ),
    ),
    "order_conc": LemmaSpec(
        lemma_id="order_conc",
        description="k-th largest |g| exceeding its (pilot-estimated) mean by u",
        simulate=_sim_order_conc,
        bound=lambda point: math.exp(-point["u"] ** 2 / 2.0),
        direction="freq_leq",
        default_grid=(
            {"p": 100, "k": 10, "u": 1.0},
            {"p": 100, "k": 10, "u": 0.5},
            {"p": 1000, "k": 20, "u": 0.5},
        ),
    ),
    "topk_avg": LemmaSpec(
        lemma_id="topk_avg",
        description="average of the top s squared normals above t log(2p/s)",
        simulate=_sim_topk_avg,
        bound=_bound_topk_avg,
        direction="freq_leq",
        default_grid=(
            {"p": 1000, "s": 10, "t": 4.0},
            {"p": 200, "s": 5, "t": 4.0},
        ),
    ),
    "median_event": LemmaSpec(
        lemma_id="median_event",
        description="joint order-statistic event holding with probability above its explicit lower bound",
        simulate=_sim_median_event,
        bound=_bound_median_event,
        direction="freq_geq",
        default_grid=(
            {"p": 1000, "k": 10, "delta1": 0.5},
            {"p": 1000, "k": 10, "delta1": 1.0},
            {"p": 10000, "k": 10, "delta1": 0.5},
        ),
    ),
    "gauss_sv": LemmaSpec(
        lemma_id="gauss_sv",
        description="extreme singular values of an N x n Gaussian outside sqrt(N) -/+ sqrt(n) -/+ t",
        simulate=_sim_gauss_sv,
        bound=lambda point: 2.0 * math.exp(-point["t"] ** 2 / 2.0),
        direction="freq_leq",
        default_grid=(
            {"N": 100, "n": 20, "t": 1.5},
            {"N": 100, "n": 20, "t": 2.5},
            {"N": 400, "n": 40, "t": 2.0},
        ),
    ),
    "resolvent_sv": LemmaSpec(
        lemma_id="resolvent_sv",
        description="smallest singular value of the resolvent columns below sqrt(1-1/n) - sqrt(k*/n) - t",
        simulate=_sim_resolvent_sv,
        bound=_bound_resolvent_sv,
        direction="freq_leq",
        default_grid=(
            {"n": 200, "p": 400, "k": 2, "k_star": 8, "t": 0.15, "sigma": 1.0},
            {"n": 200, "p": 400, "k": 2, "k_star": 8, "t": 0.25, "sigma": 1.0},
        ),
    ),
    "sup_xtz": LemmaSpec(
        lemma_id="sup_xtz",
        description="largest k*-support correlation norm above sigma sqrt(32 n k* log(p/k*))",
        simulate=_sim_sup_xtz,
        bound=_bound_sup_xtz,
        direction="freq_leq",
        default_grid=(
            {"n": 100, "p": 40, "k_star": 3, "sigma": 1.0},
            {"n": 50, "p": 100, "k_star": 5, "sigma": 2.0},
        ),
    ),
    "sre_event": LemmaSpec(
        lemma_id="sre_event",
        description="conditioning event failing on a fresh Gaussian design",
        simulate=_sim_sre_event,
        bound=lambda point: 0.05,
        direction="freq_leq",
        default_grid=({"n": 1500, "p": 50, "k": 2, "eps": 2.0, "restarts": 8},),
        note="surrogate level: the reference statement has existential constants only; 0.05 is calibrated by pilot runs",
    ),
}


def check_tail_bound(lemma_id: str, grid=None, reps: int = 10_000, seed: int = 0) -> TailReport:
    """Run one registry row over its parameter grid.

    Frequencies pass when empirical <= bound + slack (or >= bound - slack
    for lower bounds); means pass when mean + 3 stderr <= bound. Slack is
    three binomial standard errors plus any sampler-reported term. Each
    grid cell draws from its own counter slot, so cells are independent
    and individually reproducible.
    """
    if lemma_id not in REGISTRY:
        raise ValueError(f"unknown lemma_id {lemma_id!r}; registered: {sorted(REGISTRY)}")
    if reps < 100:
        raise ValueError(f"reps must be at least 100, got {reps}")
    row_spec = REGISTRY[lemma_id]
    points = row_spec.default_grid if grid is None else tuple(dict(pt) for pt in grid)
    spec = SeedSpec(seed)

    rows = []
    for i, point in enumerate(points):
        bound = float(row_spec.bound(point))
        vals, extra = row_spec.simulate(point, spec, reps, i * 16)
        if row_spec.direction == "mean_leq":
            emp = float(vals.mean())
            slack = 3.0 * float(vals.std(ddof=1)) / math.sqrt(vals.size) + extra
            margin = bound - emp + slack
            passed = emp - slack <= bound
        else:
            emp = float(vals.mean())
            slack = 3.0 * math.sqrt(max(emp * (1.0 - emp), 0.0) / vals.size) + extra
            if row_spec.direction == "freq_leq":
                margin = bound + slack - emp
                passed = emp <= bound + slack
            elif row_spec.direction == "freq_geq":
                margin = emp + slack - bound
                passed = emp + slack >= bound
            else:
                raise AssertionError(f"bad direction {row_spec.direction!r}")
        rows.append(TailRow(dict(point), emp, bound, slack, margin, bool(passed)))

    return TailReport(
        lemma_id=lemma_id,
        rows=tuple(rows),
        passed=all(r.passed for r in rows),
        reps=reps,
        seed=seed,
        note=row_spec.note,
    )


def binom_bound_check(p: int, s: int) -> tuple[int, float, bool]:
    """Exact C(p,s) against (e p / s)^s; holds for every valid pair, so a
    failure means broken arithmetic. The bound is returned as +inf when it
    overflows a float; the comparison itself runs in logs."""
    if not 1 <= s <= p:
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    exact = math.comb(p, s)
    log_bound = s * (1.0 + math.log(p / s))
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    holds = math.log(exact) <= log_bound + 1e-9
    return exact, bound, holds
