"""Registry completeness, frozen bound arithmetic, cell-stream isolation,
and the dual exact/brute route for the support-correlation statistic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_minimax.estimators import CapacityError
from sparse_minimax.tails import (
    REGISTRY,
    binom_bound_check,
    check_tail_bound,
    sup_xtz_brute,
    sup_xtz_exact,
)

EXPECTED_ROWS = {
    "chi2_lower",
    "gauss_max",
    "order_mean",
    "order_conc",
    "topk_avg",
    "median_event",
    "gauss_sv",
    "resolvent_sv",
    "sup_xtz",
    "sre_event",
}


def test_registry_carries_every_expected_row():
    assert set(REGISTRY) == EXPECTED_ROWS


def test_registry_rows_are_well_formed():
    for lemma_id, spec in REGISTRY.items():
        assert spec.lemma_id == lemma_id
        assert spec.description
        assert spec.direction in ("freq_leq", "mean_leq", "freq_geq")
        assert len(spec.default_grid) >= 1
        for point in spec.default_grid:
            assert math.isfinite(float(spec.bound(point)))


def test_surrogate_rows_carry_a_note():
    assert "surrogate" in REGISTRY["sre_event"].note


def test_checker_rejects_unknown_row():
    with pytest.raises(ValueError, match="unknown lemma_id"):
        check_tail_bound("cauchy_tail")


def test_checker_rejects_tiny_rep_counts():
    with pytest.raises(ValueError, match="at least 100"):
        check_tail_bound("gauss_max", reps=50)


def test_chi2_bound_value():
    bound = REGISTRY["chi2_lower"].bound({"d": 50, "tau": 0.5})
    assert bound == pytest.approx(0.007997074321534473, rel=1e-13)


def test_order_mean_bound_value():
    bound = REGISTRY["order_mean"].bound({"p": 1000, "k": 10})
    assert bound == pytest.approx(3.2874542984521815, rel=1e-13)


def test_median_event_bound_value():
    bound = REGISTRY["median_event"].bound({"p": 1000, "k": 10, "delta1": 0.5})
    assert bound == pytest.approx(0.5637851248734104, rel=1e-12)


def test_topk_bound_value():
    bound = REGISTRY["topk_avg"].bound({"p": 1000, "s": 10, "t": 4.0})
    assert bound == pytest.approx(200.0 ** (1.0 - 12.0 / 8.0), rel=1e-13)


def test_gauss_sv_bound_value():
    bound = REGISTRY["gauss_sv"].bound({"N": 100, "n": 20, "t": 1.5})
    assert bound == pytest.approx(2.0 * math.exp(-1.125), rel=1e-14)


def test_report_is_deterministic():
    a = check_tail_bound("gauss_max", reps=300, seed=1)
    b = check_tail_bound("gauss_max", reps=300, seed=1)
    assert a.to_json() == b.to_json()


def test_report_changes_with_seed():
    a = check_tail_bound("gauss_max", reps=300, seed=1)
    b = check_tail_bound("gauss_max", reps=300, seed=2)
    assert a.rows[0].empirical != b.rows[0].empirical or a.to_json() != b.to_json()


def test_grid_cells_use_isolated_streams():
    # dropping later cells must not change the first cell's draw
    grid2 = ({"p": 100, "u": 0.0}, {"p": 100, "u": 0.5})
    both = check_tail_bound("gauss_max", grid=grid2, reps=400, seed=5)
    first = check_tail_bound("gauss_max", grid=grid2[:1], reps=400, seed=5)
    assert both.rows[0].to_json() == first.rows[0].to_json()


def test_cheap_rows_pass_at_modest_reps():
    for lemma_id, reps in [("chi2_lower", 2000), ("gauss_max", 2000), ("topk_avg", 1000)]:
        report = check_tail_bound(lemma_id, reps=reps)
        assert report.passed, f"{lemma_id}: {[r.to_json() for r in report.rows]}"


def test_median_event_holds_at_modest_reps():
    report = check_tail_bound("median_event", grid=({"p": 1000, "k": 10, "delta1": 0.5},), reps=1000)
    assert report.passed
    row = report.rows[0]
    assert row.empirical + row.slack >= row.bound


def test_report_json_shape():
    report = check_tail_bound("gauss_max", grid=({"p": 50, "u": 0.5},), reps=200, seed=3)
    payload = report.to_json()
    assert payload["lemma_id"] == "gauss_max"
    assert payload["reps"] == 200
    assert payload["seed"] == 3
    assert len(payload["rows"]) == 1
    row = payload["rows"][0]
    assert set(row) == {"params", "empirical", "bound", "slack", "margin", "passed"}


def test_support_correlation_routes_agree(rng):
    for _ in range(10):
        n, p = 30, 12
        X = rng.standard_normal((n, p))
        z = rng.standard_normal(n)
        k_star = int(rng.integers(1, 6))
        assert sup_xtz_exact(X, z, k_star) == pytest.approx(sup_xtz_brute(X, z, k_star), rel=1e-12)


def test_support_correlation_closed_form(rng):
    X = rng.standard_normal((20, 8))
    z = rng.standard_normal(20)
    corr = X.T @ z
    expect = math.sqrt(np.sort(corr**2)[::-1][:3].sum())
    assert sup_xtz_exact(X, z, 3) == pytest.approx(expect, rel=1e-13)


def test_support_correlation_brute_capacity(rng):
    X = rng.standard_normal((10, 30))
    z = rng.standard_normal(10)
    with pytest.raises(CapacityError):
        sup_xtz_brute(X, z, 5)  # C(30,5) = 142506 over the cap


def test_binom_examples():
    exact, bound, holds = binom_bound_check(10, 3)
    assert exact == 120
    assert bound == pytest.approx(743.9087749328762, rel=1e-12)
    assert holds


def test_binom_overflow_goes_through_logs():
    exact, bound, holds = binom_bound_check(1000, 900)
    assert math.isinf(bound)
    assert holds
    assert exact == math.comb(1000, 900)


def test_binom_validation():
    with pytest.raises(ValueError):
        binom_bound_check(5, 0)
    with pytest.raises(ValueError):
        binom_bound_check(5, 6)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=300), st.data())
def test_binom_bound_always_holds(p, data):
    s = data.draw(st.integers(min_value=1, max_value=p))
    _, _, holds = binom_bound_check(p, s)
    assert holds
