import numpy as np
import pytest

from indexcast.metrics import (
    EvalStats,
    evaluate,
    max_abs_percent_error,
    mean_abs_percent_error,
    pearson_corr,
    rmse,
)

# The worked pair used throughout: actual (100, 200), predicted (110, 190).
ACTUAL = np.array([100.0, 200.0])
PREDICTED = np.array([110.0, 190.0])


def test_mean_abs_percent_error_hand_value():
    # (|100-110|/100 + |200-190|/200) / 2 * 100 = (0.10 + 0.05)/2 * 100 = 7.5
    assert mean_abs_percent_error(ACTUAL, PREDICTED) == pytest.approx(7.5, abs=1e-12)


def test_max_abs_percent_error_hand_value():
    # denominators are the *predicted* values:
    # max(10/110, 10/190) * 100 = 1000/110 = 9.0909...
    assert max_abs_percent_error(ACTUAL, PREDICTED) == pytest.approx(100.0 / 11.0, abs=1e-12)


def test_rmse_hand_value():
    # residuals (3, 4): sqrt((9+16)/2) = sqrt(12.5)
    assert rmse(np.array([3.0, 4.0]), np.array([0.0, 0.0])) == pytest.approx(
        np.sqrt(12.5), abs=1e-12
    )
    assert rmse(ACTUAL, ACTUAL) == 0.0


def test_percentage_errors_reject_zero_denominators():
    with pytest.raises(ValueError):
        mean_abs_percent_error(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        max_abs_percent_error(np.array([1.0, 1.0]), np.array([0.0, 1.0]))


def test_pearson_corr_limits():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert pearson_corr(x, 2.0 * x + 1.0) == pytest.approx(1.0, abs=1e-12)
    assert pearson_corr(x, -0.5 * x) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_corr_degenerate_returns_none():
    x = np.array([1.0, 2.0, 3.0])
    const = np.array([5.0, 5.0, 5.0])
    assert pearson_corr(x, const) is None
    assert pearson_corr(const, x) is None


def test_pearson_corr_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = rng.normal(size=50)
        b = rng.normal(size=50)
        assert pearson_corr(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)


def test_inputs_validated():
    with pytest.raises(ValueError):
        rmse(np.array([1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        rmse(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        rmse(np.array([np.nan, 1.0]), np.array([1.0, 1.0]))


def test_evaluate_routes_scaled_and_raw():
    # rmse must come from the scaled pair, the percentage errors and the
    # correlation from the raw pair
    actual_scaled = np.array([0.2, 0.4])
    pred_scaled = np.array([0.25, 0.35])
    stats = evaluate(actual_scaled, pred_scaled, ACTUAL, PREDICTED)
    assert isinstance(stats, EvalStats)
    assert stats.rmse_scaled == pytest.approx(rmse(actual_scaled, pred_scaled))
    assert stats.map == pytest.approx(100.0 / 11.0, abs=1e-12)
    assert stats.mape == pytest.approx(7.5, abs=1e-12)
    assert stats.corr == pytest.approx(pearson_corr(ACTUAL, PREDICTED))


def test_evalstats_row_renders_none_correlation():
    stats = evaluate(
        np.array([0.5, 0.5]), np.array([0.4, 0.4]), np.array([10.0, 10.0]), np.array([9.0, 9.0])
    )
    assert stats.corr is None
    row = stats.as_row()
    assert len(row) == 4
