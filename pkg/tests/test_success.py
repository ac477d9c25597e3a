import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naive_reference import survival_ratio
from qhedge.market import MarketParams, density_p_over_q
from qhedge.success import (
    ConditionalSuccessCurve,
    SuccessFactor,
    capital_grid,
    g_indicator,
    g_ratio,
    survival_grid,
    tabulate_g,
)

# Survival at zero capital for the default parameters: the put expires
# worthless iff Y_T >= 1, whose probability is Phi(0.055 / 0.3).
SURVIVAL_AT_ZERO = 0.5727317593030405
# Times the w = 0 density exp(theta^2 T / 2) = exp(1/18).
G_INDICATOR_AT_ZERO = 0.6054506330645858


class TestSuccessFactor:
    def test_indicator_truth_table(self):
        f = SuccessFactor.INDICATOR
        out = f.evaluate([0.2, 0.5, 0.7], [0.5, 0.5, 0.5])
        assert out.tolist() == [0.0, 1.0, 1.0]

    def test_ratio_partial_credit(self):
        f = SuccessFactor.RATIO
        out = f.evaluate([0.1, 0.25, 0.5, 0.9], [0.5, 0.5, 0.5, 0.5])
        assert out.tolist() == [0.2, 0.5, 1.0, 1.0]

    def test_zero_liability_counts_as_full_success(self):
        for f in SuccessFactor:
            assert f.evaluate(0.0, 0.0).tolist() == 1.0

    def test_round_trip_by_value(self):
        assert SuccessFactor("indicator") is SuccessFactor.INDICATOR
        assert SuccessFactor("ratio") is SuccessFactor.RATIO


class TestCapitalGrid:
    def test_shape_and_endpoints(self):
        grid = capital_grid(3.0, 7)
        assert grid.shape == (8,)
        assert grid[0] == 0.0
        assert grid[-1] == 3.0  # pinned exactly, not 7 * (3/7)
        assert np.all(np.diff(grid) > 0.0)

    def test_uniform_spacing(self):
        grid = capital_grid(1.0, 4)
        np.testing.assert_allclose(np.diff(grid), 0.25, rtol=0.0, atol=1e-16)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            capital_grid(1.0, 1)


class TestSurvivalIndicator:
    def test_range_and_terminal_certainty(self):
        p = MarketParams(rho=0.4)
        w = np.array([-1.5, 0.0, 2.0])
        surv = survival_grid(p, w, capital_grid(1.0, 50), SuccessFactor.INDICATOR)
        assert np.all(surv >= 0.0) and np.all(surv <= 1.0)
        assert np.all(surv[:, -1] == 1.0)

    def test_nondecreasing_in_capital(self):
        p = MarketParams(rho=-0.3)
        surv = survival_grid(p, np.array([0.7]), capital_grid(1.0, 200),
                             SuccessFactor.INDICATOR)
        assert np.all(np.diff(surv[0]) >= -1e-12)

    def test_clamp_zone_is_exact_one(self):
        p = MarketParams()
        grid = np.array([0.0, 1.0 - 1e-13, 1.0])
        surv = survival_grid(p, np.array([0.0]), grid, SuccessFactor.INDICATOR)
        assert surv[0, 1] == 1.0 and surv[0, 2] == 1.0

    def test_uncorrelated_is_w_independent(self):
        p = MarketParams(rho=0.0)
        surv = survival_grid(p, np.array([-3.0, 0.0, 4.0]),
                             capital_grid(1.0, 20), SuccessFactor.INDICATOR)
        assert np.array_equal(surv[0], surv[1])
        assert np.array_equal(surv[1], surv[2])

    def test_positive_correlation_orders_rows(self):
        p = MarketParams(rho=0.8)
        surv = survival_grid(p, np.array([-1.0, 0.0, 1.0]),
                             capital_grid(1.0, 20), SuccessFactor.INDICATOR)
        interior = slice(0, 20)  # last column is 1 for every row
        assert np.all(surv[0, interior] <= surv[1, interior])
        assert np.all(surv[1, interior] <= surv[2, interior])

    def test_zero_capital_oracle(self):
        p = MarketParams()
        surv = survival_grid(p, np.array([0.0]), capital_grid(1.0, 2),
                             SuccessFactor.INDICATOR)
        assert surv[0, 0] == pytest.approx(SURVIVAL_AT_ZERO, rel=1e-12)


class TestGIndicator:
    def test_oracle_at_origin(self):
        value = g_indicator(MarketParams(), 0.0, 0.0)
        assert value == pytest.approx(G_INDICATOR_AT_ZERO, rel=1e-12)
        # Decomposition: density times survival, both known analytically.
        assert value == pytest.approx(math.exp(1.0 / 18.0) * SURVIVAL_AT_ZERO,
                                      rel=1e-12)

    def test_full_capital_returns_density(self):
        p = MarketParams(rho=0.5)
        for w in (-1.2, 0.0, 0.9):
            assert g_indicator(p, w, 1.0) == float(density_p_over_q(p, w))

    def test_monotone_in_capital(self):
        p = MarketParams(rho=0.2)
        values = [g_indicator(p, 0.3, x) for x in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("x", [-0.1, 1.1])
    def test_out_of_range_capital_rejected(self, x):
        with pytest.raises(ValueError):
            g_indicator(MarketParams(), 0.0, x)


class TestGRatio:
    def test_endpoints_match_indicator(self):
        p = MarketParams(rho=0.3)
        for w in (-0.8, 0.5):
            assert g_ratio(p, w, 0.0) == g_indicator(p, w, 0.0)
            assert g_ratio(p, w, 1.0) == g_indicator(p, w, 1.0)

    def test_dominates_indicator_in_interior(self):
        p = MarketParams(rho=0.3)
        for x in (0.2, 0.5, 0.8):
            assert g_ratio(p, 0.4, x) > g_indicator(p, 0.4, x)

    def test_tabulation_matches_adaptive_quadrature(self):
        # The fixed panel rule used for grids against the adaptive scalar.
        p = MarketParams(rho=0.45, sigma_y=0.5, mu_y=0.03)
        w = np.array([-1.1, 0.25, 1.6])
        grid = capital_grid(1.0, 37)
        surv = survival_grid(p, w, grid, SuccessFactor.RATIO)
        dens = density_p_over_q(p, w)
        for i in range(w.shape[0]):
            for j in (1, 7, 18, 30, 36):
                expected = g_ratio(p, float(w[i]), float(grid[j]))
                assert dens[i] * surv[i, j] == pytest.approx(expected, rel=1e-9)

    def test_tabulation_matches_independent_reference(self):
        raw = {"mu_x": 0.1, "sigma_x": 0.3, "mu_y": 0.05, "sigma_y": 0.4,
               "rho": 0.6, "x0": 1.0, "y0": 1.1, "maturity_t": 2.0,
               "strike_k": 1.3}
        p = MarketParams(**raw)
        grid = capital_grid(p.strike_k, 11)
        surv = survival_grid(p, np.array([0.7]), grid, SuccessFactor.RATIO)
        for j in range(12):
            expected = survival_ratio(raw, 0.7, float(grid[j]))
            assert surv[0, j] == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_capped_at_one(self):
        p = MarketParams(rho=0.0)
        surv = survival_grid(p, np.array([0.0]), capital_grid(1.0, 400),
                             SuccessFactor.RATIO)
        assert np.all(surv <= 1.0)


class TestTabulateG:
    def test_curve_contents(self):
        p = MarketParams(rho=0.25)
        curve = tabulate_g(p, 0.4, SuccessFactor.INDICATOR, 30)
        assert np.array_equal(curve.grid, capital_grid(1.0, 30))
        dens = float(density_p_over_q(p, 0.4))
        assert curve.values[-1] == dens
        assert np.all(np.diff(curve.values) >= -1e-12 * dens)
        assert curve.values[0] == pytest.approx(g_indicator(p, 0.4, 0.0),
                                                rel=1e-15)

    def test_ratio_curve_dominates_indicator_curve(self):
        p = MarketParams(rho=0.25)
        ind = tabulate_g(p, 0.4, SuccessFactor.INDICATOR, 30)
        rat = tabulate_g(p, 0.4, SuccessFactor.RATIO, 30)
        assert np.all(rat.values >= ind.values - 1e-15)


class TestCurveValidation:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            ConditionalSuccessCurve(grid=np.array([]), values=np.array([]))
        with pytest.raises(ValueError):
            ConditionalSuccessCurve(grid=np.array([0.0, 1.0]),
                                    values=np.array([0.5]))

    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError):
            ConditionalSuccessCurve(grid=np.array([0.0, 2.0, 1.0]),
                                    values=np.array([0.1, 0.2, 0.3]))


@given(
    rho=st.floats(-0.95, 0.95),
    sigma_y=st.floats(0.05, 1.5),
    mu_y=st.floats(-0.3, 0.3),
    strike=st.floats(0.2, 4.0),
    w=st.floats(-4.0, 4.0),
    n_x=st.integers(2, 40),
    factor=st.sampled_from(list(SuccessFactor)),
)
@settings(max_examples=120, deadline=None)
def test_survival_grid_properties(rho, sigma_y, mu_y, strike, w, n_x, factor):
    p = MarketParams(rho=rho, sigma_y=sigma_y, mu_y=mu_y, strike_k=strike)
    grid = capital_grid(strike, n_x)
    surv = survival_grid(p, np.array([w]), grid, factor)[0]
    assert np.all(surv >= 0.0) and np.all(surv <= 1.0)
    assert surv[-1] == 1.0
    assert np.all(np.diff(surv) >= -1e-10)
