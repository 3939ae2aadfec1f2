import numpy as np
import pytest

from hlcast.backtest import (
    HLC,
    HOUSE_PRICE,
    INCOME,
    INTEREST_ONLY_SHARE,
    INTEREST_RATE,
    LTV,
    build_features,
)
from hlcast.regress import design_matrix, ols_fit
from hlcast.synthetic import ScenarioConfig, GeneratedData, generate
from hlcast.timeseries import Quarter, write_frame_csv


class TestDeterminism:
    def test_same_seed_same_frame(self):
        a = generate(ScenarioConfig(seed=123))
        b = generate(ScenarioConfig(seed=123))
        assert a.frame == b.frame
        assert a.truth() == b.truth()

    def test_same_seed_same_bytes(self, tmp_path):
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_frame_csv(generate(ScenarioConfig(seed=9)).frame, pa)
        write_frame_csv(generate(ScenarioConfig(seed=9)).frame, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seeds_differ(self):
        assert generate(ScenarioConfig(seed=1)).frame != generate(ScenarioConfig(seed=2)).frame


class TestShapes:
    def test_dimensions_and_units(self):
        data = generate(ScenarioConfig(seed=0))
        f = data.frame
        assert len(f) == 92
        assert f.start == Quarter(1995, 1)
        assert set(f.names()) == {HOUSE_PRICE, INCOME, INTEREST_RATE, LTV, INTEREST_ONLY_SHARE}
        assert f.column(HOUSE_PRICE).unit == "eur"
        assert f.column(INCOME).unit == "eur"
        assert f.column(INTEREST_RATE).unit == "fraction"
        assert all(v is not None for v in f.column(HOUSE_PRICE).values)

    @pytest.mark.parametrize("seed", range(100))
    def test_ranges_across_seeds(self, seed):
        f = generate(ScenarioConfig(seed=seed)).frame
        rate = f.column(INTEREST_RATE).to_array()
        assert rate.min() >= 0.02 and rate.max() <= 0.09
        share = f.column(INTEREST_ONLY_SHARE).to_array()
        assert share.min() >= 0.0 and share.max() <= 0.5
        ltv = f.column(LTV).to_array()
        assert ltv.min() >= 0.96 and ltv.max() <= 1.04
        assert f.column(INCOME).to_array().min() > 0.0
        assert f.column(HOUSE_PRICE).to_array().min() > 0.0

    def test_share_regimes(self):
        cfg = ScenarioConfig(seed=4)
        share = generate(cfg).frame.column(INTEREST_ONLY_SHARE)
        # flat zero before adoption, a real ramp in between, zero after the
        # regulatory shutdown
        head = [share.get(cfg.start + i) for i in range(8)]
        assert all(v == 0.0 for v in head)
        assert max(v for v in share.values if v is not None) > 0.3
        q = cfg.regime_change
        while q <= share.end:
            assert share.get(q) == 0.0
            q = q + 1
        assert share.get(cfg.regime_change - 1) > 0.0

    def test_boom_bust_in_prices(self):
        cfg = ScenarioConfig(seed=0)
        data = generate(cfg)
        price = data.frame.column(HOUSE_PRICE).to_array()
        # The shutdown hits capacity at the regime change and reaches prices
        # with the capacity lag: a pre-dip peak, a drop of at least 5%, then
        # recovery.
        hit = (cfg.regime_change - cfg.start) + data.hlc_lag
        peak = price[:hit].max()
        trough = price[hit : hit + 4].min()
        assert trough < 0.95 * peak
        assert price[-1] > peak


class TestIdentification:
    def test_noiseless_run_recovers_truth(self):
        data = generate(ScenarioConfig(seed=11, noise_scale=0.0))
        feats = build_features(data.frame, data.params)
        fit = ols_fit(design_matrix(feats, HOUSE_PRICE, [(HLC, data.hlc_lag)]))
        assert fit.coefficients[f"{HLC}_lag{data.hlc_lag}"] == pytest.approx(
            data.price_slope, rel=1e-8
        )
        assert fit.coefficients["intercept"] == pytest.approx(data.price_intercept, rel=1e-8)
        resid = [v for v in fit.residuals.values if v is not None]
        assert max(abs(v) for v in resid) < 1e-6

    def test_noisy_run_close_to_truth(self):
        data = generate(ScenarioConfig(seed=11, noise_scale=0.01))
        feats = build_features(data.frame, data.params)
        fit = ols_fit(design_matrix(feats, HOUSE_PRICE, [(HLC, data.hlc_lag)]))
        assert fit.coefficients[f"{HLC}_lag{data.hlc_lag}"] == pytest.approx(
            data.price_slope, rel=0.05
        )
        assert fit.r_squared > 0.95


class TestConfigValidation:
    def test_minimum_span(self):
        with pytest.raises(ValueError):
            ScenarioConfig(n_quarters=39)

    def test_noise_scale_bounds(self):
        with pytest.raises(ValueError):
            ScenarioConfig(noise_scale=0.5)
        with pytest.raises(ValueError):
            ScenarioConfig(noise_scale=-0.01)

    def test_custom_length(self):
        data = generate(ScenarioConfig(seed=2, n_quarters=60))
        assert len(data.frame) == 60
