import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridce import quantization as qz
from hybridce.config import INF_BITS, ConfigError, SystemConfig

TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}


class TestDistortionFactor:
    def test_table_values(self):
        assert qz.distortion_factor(1) == 0.3634
        assert qz.distortion_factor(4) == 0.009497
        assert qz.distortion_factor(INF_BITS) == 0.0
        assert qz.distortion_factor("inf") == 0.0

    def test_high_resolution_formula(self):
        assert qz.distortion_factor(6) == pytest.approx(math.pi * math.sqrt(3) / 2 * 4.0 ** -6)

    def test_monotone(self):
        values = [qz.distortion_factor(b) for b in range(1, 13)] + [qz.distortion_factor(INF_BITS)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_invalid(self):
        with pytest.raises(ConfigError):
            qz.distortion_factor(0)


class TestCodebook:
    def test_one_bit(self):
        cb = qz.build_codebook(1)
        np.testing.assert_allclose(cb.levels, [-math.sqrt(2 / math.pi), math.sqrt(2 / math.pi)], atol=1e-9)
        np.testing.assert_array_equal(cb.thresholds, [0.0])

    @pytest.mark.parametrize("bits", [1, 2, 3, 4, 5])
    def test_analytic_mse_matches_table(self, bits):
        # the tabulated values are rounded; b=5 is 0.0025047 at full precision
        assert qz.build_codebook(bits).mse == pytest.approx(TABLE[bits], rel=5e-3)

    @pytest.mark.parametrize("bits", [2, 3])
    def test_empirical_mse(self, bits):
        x = np.random.default_rng(bits).standard_normal(1_000_000)
        mse = np.mean((x - qz.quantize_real(x, qz.build_codebook(bits))) ** 2)
        assert mse == pytest.approx(TABLE[bits], rel=0.02)

    @pytest.mark.parametrize("bits", range(1, 13))
    def test_symmetric_and_sorted(self, bits):
        cb = qz.build_codebook(bits)
        assert cb.levels.size == 2 ** bits
        assert np.all(np.diff(cb.levels) > 0)
        np.testing.assert_allclose(cb.levels, -cb.levels[::-1], atol=1e-12)
        np.testing.assert_allclose(cb.thresholds, 0.5 * (cb.levels[1:] + cb.levels[:-1]), atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            qz.build_codebook(13)
        with pytest.raises(ConfigError):
            qz.build_codebook(INF_BITS)

    def test_to_dict(self):
        d = qz.build_codebook(2).to_dict()
        assert d["bits"] == 2 and len(d["levels"]) == 4 and len(d["thresholds"]) == 3


class TestQuantize:
    def test_ideal_is_identity(self, rng):
        x = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        np.testing.assert_array_equal(qz.quantize(x, qz.quantizer_model(INF_BITS)), x)

    def test_one_bit_sign_times_level(self, rng):
        x = rng.standard_normal(100) + 1j * rng.standard_normal(100)
        var = 2.5
        out = qz.quantize(x, qz.quantizer_model(1), input_variance=var)
        level = math.sqrt(2 / math.pi) * math.sqrt(var)
        np.testing.assert_allclose(np.abs(out.real), level)
        np.testing.assert_allclose(np.abs(out.imag), level)
        assert np.all(np.sign(out.real) == np.sign(x.real))
        assert np.all(np.sign(out.imag) == np.sign(x.imag))

    def test_complex_mse_matches_table(self):
        rng = np.random.default_rng(9)
        x = (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)) / math.sqrt(2)
        q = qz.quantize(x, qz.quantizer_model(2), input_variance=0.5)
        ratio = np.mean(np.abs(x - q) ** 2) / np.mean(np.abs(x) ** 2)
        assert ratio == pytest.approx(TABLE[2], rel=0.02)

    @pytest.mark.parametrize("bits", [1, 2, 3])
    def test_bussgang_distortion_uncorrelated(self, bits):
        rng = np.random.default_rng(bits)
        x = rng.standard_normal(1_000_000)
        model = qz.quantizer_model(bits)
        err = qz.quantize(x + 0j, model, input_variance=1.0).real - model.gain * x
        corr = np.mean(err * x) / math.sqrt(np.mean(err ** 2) * np.mean(x ** 2))
        assert abs(corr) < 0.02

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.lists(st.floats(-8, 8), min_size=2, max_size=40))
    def test_monotone_and_odd(self, bits, values):
        cb = qz.build_codebook(bits)
        x = np.sort(np.asarray(values))
        q = qz.quantize_real(x, cb)
        assert np.all(np.diff(q) >= 0)
        nonzero = x != 0  # Q(0) is a level, so odd symmetry cannot hold there
        np.testing.assert_array_equal(qz.quantize_real(-x[nonzero], cb), -q[nonzero])

    def test_empirical_agc(self, rng):
        x = 3.0 * (rng.standard_normal(1000) + 1j * rng.standard_normal(1000))
        out = qz.quantize(x, qz.quantizer_model(3, agc_mode="empirical"))
        assert np.mean(np.abs(x - out) ** 2) / np.mean(np.abs(x) ** 2) < 0.06

    def test_analytic_requires_variance(self):
        with pytest.raises(ConfigError):
            qz.quantize(np.ones(3, complex), qz.quantizer_model(2))


class TestBussgang:
    def test_ideal_adc(self):
        cfg = SystemConfig(n_t=4, n_r=4, n_rf_t=2, n_rf_r=2, noise_var=0.7)
        gain, stats = qz.bussgang_linearize(cfg)
        assert gain == 1.0
        assert stats.per_element_var == 0.7

    def test_one_bit_example(self):
        cfg = SystemConfig(n_t=8, n_r=8, n_rf_t=4, n_rf_r=4, noise_var=1.0, adc_bits=1)
        gain, stats = qz.bussgang_linearize(cfg)
        assert gain == pytest.approx(0.6366)
        assert stats.per_element_var == pytest.approx(0.6366 * (1 + 0.3634 * 4), rel=1e-12)
        assert stats.total_var == pytest.approx(cfg.num_uses * 4 * 1.56196176, rel=1e-9)

    def test_model_overrides_config_bits(self):
        cfg = SystemConfig(n_t=4, n_r=4, n_rf_t=2, n_rf_r=2, noise_var=1.0)
        gain, _ = qz.bussgang_linearize(cfg, qz.quantizer_model(2))
        assert gain == pytest.approx(1 - 0.1175)

    def test_effective_noise_monte_carlo(self):
        # scalar link with sigma_h^2 P N_RFt = 1 and sigma_v^2 = 1; e = Q(s + v) - (1 - eta) s
        cfg = SystemConfig(n_t=1, n_r=1, n_rf_t=1, n_rf_r=1, noise_var=1.0, adc_bits=1)
        rng = np.random.default_rng(5)
        n = 400_000
        s = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        v = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        model = qz.quantizer_model(1)
        y = qz.quantize(s + v, model, input_variance=qz.analytic_input_variance(cfg))
        e = y - model.gain * s
        _, stats = qz.bussgang_linearize(cfg)
        assert np.mean(np.abs(e) ** 2) == pytest.approx(stats.per_element_var, rel=0.02)
