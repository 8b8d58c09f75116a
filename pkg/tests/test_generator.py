import numpy as np
import pytest

from parchange.core import ConfigError, Segmentation
from parchange.estimation import adjust, build_design, estimate_phi
from parchange.generator import (
    GeneratorSpec,
    RegimeParams,
    annual_operator,
    generate,
    is_periodic_stationary,
    mean_shift_spec,
)


def regime(s, phi, sigma2=1.0, a=0.0, b=0.0, mu=None):
    return RegimeParams(
        a=a, b=b,
        mu=np.zeros(s) if mu is None else np.asarray(mu, float),
        phi=np.asarray(phi, float).reshape(s, -1),
        sigma2=np.full(s, sigma2),
    )


class TestStationarity:
    def test_zero(self):
        assert is_periodic_stationary(np.zeros((12, 3)))

    def test_unit_root(self):
        assert not is_periodic_stationary([[1.0]])

    def test_explosive_season_offset(self):
        assert is_periodic_stationary([[2.0], [0.4]])
        assert annual_operator([[2.0], [0.4]])[0, 0] == pytest.approx(0.8)
        assert not is_periodic_stationary([[2.0], [0.6]])

    def test_order_two(self):
        # AR(2) with roots inside/outside the unit circle
        assert is_periodic_stationary([[0.5, 0.3]])
        assert not is_periodic_stationary([[0.5, 0.6]])

    def test_generate_rejects_nonstationary(self):
        seg = Segmentation(10, (5,), 1)
        spec = GeneratorSpec(1, seg, (regime(1, [0.5]), regime(1, [1.2])))
        with pytest.raises(ConfigError, match="segment 2"):
            generate(spec)


class TestSpec:
    def test_regime_count(self):
        with pytest.raises(ConfigError):
            GeneratorSpec(2, Segmentation(10, (5,), 1), (regime(2, [0.1, 0.1]),))

    def test_negative_variance(self):
        with pytest.raises(ConfigError):
            GeneratorSpec(1, Segmentation(10), (regime(1, [0.1], sigma2=-1.0),))

    def test_mixed_orders(self):
        with pytest.raises(ConfigError):
            GeneratorSpec(1, Segmentation(10, (5,), 1), (regime(1, [0.1]), regime(1, [[0.1, 0.1]])))


class TestGenerate:
    def test_skeleton(self):
        s = 4
        mu = [1.0, 2.0, -1.0, 0.0]
        spec = GeneratorSpec(s, Segmentation(6), (regime(s, np.zeros(s), 0.0, a=2.0, b=0.5, mu=mu),))
        x = generate(spec).values
        t = np.arange(1, 25)
        np.testing.assert_array_equal(x, 2.0 + 0.5 * t + np.tile(mu, 6))

    def test_seeded(self):
        spec = mean_shift_spec(seed=5)
        np.testing.assert_array_equal(generate(spec).values, generate(spec).values)
        assert not np.array_equal(generate(spec).values, generate(mean_shift_spec(seed=6)).values)

    def test_ar1_autocorrelation(self):
        x = generate(GeneratorSpec(1, Segmentation(20000), (regime(1, [0.5]),), seed=3)).values
        x = x - x.mean()
        r1 = (x[1:] @ x[:-1]) / (x @ x)
        assert abs(r1 - 0.5) < 4 * np.sqrt((1 - 0.25) / 20000)

    def test_mean_shift_size(self):
        spec = mean_shift_spec(12, 60, 30, 3.0, phi=0.2, sigma=2.0)
        assert spec.segmentation.tau == (30,)
        np.testing.assert_allclose(spec.regimes[1].mu - spec.regimes[0].mu, 6.0)
        np.testing.assert_allclose(spec.regimes[0].sigma2, 4.0)

    def test_lags_cross_boundaries(self):
        """With no innovations after the start the recursion carries over."""
        s = 1
        seg = Segmentation(6, (4,), 1)
        spec = GeneratorSpec(s, seg, (regime(s, [0.5], 0.0), regime(s, [0.5], 0.0)), burn_in=0)
        assert not generate(spec).values.any()


def test_round_trip_coefficients():
    # Sampling error of each coefficient is about sigma_k / sqrt(N var(Y_{k-1})),
    # so the 0.1 bound needs strongly persistent seasons to hold in most seeds.
    s, N = 4, 200
    phi = np.array([[0.9], [-0.9], [0.9], [0.9]])
    mu = np.array([1.0, -1.0, -1.0, 1.0])
    good = 0
    for seed in range(40):
        spec = GeneratorSpec(s, Segmentation(N), (RegimeParams(1.0, 0.002, mu, phi, np.full(s, 0.5)),), seed=seed)
        series = generate(spec)
        seg = Segmentation(N)
        adj = adjust(series.values, seg, s)
        est = np.array([estimate_phi(build_design(adj.Y, seg, 1, k, 1, s), [1]) for k in range(1, s + 1)])
        good += np.max(np.abs(est - phi)) < 0.1
    assert good >= 38
