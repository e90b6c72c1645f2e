#!/usr/bin/env python3
"""
합성 시계열 생성기 테스트
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from gln_tracking.core.gln import logit_transform
from gln_tracking.core.likelihood import ParamVector, SeriesWindow, WindowWeights, neg_loglik
from gln_tracking.core.optimizers import default_theta0
from gln_tracking.core.synthetic import (
    ConstantBound,
    PiecewiseBound,
    SinusoidBound,
    SyntheticConfig,
    bound_at,
    clamp_lags,
    generate,
    replica_seed,
)


def test_sinusoid_bound():
    curve = SinusoidBound()
    assert bound_at(0, curve) == pytest.approx(1.0)
    assert bound_at(1500, curve) == pytest.approx(1.25)
    assert bound_at(4500, curve) == pytest.approx(0.75)
    assert isinstance(bound_at(10, curve), float)
    assert bound_at(np.arange(5), curve).shape == (5,)
    with pytest.raises(ValidationError):
        SinusoidBound(base=1.0, amplitude=1.0)


def test_constant_and_piecewise_bounds():
    assert_allclose(bound_at(np.arange(4), ConstantBound(value=2.0)), 2.0)
    curve = PiecewiseBound(times=[0, 10], values=[1.0, 2.0])
    assert bound_at(5, curve) == pytest.approx(1.5)
    assert bound_at(20, curve) == pytest.approx(2.0)
    assert bound_at(-5, curve) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        PiecewiseBound(times=[0, 0], values=[1.0, 2.0])
    with pytest.raises(ValidationError):
        PiecewiseBound(times=[0, 1], values=[1.0, -2.0])


def test_bound_is_discriminated_in_config():
    config = SyntheticConfig.model_validate({"T": 10, "bound": {"kind": "constant", "value": 3.0}})
    assert isinstance(config.bound, ConstantBound)
    assert config.order == 1


def test_series_stays_inside_moving_support():
    truth = generate(SyntheticConfig(T=12000, seed=1))
    assert truth.series.shape == (12000,)
    assert np.all(truth.series > 0.0)
    assert np.all(truth.series < truth.bounds)


def test_same_seed_same_series():
    a = generate(SyntheticConfig(T=2000, seed=5))
    b = generate(SyntheticConfig(T=2000, seed=5))
    c = generate(SyntheticConfig(T=2000, seed=6))
    assert np.array_equal(a.series, b.series)
    assert not np.array_equal(a.series, c.series)


def test_white_noise_transform_mean():
    T = 12000
    config = SyntheticConfig(T=T, lambdas=[0.0], sigma2=1.0, nu=1.5, bound=ConstantBound(value=1.0), seed=2)
    y = logit_transform(generate(config).series, 1.5)
    assert abs(y.mean()) < 4.0 / math.sqrt(T)


def test_lag_one_autocorrelation():
    config = SyntheticConfig(T=12000, lambdas=[0.9], sigma2=1.0, nu=1.5, bound=ConstantBound(value=1.0), seed=3)
    y = logit_transform(generate(config).series, 1.5)
    corr = np.corrcoef(y[:-1], y[1:])[0, 1]
    assert 0.85 <= corr <= 0.95


def test_truth_beats_default_start():
    config = SyntheticConfig(T=3000, bound=ConstantBound(value=1.0), seed=4)
    series = generate(config).series
    window = SeriesWindow.from_series(series, 1, series.size - 1, 1)
    weights = WindowWeights.rectangular()
    truth = ParamVector.from_natural([0.9], 1.0, 1.5, 1.0)
    assert neg_loglik(window, truth, weights) < neg_loglik(window, default_theta0(1), weights)


def test_clamp_lags_and_replica_seed():
    assert_allclose(clamp_lags(np.array([0.5, 1.2, 0.9995]), 1.0, 0.001), [0.5, 0.999, 0.999])
    assert replica_seed(10, 0) == 10
    assert replica_seed(10, 3) == 13


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            print(f"=== {name} ===")
            fn()
    print("all synthetic tests passed")
