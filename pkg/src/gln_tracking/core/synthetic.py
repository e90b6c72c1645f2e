#!/usr/bin/env python3
"""
시간에 따라 변하는 상한 b_t 를 가진 합성 GLN AR 시계열 생성기
"""

import math
from dataclasses import dataclass
from typing import Annotated, List, Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gln_tracking.core.gln import inverse_transform, logit_transform
from gln_tracking.core.likelihood import lag_context


class SinusoidBound(BaseModel):
    """b_t = base + amplitude * sin(2 pi t / period)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["sinusoid"] = "sinusoid"
    base: float = Field(1.0, gt=0)
    amplitude: float = Field(0.25, ge=0)
    period: float = Field(6000.0, gt=0)

    @model_validator(mode="after")
    def _check_positive(self):
        if self.amplitude >= self.base:
            raise ValueError(f"amplitude {self.amplitude} must be smaller than base {self.base}")
        return self

    def at(self, t: ArrayLike):
        return self.base + self.amplitude * np.sin(2.0 * math.pi * np.asarray(t, dtype=np.float64) / self.period)


class ConstantBound(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant"] = "constant"
    value: float = Field(1.0, gt=0)

    def at(self, t: ArrayLike):
        return np.full(np.shape(t), self.value, dtype=np.float64)


class PiecewiseBound(BaseModel):
    """knot 사이 선형 보간, 구간 밖은 끝 값 유지"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["piecewise"] = "piecewise"
    times: List[float]
    values: List[float]

    @model_validator(mode="after")
    def _check_knots(self):
        if len(self.times) < 1 or len(self.times) != len(self.values):
            raise ValueError("piecewise bound needs matching, non-empty times and values")
        if any(v <= 0 for v in self.values):
            raise ValueError("piecewise bound values must be positive")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("piecewise bound times must be strictly increasing")
        return self

    def at(self, t: ArrayLike):
        return np.interp(np.asarray(t, dtype=np.float64), self.times, self.values)


BoundCurve = Annotated[Union[SinusoidBound, ConstantBound, PiecewiseBound], Field(discriminator="kind")]


class SyntheticConfig(BaseModel):
    """합성 시계열 설정. 기본값: T=12000, lambda=0.9, sigma2=1, nu=1.5, p=1, sinusoid 상한"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    T: int = Field(12000, ge=2)
    lambdas: List[float] = Field(default_factory=lambda: [0.9], min_length=1)
    sigma2: float = Field(1.0, gt=0)
    nu: float = Field(1.5, gt=0)
    bound: BoundCurve = Field(default_factory=SinusoidBound)
    seed: int = 0
    # 하강하는 상한이 과거 관측을 넘어설 때 lag 을 b_t - delta 로 당김
    delta: float = Field(0.001, gt=0)

    @property
    def order(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    series: NDArray[np.float64]
    bounds: NDArray[np.float64]
    lambdas: tuple
    sigma2: float
    nu: float


def bound_at(t: ArrayLike, curve: BoundCurve):
    """시각 t 에서의 상한 (스칼라 t 면 float)"""
    out = curve.at(t)
    return float(out) if np.ndim(out) == 0 else out


def clamp_lags(lags: NDArray[np.float64], b: float, delta: float) -> NDArray[np.float64]:
    """b 이상인 lag 을 b - delta 로 당겨 (0, b) 안에 둔다"""
    return np.minimum(lags, b - delta)


def replica_seed(seed: int, replica: int) -> int:
    return seed + replica


def generate(config: SyntheticConfig) -> SyntheticTruth:
    """
    x_t = b_t * inverse_transform(y_t, nu), y_t ~ N(sum_k lambda_k gamma(x_{t-k}/b_t; nu), sigma2)
    처음 p 개는 mu = 0 에서 생성. 같은 seed 면 동일한 시계열.
    """
    rng = np.random.default_rng(config.seed)
    T, p = config.T, config.order
    bounds = np.asarray(config.bound.at(np.arange(T)), dtype=np.float64)
    eps = rng.standard_normal(T)
    lam = np.asarray(config.lambdas, dtype=np.float64)
    sigma = math.sqrt(config.sigma2)

    x = np.empty(T)
    for t in range(T):
        b_t = bounds[t]
        mu = 0.0
        if t >= p:
            lags = clamp_lags(lag_context(x, t, p), b_t, config.delta)
            mu = float(lam @ logit_transform(lags / b_t, config.nu))
        u = inverse_transform(mu + sigma * eps[t], config.nu)
        x[t] = min(b_t * u, np.nextafter(b_t, 0.0))

    return SyntheticTruth(series=x, bounds=bounds, lambdas=tuple(config.lambdas),
                          sigma2=config.sigma2, nu=config.nu)
