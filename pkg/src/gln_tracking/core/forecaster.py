#!/usr/bin/env python3
"""
추적된 파라미터로 1-step-ahead 예측분포를 만드는 모듈
projection + coarsening, 그리고 climatology / probabilistic persistence / ideal 벤치마크
"""

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from gln_tracking.core.gln import GlnParams, conditional_mean_mu, gln_cdf, gln_quantile
from gln_tracking.core.likelihood import ParamVector
from gln_tracking.core.synthetic import clamp_lags
from gln_tracking.errors import DataError, DomainError

DEFAULT_DELTA = 0.001
CLIMATOLOGY_CAP = 5000
PERSISTENCE_N_ERR = 100
EXPORT_QUANTILES = (0.025, 0.125, 0.875, 0.975)


class GlnForecast(GlnParams):
    """예측분포 GLN(mu, sigma2, nu, b)"""

    def cdf(self, y: ArrayLike):
        return gln_cdf(y, self)

    def quantile(self, prob: ArrayLike):
        return gln_quantile(prob, self)


@dataclass(frozen=True, eq=False)
class EnsembleForecast:
    """정렬된 샘플로 표현한 예측분포"""
    members: NDArray[np.float64]

    def __post_init__(self):
        members = np.sort(np.asarray(self.members, dtype=np.float64))
        if members.size == 0:
            raise DomainError("ensemble forecast needs at least one member")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return self.members.size

    def cdf(self, y: ArrayLike):
        out = np.searchsorted(self.members, np.asarray(y, dtype=np.float64), side="right") / self.size
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, prob: ArrayLike):
        return np.quantile(self.members, prob)


@dataclass(frozen=True)
class ProjectedParams:
    theta_tilde: ParamVector
    delta: float


@dataclass(frozen=True, eq=False)
class ForecastRecord:
    """
    t 시점에 발행한 x_{t+1} 예측. gln / ensemble 중 정확히 하나만 가진다.
    members_ref 는 ensemble 을 데이터 파일에서 다시 만들기 위한 참조 문자열.
    """
    issue_time: int
    target_time: int
    method: str
    kind: Literal["gln", "ensemble"]
    gln: Optional[GlnForecast] = None
    ensemble: Optional[EnsembleForecast] = None
    members_ref: Optional[str] = None

    def __post_init__(self):
        if (self.gln is None) == (self.ensemble is None):
            raise DomainError("a forecast record holds exactly one of gln / ensemble")
        if (self.kind == "gln") != (self.gln is not None):
            raise DomainError(f"kind '{self.kind}' does not match the stored distribution")

    @property
    def distribution(self):
        return self.gln if self.gln is not None else self.ensemble


def coarsen(x: ArrayLike, delta: float = DEFAULT_DELTA, upper: Optional[float] = None):
    """관측을 [delta, upper - delta] 로 당김 (upper 가 None 이면 하한만)"""
    lo = delta
    hi = np.inf if upper is None else upper - delta
    out = np.clip(np.asarray(x, dtype=np.float64), lo, hi)
    return float(out) if np.ndim(out) == 0 else out


def project_theta(theta_hat: ParamVector, recent: Sequence[float], delta: float = DEFAULT_DELTA) -> ProjectedParams:
    """
    K = R^{p+2} x (max(recent), +inf) 로의 projection.
    max(recent) >= b_hat 이면 b_tilde = max(recent) + delta, 아니면 b_hat 유지.
    """
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    top = float(np.max(recent))
    if top >= theta_hat.b:
        return ProjectedParams(theta_hat.with_bound(top + delta), delta)
    return ProjectedParams(theta_hat, delta)


def predictive_distribution(projected: ProjectedParams, recent: Sequence[float]) -> GlnForecast:
    """
    GLN(mu_{t+1} = sum_k lambda_k gamma(x_{t+1-k} / b_tilde; nu), sigma2, nu, b_tilde)

    Args:
        projected (ProjectedParams): projection 된 파라미터
        recent: (x_t, ..., x_{t-p+1})
    """
    theta = projected.theta_tilde
    mu = conditional_mean_mu(recent, theta.lambdas, theta.nu, theta.b)
    return GlnForecast(mu=mu, sigma2=theta.sigma2, nu=theta.nu, b=theta.b)


def ideal_forecast(
    lambdas: Sequence[float], sigma2: float, nu: float, b_next: float, recent: Sequence[float],
    delta: float = DEFAULT_DELTA,
) -> GlnForecast:
    """참값 (lambda, sigma2, nu) 와 실제 b_{t+1} 로 만든 ideal forecaster"""
    lags = clamp_lags(np.asarray(recent, dtype=np.float64), b_next, delta)
    mu = conditional_mean_mu(lags, lambdas, nu, b_next)
    return GlnForecast(mu=mu, sigma2=sigma2, nu=nu, b=b_next)


def climatology_forecast(history: Sequence[float], cap: int = CLIMATOLOGY_CAP) -> EnsembleForecast:
    """과거 전체 관측의 경험분포. cap 을 넘으면 균등 간격으로 thinning"""
    hist = np.asarray(history, dtype=np.float64)
    if hist.size == 0:
        raise DataError("climatology needs a non-empty history")
    if hist.size > cap:
        members = np.sort(hist)[np.linspace(0, hist.size - 1, cap).round().astype(np.int64)]
    else:
        members = hist
    return EnsembleForecast(members)


def persistence_forecast(
    history: Sequence[float], n_err: int = PERSISTENCE_N_ERR, delta: float = DEFAULT_DELTA,
    upper: Optional[float] = None,
) -> EnsembleForecast:
    """
    마지막 관측 x_t 에 최근 n_err 개의 persistence error e_j = x_j - x_{j-1} 를 더한 ensemble.
    멤버는 coarsen 범위로 clip.
    """
    hist = np.asarray(history, dtype=np.float64)
    if n_err < 1:
        raise DomainError(f"n_err must be >= 1, got {n_err}")
    if hist.size < n_err + 1:
        raise DataError(f"persistence needs at least n_err+1={n_err + 1} observations, got {hist.size}")
    errors = np.diff(hist[-(n_err + 1):])
    return EnsembleForecast(coarsen(hist[-1] + errors, delta, upper))


def forecast_quantiles(forecast, probs: Sequence[float] = EXPORT_QUANTILES) -> NDArray[np.float64]:
    """분위수 export 용 (gln / ensemble 공통)"""
    return np.asarray(forecast.quantile(np.asarray(probs, dtype=np.float64)), dtype=np.float64)
