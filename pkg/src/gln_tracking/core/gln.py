#!/usr/bin/env python3
"""
Generalized logit-normal (GLN) 분포 모듈
(0, b) 위의 GLN 분포: 변환, 밀도, 누적분포, 분위수, 샘플링, AR 조건부 평균
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import log_expit, ndtr, ndtri

from gln_tracking.errors import DomainError

Real = Union[float, NDArray[np.float64]]

# (x_{t-1}, ..., x_{t-p}) 순서의 lag 벡터
LagVector = NDArray[np.float64]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GlnParams:
    """
    GLN 분포 파라미터

    Args:
        mu (float): 정규 변환의 location
        sigma2 (float): scale (> 0)
        nu (float): shape (> 0)
        b (float): support 상한 (> 0)
    """
    mu: float
    sigma2: float
    nu: float
    b: float

    def __post_init__(self):
        values = (self.mu, self.sigma2, self.nu, self.b)
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"GLN parameters must be finite: {values}")
        if self.sigma2 <= 0 or self.nu <= 0 or self.b <= 0:
            raise DomainError(
                f"GLN parameters require sigma2, nu, b > 0 (got sigma2={self.sigma2}, nu={self.nu}, b={self.b})"
            )

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def median(self) -> float:
        return float(self.b * inverse_transform(self.mu, self.nu))


def _log_one_minus_pow(log_u: Real, nu: Real) -> Real:
    # log(1 - u^nu), u^nu 가 1 에 가까워도 안정적
    return np.log(-np.expm1(nu * log_u))


def _gamma_from_log(log_u: Real, nu: Real) -> Real:
    return nu * log_u - _log_one_minus_pow(log_u, nu)


def logit_transform(u: ArrayLike, nu: float) -> Real:
    """
    generalized logit 변환 gamma(u; nu) = log(u^nu) - log(1 - u^nu)

    Args:
        u: (0, 1) 안의 값 (스칼라 또는 배열)
        nu (float): shape (> 0)

    Returns:
        변환된 값. u 에 대해 strictly increasing
    """
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(~(u_arr > 0.0)) or np.any(~(u_arr < 1.0)):
        raise DomainError("logit_transform requires 0 < u < 1; coarsen the observation first")
    out = _gamma_from_log(np.log(u_arr), nu)
    return float(out) if out.ndim == 0 else out


def inverse_transform(y: ArrayLike, nu: float) -> Real:
    """gamma 의 역변환: sigmoid(y)^(1/nu)"""
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    y_arr = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y_arr)):
        raise DomainError("inverse_transform requires finite input")
    out = np.exp(log_expit(y_arr) / nu)
    return float(out) if out.ndim == 0 else out


def gln_logpdf(x: ArrayLike, params: GlnParams) -> Real:
    """log 밀도. support 밖은 -inf"""
    x_arr = np.asarray(x, dtype=np.float64)
    inside = (x_arr > 0.0) & (x_arr < params.b)
    safe_x = np.where(inside, x_arr, 0.5 * params.b)
    log_u = np.log(safe_x / params.b)
    z = (_gamma_from_log(log_u, params.nu) - params.mu) / params.sigma
    logp = (
        math.log(params.nu)
        - np.log(safe_x)
        - _log_one_minus_pow(log_u, params.nu)
        - LOG_SQRT_2PI
        - 0.5 * math.log(params.sigma2)
        - 0.5 * z * z
    )
    out = np.where(inside, logp, -np.inf)
    return float(out) if out.ndim == 0 else out


def gln_pdf(x: ArrayLike, params: GlnParams) -> Real:
    """
    GLN 밀도. 0 < x < b 에서
    (1/sqrt(2 pi sigma2)) * nu / (x (1 - (x/b)^nu)) * exp(-((gamma(x/b) - mu)/sigma)^2 / 2),
    그 외에는 0
    """
    out = np.exp(gln_logpdf(x, params))
    return float(out) if np.ndim(out) == 0 else out


def gln_cdf(x: ArrayLike, params: GlnParams) -> Real:
    """F(x) = Phi((gamma(x/b) - mu) / sigma), x <= 0 이면 0, x >= b 이면 1"""
    x_arr = np.asarray(x, dtype=np.float64)
    inside = (x_arr > 0.0) & (x_arr < params.b)
    safe_x = np.where(inside, x_arr, 0.5 * params.b)
    z = (_gamma_from_log(np.log(safe_x / params.b), params.nu) - params.mu) / params.sigma
    out = np.where(inside, ndtr(z), np.where(x_arr >= params.b, 1.0, 0.0))
    return float(out) if out.ndim == 0 else out


def gln_quantile(prob: ArrayLike, params: GlnParams) -> Real:
    """Q(p) = b * sigmoid(mu + sigma * Phi^{-1}(p))^(1/nu)"""
    p_arr = np.asarray(prob, dtype=np.float64)
    if np.any(~(p_arr > 0.0)) or np.any(~(p_arr < 1.0)):
        raise DomainError("gln_quantile requires 0 < prob < 1")
    y = params.mu + params.sigma * ndtri(p_arr)
    out = params.b * np.exp(log_expit(y) / params.nu)
    return float(out) if out.ndim == 0 else out


def gln_sample(params: GlnParams, rng: np.random.Generator, size: Optional[int] = None) -> Real:
    """
    Y ~ N(mu, sigma2) 를 뽑아 역변환 후 b 로 스케일

    Args:
        params (GlnParams): 분포 파라미터
        rng (np.random.Generator): 스레드별 난수 스트림
        size (int, optional): 샘플 개수. None 이면 스칼라

    Returns:
        (0, b) 안의 샘플
    """
    y = rng.normal(params.mu, params.sigma, size=size)
    out = params.b * np.exp(log_expit(y) / params.nu)
    # float 반올림으로 b 에 닿는 경우를 support 안쪽으로
    out = np.minimum(out, np.nextafter(params.b, 0.0))
    return float(out) if size is None else out


def gln_mean(params: GlnParams) -> float:
    """닫힌 형태가 없으므로 quadrature 로 계산한 기대값"""
    # E[X] = int_0^b (1 - F(x)) dx
    value, _ = integrate.quad(lambda x: 1.0 - gln_cdf(x, params), 0.0, params.b,
                              epsabs=1e-10, limit=200)
    return float(value)


def conditional_mean_mu(lags: Sequence[float], lambdas: Sequence[float], nu: float, b: float) -> float:
    """
    AR 조건부 평균 mu_t = sum_k lambda_k * gamma(x_{t-k} / b; nu)

    Args:
        lags: (x_{t-1}, ..., x_{t-p}), 모두 (0, b) 안
        lambdas: (lambda_1, ..., lambda_p)
        nu (float): shape
        b (float): 상한

    Returns:
        float: mu_t
    """
    lag_arr = np.asarray(lags, dtype=np.float64)
    lam_arr = np.asarray(lambdas, dtype=np.float64)
    if lag_arr.shape != lam_arr.shape or lag_arr.ndim != 1 or lag_arr.size < 1:
        raise DomainError(f"lags and lambdas must both have length p >= 1 (got {lag_arr.shape}, {lam_arr.shape})")
    if np.any(~(lag_arr > 0.0)) or np.any(~(lag_arr < b)):
        raise DomainError(f"every lag must lie strictly inside (0, {b}); project the bound first")
    return float(np.dot(lam_arr, logit_transform(lag_arr / b, nu)))
