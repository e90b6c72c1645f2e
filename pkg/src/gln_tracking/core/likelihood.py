#!/usr/bin/env python3
"""
Extended time-dependent negative log-likelihood 모듈

support 안의 관측은 -log p_j(theta), support 밖의 관측은 -log s_j(b) 로 기여하므로
어떤 유한한 theta 에 대해서도 목적함수가 유한하다.
파라미터 좌표는 unconstrained (lambda_1..lambda_p, omega=log sigma2, tau=log nu, b).
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit, log_expit

from gln_tracking.core.gln import LOG_SQRT_2PI, GlnParams
from gln_tracking.errors import BoundaryError, DomainError


@dataclass(frozen=True)
class ParamVector:
    """
    추적 대상 파라미터 theta = (lambda_1..lambda_p, omega, tau, b)

    sigma2 = exp(omega), nu = exp(tau) 이므로 양수 제약이 자동으로 만족된다.
    """
    lambdas: Tuple[float, ...]
    omega: float
    tau: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if len(self.lambdas) < 1:
            raise DomainError("ParamVector needs at least one AR coefficient")
        if not all(math.isfinite(v) for v in self.to_array()):
            raise DomainError(f"ParamVector entries must be finite: {self}")

    @classmethod
    def from_natural(cls, lambdas: Sequence[float], sigma2: float, nu: float, b: float) -> "ParamVector":
        """자연 단위 (lambda, sigma2, nu, b) 에서 생성"""
        if sigma2 <= 0 or nu <= 0:
            raise DomainError(f"sigma2 and nu must be positive (got {sigma2}, {nu})")
        return cls(tuple(lambdas), math.log(sigma2), math.log(nu), float(b))

    @classmethod
    def from_array(cls, values: ArrayLike, order: int) -> "ParamVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (order + 3,):
            raise DomainError(f"expected a vector of length {order + 3}, got shape {arr.shape}")
        return cls(tuple(arr[:order]), float(arr[order]), float(arr[order + 1]), float(arr[order + 2]))

    @property
    def order(self) -> int:
        return len(self.lambdas)

    @property
    def dimension(self) -> int:
        return self.order + 3

    @property
    def sigma2(self) -> float:
        return math.exp(self.omega)

    @property
    def nu(self) -> float:
        return math.exp(self.tau)

    def to_array(self) -> NDArray[np.float64]:
        return np.array([*self.lambdas, self.omega, self.tau, self.b], dtype=np.float64)

    def with_bound(self, b: float) -> "ParamVector":
        return ParamVector(self.lambdas, self.omega, self.tau, float(b))

    def gln_params(self, mu: float) -> GlnParams:
        return GlnParams(mu=mu, sigma2=self.sigma2, nu=self.nu, b=self.b)


@dataclass(frozen=True, eq=False)
class SeriesWindow:
    """
    x_{j0-p}, ..., x_t 관측 구간 (앞쪽 p 개는 lag context)

    Args:
        observations: 관측값 배열
        start (int): 첫 likelihood 항의 절대 시간 인덱스 j0
        order (int): AR 차수 p
    """
    observations: NDArray[np.float64]
    start: int
    order: int
    _lags: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.float64)
        if self.order < 1:
            raise DomainError(f"order p must be >= 1, got {self.order}")
        if obs.ndim != 1 or obs.size < self.order + 1:
            raise DomainError(f"window needs at least p+1={self.order + 1} observations, got {obs.size}")
        if not np.all(np.isfinite(obs)) or np.any(obs <= 0.0):
            raise DomainError("window observations must be finite and strictly positive (coarsen first)")
        n = obs.size - self.order
        lags = np.column_stack([obs[self.order - k: self.order - k + n] for k in range(1, self.order + 1)])
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "_lags", lags)

    @classmethod
    def from_series(cls, series: ArrayLike, start: int, end: int, order: int) -> "SeriesWindow":
        """series[start-order : end+1] 로 윈도우 생성 (start >= order)"""
        if start < order:
            raise DomainError(f"start {start} leaves fewer than p={order} context points")
        if end < start:
            raise DomainError(f"empty window [{start}, {end}]")
        arr = np.asarray(series, dtype=np.float64)
        return cls(arr[start - order: end + 1], start, order)

    @property
    def end(self) -> int:
        return self.start + self.size - 1

    @property
    def size(self) -> int:
        return self.observations.size - self.order

    @property
    def targets(self) -> NDArray[np.float64]:
        return self.observations[self.order:]

    @property
    def lags(self) -> NDArray[np.float64]:
        """(n, p) 행렬, 열 k-1 이 x_{j-k}"""
        return self._lags

    @property
    def indices(self) -> NDArray[np.int64]:
        return np.arange(self.start, self.end + 1)

    def position(self, j: int) -> int:
        if j < self.start or j > self.end:
            raise DomainError(f"time index {j} outside window [{self.start}, {self.end}]")
        return j - self.start


@dataclass(frozen=True, eq=False)
class SupportPartition:
    """C_t(theta) 와 여집합 (절대 시간 인덱스)"""
    in_support: NDArray[np.int64]
    out_support: NDArray[np.int64]


@dataclass(frozen=True)
class WindowWeights:
    """
    rectangular: w_j = 1, normalizer = t - j0 + 1
    exponential: w_j = alpha^(t-j), normalizer = n_alpha = 1/(1-alpha)
    """
    kind: Literal["rectangular", "exponential"] = "rectangular"
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind == "exponential":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise DomainError(f"exponential window needs alpha in (0,1), got {self.alpha}")
        elif self.kind != "rectangular":
            raise DomainError(f"unknown window kind: {self.kind}")

    @classmethod
    def rectangular(cls) -> "WindowWeights":
        return cls("rectangular")

    @classmethod
    def exponential(cls, alpha: float) -> "WindowWeights":
        return cls("exponential", alpha)

    def weights(self, n: int) -> NDArray[np.float64]:
        if self.kind == "rectangular":
            return np.ones(n)
        return self.alpha ** np.arange(n - 1, -1, -1, dtype=np.float64)

    def normalizer(self, n: int) -> float:
        if self.kind == "rectangular":
            return float(n)
        return 1.0 / (1.0 - self.alpha)


def lag_context(series: NDArray[np.float64], t: int, order: int) -> NDArray[np.float64]:
    """(x_{t-1}, ..., x_{t-p})"""
    if t < order:
        raise DomainError(f"time {t} has fewer than p={order} past observations")
    return series[t - order:t][::-1]


ThetaLike = Union[ParamVector, NDArray[np.float64]]


def _theta_array(theta: ThetaLike) -> NDArray[np.float64]:
    if isinstance(theta, ParamVector):
        return theta.to_array()
    return np.asarray(theta, dtype=np.float64)


def sigmoid_extension(b: ArrayLike, x_j: ArrayLike):
    """s_j(b) = 1 / (1 + exp(-b + x_j))"""
    out = expit(np.asarray(b, dtype=np.float64) - np.asarray(x_j, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def support_mask(targets: NDArray[np.float64], lags: NDArray[np.float64], b: float) -> NDArray[np.bool_]:
    """j in C_t 이면 True: x_{j-k} < b for k = 0..p"""
    return (targets < b) & np.all(lags < b, axis=1)


def obs_terms(
    targets: NDArray[np.float64],
    lags: NDArray[np.float64],
    theta: NDArray[np.float64],
    with_grad: bool = True,
) -> Tuple[NDArray[np.float64], Optional[NDArray[np.float64]]]:
    """
    관측별 loss f_j(theta) 와 그 gradient 를 벡터화 계산

    Args:
        targets: x_j, shape (n,)
        lags: x_{j-k}, shape (n, p)
        theta: (lambda_1..lambda_p, omega, tau, b)
        with_grad (bool): gradient 계산 여부

    Returns:
        (loss (n,), grad (n, p+3) 또는 None)
    """
    p = lags.shape[1]
    lam = theta[:p]
    omega, tau, b = theta[p], theta[p + 1], theta[p + 2]
    sigma = math.exp(0.5 * omega)
    nu = math.exp(tau)

    if with_grad and (np.any(targets == b) or np.any(lags == b)):
        raise BoundaryError(f"gradient undefined: an observation equals the bound b={b}")

    inside = support_mask(targets, lags, b)
    outside = ~inside
    n = targets.size
    loss = np.empty(n)
    grad = np.zeros((n, p + 3)) if with_grad else None

    if outside.any():
        diff = b - targets[outside]
        # -log s_j(b) = softplus(x_j - b)
        loss[outside] = -log_expit(diff)
        if with_grad:
            grad[outside, p + 2] = -expit(-diff)

    if inside.any():
        x = targets[inside]
        lag_in = lags[inside]
        log_u = np.log(x / b)
        log_ul = np.log(lag_in / b)
        one_m = -np.expm1(nu * log_u)
        one_ml = -np.expm1(nu * log_ul)
        g = nu * log_u - np.log(one_m)
        g_lag = nu * log_ul - np.log(one_ml)
        z = (g - g_lag @ lam) / sigma
        loss[inside] = -(tau - np.log(x) - np.log(one_m) - LOG_SQRT_2PI - 0.5 * omega - 0.5 * z * z)

        if with_grad:
            zs = z / sigma
            grad_in = np.empty((x.size, p + 3))
            grad_in[:, :p] = -zs[:, None] * g_lag
            grad_in[:, p] = 0.5 - 0.5 * z * z
            dg_dnu = log_u / one_m
            dgl_dnu = (log_ul / one_ml) @ lam
            grad_in[:, p + 1] = -1.0 - nu * (1.0 - one_m) * log_u / one_m + zs * nu * (dg_dnu - dgl_dnu)
            dg_db = -nu / (b * one_m)
            dgl_db = (-nu / (b * one_ml)) @ lam
            grad_in[:, p + 2] = nu * (1.0 - one_m) / (b * one_m) + zs * (dg_db - dgl_db)
            grad[inside] = grad_in

    return loss, grad


def classify_support(window: SeriesWindow, theta: ThetaLike) -> SupportPartition:
    """현재 theta 의 b 로 C_t(theta) 분할 (캐시 없이 매번 재계산)"""
    b = _theta_array(theta)[-1]
    mask = support_mask(window.targets, window.lags, b)
    idx = window.indices
    return SupportPartition(in_support=idx[mask], out_support=idx[~mask])


def neg_loglik(window: SeriesWindow, theta: ThetaLike, weights: WindowWeights) -> float:
    """
    -(1/normalizer) * [sum_{C_t} w_j log p_j + sum_{not C_t} w_j log s_j(b)]
    """
    loss, _ = obs_terms(window.targets, window.lags, _theta_array(theta), with_grad=False)
    n = window.size
    return float(np.dot(weights.weights(n), loss) / weights.normalizer(n))


def grad_window(window: SeriesWindow, theta: ThetaLike, weights: WindowWeights) -> NDArray[np.float64]:
    """neg_loglik 의 gradient"""
    _, grad = obs_terms(window.targets, window.lags, _theta_array(theta), with_grad=True)
    n = window.size
    return weights.weights(n) @ grad / weights.normalizer(n)


def loss_and_grad(
    window: SeriesWindow, theta: NDArray[np.float64], weights: WindowWeights
) -> Tuple[float, NDArray[np.float64]]:
    """optimizer 용: 목적함수 값과 gradient 를 한 번에"""
    loss, grad = obs_terms(window.targets, window.lags, theta, with_grad=True)
    n = window.size
    w = weights.weights(n)
    norm = weights.normalizer(n)
    return float(np.dot(w, loss) / norm), w @ grad / norm


def _single(j: int, window: SeriesWindow) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    pos = window.position(j)
    return window.targets[pos:pos + 1], window.lags[pos:pos + 1]


def per_obs_loss(j: int, window: SeriesWindow, theta: ThetaLike) -> float:
    """f_j(theta): j in C_t 이면 -log p_j(theta), 아니면 -log s_j(b)"""
    target, lag = _single(j, window)
    loss, _ = obs_terms(target, lag, _theta_array(theta), with_grad=False)
    return float(loss[0])


def grad_per_obs(j: int, window: SeriesWindow, theta: ThetaLike) -> NDArray[np.float64]:
    """per_obs_loss 의 해석적 gradient, (lambda_1..lambda_p, omega, tau, b) 좌표"""
    target, lag = _single(j, window)
    _, grad = obs_terms(target, lag, _theta_array(theta), with_grad=True)
    return grad[0]


def score_per_obs(j: int, window: SeriesWindow, theta: ThetaLike) -> NDArray[np.float64]:
    """h_j = grad log p_j (support 안) 또는 grad log s_j (support 밖)"""
    return -grad_per_obs(j, window, theta)
