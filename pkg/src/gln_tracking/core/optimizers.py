#!/usr/bin/env python3
"""
파라미터 추적 알고리즘
- NGD: 지수 윈도우 negative log-likelihood 위의 batch normalized gradient descent
- rMLE: covariance form recursive maximum likelihood (b 고정 시 rMLE.1)
- ONGD: minibatch online normalized gradient descent
"""

import math
from dataclasses import dataclass, replace
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

import logger_init
from gln_tracking.core.likelihood import (
    ParamVector,
    SeriesWindow,
    WindowWeights,
    loss_and_grad,
    obs_terms,
)
from gln_tracking.errors import BoundaryError, DomainError

DIVERGENCE_LIMIT = 1e6
INITIAL_COVARIANCE = 1e6
CovarianceInit = Literal["information", "identity"]


class NgdConfig(BaseModel):
    """NGD 하이퍼파라미터 (기본값은 합성 데이터 설정)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    iterations: int = Field(10000, ge=1)
    learning_rate: float = Field(0.003, gt=0)
    alpha: float = Field(0.99, gt=0, lt=1)
    batch_length: int = Field(1000, ge=1)
    update_every: int = Field(500, ge=1)


def default_theta0(order: int, b: float = 1.0) -> ParamVector:
    """자연 단위 (lambda, sigma2, nu, b) = (0, 1, 1, b) 시작점"""
    return ParamVector.from_natural([0.0] * order, 1.0, 1.0, b)


def normalized_step(grad: ArrayLike, eta: float) -> Optional[NDArray[np.float64]]:
    """eta * g / ||g||, gradient norm 이 0 이면 None"""
    g = np.asarray(grad, dtype=np.float64)
    norm = np.linalg.norm(g)
    if norm == 0.0 or not np.isfinite(norm):
        return None
    return eta * g / norm


def is_diverged(theta: NDArray[np.float64], loss: float = 0.0) -> bool:
    return (not np.all(np.isfinite(theta))) or bool(np.max(np.abs(theta)) > DIVERGENCE_LIMIT) \
        or not math.isfinite(loss)


def ngd_fit(
    window: SeriesWindow,
    theta0: ParamVector,
    config: NgdConfig,
    freeze_bound: bool = False,
) -> ParamVector:
    """
    지수 윈도우 목적함수 위에서 I 번의 normalized gradient step 을 수행

    Args:
        window (SeriesWindow): 학습 구간 (j0 = 윈도우 시작)
        theta0 (ParamVector): 시작점
        config (NgdConfig): I, eta, alpha
        freeze_bound (bool): True 이면 b 좌표를 고정

    Returns:
        ParamVector: theta0 부터 마지막 iterate 까지 중 목적함수 값이 가장 낮았던 iterate
    """
    logger = logger_init.get_logger()
    if theta0.order != window.order:
        raise DomainError(f"theta0 order {theta0.order} does not match window order {window.order}")

    weights = WindowWeights.exponential(config.alpha)
    x = theta0.to_array()
    best_x, best_f = x.copy(), math.inf
    # I 번의 step 뒤 마지막 iterate 도 평가하므로 목적함수는 최대 I+1 번 계산
    for i in range(config.iterations + 1):
        try:
            f, g = loss_and_grad(window, x, weights)
        except BoundaryError as e:
            logger.warning(f"[NGD] stopped at iteration {i}: {e}")
            break
        if is_diverged(x, f):
            logger.warning(f"[NGD] non-finite objective or runaway iterate at iteration {i}, keeping best-so-far")
            break
        if f < best_f:
            best_f, best_x = f, x.copy()
        if i == config.iterations:
            break
        if freeze_bound:
            g[-1] = 0.0
        step = normalized_step(g, config.learning_rate)
        if step is None:
            logger.debug(f"[NGD] zero gradient at iteration {i}")
            break
        x = x - step

    logger.debug(f"[NGD] window [{window.start}, {window.end}] best objective {best_f:.6f}")
    return ParamVector.from_array(best_x, window.order)


@dataclass(frozen=True, eq=False)
class RmleState:
    """
    rMLE 상태

    Args:
        theta (ParamVector): 현재 추정치
        P: covariance 행렬 (b 고정 시 (p+2)x(p+2), 아니면 (p+3)x(p+3))
        alpha (float): forgetting factor
        fixed_bound (float, optional): rMLE.1 의 고정 상한
    """
    theta: ParamVector
    P: NDArray[np.float64]
    alpha: float
    fixed_bound: Optional[float] = None
    steps: int = 0
    rejected: int = 0
    last_rejected: bool = False
    diverged: bool = False

    @property
    def free_dimension(self) -> int:
        return self.theta.dimension - (1 if self.fixed_bound is not None else 0)


def rmle_update(
    P: NDArray[np.float64], theta: NDArray[np.float64], h: NDArray[np.float64], alpha: float
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    P_t = (1/alpha) [I - P h h^T / (alpha/(1-alpha) + h^T P h)] P_{t-1}
    theta_t = theta_{t-1} + (1-alpha) P_t h

    Raises:
        np.linalg.LinAlgError: P_t 가 positive definite 가 아닌 경우
    """
    Ph = P @ h
    denom = alpha / (1.0 - alpha) + float(h @ Ph)
    P_new = (P - np.outer(Ph, Ph) / denom) / alpha
    P_new = 0.5 * (P_new + P_new.T)
    np.linalg.cholesky(P_new)
    return P_new, theta + (1.0 - alpha) * (P_new @ h)


def warmup_information(
    window: SeriesWindow,
    theta: ParamVector,
    alpha: float,
    freeze_bound: bool = False,
) -> NDArray[np.float64]:
    """
    warm-up 구간의 지수 가중 정보행렬 sum_j w_j h_j h_j^T / sum_j w_j (w_j = alpha^(t-j))

    theta 에서의 관측별 score h_j 로 계산하며, rmle_update 의 R_t = P_t^{-1} 재귀가
    정상 상태에서 수렴하는 값과 같은 척도를 가진다.

    Raises:
        BoundaryError: 구간 안의 관측이 theta 의 b 와 정확히 같은 경우
    """
    _, grad = obs_terms(window.targets, window.lags, theta.to_array(), with_grad=True)
    if freeze_bound:
        grad = grad[:, :-1]
    w = WindowWeights.exponential(alpha).weights(window.size)
    return (grad * w[:, None]).T @ grad / w.sum()


def rmle_init(
    window: SeriesWindow,
    alpha: float,
    fixed_bound: Optional[float] = None,
    ngd_config: Optional[NgdConfig] = None,
    theta0: Optional[ParamVector] = None,
    fit_warmup: bool = True,
    initial_covariance: float = INITIAL_COVARIANCE,
    covariance_init: CovarianceInit = "information",
) -> RmleState:
    """
    warm-up 구간에서 NGD 로 theta 를 초기화하고 P 를 시작

    covariance_init
    - "identity": P = initial_covariance * I
    - "information": P = (I / initial_covariance + warm-up 정보행렬)^{-1}.

    Args:
        window (SeriesWindow): warm-up 구간
        alpha (float): forgetting factor
        fixed_bound (float, optional): 설정 시 b 를 고정 (rMLE.1)
        ngd_config (NgdConfig, optional): warm-up NGD 설정
        theta0 (ParamVector, optional): NGD 시작점 (기본 (0,1,1,1) 자연 단위)
        fit_warmup (bool): False 이면 theta0 를 그대로 사용
        initial_covariance (float): identity 초기화의 배율, information 초기화의 ridge 역수
        covariance_init (str): "information" 또는 "identity"
    """
    logger = logger_init.get_logger()
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0,1), got {alpha}")
    if window.observations.size < window.order + 1:
        raise DomainError(f"warm-up window shorter than p+1={window.order + 1}")

    start_b = fixed_bound if fixed_bound is not None else 1.0
    theta = theta0 if theta0 is not None else default_theta0(window.order, start_b)
    if fixed_bound is not None:
        theta = theta.with_bound(fixed_bound)
    if fit_warmup:
        theta = ngd_fit(window, theta, ngd_config or NgdConfig(), freeze_bound=fixed_bound is not None)

    dim = theta.dimension - (1 if fixed_bound is not None else 0)
    P = initial_covariance * np.eye(dim)
    if covariance_init == "information":
        try:
            R = warmup_information(window, theta, alpha, freeze_bound=fixed_bound is not None)
            P = np.linalg.inv(R + np.eye(dim) / initial_covariance)
            P = 0.5 * (P + P.T)
            np.linalg.cholesky(P)
        except (BoundaryError, np.linalg.LinAlgError) as e:
            logger.warning(f"[rMLE] warm-up information matrix unusable ({e}), falling back to scaled identity")
            P = initial_covariance * np.eye(dim)
    elif covariance_init != "identity":
        raise DomainError(f"unknown covariance_init: {covariance_init}")
    return RmleState(theta=theta, P=P, alpha=alpha, fixed_bound=fixed_bound)


def rmle_step(state: RmleState, new_obs: float, lag_context: Sequence[float]) -> RmleState:
    """
    새 관측 x_t 와 raw lag (x_{t-1}, ..., x_{t-p}) 로 한 단계 갱신

    h_t 는 theta_{t-1} 에서의 log p_t (support 안) 또는 log s_t (support 밖) gradient.
    P 가 positive definite 를 잃으면 갱신을 버리고 rejected 플래그를 세운다.
    """
    logger = logger_init.get_logger()
    if state.diverged:
        return state

    theta_arr = state.theta.to_array()
    targets = np.array([new_obs], dtype=np.float64)
    lags = np.asarray(lag_context, dtype=np.float64).reshape(1, -1)
    try:
        _, grad = obs_terms(targets, lags, theta_arr, with_grad=True)
    except BoundaryError as e:
        logger.warning(f"[rMLE] step {state.steps} skipped: {e}")
        return replace(state, steps=state.steps + 1, rejected=state.rejected + 1, last_rejected=True)

    h = -grad[0]
    fixed = state.fixed_bound is not None
    if fixed:
        h = h[:-1]
    free = theta_arr[:-1] if fixed else theta_arr

    try:
        P_new, free_new = rmle_update(state.P, free, h, state.alpha)
    except np.linalg.LinAlgError:
        logger.warning(f"[rMLE] step {state.steps} rejected: covariance lost positive definiteness")
        return replace(state, steps=state.steps + 1, rejected=state.rejected + 1, last_rejected=True)

    new_arr = np.append(free_new, state.fixed_bound) if fixed else free_new
    if is_diverged(new_arr):
        logger.warning(f"[rMLE] divergence detected at step {state.steps}")
        return replace(state, steps=state.steps + 1, diverged=True)

    return replace(
        state,
        theta=ParamVector.from_array(new_arr, state.theta.order),
        P=P_new,
        steps=state.steps + 1,
        last_rejected=False,
    )


@dataclass(frozen=True, eq=False)
class OngdState:
    """
    ONGD 상태

    Args:
        theta (ParamVector): 현재 추정치
        eta (float): step size
        m (int): minibatch 크기
        targets / lags: 최근 m 개 (관측, lag context) 버퍼
    """
    theta: ParamVector
    eta: float
    m: int
    targets: NDArray[np.float64] = None
    lags: NDArray[np.float64] = None
    steps: int = 0
    last_loss: float = math.nan
    diverged: bool = False

    def __post_init__(self):
        if self.eta <= 0:
            raise DomainError(f"step size eta must be positive, got {self.eta}")
        if self.m < 1:
            raise DomainError(f"minibatch size m must be >= 1, got {self.m}")
        if self.targets is None:
            object.__setattr__(self, "targets", np.empty(0))
            object.__setattr__(self, "lags", np.empty((0, self.theta.order)))

    @property
    def ready(self) -> bool:
        return self.targets.size >= self.m


def ongd_init(theta0: ParamVector, eta: float, m: int) -> OngdState:
    return OngdState(theta=theta0, eta=eta, m=m)


def ongd_step(state: OngdState, new_obs: float, lag_context: Sequence[float]) -> OngdState:
    """
    버퍼에 (x_t, lag) 를 추가하고, 버퍼가 m 개로 차 있으면
    f_t = (1/m) sum_{j=t-m+1}^{t} f_j 에 대해 길이 eta 의 normalized step 을 수행.
    추적 중에는 projection 하지 않는다.
    """
    logger = logger_init.get_logger()
    lag_row = np.asarray(lag_context, dtype=np.float64).reshape(1, -1)
    targets = np.append(state.targets, new_obs)[-state.m:]
    lags = np.vstack([state.lags, lag_row])[-state.m:]
    state = replace(state, targets=targets, lags=lags)
    if state.diverged or not state.ready:
        return state

    theta_arr = state.theta.to_array()
    try:
        loss, grad = obs_terms(targets, lags, theta_arr, with_grad=True)
    except BoundaryError as e:
        logger.warning(f"[ONGD] step {state.steps} skipped: {e}")
        return replace(state, steps=state.steps + 1)

    f = float(loss.mean())
    step = normalized_step(grad.mean(axis=0), state.eta)
    if step is None:
        return replace(state, steps=state.steps + 1, last_loss=f)

    new_arr = theta_arr - step
    if is_diverged(new_arr, f):
        logger.warning(f"[ONGD] divergence detected at step {state.steps} (m={state.m})")
        return replace(state, steps=state.steps + 1, last_loss=f, diverged=True)
    return replace(
        state,
        theta=ParamVector.from_array(new_arr, state.theta.order),
        steps=state.steps + 1,
        last_loss=f,
    )
