#!/usr/bin/env python3
"""
method 별 추적 스케줄
- NGD: batch_length 개가 모이면 첫 적합, 이후 update_every 마다 warm-start 재적합
- rMLE (rmle_b / rmle_1): warm-up 구간 NGD 초기화 후 매 스텝 갱신
- ONGD: 시작점에서 출발, minibatch 가 차는 순간부터 매 스텝 갱신
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from tqdm import tqdm

import logger_init
from gln_tracking.core.forecaster import project_theta
from gln_tracking.core.likelihood import ParamVector, SeriesWindow, lag_context, obs_terms
from gln_tracking.core.optimizers import NgdConfig, ngd_fit, ongd_init, ongd_step, rmle_init, rmle_step
from gln_tracking.errors import ConfigError, DataError
from gln_tracking.schema import TRACKED_METHODS, RunConfig, TrajectoryRecord, trajectory_columns


@dataclass(frozen=True, eq=False)
class TrackingResult:
    """
    추적 결과 (positions 는 시계열 내 0-based 위치)

    Args:
        method (str): 추적 method 이름
        positions: 각 record 의 시점 t
        thetas: (n, p+3) unconstrained 좌표의 theta_hat_t
        losses: f_t(theta_hat_{t-1}) (첫 record 는 theta_hat_t 로 계산)
        diverged_at (int, optional): 발산이 감지된 위치
    """
    method: str
    order: int
    positions: NDArray[np.int64]
    thetas: NDArray[np.float64]
    losses: NDArray[np.float64]
    diverged_at: Optional[int] = None

    def __len__(self) -> int:
        return self.positions.size

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def theta_at(self, position: int) -> ParamVector:
        i = int(np.searchsorted(self.positions, position))
        if i >= self.positions.size or self.positions[i] != position:
            raise DataError(f"{self.method} has no estimate at position {position}")
        return ParamVector.from_array(self.thetas[i], self.order)

    def records(self, series: NDArray[np.float64], delta: float,
                times: Optional[NDArray[np.int64]] = None) -> List[TrajectoryRecord]:
        out = []
        for i, pos in enumerate(self.positions):
            theta = ParamVector.from_array(self.thetas[i], self.order)
            recent = series[pos - self.order + 1: pos + 1]
            b_tilde = project_theta(theta, recent, delta).theta_tilde.b
            out.append(TrajectoryRecord(
                t=int(times[pos]) if times is not None else int(pos),
                lambdas=list(theta.lambdas),
                sigma2=theta.sigma2,
                nu=theta.nu,
                b_hat=theta.b,
                b_tilde=b_tilde,
                loss=float(self.losses[i]),
            ))
        return out

    def to_frame(self, series: NDArray[np.float64], delta: float,
                 times: Optional[NDArray[np.int64]] = None) -> pd.DataFrame:
        rows = [r.to_row() for r in self.records(series, delta, times)]
        return pd.DataFrame(rows, columns=trajectory_columns(self.order))


def _obs_loss(series: NDArray[np.float64], t: int, order: int, theta: NDArray[np.float64]) -> float:
    loss, _ = obs_terms(series[t:t + 1], lag_context(series, t, order).reshape(1, -1), theta, with_grad=False)
    return float(loss[0])


def _progress(iterable, desc: str):
    return tqdm(iterable, desc=desc, disable=not logger_init.progress_enabled(), leave=False)


class _Recorder:
    def __init__(self, method: str, series: NDArray[np.float64], order: int):
        self.method = method
        self.series = series
        self.order = order
        self.positions: List[int] = []
        self.thetas: List[NDArray[np.float64]] = []
        self.losses: List[float] = []

    def add(self, t: int, theta: ParamVector):
        arr = theta.to_array()
        previous = self.thetas[-1] if self.thetas else arr
        self.positions.append(t)
        self.thetas.append(arr)
        self.losses.append(_obs_loss(self.series, t, self.order, previous))

    def result(self, diverged_at: Optional[int] = None) -> TrackingResult:
        thetas = np.vstack(self.thetas) if self.thetas else np.empty((0, self.order + 3))
        return TrackingResult(
            method=self.method,
            order=self.order,
            positions=np.asarray(self.positions, dtype=np.int64),
            thetas=thetas,
            losses=np.asarray(self.losses, dtype=np.float64),
            diverged_at=diverged_at,
        )


def track_ngd(series: NDArray[np.float64], order: int, config: NgdConfig, theta0: ParamVector) -> TrackingResult:
    """
    t = batch_length-1 에서 첫 적합, 이후 update_every 마다 [max(p, t-batch_length+1), t] 구간에 재적합.
    적합 사이 시점은 직전 theta 를 그대로 기록.
    """
    logger = logger_init.get_logger()
    T = series.size
    first = max(config.batch_length - 1, order)
    if T <= first:
        raise DataError(f"NGD needs more than {first} observations, got {T}")

    recorder = _Recorder("ngd", series, order)
    theta = theta0
    for t in _progress(range(first, T), "[Track] ngd"):
        if (t - first) % config.update_every == 0:
            j0 = max(order, t - config.batch_length + 1)
            theta = ngd_fit(SeriesWindow.from_series(series, j0, t, order), theta, config)
            logger.debug(f"[Track] NGD refit at t={t}: b_hat={theta.b:.4f}")
        recorder.add(t, theta)
    return recorder.result()


def track_rmle(
    series: NDArray[np.float64],
    order: int,
    alpha: float,
    warmup: int,
    theta0: ParamVector,
    ngd_config: NgdConfig,
    fixed_bound: Optional[float] = None,
    initial_covariance: float = 1e6,
    covariance_init: str = "information",
) -> TrackingResult:
    """
    [p, warmup-1] 에서 NGD 로 초기화 후 t = warmup-1 부터 기록, t >= warmup 에서 매 스텝 갱신.
    fixed_bound 가 주어지면 rMLE.1 (b 고정).
    """
    logger = logger_init.get_logger()
    T = series.size
    if warmup <= order or T <= warmup:
        raise DataError(f"rMLE needs p < warmup < T (p={order}, warmup={warmup}, T={T})")

    method = "rmle_1" if fixed_bound is not None else "rmle_b"
    state = rmle_init(
        SeriesWindow.from_series(series, order, warmup - 1, order),
        alpha,
        fixed_bound=fixed_bound,
        ngd_config=ngd_config,
        theta0=theta0,
        initial_covariance=initial_covariance,
        covariance_init=covariance_init,
    )
    recorder = _Recorder(method, series, order)
    recorder.add(warmup - 1, state.theta)
    for t in _progress(range(warmup, T), f"[Track] {method}"):
        state = rmle_step(state, series[t], lag_context(series, t, order))
        if state.diverged:
            logger.error(f"[Track] {method} diverged at t={t}")
            return recorder.result(diverged_at=t)
        recorder.add(t, state.theta)
    if state.rejected:
        logger.warning(f"[Track] {method}: {state.rejected} of {state.steps} steps rejected")
    return recorder.result()


def track_ongd(
    series: NDArray[np.float64], order: int, eta: float, m: int, theta0: ParamVector
) -> TrackingResult:
    """t = p 부터 기록. 첫 갱신은 minibatch 가 찬 t = p+m-1"""
    logger = logger_init.get_logger()
    T = series.size
    if T <= order:
        raise DataError(f"ONGD needs more than p={order} observations, got {T}")

    state = ongd_init(theta0, eta, m)
    recorder = _Recorder("ongd", series, order)
    for t in _progress(range(order, T), "[Track] ongd"):
        state = ongd_step(state, series[t], lag_context(series, t, order))
        if state.diverged:
            logger.error(f"[Track] ongd diverged at t={t} (eta={eta}, m={m})")
            return recorder.result(diverged_at=t)
        recorder.add(t, state.theta)
    return recorder.result()


def run_tracking(method: str, series: NDArray[np.float64], config: RunConfig) -> TrackingResult:
    """설정의 하이퍼파라미터로 method 하나를 추적"""
    order = config.run.order
    try:
        theta0 = config.theta0.to_param_vector(order)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if method == "ngd":
        return track_ngd(series, order, config.ngd, theta0)
    if method in ("rmle_b", "rmle_1"):
        fixed = config.rmle.fixed_bound if method == "rmle_1" else None
        return track_rmle(series, order, config.rmle.alpha, config.rmle.warmup, theta0, config.ngd,
                          fixed_bound=fixed, initial_covariance=config.rmle.initial_covariance,
                          covariance_init=config.rmle.covariance_init)
    if method == "ongd":
        return track_ongd(series, order, config.ongd.eta, config.ongd.m, theta0)
    raise ConfigError(f"method '{method}' is not a tracking method (choose from {', '.join(TRACKED_METHODS)})")


def tracking_from_frame(method: str, frame: pd.DataFrame, order: int, times: NDArray[np.int64]) -> TrackingResult:
    """trajectory CSV 를 TrackingResult 로 (t 라벨을 데이터 위치로 변환)"""
    pos = np.searchsorted(times, frame["t"].to_numpy())
    valid = (pos < times.size) & (times[np.minimum(pos, times.size - 1)] == frame["t"].to_numpy())
    if not valid.all():
        i = int(np.argmin(valid))
        raise DataError(f"trajectory time {frame['t'].iloc[i]} not present in the data", line=i + 2)
    lambdas = frame[[f"lambda_{k}" for k in range(1, order + 1)]].to_numpy()
    thetas = np.column_stack([
        lambdas,
        np.log(frame["sigma2"].to_numpy()),
        np.log(frame["nu"].to_numpy()),
        frame["b_hat"].to_numpy(),
    ])
    if not np.all(np.isfinite(thetas)):
        raise DataError("trajectory holds non-positive sigma2/nu or non-finite values")
    return TrackingResult(
        method=method,
        order=order,
        positions=pos.astype(np.int64),
        thetas=thetas,
        losses=frame["loss"].to_numpy(dtype=np.float64),
    )

