#!/usr/bin/env python3
"""
예측 검증: GLN CRPS (support 밖 보정 포함), ensemble CRPS, PIT, marginal calibration
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, Field
from scipy import integrate
from scipy.special import log_expit, ndtr, ndtri

from gln_tracking.core.forecaster import EnsembleForecast, ForecastRecord, GlnForecast
from gln_tracking.core.gln import gln_cdf
from gln_tracking.errors import DataError, DomainError

PIT_BINS = 20
CRPS_EPSABS = 1e-7
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
# crps_gln_many 의 구간 분할 분위수 (1e-8 바깥 꼬리의 기여는 무시 가능)
_SPLIT_LEVELS = np.array([1e-8, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1 - 1e-4, 1 - 1e-8])
_SPLIT_Z = ndtri(_SPLIT_LEVELS)

REFERENCE_METHODS = ("climatology", "persistence", "rmle_1")


class EvalReport(BaseModel):
    """method 하나의 검증 요약. CRPS 는 capacity 대비 %"""
    method: str
    n_scored: int
    mean_crps: float
    crps_sd: float
    improvements: Dict[str, float] = Field(default_factory=dict)
    pit_counts: List[int]
    coverage: Dict[str, float] = Field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MarginalCurve:
    grid: NDArray[np.float64]
    forecast_cdf: NDArray[np.float64]
    empirical_cdf: NDArray[np.float64]

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.forecast_cdf - self.empirical_cdf)))


def crps_gln(forecast: GlnForecast, obs: float) -> float:
    """
    int (F(y) - 1{y >= obs})^2 dy 를 (0, b) 에서 adaptive quadrature 로 계산.
    obs > b 이면 int_0^b F^2 + (obs - b), obs <= 0 이면 int_0^b (F-1)^2 + (0 - obs).
    """
    b = forecast.b

    def below(y):
        return gln_cdf(y, forecast) ** 2

    def above(y):
        return (1.0 - gln_cdf(y, forecast)) ** 2

    def quad(f, lo, hi):
        if hi <= lo:
            return 0.0
        value, _ = integrate.quad(f, lo, hi, epsabs=CRPS_EPSABS, limit=200)
        return value

    if obs >= b:
        return quad(below, 0.0, b) + (obs - b)
    if obs <= 0.0:
        return quad(above, 0.0, b) - obs
    return quad(below, 0.0, obs) + quad(above, obs, b)


def _cdf_rows(y, mu, sigma, nu, b):
    # y 는 [0, b] 안의 점, 끝점에서는 0 또는 1
    log_u = np.log(y / b)
    g = nu * log_u - np.log(-np.expm1(nu * log_u))
    return ndtr((g - mu) / sigma)


def _quantile_rows(z, mu, sigma, nu, b):
    return b * np.exp(log_expit(mu + sigma * z) / nu)


def crps_gln_many(
    mu: ArrayLike, sigma2: ArrayLike, nu: ArrayLike, b: ArrayLike, obs: ArrayLike
) -> NDArray[np.float64]:
    """
    여러 GLN 예측의 CRPS 를 한 번에 계산.
    (0, b) 를 관측점과 예측분포의 분위수 (_SPLIT_LEVELS) 에서 나누고 구간마다
    고정 Gauss-Legendre 를 적용한다. 구간 폭이 sigma 에 비례하므로
    sigma2 가 작은 예리한 예측에서도 crps_gln 과 같은 값을 낸다.
    """
    mu, sigma2, nu, b, obs = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (mu, sigma2, nu, b, obs))
    sigma = np.sqrt(sigma2)
    split = np.clip(obs, 0.0, b)
    col = (lambda v: v[:, None])

    inner = _quantile_rows(_SPLIT_Z[None, :], col(mu), col(sigma), col(nu), col(b))
    edges = np.sort(np.column_stack([np.zeros_like(b), inner, split, b]), axis=1)
    edges = np.minimum(edges, col(b))
    lo, hi = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    # (n, 구간, node)
    y = mid[:, :, None] + half[:, :, None] * _GL_NODES[None, None, :]
    step = (mid >= col(split))[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        F = _cdf_rows(y, mu[:, None, None], sigma[:, None, None], nu[:, None, None], b[:, None, None])
    integrand = np.where(half[:, :, None] > 0, (F - step) ** 2, 0.0)
    inside = np.sum(half * (integrand @ _GL_WEIGHTS), axis=1)
    excess = np.where(obs > b, obs - b, 0.0) + np.where(obs < 0, -obs, 0.0)
    return inside + excess


def crps_ensemble(members: ArrayLike, obs: float) -> float:
    """
    mean|X - obs| - 0.5 mean|X - X'| 을 정렬 기반 O(N log N) 으로 계산
    """
    x = np.sort(np.asarray(members, dtype=np.float64))
    n = x.size
    if n == 0:
        raise DomainError("crps_ensemble needs at least one member")
    spread = 2.0 * np.dot(2.0 * np.arange(1, n + 1) - n - 1, x) / (n * n)
    return float(np.mean(np.abs(x - obs)) - 0.5 * spread)


def pit_value(forecast, obs: float, rng: Optional[np.random.Generator] = None) -> float:
    """
    gln: F(obs). ensemble: 아래쪽 비율 + 동일 멤버 구간 내 균등 tie-break (randomized PIT)
    """
    dist = forecast.distribution if isinstance(forecast, ForecastRecord) else forecast
    if isinstance(dist, EnsembleForecast):
        lo = np.searchsorted(dist.members, obs, side="left")
        hi = np.searchsorted(dist.members, obs, side="right")
        if hi == lo:
            return lo / dist.size
        u = (rng or np.random.default_rng()).uniform()
        return (lo + u * (hi - lo)) / dist.size
    return float(gln_cdf(obs, dist))


def pit_histogram(pits: ArrayLike, bins: int = PIT_BINS) -> NDArray[np.int64]:
    counts, _ = np.histogram(np.asarray(pits, dtype=np.float64), bins=bins, range=(0.0, 1.0))
    return counts


def forecast_cdf_sum(forecasts: Iterable, grid: ArrayLike) -> NDArray[np.float64]:
    """grid 위 예측 cdf 의 합 (chunk 단위 누적용)"""
    grid = np.asarray(grid, dtype=np.float64)
    total = np.zeros_like(grid)
    for fc in forecasts:
        dist = fc.distribution if isinstance(fc, ForecastRecord) else fc
        total += dist.cdf(grid)
    return total


def empirical_cdf(observations: ArrayLike, grid: ArrayLike) -> NDArray[np.float64]:
    obs = np.sort(np.asarray(observations, dtype=np.float64))
    return np.searchsorted(obs, np.asarray(grid, dtype=np.float64), side="right") / obs.size


def marginal_curve(forecasts: Sequence, observations: ArrayLike, grid: ArrayLike) -> MarginalCurve:
    """grid 의 각 y 에서 예측 cdf 의 시간 평균과 관측의 경험 cdf"""
    obs = np.asarray(observations, dtype=np.float64)
    if len(forecasts) != obs.size:
        raise DataError(f"{len(forecasts)} forecasts but {obs.size} observations")
    if obs.size == 0:
        raise DataError("marginal curve needs at least one forecast")
    grid = np.asarray(grid, dtype=np.float64)
    return MarginalCurve(grid, forecast_cdf_sum(forecasts, grid) / obs.size, empirical_cdf(obs, grid))


def improvement(crps_method: float, crps_reference: float) -> float:
    """1 - crps_method / crps_reference"""
    if crps_reference <= 0:
        raise DomainError("reference CRPS must be positive")
    return 1.0 - crps_method / crps_reference


def improvement_table(mean_crps: Mapping[str, float]) -> Dict[str, Dict[str, float]]:
    """method 별로 climatology / persistence / rMLE.1 대비 개선율"""
    table = {}
    for method, value in mean_crps.items():
        table[method] = {
            ref: improvement(value, mean_crps[ref])
            for ref in REFERENCE_METHODS
            if ref in mean_crps and ref != method
        }
    return table


def summarize_replicas(per_replica: Sequence[Mapping[str, float]]) -> Dict[str, Dict[str, float]]:
    """MC replica 들의 method 별 평균 CRPS 의 mean / sd"""
    methods = sorted({m for rep in per_replica for m in rep})
    summary = {}
    for method in methods:
        values = np.array([rep[method] for rep in per_replica if method in rep])
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        summary[method] = {"mean": float(values.mean()), "sd": sd, "replicas": int(values.size)}
    return summary


def summarize_tracking_errors(per_replica: Sequence[Mapping[str, float]]) -> Dict[str, float]:
    """
    replica 별 tracking_error 결과의 평균.
    rising_worse 는 증가 구간 MAE 가 감소 구간 MAE 보다 큰 replica 수.
    """
    if not per_replica:
        return {}
    out = {}
    for key in ("mae", "mae_rising", "mae_falling"):
        values = np.array([rep[key] for rep in per_replica], dtype=np.float64)
        out[key] = float(np.nanmean(values)) if np.isfinite(values).any() else math.nan
    out["rising_worse"] = int(sum(1 for rep in per_replica if rep["mae_rising"] > rep["mae_falling"]))
    out["replicas"] = len(per_replica)
    return out


def interval_coverage(quantiles: ArrayLike, observations: ArrayLike) -> Dict[str, float]:
    """
    (q0.025, q0.125, q0.875, q0.975) 열로부터 중앙 95% / 75% 구간의 실제 coverage
    """
    q = np.asarray(quantiles, dtype=np.float64)
    obs = np.asarray(observations, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != 4 or q.shape[0] != obs.size:
        raise DataError("quantile matrix must be (n, 4) and aligned with the observations")
    in95 = (obs >= q[:, 0]) & (obs <= q[:, 3])
    in75 = (obs >= q[:, 1]) & (obs <= q[:, 2])
    return {"95": float(in95.mean()), "75": float(in75.mean())}


def tracking_error(b_hat: ArrayLike, b_true: ArrayLike) -> Dict[str, float]:
    """
    상한 추정치의 MAE. 참 상한이 증가하는 구간과 감소하는 구간을 나눠서도 계산.
    """
    est = np.asarray(b_hat, dtype=np.float64)
    true = np.asarray(b_true, dtype=np.float64)
    if est.shape != true.shape:
        raise DataError("b_hat and b_true must be aligned")
    err = np.abs(est - true)
    slope = np.gradient(true) if true.size > 1 else np.zeros_like(true)
    rising, falling = slope > 0, slope < 0
    return {
        "mae": float(err.mean()),
        "mae_rising": float(err[rising].mean()) if rising.any() else math.nan,
        "mae_falling": float(err[falling].mean()) if falling.any() else math.nan,
    }


def score_records(
    records: Sequence[ForecastRecord],
    observations: ArrayLike,
    rng: Optional[np.random.Generator] = None,
):
    """
    record 별 CRPS 와 PIT. gln record 는 crps_gln_many 로 한 번에 계산.

    Returns:
        (crps (n,), pit (n,))
    """
    obs = np.asarray(observations, dtype=np.float64)
    if len(records) != obs.size:
        raise DataError(f"{len(records)} forecasts but {obs.size} observations")
    rng = rng or np.random.default_rng(0)
    crps = np.empty(obs.size)
    pits = np.empty(obs.size)

    gln_idx = [i for i, r in enumerate(records) if r.kind == "gln"]
    if gln_idx:
        g = [records[i].gln for i in gln_idx]
        crps[gln_idx] = crps_gln_many(
            [f.mu for f in g], [f.sigma2 for f in g], [f.nu for f in g], [f.b for f in g], obs[gln_idx]
        )
    for i, record in enumerate(records):
        if record.kind == "ensemble":
            crps[i] = crps_ensemble(record.ensemble.members, obs[i])
        pits[i] = pit_value(record, obs[i], rng)
    return crps, pits


def build_report(
    method: str, crps: ArrayLike, pits: ArrayLike, capacity: float,
    coverage: Optional[Dict[str, float]] = None,
) -> EvalReport:
    """CRPS 를 capacity 대비 % 로 환산해 EvalReport 생성"""
    values = 100.0 * np.asarray(crps, dtype=np.float64) / capacity
    counts = pit_histogram(pits)
    return EvalReport(
        method=method,
        n_scored=int(values.size),
        mean_crps=float(values.mean()),
        crps_sd=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        pit_counts=[int(c) for c in counts],
        coverage=coverage or {},
    )
