import itertools
import math
import os
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError
from tqdm import tqdm

import logger_init
from gln_tracking.core.evaluation import (
    EvalReport,
    MarginalCurve,
    build_report,
    empirical_cdf,
    forecast_cdf_sum,
    improvement_table,
    interval_coverage,
    score_records,
    summarize_replicas,
    summarize_tracking_errors,
    tracking_error,
)
from gln_tracking.core.forecaster import (
    EXPORT_QUANTILES,
    ForecastRecord,
    GlnForecast,
    climatology_forecast,
    forecast_quantiles,
    ideal_forecast,
    persistence_forecast,
    predictive_distribution,
    project_theta,
)
from gln_tracking.core.likelihood import lag_context
from gln_tracking.core.synthetic import generate, replica_seed
from gln_tracking.errors import ConfigError, DataError, DivergenceError, GlnTrackingError
from gln_tracking.schema import (
    FORECAST_COLUMNS,
    QUANTILE_COLUMNS,
    TRACKED_METHODS,
    RunConfig,
)
from gln_tracking.tracker import TrackingResult, run_tracking, tracking_from_frame
from gln_tracking.utils import (
    SeriesData,
    read_forecast_csv,
    read_series_csv,
    read_trajectory_csv,
    write_frame,
    write_json,
)

# chunk 단위로 ensemble 을 다시 만들어 채점 (climatology 멤버를 한꺼번에 들고 있지 않기 위함)
SCORE_CHUNK = 500


class RunStatus(str, Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    CONFIG_ERROR = "CONFIG_ERROR"
    DATA_ERROR = "DATA_ERROR"
    DIVERGED = "DIVERGED"


class RunStatusCode(int, Enum):
    SUCCESS = 0
    FAILURE = 1
    CONFIG_ERROR = 2
    DATA_ERROR = 3
    DIVERGED = 4


def status_for(error: Optional[BaseException]) -> Tuple[RunStatus, RunStatusCode]:
    """예외 종류 -> (RunStatus, exit code)"""
    if error is None:
        return RunStatus.SUCCESS, RunStatusCode.SUCCESS
    if isinstance(error, (ConfigError, ValidationError)):
        return RunStatus.CONFIG_ERROR, RunStatusCode.CONFIG_ERROR
    if isinstance(error, DataError):
        return RunStatus.DATA_ERROR, RunStatusCode.DATA_ERROR
    if isinstance(error, DivergenceError):
        return RunStatus.DIVERGED, RunStatusCode.DIVERGED
    return RunStatus.FAILURE, RunStatusCode.FAILURE


def _progress(iterable, desc: str, total: Optional[int] = None):
    return tqdm(iterable, desc=desc, total=total, disable=not logger_init.progress_enabled(), leave=False)


def _upper(config: RunConfig) -> Optional[float]:
    return 1.0 if config.data.coarsen_upper else None


# ---------------------------------------------------------------- simulate

def cmd_simulate(config: RunConfig, out_dir: str) -> List[str]:
    """
    replica 마다 t,x,b_true CSV 를 쓰고 참값을 truth.json 으로 저장.
    replica r 의 seed 는 RUN.seed + r.
    """
    logger = logger_init.get_logger()
    synthetic = config.synthetic
    logger.info(f"[Simulate] {config.run.replicas} replica(s), T={synthetic.T}, lambdas={synthetic.lambdas}, "
                f"sigma2={synthetic.sigma2}, nu={synthetic.nu}, bound={synthetic.bound.kind}")
    paths = []
    try:
        for r in _progress(range(config.run.replicas), "[Simulate] replicas"):
            seed = replica_seed(config.run.seed, r)
            truth = generate(synthetic.model_copy(update={"seed": seed}))
            frame = pd.DataFrame({
                "t": np.arange(synthetic.T, dtype=np.int64),
                "x": truth.series * config.data.capacity,
                "b_true": truth.bounds * config.data.capacity,
            })
            path = os.path.join(out_dir, f"replica_{r:03d}.csv")
            write_frame(frame, path)
            paths.append(path)
        write_json({
            "seed": config.run.seed,
            "replicas": config.run.replicas,
            "capacity": config.data.capacity,
            "synthetic": synthetic.model_dump(),
        }, os.path.join(out_dir, "truth.json"))
    except OSError as e:
        logger.error(f"[Simulate] cannot write to {out_dir}: {e}")
        raise
    logger.info(f"[Simulate] wrote {len(paths)} file(s) to {out_dir}")
    return paths


# ---------------------------------------------------------------- track

def cmd_track(config: RunConfig, data_path: str, out_path: str) -> TrackingResult:
    """설정된 method 로 추적하고 trajectory CSV 저장. 발산하면 기록 후 DivergenceError"""
    logger = logger_init.get_logger()
    method = config.run.method
    if method not in TRACKED_METHODS:
        raise ConfigError(f"track needs one of {', '.join(TRACKED_METHODS)}, got '{method}'")

    series = read_series_csv(data_path, config.data)
    logger.info(f"[Track] {method} on {data_path} ({len(series)} observations, p={config.run.order})")
    result = run_tracking(method, series.x, config)
    write_frame(result.to_frame(series.x, config.data.delta, series.t), out_path)
    logger.info(f"[Track] wrote {len(result)} records to {out_path}")

    if series.b_true is not None and len(result):
        keep = result.positions >= config.data.start_forecast
        if keep.any():
            err = tracking_error(result.thetas[keep, -1], series.b_true[result.positions[keep]])
            logger.info(f"[Track] b tracking MAE {err['mae']:.4f} "
                        f"(rising {err['mae_rising']:.4f}, falling {err['mae_falling']:.4f})")
    if result.diverged:
        raise DivergenceError(f"{method} diverged", method=method, t=int(series.t[result.diverged_at]))
    return result


# ---------------------------------------------------------------- forecast

def members_from_ref(ref: str, series: SeriesData, config: RunConfig):
    """members_ref 문자열을 데이터로부터 ensemble 로 복원 (시점 t 까지의 관측만 사용)"""
    parts = ref.split(":")
    try:
        if parts[0] == "climatology" and len(parts) == 4:
            start, end, cap = series.index_of(int(parts[1])), series.index_of(int(parts[2])), int(parts[3])
            return climatology_forecast(series.x[start:end + 1], cap)
        if parts[0] == "persistence" and len(parts) == 3:
            end, n_err = series.index_of(int(parts[1])), int(parts[2])
            return persistence_forecast(series.x[:end + 1], n_err, config.data.delta, _upper(config))
    except ValueError as e:
        raise DataError(f"malformed members reference {ref!r}: {e}") from e
    raise DataError(f"unknown members reference {ref!r}")


def iter_forecasts(
    method: str,
    series: SeriesData,
    config: RunConfig,
    first_issue: int,
    last_issue: int,
    tracking: Optional[TrackingResult] = None,
) -> Iterator[ForecastRecord]:
    """
    위치 first_issue..last_issue 에서 발행한 1-step-ahead 예측.
    시점 t 의 예측은 series[:t+1] 만 참조한다.
    """
    x, times, order = series.x, series.t, config.run.order
    for t in range(first_issue, last_issue + 1):
        issue, target = int(times[t]), int(times[t + 1])
        if method in TRACKED_METHODS:
            if tracking is None:
                raise ConfigError(f"{method} forecasts need a trajectory")
            try:
                theta = tracking.theta_at(t)
            except DataError as e:
                raise DataError(f"trajectory misaligned with the data at t={issue}") from e
            recent = lag_context(x, t + 1, order)
            gln = predictive_distribution(project_theta(theta, recent, config.data.delta), recent)
            yield ForecastRecord(issue, target, method, "gln", gln=gln)
        elif method == "climatology":
            cap = config.climatology.cap
            yield ForecastRecord(issue, target, method, "ensemble",
                                 ensemble=climatology_forecast(x[:t + 1], cap),
                                 members_ref=f"climatology:{int(times[0])}:{issue}:{cap}")
        elif method == "persistence":
            n_err = config.persistence.n_err
            yield ForecastRecord(issue, target, method, "ensemble",
                                 ensemble=persistence_forecast(x[:t + 1], n_err, config.data.delta, _upper(config)),
                                 members_ref=f"persistence:{issue}:{n_err}")
        elif method == "ideal":
            if series.b_true is None:
                raise DataError("ideal forecaster needs a b_true column", series.path)
            truth = config.synthetic
            recent = lag_context(series.raw, t + 1, truth.order)
            gln = ideal_forecast(truth.lambdas, truth.sigma2, truth.nu, series.b_true[t + 1], recent, truth.delta)
            yield ForecastRecord(issue, target, method, "gln", gln=gln)
        else:
            raise ConfigError(f"unknown method '{method}'")


def _forecast_row(record: ForecastRecord) -> dict:
    row = {"t": record.issue_time, "target_t": record.target_time, "method": record.method,
           "kind": record.kind, "mu": math.nan, "sigma2": math.nan, "nu": math.nan,
           "b_tilde": math.nan, "members_ref": record.members_ref or ""}
    if record.gln is not None:
        row.update(mu=record.gln.mu, sigma2=record.gln.sigma2, nu=record.gln.nu, b_tilde=record.gln.b)
    return row


def _quantile_row(record: ForecastRecord) -> dict:
    q = forecast_quantiles(record.distribution, EXPORT_QUANTILES)
    row = {"t": record.issue_time, "target_t": record.target_time, "method": record.method}
    row.update({name: float(v) for name, v in zip(QUANTILE_COLUMNS[3:], q)})
    return row


def _issue_range(series: SeriesData, start: int) -> Tuple[int, int]:
    first, last = start - 1, len(series) - 2
    if first < 0 or first > last:
        raise DataError(f"forecast start {start} outside a series of {len(series)} observations", series.path)
    return first, last


def build_forecast_frames(
    method: str,
    series: SeriesData,
    config: RunConfig,
    start: int,
    tracking: Optional[TrackingResult] = None,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """(forecast frame, quantile frame). start 는 첫 target 의 위치"""
    first, last = _issue_range(series, start)
    forecast_rows, quantile_rows = [], []
    records = iter_forecasts(method, series, config, first, last, tracking)
    for record in _progress(records, f"[Forecast] {method}", total=last - first + 1):
        forecast_rows.append(_forecast_row(record))
        quantile_rows.append(_quantile_row(record))
    return pd.DataFrame(forecast_rows, columns=FORECAST_COLUMNS), pd.DataFrame(quantile_rows, columns=QUANTILE_COLUMNS)


def quantile_path_for(out_path: str) -> str:
    stem, ext = os.path.splitext(out_path)
    return f"{stem}_quantiles{ext or '.csv'}"


def cmd_forecast(
    config: RunConfig, data_path: str, out_path: str, trajectory_path: Optional[str] = None
) -> pd.DataFrame:
    """
    DATA.start_forecast 위치부터 1-step-ahead 예측 CSV 와 분위수 CSV 를 저장.
    추적 method 는 trajectory 가 필요하고, 주어지지 않으면 그 자리에서 추적한다.
    """
    logger = logger_init.get_logger()
    method = config.run.method
    series = read_series_csv(data_path, config.data)

    tracking = None
    if method in TRACKED_METHODS:
        if trajectory_path:
            frame, order = read_trajectory_csv(trajectory_path)
            if order != config.run.order:
                raise DataError(f"trajectory has p={order} but the config says p={config.run.order}", trajectory_path, 1)
            tracking = tracking_from_frame(method, frame, order, series.t)
        else:
            logger.info(f"[Forecast] no trajectory given, tracking {method} first")
            tracking = run_tracking(method, series.x, config)
            if tracking.diverged:
                raise DivergenceError(f"{method} diverged", method=method, t=int(series.t[tracking.diverged_at]))

    forecasts, quantiles = build_forecast_frames(method, series, config, config.data.start_forecast, tracking)
    write_frame(forecasts, out_path)
    write_frame(quantiles, quantile_path_for(out_path))
    logger.info(f"[Forecast] wrote {len(forecasts)} {method} forecasts to {out_path}")
    return forecasts


# ---------------------------------------------------------------- evaluate

def _records_from_frame(frame: pd.DataFrame, series: SeriesData, config: RunConfig) -> Iterator[ForecastRecord]:
    for row in frame.itertuples(index=False):
        if row.kind == "gln":
            gln = GlnForecast(mu=row.mu, sigma2=row.sigma2, nu=row.nu, b=row.b_tilde)
            yield ForecastRecord(int(row.t), int(row.target_t), row.method, "gln", gln=gln)
        else:
            yield ForecastRecord(int(row.t), int(row.target_t), row.method, "ensemble",
                                 ensemble=members_from_ref(row.members_ref, series, config),
                                 members_ref=row.members_ref)


def _aligned_observations(frame: pd.DataFrame, series: SeriesData) -> np.ndarray:
    pos = np.searchsorted(series.t, frame["target_t"].to_numpy())
    pos = np.minimum(pos, len(series) - 1)
    if not np.array_equal(series.t[pos], frame["target_t"].to_numpy()):
        raise DataError("forecast targets not present in the data", series.path)
    return series.raw[pos]


def score_frame(
    frame: pd.DataFrame, series: SeriesData, config: RunConfig, grid: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """한 method 의 forecast 행을 chunk 단위로 채점: (crps, pit, quantiles, forecast cdf 평균)"""
    obs = _aligned_observations(frame, series)
    rng = np.random.default_rng(config.evaluation.seed)
    crps, pits, quantiles = [], [], []
    cdf_total = np.zeros_like(grid)
    for lo in range(0, len(frame), SCORE_CHUNK):
        chunk = list(_records_from_frame(frame.iloc[lo:lo + SCORE_CHUNK], series, config))
        c, p = score_records(chunk, obs[lo:lo + SCORE_CHUNK], rng)
        crps.append(c)
        pits.append(p)
        quantiles.extend(forecast_quantiles(r.distribution) for r in chunk)
        cdf_total += forecast_cdf_sum(chunk, grid)
    return np.concatenate(crps), np.concatenate(pits), np.vstack(quantiles), cdf_total / len(frame)


def evaluate_frame(
    frame: pd.DataFrame, series: SeriesData, config: RunConfig, out_dir: Optional[str] = None
) -> Dict[str, EvalReport]:
    """method 별 EvalReport. out_dir 가 있으면 report.json 과 plot 용 CSV 저장"""
    logger = logger_init.get_logger()
    overlap = frame["target_t"].isin(series.t)
    if not overlap.any():
        raise DataError("no forecast target overlaps the data timestamps", series.path)
    if not overlap.all():
        logger.warning(f"[Evaluate] {int((~overlap).sum())} forecast(s) without an observation are skipped")
    frame = frame[overlap]

    grid = np.linspace(0.0, max(1.0, float(series.raw.max())), config.evaluation.grid_points)
    reports, curves, details = {}, {}, {}
    for method, rows in frame.groupby("method", sort=True):
        rows = rows.reset_index(drop=True)
        crps, pits, quantiles, mean_cdf = score_frame(rows, series, config, grid)
        obs = _aligned_observations(rows, series)
        # 데이터가 capacity 로 나눠져 있으므로 capacity = 1 단위의 %
        reports[method] = build_report(method, crps, pits, capacity=1.0,
                                       coverage=interval_coverage(quantiles, obs))
        curves[method] = MarginalCurve(grid, mean_cdf, empirical_cdf(obs, grid))
        details[method] = (rows, crps, pits)
        logger.info(f"[Evaluate] {method}: mean CRPS {reports[method].mean_crps:.3f}% "
                    f"over {reports[method].n_scored} forecasts")

    positive = {m: r.mean_crps for m, r in reports.items() if r.mean_crps > 0}
    table = improvement_table(positive)
    reports = {m: r.model_copy(update={"improvements": table.get(m, {})}) for m, r in reports.items()}

    if out_dir:
        write_json({
            "unit": "percent of capacity",
            "methods": {m: r.model_dump() for m, r in reports.items()},
        }, os.path.join(out_dir, "report.json"))
        edges = np.linspace(0.0, 1.0, len(next(iter(reports.values())).pit_counts) + 1)
        for method, report in reports.items():
            write_frame(pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": report.pit_counts}),
                        os.path.join(out_dir, f"pit_{method}.csv"))
            curve = curves[method]
            write_frame(pd.DataFrame({"y": curve.grid, "forecast_cdf": curve.forecast_cdf,
                                      "empirical_cdf": curve.empirical_cdf}),
                        os.path.join(out_dir, f"marginal_{method}.csv"))
            rows, crps, pits = details[method]
            write_frame(pd.DataFrame({"t": rows["t"], "target_t": rows["target_t"],
                                      "crps_pct": 100.0 * crps, "pit": pits}),
                        os.path.join(out_dir, f"crps_{method}.csv"))
    return reports


def cmd_evaluate(config: RunConfig, forecast_path: str, data_path: str, out_dir: str) -> Dict[str, EvalReport]:
    logger = logger_init.get_logger()
    frame = read_forecast_csv(forecast_path)
    series = read_series_csv(data_path, config.data)
    logger.info(f"[Evaluate] {len(frame)} forecast rows from {forecast_path}")
    return evaluate_frame(frame, series, config, out_dir)


def _replica_forecasts(
    series: SeriesData, config: RunConfig, diverged: Dict[str, int], errors: Dict[str, List[Dict[str, float]]]
) -> pd.DataFrame:
    """EVALUATION.methods 예측을 한 replica 에서 만든다. 발산한 추적 method 는 빠진다"""
    logger = logger_init.get_logger()
    frames = []
    for method in config.evaluation.methods:
        tracking = None
        if method in TRACKED_METHODS:
            tracking = run_tracking(method, series.x, config)
            if tracking.diverged:
                logger.warning(f"[Evaluate] {method} diverged on {series.path} at t={series.t[tracking.diverged_at]}")
                diverged[method] = diverged.get(method, 0) + 1
                continue
            keep = tracking.positions >= config.data.start_forecast
            if series.b_true is not None and keep.any():
                errors.setdefault(method, []).append(
                    tracking_error(tracking.thetas[keep, -1], series.b_true[tracking.positions[keep]]))
        elif method == "ideal" and series.b_true is None:
            logger.warning(f"[Evaluate] {series.path} has no b_true column, skipping ideal")
            continue
        frames.append(build_forecast_frames(method, series, config, config.data.start_forecast, tracking)[0])
    if not frames:
        raise DataError("no method produced forecasts", series.path)
    return pd.concat(frames, ignore_index=True)


def cmd_evaluate_replicas(
    config: RunConfig,
    data_paths: Sequence[str],
    out_dir: str,
    forecast_paths: Optional[Sequence[str]] = None,
) -> dict:
    """
    Monte Carlo 평가: replica 마다 evaluate 출력을 out_dir/replica_XXX 에 쓰고
    method 별 평균 CRPS 의 mean (sd) 를 out_dir/report.json 에 저장.
    forecast_paths 가 없으면 replica 마다 EVALUATION.methods 예측을 그 자리에서 만든다.
    """
    logger = logger_init.get_logger()
    if not data_paths:
        raise ConfigError("at least one data file is required")
    if forecast_paths and len(forecast_paths) != len(data_paths):
        raise ConfigError(f"{len(forecast_paths)} forecast file(s) for {len(data_paths)} data file(s)")

    per_replica, rows = [], []
    diverged: Dict[str, int] = {}
    errors: Dict[str, List[Dict[str, float]]] = {}
    for i, data_path in enumerate(_progress(data_paths, "[Evaluate] replicas")):
        series = read_series_csv(data_path, config.data)
        if forecast_paths:
            frame = read_forecast_csv(forecast_paths[i])
        else:
            frame = _replica_forecasts(series, config, diverged, errors)
        reports = evaluate_frame(frame, series, config, os.path.join(out_dir, f"replica_{i:03d}"))
        per_replica.append({m: r.mean_crps for m, r in reports.items()})
        rows.append({"data": data_path, "mean_crps": per_replica[-1]})

    summary = summarize_replicas(per_replica)
    for method, stats in summary.items():
        logger.info(f"[Evaluate] {method}: mean CRPS {stats['mean']:.3f}% (sd {stats['sd']:.3f}) "
                    f"over {stats['replicas']} replica(s)")
    payload = {
        "unit": "percent of capacity",
        "replicas": len(data_paths),
        "methods": summary,
        "diverged": diverged,
        "tracking_error": {m: summarize_tracking_errors(errs) for m, errs in errors.items()},
        "per_replica": rows,
    }
    write_json(payload, os.path.join(out_dir, "report.json"))
    return payload


# ---------------------------------------------------------------- backtest

_GRID_SECTION = {
    "ngd": "ngd",
    "rmle_b": "rmle",
    "rmle_1": "rmle",
    "ongd": "ongd",
    "persistence": "persistence",
    "climatology": "climatology",
    "ideal": None,
}


def grid_cells(method: str, config: RunConfig) -> List[Dict[str, float]]:
    grid = config.backtest.grids.get(method)
    if grid is None:
        raise ConfigError(f"no hyperparameter grid for '{method}'")
    if any(len(values) == 0 for values in grid.values()):
        raise ConfigError(f"grid for '{method}' has an empty candidate list")
    if grid and _GRID_SECTION[method] is None:
        raise ConfigError(f"'{method}' has no hyperparameters to search")
    names = sorted(grid)
    return [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]


def apply_cell(config: RunConfig, method: str, cell: Dict[str, float]) -> RunConfig:
    """grid cell 하나를 해당 섹션에 덮어쓴 RunConfig"""
    section_name = _GRID_SECTION[method]
    update = {"run": config.run.model_copy(update={"method": method})}
    if section_name is not None and cell:
        section = getattr(config, section_name)
        try:
            update[section_name] = type(section).model_validate({**section.model_dump(), **cell})
        except ValidationError as e:
            raise ConfigError(f"invalid grid cell {cell} for '{method}': {e}") from e
    return config.model_copy(update=update)


def _selection_key(result: dict) -> Tuple[float, float, float]:
    # 동점이면 작은 m, 그 다음 작은 eta
    cell = result["hyperparameters"]
    return result["validation_crps"], cell.get("m", 0.0), cell.get("eta", 0.0)


def mean_crps_between(
    method: str, series: SeriesData, config: RunConfig, start: int, stop: int,
    tracking: Optional[TrackingResult] = None,
) -> float:
    """target 위치 [start, stop) 의 평균 CRPS (capacity 대비 %)"""
    part = series if stop >= len(series) else SeriesData(
        t=series.t[:stop], x=series.x[:stop], raw=series.raw[:stop],
        b_true=None if series.b_true is None else series.b_true[:stop], path=series.path)
    if method in TRACKED_METHODS and tracking is None:
        tracking = run_tracking(method, part.x, config)
        if tracking.diverged:
            raise DivergenceError(f"{method} diverged", method=method, t=int(part.t[tracking.diverged_at]))
    first, last = _issue_range(part, start)
    records = list(iter_forecasts(method, part, config, first, last, tracking))
    total = 0.0
    for lo in range(0, len(records), SCORE_CHUNK):
        chunk = records[lo:lo + SCORE_CHUNK]
        crps, _ = score_records(chunk, part.raw[first + 1 + lo: first + 1 + lo + len(chunk)])
        total += float(crps.sum())
    return 100.0 * total / len(records)


def cmd_backtest(config: RunConfig, data_path: str, out_dir: str) -> Dict[str, dict]:
    """
    validation 구간 CRPS 로 grid search 후, 선택된 하이퍼파라미터로 test 구간을 예측/평가.
    추적은 인과적이므로 test 예측은 전체 시계열에서 추적한 trajectory 를 쓴다.
    """
    logger = logger_init.get_logger()
    bt = config.backtest
    series = read_series_csv(data_path, config.data)
    if bt.test_start >= len(series) - 1:
        raise ConfigError(f"test_start {bt.test_start} leaves no test data in {len(series)} observations")

    summary: Dict[str, dict] = {}
    test_frames = []
    for method in bt.methods:
        cells = grid_cells(method, config)
        results = []
        for cell in _progress(cells, f"[Backtest] {method}"):
            cell_config = apply_cell(config, method, cell)
            try:
                value = mean_crps_between(method, series, cell_config, bt.validation_start, bt.validation_end)
            except DivergenceError as e:
                logger.warning(f"[Backtest] {method} {cell}: {e}")
                value = math.inf
            results.append({"hyperparameters": cell, "validation_crps": value})
            logger.debug(f"[Backtest] {method} {cell}: validation CRPS {value:.4f}%")

        winner = min(results, key=_selection_key)
        if not math.isfinite(winner["validation_crps"]):
            raise DivergenceError(f"every grid cell of {method} diverged", method=method)
        best = apply_cell(config, method, winner["hyperparameters"])

        tracking = None
        if method in TRACKED_METHODS:
            tracking = run_tracking(method, series.x, best)
            if tracking.diverged:
                raise DivergenceError(f"{method} diverged on the test run", method=method,
                                      t=int(series.t[tracking.diverged_at]))
        forecasts, _ = build_forecast_frames(method, series, best, bt.test_start, tracking)
        test_frames.append(forecasts)
        summary[method] = {
            "hyperparameters": winner["hyperparameters"],
            "validation_crps": winner["validation_crps"],
            "grid": results,
        }
        logger.info(f"[Backtest] {method}: chose {winner['hyperparameters']} "
                    f"(validation {winner['validation_crps']:.3f}%)")

    test_frame = pd.concat(test_frames, ignore_index=True)
    write_frame(test_frame, os.path.join(out_dir, "forecasts_test.csv"))
    reports = evaluate_frame(test_frame, series, config, os.path.join(out_dir, "test"))
    for method, report in reports.items():
        summary[method]["test_crps"] = report.mean_crps
        logger.info(f"[Backtest] {method}: test CRPS {report.mean_crps:.3f}%")
    write_json({"validation": [bt.validation_start, bt.validation_end], "test_start": bt.test_start,
                "methods": summary}, os.path.join(out_dir, "backtest.json"))
    return summary


def run_command(command: str, config: RunConfig, args) -> RunStatusCode:
    """CLI 명령 실행. 실패는 stage 태그와 함께 기록하고 exit code 로 변환"""
    logger = logger_init.get_logger()
    stage = command.capitalize()
    try:
        if command == "simulate":
            cmd_simulate(config, args.out)
        elif command == "track":
            cmd_track(config, _single(args.data, "--data"), _out_file(args.out, "trajectory.csv"))
        elif command == "forecast":
            cmd_forecast(config, _single(args.data, "--data"), _out_file(args.out, "forecasts.csv"),
                         args.trajectory)
        elif command == "evaluate":
            data_paths = _required(args.data, "--data")
            if args.forecast and len(data_paths) == 1 and len(args.forecast) == 1:
                cmd_evaluate(config, args.forecast[0], data_paths[0], args.out)
            else:
                cmd_evaluate_replicas(config, data_paths, args.out, args.forecast)
        elif command == "backtest":
            cmd_backtest(config, _single(args.data, "--data"), args.out)
        else:
            raise ConfigError(f"unknown command '{command}'")
    except (GlnTrackingError, ValidationError, OSError) as e:
        status, code = status_for(e)
        logger.error(f"[{stage}] {status.value}: {e}")
        return code
    return RunStatusCode.SUCCESS


def _required(values: Optional[List[str]], flag: str) -> List[str]:
    if not values:
        raise ConfigError(f"{flag} is required for this command")
    return values


def _single(values: Optional[List[str]], flag: str) -> str:
    values = _required(values, flag)
    if len(values) != 1:
        raise ConfigError(f"{flag} takes a single file for this command, got {len(values)}")
    return values[0]


def _out_file(out: str, default_name: str) -> str:
    # --out 이 디렉터리(또는 확장자 없음)면 기본 파일 이름을 붙인다
    if out.endswith(".csv"):
        return out
    return os.path.join(out, default_name)
