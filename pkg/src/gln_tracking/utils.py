import math
import os
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from pydantic import ValidationError

import logger_init
from gln_tracking.core.forecaster import coarsen
from gln_tracking.errors import ConfigError, DataError
from gln_tracking.schema import FORECAST_COLUMNS, DataSection, RunConfig, trajectory_columns

FLOAT_FORMAT = "%.17g"


# Reading config file (JSON 또는 key = value)
def load_config(config_file: str) -> Dict[str, Any]:
    logger = logger_init.get_logger()
    if not os.path.exists(config_file):
        logger.error(f"Config file not found: {config_file}")
        raise ConfigError(f"config file not found: {config_file}")

    if config_file.endswith(".json"):
        try:
            with open(config_file, encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_file}:{e.lineno}: invalid JSON ({e.msg})") from e
    return read_key_value(config_file)


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip("'\"")


def read_key_value(config_file: str) -> Dict[str, Any]:
    """
    한 줄에 `SECTION.key = value`, '#' 이후는 주석.
    값은 JSON literal 로 해석되고 실패하면 문자열로 남는다.
    """
    config: Dict[str, Any] = {}
    with open(config_file, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{config_file}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{config_file}:{lineno}: empty key")
            node = config
            *parents, leaf = key.split(".")
            for name in parents:
                node = node.setdefault(name, {})
                if not isinstance(node, dict):
                    raise ConfigError(f"{config_file}:{lineno}: '{name}' is both a value and a section")
            node[leaf] = _parse_value(value)
    return config


def build_run_config(raw: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """raw dict + CLI override (RUN 섹션) 를 검증해 RunConfig 로"""
    merged = dict(raw)
    if overrides:
        run = dict(merged.get("RUN", {}))
        run.update({k: v for k, v in overrides.items() if v is not None})
        merged["RUN"] = run
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_run_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    raw = load_config(config_file) if config_file else {}
    return build_run_config(raw, overrides)


@dataclass(frozen=True, eq=False)
class SeriesData:
    """
    capacity 로 나누고 coarsen 한 시계열

    Args:
        t: 시간 인덱스 (정수, 증가)
        x: coarsen 된 관측 (0, 1) 단위
        raw: coarsen 전 관측 (같은 단위, 평가용)
        b_true: 합성 데이터의 참 상한 (없으면 None)
    """
    t: NDArray[np.int64]
    x: NDArray[np.float64]
    raw: NDArray[np.float64]
    b_true: Optional[NDArray[np.float64]] = None
    path: Optional[str] = None

    def __len__(self) -> int:
        return self.x.size

    def index_of(self, t_value: int) -> int:
        pos = int(np.searchsorted(self.t, t_value))
        if pos >= self.t.size or self.t[pos] != t_value:
            raise DataError(f"time {t_value} not present in the data", self.path)
        return pos


def _read_frame(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError("file not found", path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataError("empty file", path, 1) from e
    except pd.errors.ParserError as e:
        raise DataError(f"malformed CSV: {e}", path) from e
    frame.columns = [c.strip() for c in frame.columns]
    return frame


def _require_columns(frame: pd.DataFrame, columns: List[str], path: str):
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"missing column(s) {missing}", path, 1)


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def _numeric_column(frame: pd.DataFrame, name: str, path: str, allow_empty: bool = False) -> NDArray[np.float64]:
    """
    숫자 변환 실패 시 1-based 파일 줄 번호 (header = 1) 로 DataError
    float() 로 변환하므로 write_frame 의 %.17g 출력은 비트 단위로 복원된다.
    """
    text = frame[name].astype(str).str.strip()
    values = np.array([_parse_float(s) for s in text], dtype=np.float64)
    bad = ~np.isfinite(values)
    if allow_empty:
        bad &= (text != "").to_numpy()
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"non-numeric value {text.iloc[i]!r} in column '{name}'", path, i + 2)
    return values


def _time_column(frame: pd.DataFrame, name: str, path: str) -> NDArray[np.int64]:
    values = _numeric_column(frame, name, path)
    frac = values != np.round(values)
    if frac.any():
        i = int(np.argmax(frac))
        raise DataError(f"time index {values[i]} in column '{name}' is not an integer", path, i + 2)
    return values.astype(np.int64)


def read_series_csv(path: str, data: DataSection) -> SeriesData:
    """t,x[,b_true] CSV 를 읽어 capacity 로 나누고 [delta, 1-delta] 로 coarsen"""
    logger = logger_init.get_logger()
    frame = _read_frame(path)
    _require_columns(frame, ["t", "x"], path)
    if frame.empty:
        raise DataError("no data rows", path, 2)

    t = _time_column(frame, "t", path)
    order = np.diff(t) <= 0
    if order.any():
        raise DataError("time index must be strictly increasing", path, int(np.argmax(order)) + 3)

    raw = _numeric_column(frame, "x", path) / data.capacity
    upper = 1.0 if data.coarsen_upper else None
    x = np.asarray(coarsen(raw, data.delta, upper), dtype=np.float64)
    b_true = None
    if "b_true" in frame.columns:
        b_true = _numeric_column(frame, "b_true", path) / data.capacity

    moved = int(np.count_nonzero(x != raw))
    if moved:
        logger.debug(f"coarsened {moved} observation(s) of {path} into the open support")
    return SeriesData(t=t, x=x, raw=raw, b_true=b_true, path=path)


def write_frame(frame: pd.DataFrame, path: str):
    directory = os.path.split(path)[0]
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_json(payload: Dict[str, Any], path: str):
    directory = os.path.split(path)[0]
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)


def read_trajectory_csv(path: str) -> Tuple[pd.DataFrame, int]:
    """trajectory CSV 와 AR 차수 p (lambda_k 열 개수)"""
    frame = _read_frame(path)
    order = sum(1 for c in frame.columns if c.startswith("lambda_"))
    if order < 1:
        raise DataError("trajectory has no lambda_k column", path, 1)
    columns = trajectory_columns(order)
    _require_columns(frame, columns, path)
    out = pd.DataFrame({"t": _time_column(frame, "t", path)})
    for name in columns[1:]:
        out[name] = _numeric_column(frame, name, path)
    return out, order


def read_forecast_csv(path: str) -> pd.DataFrame:
    frame = _read_frame(path)
    _require_columns(frame, FORECAST_COLUMNS, path)
    out = pd.DataFrame({
        "t": _time_column(frame, "t", path),
        "target_t": _time_column(frame, "target_t", path),
        "method": frame["method"].str.strip(),
        "kind": frame["kind"].str.strip(),
    })
    bad_kind = ~out["kind"].isin(["gln", "ensemble"])
    if bad_kind.any():
        i = int(np.argmax(bad_kind.to_numpy()))
        raise DataError(f"unknown forecast kind {out['kind'].iloc[i]!r}", path, i + 2)
    for name in ("mu", "sigma2", "nu", "b_tilde"):
        out[name] = _numeric_column(frame, name, path, allow_empty=True)
    out["members_ref"] = frame["members_ref"].str.strip()
    return out
