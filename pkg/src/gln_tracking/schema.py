from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gln_tracking.core.likelihood import ParamVector
from gln_tracking.core.optimizers import NgdConfig
from gln_tracking.core.synthetic import SyntheticConfig

'''
Run configuration schema
'''

Method = Literal["ngd", "rmle_b", "rmle_1", "ongd", "climatology", "persistence", "ideal"]
TRACKED_METHODS = ("ngd", "rmle_b", "rmle_1", "ongd")
BENCHMARK_METHODS = ("climatology", "persistence", "ideal")


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DataSection(_Section):
    """입력 데이터: capacity 로 나눠 (0,1) 단위로 만든 뒤 delta 로 coarsen"""
    capacity: float = Field(1.0, gt=0)
    delta: float = Field(0.001, gt=0, lt=0.5)
    # capacity 로 상한이 정해진 실데이터면 true
    coarsen_upper: bool = False
    start_forecast: int = Field(2000, ge=1)


class Theta0Section(_Section):
    """자연 단위 시작점 (lambda, sigma2, nu, b). lambdas 가 없으면 0 벡터"""
    lambdas: Optional[List[float]] = None
    sigma2: float = Field(1.0, gt=0)
    nu: float = Field(1.0, gt=0)
    b: float = 1.0

    def to_param_vector(self, order: int) -> ParamVector:
        lambdas = self.lambdas if self.lambdas is not None else [0.0] * order
        if len(lambdas) != order:
            raise ValueError(f"theta0 has {len(lambdas)} AR coefficients but p={order}")
        return ParamVector.from_natural(lambdas, self.sigma2, self.nu, self.b)


class RmleSection(_Section):
    alpha: float = Field(0.975, gt=0, lt=1)
    warmup: int = Field(1000, ge=2)
    initial_covariance: float = Field(1e6, gt=0)
    covariance_init: Literal["information", "identity"] = "information"
    fixed_bound: float = Field(1.0, gt=0)


class OngdSection(_Section):
    eta: float = Field(0.001, gt=0)
    m: int = Field(100, ge=1)


class PersistenceSection(_Section):
    n_err: int = Field(100, ge=1)


class ClimatologySection(_Section):
    cap: int = Field(5000, ge=1)


class EvaluationSection(_Section):
    grid_points: int = Field(101, ge=2)
    seed: int = 0
    # --forecast 없이 evaluate 할 때 replica 마다 예측을 만들 method
    methods: List[Method] = Field(default_factory=lambda: [
        "ngd", "rmle_b", "rmle_1", "ongd", "climatology", "persistence", "ideal"])


class BacktestSection(_Section):
    """
    [validation_start, validation_end) 로 하이퍼파라미터를 고르고
    [test_start, 끝) 에서 평가. grids 는 method -> {하이퍼파라미터: 후보값 리스트}
    """
    validation_start: int = Field(2000, ge=1)
    validation_end: int = Field(6000, ge=2)
    test_start: int = Field(6000, ge=2)
    methods: List[Method] = Field(default_factory=lambda: ["ongd", "persistence", "climatology"])
    grids: Dict[str, Dict[str, List[float]]] = Field(default_factory=lambda: {
        "ongd": {"eta": [0.001, 0.003, 0.01], "m": [1, 5, 10, 20, 50, 100, 150]},
        "persistence": {"n_err": [10, 50, 100, 200]},
        "rmle_b": {"alpha": [0.975, 0.99, 0.995]},
        "rmle_1": {"alpha": [0.975, 0.99, 0.995]},
        "ngd": {"alpha": [0.99, 0.9975], "learning_rate": [0.003, 0.1], "iterations": [5000],
                "update_every": [500]},
        "climatology": {"cap": [5000]},
    })

    @model_validator(mode="after")
    def _check_split(self):
        if not self.validation_start < self.validation_end <= self.test_start:
            raise ValueError("backtest split needs validation_start < validation_end <= test_start")
        return self


class RunSection(_Section):
    method: Method = "ongd"
    order: int = Field(1, ge=1)
    seed: int = 0
    replicas: int = Field(1, ge=1)


class RunConfig(BaseModel):
    """gln-tracking 전체 설정 (JSON 의 대문자 섹션과 1:1)"""
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    data: DataSection = Field(default_factory=DataSection, alias="DATA")
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig, alias="SYNTHETIC")
    theta0: Theta0Section = Field(default_factory=Theta0Section, alias="THETA0")
    ngd: NgdConfig = Field(default_factory=NgdConfig, alias="NGD")
    rmle: RmleSection = Field(default_factory=RmleSection, alias="RMLE")
    ongd: OngdSection = Field(default_factory=OngdSection, alias="ONGD")
    persistence: PersistenceSection = Field(default_factory=PersistenceSection, alias="PERSISTENCE")
    climatology: ClimatologySection = Field(default_factory=ClimatologySection, alias="CLIMATOLOGY")
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection, alias="EVALUATION")
    backtest: BacktestSection = Field(default_factory=BacktestSection, alias="BACKTEST")
    run: RunSection = Field(default_factory=RunSection, alias="RUN")


class TrajectoryRecord(BaseModel):
    """추적 결과 한 줄 (자연 단위)"""
    t: int
    lambdas: List[float]
    sigma2: float
    nu: float
    b_hat: float
    b_tilde: float
    loss: float

    def to_row(self) -> dict:
        row = {"t": self.t}
        row.update({f"lambda_{k + 1}": v for k, v in enumerate(self.lambdas)})
        row.update({"sigma2": self.sigma2, "nu": self.nu, "b_hat": self.b_hat,
                    "b_tilde": self.b_tilde, "loss": self.loss})
        return row


def trajectory_columns(order: int) -> List[str]:
    return ["t", *[f"lambda_{k}" for k in range(1, order + 1)], "sigma2", "nu", "b_hat", "b_tilde", "loss"]


FORECAST_COLUMNS = ["t", "target_t", "method", "kind", "mu", "sigma2", "nu", "b_tilde", "members_ref"]
QUANTILE_COLUMNS = ["t", "target_t", "method", "q0.025", "q0.125", "q0.875", "q0.975"]
