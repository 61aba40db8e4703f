"""Pydantic models for configuration, estimator results and replicate reports."""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from config import settings


class WeightMode(str, Enum):
    """Shapes of the cumulative weight Omega(m)."""
    PIECEWISE_EXPONENTIAL = "piecewise_exponential"
    DISCRETE = "discrete"
    SLICE = "slice"
    EXPONENTIAL = "exponential"


class AdaptationStrategy(str, Enum):
    """How level weights are refreshed during estimation."""
    SELF_BALANCING = "self_balancing"
    REBALANCE = "rebalance"
    FLAT_HISTOGRAM = "flat_histogram"


class ExperimentKind(str, Enum):
    RARE_EVENT = "rare_event"
    EVIDENCE = "evidence"
    PROPERTY_SUITE = "property_suite"
    TRACE = "trace"


class ModelType(str, Enum):
    SHORTEST_PATH = "shortest_path"
    GAUSSIAN_MIXTURE = "gaussian_mixture"
    UNIFORM_TOY = "uniform_toy"
    EXPONENTIAL_TOY = "exponential_toy"


class EstimatorType(str, Enum):
    CMC = "cmc"
    CPP = "cpp"
    CE = "ce"
    SS = "ss"
    NS = "ns"
    DNS = "dns"


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


RARE_EVENT_ESTIMATORS = {EstimatorType.CMC, EstimatorType.CPP, EstimatorType.CE, EstimatorType.SS}
EVIDENCE_ESTIMATORS = {EstimatorType.SS, EstimatorType.NS, EstimatorType.DNS}


class SplitConfig(BaseModel):
    """Parameters of one split sampling run (level construction plus estimation)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    rho: float = Field(default_factory=lambda: settings.default_rho, gt=0.0, lt=1.0,
                       description="Target level-to-level probability ratio")
    n_level: int = Field(default_factory=lambda: settings.default_n_level, ge=1,
                         description="Visits to the top level before a new level is placed")
    nu_init: float = Field(default_factory=lambda: settings.default_nu_init, gt=0.0,
                           description="Initial visit mass per level")
    boost: float = Field(default_factory=lambda: settings.rare_event_boost, ge=0.0, alias="lambda",
                         description="Exponential boost Lambda used while levels are built")
    beta: Optional[float] = Field(default_factory=lambda: settings.default_beta, gt=0.0,
                                  description="Top-level weight factor; enables the two-level boost")
    t_max: int = Field(default_factory=lambda: settings.default_t_max, ge=0)
    n: int = Field(100_000, ge=0, description="Estimation-phase iterations when no budget is set")
    budget: Optional[int] = Field(None, ge=1, description="Total kernel applications for both phases")
    gamma: Optional[float] = Field(None, gt=0.0, description="Rare-event threshold")
    weight_mode: Optional[WeightMode] = None
    kernel_steps: int = Field(default_factory=lambda: settings.default_kernel_steps, ge=1)
    tail_tolerance: float = Field(default_factory=lambda: settings.tail_tolerance, gt=0.0)
    level_budget_factor: int = Field(default_factory=lambda: settings.level_budget_factor, ge=1)
    estimation_share: float = Field(default_factory=lambda: settings.estimation_share, gt=0.0, lt=1.0,
                                    description="Share of the budget reserved for the estimation phase")
    min_level_visits: int = Field(default_factory=lambda: settings.min_level_visits, ge=1,
                                  description="Top-level visits recorded before a level may close early")
    negligible_increment: float = Field(default_factory=lambda: settings.negligible_increment, ge=0.0)
    trace_every: int = Field(default_factory=lambda: settings.trace_every, ge=0)
    adaptation: AdaptationStrategy = AdaptationStrategy.SELF_BALANCING
    rebalance_cap: float = Field(default_factory=lambda: settings.rebalance_cap, gt=0.0)
    fh_tolerance: float = Field(default_factory=lambda: settings.fh_tolerance, gt=0.0)
    fh_step_scale: float = Field(default_factory=lambda: settings.fh_step_scale, gt=0.0)
    fh_step_decay: float = Field(default_factory=lambda: settings.fh_step_decay)
    adaptation_interval: int = Field(default_factory=lambda: settings.adaptation_interval, ge=1)

    @field_validator("fh_step_decay")
    @classmethod
    def validate_step_decay(cls, v):
        if not 0.5 < v <= 1.0:
            raise ValueError("fh_step_decay must lie in (0.5, 1]")
        return v

    @field_validator("weight_mode")
    @classmethod
    def validate_weight_mode(cls, v):
        if v in (WeightMode.SLICE, WeightMode.EXPONENTIAL):
            raise ValueError("level-grid runs need a discrete or piecewise-exponential weight")
        return v

    @property
    def resolved_weight_mode(self) -> WeightMode:
        if self.weight_mode is not None:
            return self.weight_mode
        return WeightMode.DISCRETE if self.gamma is not None else WeightMode.PIECEWISE_EXPONENTIAL


class EstimatorResult(BaseModel):
    """Outcome of a single estimator run."""

    estimator: str = Field(..., description="Estimator identifier")
    estimate: float = Field(..., description="Point estimate of Z or Z(gamma)")
    log_estimate: Optional[float] = Field(None, description="Natural log of the estimate")
    std_error: Optional[float] = Field(None, description="Standard error, when the estimator has one")
    kernel_applications: int = Field(0, ge=0)
    schedule: List[float] = Field(default_factory=list, description="Thresholds or levels used")
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)


class TraceRow(BaseModel):
    """Level visit trace entry."""

    iteration: int
    level: int
    log_omega: float


class PropertyCheck(BaseModel):
    """Result of one exact-identity or sampler-correctness check."""

    name: str
    group: str = "identity"
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


class ReplicateRecord(BaseModel):
    """Per-replicate outcome."""

    replicate: int = Field(..., ge=0)
    seed: int
    estimate: Optional[float] = None
    log_estimate: Optional[float] = None
    kernel_applications: int = 0
    wall_clock: Optional[float] = None
    error: Optional[str] = None
    warnings: List[str] = Field(default_factory=list)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class ReplicateReport(BaseModel):
    """Replicate batch with summary statistics recomputed from the stored values."""

    kind: ExperimentKind
    estimator: EstimatorType
    model: ModelType
    gamma_or_mode: str
    n: int
    truth: Optional[float] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    records: List[ReplicateRecord] = Field(default_factory=list)
    trace: List[TraceRow] = Field(default_factory=list)

    def _successful(self) -> List[ReplicateRecord]:
        return [r for r in self.records if r.error is None and r.estimate is not None]

    @computed_field
    @property
    def failed(self) -> int:
        return len(self.records) - len(self._successful())

    @computed_field
    @property
    def mean_estimate(self) -> Optional[float]:
        ok = self._successful()
        if not ok:
            return None
        return float(np.mean([r.estimate for r in ok]))

    @computed_field
    @property
    def relative_rmse(self) -> Optional[float]:
        ok = self._successful()
        if not ok or not self.truth:
            return None
        errors = np.array([r.estimate for r in ok]) - self.truth
        return float(np.sqrt(np.mean(errors ** 2)) / self.truth)

    @computed_field
    @property
    def rms_log_error(self) -> Optional[float]:
        ok = self._successful()
        if not ok or not self.truth:
            return None
        logs = np.array([_record_log(r) for r in ok])
        return float(np.sqrt(np.mean((logs - math.log(self.truth)) ** 2)))


def _record_log(record: ReplicateRecord) -> float:
    if record.log_estimate is not None:
        return record.log_estimate
    return math.log(record.estimate) if record.estimate > 0 else -math.inf


class ExperimentConfig(BaseModel):
    """Experiment definition: estimator, target, budget, replicates and output."""

    model_config = ConfigDict(populate_by_name=True, protected_namespaces=())

    kind: ExperimentKind
    model: ModelType = ModelType.SHORTEST_PATH
    decentered: bool = Field(False, description="Move the mixture spike off the slab center")
    estimator: EstimatorType = EstimatorType.SS
    gamma: Optional[float] = Field(None, gt=0.0)
    n: int = Field(1_000_000, ge=1, description="Total budget N per replicate")
    replicates: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)

    # Split sampling
    rho: Optional[float] = Field(None, gt=0.0, lt=1.0)
    n_level: int = Field(default_factory=lambda: settings.default_n_level, ge=1)
    nu_init: float = Field(default_factory=lambda: settings.default_nu_init, gt=0.0)
    boost: Optional[float] = Field(None, ge=0.0, alias="lambda")
    beta: Optional[float] = Field(default_factory=lambda: settings.default_beta, gt=0.0)
    t_max: int = Field(default_factory=lambda: settings.default_t_max, ge=0)
    estimation_share: float = Field(default_factory=lambda: settings.estimation_share, gt=0.0, lt=1.0)
    weight_mode: Optional[WeightMode] = None
    adaptation: AdaptationStrategy = AdaptationStrategy.SELF_BALANCING
    kernel_steps: int = Field(default_factory=lambda: settings.default_kernel_steps, ge=1)
    trace_every: int = Field(default_factory=lambda: settings.trace_every, ge=0)

    # Cross-entropy / product estimator
    ce_pilot_size: int = Field(default_factory=lambda: settings.ce_pilot_size, ge=1)
    ce_smoothing: float = Field(default_factory=lambda: settings.ce_smoothing, gt=0.0, le=1.0)
    cpp_stage_size: Optional[int] = Field(default_factory=lambda: settings.cpp_stage_size, ge=2)

    # Nested sampling
    n_particles: int = Field(default_factory=lambda: settings.ns_particles, ge=2)
    mcmc_steps: int = Field(default_factory=lambda: settings.ns_mcmc_steps, ge=1)
    epsilon: float = Field(default_factory=lambda: settings.ns_epsilon, gt=0.0)
    known_max_likelihood: bool = True

    # Diffuse nested sampling
    dns_kappa: float = Field(default_factory=lambda: settings.dns_kappa, gt=0.0)
    dns_level_interval: int = Field(default_factory=lambda: settings.dns_level_interval, ge=1)
    dns_max_levels: int = Field(default_factory=lambda: settings.dns_max_levels, ge=1)

    # Execution and output
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)
    out: Optional[str] = None
    format: ReportFormat = ReportFormat.CSV

    @model_validator(mode="after")
    def validate_compatibility(self):
        if self.kind == ExperimentKind.RARE_EVENT:
            if self.gamma is None:
                raise ValueError("rare-event experiments need a threshold gamma")
            if self.estimator not in RARE_EVENT_ESTIMATORS:
                raise ValueError(f"estimator {self.estimator.value} does not estimate rare-event probabilities")
        elif self.kind == ExperimentKind.EVIDENCE:
            if self.gamma is not None:
                raise ValueError("evidence experiments take no threshold gamma")
            if self.estimator not in EVIDENCE_ESTIMATORS:
                raise ValueError(f"estimator {self.estimator.value} does not estimate evidence")
        elif self.kind == ExperimentKind.TRACE and self.estimator != EstimatorType.SS:
            raise ValueError("traces are recorded for the split sampler only")

        if self.estimator == EstimatorType.CE:
            if self.model != ModelType.SHORTEST_PATH:
                raise ValueError("cross-entropy needs the exponential-family shortest path model")
            if self.n <= self.ce_pilot_size:
                raise ValueError(
                    f"budget N={self.n} leaves nothing for the final cross-entropy stage "
                    f"with pilot size {self.ce_pilot_size}"
                )
        if self.decentered and self.model != ModelType.GAUSSIAN_MIXTURE:
            raise ValueError("decentered applies to the gaussian mixture only")
        return self

    @property
    def resolved_rho(self) -> float:
        if self.rho is not None:
            return self.rho
        return settings.ce_rho if self.estimator == EstimatorType.CE else settings.default_rho

    @property
    def gamma_or_mode(self) -> str:
        if self.gamma is not None:
            return f"{self.gamma:g}"
        if self.model == ModelType.GAUSSIAN_MIXTURE:
            return "decentered" if self.decentered else "centered"
        return self.kind.value

    def to_split_config(self) -> SplitConfig:
        boost = self.boost
        if boost is None:
            boost = settings.rare_event_boost if self.gamma is not None else settings.evidence_boost
        return SplitConfig(
            rho=self.resolved_rho,
            n_level=self.n_level,
            nu_init=self.nu_init,
            boost=boost,
            beta=self.beta,
            t_max=self.t_max,
            budget=self.n,
            estimation_share=self.estimation_share,
            gamma=self.gamma,
            weight_mode=self.weight_mode,
            adaptation=self.adaptation,
            kernel_steps=self.kernel_steps,
            trace_every=self.trace_every,
        )
