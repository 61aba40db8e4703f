"""Replicated experiment runs with per-replicate seeded streams."""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from models import (
    EstimatorType,
    ExperimentConfig,
    ModelType,
    ReplicateRecord,
    ReplicateReport,
)
from .estimator_factory import EstimatorFactory
from .interfaces.target_model_interface import TargetModel
from .target_factory import TargetFactory

logger = logging.getLogger(__name__)


def reference_value(cfg: ExperimentConfig, model: Optional[TargetModel] = None) -> Optional[float]:
    """
    Known truth for the experiment, or None.

    Rare events on the network use the published probabilities; evidence on
    the mixture is 101; the toys have closed forms.
    """
    model = model or TargetFactory.create_model(cfg.model, cfg.decentered)
    if cfg.gamma is not None:
        if cfg.model == ModelType.SHORTEST_PATH:
            value = model.reference_probability(cfg.gamma)
            return None if math.isnan(value) else value
        if hasattr(model, "tail_probability"):
            return model.tail_probability(cfg.gamma)
        return None
    return getattr(model, "evidence", None)


def run_replicate(cfg: ExperimentConfig, replicate: int, truth: Optional[float] = None) -> ReplicateRecord:
    """Run one replicate on its own stream, seeded with seed + replicate; errors are recorded, not raised."""
    seed = cfg.seed + replicate
    rng = np.random.default_rng(seed)
    model = TargetFactory.create_model(cfg.model, cfg.decentered)
    estimator = EstimatorFactory.create_estimator(cfg, reference=truth)
    start = time.perf_counter()
    try:
        result = estimator.estimate(model, rng)
    except Exception as e:
        logger.error(f"Replicate {replicate} (seed {seed}) failed: {e}")
        return ReplicateRecord(
            replicate=replicate,
            seed=seed,
            wall_clock=time.perf_counter() - start,
            error=f"{type(e).__name__}: {e}",
        )
    return ReplicateRecord(
        replicate=replicate,
        seed=seed,
        estimate=result.estimate,
        log_estimate=result.log_estimate,
        kernel_applications=result.kernel_applications,
        wall_clock=time.perf_counter() - start,
        warnings=result.warnings,
        diagnostics=result.diagnostics,
    )


def _run_replicate_job(args) -> ReplicateRecord:
    return run_replicate(*args)


class ExperimentService:
    """Service running replicate batches and split-sampler traces."""

    def _new_report(self, cfg: ExperimentConfig, truth: Optional[float]) -> ReplicateReport:
        return ReplicateReport(
            kind=cfg.kind,
            estimator=cfg.estimator,
            model=cfg.model,
            gamma_or_mode=cfg.gamma_or_mode,
            n=cfg.n,
            truth=truth,
            config=cfg.model_dump(mode="json", exclude={"out", "format", "workers"}),
        )

    def run_replicates(self, cfg: ExperimentConfig) -> ReplicateReport:
        """
        Run cfg.replicates independent replicates.

        Replicate r uses seed cfg.seed + r. With more than one worker the
        replicates run in a process pool and are merged in replicate order,
        so the report does not depend on the worker count.

        Returns:
            ReplicateReport with one record per replicate
        """
        truth = reference_value(cfg)
        report = self._new_report(cfg, truth)
        jobs = [(cfg, r, truth) for r in range(cfg.replicates)]
        workers = min(cfg.workers, cfg.replicates)

        logger.info(
            f"Running {cfg.replicates} replicates of {cfg.estimator.value} on {cfg.model.value} "
            f"({cfg.gamma_or_mode}, N={cfg.n}) with {workers} worker(s)"
        )
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                records: List[ReplicateRecord] = list(executor.map(_run_replicate_job, jobs))
        else:
            records = [_run_replicate_job(job) for job in jobs]

        report.records = records
        logger.info(
            f"Finished {len(records)} replicates ({report.failed} failed); "
            f"mean estimate {report.mean_estimate}"
        )
        return report

    def run_trace(self, cfg: ExperimentConfig) -> ReplicateReport:
        """
        Run the split sampler once and keep its (iteration, level, log Omega) trace.

        Raises:
            ValueError: If the configuration is not a split-sampler run
        """
        if cfg.estimator != EstimatorType.SS:
            raise ValueError("traces are recorded for the split sampler only")
        from .split_sampler import run_split_sampling

        truth = reference_value(cfg)
        report = self._new_report(cfg, truth)
        model = TargetFactory.create_model(cfg.model, cfg.decentered)
        rng = np.random.default_rng(cfg.seed)
        start = time.perf_counter()
        result = run_split_sampling(model, cfg.to_split_config(), rng)
        estimator_result = result.to_estimator_result()
        report.records = [ReplicateRecord(
            replicate=0,
            seed=cfg.seed,
            estimate=estimator_result.estimate,
            log_estimate=estimator_result.log_estimate,
            kernel_applications=estimator_result.kernel_applications,
            wall_clock=time.perf_counter() - start,
            warnings=estimator_result.warnings,
            diagnostics=estimator_result.diagnostics,
        )]
        report.trace = list(result.trace)
        logger.info(f"Recorded {len(report.trace)} trace rows over {result.grid.level_count} levels")
        return report


# Global experiment service instance
experiment_service = ExperimentService()


def run_replicates(cfg: ExperimentConfig) -> ReplicateReport:
    return experiment_service.run_replicates(cfg)
