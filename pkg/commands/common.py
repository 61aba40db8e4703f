"""Shared CLI arguments, experiment-file loading and output paths."""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from config import settings
from models import ExperimentConfig, ExperimentKind, ReplicateReport
from utils.errors import config_error

logger = logging.getLogger(__name__)

# CLI destinations that map onto ExperimentConfig fields
_OVERRIDES = (
    "model", "decentered", "estimator", "gamma", "n", "replicates", "seed", "rho", "n_level",
    "nu_init", "boost", "beta", "t_max", "estimation_share", "weight_mode", "adaptation", "kernel_steps",
    "trace_every", "ce_pilot_size", "ce_smoothing", "cpp_stage_size", "n_particles", "mcmc_steps", "epsilon",
    "dns_kappa", "dns_level_interval", "dns_max_levels", "workers", "out", "format",
)


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by the experiment subcommands; unset flags leave the file or default value."""
    parser.add_argument("--config", help="key=value experiment file (see experiments/)")
    parser.add_argument("--model", help="shortest_path | gaussian_mixture | uniform_toy | exponential_toy")
    parser.add_argument("--decentered", action="store_true", default=None,
                        help="Move the mixture spike off the slab center")
    parser.add_argument("--estimator", help="cmc | cpp | ce | ss | ns | dns")
    parser.add_argument("--gamma", type=float, help="Rare-event threshold")
    parser.add_argument("--n", type=int, help="Total budget N per replicate")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--seed", type=int, help="Base seed; replicate r uses seed + r")
    parser.add_argument("--rho", type=float)
    parser.add_argument("--n-level", dest="n_level", type=int)
    parser.add_argument("--nu-init", dest="nu_init", type=float)
    parser.add_argument("--lambda", dest="boost", type=float, help="Level-construction boost")
    parser.add_argument("--beta", type=float, help="Top-level weight factor of the two-level boost")
    parser.add_argument("--t-max", dest="t_max", type=int)
    parser.add_argument("--estimation-share", dest="estimation_share", type=float,
                        help="Share of N held back for the estimation phase")
    parser.add_argument("--weight-mode", dest="weight_mode", help="discrete | piecewise_exponential")
    parser.add_argument("--adaptation", help="self_balancing | rebalance | flat_histogram")
    parser.add_argument("--kernel-steps", dest="kernel_steps", type=int)
    parser.add_argument("--trace-every", dest="trace_every", type=int)
    parser.add_argument("--pilot-size", dest="ce_pilot_size", type=int, help="Cross-entropy N_0")
    parser.add_argument("--smoothing", dest="ce_smoothing", type=float)
    parser.add_argument("--stage-size", dest="cpp_stage_size", type=int, help="Product estimator N_0")
    parser.add_argument("--particles", dest="n_particles", type=int)
    parser.add_argument("--mcmc-steps", dest="mcmc_steps", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--kappa", dest="dns_kappa", type=float)
    parser.add_argument("--level-interval", dest="dns_level_interval", type=int)
    parser.add_argument("--max-levels", dest="dns_max_levels", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="Output file")
    parser.add_argument("--format", help="csv | json")


def read_experiment_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Read a flat key=value file; keys are case-insensitive and may use dashes.

    Raises:
        ConfigError: If the file does not exist
    """
    if not path:
        return {}
    if not Path(path).is_file():
        raise config_error(f"experiment file {path} not found", param="config")
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None or value == "":
            continue
        values[key.strip().lower().replace("-", "_")] = value
    return values


def load_experiment(args: argparse.Namespace, kind: ExperimentKind) -> ExperimentConfig:
    """
    Merge the experiment file with command-line overrides and validate.

    Raises:
        ConfigError: On a missing file or a configuration pydantic rejects
    """
    values = read_experiment_file(getattr(args, "config", None))
    if "lambda" in values:
        values["boost"] = values.pop("lambda")
    for name in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    values["kind"] = kind
    try:
        cfg = ExperimentConfig.model_validate(values)
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors())
        raise config_error(f"invalid experiment configuration: {details}") from e
    logger.debug(f"Experiment configuration: {cfg.model_dump(mode='json')}")
    return cfg


def output_path(cfg: ExperimentConfig, suffix: str = "") -> Path:
    """cfg.out, or a name built from the experiment under settings.output_dir."""
    if cfg.out:
        path = Path(cfg.out)
        return path.with_name(path.stem + suffix + path.suffix) if suffix else path
    name = f"{cfg.kind.value}_{cfg.estimator.value}_{cfg.model.value}_{cfg.gamma_or_mode}_N{cfg.n}{suffix}"
    return Path(settings.output_dir) / f"{name}.{cfg.format.value}"


def print_summary(report: ReplicateReport) -> None:
    parts = [
        f"{report.estimator.value} on {report.model.value} ({report.gamma_or_mode}, N={report.n})",
        f"replicates={len(report.records)}",
        f"failed={report.failed}",
        f"mean={report.mean_estimate}",
    ]
    if report.truth:
        parts.append(f"truth={report.truth:g}")
        if report.kind == ExperimentKind.EVIDENCE:
            parts.append(f"rms_log_error={report.rms_log_error}")
        else:
            parts.append(f"relative_rmse={report.relative_rmse}")
    print(" ".join(parts))
