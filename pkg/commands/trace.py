"""trace: one split-sampler run with its (iteration, level, log Omega) trace."""

import argparse
import logging

from models import ExperimentKind, ReportFormat
from services.experiment_service import experiment_service
from services.report_service import report_service
from .common import add_experiment_arguments, load_experiment, output_path, print_summary

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("trace", help="Record the level trace of one split-sampler run")
    add_experiment_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_experiment(args, ExperimentKind.TRACE)
    report = experiment_service.run_trace(cfg)
    if cfg.format == ReportFormat.JSON:
        report_service.emit_report(report, ReportFormat.JSON, output_path(cfg))
    else:
        report_service.emit_trace(report, output_path(cfg))
    print_summary(report)
    return 0
