"""rare-event: replicated estimates of Z(gamma) = P(L > gamma)."""

import argparse
import logging

from models import ExperimentKind
from services.experiment_service import experiment_service
from services.report_service import report_service
from .common import add_experiment_arguments, load_experiment, output_path, print_summary

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("rare-event", help="Estimate a rare-event probability over replicates")
    add_experiment_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_experiment(args, ExperimentKind.RARE_EVENT)
    report = experiment_service.run_replicates(cfg)
    report_service.emit_report(report, cfg.format, output_path(cfg))
    print_summary(report)
    return 0
