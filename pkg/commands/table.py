"""table: summary tables from a directory of JSON replicate reports."""

import argparse
import logging

from services.report_service import report_service
from utils.errors import config_error

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("table", help="Build a summary table from JSON reports")
    parser.add_argument("directory", help="Directory holding JSON replicate reports")
    parser.add_argument("--layout", choices=["summary", "rare-event", "evidence"], default="summary")
    parser.add_argument("--out", required=True, help="Output CSV file")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    reports = report_service.load_reports(args.directory)
    if not reports:
        raise config_error(f"no replicate reports in {args.directory}", param="directory")
    if args.layout == "rare-event":
        table = report_service.rare_event_table(reports)
    elif args.layout == "evidence":
        table = report_service.evidence_table(reports)
    else:
        table = report_service.summary_frame(reports)
    report_service.emit_table(table, args.out)
    print(table.to_string(index=False))
    return 0
