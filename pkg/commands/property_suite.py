"""property-suite: exact-identity checks and optional sampler checks."""

import argparse
import json
import logging
from pathlib import Path

import pandas as pd

from services.property_suite_service import property_suite_service, summarise
from utils.errors import report_io_error

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("property-suite", help="Run the identity and sampler checks")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sampler-checks", action="store_true",
                        help="Also run the KS and chi-square sampler checks")
    parser.add_argument("--out", help="Write the checks to this file")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    checks = property_suite_service.run(seed=args.seed, sampler_checks=args.sampler_checks)
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.group}/{check.name}: {check.value:.3g} (tolerance {check.tolerance:.3g})")

    if args.out:
        path = Path(args.out)
        rows = [c.model_dump() for c in checks]
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if args.format == "json":
                path.write_text(json.dumps(rows, indent=2), encoding="utf-8")
            else:
                pd.DataFrame(rows).to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            raise report_io_error(f"cannot write {path}: {e}", param="out") from e
        logger.info(f"Wrote {len(rows)} checks to {path}")

    passed, failed = summarise(checks)
    print(f"{passed} passed, {failed} failed")
    return 0 if failed == 0 else 1
