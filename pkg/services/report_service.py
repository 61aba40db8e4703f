"""Report, trace and summary-table output."""

import logging
from pathlib import Path
from typing import Iterable, List, Union

import pandas as pd
from pydantic import ValidationError

from config import settings
from models import EstimatorType, ReplicateReport, ReportFormat
from utils.errors import report_io_error

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["estimator", "model", "gamma_or_mode", "N", "replicate", "estimate", "truth", "rel_error"]
TRACE_COLUMNS = ["iteration", "level", "log_omega"]
SUMMARY_COLUMNS = [
    "kind", "estimator", "variant", "model", "gamma_or_mode", "N", "replicates", "failed",
    "mean_estimate", "truth", "relative_rmse", "rms_log_error",
]

PathLike = Union[str, Path]


def _variant(report: ReplicateReport) -> str:
    """Distinguishes runs of one estimator with different settings, e.g. nested-sampling particle counts."""
    cfg = report.config
    if report.estimator == EstimatorType.NS:
        return f"{cfg.get('n_particles')} particles, {cfg.get('mcmc_steps')} steps"
    return ""


class ReportService:
    """Service writing replicate reports as CSV or JSON and building summary tables."""

    def replicate_frame(self, report: ReplicateReport) -> pd.DataFrame:
        """One row per replicate; failed replicates keep an empty estimate."""
        rows = []
        for record in report.records:
            rel_error = None
            if record.estimate is not None and report.truth:
                rel_error = record.estimate / report.truth - 1.0
            rows.append({
                "estimator": report.estimator.value,
                "model": report.model.value,
                "gamma_or_mode": report.gamma_or_mode,
                "N": report.n,
                "replicate": record.replicate,
                "estimate": record.estimate,
                "truth": report.truth,
                "rel_error": rel_error,
            })
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def to_json(self, report: ReplicateReport) -> str:
        exclude = None if settings.include_timing else {"records": {"__all__": {"wall_clock"}}}
        return report.model_dump_json(indent=2, exclude=exclude)

    def _write_text(self, text: str, path: Path) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise report_io_error(f"cannot write {path}: {e}", param="out") from e

    def emit_report(self, report: ReplicateReport, fmt: ReportFormat, path: PathLike) -> Path:
        """
        Write a report.

        Args:
            report: Completed replicate report
            fmt: csv (one row per replicate) or json (the full structure)
            path: Output file

        Raises:
            ReportIOError: If the path cannot be written
        """
        path = Path(path)
        if fmt == ReportFormat.JSON:
            text = self.to_json(report)
        else:
            text = self.replicate_frame(report).to_csv(index=False, lineterminator="\n")
        self._write_text(text, path)
        logger.info(f"Wrote {len(report.records)} replicate rows to {path}")
        return path

    def emit_trace(self, report: ReplicateReport, path: PathLike) -> Path:
        """Write the (iteration, level, log_omega) trace as CSV."""
        path = Path(path)
        frame = pd.DataFrame([row.model_dump() for row in report.trace], columns=TRACE_COLUMNS)
        self._write_text(frame.to_csv(index=False, lineterminator="\n"), path)
        logger.info(f"Wrote {len(report.trace)} trace rows to {path}")
        return path

    def load_report(self, path: PathLike) -> ReplicateReport:
        """
        Read a JSON report back.

        Raises:
            ReportIOError: If the file cannot be read
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise report_io_error(f"cannot read {path}: {e}", param="path") from e
        return ReplicateReport.model_validate_json(text)

    def load_reports(self, directory: PathLike) -> List[ReplicateReport]:
        """Every JSON report in a directory, in file-name order."""
        directory = Path(directory)
        if not directory.is_dir():
            raise report_io_error(f"{directory} is not a directory", param="path")
        reports = []
        for path in sorted(directory.glob("*.json")):
            try:
                reports.append(self.load_report(path))
            except ValidationError:
                logger.warning(f"Skipping {path}: not a replicate report")
        return reports

    def summary_frame(self, reports: Iterable[ReplicateReport]) -> pd.DataFrame:
        """One row per report with the recomputed summary statistics."""
        rows = [{
            "kind": r.kind.value,
            "estimator": r.estimator.value,
            "variant": _variant(r),
            "model": r.model.value,
            "gamma_or_mode": r.gamma_or_mode,
            "N": r.n,
            "replicates": len(r.records),
            "failed": r.failed,
            "mean_estimate": r.mean_estimate,
            "truth": r.truth,
            "relative_rmse": r.relative_rmse,
            "rms_log_error": r.rms_log_error,
        } for r in reports]
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def rare_event_table(self, reports: Iterable[ReplicateReport]) -> pd.DataFrame:
        """Relative RMSE with one row per (gamma, estimator) and one column per budget N."""
        summary = self.summary_frame(reports)
        summary = summary[summary["kind"] == "rare_event"]
        table = summary.pivot_table(index=["gamma_or_mode", "estimator"], columns="N",
                                    values="relative_rmse", aggfunc="first", dropna=False)
        table.columns = [f"N={int(n)}" for n in table.columns]
        return table.reset_index()

    def evidence_table(self, reports: Iterable[ReplicateReport]) -> pd.DataFrame:
        """RMS of log Z_hat - log Z with one row per estimator and one column per mixture mode."""
        summary = self.summary_frame(reports)
        summary = summary[summary["kind"] == "evidence"]
        table = summary.pivot_table(index=["estimator", "variant"], columns="gamma_or_mode",
                                    values="rms_log_error", aggfunc="first")
        table.columns = [str(c) for c in table.columns]
        return table.reset_index()

    def emit_table(self, table: pd.DataFrame, path: PathLike) -> Path:
        path = Path(path)
        self._write_text(table.to_csv(index=False, lineterminator="\n"), path)
        logger.info(f"Wrote {len(table)} table rows to {path}")
        return path


# Global report service instance
report_service = ReportService()


def emit_report(report: ReplicateReport, fmt: ReportFormat, path: PathLike) -> Path:
    return report_service.emit_report(report, fmt, path)
