"""
Result reporters for experiment output

- CSV: the machine-readable contract, one file per experiment
- Console: one-line summary plus a short table
"""

import csv
import logging
from pathlib import Path
from typing import Any, Iterable

from .runner import ExperimentResult

logger = logging.getLogger(__name__)


def format_cell(value: Any) -> str:
    """Shortest round-trip text for floats, plain text otherwise"""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item"):  # numpy scalars
        return format_cell(value.item())
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


class CSVReporter:
    """Fixed-header CSV files named <experiment>.csv"""

    @staticmethod
    def render(result: ExperimentResult) -> Iterable[list]:
        yield list(result.header)
        for row in result.rows:
            if len(row) != len(result.header):
                raise ValueError(
                    f"{result.experiment.value}: row has {len(row)} cells, header has {len(result.header)}"
                )
            yield [format_cell(v) for v in row]

    @staticmethod
    def report(result: ExperimentResult, output_dir: Path) -> Path:
        """Write the CSV file and return its path"""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / f"{result.experiment.value}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerows(CSVReporter.render(result))
        logger.info("wrote %d rows to %s", len(result.rows), path)
        return path


class ConsoleReporter:
    """Human-readable console output"""

    @staticmethod
    def summary_line(result: ExperimentResult) -> str:
        if result.passed is None:
            status = "n/a"
        else:
            status = "PASS" if result.passed else "FAIL"
        band = ""
        if result.band is not None:
            band = f" band=[{result.band[0]:g}, {result.band[1]:g}]"
        return (
            f"{result.experiment.value}: {result.metric_name}={result.metric:.6g}"
            f"{band} {status} ({result.elapsed:.1f}s)"
        )

    @staticmethod
    def report(result: ExperimentResult, csv_path: Path | None = None, max_rows: int = 12):
        """Print the summary and the first rows of the table"""
        print(ConsoleReporter.summary_line(result))
        for note in result.notes:
            print(f"  note: {note}")

        if result.rows:
            print("  " + "  ".join(f"{h:>14}" for h in result.header))
            for row in result.rows[:max_rows]:
                cells = [f"{v:>14.6g}" if isinstance(v, float) else f"{format_cell(v):>14}" for v in row]
                print("  " + "  ".join(cells))
            if len(result.rows) > max_rows:
                print(f"  ... {len(result.rows) - max_rows} more rows")
        if csv_path is not None:
            print(f"  csv: {csv_path}")
