import csv
import io

from ..core.reporting import Report, format_number
from .base import BasePlugin

PROVENANCE_COLUMNS = ("tool", "version", "command", "seed")


class CsvPlugin(BasePlugin):
    name = "csv"
    extension = "csv"
    description = "Comma-separated report, one row per result, provenance on every row."

    def render(self, report: Report) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        columns = report.columns
        writer.writerow([*PROVENANCE_COLUMNS, *columns, "config"])
        provenance = [report.tool, report.version, report.command, format_number(report.seed)]
        config = report.config_json()
        for row in report.rows:
            writer.writerow([*provenance, *(format_number(row.get(c)) for c in columns), config])
        return buffer.getvalue()
