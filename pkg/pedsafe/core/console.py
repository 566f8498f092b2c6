import logging
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table
from rich.theme import Theme
from rich.traceback import Traceback
from rich.traceback import install as install_rich_traceback

from .reporting import Report, format_number

pedsafe_theme = Theme({
    "info": "cyan",
    "warning": "yellow",
    "error": "bold red",
    "success": "bold green",
    "value": "bold magenta",
})

_MODE_LEVELS = {
    "silent": logging.CRITICAL,
    "standard": logging.INFO,
    "verbose": logging.DEBUG,
}

SUMMARY_ROWS = 10


class ConsoleManager:
    """Process-wide console. Reports go to files, so everything here goes to stderr."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance.initialized = False
        return cls._instance

    def __init__(self):
        if self.initialized:
            return
        self.console = Console(theme=pedsafe_theme, stderr=True)
        self.output_mode = "standard"
        self.initialized = True
        install_rich_traceback(console=self.console, show_locals=False)

    def configure(self, output_mode: str = "standard", debug: bool = False):
        self.output_mode = "verbose" if debug else output_mode.lower()
        logging.getLogger("Pedsafe").setLevel(_MODE_LEVELS.get(self.output_mode, logging.INFO))

    @property
    def quiet(self) -> bool:
        return self.output_mode == "silent"

    def success(self, message: str):
        if not self.quiet:
            self.console.print(f"✅ {message}", style="success")

    def warning(self, message: str):
        if not self.quiet:
            self.console.print(f"⚠️ {message}", style="warning")

    def error_panel(self, message: str, title: str = "Error"):
        if not self.quiet:
            self.console.print(Panel(message, title=title, border_style="red", expand=False))

    def summary_table(self, report: Report, limit: int = SUMMARY_ROWS):
        """Print the leading report rows; the file on disk holds all of them."""
        if self.quiet or not report.rows:
            return
        title = f"{report.tool} {report.version} · {report.command}"
        if report.seed is not None:
            title += f" · seed {report.seed}"
        table = Table(title=title, header_style="info")
        columns = report.columns
        for column in columns:
            table.add_column(column, style="value" if column in ("C", "value", "n_total", "f_C", "psi_hat") else None)
        for row in report.rows[:limit]:
            table.add_row(*(format_number(row.get(c)) for c in columns))
        if len(report.rows) > limit:
            table.caption = f"{len(report.rows) - limit} more rows in the report file"
        self.console.print(table)

    def verbose_error(self, command: str, error: Exception, context: Optional[Dict[str, Any]] = None):
        """Context and traceback for a failed run, verbose mode only."""
        if self.output_mode != "verbose":
            return
        details = Table.grid(padding=(0, 2))
        details.add_row("command", command)
        details.add_row("error", f"{type(error).__name__}: {error}")
        for key, value in (context or {}).items():
            details.add_row(key, str(value))
        parts = [details]
        if error.__traceback__ is not None:
            parts.append(Traceback.from_exception(type(error), error, error.__traceback__, show_locals=False))
        self.console.print(Panel(Group(*parts), title="pedsafe error report", border_style="dim"))

    @contextmanager
    def status(self, message: str) -> Iterator[None]:
        """Spinner in standard mode, start/end log lines in verbose mode, nothing when silent."""
        if self.quiet:
            yield
        elif self.output_mode == "verbose":
            self.console.log(f"Started: {message}")
            try:
                yield
            finally:
                self.console.log(f"Finished: {message}")
        else:
            with self.console.status(f"[info]{message}", spinner="dots"):
                yield


console = ConsoleManager()
