from typing import Optional

from pydantic import Field

from ..core.models import Command
from ..core.reporting import Report
from ..precision import win_odds
from ..tables import TableSchema, load_table, win_odds_table
from .base import AnalysisParams, BaseAnalysis
from .params import parse_directions


class WinOddsParams(AnalysisParams):
    input: str
    margin: float = Field(default=1.0, gt=0, le=1)
    directions: Optional[str] = None


class WinOddsAnalysis(BaseAnalysis):
    """Prioritized pairwise comparison of a test arm (A) against control (B)."""
    command = Command.WIN_ODDS
    params_model = WinOddsParams

    def execute(self, report: Report) -> None:
        p = self.params
        records = load_table(p.input, TableSchema.WIN_ODDS)
        table = win_odds_table(records, parse_directions(p.directions))
        result = win_odds(table, p.margin, self.rng(), self.settings.bootstrap.replicates)
        values = result.model_dump()
        # Float for tables and plots; the exact ratio rides along as "num/den".
        values["psi_hat"] = float(result.psi_hat)
        report.add_row(
            n_a=int(table.arm_a.shape[0]),
            n_b=int(table.arm_b.shape[0]),
            components=int(table.arm_a.shape[1]),
            **values,
            psi_exact=result.psi_hat,
        )
