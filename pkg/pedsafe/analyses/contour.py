from pathlib import Path
from typing import Literal, Optional

from pydantic import model_validator

from ..core.errors import UsageError
from ..core.models import Command
from ..core.reporting import Report
from ..precision import ContourQuantity, contour_grid
from ..tables import write_grid
from .base import AnalysisParams, BaseAnalysis
from .confidence import build_reference
from .params import parse_range, resolve_prior


class ContourParams(AnalysisParams):
    n: str
    r: str
    quantity: Literal["confidence", "at-least-r", "exactly-r"] = "confidence"
    rate: Optional[float] = None
    ref_rate: Optional[float] = None
    fold: float = 1.0
    prior: Optional[str] = None
    near_zero: Optional[float] = None
    grid_output: Optional[str] = None

    @model_validator(mode="after")
    def _inputs_for_quantity(self) -> "ContourParams":
        if self.quantity == "confidence" and self.ref_rate is None:
            raise UsageError("required for confidence contours", key="ref_rate")
        if self.quantity != "confidence" and self.rate is None:
            raise UsageError(f"required for {self.quantity} contours", key="rate")
        return self


class ContourAnalysis(BaseAnalysis):
    """Dense (n, r) grid of confidence or binomial probabilities, written for external plotting."""
    command = Command.CONTOUR
    params_model = ContourParams

    def execute(self, report: Report) -> None:
        p = self.params
        n_values = parse_range(p.n, "n")
        r_values = parse_range(p.r, "r")
        reference = build_reference(None, p.ref_rate, "") if p.ref_rate is not None else None
        grid = contour_grid(
            n_values,
            r_values,
            quantity=ContourQuantity(p.quantity),
            prior=resolve_prior(p.prior, p.near_zero, "prior"),
            rate=p.rate,
            reference=reference,
            fold=p.fold,
            workers=self.settings.design.workers,
        )
        path = Path(p.grid_output) if p.grid_output else self.output_dir() / f"contour_{p.quantity}.csv"
        write_grid(grid, path)
        report.artifacts.append(path.name)

        for n, r, value in grid.cells():
            report.add_row(n=n, r=r, quantity=p.quantity, value=value)
