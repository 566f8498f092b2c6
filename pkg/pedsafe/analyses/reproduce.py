import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import field_validator

from ..core.config import load_yaml
from ..core.errors import UnsatisfiableError
from ..core.models import Command
from ..core.reporting import Report
from ..posteriors import UNIFORM_PRIOR, ArmCounts, EvalMethod, Method
from ..precision import (
    ContourQuantity,
    DesignScenario,
    confidence_curve,
    contour_grid,
    min_fold,
    scenario_confidence,
    solve_sample_size,
)
from ..tables import write_grid, write_rows
from .base import AnalysisParams, BaseAnalysis
from .confidence import build_reference
from .params import parse_range
from .solve_n import SolveNParams, build_scenario

logger = logging.getLogger("Pedsafe.Analysis.Reproduce")

FIGURES_PATH = Path(__file__).parent.parent / "figures.yaml"

BUNDLED_FIGURES = (2, 3, 4, 5)

CURVE_COLUMNS = ("n_total", "n_treat", "n_control", "r_treat", "r_control", "C")

Row = Dict[str, Any]


class ReproduceParams(AnalysisParams):
    figure: int
    output_dir: Optional[str] = None

    @field_validator("figure")
    @classmethod
    def _bundled(cls, v: int) -> int:
        if v not in BUNDLED_FIGURES:
            raise ValueError(f"figure must be one of {', '.join(map(str, BUNDLED_FIGURES))}")
        return v


class ReproduceAnalysis(BaseAnalysis):
    """
    Runs a bundled figure scenario grid and writes one plot-ready file per panel.

    Curve panels with a published sample-size window are checked against it.
    A miss is re-solved under each near-zero prior of the figure's grid; when
    every rerun misses as well, the confidence at the window centre is
    recomputed by Monte Carlo and reported next to the quadrature value.
    """
    command = Command.REPRODUCE
    params_model = ReproduceParams

    def execute(self, report: Report) -> None:
        figure = load_yaml(FIGURES_PATH)[str(self.params.figure)]
        out_dir = Path(self.params.output_dir) if self.params.output_dir else self.output_dir()
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {
            "curve": self._curve_panel,
            "min_fold": self._min_fold_panel,
            "contour": self._contour_panel,
        }[figure["kind"]]

        for panel in figure["panels"]:
            path = out_dir / f"figure{self.params.figure}_{panel['name']}.csv"
            logger.info(f"Figure {self.params.figure}, panel {panel['name']}")
            rows = handler(figure, panel, path)
            report.artifacts.append(path.name)
            for row in rows:
                report.add_row(figure=self.params.figure, panel=panel["name"], file=path.name, **row)

    def _solve(self, scenario: DesignScenario, label: str) -> Row:
        design = self.settings.design
        try:
            solution = solve_sample_size(scenario, n_cap=design.n_cap, workers=design.workers)
            return {"prior": label, "target": scenario.target_C, "n_total": solution.n_total,
                    "achieved_C": solution.achieved_C}
        except UnsatisfiableError as e:
            logger.warning(f"{label}: {e}")
            return {"prior": label, "target": scenario.target_C, "n_total": None, "achieved_C": None}

    def _curve_panel(self, figure: Dict[str, Any], panel: Dict[str, Any], path: Path) -> List[Row]:
        fields = {k: v for k, v in panel.items() if k != "name"}
        params = SolveNParams(target=figure["target"], **fields)
        scenario = build_scenario(params, self.eval_method(), "plug_in", self.settings.design.min_events)
        points = confidence_curve(
            scenario, parse_range(figure["n_total"], "n_total"), workers=self.settings.design.workers
        )
        write_rows(path, CURVE_COLUMNS, [pt.model_dump() for pt in points])

        row = self._solve(scenario, "uniform")
        window = figure.get("windows", {}).get(panel["name"])
        if window is None:
            return [row]

        lo, hi = window
        rows = [dict(row, window=f"{lo}-{hi}", window_met=_in_window(row["n_total"], lo, hi))]
        if rows[0]["window_met"]:
            return rows

        logger.warning(f"Panel {panel['name']}: n_total={row['n_total']} outside [{lo}, {hi}]; "
                       f"rerunning under near-zero priors")
        for p_a_sq in figure["near_zero_grid"]:
            rerun = build_scenario(
                SolveNParams(target=figure["target"], near_zero=p_a_sq, **fields),
                self.eval_method(),
                "plug_in",
                max(self.settings.design.min_events, figure["rerun_min_events"]),
            )
            solved = self._solve(rerun, f"near_zero({p_a_sq})")
            rows.append(dict(solved, window=f"{lo}-{hi}", window_met=_in_window(solved["n_total"], lo, hi)))

        if not any(r["window_met"] for r in rows):
            rows.append(self._cross_check(scenario, (lo + hi) // 2, figure["cross_check_seed"], f"{lo}-{hi}"))
        return rows

    def _cross_check(self, scenario: DesignScenario, n_total: int, default_seed: int, window: str) -> Row:
        """Quadrature and Monte-Carlo confidence of the uniform-prior scenario at one n."""
        seed = self.settings.seed if self.settings.seed is not None else default_seed
        mc_method = EvalMethod(kind=Method.MONTE_CARLO, seed=seed, mc_samples=self.settings.evaluation.mc_samples)
        mc_query = scenario.query.model_copy(update={"method": mc_method})
        quadrature = scenario_confidence(scenario, n_total)
        mc = scenario_confidence(scenario.model_copy(update={"query": mc_query}), n_total)
        logger.warning(
            f"Window {window} not reproduced; at n_total={n_total} C={quadrature.C:.4f} "
            f"(Monte Carlo {mc.C:.4f} ± {mc.diagnostics['mc_se']:.4f})"
        )
        return {
            "prior": "uniform",
            "target": scenario.target_C,
            "n_total": n_total,
            "achieved_C": quadrature.C,
            "window": window,
            "window_met": False,
            "mc_C": mc.C,
            "mc_se": mc.diagnostics["mc_se"],
        }

    def _min_fold_panel(self, figure: Dict[str, Any], panel: Dict[str, Any], path: Path) -> List[Row]:
        reference = build_reference(None, figure["ref_rate"], "")
        rows = []
        for n in parse_range(figure["n"], "n"):
            for r in parse_range(figure["r"], "r"):
                if r <= n:
                    f_c = min_fold(ArmCounts(events=r, n=n), UNIFORM_PRIOR, reference, panel["target"])
                    rows.append({"n": n, "r": r, "f_C": f_c})
        write_rows(path, ("n", "r", "f_C"), rows)
        return [{"target": panel["target"], "cells": len(rows)}]

    def _contour_panel(self, figure: Dict[str, Any], panel: Dict[str, Any], path: Path) -> List[Row]:
        grid = contour_grid(
            parse_range(figure["n"], "n"),
            parse_range(figure["r"], "r"),
            quantity=ContourQuantity.AT_LEAST_R,
            rate=panel["rate"],
            workers=self.settings.design.workers,
        )
        write_grid(grid, path)
        return [{"rate": panel["rate"], "cells": int(grid.values.size)}]


def _in_window(n_total: Optional[int], lo: int, hi: int) -> bool:
    return n_total is not None and lo <= n_total <= hi
