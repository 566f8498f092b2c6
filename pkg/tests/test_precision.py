import math
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from pedsafe.core.errors import DomainError, NonConvergenceError, UnsatisfiableError
from pedsafe.montecarlo import RngStream
from pedsafe.posteriors import UNIFORM_PRIOR, ArmCounts, EvalMethod, Evaluation, Method
from pedsafe.precision import (
    ConsistencyQuery,
    ContourQuantity,
    DesignScenario,
    Hypothesis,
    ReferenceEstimate,
    ReferenceKind,
    allocation_units,
    at_least_r,
    confidence,
    confidence_curve,
    confidence_fold_single_arm,
    confidence_fold_two_arm,
    confidence_margin,
    contour_grid,
    exactly_r,
    min_fold,
    plug_in_count,
    scenario_arm_sizes,
    scenario_confidence,
    solve_sample_size,
)

BACKGROUND = ReferenceEstimate(value=0.01, kind=ReferenceKind.PROPORTION)
ADULT_DIFF = ReferenceEstimate(value=0.01)
PRIORS = (UNIFORM_PRIOR, UNIFORM_PRIOR)


def single_arm_design(**overrides) -> DesignScenario:
    query = ConsistencyQuery(hypothesis=Hypothesis.FOLD, reference=BACKGROUND, fold=2.0)
    fields = dict(treat_rate=0.0, target_C=0.8, query=query)
    fields.update(overrides)
    return DesignScenario(**fields)


def two_arm_design(**overrides) -> DesignScenario:
    query = ConsistencyQuery(hypothesis=Hypothesis.MARGIN, reference=ADULT_DIFF, margin=0.02)
    fields = dict(treat_rate=0.02, control_rate=0.01, target_C=0.8, query=query)
    fields.update(overrides)
    return DesignScenario(**fields)


def doubling_design() -> DesignScenario:
    query = ConsistencyQuery(hypothesis=Hypothesis.FOLD, reference=ADULT_DIFF, fold=2.0)
    return DesignScenario(treat_rate=0.02, control_rate=0.01, target_C=0.8, query=query)


class TestSingleArm(unittest.TestCase):
    def test_zero_events_closed_expression(self):
        result = confidence_fold_single_arm(ArmCounts(events=0, n=150), UNIFORM_PRIOR, BACKGROUND, 2.0)
        self.assertAlmostEqual(result.C, 1.0 - 0.98 ** 151, delta=1e-12)
        self.assertAlmostEqual(result.threshold_used, 0.02, places=15)
        self.assertEqual(result.method, "incomplete_beta")

    def test_threshold_above_one(self):
        with self.assertRaises(DomainError):
            confidence_fold_single_arm(ArmCounts(events=0, n=10), UNIFORM_PRIOR, BACKGROUND, 150.0)

    def test_reference_kind_mismatch(self):
        with self.assertRaises(DomainError):
            confidence_fold_single_arm(ArmCounts(events=0, n=10), UNIFORM_PRIOR, ADULT_DIFF, 2.0)

    def test_min_fold(self):
        counts = ArmCounts(events=0, n=150)
        f_80 = min_fold(counts, UNIFORM_PRIOR, BACKGROUND, 0.8)
        f_95 = min_fold(counts, UNIFORM_PRIOR, BACKGROUND, 0.95)
        self.assertAlmostEqual(f_80, 100.0 * (1.0 - 0.2 ** (1 / 151)), delta=1e-6)
        self.assertAlmostEqual(f_80, 1.0602, delta=1e-4)
        self.assertAlmostEqual(f_95, 1.964, delta=1e-3)
        self.assertGreaterEqual(confidence_fold_single_arm(counts, UNIFORM_PRIOR, BACKGROUND, f_80).C, 0.8)

    def test_min_fold_floor_is_one(self):
        self.assertEqual(min_fold(ArmCounts(events=0, n=1000), UNIFORM_PRIOR, BACKGROUND, 0.8), 1.0)

    def test_min_fold_increases_with_events(self):
        folds = [min_fold(ArmCounts(events=r, n=200), UNIFORM_PRIOR, BACKGROUND, 0.8) for r in range(4)]
        self.assertEqual(folds, sorted(folds))


class TestTwoArm(unittest.TestCase):
    def test_margin_monotone(self):
        treat, control = ArmCounts(events=3, n=120), ArmCounts(events=1, n=120)
        values = [confidence_margin(treat, control, PRIORS, ADULT_DIFF, eps).C for eps in (0.0, 0.01, 0.03)]
        self.assertEqual(values, sorted(values))
        self.assertLess(values[0], values[-1])

    def test_negative_margin(self):
        with self.assertRaises(DomainError):
            confidence_margin(ArmCounts(events=1, n=10), ArmCounts(events=1, n=10), PRIORS, ADULT_DIFF, -0.1)

    def test_fold_branch_diagnostics(self):
        treat, control = ArmCounts(events=3, n=120), ArmCounts(events=1, n=120)
        positive = confidence_fold_two_arm(treat, control, PRIORS, ADULT_DIFF, 2.0)
        negative = confidence_fold_two_arm(treat, control, PRIORS, ReferenceEstimate(value=-0.01), 2.0)
        self.assertEqual(positive.diagnostics["branch"], "nonnegative")
        self.assertEqual(negative.diagnostics["branch"], "negative")
        self.assertAlmostEqual(positive.threshold_used, 0.02, places=15)
        self.assertLess(negative.C, positive.C)
        with self.assertRaises(DomainError):
            confidence_fold_two_arm(treat, control, PRIORS, ADULT_DIFF, 1.0)

    def test_dispatch_needs_control(self):
        query = ConsistencyQuery(hypothesis=Hypothesis.MARGIN, reference=ADULT_DIFF, margin=0.01)
        with self.assertRaises(DomainError):
            confidence(query, ArmCounts(events=1, n=10))

    def test_query_requires_parameter(self):
        with self.assertRaises(ValueError):
            ConsistencyQuery(hypothesis=Hypothesis.FOLD, reference=ADULT_DIFF)

    @patch("pedsafe.precision.diff_cdf_detailed")
    def test_closed_form_falls_back_to_convolution(self, mock_cdf):
        mock_cdf.side_effect = [NonConvergenceError("boundary"), Evaluation(0.7, 1e-9)]
        result = confidence_margin(
            ArmCounts(events=1, n=10), ArmCounts(events=0, n=10), PRIORS, ADULT_DIFF, 0.0,
            EvalMethod(kind=Method.CLOSED_FORM),
        )
        self.assertEqual(result.C, 0.7)
        self.assertEqual(result.method, Method.CONVOLUTION.value)
        self.assertEqual(result.diagnostics["fallback"], Method.CONVOLUTION.value)
        self.assertEqual(mock_cdf.call_args[0][2].kind, Method.CONVOLUTION)


class TestDesign(unittest.TestCase):
    def test_plug_in_rounds_half_up(self):
        self.assertEqual(plug_in_count(0.005, 100), 1)
        self.assertEqual(plug_in_count(0.01, 150), 2)
        self.assertEqual(plug_in_count(0.003, 500), 2)
        self.assertEqual(plug_in_count(0.01, 149), 1)

    def test_allocation(self):
        self.assertEqual(allocation_units(1.0), (1, 1))
        self.assertEqual(allocation_units(2.0), (2, 1))
        self.assertEqual(allocation_units(1.5), (3, 2))
        design = two_arm_design(allocation_ratio=2.0)
        self.assertEqual(scenario_arm_sizes(design, 99), (66, 33))
        self.assertEqual(scenario_arm_sizes(two_arm_design(), 100), (50, 50))

    def test_single_arm_solution_is_exact(self):
        # C(n) = 1 - 0.98^(n + 1) first reaches 0.8 at n = 79
        solution = solve_sample_size(single_arm_design())
        self.assertEqual(solution.n_total, 79)
        self.assertEqual(solution.n_control, 0)
        self.assertGreaterEqual(solution.achieved_C, 0.8)
        self.assertLess(scenario_confidence(single_arm_design(), 78).C, 0.8)

    def test_two_arm_solution(self):
        design = two_arm_design()
        solution = solve_sample_size(design)
        self.assertGreaterEqual(solution.achieved_C, design.target_C)
        self.assertEqual(solution.achieved_C, scenario_confidence(design, solution.n_total).C)
        self.assertEqual(solution.n_total % 2, 0)
        self.assertEqual(solution.n_treat + solution.n_control, solution.n_total)
        brute = next(
            n for n in range(2, solution.n_total + 1, 2)
            if scenario_confidence(design, n).C >= design.target_C
        )
        self.assertEqual(solution.n_total, brute)

    def test_first_feasible_n_under_non_monotone_confidence(self):
        # Figure 3 doubling scenario: rounding makes C rise and fall with n.
        design = doubling_design()
        solution = solve_sample_size(design)
        brute = next(
            n for n in range(2, 2000, 2)
            if scenario_confidence(design, n).C >= design.target_C
        )
        self.assertEqual(solution.n_total, brute)
        self.assertEqual(solution.evaluations, brute // 2)
        later = [scenario_confidence(design, n).C for n in range(brute + 2, 400, 2)]
        self.assertTrue(any(C < design.target_C for C in later))

    def test_workers_do_not_change_the_solution(self):
        design = two_arm_design()
        self.assertEqual(
            solve_sample_size(design, workers=2).n_total,
            solve_sample_size(design, workers=1).n_total,
        )

    def test_min_events_floor(self):
        design = single_arm_design(treat_rate=0.01, min_events=1)
        self.assertEqual(plug_in_count(0.01, 49), 0)
        solution = solve_sample_size(design)
        self.assertGreaterEqual(solution.n_total, 50)
        self.assertGreaterEqual(solution.r_treat, 1)
        with self.assertRaises(UnsatisfiableError):
            solve_sample_size(design, n_cap=49)

    def test_unreachable_target(self):
        with self.assertRaises(UnsatisfiableError):
            solve_sample_size(single_arm_design(), n_cap=10)

    def test_predictive_mode_is_not_solved(self):
        with self.assertRaises(DomainError):
            solve_sample_size(single_arm_design(count_mode="predictive"))

    def test_curve_matches_pointwise_confidence(self):
        design = single_arm_design()
        points = confidence_curve(design, [20, 40, 60])
        self.assertEqual([p.n_total for p in points], [20, 40, 60])
        for point in points:
            self.assertEqual(point.C, scenario_confidence(design, point.n_total).C)
        self.assertEqual([p.C for p in points], sorted(p.C for p in points))

    def test_predictive_curve_uses_one_stream_per_point(self):
        design = single_arm_design(treat_rate=0.01, count_mode="predictive")
        n_values = [50, 150, 300]
        serial = confidence_curve(design, n_values, rng=RngStream(seed=4), trials=1000)
        pooled = confidence_curve(design, n_values, rng=RngStream(seed=4), trials=1000, workers=2)
        self.assertEqual(serial, pooled)
        self.assertIsNone(serial[0].r_treat)
        streams = RngStream(seed=4).spawn(len(n_values))
        self.assertEqual(serial[1].C, scenario_confidence(design, 150, rng=streams[1], trials=1000).C)
        with self.assertRaises(DomainError):
            confidence_curve(design, n_values)

    def test_target_must_be_below_one(self):
        with self.assertRaises(ValueError):
            single_arm_design(target_C=1.0)


class TestPublishedWindows(unittest.TestCase):
    """Uniform-prior plug-in designs read against the Figure 2 and 3 sample-size windows."""

    def margin_design(self) -> DesignScenario:
        # Figure 2: background 0.01, difference 0.03, margin 0.005.
        query = ConsistencyQuery(hypothesis=Hypothesis.MARGIN, reference=ReferenceEstimate(value=0.03), margin=0.005)
        return DesignScenario(treat_rate=0.04, control_rate=0.01, target_C=0.8, query=query)

    def test_figure_2_window_is_below_the_target(self):
        design = self.margin_design()
        self.assertLess(scenario_confidence(design, 180).C, design.target_C)
        self.assertTrue(all(scenario_confidence(design, n).C < design.target_C for n in range(140, 222, 2)))

    def test_quadrature_agrees_with_monte_carlo(self):
        mc_method = EvalMethod(kind=Method.MONTE_CARLO, seed=180, mc_samples=400_000)
        for design, n in ((self.margin_design(), 180), (doubling_design(), 230)):
            mc_query = design.query.model_copy(update={"method": mc_method})
            quadrature = scenario_confidence(design, n)
            mc = scenario_confidence(design.model_copy(update={"query": mc_query}), n)
            self.assertEqual(mc.method, Method.MONTE_CARLO.value)
            self.assertLessEqual(abs(quadrature.C - mc.C), max(0.005, 4 * mc.diagnostics["mc_se"]))


class TestContours(unittest.TestCase):
    def test_workers_give_the_same_grid(self):
        args = (list(range(10, 110, 10)), [0, 1, 2, 3])
        serial = contour_grid(*args, ContourQuantity.CONFIDENCE, reference=BACKGROUND, fold=2.0)
        pooled = contour_grid(*args, ContourQuantity.CONFIDENCE, reference=BACKGROUND, fold=2.0, workers=3)
        np.testing.assert_array_equal(serial.values, pooled.values)

    def test_at_least_one_event(self):
        self.assertAlmostEqual(at_least_r(0.01, 300, 1), 1.0 - 0.99 ** 300, delta=1e-12)
        self.assertEqual(at_least_r(0.01, 300, 0), 1.0)
        self.assertEqual(at_least_r(0.01, 3, 4), 0.0)

    def test_exactly_r_is_a_distribution(self):
        self.assertAlmostEqual(sum(exactly_r(0.03, 40, r) for r in range(41)), 1.0, places=12)
        self.assertAlmostEqual(exactly_r(0.01, 300, 0), 0.99 ** 300, delta=1e-14)

    def test_confidence_grid(self):
        grid = contour_grid([10, 300], [0, 1, 20], ContourQuantity.CONFIDENCE, reference=BACKGROUND)
        self.assertEqual(grid.values.shape, (2, 3))
        self.assertAlmostEqual(grid.value_at(300, 0), 1.0 - 0.99 ** 301, delta=1e-12)
        self.assertTrue(math.isnan(grid.value_at(10, 20)))
        self.assertGreater(grid.value_at(300, 0), grid.value_at(300, 1))

    def test_binomial_grid_monotone(self):
        grid = contour_grid(list(range(10, 310, 10)), list(range(0, 6)), ContourQuantity.AT_LEAST_R, rate=0.005)
        self.assertTrue(np.all(np.diff(grid.values, axis=0) >= 0.0))
        self.assertTrue(np.all(np.diff(grid.values, axis=1) <= 0.0))
        self.assertEqual(len(grid.cells()), 30 * 6)

    def test_binomial_grid_needs_rate(self):
        with self.assertRaises(DomainError):
            contour_grid([10], [0], ContourQuantity.EXACTLY_R)


if __name__ == "__main__":
    unittest.main()
