import math
import sys
import unittest
from pathlib import Path

from scipy import stats

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from pedsafe.core.errors import DomainError
from pedsafe.development import (
    DEFAULT_SCHEME,
    MaxChangeModel,
    SdsRecord,
    SdsSample,
    bin_baseline,
    bin_change,
    bin_label,
    max_change_cdf,
    max_change_confidence,
    max_change_pdf,
    samples_by_time,
    sds_changes,
    sds_mean_for_confidence,
    sds_threshold_confidence,
    shift_table,
)


def records(rows):
    return [SdsRecord(subject_id=s, time_label=t, sds_value=v) for s, t, v in rows]


class TestMeanChange(unittest.TestCase):
    def test_mean_at_threshold_gives_one_half(self):
        sample = SdsSample.from_values([-0.6, -0.4])
        self.assertAlmostEqual(sds_threshold_confidence(sample, 0.5).C, 0.5, places=14)

    def test_student_t_posterior(self):
        sample = SdsSample(n=50, mean=-0.2, s_sq=1.0)
        result = sds_threshold_confidence(sample, 0.5)
        t = 0.3 / math.sqrt(1.0 / 50)
        self.assertAlmostEqual(result.C, float(stats.t.cdf(t, 49)), delta=1e-10)
        self.assertEqual(result.diagnostics["df"], 49)
        self.assertEqual(result.threshold_used, -0.5)

    def test_small_negative_mean(self):
        sample = SdsSample(n=50, mean=-0.04, s_sq=1.0)
        result = sds_threshold_confidence(sample, 0.5)
        self.assertAlmostEqual(result.diagnostics["t"], 0.46 * math.sqrt(50), places=12)
        self.assertAlmostEqual(result.C, float(stats.t.cdf(0.46 * math.sqrt(50), 49)), delta=1e-8)

    def test_mean_needed_for_target(self):
        mean = sds_mean_for_confidence(50, 1.0, 0.5, 0.8)
        self.assertTrue(-0.39 <= mean <= -0.37)
        sample = SdsSample(n=50, mean=mean, s_sq=1.0)
        self.assertAlmostEqual(sds_threshold_confidence(sample, 0.5).C, 0.8, places=9)

    def test_tau_must_be_positive(self):
        with self.assertRaises(DomainError):
            sds_threshold_confidence(SdsSample(n=5, mean=0.0, s_sq=1.0), 0.0)

    def test_sample_validation(self):
        with self.assertRaises(DomainError):
            SdsSample.from_values([0.3])
        with self.assertRaises(DomainError):
            SdsSample.from_values([0.3, 0.3, 0.3])
        with self.assertRaises(ValueError):
            SdsSample(n=2, mean=1.0, s_sq=1.0, values=(0.0, 1.0))


class TestMaxChange(unittest.TestCase):
    def test_power_of_normal_cdf(self):
        model = MaxChangeModel(n=4, mu=0.0, sigma=1.0)
        self.assertAlmostEqual(max_change_cdf(model, 0.0), 0.0625, places=15)
        result = max_change_confidence(model, 0.5)
        self.assertAlmostEqual(result.C, 1.0 - stats.norm.cdf(-0.5) ** 4, places=12)

    def test_pdf_is_derivative(self):
        model = MaxChangeModel(n=3, mu=-0.1, sigma=0.4)
        h = 1e-5
        slope = (max_change_cdf(model, 0.2 + h) - max_change_cdf(model, 0.2 - h)) / (2 * h)
        self.assertAlmostEqual(max_change_pdf(model, 0.2), slope, places=6)

    def test_from_time_point_means(self):
        model = MaxChangeModel.from_time_point_means([-0.1, 0.1, 0.0])
        self.assertEqual(model.n, 3)
        self.assertAlmostEqual(model.mu, 0.0, places=15)
        self.assertAlmostEqual(model.sigma, 0.1, places=12)
        with self.assertRaises(DomainError):
            MaxChangeModel.from_time_point_means([0.2])


class TestShiftTables(unittest.TestCase):
    def test_baseline_bins(self):
        self.assertEqual(bin_baseline(-10.0), 1)
        self.assertEqual(bin_baseline(-0.5), 4)
        self.assertEqual(bin_baseline(0.0), 5)
        self.assertEqual(bin_baseline(0.51), 6)
        self.assertEqual(bin_baseline(10.0), 9)

    def test_change_bins(self):
        self.assertEqual(bin_change(-2.0), 1)
        self.assertEqual(bin_change(0.5), 3)
        self.assertEqual(bin_change(1.6), 5)
        with self.assertRaises(DomainError):
            bin_change(float("nan"))

    def test_bin_label(self):
        self.assertEqual(bin_label(4, DEFAULT_SCHEME.baseline_edges), "(-1.5, -0.5]")

    def test_changes_and_table(self):
        data = records([
            ("s1", "baseline", 0.0), ("s1", "m6", -0.6), ("s1", "m12", -1.7),
            ("s2", "baseline", -2.0), ("s2", "m6", -1.8),
            ("s3", "m6", 1.0),
        ])
        with self.assertLogs("Pedsafe.Development", level="WARNING"):
            changes = sds_changes(data)
        self.assertEqual(len(changes), 3)
        self.assertEqual({c.time_label for c in changes}, {"m6", "m12"})
        s1_m6 = next(c for c in changes if c.subject_id == "s1" and c.time_label == "m6")
        self.assertAlmostEqual(s1_m6.delta, -0.6, places=15)

        table = shift_table(changes)
        self.assertEqual(table.shape, (9, 5))
        self.assertEqual(int(table.sum()), 3)
        self.assertEqual(int(table[bin_baseline(0.0) - 1, bin_change(-1.7) - 1]), 1)

    def test_duplicate_record(self):
        with self.assertRaises(DomainError):
            sds_changes(records([("s1", "baseline", 0.0), ("s1", "baseline", 0.1)]))

    def test_unknown_baseline_label(self):
        with self.assertRaises(DomainError):
            sds_changes(records([("s1", "baseline", 0.0)]), baseline_label="screening")

    def test_samples_by_time(self):
        data = records([
            ("s1", "t0", 0.0), ("s1", "t1", -0.2),
            ("s2", "t0", 0.1), ("s2", "t1", 0.3),
            ("s3", "t0", -0.4), ("s3", "t1", -0.5),
        ])
        samples = samples_by_time(sds_changes(data))
        self.assertEqual(list(samples), ["t1"])
        self.assertEqual(samples["t1"].n, 3)

    def test_non_finite_value_rejected(self):
        with self.assertRaises(ValueError):
            SdsRecord(subject_id="s1", time_label="t0", sds_value=float("inf"))


if __name__ == "__main__":
    unittest.main()
