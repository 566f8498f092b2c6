import csv
import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from pedsafe.cli import main, parse_config
from pedsafe.core.errors import UsageError
from pedsafe.core.models import Command


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.cfg = self.write_config("logging:\n  output_mode: silent\n")
        self._env = patch.dict(os.environ, {}, clear=False)
        self._env.start()
        os.environ.pop("PEDSAFE_SEED", None)
        self._logging = patch("pedsafe.cli.setup_logging")
        self._logging.start()

    def tearDown(self):
        self._logging.stop()
        self._env.stop()
        self._tmp.cleanup()

    def write_config(self, text: str, name: str = "pedsafe.yaml") -> str:
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def run_cli(self, *args: str) -> int:
        return main([*args, "--config", self.cfg])

    def read_csv(self, path: Path):
        with open(path, "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))


class TestParseConfig(CliTestCase):
    def test_confidence_flags(self):
        config = parse_config([
            "confidence", "--mode", "fold", "--fold", "2", "--treat", "2/100",
            "--control", "1/100", "--ref-diff", "0.01", "--config", self.cfg,
        ])
        self.assertEqual(config.command, Command.CONFIDENCE)
        self.assertEqual(config.params["ref_diff"], "0.01")
        self.assertEqual(config.params["treat"], "2/100")

    def test_missing_fold_names_key(self):
        with self.assertRaises(UsageError) as ctx:
            parse_config([
                "confidence", "--mode", "fold", "--treat", "2/100", "--control", "1/100",
                "--ref-diff", "0.01", "--config", self.cfg,
            ])
        self.assertEqual(ctx.exception.key, "fold")

    def test_flag_overrides_config_scenario(self):
        cfg = self.write_config(
            "scenario:\n  min-fold:\n    events: 1\n    n: 50\n    ref_rate: 0.01\n    target: 0.9\n",
            name="scenario.yaml",
        )
        config = parse_config(["min-fold", "--events", "0", "--config", cfg])
        self.assertEqual(config.params["events"], "0")
        self.assertEqual(config.params["target"], 0.9)
        self.assertEqual(config.echo()["params"]["events"], "0")

    def test_unknown_scenario_key(self):
        cfg = self.write_config("scenario:\n  sds:\n    input: x.csv\n    tau: 0.5\n    bogus: 1\n", name="bad.yaml")
        with self.assertRaises(UsageError) as ctx:
            parse_config(["sds", "--config", cfg])
        self.assertEqual(ctx.exception.key, "bogus")

    def test_unknown_flag(self):
        with self.assertRaises(UsageError):
            parse_config(["sds", "--tau", "0.5", "--input", "x.csv", "--frobnicate"])

    def test_subcommand_required(self):
        with self.assertRaises(UsageError) as ctx:
            parse_config([])
        self.assertEqual(ctx.exception.key, "command")

    def test_global_flags_reach_settings(self):
        config = parse_config([
            "win-odds", "--input", "x.csv", "--seed", "12", "--format", "json",
            "--replicates", "50", "--config", self.cfg,
        ])
        self.assertEqual(config.settings.seed, 12)
        self.assertEqual(config.settings.output.format, "json")
        self.assertEqual(config.settings.bootstrap.replicates, 50)


class TestCommands(CliTestCase):
    def test_min_fold_report(self):
        out = self.tmp / "min_fold.csv"
        code = self.run_cli(
            "min-fold", "--events", "0", "--n", "150", "--ref-rate", "0.01", "--target", "0.8", "--output", str(out)
        )
        self.assertEqual(code, 0)
        rows = self.read_csv(out)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["tool"], "pedsafe")
        self.assertEqual(rows[0]["command"], "min-fold")
        self.assertAlmostEqual(float(rows[0]["f_C"]), 1.0602, delta=1e-4)
        self.assertIn('"events":"0"', rows[0]["config"])

    def test_contour_cell_json(self):
        out = self.tmp / "contour.json"
        grid = self.tmp / "grid.csv"
        code = self.run_cli(
            "contour", "--n", "300", "--r", "0,1", "--quantity", "at-least-r", "--rate", "0.01",
            "--grid-output", str(grid), "--format", "json", "--output", str(out),
        )
        self.assertEqual(code, 0)
        document = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(document["artifacts"], ["grid.csv"])
        cell = next(row for row in document["rows"] if row["r"] == 1)
        self.assertAlmostEqual(cell["value"], 1.0 - 0.99 ** 300, delta=1e-12)
        self.assertTrue(grid.exists())

    def test_confidence_single_arm(self):
        out = self.tmp / "confidence.csv"
        code = self.run_cli(
            "confidence", "--mode", "fold", "--fold", "2", "--treat", "0/150", "--ref-rate", "0.01",
            "--output", str(out),
        )
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(self.read_csv(out)[0]["C"]), 1.0 - 0.98 ** 151, delta=1e-12)

    def test_sds_deltas(self):
        data = self.tmp / "deltas.csv"
        data.write_text("delta\n-0.6\n-0.4\n", encoding="utf-8")
        out = self.tmp / "sds.csv"
        code = self.run_cli("sds", "--input", str(data), "--tau", "0.5", "--output", str(out))
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(self.read_csv(out)[0]["C"]), 0.5, places=12)

    def test_win_odds_is_byte_identical_for_a_seed(self):
        data = self.tmp / "wo.csv"
        data.write_text(
            "arm,subject_id,death,score\n"
            "A,1,0,5\nA,2,0,3\nA,3,1,2\nA,4,0,4\n"
            "B,5,0,2\nB,6,1,1\nB,7,0,4\nB,8,0,1\n",
            encoding="utf-8",
        )
        outputs = []
        for name in ("first.csv", "second.csv"):
            out = self.tmp / name
            code = self.run_cli(
                "win-odds", "--input", str(data), "--directions=-,+", "--seed", "2024",
                "--replicates", "200", "--output", str(out),
            )
            self.assertEqual(code, 0)
            outputs.append(out.read_bytes())
        self.assertEqual(outputs[0], outputs[1])
        row = self.read_csv(self.tmp / "first.csv")[0]
        # 11 wins, 4 losses and 1 tie over the 16 pairs
        self.assertEqual(row["psi_exact"], "23/9")
        self.assertAlmostEqual(float(row["psi_hat"]), 23 / 9, places=12)

    def test_sds_long_format(self):
        data = self.tmp / "sds_long.csv"
        data.write_text(
            "subject_id,time_label,sds_value\n"
            "s1,base,0.0\ns1,m6,-0.2\ns1,m12,-0.5\n"
            "s2,base,0.5\ns2,m6,0.1\ns2,m12,0.0\n"
            "s3,base,-1.0\ns3,m6,-1.4\ns3,m12,-1.2\n",
            encoding="utf-8",
        )
        out = self.tmp / "sds_long_report.csv"
        code = self.run_cli("sds", "--input", str(data), "--tau", "0.5", "--output", str(out))
        self.assertEqual(code, 0)
        rows = self.read_csv(out)
        means = {r["time_label"]: r for r in rows if r["kind"] == "mean_change"}
        self.assertEqual(list(means), ["m6", "m12"])
        self.assertEqual(means["m6"]["n"], "3")
        self.assertAlmostEqual(float(means["m6"]["mean"]), -1.0 / 3.0, places=12)
        self.assertAlmostEqual(float(means["m12"]["mean"]), -0.4, places=12)
        self.assertEqual(sum(r["kind"] == "max_change" for r in rows), 1)
        shifts = [r for r in rows if r["kind"] == "shift"]
        self.assertEqual(sum(int(r["count"]) for r in shifts), 6)

    def test_win_odds_without_seed_is_a_usage_error(self):
        data = self.tmp / "wo.csv"
        data.write_text("arm,subject_id,y\nA,1,1\nB,2,0\nB,3,2\n", encoding="utf-8")
        self.assertEqual(self.run_cli("win-odds", "--input", str(data), "--output", str(self.tmp / "r.csv")), 2)

    def test_usage_error_exit_code(self):
        code = self.run_cli("confidence", "--mode", "fold", "--treat", "1/10", "--ref-rate", "0.01")
        self.assertEqual(code, 2)

    def test_missing_input_exit_code(self):
        code = self.run_cli("sds", "--input", str(self.tmp / "absent.csv"), "--tau", "0.5",
                            "--output", str(self.tmp / "r.csv"))
        self.assertEqual(code, 3)

    def test_unsatisfiable_design_exit_code(self):
        cfg = self.write_config("logging:\n  output_mode: silent\ndesign:\n  n_cap: 10\n", name="cap.yaml")
        code = main([
            "solve-n", "--mode", "fold", "--fold", "2", "--treat-rate", "0", "--ref-rate", "0.01",
            "--config", cfg, "--output", str(self.tmp / "r.csv"),
        ])
        self.assertEqual(code, 2)


class TestReproduce(CliTestCase):
    def reproduce(self, figure: str, directory: Path) -> int:
        return self.run_cli(
            "reproduce", "--figure", figure, "--output-dir", str(directory),
            "--output", str(directory / "report.csv"),
        )

    def test_contour_figure_is_deterministic(self):
        first, second = self.tmp / "a", self.tmp / "b"
        self.assertEqual(self.reproduce("5", first), 0)
        self.assertEqual(self.reproduce("5", second), 0)
        files = sorted(p.name for p in first.glob("figure5_*.csv"))
        self.assertEqual(len(files), 4)
        for name in files:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_curve_figure_windows_are_reported(self):
        cfg = self.write_config(
            "logging:\n  output_mode: silent\ndesign:\n  n_cap: 400\nevaluation:\n  mc_samples: 20000\n",
            name="fig.yaml",
        )
        reports = []
        for run in ("a", "b"):
            directory = self.tmp / run
            code = main([
                "reproduce", "--figure", "2", "--output-dir", str(directory), "--grid-points", "257",
                "--seed", "180", "--config", cfg, "--output", str(directory / "report.csv"),
            ])
            self.assertEqual(code, 0)
            reports.append(self.read_csv(directory / "report.csv"))
        files = sorted(p.name for p in (self.tmp / "a").glob("figure2_*.csv"))
        self.assertEqual(len(files), 4)
        for name in files:
            self.assertEqual((self.tmp / "a" / name).read_bytes(), (self.tmp / "b" / name).read_bytes())

        panel = [r for r in reports[0] if r["panel"] == "bg0.01_diff0.03"]
        self.assertEqual({r["window"] for r in panel}, {"140-220"})
        priors = [r["prior"] for r in panel]
        self.assertEqual(priors[:4], ["uniform", "near_zero(0.001)", "near_zero(0.01)", "near_zero(0.1)"])
        self.assertEqual(panel[0]["window_met"], "False")
        if not any(r["window_met"] == "True" for r in panel):
            cross_check = panel[-1]
            self.assertEqual(cross_check["n_total"], "180")
            self.assertLessEqual(
                abs(float(cross_check["achieved_C"]) - float(cross_check["mc_C"])),
                max(0.01, 4 * float(cross_check["mc_se"])),
            )
        self.assertEqual(
            [r["n_total"] for r in panel], [r["n_total"] for r in reports[1] if r["panel"] == "bg0.01_diff0.03"]
        )

    def test_min_fold_figure(self):
        out = self.tmp / "fig4"
        self.assertEqual(self.reproduce("4", out), 0)
        with open(out / "figure4_C0.80.csv", "r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 30 * 6)
        folds = {(int(r["n"]), int(r["r"])): float(r["f_C"]) for r in rows}
        self.assertGreater(folds[(150, 0)], 1.0)
        self.assertLess(folds[(300, 0)], folds[(150, 0)])
        self.assertLess(folds[(150, 0)], folds[(150, 3)])

    def test_unknown_figure(self):
        self.assertEqual(self.reproduce("7", self.tmp / "x"), 2)


if __name__ == "__main__":
    unittest.main()
