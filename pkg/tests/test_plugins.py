import csv
import io
import json
import sys
import tempfile
import unittest
from pathlib import Path

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from pedsafe.core.errors import UsageError
from pedsafe.core.reporting import Report
from pedsafe.plugins.manager import PluginManager


def sample_report() -> Report:
    report = Report(version="1.0.0", command="contour", seed=7, config={"params": {"rate": 0.01}})
    report.add_row(n=300, r=1, value=0.1)
    report.add_row(n=300, r=2, value=float("nan"), note="edge")
    return report


class TestPluginManager(unittest.TestCase):
    def setUp(self):
        self.manager = PluginManager()

    def test_discovers_bundled_writers(self):
        self.assertEqual(self.manager.formats(), ["csv", "json"])
        self.assertEqual(self.manager.get_plugin("json").extension, "json")

    def test_unknown_format(self):
        with self.assertRaises(UsageError) as ctx:
            self.manager.get_plugin("pdf")
        self.assertEqual(ctx.exception.key, "format")

    def test_csv_columns_and_provenance(self):
        text = self.manager.get_plugin("csv").render(sample_report())
        rows = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0]["tool"], "pedsafe")
        self.assertEqual(rows[0]["seed"], "7")
        self.assertEqual(rows[0]["value"], "0.1")
        self.assertEqual(rows[0]["note"], "")
        self.assertEqual(rows[1]["note"], "edge")
        self.assertEqual(json.loads(rows[1]["config"]), {"params": {"rate": 0.01}})

    def test_json_document_replaces_nan(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.manager.get_plugin("json").generate(sample_report(), Path(tmp) / "nested" / "r.json")
            document = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(document["command"], "contour")
        self.assertIsNone(document["rows"][1]["value"])
        self.assertEqual(document["rows"][0]["value"], 0.1)


if __name__ == "__main__":
    unittest.main()
