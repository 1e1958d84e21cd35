import unittest

import pandas as pd
from rich.console import Console

from salient_detector.formatter import OutputFormatter
from salient_detector.models import TrainResult
from tests.test_database import toy_report


class TestOutputFormatter(unittest.TestCase):
    def setUp(self):
        self.console = Console(record=True, width=160, color_system=None)
        self.formatter = OutputFormatter(self.console)

    def text(self) -> str:
        return self.console.export_text()

    def test_report_panel(self):
        report = toy_report("toy", 0.2)
        report.failures["b"] = "shape mismatch"
        self.formatter.print_report(report)
        out = self.text()
        for label in ("MAE", "maxF", "wF", "Sm", "adpE", "toy", "1 pair(s) failed"):
            self.assertIn(label, out)

    def test_comparison_and_frame(self):
        self.formatter.print_reports({"clean": toy_report("toy", 0.0), "noisy": toy_report("toy", 0.4)})
        frame = pd.DataFrame({"row": ["BASE", "BASE+MSI"], "mae": [0.2, 0.1], "f_beta_max": [0.5, 0.7]})
        self.formatter.print_frame(frame, title="Ablation", highlight="f_beta_max")
        out = self.text()
        self.assertIn("clean", out)
        self.assertIn("BASE+MSI", out)
        self.assertIn("0.7000", out)

    def test_train_summary(self):
        result = TrainResult("out", "out/last.pt", "out/best.pt", "out/train_log.jsonl", 4, [0.9, 0.5], 0.8)
        self.formatter.print_train_summary(result)
        out = self.text()
        self.assertIn("0.5000", out)
        self.assertIn("Best maxF", out)
        self.assertIn("out/best.pt", out)


if __name__ == "__main__":
    unittest.main()
