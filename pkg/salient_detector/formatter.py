"""
Output formatter - Rich console formatting for metric reports, training
summaries and comparison tables.
"""

from typing import Mapping, Optional

import pandas as pd
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .models import MetricReport, TrainResult

METRIC_LABELS = {
    "mae": "MAE",
    "f_beta_max": "maxF",
    "f_beta_adaptive": "adpF",
    "f_beta_mean": "meanF",
    "weighted_f": "wF",
    "s_measure": "Sm",
    "e_measure": "adpE",
    "e_measure_mean": "meanE",
    "e_measure_max": "maxE",
    "breakeven": "BEP",
}


class OutputFormatter:
    """Formats output for terminal display"""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def print_report(self, report: MetricReport):
        """Print one dataset report as a panel"""
        text = Text()
        text.append(f"{report.dataset or 'dataset'}", style="bold cyan")
        text.append(f"  ({report.num_images} images)\n\n", style="dim")
        for name, value in report.summary().items():
            text.append(f"{METRIC_LABELS[name]:>6}: ", style="white")
            text.append(f"{value:.4f}\n", style="bold yellow" if name != "mae" else "bold green")

        if report.failures:
            text.append(f"\n{len(report.failures)} pair(s) failed: ", style="bold red")
            text.append(", ".join(sorted(report.failures)), style="red")
        if report.missing:
            text.append(f"\n{len(report.missing)} unmatched: ", style="yellow")
            text.append(", ".join(report.missing[:10]) + (" ..." if len(report.missing) > 10 else ""), style="dim")

        panel = Panel(text, title="[bold white]Saliency Metrics[/bold white]", border_style="cyan", box=box.ROUNDED)
        self.console.print(panel)

    def print_reports(self, reports: Mapping[str, MetricReport], title: str = "📊 Metric Comparison"):
        """Print several reports side by side, one row each"""
        table = Table(title=title, box=box.ROUNDED, show_header=True, header_style="bold cyan")
        table.add_column("Run / dataset", style="cyan")
        table.add_column("N", justify="right")
        for name in MetricReport.SUMMARY_FIELDS:
            table.add_column(METRIC_LABELS[name], justify="right")

        for label, report in reports.items():
            table.add_row(
                label,
                str(report.num_images),
                *[f"{value:.4f}" for value in report.summary().values()],
            )
        self.console.print(table)

    def print_frame(self, frame: pd.DataFrame, title: str, highlight: Optional[str] = None):
        """
        Print a DataFrame as a table; with ``highlight`` the best row on that
        column (lowest for MAE, highest otherwise) is shown in green.
        """
        table = Table(title=title, box=box.ROUNDED, show_header=True, header_style="bold cyan")
        for column in frame.columns:
            table.add_column(METRIC_LABELS.get(column, str(column)), justify="right" if column in METRIC_LABELS else "left")

        best_index = None
        if highlight and highlight in frame.columns and len(frame):
            series = frame[highlight]
            best_index = series.idxmin() if highlight == "mae" else series.idxmax()

        for index, row in frame.iterrows():
            cells = [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.tolist()]
            table.add_row(*cells, style="bold green" if index == best_index else "white")
        self.console.print(table)

    def print_train_summary(self, result: TrainResult):
        """Print the outcome of a training run"""
        text = Text()
        text.append("Training finished\n\n", style="bold cyan")
        text.append("Steps: ", style="white")
        text.append(f"{result.steps}\n", style="bold")
        text.append("Final loss: ", style="white")
        text.append(f"{result.final_loss:.4f}\n", style="bold yellow")
        if result.best_f_beta is not None:
            text.append("Best maxF: ", style="white")
            text.append(f"{result.best_f_beta:.4f}\n", style="bold green")
        text.append(f"\nCheckpoint: {result.best_checkpoint}\n", style="dim")
        text.append(f"Log: {result.log_path}", style="dim")
        self.console.print(Panel(text, border_style="green", box=box.ROUNDED))

    def print_error(self, message: str):
        """Print error message"""
        self.console.print(f"\n❌ [bold red]Error:[/bold red] {message}\n")

    def print_warning(self, message: str):
        self.console.print(f"⚠️  [yellow]{message}[/yellow]")

    def print_info(self, message: str):
        """Print info message"""
        self.console.print(f"ℹ️  [cyan]{message}[/cyan]")

    def print_success(self, message: str):
        """Print success message"""
        self.console.print(f"✅ [green]{message}[/green]")
