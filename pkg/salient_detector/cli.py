"""
Command-line interface: generate / train / predict / eval / report / ablate.

Exit codes: 0 success, 1 internal error (including a non-finite training
loss), 2 usage or configuration error (bad keys, missing checkpoint or
input directories).
"""

import functools
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import click

from .config import Config, TrainConfig, load_config, parse_assignments, write_config, flatten_config
from .database import DEFAULT_DATABASE_URL, ExperimentStore
from .errors import CheckpointError, ConfigError, DatasetError, NonFiniteLossError, SalientError
from .formatter import OutputFormatter
from .logging_utils import setup_logging
from .models import MetricReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

formatter = OutputFormatter()


def handle_errors(func):
    """Map library exceptions to exit codes"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, DatasetError, CheckpointError) as e:
            formatter.print_error(str(e))
            sys.exit(EXIT_USAGE)
        except NonFiniteLossError as e:
            formatter.print_error(str(e))
            sys.exit(EXIT_FAILURE)
        except SalientError as e:
            formatter.print_error(str(e))
            sys.exit(EXIT_FAILURE)
        except KeyboardInterrupt:
            formatter.print_warning("Interrupted")
            sys.exit(EXIT_FAILURE)
    return wrapper


def resolve_config(
    config_path: Optional[str],
    assignments: Sequence[str],
    seed: Optional[int],
    profile: Optional[str],
) -> TrainConfig:
    overrides = parse_assignments(assignments)
    if seed is not None:
        overrides["seed"] = str(seed)
    return load_config(config_path, overrides, profile)


def open_store(db_url: Optional[str]) -> Optional[ExperimentStore]:
    url = db_url or Config.DATABASE_URL
    return ExperimentStore(url) if url else None


def write_json(path: Path, payload: object) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=str), encoding="utf-8")
    return path


def config_options(func):
    """--config / --set / --seed / --profile shared by experiment commands"""
    func = click.option("--profile", type=click.Choice(Config.PROFILES), default=None,
                        help="Base settings (default: desk)")(func)
    func = click.option("--seed", type=int, default=None, help="Override the experiment seed")(func)
    func = click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
                        help="Override a config key, e.g. model.width=16")(func)
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                        help="key=value config file")(func)
    return func


db_option = click.option(
    "--db", "db_url", is_flag=False, flag_value=DEFAULT_DATABASE_URL, default=None,
    help="Record results in an experiment store (SQLAlchemy URL; bare --db uses the local SQLite file)",
)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
def cli(verbose: bool):
    """Salient object detection: synthetic data, training, inference and evaluation."""
    setup_logging("DEBUG" if verbose else None)
    try:
        Config.validate()
    except ConfigError as e:
        formatter.print_error(str(e))
        sys.exit(EXIT_USAGE)


@cli.command()
@click.option("--n", "n", type=int, default=8, show_default=True, help="Number of image/mask pairs")
@click.option("--size", type=int, default=64, show_default=True, help="Image side (multiple of 32)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="data/synthetic", show_default=True)
@handle_errors
def generate(n: int, size: int, seed: int, out: str):
    """Write a synthetic shapes dataset (images/ + masks/)."""
    from .synthetic import generate_synthetic

    stems = generate_synthetic(n, size, seed, out)
    write_json(Path(out) / "manifest.json", {"n": n, "size": size, "seed": seed, "ids": stems})
    formatter.print_success(f"Generated {len(stems)} pairs in {out}")


@cli.command()
@config_options
@click.option("--data", required=True, type=click.Path(), help="Training dataset root")
@click.option("--eval-data", type=click.Path(), default=None, help="Dataset scored at eval epochs (default: training set)")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Run directory")
@click.option("--device", default=None, help="Torch device (default: SALIENT_DEVICE)")
@click.option("--name", default=None, help="Run name in the experiment store")
@db_option
@handle_errors
def train(config_path, assignments, seed, profile, data, eval_data, out, device, name, db_url):
    """Train a model; writes checkpoints, train_log.jsonl and summary.json."""
    from .trainer import train as run_training

    cfg = resolve_config(config_path, assignments, seed, profile)
    out_dir = Path(out or Path(Config.OUTPUT_DIR) / "train")
    write_config(cfg, out_dir / "config.env")

    result = run_training(cfg, data, out_dir, eval_dataset=eval_data, device=device)
    summary = asdict(result)
    summary.pop("losses")
    summary["final_loss"] = result.final_loss
    write_json(out_dir / "summary.json", summary)
    formatter.print_train_summary(result)

    store = open_store(db_url)
    if store:
        run_id = store.record_run(name or out_dir.name, "train", flatten_config(cfg), result.best_checkpoint)
        if result.report is not None:
            store.record_report(run_id, result.report)
        formatter.print_info(f"Recorded run {run_id} in {store.db_url}")


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(), help="Checkpoint (.pt)")
@click.option("--images", "image_dir", required=True, type=click.Path(), help="Directory of input images")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Directory for predicted PNGs")
@click.option("--device", default=None)
@click.option("--strict", is_flag=True, help="Fail if any image cannot be predicted")
@handle_errors
def predict(checkpoint, image_dir, out, device, strict):
    """Write the final saliency map of every image as an 8-bit PNG."""
    from .predictor import predict_directory

    written, failures = predict_directory(checkpoint, image_dir, out, device=device or Config.DEVICE)
    write_json(Path(out) / "predictions.json", {
        "checkpoint": str(checkpoint),
        "written": [p.name for p in written],
        "failures": failures,
    })
    formatter.print_success(f"Wrote {len(written)} saliency maps to {out}")
    if failures:
        formatter.print_warning(f"{len(failures)} image(s) failed: {', '.join(sorted(failures))}")
        if strict:
            sys.exit(EXIT_FAILURE)


@cli.command(name="eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(), help="Directory of predicted maps")
@click.option("--gt", "gt_dir", required=True, type=click.Path(), help="Directory of ground-truth masks")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Directory for report.json and curves.csv")
@click.option("--name", default=None, help="Dataset name (default: mask directory name)")
@click.option("--workers", type=int, default=None, help="Scoring threads (default: SALIENT_EVAL_WORKERS)")
@click.option("--strict", is_flag=True, help="Fail if any pair cannot be scored or has no counterpart")
@db_option
@handle_errors
def evaluate(pred_dir, gt_dir, out, name, workers, strict, db_url):
    """Score predicted maps against masks; writes report.json and curves.csv."""
    from .evaluator import evaluate_dataset, save_report

    report, curve = evaluate_dataset(pred_dir, gt_dir, dataset=name, workers=workers)
    report_path, curve_path = save_report(report, curve, out)
    formatter.print_report(report)
    formatter.print_info(f"Report: {report_path}  Curves: {curve_path}")

    store = open_store(db_url)
    if store:
        run_id = store.record_run(name or report.dataset, "eval", {"pred": str(pred_dir), "gt": str(gt_dir)})
        store.record_report(run_id, report)
        formatter.print_info(f"Recorded run {run_id} in {store.db_url}")

    if strict and (report.failures or report.missing):
        sys.exit(EXIT_FAILURE)


def _collect_reports(paths: Sequence[str]) -> Dict[str, MetricReport]:
    from .evaluator import load_report

    reports = {}
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            path = path / "report.json"
        if not path.is_file():
            raise DatasetError(f"Report not found: {path}")
        label = path.parent.name or str(path)
        reports[label] = load_report(path)
    return reports


@cli.command()
@click.argument("reports", nargs=-1, type=click.Path())
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV file for the comparison table (default: <output dir>/comparison.csv)")
@db_option
@handle_errors
def report(reports: Tuple[str, ...], out, db_url):
    """Compare report.json files (or stored results with --db)."""
    import pandas as pd

    if not reports and not db_url:
        raise ConfigError("Give one or more report paths, or --db to read the experiment store")

    frames = []
    if reports:
        collected = _collect_reports(reports)
        formatter.print_reports(collected)
        frames.append(pd.DataFrame.from_records(
            [{"run": label, "dataset": r.dataset, **r.summary()} for label, r in collected.items()]
        ))
    if db_url:
        stored = ExperimentStore(db_url).results_frame()
        if stored.empty:
            formatter.print_warning("No stored results")
        else:
            formatter.print_frame(stored, title="📚 Stored results", highlight="f_beta_max")
            frames.append(stored.drop(columns=["run_id"]))

    if frames:
        out = Path(out or Path(Config.OUTPUT_DIR) / "comparison.csv")
        table = pd.concat(frames, ignore_index=True)
        out.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
        formatter.print_info(f"Comparison written to {out}")


@cli.command()
@config_options
@click.option("--grid", type=click.Choice(["loss", "modules", "all"]), default="all", show_default=True)
@click.option("--train-data", type=click.Path(), default=None, help="Train split root (default: generate synthetic)")
@click.option("--test-data", type=click.Path(), default=None, help="Test split root (default: generate synthetic)")
@click.option("--n-train", type=int, default=64, show_default=True)
@click.option("--n-test", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--device", default=None)
@db_option
@handle_errors
def ablate(config_path, assignments, seed, profile, grid, train_data, test_data, n_train, n_test, out, device, db_url):
    """Run the loss-term and module-toggle ablation grids."""
    from .ablation import GRIDS, prepare_splits, run_ablation

    cfg = resolve_config(config_path, assignments, seed, profile)
    out_dir = Path(out or Path(Config.OUTPUT_DIR) / "ablation")
    write_config(cfg, out_dir / "config.env")

    if (train_data is None) != (test_data is None):
        raise ConfigError("Give both --train-data and --test-data, or neither")
    if train_data is None:
        train_data, test_data = prepare_splits(out_dir, n_train, n_test, size=cfg.input_size, seed=cfg.seed)

    grids = GRIDS if grid == "all" else (grid,)
    frame, reports = run_ablation(cfg, train_data, test_data, out_dir, grids=grids, device=device)
    for group in grids:
        rows = frame[frame["grid"] == group].drop(columns=["grid"]).reset_index(drop=True)
        formatter.print_frame(rows, title=f"🧪 Ablation: {group}", highlight="f_beta_max")

    store = open_store(db_url)
    if store:
        for label, row_report in reports.items():
            run_id = store.record_run(label, "ablate", flatten_config(cfg))
            store.record_report(run_id, row_report)
        formatter.print_info(f"Recorded {len(reports)} ablation rows in {store.db_url}")


def main(argv: Optional[Sequence[str]] = None):
    """Console entry point"""
    cli.main(args=argv, prog_name="salient", standalone_mode=True)
