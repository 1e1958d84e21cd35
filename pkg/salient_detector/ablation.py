"""
Ablation grids: loss-term subsets and module toggles, each row trained on
a train split and scored on a held-out split.
"""

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from .config import ModuleToggles, TrainConfig, flatten_config
from .dataset import SaliencyDataset
from .models import MetricReport
from .synthetic import generate_synthetic
from .trainer import Trainer, evaluate_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

LOSS_ROWS: Dict[str, Tuple[str, ...]] = {
    "bce": ("bce",),
    "bce+iou": ("bce", "iou"),
    "bce+iou+bd": ("bce", "iou", "bd"),
}

MODULE_ROWS: Dict[str, ModuleToggles] = {
    "BASE": ModuleToggles(dr=False, msi=False, fe=False),
    "BASE+MSI": ModuleToggles(dr=False, msi=True, fe=False),
    "BASE+MSI+DR": ModuleToggles(dr=True, msi=True, fe=False),
    "BASE+MSI+DR+FE": ModuleToggles(dr=True, msi=True, fe=True),
}

GRIDS = ("loss", "modules")


@dataclass
class AblationRow:
    grid: str
    row: str
    config: TrainConfig


def grid_rows(cfg: TrainConfig, grids: Sequence[str] = GRIDS) -> List[AblationRow]:
    """
    Expand the requested grids into configs. Loss rows keep the full model;
    module rows keep all loss terms.
    """
    rows = []
    if "loss" in grids:
        full = replace(cfg, module_toggles=ModuleToggles())
        for label, terms in LOSS_ROWS.items():
            rows.append(AblationRow("loss", label, replace(full, loss=replace(cfg.loss, terms=terms))))
    if "modules" in grids:
        all_terms = replace(cfg, loss=replace(cfg.loss, terms=LOSS_ROWS["bce+iou+bd"]))
        for label, toggles in MODULE_ROWS.items():
            rows.append(AblationRow("modules", label, replace(all_terms, module_toggles=toggles)))
    return rows


def prepare_splits(out_dir: PathLike, n_train: int = 64, n_test: int = 16, size: int = 64, seed: int = 0) -> Tuple[Path, Path]:
    """Generate a synthetic train/test split under ``out_dir/data``"""
    root = Path(out_dir) / "data"
    train_root, test_root = root / "train", root / "test"
    generate_synthetic(n_train, size, seed, train_root)
    generate_synthetic(n_test, size, seed + 1, test_root)
    return train_root, test_root


def run_ablation(
    cfg: TrainConfig,
    train_set: Union[PathLike, SaliencyDataset],
    test_set: Union[PathLike, SaliencyDataset],
    out_dir: PathLike,
    grids: Sequence[str] = GRIDS,
    device: Optional[str] = None,
    show_progress: bool = False,
) -> Tuple[pd.DataFrame, Dict[str, MetricReport]]:
    """
    Train every grid row and score its final model on the test split.

    Rows with identical configs (the full model appears in both grids) are
    trained once.

    Returns:
        (table with columns grid, row and the summary metrics; reports by "grid/row")
    """
    if not isinstance(train_set, SaliencyDataset):
        train_set = SaliencyDataset.from_root(train_set)
    if not isinstance(test_set, SaliencyDataset):
        test_set = SaliencyDataset.from_root(test_set)
    out_dir = Path(out_dir)

    cache: Dict[Tuple[Tuple[str, str], ...], MetricReport] = {}
    records, reports = [], {}
    for row in grid_rows(cfg, grids):
        key = tuple(sorted(flatten_config(row.config).items()))
        if key not in cache:
            logger.info("Ablation %s row '%s'", row.grid, row.row)
            run_dir = out_dir / row.grid / row.row
            trainer = Trainer(row.config, train_set, run_dir, eval_set=test_set, device=device, show_progress=show_progress)
            trainer.fit()
            report, _, _ = evaluate_model(
                trainer.model, test_set, row.config.input_size, name="test", device=trainer.device
            )
            cache[key] = report
        report = cache[key]
        reports[f"{row.grid}/{row.row}"] = report
        records.append({"grid": row.grid, "row": row.row, **report.summary()})

    frame = pd.DataFrame.from_records(records)
    save_ablation(frame, out_dir)
    return frame, reports


def save_ablation(frame: pd.DataFrame, out_dir: PathLike) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ablation.csv"
    json_path = out_dir / "ablation.json"
    frame.to_csv(csv_path, index=False)
    json_path.write_text(json.dumps(frame.to_dict(orient="records"), indent=2), encoding="utf-8")
    return csv_path, json_path
