"""
Training loop - momentum SGD with a linear warm-up/decay learning rate,
the deep-supervised composite loss, per-step JSON-lines logging, checkpoints
at every epoch end plus the best max-F checkpoint.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeRemainingColumn
from torch.optim.lr_scheduler import LambdaLR
from torch.utils.data import DataLoader

from .checkpoint import load_checkpoint, save_checkpoint
from .config import Config, TrainConfig, write_config
from .dataset import MultiScaleCollate, SaliencyDataset
from .errors import ConfigError, NonFiniteLossError
from .evaluator import evaluate_arrays
from .losses import total_loss
from .models import CurveSeries, MetricReport, TrainResult
from .network import SaliencyNet, build_model
from .predictor import predict_map

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    """Index of the peak step; kept strictly inside (0, total_steps - 1)"""
    if total_steps < 3:
        return 0
    warm = max(1, int(round(warmup_fraction * (total_steps - 1))))
    return min(warm, total_steps - 2)


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """
    Learning rate of ``step``: linear from lr_min to lr_max over the warm-up,
    then linear back to lr_min at the last step.

    Runs shorter than 3 steps have no room for a peak and stay at lr_min.
    """
    if total_steps <= 0:
        raise ConfigError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    warm = warmup_steps(total_steps, cfg.warmup_fraction)
    if warm == 0:
        return cfg.lr_min

    last = total_steps - 1
    if step <= warm:
        t = step / warm
    else:
        t = (last - step) / (last - warm)
    return cfg.lr_min * (1.0 - t) + cfg.lr_max * t


def param_groups(model: nn.Module, weight_decay: float, decay_norm_and_bias: bool = False) -> List[Dict]:
    """Split parameters so that norm weights and biases skip weight decay"""
    decay, no_decay = [], []
    for param in model.parameters():
        if not param.requires_grad:
            continue
        if param.ndim > 1 or decay_norm_and_bias:
            decay.append(param)
        else:
            no_decay.append(param)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def build_optimizer(model: nn.Module, cfg: TrainConfig, total_steps: int) -> Tuple[torch.optim.SGD, LambdaLR]:
    """
    SGD whose base lr is 1 so the LambdaLR factor is the learning rate itself.
    """
    optimizer = torch.optim.SGD(
        param_groups(model, cfg.weight_decay, cfg.decay_norm_and_bias),
        lr=1.0,
        momentum=cfg.momentum,
    )
    scheduler = LambdaLR(optimizer, lr_lambda=lambda step: lr_at(min(step, total_steps - 1), total_steps, cfg))
    return optimizer, scheduler


def evaluate_model(
    model: SaliencyNet,
    dataset: SaliencyDataset,
    input_size: int,
    name: str = "",
    device: str = "cpu",
) -> Tuple[MetricReport, CurveSeries, Dict[str, np.ndarray]]:
    """
    Predict m2 for every sample at ``input_size``, resize back to the mask
    size and score.

    Returns:
        (report, mean curve, predictions by sample id)
    """
    was_training = model.training
    preds, gts = {}, {}
    for index in range(len(dataset)):
        sample = dataset[index]
        preds[sample.id] = predict_map(model, sample.image, input_size, device)
        gts[sample.id] = sample.mask[0].numpy() > 0.5
    model.train(was_training)
    report, curve = evaluate_arrays(preds, gts, dataset=name)
    return report, curve, preds


def evaluate(
    checkpoint: PathLike,
    dataset: Union[PathLike, SaliencyDataset],
    device: Optional[str] = None,
) -> Tuple[MetricReport, CurveSeries]:
    """Score a saved checkpoint on a dataset root (``images/`` + ``masks/``)"""
    device = device or Config.DEVICE
    ckpt = load_checkpoint(checkpoint, device)
    name = ""
    if not isinstance(dataset, SaliencyDataset):
        name = Path(dataset).name
        dataset = SaliencyDataset.from_root(dataset)
    report, curve, _ = evaluate_model(ckpt.model, dataset, ckpt.config.input_size, name=name, device=device)
    return report, curve


class Trainer:
    """Runs one training experiment into an output directory"""

    def __init__(
        self,
        cfg: TrainConfig,
        train_set: SaliencyDataset,
        out_dir: PathLike,
        eval_set: Optional[SaliencyDataset] = None,
        device: Optional[str] = None,
        show_progress: bool = True,
    ):
        self.cfg = cfg
        self.train_set = train_set
        self.eval_set = eval_set or train_set
        self.out_dir = Path(out_dir)
        self.device = device or Config.DEVICE
        self.show_progress = show_progress

        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.out_dir / "train_log.jsonl"
        self.last_path = self.out_dir / "last.pt"
        self.best_path = self.out_dir / "best.pt"

        torch.manual_seed(cfg.seed)
        self.model = build_model(cfg).to(self.device)
        self.collate = MultiScaleCollate(cfg.augment, cfg.input_size, train=True)
        self.loader = DataLoader(
            train_set,
            batch_size=cfg.batch_size,
            shuffle=True,
            num_workers=cfg.num_workers or Config.NUM_WORKERS,
            collate_fn=self.collate,
            generator=torch.Generator().manual_seed(cfg.seed),
        )
        self.total_steps = cfg.epochs * len(self.loader)
        self.optimizer, self.scheduler = build_optimizer(self.model, cfg, self.total_steps)

    def _dump_batch(self, batch: Dict[str, object], step: int) -> Path:
        path = self.out_dir / f"nonfinite_step{step}.pt"
        torch.save({"step": step, "ids": batch["ids"], "image": batch["image"], "mask": batch["mask"]}, path)
        return path

    def _should_evaluate(self, epoch: int) -> bool:
        if self.cfg.eval_every <= 0:
            return False
        return (epoch + 1) % self.cfg.eval_every == 0 or epoch + 1 == self.cfg.epochs

    def train_step(self, batch: Dict[str, object], step: int, epoch: int) -> Dict[str, object]:
        """One optimizer step; returns the log record"""
        images = batch["image"].to(self.device)
        masks = batch["mask"].to(self.device)
        lr = self.optimizer.param_groups[0]["lr"]

        outputs = self.model(images)
        breakdown = total_loss(outputs, masks, self.cfg.loss)
        if not breakdown.is_finite():
            dump = self._dump_batch(batch, step)
            raise NonFiniteLossError(step, batch["ids"], str(dump))

        self.optimizer.zero_grad(set_to_none=True)
        breakdown.total.backward()
        self.optimizer.step()
        self.scheduler.step()
        return {"step": step, "epoch": epoch, "lr": lr, "ids": list(batch["ids"]), **breakdown.to_record()}

    def fit(self) -> TrainResult:
        """
        Train for ``cfg.epochs`` epochs.

        Raises:
            NonFiniteLossError: a step produced NaN/inf; the batch is dumped
                next to the log before raising
        """
        cfg = self.cfg
        write_config(cfg, self.out_dir / "config.env")
        logger.info(
            "Training %s for %d epochs (%d steps) on %d images, device %s",
            cfg.module_toggles.label(), cfg.epochs, self.total_steps, len(self.train_set), self.device,
        )

        losses: List[float] = []
        best_f: Optional[float] = None
        report: Optional[MetricReport] = None
        step = 0

        progress = Progress(
            TextColumn("[cyan]epoch {task.fields[epoch]}"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("loss {task.fields[loss]:.4f}"),
            TimeRemainingColumn(),
            disable=not self.show_progress,
            transient=True,
        )
        with progress, open(self.log_path, "w", encoding="utf-8") as log:
            task = progress.add_task("train", total=self.total_steps, epoch=0, loss=float("nan"))
            for epoch in range(cfg.epochs):
                self.model.train()
                self.collate.set_epoch(epoch)
                for batch in self.loader:
                    record = self.train_step(batch, step, epoch)
                    log.write(json.dumps(record) + "\n")
                    losses.append(record["total"])
                    step += 1
                    progress.update(task, advance=1, epoch=epoch + 1, loss=record["total"])
                log.flush()

                metrics: Dict[str, float] = {"loss": losses[-1]}
                if self._should_evaluate(epoch):
                    report, _, _ = evaluate_model(self.model, self.eval_set, cfg.input_size, device=self.device)
                    metrics.update(report.summary())
                    logger.info(
                        "epoch %d: loss %.4f, max-F %.4f, MAE %.4f",
                        epoch + 1, losses[-1], report.f_beta_max, report.mae,
                    )
                    if best_f is None or report.f_beta_max > best_f:
                        best_f = report.f_beta_max
                        save_checkpoint(self.best_path, self.model, cfg, epoch + 1, step, metrics)
                save_checkpoint(self.last_path, self.model, cfg, epoch + 1, step, metrics)

        if best_f is None:
            save_checkpoint(self.best_path, self.model, cfg, cfg.epochs, step, {"loss": losses[-1]})

        logger.info("Finished %d steps, final loss %.4f", step, losses[-1])
        return TrainResult(
            out_dir=str(self.out_dir),
            last_checkpoint=str(self.last_path),
            best_checkpoint=str(self.best_path),
            log_path=str(self.log_path),
            steps=step,
            losses=losses,
            best_f_beta=best_f,
            report=report,
        )


def train(
    cfg: TrainConfig,
    dataset: Union[PathLike, SaliencyDataset],
    out_dir: PathLike,
    eval_dataset: Optional[Union[PathLike, SaliencyDataset]] = None,
    device: Optional[str] = None,
    show_progress: bool = True,
) -> TrainResult:
    """Train on a dataset root or a SaliencyDataset; see Trainer.fit"""
    if not isinstance(dataset, SaliencyDataset):
        dataset = SaliencyDataset.from_root(dataset)
    if eval_dataset is not None and not isinstance(eval_dataset, SaliencyDataset):
        eval_dataset = SaliencyDataset.from_root(eval_dataset)
    trainer = Trainer(cfg, dataset, out_dir, eval_set=eval_dataset, device=device, show_progress=show_progress)
    return trainer.fit()


def read_log(path: PathLike) -> List[Dict[str, object]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
