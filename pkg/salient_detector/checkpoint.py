"""
Versioned checkpoint archive: model weights plus the config snapshot and
architecture fingerprint needed to rebuild the model.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import torch

from .config import Config, TrainConfig, apply_overrides, flatten_config, get_profile
from .errors import CheckpointError, CheckpointVersionError
from .network import SaliencyNet, build_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    """A loaded checkpoint"""
    model: SaliencyNet
    config: TrainConfig
    epoch: int = 0
    step: int = 0
    metrics: Dict[str, float] = field(default_factory=dict)
    path: Optional[Path] = None


def save_checkpoint(
    path: PathLike,
    model: SaliencyNet,
    cfg: TrainConfig,
    epoch: int,
    step: int,
    metrics: Optional[Dict[str, float]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    archive = {
        "format_version": Config.CHECKPOINT_FORMAT_VERSION,
        "architecture": model.architecture(),
        "config": flatten_config(cfg),
        "model_state": model.state_dict(),
        "epoch": epoch,
        "step": step,
        "metrics": dict(metrics or {}),
    }
    # atomic replace
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(archive, tmp)
    tmp.replace(path)
    logger.debug("Saved checkpoint %s (epoch %d, step %d)", path, epoch, step)
    return path


def load_checkpoint(path: PathLike, device: Optional[str] = None) -> Checkpoint:
    """
    Rebuild the model stored in ``path``.

    Raises:
        CheckpointError: file missing or unreadable
        CheckpointVersionError: unknown format version, or the stored weights do
            not fit the architecture rebuilt from the stored config
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        archive = torch.load(path, map_location=device or "cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if not isinstance(archive, dict) or "format_version" not in archive:
        raise CheckpointVersionError(f"{path} is not a saliency checkpoint")
    version = archive["format_version"]
    if version != Config.CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"Checkpoint format {version} is not supported (expected {Config.CHECKPOINT_FORMAT_VERSION})"
        )

    cfg = apply_overrides(get_profile("desk"), archive["config"])
    model = build_model(cfg)
    stored_arch = archive.get("architecture", {})
    if stored_arch != model.architecture():
        raise CheckpointVersionError(
            f"Architecture mismatch: checkpoint {stored_arch}, rebuilt {model.architecture()}"
        )
    try:
        model.load_state_dict(archive["model_state"])
    except RuntimeError as e:
        raise CheckpointVersionError(f"Stored weights do not fit the model: {e}") from e

    if device:
        model.to(device)
    model.eval()
    return Checkpoint(
        model=model,
        config=cfg,
        epoch=int(archive.get("epoch", 0)),
        step=int(archive.get("step", 0)),
        metrics=dict(archive.get("metrics", {})),
        path=path,
    )
