"""
Inference - predicts the final saliency map (m2) for images and writes them
as 8-bit grayscale PNGs, value round(255 * p), without post-processing.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .checkpoint import Checkpoint, load_checkpoint
from .dataset import read_image
from .errors import DatasetError
from .evaluator import list_images
from .network import SaliencyNet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@torch.no_grad()
def predict_map(model: SaliencyNet, image: torch.Tensor, input_size: int, device: str = "cpu") -> np.ndarray:
    """
    Saliency map of one image at its own resolution.

    Args:
        model: Network (put into eval mode here)
        image: [3, H, W] tensor in [0, 1]
        input_size: Side the image is resized to before the forward pass
        device: Torch device

    Returns:
        float64 array [H, W] in [0, 1]
    """
    model.eval()
    height, width = image.shape[-2:]
    batch = F.interpolate(image[None].to(device), size=(input_size, input_size), mode="bilinear", align_corners=False)
    pred = model(batch).prediction
    if (height, width) != (input_size, input_size):
        pred = F.interpolate(pred, size=(height, width), mode="bilinear", align_corners=False)
    return pred[0, 0].clamp(0.0, 1.0).cpu().double().numpy()


def to_png_array(pred: np.ndarray) -> np.ndarray:
    return np.clip(np.round(pred * 255.0), 0, 255).astype(np.uint8)


def save_prediction(pred: np.ndarray, path: PathLike) -> Path:
    path = Path(path)
    Image.fromarray(to_png_array(pred)).save(path)
    return path


def predict_directory(
    checkpoint: Union[PathLike, Checkpoint],
    image_dir: PathLike,
    out_dir: PathLike,
    device: Optional[str] = None,
) -> Tuple[List[Path], Dict[str, str]]:
    """
    Predict every image in ``image_dir`` into ``out_dir/<stem>.png``.

    Unreadable images are skipped and reported. Rerunning overwrites the
    outputs with identical bytes.

    Returns:
        (written paths, failures by stem)
    """
    device = device or "cpu"
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else load_checkpoint(checkpoint, device)
    images = list_images(image_dir)
    if not images:
        raise DatasetError(f"No images in {image_dir}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    input_size = ckpt.config.input_size

    written, failures = [], {}
    for stem, path in images.items():
        try:
            pred = predict_map(ckpt.model, read_image(path), input_size, device)
        except (OSError, ValueError) as e:
            logger.error("Could not predict '%s': %s", stem, e)
            failures[stem] = str(e)
            continue
        written.append(save_prediction(pred, out_dir / f"{stem}.png"))

    logger.info("Wrote %d predictions to %s", len(written), out_dir)
    return written, failures
