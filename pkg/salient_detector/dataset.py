"""
Dataset ingestion and training-time augmentation.

A dataset root holds ``images/`` and ``masks/`` with matching filename stems.
Augmentation (multi-scale, random crop, horizontal flip) is applied per batch
by MultiScaleCollate so that every sample of a batch shares one scale.
"""

import logging
import zlib
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from torch.utils.data import Dataset

from .config import AugmentConfig
from .errors import DatasetError
from .evaluator import list_images, mask_array
from .models import SamplePair

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
PairPaths = Tuple[str, Path, Path]


def dataset_dirs(root: PathLike) -> Tuple[Path, Path]:
    """(images dir, masks dir) of a dataset root"""
    root = Path(root)
    return root / "images", root / "masks"


def list_pairs(image_dir: PathLike, mask_dir: PathLike) -> Tuple[List[PairPaths], List[str]]:
    """
    Match images and masks by stem.

    Returns:
        (sorted (stem, image path, mask path) triples, sorted unmatched stems)
    """
    images = list_images(image_dir)
    masks = list_images(mask_dir)
    unmatched = sorted(set(images) ^ set(masks))
    for stem in unmatched:
        if stem in images:
            logger.warning("Image '%s' has no mask; excluded", stem)
        else:
            logger.warning("Mask '%s' has no image; excluded", stem)
    pairs = [(stem, images[stem], masks[stem]) for stem in sorted(set(images) & set(masks))]
    if not pairs:
        raise DatasetError(f"No image/mask pairs in {image_dir} and {mask_dir}")
    return pairs, unmatched


def read_image(path: PathLike) -> torch.Tensor:
    """RGB image as a float tensor [3, H, W] in [0, 1]"""
    with Image.open(path) as image:
        array = np.asarray(image.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(array.copy()).permute(2, 0, 1).contiguous()


def read_mask_tensor(path: PathLike) -> torch.Tensor:
    """Binary mask tensor [1, H, W] with values {0, 1}"""
    with Image.open(path) as image:
        image.load()
        mask = mask_array(image, source=str(path))
    return torch.from_numpy(mask.astype(np.float32))[None]


def load_sample(stem: str, image_path: PathLike, mask_path: PathLike) -> SamplePair:
    image = read_image(image_path)
    mask = read_mask_tensor(mask_path)
    if image.shape[-2:] != mask.shape[-2:]:
        raise DatasetError(
            f"Image and mask of '{stem}' differ in size: {tuple(image.shape[-2:])} vs {tuple(mask.shape[-2:])}"
        )
    return SamplePair(image=image, mask=mask, id=stem)


def load_pairs(image_dir: PathLike, mask_dir: PathLike) -> List[SamplePair]:
    """Load every matched pair in lexicographic stem order"""
    pairs, _ = list_pairs(image_dir, mask_dir)
    return [load_sample(*pair) for pair in pairs]


def sample_rng(seed: int, epoch: int, key: str) -> np.random.Generator:
    """Independent RNG stream per (seed, epoch, key), independent of worker scheduling"""
    return np.random.default_rng([seed, epoch, zlib.crc32(key.encode("utf-8"))])


def _resize(tensor: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
    if tuple(tensor.shape[-2:]) == tuple(size):
        return tensor
    return F.interpolate(tensor[None], size=size, mode="bilinear", align_corners=False)[0]


def augment(
    sample: SamplePair,
    cfg: AugmentConfig,
    rng: np.random.Generator,
    scale: float = 1.0,
    out_size: Optional[Tuple[int, int]] = None,
) -> SamplePair:
    """
    Apply one geometric transform to image and mask alike.

    Order: rescale by ``scale``, random crop with side ratio drawn from
    ``cfg.crop_ratio_range`` (relative to the original size, clamped to the
    rescaled size), horizontal flip with ``cfg.hflip_prob``, resize to
    ``out_size``. The mask is re-binarized at 0.5 afterwards.
    """
    image, mask = sample.image, sample.mask
    height, width = sample.size

    if scale != 1.0:
        scaled = (max(1, int(round(height * scale))), max(1, int(round(width * scale))))
        image, mask = _resize(image, scaled), _resize(mask, scaled)

    low, high = cfg.crop_ratio_range
    ratio = float(rng.uniform(low, high)) if high > low else float(low)
    cur_h, cur_w = image.shape[-2:]
    crop_h = min(cur_h, max(1, int(round(height * ratio))))
    crop_w = min(cur_w, max(1, int(round(width * ratio))))
    top = int(rng.integers(0, cur_h - crop_h + 1))
    left = int(rng.integers(0, cur_w - crop_w + 1))
    image = image[:, top:top + crop_h, left:left + crop_w]
    mask = mask[:, top:top + crop_h, left:left + crop_w]

    if rng.random() < cfg.hflip_prob:
        image, mask = image.flip(-1), mask.flip(-1)

    if out_size is not None:
        image, mask = _resize(image, out_size), _resize(mask, out_size)

    image = image.clamp(0.0, 1.0).contiguous()
    mask = (mask >= 0.5).to(torch.float32).contiguous()
    return SamplePair(image=image, mask=mask, id=sample.id)


class SaliencyDataset(Dataset):
    """Image/mask pairs read lazily from disk"""

    def __init__(self, pairs: Sequence[PairPaths]):
        if not pairs:
            raise DatasetError("Dataset is empty")
        self.pairs = list(pairs)

    @classmethod
    def from_root(cls, root: PathLike) -> "SaliencyDataset":
        pairs, _ = list_pairs(*dataset_dirs(root))
        return cls(pairs)

    @property
    def ids(self) -> List[str]:
        return [stem for stem, _, _ in self.pairs]

    def subset(self, ids: Sequence[str]) -> "SaliencyDataset":
        wanted = set(ids)
        return SaliencyDataset([pair for pair in self.pairs if pair[0] in wanted])

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> SamplePair:
        return load_sample(*self.pairs[index])


class MultiScaleCollate:
    """
    Batch collation with per-batch multi-scale augmentation.

    One scale is drawn per batch from ``cfg.scales``; crops and flips are drawn
    per sample. All randomness derives from (seed, epoch, sample ids).
    """

    def __init__(self, cfg: AugmentConfig, input_size: int, train: bool = True):
        self.cfg = cfg
        self.out_size = (input_size, input_size)
        self.train = train and cfg.enabled
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __call__(self, samples: List[SamplePair]) -> Dict[str, object]:
        ids = [s.id for s in samples]
        if self.train:
            batch_rng = sample_rng(self.cfg.seed, self.epoch, "|".join(ids))
            scale = float(self.cfg.scales[int(batch_rng.integers(len(self.cfg.scales)))])
            samples = [
                augment(s, self.cfg, sample_rng(self.cfg.seed, self.epoch, s.id), scale, self.out_size)
                for s in samples
            ]
        else:
            samples = [
                SamplePair(
                    image=_resize(s.image, self.out_size),
                    mask=(_resize(s.mask, self.out_size) >= 0.5).to(torch.float32),
                    id=s.id,
                )
                for s in samples
            ]
        return {
            "image": torch.stack([s.image for s in samples]),
            "mask": torch.stack([s.mask for s in samples]),
            "ids": ids,
        }
