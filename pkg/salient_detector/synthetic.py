"""
Synthetic shapes dataset - 1 to 3 filled shapes of distinct colors over a
textured noise background, with exact binary masks.

Used for desk-scale training and the acceptance runs; the layout matches the
real-dataset convention (``images/`` and ``masks/`` with matching stems).
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw

from .errors import ConfigError

logger = logging.getLogger(__name__)

BORDER_MARGIN = 2
MIN_FOREGROUND = 0.02
MAX_FOREGROUND = 0.6
SHAPE_KINDS = ("ellipse", "rectangle", "polygon")
MAX_ATTEMPTS = 200


def _noise_background(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Low-frequency color blobs plus fine grain, values kept in a muted band"""
    coarse = rng.uniform(60, 150, size=(max(2, height // 8), max(2, width // 8), 3)).astype(np.uint8)
    smooth = np.asarray(Image.fromarray(coarse).resize((width, height), Image.Resampling.BILINEAR), dtype=np.float64)
    grain = rng.normal(0.0, 12.0, size=(height, width, 3))
    return np.clip(smooth + grain, 0, 255).astype(np.uint8)


def _pick_colors(rng: np.random.Generator, count: int, background: np.ndarray) -> List[Tuple[int, int, int]]:
    """Colors far from the background mean and from each other"""
    bg_mean = background.reshape(-1, 3).mean(axis=0)
    colors: List[np.ndarray] = []
    while len(colors) < count:
        candidate = rng.integers(0, 256, size=3)
        if np.abs(candidate - bg_mean).sum() < 150:
            continue
        if any(np.abs(candidate - c).sum() < 90 for c in colors):
            continue
        colors.append(candidate)
    return [tuple(int(v) for v in c) for c in colors]


def _random_box(rng: np.random.Generator, height: int, width: int) -> Tuple[int, int, int, int]:
    """Box (x0, y0, x1, y1) inside the margin, side between 1/6 and 1/2 of the image"""
    low, high = BORDER_MARGIN, BORDER_MARGIN + 1
    box_w = int(rng.integers(max(4, width // 6), max(5, width // 2)))
    box_h = int(rng.integers(max(4, height // 6), max(5, height // 2)))
    x0 = int(rng.integers(low, width - high - box_w + 1))
    y0 = int(rng.integers(low, height - high - box_h + 1))
    return x0, y0, x0 + box_w, y0 + box_h


def _draw_shape(draw: ImageDraw.ImageDraw, kind: str, box: Tuple[int, int, int, int], rng: np.random.Generator, fill) -> None:
    x0, y0, x1, y1 = box
    if kind == "ellipse":
        draw.ellipse(box, fill=fill)
    elif kind == "rectangle":
        draw.rectangle(box, fill=fill)
    else:
        # convex polygon: vertices sorted by angle around the box center
        n = int(rng.integers(3, 7))
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=n))
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        rx, ry = (x1 - x0) / 2, (y1 - y0) / 2
        points = [(cx + rx * np.cos(a), cy + ry * np.sin(a)) for a in angles]
        draw.polygon([(int(round(px)), int(round(py))) for px, py in points], fill=fill)


def render_sample(rng: np.random.Generator, size: Tuple[int, int]) -> Tuple[Image.Image, Image.Image]:
    """
    Draw one image/mask pair.

    Shapes are redrawn until the foreground fraction lies in
    [MIN_FOREGROUND, MAX_FOREGROUND].
    """
    height, width = size
    for _ in range(MAX_ATTEMPTS):
        background = _noise_background(rng, height, width)
        num_shapes = int(rng.integers(1, 4))
        colors = _pick_colors(rng, num_shapes, background)

        image = Image.fromarray(background)
        mask = Image.new("L", (width, height), 0)
        image_draw = ImageDraw.Draw(image)
        mask_draw = ImageDraw.Draw(mask)
        for color in colors:
            kind = SHAPE_KINDS[int(rng.integers(len(SHAPE_KINDS)))]
            box = _random_box(rng, height, width)
            # replay the rng so image and mask get the same polygon
            state = rng.bit_generator.state
            _draw_shape(image_draw, kind, box, rng, fill=color)
            rng.bit_generator.state = state
            _draw_shape(mask_draw, kind, box, rng, fill=255)

        fraction = float((np.asarray(mask) > 0).mean())
        if MIN_FOREGROUND <= fraction <= MAX_FOREGROUND:
            return image, mask
    raise RuntimeError(f"Could not draw a mask with foreground fraction in range at size {size}")


def generate_synthetic(
    n: int,
    size: Union[int, Tuple[int, int]] = 64,
    seed: int = 0,
    out: Union[str, Path] = "data/synthetic",
) -> List[str]:
    """
    Write ``n`` synthetic PNG pairs under ``out/images`` and ``out/masks``.

    Args:
        n: Number of samples (>= 1)
        size: Image size, int or (H, W); both sides divisible by 32
        seed: RNG seed; the same seed gives bitwise-identical files
        out: Dataset root

    Returns:
        Sorted sample stems
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    height, width = (size, size) if isinstance(size, int) else tuple(size)
    if height <= 0 or width <= 0 or height % 32 or width % 32:
        raise ConfigError(f"synthetic size must be positive multiples of 32, got {(height, width)}")

    root = Path(out)
    image_dir, mask_dir = root / "images", root / "masks"
    image_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    stems = []
    for index in range(n):
        stem = f"synth_{index:05d}"
        image, mask = render_sample(rng, (height, width))
        image.save(image_dir / f"{stem}.png")
        mask.save(mask_dir / f"{stem}.png")
        stems.append(stem)

    logger.info("Generated %d synthetic %dx%d pairs in %s (seed %d)", n, height, width, root, seed)
    return stems
