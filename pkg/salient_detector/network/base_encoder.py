"""
Base encoder class defining the interface every backbone implements.

Any encoder that returns five maps honoring the stride contract
(4, 8, 16, 32, 32) can drive the fusion modules.
"""

from abc import ABC, abstractmethod
from typing import Sequence, Tuple

import torch
import torch.nn as nn

from ..errors import ShapeError
from ..models import FeaturePyramid


def validate_image(image: torch.Tensor) -> None:
    """Reject inputs that are not [B, 3, H, W] with H, W divisible by 32"""
    if image.dim() != 4:
        raise ShapeError(f"expected a 4-D image batch, got shape {tuple(image.shape)}")
    if image.shape[1] != 3:
        raise ShapeError(f"expected 3 image channels, got {image.shape[1]}")
    height, width = image.shape[-2:]
    if height % 32 or width % 32 or height == 0 or width == 0:
        raise ShapeError(f"image size {height}x{width} is not divisible by 32")


def check_pyramid(pyramid: FeaturePyramid) -> None:
    """Verify the stride/shape contract of a pyramid"""
    if len(pyramid.levels) != 5:
        raise ShapeError(f"a feature pyramid has 5 levels, got {len(pyramid.levels)}")
    batch = pyramid.levels[0].shape[0]
    for index, level in enumerate(pyramid.levels, start=1):
        if level.shape[0] != batch:
            raise ShapeError(f"level {index} has batch {level.shape[0]}, expected {batch}")
        expected = pyramid.expected_size(index)
        if tuple(level.shape[-2:]) != expected:
            raise ShapeError(f"level {index} has size {tuple(level.shape[-2:])}, expected {expected}")


def pyramid_levels_for_decoder(pyramid: FeaturePyramid) -> Tuple[torch.Tensor, ...]:
    """The four deeper levels (2..5); level 1 is never used downstream"""
    return tuple(pyramid.level(i) for i in range(2, 6))


class BaseEncoder(nn.Module, ABC):
    """Abstract base class for all encoders"""

    def __init__(self, channels: Sequence[int]):
        super().__init__()
        if len(channels) != 5:
            raise ShapeError(f"an encoder declares 5 level widths, got {len(channels)}")
        self.channels = tuple(int(c) for c in channels)

    @abstractmethod
    def extract(self, image: torch.Tensor) -> Sequence[torch.Tensor]:
        """
        Compute the five level maps.

        Args:
            image: Validated batch [B, 3, H, W]

        Returns:
            Five maps at strides 4, 8, 16, 32, 32
        """
        pass

    def encode(self, image: torch.Tensor) -> FeaturePyramid:
        """Validate the image, run the encoder and check the pyramid contract"""
        validate_image(image)
        image = image.clamp(0.0, 1.0)
        pyramid = FeaturePyramid(levels=tuple(self.extract(image)), input_size=tuple(image.shape[-2:]))
        check_pyramid(pyramid)
        if pyramid.channels != list(self.channels):
            raise ShapeError(f"encoder produced widths {pyramid.channels}, declared {list(self.channels)}")
        return pyramid

    def forward(self, image: torch.Tensor) -> FeaturePyramid:
        return self.encode(image)
