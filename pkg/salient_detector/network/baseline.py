"""
Baseline decoder used when multiscale interaction is switched off: all
levels are resized to the finest one, concatenated and compressed.
"""

from typing import Sequence

import torch
import torch.nn as nn

from ..errors import ShapeError
from .layers import ConvBNReLU, upsample


class ConcatDecoder(nn.Module):
    """Concat(UP(f2), UP(f3), UP(f4), UP(f5)) -> Conv3"""

    def __init__(self, width: int, num_levels: int = 4, bn_momentum: float = 0.1, bn_eps: float = 1e-5):
        super().__init__()
        self.num_levels = num_levels
        self.compress = ConvBNReLU(num_levels * width, width, bn_momentum=bn_momentum, bn_eps=bn_eps)

    def forward(self, levels: Sequence[torch.Tensor]) -> torch.Tensor:
        if len(levels) != self.num_levels:
            raise ShapeError(f"expected {self.num_levels} levels, got {len(levels)}")
        size = levels[0].shape[-2:]
        return self.compress(torch.cat([upsample(f, size) for f in levels], dim=1))
