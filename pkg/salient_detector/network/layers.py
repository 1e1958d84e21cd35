"""
Small building blocks shared by the network modules and the boundary loss.
"""

from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigError, ShapeError


class ConvBNReLU(nn.Module):
    """3x3 convolution followed by batch normalization and ReLU"""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        bn_momentum: float = 0.1,
        bn_eps: float = 1e-5,
    ):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=stride, padding=1, bias=False)
        self.bn = nn.BatchNorm2d(out_channels, momentum=bn_momentum, eps=bn_eps)
        self.relu = nn.ReLU(inplace=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.relu(self.bn(self.conv(x)))


def upsample(f: torch.Tensor, target: Sequence[int]) -> torch.Tensor:
    """
    Bilinearly resize ``f`` up to ``target`` (align_corners=False).

    Args:
        f: Feature map [B, C, H, W]
        target: (H, W) no smaller than the current size

    Returns:
        The same tensor when sizes already match, otherwise the interpolated map
    """
    height, width = f.shape[-2:]
    target = (int(target[0]), int(target[1]))
    if target == (height, width):
        return f
    if target[0] < height or target[1] < width:
        raise ShapeError(f"upsample target {target} is smaller than source {(height, width)}")
    return F.interpolate(f, size=target, mode="bilinear", align_corners=False)


def same_max_pool(f: torch.Tensor, kernel_size: int) -> torch.Tensor:
    """Stride-1 max pooling with zero padding (k-1)/2; keeps the spatial size"""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ConfigError(f"max-pool kernel size must be odd, got {kernel_size}")
    if f.dim() != 4 or f.shape[-1] < 1 or f.shape[-2] < 1:
        raise ShapeError(f"expected a [B, C, H, W] map with H, W >= 1, got {tuple(f.shape)}")
    pad = (kernel_size - 1) // 2
    if pad == 0:
        return f
    padded = F.pad(f, (pad, pad, pad, pad), mode="constant", value=0.0)
    return F.max_pool2d(padded, kernel_size=kernel_size, stride=1)
