"""
Feature enhancement: per-pixel affine gating predicted from the feature itself.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigError, ShapeError
from .layers import ConvBNReLU


class FeatureEnhancement(nn.Module):
    """
    f' = Conv3(f); (w, b) = split(conv3x3(f')); out = relu(w * f' + b)

    The splitting layer is a plain 3x3 convolution (no norm, no activation)
    producing 2 * width channels.
    """

    def __init__(self, width: int = 64, bn_momentum: float = 0.1, bn_eps: float = 1e-5):
        super().__init__()
        if width <= 0:
            raise ConfigError("feature enhancement width must be positive")
        self.width = width
        self.refine = ConvBNReLU(width, width, bn_momentum=bn_momentum, bn_eps=bn_eps)
        self.split = nn.Conv2d(width, 2 * width, kernel_size=3, padding=1)

    def gates(self, refined: torch.Tensor):
        out = self.split(refined)
        if out.shape[1] % 2:
            raise ConfigError(f"split conv must produce an even channel count, got {out.shape[1]}")
        weight, bias = torch.chunk(out, 2, dim=1)
        return weight, bias

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        if f.dim() != 4 or f.shape[1] != self.width:
            raise ShapeError(f"feature enhancement expects {self.width} channels, got shape {tuple(f.shape)}")
        refined = self.refine(f)
        weight, bias = self.gates(refined)
        return F.relu(weight * refined + bias)
