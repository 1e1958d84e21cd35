"""
Diverse reception: multi-kernel max-pool context around each pyramid level,
compressed to the working width.
"""

import torch
import torch.nn as nn

from ..config import DRConfig
from ..errors import ShapeError
from .layers import ConvBNReLU, same_max_pool


class DiverseReception(nn.Module):
    """Concat(Max_k1(f), ..., Max_kn(f), f) -> 3x3 conv + BN + ReLU"""

    def __init__(self, in_channels: int, cfg: DRConfig = DRConfig(), bn_momentum: float = 0.1, bn_eps: float = 1e-5):
        super().__init__()
        self.in_channels = in_channels
        self.kernel_sizes = tuple(cfg.kernel_sizes)
        self.compress = ConvBNReLU(
            in_channels * (len(self.kernel_sizes) + 1),
            cfg.out_channels,
            bn_momentum=bn_momentum,
            bn_eps=bn_eps,
        )

    def pooled_context(self, f: torch.Tensor) -> torch.Tensor:
        """The pre-convolution concatenation, (len(kernels) + 1) * C channels"""
        if f.dim() != 4 or f.shape[1] < 1 or f.shape[-2] < 1 or f.shape[-1] < 1:
            raise ShapeError(f"diverse reception needs [B, C>=1, H>=1, W>=1], got {tuple(f.shape)}")
        if f.shape[1] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {f.shape[1]}")
        branches = [same_max_pool(f, k) for k in self.kernel_sizes]
        return torch.cat(branches + [f], dim=1)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        return self.compress(self.pooled_context(f))
