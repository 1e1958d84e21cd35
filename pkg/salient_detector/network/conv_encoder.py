"""
Configurable strided convolutional encoder.
"""

from typing import List, Sequence

import torch
import torch.nn as nn

from .base_encoder import BaseEncoder
from .layers import ConvBNReLU


class ConvEncoder(BaseEncoder):
    """
    Five-stage encoder: two stride-2 blocks for level 1 (stride 4), one
    stride-2 block for each of levels 2-4, and a stride-1 stage for level 5
    so that levels 4 and 5 share the stride-32 size.
    """

    def __init__(
        self,
        channels: Sequence[int] = (32, 64, 128, 256, 256),
        bn_momentum: float = 0.1,
        bn_eps: float = 1e-5,
    ):
        super().__init__(channels)
        c1, c2, c3, c4, c5 = self.channels
        norm = {"bn_momentum": bn_momentum, "bn_eps": bn_eps}

        self.stages = nn.ModuleList([
            nn.Sequential(ConvBNReLU(3, c1, stride=2, **norm), ConvBNReLU(c1, c1, stride=2, **norm)),
            nn.Sequential(ConvBNReLU(c1, c2, stride=2, **norm), ConvBNReLU(c2, c2, **norm)),
            nn.Sequential(ConvBNReLU(c2, c3, stride=2, **norm), ConvBNReLU(c3, c3, **norm)),
            nn.Sequential(ConvBNReLU(c3, c4, stride=2, **norm), ConvBNReLU(c4, c4, **norm)),
            nn.Sequential(ConvBNReLU(c4, c5, **norm), ConvBNReLU(c5, c5, **norm)),
        ])

    def extract(self, image: torch.Tensor) -> List[torch.Tensor]:
        levels = []
        x = image
        for stage in self.stages:
            x = stage(x)
            levels.append(x)
        return levels
