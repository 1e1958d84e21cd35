"""
Saliency heads: 3x3 conv to one channel, bilinear resize to the input size, sigmoid.
"""

from typing import Sequence

import torch
import torch.nn as nn

from ..models import SaliencyOutputs
from .layers import upsample


class SaliencyHead(nn.Module):
    """One supervised prediction map"""

    def __init__(self, width: int):
        super().__init__()
        self.conv = nn.Conv2d(width, 1, kernel_size=3, padding=1)

    def forward(self, f: torch.Tensor, out_size: Sequence[int]) -> torch.Tensor:
        return torch.sigmoid(upsample(self.conv(f), out_size))


class SaliencyHeads(nn.Module):
    """Heads for m2..m5; m2 is the model prediction"""

    def __init__(self, width: int):
        super().__init__()
        self.heads = nn.ModuleDict({str(level): SaliencyHead(width) for level in SaliencyOutputs.LEVELS})

    def forward(
        self,
        f_fd2: torch.Tensor,
        f_fd3: torch.Tensor,
        f_cfi4: torch.Tensor,
        f_top: torch.Tensor,
        out_size: Sequence[int],
    ) -> SaliencyOutputs:
        """
        Args:
            f_fd2: Final decoder feature (feeds m2)
            f_fd3: Intermediate decoder feature (feeds m3)
            f_cfi4: Deepest integration (feeds m4)
            f_top: Enhanced top level (feeds m5)
            out_size: (H, W) of the input image

        Returns:
            SaliencyOutputs with four [B, 1, H, W] maps
        """
        return SaliencyOutputs(
            m2=self.heads["2"](f_fd2, out_size),
            m3=self.heads["3"](f_fd3, out_size),
            m4=self.heads["4"](f_cfi4, out_size),
            m5=self.heads["5"](f_top, out_size),
        )
