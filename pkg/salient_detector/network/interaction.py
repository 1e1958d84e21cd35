"""
Multiscale interaction: composite feature integration (multiplicative fusion of
a level, its deeper neighbour and the enhanced top level) followed by the
feature decoder (top-down additive fusion).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence, Tuple

import torch
import torch.nn as nn

from ..errors import ShapeError
from .layers import ConvBNReLU, upsample


@dataclass
class MSIState:
    """Outputs and intermediates of one multiscale-interaction pass"""
    top: torch.Tensor
    cfi: Dict[int, torch.Tensor]
    fd3: torch.Tensor
    fd2: torch.Tensor
    intermediates: Dict[int, Dict[str, torch.Tensor]] = field(default_factory=dict)


def _check_width(f: torch.Tensor, width: int, name: str) -> None:
    if f.dim() != 4 or f.shape[1] != width:
        raise ShapeError(f"{name} must have {width} channels, got shape {tuple(f.shape)}")


class CompositeFeatureIntegration(nn.Module):
    """
    f_arc = Conv3(f_i)
    f_h   = f_arc * Conv3(UP(f_next))
    f_m   = f_arc * Conv3(UP(f_top))
    f_l   = Conv3(UP(f_next)) * Conv3(UP(f_top))
    out   = FE(Conv3(Concat(f_arc, f_h, f_m, f_l)))

    The neighbour and top branches are computed once and reused in f_h/f_l
    and f_m/f_l respectively.
    """

    def __init__(self, width: int, enhance: nn.Module, bn_momentum: float = 0.1, bn_eps: float = 1e-5):
        super().__init__()
        norm = {"bn_momentum": bn_momentum, "bn_eps": bn_eps}
        self.width = width
        self.arc = ConvBNReLU(width, width, **norm)
        self.next_branch = ConvBNReLU(width, width, **norm)
        self.top_branch = ConvBNReLU(width, width, **norm)
        self.fuse = ConvBNReLU(4 * width, width, **norm)
        self.enhance = enhance

    def interactions(self, f_level: torch.Tensor, f_next: torch.Tensor, f_top: torch.Tensor) -> Dict[str, torch.Tensor]:
        for name, f in (("level", f_level), ("neighbour", f_next), ("top", f_top)):
            _check_width(f, self.width, f"{name} feature")
        size = f_level.shape[-2:]

        f_arc = self.arc(f_level)
        next_feat = self.next_branch(upsample(f_next, size))
        top_feat = self.top_branch(upsample(f_top, size))
        if next_feat.shape != f_arc.shape or top_feat.shape != f_arc.shape:
            raise ShapeError("level sizes disagree after upsampling")

        return {
            "arc": f_arc,
            "h": f_arc * next_feat,
            "m": f_arc * top_feat,
            "l": next_feat * top_feat,
        }

    def fused(self, parts: Dict[str, torch.Tensor]) -> torch.Tensor:
        """Pre-enhancement fusion Conv3(Concat(f_arc, f_h, f_m, f_l))"""
        return self.fuse(torch.cat([parts["arc"], parts["h"], parts["m"], parts["l"]], dim=1))

    def forward(self, f_level: torch.Tensor, f_next: torch.Tensor, f_top: torch.Tensor) -> torch.Tensor:
        return self.enhance(self.fused(self.interactions(f_level, f_next, f_top)))


class FeatureDecoder(nn.Module):
    """
    f_fd3 = Conv3(UP(f_cfi4)) + f_cfi3
    f_fd2 = Conv3(Conv3(UP(f_fd3)) + f_cfi2)
    """

    def __init__(self, width: int, bn_momentum: float = 0.1, bn_eps: float = 1e-5):
        super().__init__()
        norm = {"bn_momentum": bn_momentum, "bn_eps": bn_eps}
        self.width = width
        self.lift4 = ConvBNReLU(width, width, **norm)
        self.lift3 = ConvBNReLU(width, width, **norm)
        self.merge2 = ConvBNReLU(width, width, **norm)

    def forward(self, f_cfi4: torch.Tensor, f_cfi3: torch.Tensor, f_cfi2: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        for name, f in (("f_cfi4", f_cfi4), ("f_cfi3", f_cfi3), ("f_cfi2", f_cfi2)):
            _check_width(f, self.width, name)

        lifted4 = self.lift4(upsample(f_cfi4, f_cfi3.shape[-2:]))
        if lifted4.shape != f_cfi3.shape:
            raise ShapeError(f"cannot add {tuple(lifted4.shape)} to {tuple(f_cfi3.shape)}")
        f_fd3 = lifted4 + f_cfi3

        lifted3 = self.lift3(upsample(f_fd3, f_cfi2.shape[-2:]))
        if lifted3.shape != f_cfi2.shape:
            raise ShapeError(f"cannot add {tuple(lifted3.shape)} to {tuple(f_cfi2.shape)}")
        f_fd2 = self.merge2(lifted3 + f_cfi2)
        return f_fd3, f_fd2


class MultiscaleInteraction(nn.Module):
    """Three integrations (levels 2, 3, 4) sharing one enhanced top feature, then the decoder"""

    LEVELS = (2, 3, 4)

    def __init__(
        self,
        width: int,
        make_enhance: Callable[[], nn.Module],
        decoder_enhance: bool = True,
        bn_momentum: float = 0.1,
        bn_eps: float = 1e-5,
    ):
        super().__init__()
        norm = {"bn_momentum": bn_momentum, "bn_eps": bn_eps}
        self.top_enhance = make_enhance()
        self.integrations = nn.ModuleList([
            CompositeFeatureIntegration(width, make_enhance(), **norm) for _ in self.LEVELS
        ])
        self.decoder = FeatureDecoder(width, **norm)
        self.fd3_enhance = make_enhance() if decoder_enhance else nn.Identity()
        self.fd2_enhance = make_enhance() if decoder_enhance else nn.Identity()

    def forward(self, reduced: Sequence[torch.Tensor], keep_intermediates: bool = False) -> MSIState:
        """
        Args:
            reduced: Working-width maps of levels 2, 3, 4, 5
            keep_intermediates: Also return f_arc / f_h / f_m / f_l per level

        Returns:
            MSIState with the enhanced top, the integrations and the decoder outputs
        """
        if len(reduced) != 4:
            raise ShapeError(f"multiscale interaction takes levels 2..5, got {len(reduced)} maps")
        by_level = dict(zip((2, 3, 4, 5), reduced))
        top = self.top_enhance(by_level[5])

        cfi = {}
        intermediates = {}
        for level, block in zip(self.LEVELS, self.integrations):
            parts = block.interactions(by_level[level], by_level[level + 1], top)
            cfi[level] = block.enhance(block.fused(parts))
            if keep_intermediates:
                intermediates[level] = parts

        fd3, fd2 = self.decoder(cfi[4], cfi[3], cfi[2])
        return MSIState(
            top=top,
            cfi=cfi,
            fd3=self.fd3_enhance(fd3),
            fd2=self.fd2_enhance(fd2),
            intermediates=intermediates,
        )
