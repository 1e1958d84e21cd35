"""
The assembled saliency network.

Module toggles select the ablation variant: diverse reception or a plain
3x3 reduction per level, multiscale interaction or the concat baseline
decoder, feature enhancement or identity.
"""

import logging
from typing import Dict, Optional, Tuple

import torch
import torch.nn as nn

from ..config import ModelConfig, ModuleToggles, TrainConfig
from ..models import SaliencyOutputs
from .base_encoder import BaseEncoder, pyramid_levels_for_decoder
from .baseline import ConcatDecoder
from .conv_encoder import ConvEncoder
from .enhancement import FeatureEnhancement
from .heads import SaliencyHeads
from .interaction import MultiscaleInteraction
from .layers import ConvBNReLU
from .reception import DiverseReception

logger = logging.getLogger(__name__)


class SaliencyNet(nn.Module):
    """Encoder -> per-level reduction -> fusion decoder -> four saliency heads"""

    def __init__(
        self,
        model_cfg: ModelConfig = ModelConfig(),
        toggles: ModuleToggles = ModuleToggles(),
        encoder: Optional[BaseEncoder] = None,
    ):
        super().__init__()
        self.model_cfg = model_cfg
        self.toggles = toggles
        norm = {"bn_momentum": model_cfg.bn_momentum, "bn_eps": model_cfg.bn_eps}
        width = model_cfg.width

        self.encoder = encoder or ConvEncoder(model_cfg.encoder_channels, **norm)
        deep_channels = self.encoder.channels[1:]

        if toggles.dr:
            self.reducers = nn.ModuleList([
                DiverseReception(c, model_cfg.reception, **norm) for c in deep_channels
            ])
        else:
            self.reducers = nn.ModuleList([ConvBNReLU(c, width, **norm) for c in deep_channels])

        shared = FeatureEnhancement(width, **norm) if toggles.fe and model_cfg.fe_share_params else None

        def make_enhance() -> nn.Module:
            if not toggles.fe:
                return nn.Identity()
            return shared if shared is not None else FeatureEnhancement(width, **norm)

        if toggles.msi:
            self.interaction = MultiscaleInteraction(
                width, make_enhance, decoder_enhance=model_cfg.decoder_enhance, **norm
            )
        else:
            self.top_enhance = make_enhance()
            self.fused_enhance = make_enhance()
            self.baseline = ConcatDecoder(width, **norm)

        self.heads = SaliencyHeads(width)

    def forward_with_features(self, image: torch.Tensor) -> Tuple[SaliencyOutputs, Dict[str, object]]:
        """Run the network and also return the pyramid, reduced levels and fusion state"""
        pyramid = self.encoder.encode(image)
        deep = pyramid_levels_for_decoder(pyramid)
        reduced = [reducer(f) for reducer, f in zip(self.reducers, deep)]
        out_size = tuple(image.shape[-2:])

        features: Dict[str, object] = {"pyramid": pyramid, "reduced": reduced}
        if self.toggles.msi:
            state = self.interaction(reduced)
            features["msi"] = state
            outputs = self.heads(state.fd2, state.fd3, state.cfi[4], state.top, out_size)
        else:
            top = self.top_enhance(reduced[3])
            fused = self.fused_enhance(self.baseline([reduced[0], reduced[1], reduced[2], top]))
            features["fused"] = fused
            outputs = self.heads(fused, reduced[1], reduced[2], top, out_size)
        return outputs, features

    def forward(self, image: torch.Tensor) -> SaliencyOutputs:
        outputs, _ = self.forward_with_features(image)
        return outputs

    def architecture(self) -> Dict[str, object]:
        """Fingerprint stored in checkpoints and compared on load"""
        return {
            "encoder": type(self.encoder).__name__,
            "encoder_channels": list(self.encoder.channels),
            "width": self.model_cfg.width,
            "reception_kernels": list(self.model_cfg.reception_kernels),
            "fe_share_params": self.model_cfg.fe_share_params,
            "decoder_enhance": self.model_cfg.decoder_enhance,
            "toggles": {"dr": self.toggles.dr, "msi": self.toggles.msi, "fe": self.toggles.fe},
        }


def build_model(cfg: TrainConfig, seed: Optional[int] = None) -> SaliencyNet:
    """
    Build the network with parameters drawn from a fixed seed.

    Args:
        cfg: Experiment config (model widths and module toggles)
        seed: Parameter seed; defaults to cfg.seed

    Returns:
        Freshly initialized SaliencyNet; identical seeds give identical parameters
    """
    seed = cfg.seed if seed is None else seed
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = SaliencyNet(cfg.model, cfg.module_toggles)
    num_params = sum(p.numel() for p in model.parameters())
    logger.debug("Built %s model with %d parameters (seed %d)", cfg.module_toggles.label(), num_params, seed)
    return model
