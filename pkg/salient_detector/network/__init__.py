"""
Network package: encoder interface, fusion modules and the assembled model.
"""

from .base_encoder import BaseEncoder, check_pyramid, pyramid_levels_for_decoder, validate_image
from .baseline import ConcatDecoder
from .conv_encoder import ConvEncoder
from .enhancement import FeatureEnhancement
from .heads import SaliencyHead, SaliencyHeads
from .interaction import CompositeFeatureIntegration, FeatureDecoder, MSIState, MultiscaleInteraction
from .layers import ConvBNReLU, same_max_pool, upsample
from .reception import DiverseReception
from .saliency_net import SaliencyNet, build_model

__all__ = [
    "BaseEncoder",
    "ConvEncoder",
    "ConcatDecoder",
    "CompositeFeatureIntegration",
    "ConvBNReLU",
    "DiverseReception",
    "FeatureDecoder",
    "FeatureEnhancement",
    "MSIState",
    "MultiscaleInteraction",
    "SaliencyHead",
    "SaliencyHeads",
    "SaliencyNet",
    "build_model",
    "check_pyramid",
    "pyramid_levels_for_decoder",
    "same_max_pool",
    "upsample",
    "validate_image",
]
