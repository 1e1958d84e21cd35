"""
Salient Object Detection

A compact salient-object-detection pipeline: a multi-level encoder, diverse
reception, multiscale interaction and feature enhancement fusion, a
deep-supervised BCE + IoU + boundary objective, and the standard saliency
metric suite, with a synthetic shapes dataset for desk-scale experiments.
"""

__version__ = "1.0.0"
__author__ = "Salient Detector Team"

from .config import TrainConfig, load_config
from .models import CurveSeries, FeaturePyramid, LossBreakdown, MetricReport, SaliencyOutputs, SamplePair, TrainResult

__all__ = [
    "CurveSeries",
    "FeaturePyramid",
    "LossBreakdown",
    "MetricReport",
    "SaliencyOutputs",
    "SamplePair",
    "TrainConfig",
    "TrainResult",
    "load_config",
]
