"""
Data models for the saliency detector.
Defines the structures passed between the network, the losses and the evaluator.
"""

from dataclasses import asdict, dataclass, field
from typing import ClassVar, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import torch


@dataclass
class FeaturePyramid:
    """Five encoder feature maps at strides 4, 8, 16, 32, 32"""
    levels: Tuple[torch.Tensor, ...]
    input_size: Tuple[int, int]

    STRIDES: ClassVar[Tuple[int, ...]] = (4, 8, 16, 32, 32)

    @property
    def channels(self) -> List[int]:
        return [f.shape[1] for f in self.levels]

    @property
    def batch_size(self) -> int:
        return self.levels[0].shape[0]

    def level(self, index: int) -> torch.Tensor:
        """Return level ``index`` (1-based, 1..5)"""
        if not 1 <= index <= len(self.levels):
            raise IndexError(f"pyramid level must be in 1..{len(self.levels)}, got {index}")
        return self.levels[index - 1]

    def expected_size(self, index: int) -> Tuple[int, int]:
        stride = self.STRIDES[index - 1]
        return self.input_size[0] // stride, self.input_size[1] // stride


@dataclass
class SaliencyOutputs:
    """The four supervised saliency maps, all at input resolution, values in (0, 1)"""
    m2: torch.Tensor
    m3: torch.Tensor
    m4: torch.Tensor
    m5: torch.Tensor

    LEVELS: ClassVar[Tuple[int, ...]] = (2, 3, 4, 5)

    @property
    def prediction(self) -> torch.Tensor:
        """m2 is the model's final prediction"""
        return self.m2

    def by_level(self) -> Dict[int, torch.Tensor]:
        return {2: self.m2, 3: self.m3, 4: self.m4, 5: self.m5}


@dataclass
class LevelLoss:
    """Loss terms of one supervised map; disabled terms stay None"""
    total: torch.Tensor
    bce: Optional[torch.Tensor] = None
    iou: Optional[torch.Tensor] = None
    bd: Optional[torch.Tensor] = None

    def terms(self) -> Dict[str, float]:
        values = {"bce": self.bce, "iou": self.iou, "bd": self.bd}
        return {name: float(v) for name, v in values.items() if v is not None}


@dataclass
class LossBreakdown:
    """Per-level loss terms plus the deep-supervision weighted total"""
    per_level: Dict[int, LevelLoss]
    total: torch.Tensor
    weights: Dict[int, float]

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.total).all())

    def to_record(self) -> Dict[str, object]:
        """JSON-serializable view for the training log"""
        return {
            "total": float(self.total),
            "levels": {
                str(level): {**loss.terms(), "sum": float(loss.total), "weight": self.weights[level]}
                for level, loss in self.per_level.items()
            },
        }


@dataclass
class CurveSeries:
    """Precision, recall and F-measure for the 256 thresholds 0..255"""
    precision: np.ndarray
    recall: np.ndarray
    f_beta: np.ndarray
    thresholds: np.ndarray = field(default_factory=lambda: np.arange(256))
    gt_empty: bool = False
    e_measure: Optional[np.ndarray] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "threshold": self.thresholds.astype(int),
            "precision": self.precision,
            "recall": self.recall,
            "f_beta": self.f_beta,
        })

    def breakeven(self) -> float:
        """Value where the precision and recall curves cross (closest threshold)"""
        index = int(np.argmin(np.abs(self.precision - self.recall)))
        return float((self.precision[index] + self.recall[index]) / 2)


@dataclass
class ImageMetrics:
    """All metrics of one prediction/ground-truth pair"""
    name: str
    mae: float
    f_beta_max: float
    f_beta_adaptive: float
    f_beta_mean: float
    weighted_f: float
    s_measure: float
    e_measure: float
    e_measure_mean: float
    e_measure_max: float
    gt_empty: bool = False


@dataclass
class MetricReport:
    """Dataset-level metrics plus the per-image values they were computed from"""
    dataset: str
    mae: float
    f_beta_max: float
    f_beta_adaptive: float
    f_beta_mean: float
    weighted_f: float
    s_measure: float
    e_measure: float
    e_measure_mean: float
    e_measure_max: float
    breakeven: float
    num_images: int
    per_image: List[ImageMetrics] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)
    missing: List[str] = field(default_factory=list)

    SUMMARY_FIELDS: ClassVar[Tuple[str, ...]] = (
        "mae", "f_beta_max", "f_beta_adaptive", "f_beta_mean", "weighted_f",
        "s_measure", "e_measure", "e_measure_mean", "e_measure_max", "breakeven",
    )

    def summary(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.SUMMARY_FIELDS}

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "MetricReport":
        data = dict(data)
        data["per_image"] = [ImageMetrics(**item) for item in data.get("per_image", [])]
        return cls(**data)


@dataclass
class SamplePair:
    """An image and its aligned binary mask"""
    image: torch.Tensor  # [3, H, W], values in [0, 1]
    mask: torch.Tensor   # [1, H, W], values in {0, 1}
    id: str

    @property
    def size(self) -> Tuple[int, int]:
        return tuple(self.image.shape[-2:])


@dataclass
class TrainResult:
    """Artifacts and summary of a finished training run"""
    out_dir: str
    last_checkpoint: str
    best_checkpoint: str
    log_path: str
    steps: int
    losses: List[float] = field(default_factory=list)
    best_f_beta: Optional[float] = None
    report: Optional[MetricReport] = None

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")
