"""
Training objective: BCE + soft IoU + boundary loss per saliency map, summed
over the four maps with deep-supervision weights 1, 1/2, 1/4, 1/8.

All functions take probabilities P in [0, 1] and binary masks G of shape
[B, 1, H, W]; per-image values are averaged over the batch.
"""

from typing import Dict, Mapping, Optional

import torch

from .config import LossConfig
from .errors import ShapeError
from .models import LevelLoss, LossBreakdown, SaliencyOutputs
from .network.layers import same_max_pool

EPS = 1e-7


def _check_pair(pred: torch.Tensor, gt: torch.Tensor) -> None:
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and mask {tuple(gt.shape)} differ in shape")
    if pred.dim() != 4:
        raise ShapeError(f"expected [B, 1, H, W] maps, got {tuple(pred.shape)}")


def _check_binary(gt: torch.Tensor) -> None:
    if not torch.all((gt == 0) | (gt == 1)):
        raise ValueError("ground-truth mask must be binary (threshold it on load)")


def _safe_ratio(num: torch.Tensor, den: torch.Tensor, fallback: float, eps: float) -> torch.Tensor:
    """num / den where den > eps, ``fallback`` elsewhere (exact division when guarded)"""
    ok = den > eps
    ratio = num / torch.where(ok, den, torch.ones_like(den))
    return torch.where(ok, ratio, torch.full_like(ratio, fallback))


def bce_loss(pred: torch.Tensor, gt: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """Mean binary cross entropy with P clamped to [eps, 1 - eps]"""
    _check_pair(pred, gt)
    _check_binary(gt)
    p = pred.clamp(eps, 1.0 - eps)
    return -(gt * torch.log(p) + (1.0 - gt) * torch.log(1.0 - p)).mean()


def iou_loss(pred: torch.Tensor, gt: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """1 - sum(GP) / sum(G + P - GP) per image; an empty pair counts as a perfect match"""
    _check_pair(pred, gt)
    dims = (1, 2, 3)
    inter = (gt * pred).sum(dim=dims)
    union = (gt + pred - gt * pred).sum(dim=dims)
    iou = _safe_ratio(inter, union, fallback=1.0, eps=eps)
    return (1.0 - iou).mean()


def extract_boundary(mask: torch.Tensor, kernel_size: int = 3) -> torch.Tensor:
    """
    Soft boundary of a map: maxpool(1 - M) - (1 - M), stride 1, zero padding.

    Args:
        mask: Map in [0, 1], [B, 1, H, W]
        kernel_size: Odd pooling kernel

    Returns:
        Boundary map in [0, 1]; zero on constant maps
    """
    inverted = 1.0 - mask
    return same_max_pool(inverted, kernel_size) - inverted


def boundary_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    kernel_size: int = 3,
    eps: float = EPS,
    tolerance: int = 1,
) -> torch.Tensor:
    """
    1 - F1 of the boundary maps, with precision = sum(ext(Gb) Pb) / sum(Pb) and
    recall = sum(Gb ext(Pb)) / sum(Gb). ext is a stride-1 max pool of size
    tolerance; tolerance 1 compares boundaries pixel for pixel. Both
    boundaries empty gives 0.
    """
    _check_pair(pred, gt)
    dims = (1, 2, 3)
    pred_b = extract_boundary(pred, kernel_size)
    gt_b = extract_boundary(gt, kernel_size)

    pred_hits = (pred_b * same_max_pool(gt_b, tolerance)).sum(dim=dims)
    gt_hits = (gt_b * same_max_pool(pred_b, tolerance)).sum(dim=dims)
    pred_sum = pred_b.sum(dim=dims)
    gt_sum = gt_b.sum(dim=dims)
    precision = _safe_ratio(pred_hits, pred_sum, fallback=0.0, eps=eps)
    recall = _safe_ratio(gt_hits, gt_sum, fallback=0.0, eps=eps)
    f1 = _safe_ratio(2.0 * precision * recall, precision + recall, fallback=0.0, eps=eps)

    both_empty = (pred_sum <= eps) & (gt_sum <= eps)
    loss = torch.where(both_empty, torch.zeros_like(f1), 1.0 - f1)
    return loss.mean()


def map_loss(pred: torch.Tensor, gt: torch.Tensor, cfg: LossConfig = LossConfig()) -> LevelLoss:
    """Sum of the enabled terms for one saliency map"""
    bce = bce_loss(pred, gt, cfg.eps) if "bce" in cfg.terms else None
    iou = iou_loss(pred, gt, cfg.eps) if "iou" in cfg.terms else None
    bd = boundary_loss(pred, gt, cfg.boundary_kernel, cfg.eps, cfg.boundary_tolerance) if "bd" in cfg.terms else None
    total = sum(term for term in (bce, iou, bd) if term is not None)
    return LevelLoss(total=total, bce=bce, iou=iou, bd=bd)


def level_weights(cfg: LossConfig = LossConfig()) -> Dict[int, float]:
    return dict(zip(SaliencyOutputs.LEVELS, cfg.level_weights))


def weighted_total(level_sums: Mapping[int, float], weights: Optional[Mapping[int, float]] = None):
    """Deep-supervision sum: L(m2) + 1/2 L(m3) + 1/4 L(m4) + 1/8 L(m5)"""
    weights = weights or level_weights()
    return sum(weights[level] * level_sums[level] for level in SaliencyOutputs.LEVELS)


def total_loss(outputs: SaliencyOutputs, gt: torch.Tensor, cfg: LossConfig = LossConfig()) -> LossBreakdown:
    """
    Composite deep-supervised loss.

    Args:
        outputs: The four predicted maps
        gt: Binary mask [B, 1, H, W] at the maps' size
        cfg: Enabled terms, boundary kernel, eps and level weights

    Returns:
        LossBreakdown with per-level terms and the weighted total
    """
    per_level = {level: map_loss(pred, gt, cfg) for level, pred in outputs.by_level().items()}
    weights = level_weights(cfg)
    total = weighted_total({level: loss.total for level, loss in per_level.items()}, weights)
    return LossBreakdown(per_level=per_level, total=total, weights=weights)
