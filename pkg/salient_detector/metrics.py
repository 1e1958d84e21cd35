"""
Saliency metrics - MAE, precision/recall and F-measure curves, weighted
F-measure, structure measure and enhanced-alignment measure.

Every function takes a prediction in [0, 1] and a ground-truth mask (any
array that is nonzero on the object), both 2-D with the same shape.
Curves are computed on the 8-bit map q = round(255 * P), binarized as q >= t.
"""

from typing import Tuple

import numpy as np
from scipy.ndimage import convolve, distance_transform_edt

from .errors import ShapeError
from .models import CurveSeries, ImageMetrics

_EPS = np.spacing(1)
BETA2_F = 0.3
BETA2_WEIGHTED = 1.0
NUM_THRESHOLDS = 256


def prepare(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Squeeze to 2-D, check shapes, return (float64 prediction, bool mask)"""
    pred = np.asarray(pred, dtype=np.float64).squeeze()
    gt = np.asarray(gt).squeeze()
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    if pred.ndim != 2:
        raise ShapeError(f"expected 2-D maps, got {pred.ndim}-D")
    return pred, gt > 0


def quantize(pred: np.ndarray) -> np.ndarray:
    """Map [0, 1] predictions to integer levels 0..255"""
    return np.clip(np.round(pred * 255.0), 0, 255).astype(np.int64)


def adaptive_threshold(pred: np.ndarray) -> float:
    """Twice the mean saliency, capped at 1"""
    return float(min(2.0 * np.mean(pred), 1.0))


def adaptive_index(pred: np.ndarray) -> int:
    """Curve threshold t equivalent to binarizing q >= 255 * adaptive_threshold"""
    return int(min(255, np.ceil(255.0 * adaptive_threshold(pred) - 1e-9)))


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = prepare(pred, gt)
    return float(np.mean(np.abs(gt.astype(np.float64) - pred)))


def _threshold_counts(q: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """True and false positives of q >= t for every t in 0..255"""
    fg_hist = np.bincount(q[gt], minlength=NUM_THRESHOLDS)
    bg_hist = np.bincount(q[~gt], minlength=NUM_THRESHOLDS)
    tp = np.cumsum(fg_hist[::-1])[::-1]
    fp = np.cumsum(bg_hist[::-1])[::-1]
    return tp.astype(np.float64), fp.astype(np.float64)


def f_beta(precision, recall, beta2: float = BETA2_F):
    precision = np.asarray(precision, dtype=np.float64)
    recall = np.asarray(recall, dtype=np.float64)
    num = (1.0 + beta2) * precision * recall
    den = beta2 * precision + recall
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def pr_curve(pred: np.ndarray, gt: np.ndarray, beta2: float = BETA2_F) -> CurveSeries:
    """
    Precision, recall and F-measure for the 256 thresholds.

    An empty ground truth leaves recall undefined: it is reported as 0 and the
    series is flagged ``gt_empty`` so dataset means can skip it.
    """
    pred, gt = prepare(pred, gt)
    tp, fp = _threshold_counts(quantize(pred), gt)
    positives = tp + fp
    precision = np.divide(tp, positives, out=np.zeros_like(tp), where=positives > 0)

    num_fg = float(gt.sum())
    recall = tp / num_fg if num_fg > 0 else np.zeros_like(tp)

    return CurveSeries(
        precision=precision,
        recall=recall,
        f_beta=f_beta(precision, recall, beta2),
        gt_empty=num_fg == 0,
    )


def f_measure(pred: np.ndarray, gt: np.ndarray, beta2: float = BETA2_F) -> Tuple[float, float]:
    """(max F over the curve, F at the adaptive threshold)"""
    curve = pr_curve(pred, gt, beta2)
    pred, _ = prepare(pred, gt)
    return float(curve.f_beta.max()), float(curve.f_beta[adaptive_index(pred)])


def _matlab_gaussian(size: int = 7, sigma: float = 5.0) -> np.ndarray:
    """Equivalent of MATLAB fspecial('gaussian', size, sigma)"""
    radius = (size - 1) / 2.0
    y, x = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    kernel[kernel < np.finfo(kernel.dtype).eps * kernel.max()] = 0
    total = kernel.sum()
    return kernel / total if total != 0 else kernel


def weighted_f_measure(pred: np.ndarray, gt: np.ndarray, beta2: float = BETA2_WEIGHTED) -> float:
    """
    Weighted F-measure: errors on the object are smoothed by a Gaussian over
    their dependency neighbourhood, background errors are weighted up near
    the object (distance decay with half-life 5 px).

    An all-background mask scores 1 for an all-zero prediction, 0 otherwise.
    """
    pred, gt = prepare(pred, gt)
    if not gt.any():
        return 0.0 if np.any(pred > 0) else 1.0

    background = ~gt
    error = np.abs(pred - gt)

    # distance of every background pixel to its nearest object pixel
    dist, (rows, cols) = distance_transform_edt(background, return_indices=True)
    dependent = error.copy()
    dependent[background] = error[rows[background], cols[background]]

    smoothed = convolve(dependent, weights=_matlab_gaussian(7, 5.0), mode="constant", cval=0.0)
    min_error = np.where(gt & (smoothed < error), smoothed, error)

    importance = np.where(gt, 1.0, 2.0 - np.exp(np.log(0.5) / 5.0 * dist))
    weighted_error = min_error * importance

    tp_w = gt.sum() - weighted_error[gt].sum()
    fp_w = weighted_error[background].sum()
    recall = 1.0 - weighted_error[gt].mean()
    precision = tp_w / (tp_w + fp_w + _EPS)
    score = (1.0 + beta2) * recall * precision / (recall + beta2 * precision + _EPS)
    return float(np.clip(score, 0.0, 1.0))


def _object_similarity(values: np.ndarray) -> float:
    mean = values.mean()
    return 2.0 * mean / (mean * mean + 1.0 + values.std() + _EPS)


def _object_score(pred: np.ndarray, gt: np.ndarray) -> float:
    u = gt.mean()
    fg = _object_similarity(pred[gt])
    bg = _object_similarity(1.0 - pred[~gt])
    return u * fg + (1.0 - u) * bg


def _centroid(gt: np.ndarray) -> Tuple[int, int]:
    """1-based (x, y) split point: the rounded object centroid plus one"""
    height, width = gt.shape
    if not gt.any():
        return int(np.round(width / 2)) + 1, int(np.round(height / 2)) + 1
    y, x = np.argwhere(gt).mean(axis=0).round()
    return int(x) + 1, int(y) + 1


def _region_ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        return 0.0
    gt = gt.astype(np.float64)
    x, y = pred.mean(), gt.mean()
    sigma_x = np.sum((pred - x) ** 2) / (n - 1 + 1e-20)
    sigma_y = np.sum((gt - y) ** 2) / (n - 1 + 1e-20)
    sigma_xy = np.sum((pred - x) * (gt - y)) / (n - 1 + 1e-20)

    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0:
        return alpha / (beta + _EPS)
    if beta == 0:
        return 1.0
    return 0.0


def _region_score(pred: np.ndarray, gt: np.ndarray) -> float:
    height, width = gt.shape
    area = height * width
    x, y = _centroid(gt)

    w1 = x * y / area
    w2 = y * (width - x) / area
    w3 = (height - y) * x / area
    w4 = 1.0 - w1 - w2 - w3
    quadrants = [
        (slice(0, y), slice(0, x), w1),
        (slice(0, y), slice(x, width), w2),
        (slice(y, height), slice(0, x), w3),
        (slice(y, height), slice(x, width), w4),
    ]
    return sum(w * _region_ssim(pred[rs, cs], gt[rs, cs]) for rs, cs, w in quadrants)


def s_measure(pred: np.ndarray, gt: np.ndarray, alpha: float = 0.5) -> float:
    """Structure measure: alpha * object-aware + (1 - alpha) * region-aware similarity"""
    pred, gt = prepare(pred, gt)
    fg_ratio = gt.mean()
    if fg_ratio == 0:
        score = 1.0 - pred.mean()
    elif fg_ratio == 1:
        score = pred.mean()
    else:
        score = alpha * _object_score(pred, gt) + (1.0 - alpha) * _region_score(pred, gt)
    return float(np.clip(score, 0.0, 1.0))


def _enhanced_alignment(binary: np.ndarray, gt: np.ndarray) -> float:
    if not gt.any():
        enhanced = 1.0 - binary
    elif gt.all():
        enhanced = binary.astype(np.float64)
    else:
        phi_p = binary - binary.mean()
        phi_g = gt - gt.mean()
        align = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + _EPS)
        enhanced = (align + 1.0) ** 2 / 4.0
    return float(np.mean(enhanced))


def e_measure(pred: np.ndarray, gt: np.ndarray) -> float:
    """Enhanced-alignment measure of the prediction binarized at the adaptive threshold"""
    pred, gt = prepare(pred, gt)
    binary = (quantize(pred) >= adaptive_index(pred)).astype(np.float64)
    return _enhanced_alignment(binary, gt.astype(np.float64))


def e_measure_curve(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """
    Enhanced-alignment measure for every threshold 0..255.

    A binarized map takes only four (prediction, mask) value combinations,
    so each threshold reduces to four alignment terms weighted by their counts.
    """
    pred, gt = prepare(pred, gt)
    n = float(gt.size)
    tp, fp = _threshold_counts(quantize(pred), gt)
    num_fg = float(gt.sum())
    positives = tp + fp

    if num_fg == 0:
        return (n - positives) / n
    if num_fg == n:
        return positives / n

    mean_p = positives / n
    mean_g = num_fg / n
    counts = {
        (1.0, 1.0): tp,
        (1.0, 0.0): fp,
        (0.0, 1.0): num_fg - tp,
        (0.0, 0.0): (n - num_fg) - fp,
    }
    total = np.zeros(NUM_THRESHOLDS)
    for (p_value, g_value), count in counts.items():
        phi_p = p_value - mean_p
        phi_g = g_value - mean_g
        align = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + _EPS)
        total += count * (align + 1.0) ** 2 / 4.0
    return total / n


def image_metrics(pred: np.ndarray, gt: np.ndarray, name: str = "") -> Tuple[ImageMetrics, CurveSeries]:
    """All metrics of one pair plus its PR/F curve"""
    pred, gt = prepare(pred, gt)
    curve = pr_curve(pred, gt)
    em_curve = e_measure_curve(pred, gt)
    curve.e_measure = em_curve
    metrics = ImageMetrics(
        name=name,
        mae=mae(pred, gt),
        f_beta_max=float(curve.f_beta.max()),
        f_beta_adaptive=float(curve.f_beta[adaptive_index(pred)]),
        f_beta_mean=float(curve.f_beta.mean()),
        weighted_f=weighted_f_measure(pred, gt),
        s_measure=s_measure(pred, gt),
        e_measure=e_measure(pred, gt),
        e_measure_mean=float(em_curve.mean()),
        e_measure_max=float(em_curve.max()),
        gt_empty=curve.gt_empty,
    )
    return metrics, curve
