"""
Loop-based reference implementations of the saliency metrics.

Deliberately slow and literal: every count is an explicit pixel loop so the
vectorized versions in salient_detector.metrics can be checked against them.
"""

import math

import numpy as np

EPS = np.spacing(1)


def quantize(value: float) -> int:
    return int(min(255, max(0, np.round(value * 255.0))))


def mae(pred, gt) -> float:
    total = 0.0
    h, w = pred.shape
    for i in range(h):
        for j in range(w):
            total += abs(float(gt[i, j] > 0) - pred[i, j])
    return total / (h * w)


def _f(precision, recall, beta2=0.3):
    den = beta2 * precision + recall
    return (1 + beta2) * precision * recall / den if den > 0 else 0.0


def _counts(binary, gt):
    tp = fp = 0
    h, w = gt.shape
    for i in range(h):
        for j in range(w):
            if binary[i][j]:
                if gt[i, j] > 0:
                    tp += 1
                else:
                    fp += 1
    return tp, fp


def pr_curve(pred, gt, beta2=0.3):
    """(precision, recall, f) lists over thresholds 0..255, binarizing q >= t"""
    h, w = pred.shape
    q = [[quantize(pred[i, j]) for j in range(w)] for i in range(h)]
    num_fg = sum(1 for i in range(h) for j in range(w) if gt[i, j] > 0)
    precision, recall, f = [], [], []
    for t in range(256):
        binary = [[q[i][j] >= t for j in range(w)] for i in range(h)]
        tp, fp = _counts(binary, gt)
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / num_fg if num_fg > 0 else 0.0
        precision.append(p)
        recall.append(r)
        f.append(_f(p, r, beta2))
    return precision, recall, f


def adaptive_binary(pred):
    h, w = pred.shape
    mean = sum(pred[i, j] for i in range(h) for j in range(w)) / (h * w)
    thr = min(2 * mean, 1.0)
    return [[quantize(pred[i, j]) >= 255 * thr - 1e-9 for j in range(w)] for i in range(h)]


def adaptive_f(pred, gt, beta2=0.3):
    binary = adaptive_binary(pred)
    tp, fp = _counts(binary, gt)
    num_fg = int((gt > 0).sum())
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / num_fg if num_fg > 0 else 0.0
    return _f(p, r, beta2)


def _mean_std(values):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def _object(values):
    mean, std = _mean_std(values)
    return 2 * mean / (mean * mean + 1 + std + EPS)


def _ssim(pred_region, gt_region):
    values = [(p, g) for p, g in zip(pred_region, gt_region)]
    n = len(values)
    if n == 0:
        return 0.0
    x = sum(p for p, _ in values) / n
    y = sum(g for _, g in values) / n
    sx = sum((p - x) ** 2 for p, _ in values) / (n - 1 + 1e-20)
    sy = sum((g - y) ** 2 for _, g in values) / (n - 1 + 1e-20)
    sxy = sum((p - x) * (g - y) for p, g in values) / (n - 1 + 1e-20)
    alpha = 4 * x * y * sxy
    beta = (x * x + y * y) * (sx + sy)
    if alpha != 0:
        return alpha / (beta + EPS)
    if beta == 0:
        return 1.0
    return 0.0


def s_measure(pred, gt, alpha=0.5):
    h, w = pred.shape
    g = [[1.0 if gt[i, j] > 0 else 0.0 for j in range(w)] for i in range(h)]
    fg_count = sum(sum(row) for row in g)
    ratio = fg_count / (h * w)
    if ratio == 0:
        return 1.0 - sum(pred[i, j] for i in range(h) for j in range(w)) / (h * w)
    if ratio == 1:
        return sum(pred[i, j] for i in range(h) for j in range(w)) / (h * w)

    fg_vals = [pred[i, j] for i in range(h) for j in range(w) if g[i][j]]
    bg_vals = [1.0 - pred[i, j] for i in range(h) for j in range(w) if not g[i][j]]
    s_object = ratio * _object(fg_vals) + (1 - ratio) * _object(bg_vals)

    rows = [i for i in range(h) for j in range(w) if g[i][j]]
    cols = [j for i in range(h) for j in range(w) if g[i][j]]
    y = int(np.round(sum(rows) / len(rows))) + 1
    x = int(np.round(sum(cols) / len(cols))) + 1

    area = h * w
    weights = [x * y / area, y * (w - x) / area, (h - y) * x / area]
    weights.append(1 - sum(weights))
    regions = [
        (range(0, y), range(0, x)),
        (range(0, y), range(x, w)),
        (range(y, h), range(0, x)),
        (range(y, h), range(x, w)),
    ]
    s_region = 0.0
    for weight, (rs, cs) in zip(weights, regions):
        p_region = [pred[i, j] for i in rs for j in cs]
        g_region = [g[i][j] for i in rs for j in cs]
        s_region += weight * _ssim(p_region, g_region)

    score = alpha * s_object + (1 - alpha) * s_region
    return min(1.0, max(0.0, score))


def enhanced_alignment(binary, gt):
    h, w = gt.shape
    p = [[1.0 if binary[i][j] else 0.0 for j in range(w)] for i in range(h)]
    g = [[1.0 if gt[i, j] > 0 else 0.0 for j in range(w)] for i in range(h)]
    n = h * w
    fg = sum(sum(row) for row in g)
    if fg == 0:
        return sum(1 - p[i][j] for i in range(h) for j in range(w)) / n
    if fg == n:
        return sum(p[i][j] for i in range(h) for j in range(w)) / n
    mean_p = sum(sum(row) for row in p) / n
    mean_g = fg / n
    total = 0.0
    for i in range(h):
        for j in range(w):
            phi_p = p[i][j] - mean_p
            phi_g = g[i][j] - mean_g
            xi = 2 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + EPS)
            total += (xi + 1) ** 2 / 4
    return total / n


def e_measure(pred, gt):
    return enhanced_alignment(adaptive_binary(pred), gt)


def e_measure_at(pred, gt, t):
    h, w = pred.shape
    binary = [[quantize(pred[i, j]) >= t for j in range(w)] for i in range(h)]
    return enhanced_alignment(binary, gt)


def _gaussian(size=7, sigma=5.0):
    r = (size - 1) // 2
    kernel = [[math.exp(-(a * a + b * b) / (2 * sigma * sigma)) for b in range(-r, r + 1)] for a in range(-r, r + 1)]
    total = sum(sum(row) for row in kernel)
    return [[v / total for v in row] for row in kernel]


def weighted_f_measure(pred, gt, beta2=1.0):
    """
    Straight loop version. Foreground error values must be constant on the
    object (the nearest-object-pixel choice is then irrelevant).
    """
    h, w = pred.shape
    g = [[gt[i, j] > 0 for j in range(w)] for i in range(h)]
    fg_pixels = [(i, j) for i in range(h) for j in range(w) if g[i][j]]
    if not fg_pixels:
        return 0.0 if any(pred[i, j] > 0 for i in range(h) for j in range(w)) else 1.0

    error = [[abs(pred[i, j] - (1.0 if g[i][j] else 0.0)) for j in range(w)] for i in range(h)]
    dist = [[0.0] * w for _ in range(h)]
    dependent = [row[:] for row in error]
    for i in range(h):
        for j in range(w):
            if g[i][j]:
                continue
            best, best_pixel = None, None
            for a, b in fg_pixels:
                d = math.sqrt((i - a) ** 2 + (j - b) ** 2)
                if best is None or d < best:
                    best, best_pixel = d, (a, b)
            dist[i][j] = best
            dependent[i][j] = error[best_pixel[0]][best_pixel[1]]

    kernel = _gaussian()
    r = len(kernel) // 2
    smoothed = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for a in range(-r, r + 1):
                for b in range(-r, r + 1):
                    ii, jj = i + a, j + b
                    if 0 <= ii < h and 0 <= jj < w:
                        acc += kernel[a + r][b + r] * dependent[ii][jj]
            smoothed[i][j] = acc

    weighted_fg, weighted_bg = 0.0, 0.0
    for i in range(h):
        for j in range(w):
            e = error[i][j]
            if g[i][j]:
                if smoothed[i][j] < e:
                    e = smoothed[i][j]
                weighted_fg += e
            else:
                weighted_bg += e * (2 - math.exp(math.log(0.5) / 5 * dist[i][j]))

    n_fg = len(fg_pixels)
    tp = n_fg - weighted_fg
    recall = 1 - weighted_fg / n_fg
    precision = tp / (tp + weighted_bg + EPS)
    score = (1 + beta2) * recall * precision / (recall + beta2 * precision + EPS)
    return min(1.0, max(0.0, score))
