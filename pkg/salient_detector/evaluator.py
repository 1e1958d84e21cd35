"""
Dataset evaluation - scores a directory of predicted maps against a directory
of ground-truth masks and aggregates the per-image metrics.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from PIL import Image

from .config import Config
from .errors import DatasetError
from .metrics import image_metrics
from .models import CurveSeries, ImageMetrics, MetricReport

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")
MASK_THRESHOLD = 128

PathLike = Union[str, Path]
PairResult = Tuple[ImageMetrics, CurveSeries]


def mask_array(image: Image.Image, source: str = "") -> np.ndarray:
    """Binary mask from any PIL image: first channel of color masks, foreground >= 128"""
    if image.mode in ("RGB", "RGBA", "LA", "CMYK"):
        logger.info("Mask %s has mode %s; using channel 0", source or "<memory>", image.mode)
        image = image.getchannel(0)
    elif image.mode != "L":
        image = image.convert("L")
    return np.asarray(image, dtype=np.uint8) >= MASK_THRESHOLD


def read_mask(path: PathLike) -> np.ndarray:
    with Image.open(path) as image:
        image.load()
        return mask_array(image, source=str(path))


def read_prediction(path: PathLike) -> np.ndarray:
    """8-bit grayscale saliency map scaled to [0, 1]"""
    with Image.open(path) as image:
        image.load()
        if image.mode != "L":
            image = image.convert("L")
        return np.asarray(image, dtype=np.float64) / 255.0


def list_images(directory: PathLike) -> Dict[str, Path]:
    """Map filename stem -> path for every image file in ``directory``"""
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"Directory not found: {directory}")
    return {
        path.stem: path
        for path in sorted(directory.iterdir())
        if path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS
    }


def match_pairs(pred_dir: PathLike, gt_dir: PathLike) -> Tuple[List[Tuple[str, Path, Path]], List[str]]:
    """
    Pair predictions and masks by filename stem.

    Returns:
        (sorted list of (stem, prediction path, mask path), sorted unmatched stems)
    """
    preds = list_images(pred_dir)
    gts = list_images(gt_dir)
    common = sorted(set(preds) & set(gts))
    missing = sorted(set(preds) ^ set(gts))
    for stem in missing:
        side = "ground truth" if stem in preds else "prediction"
        logger.warning("No %s for '%s'; skipped", side, stem)
    return [(stem, preds[stem], gts[stem]) for stem in common], missing


def evaluate_pair(stem: str, pred_path: PathLike, gt_path: PathLike) -> PairResult:
    pred = read_prediction(pred_path)
    gt = read_mask(gt_path)
    return image_metrics(pred, gt, name=stem)


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else 0.0


def aggregate(
    results: List[PairResult],
    dataset: str = "",
    failures: Optional[Dict[str, str]] = None,
    missing: Optional[List[str]] = None,
) -> Tuple[MetricReport, CurveSeries]:
    """
    Dataset means of per-image metrics and the mean curves.

    Images with an empty mask have no recall, so they are left out of the
    recall, F curve and adaptive F means. Dataset max-E is the maximum of
    the mean E curve. Dataset max-F is the best of the mean F curve and the
    mean adaptive F, which keeps f_beta_max >= f_beta_adaptive.
    """
    results = sorted(results, key=lambda item: item[0].name)
    per_image = [metrics for metrics, _ in results]
    curves = [curve for _, curve in results]

    if curves:
        precision = np.mean([c.precision for c in curves], axis=0)
        with_fg = [c for c in curves if not c.gt_empty]
        recall = np.mean([c.recall for c in with_fg], axis=0) if with_fg else np.zeros(256)
        f_curve = np.mean([c.f_beta for c in with_fg], axis=0) if with_fg else np.zeros(256)
        e_curve = np.mean([c.e_measure for c in curves], axis=0)
    else:
        precision = recall = f_curve = e_curve = np.zeros(256)
    mean_curve = CurveSeries(precision=precision, recall=recall, f_beta=f_curve, e_measure=e_curve)
    f_adaptive = _mean([m.f_beta_adaptive for m in per_image if not m.gt_empty])

    report = MetricReport(
        dataset=dataset,
        mae=_mean([m.mae for m in per_image]),
        f_beta_max=max(float(f_curve.max()), f_adaptive),
        f_beta_adaptive=f_adaptive,
        f_beta_mean=float(f_curve.mean()),
        weighted_f=_mean([m.weighted_f for m in per_image]),
        s_measure=_mean([m.s_measure for m in per_image]),
        e_measure=_mean([m.e_measure for m in per_image]),
        e_measure_mean=float(e_curve.mean()),
        e_measure_max=float(e_curve.max()),
        breakeven=mean_curve.breakeven() if curves else 0.0,
        num_images=len(per_image),
        per_image=per_image,
        failures=dict(sorted((failures or {}).items())),
        missing=sorted(missing or []),
    )
    return report, mean_curve


def evaluate_arrays(
    preds: Mapping[str, np.ndarray],
    gts: Mapping[str, np.ndarray],
    dataset: str = "",
) -> Tuple[MetricReport, CurveSeries]:
    """Score in-memory prediction/mask pairs keyed by sample id"""
    results = []
    failures = {}
    for name in sorted(set(preds) & set(gts)):
        try:
            results.append(image_metrics(preds[name], gts[name], name=name))
        except ValueError as e:
            failures[name] = str(e)
    missing = sorted(set(preds) ^ set(gts))
    return aggregate(results, dataset, failures, missing)


def evaluate_dataset(
    pred_dir: PathLike,
    gt_dir: PathLike,
    dataset: Optional[str] = None,
    workers: Optional[int] = None,
) -> Tuple[MetricReport, CurveSeries]:
    """
    Evaluate every matching pair of two directories.

    Args:
        pred_dir: Directory of 8-bit predicted maps
        gt_dir: Directory of 8-bit masks (foreground >= 128)
        dataset: Name stored in the report (defaults to the mask directory name)
        workers: Thread count for per-image scoring

    Returns:
        (MetricReport, mean CurveSeries); unreadable or mismatched pairs are
        listed in ``report.failures``, unmatched stems in ``report.missing``
    """
    pairs, missing = match_pairs(pred_dir, gt_dir)
    dataset = dataset or Path(gt_dir).name
    workers = workers or Config.EVAL_WORKERS

    results: List[PairResult] = []
    failures: Dict[str, str] = {}

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(evaluate_pair, stem, pred_path, gt_path): stem
            for stem, pred_path, gt_path in pairs
        }
        for future in as_completed(futures):
            stem = futures[future]
            try:
                results.append(future.result())
            except Exception as e:
                logger.error("Failed to score '%s': %s", stem, e)
                failures[stem] = str(e)

    if not results and not failures:
        raise DatasetError(f"No matching prediction/mask pairs in {pred_dir} and {gt_dir}")

    logger.info("Scored %d pairs of '%s' (%d failed, %d unmatched)", len(results), dataset, len(failures), len(missing))
    return aggregate(results, dataset, failures, missing)


def evaluate_many(
    datasets: Mapping[str, Tuple[PathLike, PathLike]],
    workers: Optional[int] = None,
) -> Dict[str, Tuple[MetricReport, CurveSeries]]:
    """Evaluate several named datasets, e.g. benchmark sets or sub-attribute folders"""
    return {
        name: evaluate_dataset(pred_dir, gt_dir, dataset=name, workers=workers)
        for name, (pred_dir, gt_dir) in sorted(datasets.items())
    }


def save_report(report: MetricReport, curve: CurveSeries, out_dir: PathLike) -> Tuple[Path, Path]:
    """Write ``report.json`` and the 256-row ``curves.csv``"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    curve_path = out_dir / "curves.csv"
    report_path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    curve.to_frame().to_csv(curve_path, index=False)
    return report_path, curve_path


def load_report(path: PathLike) -> MetricReport:
    with open(path, "r", encoding="utf-8") as f:
        return MetricReport.from_dict(json.load(f))
