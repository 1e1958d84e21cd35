"""
Shared test utilities: finite-difference gradient checks, temporary
synthetic datasets and small configs.
"""

import os
import shutil
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import torch

from salient_detector.config import AugmentConfig, ModelConfig, TrainConfig, desk_profile
from salient_detector.synthetic import generate_synthetic

RUN_SLOW = os.getenv("SALIENT_RUN_SLOW", "") == "1"
slow = unittest.skipUnless(RUN_SLOW, "set SALIENT_RUN_SLOW=1 to run acceptance tests")


def finite_difference_check(
    func: Callable[[torch.Tensor], torch.Tensor],
    x: torch.Tensor,
    num_points: int = 100,
    h: float = 1e-6,
    seed: int = 0,
    kink_tol: float = 1e-2,
    max_tries: int = 2000,
) -> float:
    """
    Max relative error between autograd and central differences at random
    entries of ``x`` (float64).

    Entries where the forward and backward one-sided differences disagree by
    more than ``kink_tol`` sit next to a relu/clamp/max kink and are skipped.
    """
    x = x.detach().double().clone().requires_grad_(True)
    out = func(x)
    (grad,) = torch.autograd.grad(out, x)
    grad = grad.detach()

    rng = np.random.default_rng(seed)
    flat = x.detach().view(-1)
    base = float(out.detach())
    worst, checked, tries = 0.0, 0, 0
    while checked < num_points and tries < max_tries:
        tries += 1
        index = int(rng.integers(flat.numel()))
        with torch.no_grad():
            plus, minus = flat.clone(), flat.clone()
            plus[index] += h
            minus[index] -= h
            f_plus = float(func(plus.view_as(x)))
            f_minus = float(func(minus.view_as(x)))
        forward = (f_plus - base) / h
        backward = (base - f_minus) / h
        if abs(forward - backward) > kink_tol * max(abs(forward), abs(backward), 1e-4):
            continue
        numeric = (f_plus - f_minus) / (2 * h)
        analytic = float(grad.view(-1)[index])
        denom = max(abs(numeric), abs(analytic), 1e-5)
        worst = max(worst, abs(numeric - analytic) / denom)
        checked += 1
    if checked < num_points:
        raise AssertionError(f"only {checked} kink-free points found")
    return worst


def random_mask(rng: np.random.Generator, shape, fraction: float = 0.4) -> np.ndarray:
    return (rng.random(shape) < fraction).astype(np.float64)


def tiny_model_config(width: int = 8) -> ModelConfig:
    return ModelConfig(encoder_channels=(4, 8, 8, 8, 8), width=width, reception_kernels=(3, 7, 11))


def tiny_train_config(epochs: int = 2, **changes) -> TrainConfig:
    """Desk profile shrunk for unit tests: 64x64 inputs, tiny widths"""
    base = replace(
        desk_profile(),
        epochs=epochs,
        batch_size=4,
        eval_every=0,
        model=ModelConfig(encoder_channels=(4, 8, 8, 16, 16), width=8),
        augment=AugmentConfig(enabled=False),
    )
    return replace(base, **changes) if changes else base


class TempDirTestCase(unittest.TestCase):
    """Test case with a fresh temporary directory in ``self.tmp``"""

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.mkdtemp(prefix="salient-test-")
        self.tmp = Path(self._tmp)

    def tearDown(self):
        shutil.rmtree(self._tmp, ignore_errors=True)
        super().tearDown()

    def make_dataset(self, name: str = "data", n: int = 8, size: int = 64, seed: int = 0) -> Path:
        root = self.tmp / name
        generate_synthetic(n, size, seed, root)
        return root


def write_gray_png(path: Path, array: np.ndarray, mode: Optional[str] = None) -> Path:
    from PIL import Image

    path.parent.mkdir(parents=True, exist_ok=True)
    image = Image.fromarray(array.astype(np.uint8))
    if mode:
        image = image.convert(mode)
    image.save(path)
    return path
