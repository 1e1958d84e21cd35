import math
import unittest

import numpy as np
import torch

from salient_detector.config import LossConfig
from salient_detector.errors import ConfigError, ShapeError
from salient_detector.losses import (
    bce_loss,
    boundary_loss,
    extract_boundary,
    iou_loss,
    total_loss,
    weighted_total,
)
from salient_detector.models import SaliencyOutputs
from tests.helpers import finite_difference_check


def as_map(array) -> torch.Tensor:
    return torch.as_tensor(np.asarray(array, dtype=np.float64))[None, None]


def random_binary(rng, size=8, fraction=0.4) -> torch.Tensor:
    return as_map(rng.random((size, size)) < fraction)


class TestBCE(unittest.TestCase):
    def test_perfect_prediction_is_near_zero(self):
        rng = np.random.default_rng(0)
        gt = random_binary(rng)
        self.assertLess(float(bce_loss(gt.clamp(1e-7, 1 - 1e-7), gt)), 1e-6)

    def test_half_prediction_is_ln2(self):
        gt = random_binary(np.random.default_rng(1))
        self.assertAlmostEqual(float(bce_loss(torch.full_like(gt, 0.5), gt)), math.log(2), places=12)

    def test_hand_example(self):
        pred = as_map([[0.9, 0.1], [0.9, 0.1]])
        gt = as_map([[1, 0], [1, 0]])
        self.assertAlmostEqual(float(bce_loss(pred, gt)), -math.log(0.9), places=12)
        self.assertAlmostEqual(float(bce_loss(pred, gt)), 0.105361, places=6)

    def test_rejects_soft_mask_and_shape_mismatch(self):
        with self.assertRaises(ValueError):
            bce_loss(torch.full((1, 1, 2, 2), 0.5), torch.full((1, 1, 2, 2), 0.3))
        with self.assertRaises(ShapeError):
            bce_loss(torch.zeros(1, 1, 2, 2), torch.zeros(1, 1, 2, 3))


class TestIoU(unittest.TestCase):
    def test_identity_is_exactly_zero(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            gt = random_binary(rng)
            self.assertEqual(float(iou_loss(gt, gt)), 0.0)

    def test_no_overlap_is_one(self):
        gt = torch.ones(1, 1, 4, 4)
        self.assertEqual(float(iou_loss(torch.zeros_like(gt), gt)), 1.0)

    def test_single_pixel_example(self):
        self.assertAlmostEqual(float(iou_loss(as_map([[0.5]]), as_map([[1.0]]))), 0.5, places=12)

    def test_empty_pair_is_zero(self):
        zeros = torch.zeros(1, 1, 4, 4)
        self.assertEqual(float(iou_loss(zeros, zeros)), 0.0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        pred = as_map(rng.random((6, 6)))
        gt = random_binary(rng, 6)
        perm = torch.as_tensor(rng.permutation(36))
        shuffled_pred = pred.view(-1)[perm].view_as(pred)
        shuffled_gt = gt.view(-1)[perm].view_as(gt)
        self.assertAlmostEqual(float(iou_loss(pred, gt)), float(iou_loss(shuffled_pred, shuffled_gt)), places=12)


class TestExtractBoundary(unittest.TestCase):
    def test_constant_maps_have_no_boundary(self):
        for value in (0.0, 1.0):
            boundary = extract_boundary(torch.full((1, 1, 5, 5), value))
            self.assertEqual(float(boundary.abs().max()), 0.0)

    def test_square_ring(self):
        mask = torch.zeros(1, 1, 5, 5)
        mask[..., 1:4, 1:4] = 1
        boundary = extract_boundary(mask, 3)[0, 0]
        expected = torch.zeros(5, 5)
        expected[1:4, 1:4] = 1
        expected[2, 2] = 0
        self.assertTrue(torch.equal(boundary, expected))

    def test_soft_single_pixel(self):
        mask = torch.zeros(1, 1, 5, 5, dtype=torch.float64)
        mask[..., 2, 2] = 0.6
        boundary = extract_boundary(mask, 3)[0, 0]
        # the pooled complement is 1 everywhere, so only the pixel itself differs
        self.assertAlmostEqual(float(boundary[2, 2]), 0.6, places=12)
        boundary[2, 2] = 0
        self.assertEqual(float(boundary.abs().max()), 0.0)

    def test_even_kernel_rejected(self):
        with self.assertRaises(ConfigError):
            extract_boundary(torch.zeros(1, 1, 4, 4), 4)


class TestBoundaryLoss(unittest.TestCase):
    def test_identity_is_exactly_zero(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            gt = random_binary(rng)
            self.assertEqual(float(boundary_loss(gt, gt)), 0.0)

    def test_disjoint_boundaries_give_one(self):
        pred = torch.zeros(1, 1, 10, 10)
        gt = torch.zeros(1, 1, 10, 10)
        pred[..., 1:3, 1:3] = 1
        gt[..., 6:9, 6:9] = 1
        self.assertEqual(float(boundary_loss(pred, gt)), 1.0)

    def test_both_empty_is_zero(self):
        zeros = torch.zeros(1, 1, 6, 6)
        self.assertEqual(float(boundary_loss(zeros, zeros)), 0.0)

    def test_shifted_square_matches_brute_force(self):
        gt = np.zeros((7, 7))
        gt[2:5, 2:5] = 1
        pred = np.zeros((7, 7))
        pred[2:5, 3:6] = 1

        def ring(mask):
            out = np.zeros_like(mask)
            for i in range(7):
                for j in range(7):
                    if mask[i, j]:
                        window = [mask[a, b] if 0 <= a < 7 and 0 <= b < 7 else 1.0
                                  for a in range(i - 1, i + 2) for b in range(j - 1, j + 2)]
                        out[i, j] = 1.0 if min(window) == 0 else 0.0
            return out

        pb, gb = ring(pred), ring(gt)
        overlap = (pb * gb).sum()
        precision, recall = overlap / pb.sum(), overlap / gb.sum()
        expected = 1 - 2 * precision * recall / (precision + recall)
        self.assertAlmostEqual(float(boundary_loss(as_map(pred), as_map(gt))), expected, places=12)

    def test_symmetric_for_binary_inputs(self):
        rng = np.random.default_rng(5)
        a, b = random_binary(rng), random_binary(rng)
        self.assertAlmostEqual(float(boundary_loss(a, b)), float(boundary_loss(b, a)), places=12)

    def test_tolerance_one_is_pixel_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a, b = random_binary(rng), random_binary(rng)
            self.assertEqual(float(boundary_loss(a, b, tolerance=1)), float(boundary_loss(a, b)))

    def test_tolerance_forgives_one_pixel_shift(self):
        gt = torch.zeros(1, 1, 7, 7, dtype=torch.float64)
        pred = torch.zeros_like(gt)
        gt[..., 2:5, 2:5] = 1
        pred[..., 2:5, 3:6] = 1
        self.assertGreater(float(boundary_loss(pred, gt)), 0.3)
        self.assertEqual(float(boundary_loss(pred, gt, tolerance=3)), 0.0)

    def test_wider_tolerance_never_raises_loss(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            a, b = random_binary(rng), random_binary(rng)
            exact = float(boundary_loss(a, b))
            loose = float(boundary_loss(a, b, tolerance=3))
            self.assertLessEqual(loose, exact + 1e-12)
            self.assertAlmostEqual(loose, float(boundary_loss(b, a, tolerance=3)), places=12)
            self.assertEqual(float(boundary_loss(a, a, tolerance=5)), 0.0)

    def test_even_tolerance_rejected(self):
        zeros = torch.zeros(1, 1, 6, 6)
        with self.assertRaises(ConfigError):
            boundary_loss(zeros, zeros, tolerance=2)
        with self.assertRaises(ConfigError):
            LossConfig(boundary_tolerance=4)


class TestGradients(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(6)
        self.gt = random_binary(rng, 6, 0.5)
        self.pred = as_map(rng.uniform(0.05, 0.95, size=(6, 6)))

    def test_bce_gradient(self):
        err = finite_difference_check(lambda p: bce_loss(p, self.gt), self.pred)
        self.assertLess(err, 1e-3)

    def test_iou_gradient(self):
        err = finite_difference_check(lambda p: iou_loss(p, self.gt), self.pred)
        self.assertLess(err, 1e-3)

    def test_boundary_gradient(self):
        err = finite_difference_check(lambda p: boundary_loss(p, self.gt), self.pred)
        self.assertLess(err, 1e-3)


def outputs_from(maps) -> SaliencyOutputs:
    return SaliencyOutputs(*maps)


class TestTotalLoss(unittest.TestCase):
    def test_weights(self):
        self.assertAlmostEqual(weighted_total({2: 0.8, 3: 0.4, 4: 0.4, 5: 0.8}), 1.2, places=12)
        self.assertAlmostEqual(weighted_total({2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0}), 1.875, places=12)

    def test_total_is_weighted_sum_of_levels(self):
        rng = np.random.default_rng(7)
        gt = random_binary(rng)
        maps = [as_map(rng.uniform(0.01, 0.99, size=(8, 8))) for _ in range(4)]
        breakdown = total_loss(outputs_from(maps), gt)
        expected = sum(
            w * float(breakdown.per_level[level].total)
            for level, w in zip((2, 3, 4, 5), (1.0, 0.5, 0.25, 0.125))
        )
        self.assertAlmostEqual(float(breakdown.total), expected, delta=1e-12)
        self.assertTrue(breakdown.is_finite())

    def test_equal_levels(self):
        rng = np.random.default_rng(8)
        gt = random_binary(rng)
        pred = as_map(rng.uniform(0.01, 0.99, size=(8, 8)))
        breakdown = total_loss(outputs_from([pred] * 4), gt)
        self.assertAlmostEqual(float(breakdown.total), 1.875 * float(breakdown.per_level[2].total), places=12)

    def test_perfect_maps_near_zero(self):
        gt = random_binary(np.random.default_rng(9))
        clamped = gt.clamp(1e-7, 1 - 1e-7)
        self.assertLess(float(total_loss(outputs_from([clamped] * 4), gt).total), 1e-5)

    def test_disabled_terms_absent(self):
        gt = random_binary(np.random.default_rng(10))
        pred = torch.full_like(gt, 0.5)
        breakdown = total_loss(outputs_from([pred] * 4), gt, LossConfig(terms=("bce",)))
        record = breakdown.to_record()
        self.assertEqual(set(record["levels"]["2"]) - {"sum", "weight"}, {"bce"})

    def test_nonnegative_on_extreme_masks(self):
        for gt in (torch.zeros(1, 1, 6, 6), torch.ones(1, 1, 6, 6)):
            for pred in (torch.zeros_like(gt), torch.ones_like(gt), torch.full_like(gt, 0.3)):
                breakdown = total_loss(outputs_from([pred] * 4), gt)
                self.assertTrue(breakdown.is_finite())
                for loss in breakdown.per_level.values():
                    for value in loss.terms().values():
                        self.assertGreaterEqual(value, 0.0)


if __name__ == "__main__":
    unittest.main()
