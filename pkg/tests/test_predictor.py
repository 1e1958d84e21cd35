import unittest

import numpy as np
import torch
from PIL import Image

from salient_detector.checkpoint import load_checkpoint, save_checkpoint
from salient_detector.dataset import read_image
from salient_detector.errors import DatasetError
from salient_detector.network import build_model
from salient_detector.predictor import predict_directory, predict_map, to_png_array
from tests.helpers import TempDirTestCase, tiny_train_config, write_gray_png


class TestPngConversion(unittest.TestCase):
    def test_rounding_and_clipping(self):
        pred = np.array([[0.0, 0.5, 1.0, 1.2], [-0.1, 1 / 255, 0.6 / 255, 0.4 / 255]])
        np.testing.assert_array_equal(to_png_array(pred), [[0, 128, 255, 255], [0, 1, 1, 0]])
        self.assertEqual(to_png_array(pred).dtype, np.uint8)


class TestPredictMap(unittest.TestCase):
    def test_output_matches_image_size(self):
        model = build_model(tiny_train_config())
        pred = predict_map(model, torch.rand(3, 40, 56), 64)
        self.assertEqual(pred.shape, (40, 56))
        self.assertEqual(pred.dtype, np.float64)
        self.assertTrue(((pred >= 0) & (pred <= 1)).all())
        self.assertFalse(model.training)


class TestPredictDirectory(TempDirTestCase):
    def setUp(self):
        super().setUp()
        self.data = self.make_dataset("data", n=3)
        cfg = tiny_train_config()
        self.ckpt_path = save_checkpoint(self.tmp / "model.pt", build_model(cfg), cfg, 1, 1)

    def test_png_equals_rounded_map(self):
        written, failures = predict_directory(self.ckpt_path, self.data / "images", self.tmp / "pred")
        self.assertEqual(failures, {})
        self.assertEqual([p.name for p in written], ["synth_00000.png", "synth_00001.png", "synth_00002.png"])

        ckpt = load_checkpoint(self.ckpt_path)
        for path in written:
            expected = to_png_array(predict_map(ckpt.model, read_image(self.data / "images" / path.name), 64))
            with Image.open(path) as image:
                self.assertEqual(image.mode, "L")
                np.testing.assert_array_equal(np.asarray(image), expected)

    def test_rerun_is_byte_identical(self):
        out = self.tmp / "pred"
        first, _ = predict_directory(self.ckpt_path, self.data / "images", out)
        before = {p.name: p.read_bytes() for p in first}
        second, _ = predict_directory(self.ckpt_path, self.data / "images", out)
        self.assertEqual({p.name: p.read_bytes() for p in second}, before)

    def test_corrupt_image_is_skipped(self):
        (self.data / "images" / "broken.png").write_bytes(b"nope")
        with self.assertLogs("salient_detector.predictor", level="ERROR"):
            written, failures = predict_directory(self.ckpt_path, self.data / "images", self.tmp / "pred")
        self.assertEqual(list(failures), ["broken"])
        self.assertEqual(len(written), 3)
        self.assertFalse((self.tmp / "pred" / "broken.png").exists())

    def test_grayscale_input_is_accepted(self):
        images = self.tmp / "gray"
        write_gray_png(images / "g.png", np.full((30, 20), 90))
        written, _ = predict_directory(self.ckpt_path, images, self.tmp / "pred")
        with Image.open(written[0]) as image:
            self.assertEqual(image.size, (20, 30))

    def test_empty_directory(self):
        (self.tmp / "empty").mkdir()
        with self.assertRaises(DatasetError):
            predict_directory(self.ckpt_path, self.tmp / "empty", self.tmp / "pred")


if __name__ == "__main__":
    unittest.main()
