import unittest
from dataclasses import replace

import torch
import torch.nn as nn

from salient_detector.config import ModuleToggles, desk_profile
from salient_detector.losses import total_loss
from salient_detector.network import (
    ConcatDecoder,
    ConvBNReLU,
    ConvEncoder,
    DiverseReception,
    FeatureEnhancement,
    MultiscaleInteraction,
    SaliencyNet,
    build_model,
)
from tests.helpers import finite_difference_check, slow, tiny_model_config

ABLATION_TOGGLES = {
    "BASE": ModuleToggles(dr=False, msi=False, fe=False),
    "BASE+MSI": ModuleToggles(dr=False, msi=True, fe=False),
    "BASE+MSI+DR": ModuleToggles(dr=True, msi=True, fe=False),
    "BASE+MSI+DR+FE": ModuleToggles(),
}


def tiny_config(**changes):
    changes.setdefault("model", tiny_model_config())
    return replace(desk_profile(), **changes)


class TestSaliencyNet(unittest.TestCase):
    def test_384_shape_contract(self):
        model = build_model(tiny_config()).eval()
        with torch.no_grad():
            outputs = model(torch.rand(1, 3, 384, 384))
        for m in outputs.by_level().values():
            self.assertEqual(tuple(m.shape), (1, 1, 384, 384))
            self.assertGreater(float(m.min()), 0.0)
            self.assertLess(float(m.max()), 1.0)

    def test_every_ablation_variant_runs(self):
        image = torch.rand(2, 3, 64, 64)
        for label, toggles in ABLATION_TOGGLES.items():
            with self.subTest(variant=label):
                self.assertEqual(toggles.label(), label)
                model = build_model(tiny_config(module_toggles=toggles))
                outputs = model(image)
                self.assertEqual(tuple(outputs.m2.shape), (2, 1, 64, 64))
                loss = total_loss(outputs, (torch.rand(2, 1, 64, 64) > 0.5).float())
                loss.total.backward()

    def test_toggles_select_modules(self):
        base = build_model(tiny_config(module_toggles=ABLATION_TOGGLES["BASE"]))
        self.assertIsInstance(base.baseline, ConcatDecoder)
        self.assertFalse(hasattr(base, "interaction"))
        self.assertTrue(all(isinstance(r, ConvBNReLU) for r in base.reducers))
        self.assertIsInstance(base.top_enhance, nn.Identity)

        full = build_model(tiny_config())
        self.assertIsInstance(full.interaction, MultiscaleInteraction)
        self.assertTrue(all(isinstance(r, DiverseReception) for r in full.reducers))
        self.assertIsInstance(full.interaction.top_enhance, FeatureEnhancement)

    def test_shared_enhancement_parameters(self):
        separate = build_model(tiny_config())
        shared = build_model(tiny_config(model=replace(tiny_model_config(), fe_share_params=True)))
        self.assertIs(shared.interaction.top_enhance, shared.interaction.fd2_enhance)
        self.assertLess(
            sum(p.numel() for p in shared.parameters()),
            sum(p.numel() for p in separate.parameters()),
        )

    def test_features_skip_first_level(self):
        model = build_model(tiny_config()).eval()
        with torch.no_grad():
            _, features = model.forward_with_features(torch.rand(1, 3, 64, 64))
        self.assertEqual([tuple(f.shape[-2:]) for f in features["reduced"]], [(8, 8), (4, 4), (2, 2), (2, 2)])
        self.assertIn("msi", features)

    def test_same_seed_same_parameters(self):
        a = build_model(tiny_config(seed=5)).state_dict()
        b = build_model(tiny_config(seed=5)).state_dict()
        c = build_model(tiny_config(seed=6)).state_dict()
        self.assertTrue(all(torch.equal(a[k], b[k]) for k in a))
        self.assertFalse(all(torch.equal(a[k], c[k]) for k in a))

    def test_build_does_not_consume_global_rng(self):
        torch.manual_seed(0)
        expected = torch.rand(3)
        torch.manual_seed(0)
        build_model(tiny_config())
        self.assertTrue(torch.equal(torch.rand(3), expected))

    def test_architecture_fingerprint(self):
        arch = build_model(tiny_config(module_toggles=ABLATION_TOGGLES["BASE+MSI"])).architecture()
        self.assertEqual(arch["toggles"], {"dr": False, "msi": True, "fe": False})
        self.assertEqual(arch["encoder"], "ConvEncoder")
        self.assertEqual(arch["width"], 8)

    def test_custom_encoder(self):
        model = SaliencyNet(tiny_model_config(), encoder=ConvEncoder((4, 6, 6, 6, 6))).eval()
        with torch.no_grad():
            self.assertEqual(tuple(model(torch.rand(1, 3, 32, 32)).m2.shape), (1, 1, 32, 32))


class TestEndToEndGradient(unittest.TestCase):
    def test_input_gradient_matches_finite_differences(self):
        torch.manual_seed(0)
        model = build_model(tiny_config()).double().eval()
        gt = (torch.rand(1, 1, 32, 32) > 0.5).double()
        image = 0.1 + 0.8 * torch.rand(1, 3, 32, 32, dtype=torch.float64)
        err = finite_difference_check(lambda x: total_loss(model(x), gt).total, image, num_points=30)
        self.assertLess(err, 1e-3)

    @slow
    def test_full_width_gradient(self):
        torch.manual_seed(1)
        model = build_model(desk_profile()).double().eval()
        gt = (torch.rand(1, 1, 64, 64) > 0.5).double()
        image = 0.1 + 0.8 * torch.rand(1, 3, 64, 64, dtype=torch.float64)
        err = finite_difference_check(lambda x: total_loss(model(x), gt).total, image)
        self.assertLess(err, 1e-3)


if __name__ == "__main__":
    unittest.main()
