"""Built-in quick acceptance checks, one pass/fail line per criterion.

A compact subset of the full pytest acceptance suite, suitable for the
`aglnet selftest` CLI command: shape/channel ledgers, cue identities,
metric anchors, ablation wiring, and seed determinism.
"""

import numpy as np
import torch

from . import cues, metrics
from .config import TrainConfig
from .data import CODDataset, synthetic_sample
from .model import AGLNet
from .train import build_model, seed_everything, total_loss


def _check(name, fn):
    try:
        fn()
        print(f"PASS  {name}")
        return True
    except Exception as exc:  # noqa: BLE001 - report and continue
        print(f"FAIL  {name}: {exc}")
        return False


def _shapes():
    for c, size in ((4, 64), (8, 96)):
        torch.manual_seed(0)
        model = AGLNet(backbone_id="tiny", channels=c)
        out = model(torch.rand(1, 3, size, size))
        assert out["r_s"].shape == (1, 1, size // 8, size // 8)
        assert out["r_4"].shape == (1, 1, size // 8, size // 8)
        for key, k in (("r_3", 32), ("r_2", 16), ("r_1", 8)):
            assert out[key].shape == (1, 1, size // k, size // k), key


def _cue_identities():
    rng = np.random.default_rng(0)
    image = rng.random((32, 32, 3))
    mask = np.zeros((32, 32), dtype=np.uint8)
    mask[11:21, 11:21] = 1
    assert cues.boundary_from_mask(mask).data.sum() == 36
    flat = np.full((32, 32, 3), 0.5)
    assert cues.canny_label(flat, np.ones((32, 32), dtype=np.uint8)).data.sum() == 0
    coeffs = cues.block_dct2(image)
    assert np.allclose(np.square(coeffs).sum(), np.square(image).sum(), rtol=1e-9)
    assert np.abs(cues.block_idct2(coeffs) - image).max() < 1e-9


def _metric_anchors():
    gt = np.zeros((16, 16), dtype=np.uint8)
    gt[4:12, 5:11] = 1
    perfect = gt.astype(np.float64)
    assert abs(metrics.s_measure(perfect, gt) - 1.0) < 1e-6
    assert abs(metrics.weighted_f(perfect, gt) - 1.0) < 1e-6
    assert abs(metrics.mean_f(perfect, gt) - 1.0) < 1e-6
    assert abs(metrics.e_measure(perfect, gt) - 1.0) < 1e-6
    assert metrics.mae(perfect, gt) == 0.0
    assert metrics.mae(1.0 - perfect, gt) == 1.0


def _ablation_wiring():
    switches = [
        dict(hfc_combination_enabled=False, hfc_decoupling_enabled=False, rd_enabled=False, aig_enabled=False),
        dict(hfc_decoupling_enabled=False, rd_enabled=False, aig_enabled=False),
        dict(rd_enabled=False, aig_enabled=False),
        dict(aig_enabled=False),
        dict(),
    ]
    images = torch.rand(2, 3, 64, 64)
    masks = (torch.rand(2, 1, 64, 64) > 0.5).float()
    cue = torch.rand(2, 1, 64, 64)
    for kwargs in switches:
        cfg = TrainConfig.desk_preset(**kwargs)
        model = build_model(cfg)
        preds = model(images)
        loss = total_loss(preds, masks, cue if cfg.aig_enabled else None)
        assert torch.isfinite(loss.total)


def _determinism():
    def step0_loss():
        seed_everything(7)
        cfg = TrainConfig.desk_preset(seed=7)
        model = build_model(cfg)
        rng = np.random.default_rng(1)
        image, mask = synthetic_sample(rng, 64)
        images = torch.from_numpy(image.transpose(2, 0, 1)).float()[None]
        masks = torch.from_numpy(mask[None, None].astype(np.float32))
        return float(total_loss(model(images), masks, masks).total.detach())

    assert step0_loss() == step0_loss()


def run_selftest():
    checks = [
        ("shape and channel ledgers", _shapes),
        ("cue generation identities", _cue_identities),
        ("metric anchors", _metric_anchors),
        ("ablation wiring", _ablation_wiring),
        ("seed determinism", _determinism),
    ]
    ok = all([_check(name, fn) for name, fn in checks])
    print("selftest: " + ("ALL PASS" if ok else "FAILURES"))
    return 0 if ok else 1
