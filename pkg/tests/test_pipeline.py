import numpy as np
import pytest
import torch

from aglnet import cli, data, train
from aglnet.config import TrainConfig
from aglnet.model import AGLNet


def desk_cfg(**overrides):
    base = dict(epochs=1, batch_size=2, augment_crop=False, augment_color_jitter=False)
    base.update(overrides)
    return TrainConfig.desk_preset(**base)


def make_dataset(tmp_path, count=4, seed=0):
    root = tmp_path / "data"
    data.generate_synthetic_dataset(root, count, size=64, seed=seed)
    return root


# --- config ---------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(input_size=70)
    with pytest.raises(ValueError):
        TrainConfig(lr=1e-5, lr_min=1e-4)
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"channels": 8, "bogus_key": 1})


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "channels = 8\n"
        "input_size = 64\n"
        "lr = 1e-3  # inline comment\n"
        "lr_min = 1e-4\n"
        "rd.iterations = 2\n"
        "rd.split_counts = 4, 3, 2\n"
        "augment_flip = off\n"
    )
    cfg = TrainConfig.from_file(path)
    assert cfg.channels == 8
    assert cfg.rd_iterations == 2
    assert cfg.rd_split_counts == [4, 3, 2]
    assert cfg.augment_flip is False
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_config_file_bad_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("channels 8\n")
    with pytest.raises(ValueError, match="key = value"):
        TrainConfig.from_file(path)


# --- datasets -------------------------------------------------------------


def test_manifest_flat_and_missing_mask(tmp_path):
    root = make_dataset(tmp_path, count=3)
    manifest = data.build_manifest(root, layout="flat")
    assert len(manifest.entries) == 3
    (root / "masks" / "sample_0001.png").unlink()
    with pytest.raises(FileNotFoundError):
        data.build_manifest(root, layout="flat")
    with pytest.raises(FileNotFoundError):
        data.build_manifest(tmp_path / "nothing_here")


def test_manifest_named_layout(tmp_path):
    root = tmp_path / "cod"
    (root / "Train" / "Imgs").mkdir(parents=True)
    (root / "Train" / "GT").mkdir(parents=True)
    rng = np.random.default_rng(0)
    img, mask = data.synthetic_sample(rng, 64)
    data.save_image_png(img, root / "Train" / "Imgs" / "a.png")
    data.save_image_png(mask.astype(float), root / "Train" / "GT" / "a.png")
    manifest = data.build_manifest(root, layout="cod10k", split="train")
    assert len(manifest.entries) == 1


def test_synthetic_sample_properties():
    rng = np.random.default_rng(1)
    for _ in range(5):
        image, mask = data.synthetic_sample(rng, 64)
        assert image.shape == (64, 64, 3)
        assert mask.shape == (64, 64)
        assert set(np.unique(mask)) <= {0, 1}
        assert 0.05 < mask.mean() < 0.6
        assert image.min() >= 0 and image.max() <= 1


def test_dataset_determinism_and_epoch_variation(tmp_path):
    root = make_dataset(tmp_path)
    manifest = data.build_manifest(root)
    cfg = TrainConfig.desk_preset(epochs=1, batch_size=2)
    ds_a = data.CODDataset(manifest=manifest, cfg=cfg, cue_kind="boundary", augment=True, seed=3)
    ds_b = data.CODDataset(manifest=manifest, cfg=cfg, cue_kind="boundary", augment=True, seed=3)
    img_a, mask_a, cue_a = ds_a[0]
    img_b, mask_b, cue_b = ds_b[0]
    assert torch.equal(img_a, img_b) and torch.equal(mask_a, mask_b) and torch.equal(cue_a, cue_b)
    ds_b.set_epoch(1)
    changed = not torch.equal(img_a, ds_b[0][0])
    ds_b.set_epoch(5)
    changed = changed or not torch.equal(img_a, ds_b[0][0])
    assert changed


def test_dataset_flip_is_joint(tmp_path):
    root = make_dataset(tmp_path, count=2)
    manifest = data.build_manifest(root)
    image = data.load_image(manifest.entries[0][0], 64)
    mask = data.load_mask(manifest.entries[0][1], 64)
    cue = mask.astype(np.float64)
    saw_flip = False
    for seed in range(10):
        rng = np.random.default_rng(seed)
        img2, mask2, cue2 = data.augment_sample(
            image, mask, cue, rng, flip=True, crop=False, color_jitter=False
        )
        if np.array_equal(img2, image):
            assert np.array_equal(mask2, mask) and np.array_equal(cue2, cue)
        else:
            assert np.array_equal(img2, image[:, ::-1])
            assert np.array_equal(mask2, mask[:, ::-1])
            assert np.array_equal(cue2, cue[:, ::-1])
            saw_flip = True
    assert saw_flip


def test_cue_cache_hits(tmp_path):
    rng = np.random.default_rng(4)
    image, mask = data.synthetic_sample(rng, 32)
    first = data.cached_cue(image, mask, "boundary")
    cache_files = list(data.cue_cache_dir().glob("*.png"))
    assert len(cache_files) == 1
    second = data.cached_cue(image, mask, "boundary")
    assert np.array_equal(first, second)
    assert len(list(data.cue_cache_dir().glob("*.png"))) == 1
    data.cached_cue(image, mask, "frequency", pad=True)
    assert len(list(data.cue_cache_dir().glob("*.png"))) == 2


def test_iterate_batches_full_coverage(tmp_path):
    root = make_dataset(tmp_path, count=5)
    manifest = data.build_manifest(root)
    ds = data.CODDataset(manifest=manifest, cfg=desk_cfg(), cue_kind=None)
    seen = 0
    for images, masks, cue_maps in data.iterate_batches(ds, batch_size=2, epoch=0, seed=1):
        assert images.shape[1:] == (3, 64, 64)
        assert masks.shape[1:] == (1, 64, 64)
        seen += images.shape[0]
    assert seen == 5


# --- model ----------------------------------------------------------------


def test_model_forward_shapes():
    torch.manual_seed(0)
    model = AGLNet(channels=8).eval()
    x = torch.rand(1, 3, 64, 64)
    with torch.no_grad():
        out = model(x)
    assert out["r_s"].shape == (1, 1, 8, 8)
    assert out["r_4"].shape == (1, 1, 8, 8)
    assert out["r_3"].shape == (1, 1, 2, 2)
    assert out["r_2"].shape == (1, 1, 4, 4)
    assert out["r_1"].shape == (1, 1, 8, 8)
    pred = model.predict(x)
    assert pred.shape == (1, 1, 64, 64)
    assert pred.min() >= 0 and pred.max() <= 1


def test_model_ablation_switches():
    torch.manual_seed(1)
    x = torch.rand(1, 3, 64, 64)
    off_rd = AGLNet(channels=8, use_rd=False).eval()
    with torch.no_grad():
        out = off_rd(x)
    assert torch.equal(out["r_1"], out["r_4"])
    off_aig = AGLNet(channels=8, use_aig=False).eval()
    with torch.no_grad():
        out = off_aig(x)
    assert out["r_s"].abs().sum() == 0


# --- training -------------------------------------------------------------


def test_cosine_lr_bounds_and_restart():
    cfg = desk_cfg()
    steps = cfg.lr_period_epochs * 2
    values = [train.cosine_lr(s, cfg, steps_per_epoch=1) for s in range(2 * steps)]
    assert all(cfg.lr_min <= v <= cfg.lr for v in values)
    assert values[0] == pytest.approx(cfg.lr)
    period = cfg.lr_period_epochs
    assert values[period] == pytest.approx(cfg.lr)
    assert min(values[:period]) < cfg.lr_min * 2
    with pytest.raises(ValueError):
        train.cosine_lr(-1, cfg, 1)


def test_train_smoke_and_checkpoint_roundtrip(tmp_path):
    root = make_dataset(tmp_path)
    manifest = data.build_manifest(root)
    cfg = desk_cfg(epochs=2)
    ds = data.CODDataset(manifest=manifest, cfg=cfg, cue_kind=cfg.cue_kind, seed=cfg.seed)
    out_dir = tmp_path / "run"
    model, history = train.train(cfg, ds, out_dir, max_steps=3)
    assert len(history) == 3
    assert (out_dir / "last.ckpt").exists()
    assert (out_dir / "losses.csv").exists()

    x = torch.rand(2, 3, 64, 64, generator=torch.Generator().manual_seed(9))
    model.eval()
    with torch.no_grad():
        before = model.predict(x)
    loaded, cfg2, seed = train.load_checkpoint(out_dir / "last.ckpt")
    assert cfg2 == cfg and seed == cfg.seed
    with torch.no_grad():
        after = loaded.predict(x)
    assert torch.equal(before, after)


def test_train_step0_loss_is_deterministic(tmp_path):
    root = make_dataset(tmp_path)
    manifest = data.build_manifest(root)
    cfg = desk_cfg()
    losses = []
    for _ in range(2):
        ds = data.CODDataset(manifest=manifest, cfg=cfg, cue_kind=cfg.cue_kind, seed=cfg.seed)
        _, history = train.train(cfg, ds, tmp_path / "det", max_steps=1)
        losses.append(history[0])
    assert losses[0] == losses[1]


def test_split_validation_partition(tmp_path):
    root = make_dataset(tmp_path, count=10)
    manifest = data.build_manifest(root)
    tr, va = train.split_validation(manifest, fraction=0.2, seed=0)
    assert len(tr.entries) == 8 and len(va.entries) == 2
    assert set(map(tuple, tr.entries)).isdisjoint(map(tuple, va.entries))


# --- CLI ------------------------------------------------------------------


def test_cli_end_to_end(tmp_path, capsys):
    root = tmp_path / "ds"
    assert cli.main(["make-synthetic", "--out", str(root), "--count", "6", "--size", "64"]) == 0

    cues_out = tmp_path / "cues"
    code = cli.main([
        "generate-cues", "--kind", "boundary",
        "--images", str(root / "images"), "--masks", str(root / "masks"),
        "--out", str(cues_out),
    ])
    assert code == 0
    assert len(list(cues_out.glob("*.png"))) == 6

    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "channels = 8\ninput_size = 64\nlr = 1e-3\nlr_min = 1e-4\n"
        "epochs = 1\nbatch_size = 2\nval_fraction = 0.2\n"
    )
    run_dir = tmp_path / "run"
    code = cli.main([
        "train", "--config", str(cfg_path), "--data", str(root),
        "--out", str(run_dir), "--max-steps", "2",
    ])
    assert code == 0
    assert (run_dir / "last.ckpt").exists()

    preds = tmp_path / "preds"
    code = cli.main([
        "infer", "--ckpt", str(run_dir / "last.ckpt"),
        "--images", str(root / "images"), "--out", str(preds),
        "--masks", str(root / "masks"), "--panels",
    ])
    assert code == 0
    assert len(list(preds.glob("sample_*[0-9].png"))) == 6
    assert len(list(preds.glob("*_panel.png"))) == 6

    report = tmp_path / "report.csv"
    code = cli.main([
        "evaluate", "--preds", str(preds), "--gts", str(root / "masks"),
        "--out", str(report),
    ])
    assert code == 0
    lines = report.read_text().strip().splitlines()
    assert lines[0].startswith("image,")
    assert lines[-1].startswith("MEAN,")
    assert len(lines) == 8  # header + 6 images + MEAN


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
