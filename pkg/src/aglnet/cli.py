"""Command line interface: cue generation, training, inference,
evaluation, synthetic data generation, and the self test."""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import cues, metrics
from .config import TrainConfig
from .data import (
    CODDataset,
    IMAGE_EXTS,
    build_manifest,
    generate_synthetic_dataset,
    load_image,
    load_mask,
    save_image_png,
)


def _cmd_generate_cues(args):
    images = Path(args.images)
    masks = Path(args.masks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for img_path in sorted(images.iterdir()):
        if img_path.suffix.lower() not in IMAGE_EXTS:
            continue
        mask_path = None
        for ext in IMAGE_EXTS:
            cand = masks / (img_path.stem + ext)
            if cand.exists():
                mask_path = cand
                break
        if mask_path is None:
            print(f"warning: no mask for {img_path.name}, skipped", file=sys.stderr)
            continue
        image = load_image(img_path)
        mask = load_mask(mask_path)
        kwargs = {"pad": True} if args.kind == "frequency" else {}
        cue = cues.generate_cue(args.kind, image, mask, **kwargs)
        save_image_png(cue.data, out / (img_path.stem + ".png"))
        count += 1
    print(f"wrote {count} {args.kind} cue maps to {out}")


def _cmd_train(args):
    from .train import split_validation, train

    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig.desk_preset()
    manifest = build_manifest(args.data, layout=args.layout, split="train")
    print(f"loaded {len(manifest.entries)} image/mask pairs from {args.data}")
    train_manifest, val_manifest = split_validation(manifest, cfg.val_fraction, cfg.seed)
    cue_kind = cfg.cue_kind if cfg.aig_enabled else None
    train_ds = CODDataset(
        manifest=train_manifest, cfg=cfg, cue_kind=cue_kind, augment=True, seed=cfg.seed
    )
    val_ds = CODDataset(manifest=val_manifest, cfg=cfg, cue_kind=cue_kind, augment=False)
    _, history = train(cfg, train_ds, args.out, val_dataset=val_ds, max_steps=args.max_steps)
    print(f"finished: {len(history)} steps, final loss {history[-1]:.4f}" if history else "no steps run")


def _cmd_infer(args):
    from .infer import infer_dir

    written = infer_dir(args.ckpt, args.images, args.out, panels=args.panels, masks_dir=args.masks)
    print(f"wrote {len(written)} predictions to {args.out}")


def _cmd_evaluate(args):
    preds_dir = Path(args.preds)
    gts_dir = Path(args.gts)
    rows = []
    for pred_path in sorted(preds_dir.iterdir()):
        if pred_path.suffix.lower() not in IMAGE_EXTS:
            continue
        gt_path = None
        for ext in IMAGE_EXTS:
            cand = gts_dir / (pred_path.stem + ext)
            if cand.exists():
                gt_path = cand
                break
        if gt_path is None:
            print(f"warning: no GT for {pred_path.name}, skipped", file=sys.stderr)
            continue
        gt = load_mask(gt_path)
        pred_img = Image.open(pred_path).convert("L").resize((gt.shape[1], gt.shape[0]))
        pred = np.asarray(pred_img, dtype=np.float64) / 255.0
        scores = metrics.score_image(pred, gt)
        rows.append({"image": pred_path.stem, **scores})
    if not rows:
        print("no prediction/GT pairs found", file=sys.stderr)
        return 1
    mean_row = {"image": "MEAN"}
    for name in metrics.METRIC_NAMES:
        mean_row[name] = float(np.mean([r[name] for r in rows]))
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["image", *metrics.METRIC_NAMES])
        writer.writeheader()
        writer.writerows(rows)
        writer.writerow(mean_row)
    print(f"wrote {len(rows)} rows (+MEAN) to {args.out}")
    print("  " + "  ".join(f"{k}={v:.4f}" for k, v in mean_row.items() if k != "image"))
    return 0


def _cmd_synthetic(args):
    manifest = generate_synthetic_dataset(args.out, args.count, size=args.size, seed=args.seed)
    print(f"wrote {len(manifest.entries)} synthetic pairs to {args.out}")


def _cmd_selftest(args):
    from .selftest import run_selftest

    return run_selftest()


def main(argv=None):
    parser = argparse.ArgumentParser(prog="aglnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-cues", help="write cue maps for an image/mask directory pair")
    p.add_argument("--kind", required=True, choices=cues.CUE_KINDS)
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate_cues)

    p = sub.add_parser("train", help="train a model on an image/mask dataset")
    p.add_argument("--config", help="flat key=value config file (default: desk preset)")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--layout", default="flat", choices=("flat", "cod10k", "camo", "nc4k"))
    p.add_argument("--out", required=True, help="output directory for checkpoints and logs")
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="run a checkpoint over a directory of images")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--masks", help="optional GT directory for panels")
    p.add_argument("--panels", action="store_true", help="also write image|GT|pred strips")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("evaluate", help="score predictions against GT masks")
    p.add_argument("--preds", required=True)
    p.add_argument("--gts", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("make-synthetic", help="generate a synthetic camouflage dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synthetic)

    p = sub.add_parser("selftest", help="run the built-in acceptance checks")
    p.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
