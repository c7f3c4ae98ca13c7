"""Checkpointed inference: write sigmoid(r_1) per image as 8-bit PNGs."""

from pathlib import Path

import numpy as np
import torch

from .blocks import resize_to
from .data import IMAGE_EXTS, load_image, save_image_png
from .train import load_checkpoint


@torch.no_grad()
def infer_dir(ckpt_path, images_dir, out_dir, panels=False, masks_dir=None):
    """Run a checkpoint over every image in a directory.

    Predictions are upsampled to each image's native resolution. With
    `panels`, an (image | GT | prediction) strip is also written when a
    matching mask exists.
    """
    model, cfg, _ = load_checkpoint(ckpt_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images_dir = Path(images_dir)
    written = []
    for img_path in sorted(images_dir.iterdir()):
        if img_path.suffix.lower() not in IMAGE_EXTS:
            continue
        native = load_image(img_path)
        resized = load_image(img_path, cfg.input_size)
        tensor = torch.from_numpy(resized.transpose(2, 0, 1)).float()[None]
        logits = model(tensor)["r_1"]
        prob = torch.sigmoid(resize_to(logits, native.shape[:2]))[0, 0].numpy()
        dest = out / (img_path.stem + ".png")
        save_image_png(prob, dest)
        written.append(dest)
        if panels:
            _write_panel(native, prob, img_path, masks_dir, out)
    return written


def _write_panel(image, prob, img_path, masks_dir, out):
    h = image.shape[0]
    pieces = [image]
    if masks_dir:
        for ext in IMAGE_EXTS:
            cand = Path(masks_dir) / (img_path.stem + ext)
            if cand.exists():
                from .data import load_mask

                gt = load_mask(cand).astype(np.float64)
                pieces.append(np.repeat(gt[..., None], 3, axis=2))
                break
    pieces.append(np.repeat(prob[..., None], 3, axis=2))
    gap = np.ones((h, 4, 3))
    strip = pieces[0]
    for piece in pieces[1:]:
        strip = np.concatenate([strip, gap, piece], axis=1)
    save_image_png(strip, out / (img_path.stem + "_panel.png"))
