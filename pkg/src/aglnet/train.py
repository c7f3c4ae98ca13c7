"""Training loop: Adam with periodic cosine annealing, structured loss
logging, best/last checkpointing, and seed-fixed reproducibility."""

import csv
import json
import math
import random
from pathlib import Path

import numpy as np
import torch

from .config import TrainConfig
from .losses import total_loss
from .metrics import s_measure
from .model import AGLNet


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def build_model(cfg: TrainConfig):
    return AGLNet(
        backbone_id=cfg.backbone,
        channels=cfg.channels,
        use_combination=cfg.hfc_combination_enabled,
        use_decoupling=cfg.hfc_decoupling_enabled,
        use_rd=cfg.rd_enabled,
        use_aig=cfg.aig_enabled,
        rd_iterations=cfg.rd_iterations,
        rd_split_counts=tuple(cfg.rd_split_counts),
        rd_q_exponents=tuple(cfg.rd_q_exponents),
        backbone_weights=cfg.backbone_weights or None,
        freeze_backbone=cfg.freeze_backbone,
    )


def cosine_lr(step, cfg: TrainConfig, steps_per_epoch):
    """Periodic cosine schedule restarting every lr_period_epochs."""
    if step < 0:
        raise ValueError("step must be >= 0")
    period = max(1, cfg.lr_period_epochs * steps_per_epoch)
    phase = (step % period) / period
    return cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + math.cos(math.pi * phase))


def save_checkpoint(path, model, cfg: TrainConfig, seed):
    torch.save({"state_dict": model.state_dict(), "config": cfg.to_dict(), "seed": seed}, path)


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg = TrainConfig.from_dict(payload["config"])
    model = build_model(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, cfg, payload["seed"]


@torch.no_grad()
def validation_s_measure(model, dataset, batch_size=8):
    """Mean structure measure of sigmoid(r_1) over a dataset."""
    from .data import iterate_batches

    was_training = model.training
    model.eval()
    scores = []
    for images, masks, _ in iterate_batches(dataset, batch_size, epoch=0, shuffle=False):
        preds = model.predict(images)
        for p, m in zip(preds, masks):
            scores.append(s_measure(p[0].numpy().clip(0, 1), m[0].numpy().astype(np.uint8)))
    if was_training:
        model.train()
    return float(np.mean(scores)) if scores else 0.0


class LossLogger:
    def __init__(self, path, fmt="csv"):
        self.path = Path(path)
        self.fmt = fmt
        self._writer = None
        self._fh = None

    def log(self, step, lr, breakdown):
        record = {"step": step, "lr": lr, **breakdown.as_dict()}
        if self.fmt == "jsonl":
            if self._fh is None:
                self._fh = open(self.path, "w")
            self._fh.write(json.dumps(record) + "\n")
        else:
            if self._fh is None:
                self._fh = open(self.path, "w", newline="")
                self._writer = csv.DictWriter(self._fh, fieldnames=list(record))
                self._writer.writeheader()
            self._writer.writerow(record)
        self._fh.flush()

    def close(self):
        if self._fh:
            self._fh.close()


def train(cfg: TrainConfig, dataset, out_dir, val_dataset=None, max_steps=None, model=None):
    """Optimize the composite loss over the dataset.

    Returns (model, history) where history is the list of per-step total
    losses. Checkpoints `last.ckpt` every epoch and `best.ckpt` by
    validation structure measure when a validation set is given. A
    non-finite loss aborts with the offending batch index in the message.
    """
    from .data import iterate_batches

    seed_everything(cfg.seed)
    if model is None:
        model = build_model(cfg)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(0.9, 0.999))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger = LossLogger(
        out_dir / ("losses.jsonl" if cfg.log_format == "jsonl" else "losses.csv"), cfg.log_format
    )
    steps_per_epoch = max(1, math.ceil(len(dataset) / cfg.batch_size))
    use_cue = cfg.aig_enabled
    history = []
    best_score = -1.0
    step = 0
    try:
        for epoch in range(cfg.epochs):
            for batch_idx, (images, masks, cue_maps) in enumerate(
                iterate_batches(dataset, cfg.batch_size, epoch, shuffle=True, seed=cfg.seed)
            ):
                lr = cosine_lr(step, cfg, steps_per_epoch)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                preds = model(images)
                breakdown = total_loss(preds, masks, cue_maps if use_cue else None)
                if not torch.isfinite(breakdown.total):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch} batch {batch_idx} "
                        f"(step {step}): {breakdown.as_dict()}"
                    )
                optimizer.zero_grad()
                breakdown.total.backward()
                optimizer.step()
                logger.log(step, lr, breakdown)
                history.append(float(breakdown.total.detach()))
                step += 1
                if max_steps is not None and step >= max_steps:
                    raise StopIteration
            save_checkpoint(out_dir / "last.ckpt", model, cfg, cfg.seed)
            if val_dataset is not None and len(val_dataset):
                score = validation_s_measure(model, val_dataset, cfg.batch_size)
                if score > best_score:
                    best_score = score
                    save_checkpoint(out_dir / "best.ckpt", model, cfg, cfg.seed)
    except StopIteration:
        pass
    save_checkpoint(out_dir / "last.ckpt", model, cfg, cfg.seed)
    logger.close()
    return model, history


def split_validation(manifest, fraction, seed):
    """Deterministically carve a validation slice off a manifest."""
    from .data import DatasetManifest

    entries = list(manifest.entries)
    order = np.arange(len(entries))
    np.random.default_rng(seed).shuffle(order)
    n_val = int(round(len(entries) * fraction))
    val_idx = set(order[:n_val].tolist())
    train_entries = [e for i, e in enumerate(entries) if i not in val_idx]
    val_entries = [e for i, e in enumerate(entries) if i in val_idx]
    make = lambda ents, split: DatasetManifest(manifest.root, split, ents, manifest.layout)
    return make(train_entries, "train"), make(val_entries, "val")
