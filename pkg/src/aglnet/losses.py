"""Composite training objective.

Structure-aware weighted BCE + weighted IoU on the three object
predictions, plus MSE on the cue prediction. Predictions are logits;
sigmoid is applied here. Each prediction is bilinearly upsampled to the
ground-truth resolution before the loss is taken. Batch reduction is the
mean over samples, levels are summed.
"""

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .blocks import resize_to

IOU_EPS = 1.0


@dataclass
class LossBreakdown:
    bce_per_level: list
    iou_per_level: list
    cue_mse: float
    total: torch.Tensor

    def as_dict(self):
        d = {f"bce_r{i + 1}": v for i, v in enumerate(self.bce_per_level)}
        d.update({f"iou_r{i + 1}": v for i, v in enumerate(self.iou_per_level)})
        d["cue_mse"] = self.cue_mse
        d["total"] = float(self.total.detach())
        return d


def boundary_weight(gt, kernel_size=31, factor=5.0):
    """Structure-aware weights 1 + 5 * |avgpool_31(gt) - gt|."""
    pooled = F.avg_pool2d(gt, kernel_size, stride=1, padding=kernel_size // 2)
    return 1.0 + factor * (pooled - gt).abs()


def weighted_bce(pred, gt, weight=None):
    """Pixel-wise BCE on sigmoid(pred), normalized by the weight sum."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(gt.shape)}")
    if weight is None:
        weight = boundary_weight(gt)
    bce = F.binary_cross_entropy_with_logits(pred, gt, reduction="none")
    per_sample = (weight * bce).flatten(1).sum(1) / weight.flatten(1).sum(1)
    return per_sample.mean()


def weighted_iou(pred, gt, weight=None):
    """Weighted soft IoU loss: 1 - (w*p*g) / (w*(p + g - p*g))."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(gt.shape)}")
    if weight is None:
        weight = boundary_weight(gt)
    p = torch.sigmoid(pred)
    inter = (weight * p * gt).flatten(1).sum(1)
    union = (weight * (p + gt - p * gt)).flatten(1).sum(1)
    return (1.0 - (inter + IOU_EPS) / (union + IOU_EPS)).mean()


def cue_mse(r_s, cue_gt):
    """MSE between the upsampled cue prediction and the cue ground truth."""
    r_s = resize_to(r_s, cue_gt.shape[-2:])
    return F.mse_loss(r_s, cue_gt)


def total_loss(preds, gt, cue_gt=None):
    """Sum of weighted BCE + IoU over r_1..r_3 plus the cue MSE term.

    `preds` is the model output dict; r_4 is not supervised. The cue term
    is skipped when `cue_gt` is None (cue generation disabled).
    """
    for key in ("r_1", "r_2", "r_3"):
        if key not in preds:
            raise ValueError(f"missing prediction {key}")
    weight = boundary_weight(gt)
    bces, ious = [], []
    total = gt.new_zeros(())
    for key in ("r_1", "r_2", "r_3"):
        pred = resize_to(preds[key], gt.shape[-2:])
        b = weighted_bce(pred, gt, weight)
        i = weighted_iou(pred, gt, weight)
        bces.append(float(b.detach()))
        ious.append(float(i.detach()))
        total = total + b + i
    mse_val = 0.0
    if cue_gt is not None:
        mse = cue_mse(preds["r_s"], cue_gt)
        mse_val = float(mse.detach())
        total = total + mse
    return LossBreakdown(bces, ious, mse_val, total)
