"""Evaluation measures for binary segmentation against real-valued
predictions: MAE, structure measure, weighted F, mean F over 256
thresholds, and the enhanced alignment measure.

All functions take a prediction in [0, 1] and a binary ground truth of
the same shape, and are deterministic pure functions. Degenerate
ground truths (all zero / all one) follow each measure's special-case
branch and never produce NaN.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

EPS = 1e-8

THRESHOLDS = np.arange(256) / 255.0


def _check_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if pred.min() < 0 or pred.max() > 1:
        raise ValueError("prediction values must lie in [0, 1]")
    if not np.isin(gt, (0, 1)).all():
        raise ValueError("ground truth must be binary")
    return pred, gt.astype(bool)


def normalize_prediction(pred):
    """Per-image min-max normalization to [0, 1]."""
    pred = np.asarray(pred, dtype=np.float64)
    lo, hi = pred.min(), pred.max()
    if hi > lo:
        return (pred - lo) / (hi - lo)
    return np.clip(pred, 0.0, 1.0)


def binarize(pred, threshold):
    """Threshold rule: strict at 0 so a perfect binary map stays perfect
    at every grid level."""
    return pred > threshold if threshold == 0 else pred >= threshold


def mae(pred, gt):
    pred, gt = _check_pair(pred, gt)
    return float(np.abs(pred - gt).mean())


# --- structure measure ----------------------------------------------------


def _object_score(values):
    if values.size == 0:
        return 0.0
    x = values.mean()
    sigma = values.std(ddof=1) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _s_object(pred, gt):
    u = gt.mean()
    fg = _object_score(pred[gt])
    bg = _object_score(1.0 - pred[~gt])
    return u * fg + (1.0 - u) * bg


def _region_ssim(p, g):
    n = p.size
    x, y = p.mean(), g.mean()
    if n > 1:
        sigma_x = np.square(p - x).sum() / (n - 1)
        sigma_y = np.square(g - y).sum() / (n - 1)
        sigma_xy = ((p - x) * (g - y)).sum() / (n - 1)
    else:
        sigma_x = sigma_y = sigma_xy = 0.0
    a = 4.0 * x * y * sigma_xy
    b = (x * x + y * y) * (sigma_x + sigma_y)
    if a != 0:
        return a / (b + EPS)
    return 1.0 if b == 0 else 0.0


def _s_region(pred, gt):
    rows, cols = np.where(gt)
    cy = int(round(rows.mean()))
    cx = int(round(cols.mean()))
    score = 0.0
    total = gt.size
    for p, g in (
        (pred[: cy + 1, : cx + 1], gt[: cy + 1, : cx + 1]),
        (pred[: cy + 1, cx + 1 :], gt[: cy + 1, cx + 1 :]),
        (pred[cy + 1 :, : cx + 1], gt[cy + 1 :, : cx + 1]),
        (pred[cy + 1 :, cx + 1 :], gt[cy + 1 :, cx + 1 :]),
    ):
        if g.size:
            score += (g.size / total) * _region_ssim(p, g.astype(np.float64))
    return score


def s_measure(pred, gt, alpha=0.5):
    """Object- plus region-aware structural similarity."""
    pred, gt = _check_pair(pred, gt)
    y = gt.mean()
    if y == 0:
        return float(1.0 - pred.mean())
    if y == 1:
        return float(pred.mean())
    q = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(max(q, 0.0))


# --- weighted F measure ---------------------------------------------------


def _gauss_kernel(size=7, sigma=5.0):
    ax = np.arange(size) - size // 2
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def weighted_f(pred, gt, beta2=1.0):
    """F-score with error-dependency and pixel-importance weighting."""
    pred, gt = _check_pair(pred, gt)
    if not gt.any():
        return 0.0
    err = np.abs(pred - gt)
    dist, idx = ndimage.distance_transform_edt(~gt, return_indices=True)
    err_t = err.copy()
    err_t[~gt] = err[idx[0][~gt], idx[1][~gt]]
    err_smooth = ndimage.correlate(err_t, _gauss_kernel(), mode="constant")
    err_min = err.copy()
    sel = gt & (err_smooth < err)
    err_min[sel] = err_smooth[sel]
    importance = np.ones_like(err)
    importance[~gt] = 2.0 - np.exp(np.log(0.5) / 5.0 * dist[~gt])
    ew = err_min * importance
    tp_w = gt.sum() - ew[gt].sum()
    fp_w = ew[~gt].sum()
    recall = 1.0 - ew[gt].mean()
    denom = tp_w + fp_w
    precision = tp_w / denom if denom > 0 else 0.0
    if precision + recall <= 0:
        return 0.0
    return float((1.0 + beta2) * precision * recall / (beta2 * precision + recall))


# --- threshold-swept F and E ----------------------------------------------


def mean_f(pred, gt, beta2=0.3):
    """F-beta averaged over the 256 uniform binarization thresholds."""
    pred, gt = _check_pair(pred, gt)
    n_fg = gt.sum()
    scores = []
    for t in THRESHOLDS:
        fm = binarize(pred, t)
        n_pred = fm.sum()
        tp = (fm & gt).sum()
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_fg if n_fg else 0.0
        if precision + recall > 0:
            scores.append((1.0 + beta2) * precision * recall / (beta2 * precision + recall))
        else:
            scores.append(0.0)
    return float(np.mean(scores))


ALIGN_EPS = 1e-12


def _enhanced_alignment(fm, gt):
    if not gt.any():
        enhanced = 1.0 - fm.astype(np.float64)
    elif gt.all():
        enhanced = fm.astype(np.float64)
    else:
        dg = gt.astype(np.float64) - gt.mean()
        df = fm.astype(np.float64) - fm.mean()
        align = 2.0 * dg * df / (dg * dg + df * df + ALIGN_EPS)
        enhanced = np.square(align + 1.0) / 4.0
    return enhanced.mean()


def e_measure(pred, gt):
    """Enhanced alignment measure averaged over 256 thresholds."""
    pred, gt = _check_pair(pred, gt)
    return float(np.mean([_enhanced_alignment(binarize(pred, t), gt) for t in THRESHOLDS]))


# --- aggregation ----------------------------------------------------------

METRIC_NAMES = ("s_alpha", "f_beta_w", "f_mean", "e_mean", "mae")


@dataclass
class MetricReport:
    s_alpha: float = 0.0
    f_beta_w: float = 0.0
    f_mean: float = 0.0
    e_mean: float = 0.0
    mae: float = 0.0
    per_image: list = field(default_factory=list)


def score_image(pred, gt, normalize=True):
    """All five measures for one image; prediction is min-max normalized
    per image unless disabled."""
    if normalize:
        pred = normalize_prediction(pred)
    return {
        "s_alpha": s_measure(pred, gt),
        "f_beta_w": weighted_f(pred, gt),
        "f_mean": mean_f(pred, gt),
        "e_mean": e_measure(pred, gt),
        "mae": mae(pred, gt),
    }


def evaluate_pairs(pairs, normalize=True):
    """Mean metrics over an iterable of (pred, gt) arrays."""
    report = MetricReport()
    for pred, gt in pairs:
        report.per_image.append(score_image(pred, gt, normalize=normalize))
    if report.per_image:
        for name in METRIC_NAMES:
            setattr(report, name, float(np.mean([r[name] for r in report.per_image])))
    return report
