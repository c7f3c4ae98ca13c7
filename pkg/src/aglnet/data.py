"""Dataset ingestion, synthetic sample generation, joint augmentation,
and the on-disk cue cache."""

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy import ndimage

from . import cues

IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")

_IMG_DIRS = ("images", "Imgs", "Image", "Images")
_MASK_DIRS = ("masks", "GT", "Masks", "gt")


@dataclass
class DatasetManifest:
    root: str
    split: str
    entries: list  # (image_path, mask_path)
    layout: str


def _find_dir(base: Path, names):
    for name in names:
        if (base / name).is_dir():
            return base / name
    return None


def build_manifest(root, layout="flat", split="train"):
    """Pair every image with its same-stem mask.

    `flat` expects root/images + root/masks; the named dataset layouts
    additionally look under root/Train or root/Test style split folders.
    """
    root = Path(root)
    candidates = [root]
    if layout != "flat":
        for sub in (split, split.capitalize(), f"{split.capitalize()}Dataset"):
            if (root / sub).is_dir():
                candidates.insert(0, root / sub)
    img_dir = mask_dir = None
    for base in candidates:
        img_dir = _find_dir(base, _IMG_DIRS)
        mask_dir = _find_dir(base, _MASK_DIRS)
        if img_dir and mask_dir:
            break
    if not (img_dir and mask_dir):
        raise FileNotFoundError(f"no image/mask directories found under {root}")
    entries = []
    for img_path in sorted(img_dir.iterdir()):
        if img_path.suffix.lower() not in IMAGE_EXTS:
            continue
        mask_path = None
        for ext in IMAGE_EXTS:
            cand = mask_dir / (img_path.stem + ext)
            if cand.exists():
                mask_path = cand
                break
        if mask_path is None:
            raise FileNotFoundError(f"no mask for image {img_path.name}")
        entries.append((str(img_path), str(mask_path)))
    return DatasetManifest(str(root), split, entries, layout)


# --- synthetic camouflage samples -----------------------------------------


def _texture(rng, size, scale):
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), scale)
    lo, hi = noise.min(), noise.max()
    return (noise - lo) / (hi - lo + 1e-12)


def _ellipse_mask(rng, size):
    yy, xx = np.mgrid[:size, :size]
    cy, cx = rng.uniform(0.35 * size, 0.65 * size, 2)
    ry, rx = rng.uniform(0.18 * size, 0.32 * size, 2)
    theta = rng.uniform(0, np.pi)
    dy, dx = yy - cy, xx - cx
    u = dx * np.cos(theta) + dy * np.sin(theta)
    v = -dx * np.sin(theta) + dy * np.cos(theta)
    return ((u / rx) ** 2 + (v / ry) ** 2 <= 1.0).astype(np.uint8)


def _polygon_mask(rng, size):
    # convex polygon: random radii at sorted angles, half-plane rasterization
    cy, cx = rng.uniform(0.4 * size, 0.6 * size, 2)
    n = rng.integers(5, 9)
    angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    radii = rng.uniform(0.18 * size, 0.32 * size, n)
    pts = np.stack([cy + radii * np.sin(angles), cx + radii * np.cos(angles)], axis=1)
    hull_pts = pts[_convex_hull_order(pts)]
    yy, xx = np.mgrid[:size, :size]
    inside = np.ones((size, size), dtype=bool)
    m = len(hull_pts)
    for i in range(m):
        y0, x0 = hull_pts[i]
        y1, x1 = hull_pts[(i + 1) % m]
        inside &= (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0) >= 0
    return inside.astype(np.uint8)


def _convex_hull_order(pts):
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 0] - c[0], pts[:, 1] - c[1])
    return np.argsort(ang)


def synthetic_sample(rng, size=64):
    """One camouflaged sample: background texture with a shape whose
    texture matches the background statistics but differs in phase and
    brightness. Returns (image (H,W,3) float, mask (H,W) uint8)."""
    while True:
        mask = _ellipse_mask(rng, size) if rng.random() < 0.5 else _polygon_mask(rng, size)
        if 0.12 <= mask.mean() <= 0.40:
            break
    bg = _texture(rng, size, scale=2.5)
    fg = np.clip(_texture(rng, size, scale=2.5) + rng.uniform(0.10, 0.18), 0, 1)
    tint = rng.uniform(0.35, 0.75, 3)
    canvas = bg * (1 - mask) + fg * mask
    image = np.clip(canvas[..., None] * 0.7 + tint[None, None, :] * 0.3, 0, 1)
    return image, mask


def generate_synthetic_dataset(out_dir, count, size=64, seed=0):
    """Write a flat-layout synthetic dataset of `count` image/mask pairs."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(count):
        image, mask = synthetic_sample(rng, size)
        save_image_png(image, out / "images" / f"sample_{i:04d}.png")
        save_image_png(mask.astype(np.float64), out / "masks" / f"sample_{i:04d}.png")
    return build_manifest(out, layout="flat")


# --- image io -------------------------------------------------------------


def load_image(path, size=None):
    img = Image.open(path).convert("RGB")
    if size is not None:
        img = img.resize((size, size), Image.BILINEAR)
    return np.asarray(img, dtype=np.float64) / 255.0


def load_mask(path, size=None):
    img = Image.open(path).convert("L")
    if size is not None:
        img = img.resize((size, size), Image.NEAREST)
    return (np.asarray(img) > 127).astype(np.uint8)


def save_image_png(array, path):
    """Save a [0,1] float array (2-D or HxWx3) as an 8-bit PNG."""
    arr = np.clip(np.asarray(array), 0, 1)
    data = np.rint(arr * 255).astype(np.uint8)
    Image.fromarray(data).save(path)


# --- cue cache ------------------------------------------------------------


def cue_cache_dir():
    override = os.environ.get("AGL_CACHE_DIR")
    if override:
        path = Path(override)
    else:
        path = Path.home() / ".cache" / "aglnet"
    path.mkdir(parents=True, exist_ok=True)
    return path


def cached_cue(image, mask, kind, **params):
    """Cue map for one sample, cached as an 8-bit PNG keyed by content."""
    key = hashlib.sha1()
    key.update(np.rint(image * 255).astype(np.uint8).tobytes())
    key.update(mask.astype(np.uint8).tobytes())
    key.update(f"{kind}:{sorted(params.items())}".encode())
    path = cue_cache_dir() / f"{key.hexdigest()}.png"
    if path.exists():
        return np.asarray(Image.open(path), dtype=np.float64) / 255.0
    cue = cues.generate_cue(kind, image, mask, **params).data
    save_image_png(cue, path)
    # return the quantized values so cache hits and misses agree exactly
    return np.rint(np.clip(cue, 0, 1) * 255) / 255.0


# --- datasets and augmentation --------------------------------------------


def _color_jitter(image, rng, strength=0.1):
    b, c, s = rng.uniform(1 - strength, 1 + strength, 3)
    image = image * b
    mean = image.mean()
    image = (image - mean) * c + mean
    gray = image.mean(axis=2, keepdims=True)
    image = gray + s * (image - gray)
    return np.clip(image, 0, 1)


def _random_crop(image, mask, cue, rng, min_scale=0.75):
    size = image.shape[0]
    crop = int(round(size * rng.uniform(min_scale, 1.0)))
    if crop >= size:
        return image, mask, cue
    y0 = rng.integers(0, size - crop + 1)
    x0 = rng.integers(0, size - crop + 1)
    image = image[y0 : y0 + crop, x0 : x0 + crop]
    mask = mask[y0 : y0 + crop, x0 : x0 + crop]
    cue = cue[y0 : y0 + crop, x0 : x0 + crop]
    image = np.asarray(
        Image.fromarray(np.rint(image * 255).astype(np.uint8)).resize((size, size), Image.BILINEAR),
        dtype=np.float64,
    ) / 255.0
    mask = np.asarray(
        Image.fromarray(mask.astype(np.uint8)).resize((size, size), Image.NEAREST)
    )
    cue = np.asarray(
        Image.fromarray(np.rint(cue * 255).astype(np.uint8)).resize((size, size), Image.BILINEAR),
        dtype=np.float64,
    ) / 255.0
    return image, mask, cue


def augment_sample(image, mask, cue, rng, flip=True, crop=True, color_jitter=True):
    """Joint augmentation; geometric transforms apply to all three maps."""
    if flip and rng.random() < 0.5:
        image = image[:, ::-1].copy()
        mask = mask[:, ::-1].copy()
        cue = cue[:, ::-1].copy()
    if crop:
        image, mask, cue = _random_crop(image, mask, cue, rng)
    if color_jitter:
        image = _color_jitter(image, rng)
    return image, mask, cue


class CODDataset:
    """Deterministic dataset over a manifest (or in-memory samples).

    Yields (image (3,H,W), mask (1,H,W), cue (1,H,W)) float32 tensors.
    Cue maps are generated from the resized image/mask pair and cached on
    disk; augmentation randomness is a pure function of (seed, epoch,
    index) so epochs are reproducible.
    """

    def __init__(self, manifest=None, samples=None, cfg=None, cue_kind=None, augment=False, seed=0):
        if (manifest is None) == (samples is None):
            raise ValueError("pass exactly one of manifest or samples")
        self.manifest = manifest
        self.samples = samples
        self.size = cfg.input_size if cfg else 64
        self.cue_kind = cue_kind
        self.augment = augment
        self.seed = seed
        self.epoch = 0
        if cfg is not None:
            self.aug_flags = dict(
                flip=cfg.augment_flip, crop=cfg.augment_crop, color_jitter=cfg.augment_color_jitter
            )
        else:
            self.aug_flags = dict(flip=True, crop=True, color_jitter=True)

    def __len__(self):
        return len(self.samples if self.samples is not None else self.manifest.entries)

    def set_epoch(self, epoch):
        self.epoch = epoch

    def _raw(self, idx):
        if self.samples is not None:
            return self.samples[idx]
        img_path, mask_path = self.manifest.entries[idx]
        return load_image(img_path, self.size), load_mask(mask_path, self.size)

    def __getitem__(self, idx):
        image, mask = self._raw(idx)
        if self.cue_kind:
            kwargs = {"pad": True} if self.cue_kind == "frequency" else {}
            cue = cached_cue(image, mask, self.cue_kind, **kwargs)
        else:
            cue = np.zeros_like(mask, dtype=np.float64)
        if self.augment:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, self.epoch, idx]))
            image, mask, cue = augment_sample(image, mask, cue, rng, **self.aug_flags)
        image_t = torch.from_numpy(np.array(image.transpose(2, 0, 1), dtype=np.float32))
        mask_t = torch.from_numpy(np.array(mask[None], dtype=np.float32))
        cue_t = torch.from_numpy(np.array(cue[None], dtype=np.float32))
        return image_t, mask_t, cue_t


def iterate_batches(dataset, batch_size, epoch, shuffle=True, seed=0):
    """Yield stacked batches covering every sample exactly once."""
    dataset.set_epoch(epoch)
    order = np.arange(len(dataset))
    if shuffle:
        np.random.default_rng(np.random.SeedSequence([seed, epoch])).shuffle(order)
    for start in range(0, len(order), batch_size):
        idxs = order[start : start + batch_size]
        items = [dataset[int(i)] for i in idxs]
        yield tuple(torch.stack(parts) for parts in zip(*items))
