"""Generation of the four auxiliary ground-truth cue maps.

All functions operate on single images: masks are 2-D {0,1} arrays, images
are (H, W, 3) float arrays in [0, 1]. Outputs are CueMap records whose data
lies in [0, 1]; boundary and canny maps are strictly binary.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

CUE_KINDS = ("boundary", "texture", "canny", "frequency")

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class CueMap:
    data: np.ndarray
    kind: str
    source: str  # "mask-derived" or "image-derived"


def _check_binary_mask(mask):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must contain only 0 and 1")
    return mask.astype(bool)


def _check_image(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"image must be (H, W, 3), got shape {image.shape}")
    return image


def to_grayscale(image):
    """Luma conversion with 0.299/0.587/0.114 channel weights."""
    image = _check_image(image)
    r, g, b = LUMA_WEIGHTS
    return r * image[..., 0] + g * image[..., 1] + b * image[..., 2]


def boundary_from_mask(mask, thickness=1):
    """Binary band of the given total width along the mask's fg/bg transition.

    A band of width ``thickness`` is taken as dilate(mask, thickness // 2)
    XOR erode(mask, (thickness + 1) // 2), so odd widths sit on the
    foreground side (a 10x10 square with thickness 1 yields its 36-pixel
    inner ring) and even widths straddle the transition symmetrically.
    Image-border pixels of a full-foreground mask are not boundary.
    """
    m = _check_binary_mask(mask)
    if thickness < 1:
        raise ValueError("thickness must be >= 1")
    grow = thickness // 2
    shrink = (thickness + 1) // 2
    hi = ndimage.binary_dilation(m, iterations=grow) if grow else m
    lo = ndimage.binary_erosion(m, iterations=shrink, border_value=1)
    band = np.logical_xor(hi, lo)
    return CueMap(band.astype(np.float64), "boundary", "mask-derived")


def canny_edges(image, low=0.1, high=0.3, sigma=1.4):
    """Standard Canny pipeline on a grayscale view of an RGB image.

    Gaussian smoothing, Sobel gradients, 4-direction non-maximum
    suppression, and hysteresis with thresholds given as fractions of the
    maximum gradient magnitude. Returns a binary (H, W) array.
    """
    if not (0 < low < high):
        raise ValueError(f"thresholds must satisfy 0 < low < high, got {low}, {high}")
    gray = to_grayscale(image)
    smoothed = ndimage.gaussian_filter(gray, sigma=sigma)
    gx = ndimage.sobel(smoothed, axis=1)
    gy = ndimage.sobel(smoothed, axis=0)
    mag = np.hypot(gx, gy)
    if mag.max() == 0:
        return np.zeros_like(gray)

    # Quantize gradient direction into 4 bins and suppress non-maxima.
    # Ties are broken by requiring strict inequality against the neighbor in
    # the negative direction so a symmetric step edge keeps a single column.
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    padded = np.pad(mag, 1)
    offsets = {
        0: ((0, 1), (0, -1)),    # horizontal gradient -> compare left/right
        1: ((-1, 1), (1, -1)),   # 45 degrees
        2: ((-1, 0), (1, 0)),    # vertical gradient -> compare up/down
        3: ((-1, -1), (1, 1)),   # 135 degrees
    }
    bins = np.floor(((angle + 22.5) % 180.0) / 45.0).astype(int) % 4
    for b, ((dy1, dx1), (dy2, dx2)) in offsets.items():
        sel = bins == b
        n1 = padded[1 + dy1 : 1 + dy1 + h, 1 + dx1 : 1 + dx1 + w]
        n2 = padded[1 + dy2 : 1 + dy2 + h, 1 + dx2 : 1 + dx2 + w]
        keep |= sel & (mag >= n1) & (mag > n2)

    strong = keep & (mag >= high * mag.max())
    weak = keep & (mag >= low * mag.max())
    labels, n = ndimage.label(weak, structure=np.ones((3, 3)))
    if n == 0:
        return np.zeros_like(gray)
    keep_labels = np.unique(labels[strong])
    keep_labels = keep_labels[keep_labels > 0]
    edges = np.isin(labels, keep_labels)
    return edges.astype(np.float64)


def canny_label(image, mask, low=0.1, high=0.3, sigma=1.4):
    """Canny edge map of the image restricted to the GT object region."""
    m = _check_binary_mask(mask)
    edges = canny_edges(image, low=low, high=high, sigma=sigma)
    if edges.shape != m.shape:
        raise ValueError(f"image/mask shape mismatch: {edges.shape} vs {m.shape}")
    return CueMap(edges * m, "canny", "image-derived")


def texture_label(mask, image, low=0.1, high=0.3, sigma=1.4):
    """Object texture map: 1-pixel GT contour plus masked Canny edges.

    The sum is clamped to [0, 1] where the two terms overlap.
    """
    m = _check_binary_mask(mask)
    image = _check_image(image)
    if image.shape[:2] != m.shape:
        raise ValueError(f"image/mask shape mismatch: {image.shape[:2]} vs {m.shape}")
    contour = boundary_from_mask(m.astype(np.uint8), thickness=1).data
    masked_edges = canny_label(image, m.astype(np.uint8), low=low, high=high, sigma=sigma).data
    tex = np.clip(contour + masked_edges, 0.0, 1.0)
    return CueMap(tex, "texture", "mask-derived")


def block_dct2(image, block_size=8):
    """Blockwise orthonormal 2-D DCT-II per channel.

    Returns an array of shape (H // bs, W // bs, bs, bs, C) holding the
    coefficients of each block.
    """
    image = _check_image(image)
    h, w, c = image.shape
    bs = block_size
    if h % bs or w % bs:
        raise ValueError(f"image size {h}x{w} not divisible by block size {bs}")
    blocks = image.reshape(h // bs, bs, w // bs, bs, c).transpose(0, 2, 1, 3, 4)
    return dctn(blocks, type=2, norm="ortho", axes=(2, 3))


def block_idct2(coeffs):
    """Inverse of block_dct2; returns the (H, W, C) image."""
    blocks = idctn(coeffs, type=2, norm="ortho", axes=(2, 3))
    nby, nbx, bs, _, c = blocks.shape
    return blocks.transpose(0, 2, 1, 3, 4).reshape(nby * bs, nbx * bs, c)


def frequency_label(image, block_size=8, pad=False):
    """Frequency cue: per-block energy of the non-DC DCT coefficients.

    Each pixel receives the L2 norm of the non-DC coefficients of its 8x8
    block (over all channels), and the map is min-max normalized per image.
    If ``pad`` is set, images are edge-padded to a block multiple and the
    map cropped back; otherwise indivisible sizes raise.
    """
    image = _check_image(image)
    h, w, _ = image.shape
    bs = block_size
    if h % bs or w % bs:
        if not pad:
            raise ValueError(
                f"image size {h}x{w} not divisible by block size {bs} (set pad=True)"
            )
        ph, pw = (-h) % bs, (-w) % bs
        image = np.pad(image, ((0, ph), (0, pw), (0, 0)), mode="edge")
    coeffs = block_dct2(image, block_size=bs)
    energy = np.square(coeffs).sum(axis=-1)
    energy[:, :, 0, 0] = 0.0
    block_norm = np.sqrt(energy.sum(axis=(2, 3)))
    fmap = np.kron(block_norm, np.ones((bs, bs)))[:h, :w]
    lo, hi = fmap.min(), fmap.max()
    if hi > lo:
        fmap = (fmap - lo) / (hi - lo)
    else:
        fmap = np.zeros_like(fmap)
    return CueMap(fmap, "frequency", "image-derived")


def generate_cue(kind, image, mask, **kwargs):
    """Dispatch to the cue recipe named by ``kind``."""
    if kind == "boundary":
        return boundary_from_mask(mask, **kwargs)
    if kind == "texture":
        return texture_label(mask, image, **kwargs)
    if kind == "canny":
        return canny_label(image, mask, **kwargs)
    if kind == "frequency":
        return frequency_label(image, **kwargs)
    raise ValueError(f"unknown cue kind {kind!r}; expected one of {CUE_KINDS}")
