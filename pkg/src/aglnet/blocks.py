"""Shared building blocks: conv-bn-relu units and bilinear resampling."""

import torch.nn as nn
import torch.nn.functional as F


class ConvBlock(nn.Module):
    """Conv2d + BatchNorm + ReLU with same-padding."""

    def __init__(self, in_ch, out_ch, kernel_size=3):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, kernel_size, padding=kernel_size // 2, bias=False)
        self.bn = nn.BatchNorm2d(out_ch)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.relu(self.bn(self.conv(x)))


def upsample(x, factor):
    """t-times bilinear upsampling."""
    return F.interpolate(x, scale_factor=float(factor), mode="bilinear", align_corners=False)


def downsample(x, factor):
    """t-times bilinear downsampling; spatial size must be divisible."""
    h, w = x.shape[-2:]
    if h % factor or w % factor:
        raise ValueError(f"spatial size {h}x{w} not divisible by downsample factor {factor}")
    return F.interpolate(x, size=(h // factor, w // factor), mode="bilinear", align_corners=False)


def resize_to(x, size):
    """Bilinear resample to an explicit (h, w)."""
    if x.shape[-2:] == tuple(size):
        return x
    return F.interpolate(x, size=tuple(size), mode="bilinear", align_corners=False)
