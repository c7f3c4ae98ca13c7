"""Additional information generation: learns the cue feature A and the
cue prediction r_s directly from the RGB image."""

import torch.nn as nn

from .blocks import ConvBlock, downsample, upsample


class AIG(nn.Module):
    """Three (avgpool stride-2 -> conv) stages followed by a 1x1 head.

    The cue feature A has shape (B, C, H/8, W/8); the head emits the
    single-channel cue prediction r_s at the same resolution. r_s is a
    plain linear output, supervised by MSE after upsampling to full size.
    """

    def __init__(self, channels=64):
        super().__init__()
        widths = (channels, channels, channels)
        stages = []
        in_ch = 3
        for w in widths:
            stages.append(nn.Sequential(nn.AvgPool2d(2), ConvBlock(in_ch, w, 3)))
            in_ch = w
        self.stages = nn.Sequential(*stages)
        self.head = nn.Conv2d(channels, 1, 1)

    def forward(self, image):
        h, w = image.shape[-2:]
        if h % 8 or w % 8:
            raise ValueError(f"input size {h}x{w} must be divisible by 8")
        feat = self.stages(image)
        return feat, self.head(feat)


def resample_cue(x, factor, down=False):
    """Bilinear x2/x4 resampling of a cue feature or prediction."""
    if factor not in (2, 4):
        raise ValueError(f"factor must be 2 or 4, got {factor}")
    return downsample(x, factor) if down else upsample(x, factor)
