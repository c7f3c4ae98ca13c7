"""Recalibration decoder: three feature-refiner levels that fuse the
projected backbone feature with the previous prediction and the cue
prediction through repeated split-and-merge stages."""

from dataclasses import dataclass

import torch
import torch.nn as nn

from .blocks import ConvBlock, resize_to

DEFAULT_SPLITS = (4, 3, 2)
DEFAULT_Q_EXPONENTS = (2, 1, 0)  # ordered coarse to fine: (FR_3, FR_2, FR_1)


@dataclass
class FRConfig:
    level: int
    q_exponent: int
    split_counts: tuple = DEFAULT_SPLITS
    iterations: int = 3

    def __post_init__(self):
        if any(a <= b for a, b in zip(self.split_counts, self.split_counts[1:])):
            raise ValueError(f"split counts must be strictly decreasing, got {self.split_counts}")


def aux_channel_total(n):
    """Channels added by a split&concat stage with n groups."""
    return 2 ** (n + 1)


def _tile_aux(r_prev, r_s, count):
    """Alternating (r_prev, r_s) channel stack truncated to `count`."""
    reps = (count + 1) // 2
    stack = []
    for _ in range(reps):
        stack.extend([r_prev, r_s])
    return torch.cat(stack[:count], dim=1)


class FeatureRefiner(nn.Module):
    """One decoder level walking the split-and-merge stage ledger.

    With unit = C / 2^q and group counts m = split_counts, stage j maps
    the running feature through a 1x1 conv to m_j * unit channels, splits
    it into m_j groups, and concatenates each group with tiled copies of
    (r_prev, r_s); a stage adds 2^(m_j + 1) auxiliary channels in total,
    spread as evenly as possible over the groups (the leading
    2^(m_j+1) mod m_j groups receive one extra channel). The backbone
    feature enters through a 1x1 projection to m_0 * C channels; when the
    ledger is traversed more than once, a shared 1x1 conv re-expands the
    final stage output back to m_0 * C between iterations. The prediction
    head is a plain 1x1 conv on the final stage output.
    """

    def __init__(self, channels, cfg: FRConfig):
        super().__init__()
        c = channels
        q = 2 ** cfg.q_exponent
        if c % q:
            raise ValueError(f"channel width {c} not divisible by 2^{cfg.q_exponent}")
        self.cfg = cfg
        self.unit = c // q
        splits = tuple(cfg.split_counts)
        self.splits = splits

        self.entry = ConvBlock(c, splits[0] * c, 1)
        convs = []
        in_ch = splits[0] * c
        for m in splits:
            convs.append(ConvBlock(in_ch, m * self.unit, 1))
            in_ch = m * self.unit + aux_channel_total(m)
        self.stage_convs = nn.ModuleList(convs)
        self.reexpand = ConvBlock(in_ch, splits[0] * c, 1)
        self.head = nn.Conv2d(in_ch, 1, 1)

    def _stage(self, x, conv, m, r_prev, r_s):
        x = conv(x)
        groups = torch.split(x, self.unit, dim=1)
        total = aux_channel_total(m)
        base, extra = divmod(total, m)
        pieces = []
        for k in range(m):
            pieces.append(groups[k])
            pieces.append(_tile_aux(r_prev, r_s, base + (1 if k < extra else 0)))
        return torch.cat(pieces, dim=1)

    def forward(self, feat, r_prev, r_s):
        size = feat.shape[-2:]
        r_prev = resize_to(r_prev, size)
        r_s = resize_to(r_s, size)
        x = self.entry(feat)
        for it in range(self.cfg.iterations):
            if it > 0:
                x = self.reexpand(x)
            for conv, m in zip(self.stage_convs, self.splits):
                x = self._stage(x, conv, m, r_prev, r_s)
        return self.head(x)


class RD(nn.Module):
    """Three feature refiners threading predictions coarse to fine."""

    def __init__(
        self,
        channels,
        q_exponents=DEFAULT_Q_EXPONENTS,
        split_counts=DEFAULT_SPLITS,
        iterations=3,
    ):
        super().__init__()
        if len(q_exponents) != 3:
            raise ValueError("need one q exponent per level (coarse to fine)")
        self.refiners = nn.ModuleList(
            FeatureRefiner(
                channels,
                FRConfig(level=level, q_exponent=qe, split_counts=tuple(split_counts), iterations=iterations),
            )
            for level, qe in zip((3, 2, 1), q_exponents)
        )

    def forward(self, pyramid, r4, r_s):
        x1, x2, x3 = pyramid
        r3 = self.refiners[0](x3, r4, r_s)
        r2 = self.refiners[1](x2, r3, r_s)
        r1 = self.refiners[2](x1, r2, r_s)
        return r3, r2, r1
