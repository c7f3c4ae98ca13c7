"""Hierarchical feature combination.

Multi-kernel enhancement of each pyramid level, a multiplicative
top-down cascade, integration of the learned cue feature into a single
combined map S, and dual-branch decoupling of S into three cue-guided
feature groups with the initial prediction r_4.
"""

import torch
import torch.nn as nn

from .blocks import ConvBlock, downsample, upsample


class MFCBlock(nn.Module):
    """1x1 conv -> parallel 5x5 and 7x7 convs, summed -> 3x3 conv."""

    def __init__(self, channels):
        super().__init__()
        self.entry = ConvBlock(channels, channels, 1)
        self.branch5 = ConvBlock(channels, channels, 5)
        self.branch7 = ConvBlock(channels, channels, 7)
        self.fuse = ConvBlock(channels, channels, 3)

    def forward(self, x):
        x = self.entry(x)
        return self.fuse(self.branch5(x) + self.branch7(x))


def cascade_combine(xc):
    """Multiplicative top-down cascade over the three enhanced levels.

    xc is [level1 (stride 8), level2 (stride 16), level3 (stride 32)].
    g3 = xc3; g2 = xc2 * up2(g3); g1 = xc1 * up2(g2) * up2(xc2) * up4(g3).
    """
    x1, x2, x3 = xc
    g3 = x3
    g2 = x2 * upsample(g3, 2)
    g1 = x1 * upsample(g2, 2) * upsample(x2, 2) * upsample(g3, 4)
    return g1, g2, g3


class CueIntegration(nn.Module):
    """Fuses the cascade outputs with the cue feature A into S.

    Channel ledger: S3 -> C at stride 32, S2 -> 2C at stride 16,
    S1 -> 3C at stride 8, S -> 3C at stride 8. S3 and S2 are upsampled
    x2 before entering the next finer concatenation.
    """

    def __init__(self, channels):
        super().__init__()
        c = channels
        self.conv3 = ConvBlock(2 * c, c, 3)
        self.conv2 = ConvBlock(3 * c, 2 * c, 3)
        self.conv1 = ConvBlock(4 * c, 3 * c, 3)
        self.out = ConvBlock(3 * c, 3 * c, 3)

    def forward(self, g, cue_feat):
        g1, g2, g3 = g
        s3 = self.conv3(torch.cat([downsample(cue_feat, 4), g3], dim=1))
        s2 = self.conv2(torch.cat([downsample(cue_feat, 2), g2, upsample(s3, 2)], dim=1))
        s1 = self.conv1(torch.cat([cue_feat, g1, upsample(s2, 2)], dim=1))
        s = self.out(s1)
        return s, (s3, s2, s1)


class Decoupler(nn.Module):
    """Dual-branch decoupling of S into three cue-guided groups.

    Branch 1 splits S into three C-wide groups, each 3x3-convolved and
    scaled by its slice of the channel weight vector. Branch 2 derives
    that weight vector from a global average pool of S through two 1x1
    convs with a softmax over the full 3C channel axis. Each scaled group
    is concatenated with the cue feature and fused; the initial prediction
    r_4 is a 1x1 conv over the three fused groups (no activation).
    """

    def __init__(self, channels):
        super().__init__()
        c = channels
        self.group_convs = nn.ModuleList(ConvBlock(c, c, 3) for _ in range(3))
        self.fuse_convs = nn.ModuleList(ConvBlock(2 * c, c, 3) for _ in range(3))
        self.weight_net = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(3 * c, 3 * c, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(3 * c, 3 * c, 1),
        )
        self.head = nn.Conv2d(3 * c, 1, 1)
        self.channels = c

    def forward(self, s, cue_feat):
        c = self.channels
        if s.shape[1] != 3 * c:
            raise ValueError(f"expected {3 * c} channels, got {s.shape[1]}")
        w = torch.softmax(self.weight_net(s), dim=1)
        groups = torch.split(s, c, dim=1)
        weights = torch.split(w, c, dim=1)
        decoupled = []
        for i in range(3):
            scaled = weights[i] * self.group_convs[i](groups[i])
            decoupled.append(self.fuse_convs[i](torch.cat([scaled, cue_feat], dim=1)))
        r4 = self.head(torch.cat(decoupled, dim=1))
        return decoupled, w, r4


class HFC(nn.Module):
    """Full combination + decoupling stack with ablation switches.

    With combination disabled, the projected pyramid is fused by a plain
    top-down conv chain into a 3C-wide map standing in for S. With
    decoupling disabled, r_4 comes from a 1x1 head on S directly.
    """

    def __init__(self, channels, combination=True, decoupling=True):
        super().__init__()
        c = channels
        self.combination = combination
        self.decoupling = decoupling
        if combination:
            self.mfc = nn.ModuleList(MFCBlock(c) for _ in range(3))
            self.integrate = CueIntegration(c)
        else:
            self.td3 = ConvBlock(c, c, 3)
            self.td2 = ConvBlock(2 * c, c, 3)
            self.td1 = ConvBlock(2 * c, 3 * c, 3)
            self.td_out = ConvBlock(3 * c + c, 3 * c, 3)
        if decoupling:
            self.decouple = Decoupler(c)
        else:
            self.plain_head = nn.Conv2d(3 * c, 1, 1)

    def forward(self, pyramid, cue_feat):
        if self.combination:
            xc = [blk(x) for blk, x in zip(self.mfc, pyramid)]
            g = cascade_combine(xc)
            s, _ = self.integrate(g, cue_feat)
        else:
            x1, x2, x3 = pyramid
            t3 = self.td3(x3)
            t2 = self.td2(torch.cat([x2, upsample(t3, 2)], dim=1))
            t1 = self.td1(torch.cat([x1, upsample(t2, 2)], dim=1))
            s = self.td_out(torch.cat([t1, cue_feat], dim=1))
        if self.decoupling:
            _, _, r4 = self.decouple(s, cue_feat)
        else:
            r4 = self.plain_head(s)
        return s, r4
