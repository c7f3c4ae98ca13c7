"""Multi-scale feature extractors producing stride-{8,16,32} pyramids.

Every backbone returns exactly three feature maps whose spatial sizes are
the input's divided by 8, 16, and 32. The `tiny` backbone is a small
randomly initialized stack of strided conv blocks so the full test and
training stack runs without pretrained weights; torchvision backbones can
be swapped in behind the same contract.
"""

import torch
import torch.nn as nn

from .blocks import ConvBlock

BACKBONES = ("tiny", "efficientnet_b4", "resnet50", "res2net50")


class TinyBackbone(nn.Module):
    """Five stride-2 conv blocks; taps after blocks 3, 4, 5."""

    channels = (32, 48, 64)

    def __init__(self):
        super().__init__()
        widths = (16, 24) + self.channels
        layers = []
        in_ch = 3
        for w in widths:
            layers.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, w, 3, stride=2, padding=1, bias=False),
                    nn.BatchNorm2d(w),
                    nn.ReLU(inplace=True),
                )
            )
            in_ch = w
        self.stages = nn.ModuleList(layers)

    def forward(self, x):
        feats = []
        for i, stage in enumerate(self.stages):
            x = stage(x)
            if i >= 2:
                feats.append(x)
        return feats


class TorchvisionBackbone(nn.Module):
    """ResNet-50 or EfficientNet-B4 wrapper exposing the top three stages."""

    def __init__(self, name, weights_path=None):
        super().__init__()
        import torchvision.models as tvm

        if name == "resnet50":
            net = tvm.resnet50(weights=None)
            self.stem = nn.Sequential(net.conv1, net.bn1, net.relu, net.maxpool, net.layer1)
            self.stages = nn.ModuleList([net.layer2, net.layer3, net.layer4])
            self.channels = (512, 1024, 2048)
        elif name == "efficientnet_b4":
            net = tvm.efficientnet_b4(weights=None)
            f = net.features
            self.stem = nn.Sequential(f[0], f[1], f[2])
            # stage taps at strides 8 / 16 / 32 of the feature ladder
            self.stages = nn.ModuleList(
                [nn.Sequential(f[3]), nn.Sequential(f[4], f[5]), nn.Sequential(f[6], f[7])]
            )
            self.channels = (56, 160, 448)
        else:
            raise ValueError(f"unsupported torchvision backbone {name!r}")
        if weights_path:
            state = torch.load(weights_path, map_location="cpu")
            net.load_state_dict(state)

    def forward(self, x):
        x = self.stem(x)
        feats = []
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        return feats


def build_backbone(backbone_id, weights_path=None):
    if backbone_id == "tiny":
        return TinyBackbone()
    if backbone_id in ("resnet50", "efficientnet_b4"):
        return TorchvisionBackbone(backbone_id, weights_path)
    if backbone_id == "res2net50":
        raise ValueError(
            "res2net50 requires the timm package with pretrained weights; "
            "install timm and register it, or use tiny/resnet50/efficientnet_b4"
        )
    raise ValueError(f"unknown backbone {backbone_id!r}; expected one of {BACKBONES}")


def extract(backbone, image):
    """Run the backbone and validate the stride-{8,16,32} pyramid contract."""
    h, w = image.shape[-2:]
    if h % 32 or w % 32:
        raise ValueError(f"input size {h}x{w} must be divisible by 32")
    feats = backbone(image)
    for feat, k in zip(feats, (8, 16, 32)):
        if feat.shape[-2:] != (h // k, w // k):
            raise RuntimeError(
                f"backbone produced {tuple(feat.shape[-2:])} at stride {k}, "
                f"expected {(h // k, w // k)}"
            )
    return feats


class PyramidProjection(nn.Module):
    """1x1 conv blocks aligning all pyramid levels to a common width C."""

    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.projs = nn.ModuleList(ConvBlock(c, out_channels, 1) for c in in_channels)

    def forward(self, feats):
        return [proj(f) for proj, f in zip(self.projs, feats)]
