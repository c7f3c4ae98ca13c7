"""Full network assembly with per-component ablation switches."""

import torch
import torch.nn as nn

from .aig import AIG
from .backbone import PyramidProjection, build_backbone, extract
from .hfc import HFC
from .rd import DEFAULT_Q_EXPONENTS, DEFAULT_SPLITS, RD


class AGLNet(nn.Module):
    """Backbone + AIG + HFC + RD producing r_s and r_4..r_1 logits.

    Ablation switches mirror the model's five components: with `use_aig`
    off, the cue feature and cue prediction are zero tensors and the cue
    loss term should be skipped; with `use_rd` off, the HFC prediction
    r_4 is reused as r_3/r_2/r_1 so downstream supervision and inference
    keep working unchanged.
    """

    def __init__(
        self,
        backbone_id="tiny",
        channels=64,
        use_combination=True,
        use_decoupling=True,
        use_rd=True,
        use_aig=True,
        rd_iterations=3,
        rd_split_counts=DEFAULT_SPLITS,
        rd_q_exponents=DEFAULT_Q_EXPONENTS,
        backbone_weights=None,
        freeze_backbone=False,
    ):
        super().__init__()
        self.backbone = build_backbone(backbone_id, backbone_weights)
        if freeze_backbone:
            for p in self.backbone.parameters():
                p.requires_grad_(False)
        self.project = PyramidProjection(self.backbone.channels, channels)
        self.channels = channels
        self.use_aig = use_aig
        self.use_rd = use_rd
        if use_aig:
            self.aig = AIG(channels)
        self.hfc = HFC(channels, combination=use_combination, decoupling=use_decoupling)
        if use_rd:
            self.rd = RD(
                channels,
                q_exponents=rd_q_exponents,
                split_counts=rd_split_counts,
                iterations=rd_iterations,
            )

    def forward(self, image):
        feats = extract(self.backbone, image)
        pyramid = self.project(feats)
        if self.use_aig:
            cue_feat, r_s = self.aig(image)
        else:
            b = image.shape[0]
            h, w = image.shape[-2:]
            cue_feat = image.new_zeros(b, self.channels, h // 8, w // 8)
            r_s = image.new_zeros(b, 1, h // 8, w // 8)
        _, r4 = self.hfc(pyramid, cue_feat)
        if self.use_rd:
            r3, r2, r1 = self.rd(pyramid, r4, r_s)
        else:
            r3 = r2 = r1 = r4
        return {"r_s": r_s, "r_4": r4, "r_3": r3, "r_2": r2, "r_1": r1}

    @torch.no_grad()
    def predict(self, image):
        """Sigmoid of the finest prediction, upsampled to input size."""
        out = self.forward(image)
        from .blocks import resize_to

        return torch.sigmoid(resize_to(out["r_1"], image.shape[-2:]))
