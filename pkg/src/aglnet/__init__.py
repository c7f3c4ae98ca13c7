"""Cue-guided camouflaged object detection: cue label generation,
model, losses, evaluation metrics, and a training/inference pipeline."""

__version__ = "0.1.0"
